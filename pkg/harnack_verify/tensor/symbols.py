"""Symbol catalog: every tensor name the derivation DSL understands.

Each symbol declares how many label slots and frame slots it carries and the
signed permutation group of its slots. Groups are generated with
``sympy.combinatorics`` using the usual trick for signed symmetries: a
permutation of ``k`` slots acts on ``k + 2`` points, and the last two points are
swapped exactly when the permutation carries a minus sign.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

from sympy.combinatorics import Permutation, PermutationGroup

from harnack_verify.errors import UnknownSymbolError

# (slot permutation, sign); new_slots[i] = slots[perm[i]] and X[new] = sign * X[old]
SignedPerm = Tuple[Tuple[int, ...], int]

FRAME = "frame"
LABEL = "label"


@dataclass(frozen=True)
class SymbolDecl:
    """Declaration of one tensor symbol.

    Attributes:
        name: DSL name, e.g. ``R`` or ``Y``.
        frame_arity: Number of frame (orthonormal-frame) slots.
        label_arity: Number of label slots, written before ``;`` in the DSL.
        generators: Signed slot permutations generating the symmetry group.
        heat_ok: Whether ``heat(...)`` may be applied directly to the symbol.
        constant: Constant tensors have vanishing derivatives and heat operator.
        description: Human readable meaning.
    """

    name: str
    frame_arity: int
    label_arity: int = 0
    generators: Tuple[SignedPerm, ...] = ()
    heat_ok: bool = False
    constant: bool = False
    description: str = field(default="", compare=False)

    @property
    def arity(self) -> int:
        return self.label_arity + self.frame_arity

    def slot_kind(self, position: int) -> str:
        return LABEL if position < self.label_arity else FRAME

    @cached_property
    def elements(self) -> Tuple[SignedPerm, ...]:
        """All signed permutations of the group, identity first, in a fixed order."""
        return signed_group_elements(self.arity, self.generators)


def signed_group_elements(arity: int, generators: Tuple[SignedPerm, ...]) -> Tuple[SignedPerm, ...]:
    """Enumerates the signed permutation group generated by ``generators``.

    Args:
        arity: Number of slots.
        generators: Signed generators.

    Returns:
        Tuple of (permutation, sign) pairs, the identity first, the rest sorted.

    Raises:
        ValueError: If the generators force an element to carry both signs, which
            would make the symbol identically zero.
    """
    identity = tuple(range(arity))
    if not generators or arity < 2:
        return ((identity, 1),)

    size = arity + 2
    sympy_generators = []
    for perm, sign in generators:
        array = list(perm) + ([arity + 1, arity] if sign < 0 else [arity, arity + 1])
        sympy_generators.append(Permutation(array, size=size))

    seen: Dict[Tuple[int, ...], int] = {}
    for element in PermutationGroup(sympy_generators).generate():
        array = element.array_form
        perm = tuple(array[:arity])
        sign = -1 if array[arity] == arity + 1 else 1
        if seen.get(perm, sign) != sign:
            raise ValueError(f"Symmetry generators force slot permutation {perm} to be both signs")
        seen[perm] = sign

    rest = sorted((p, s) for p, s in seen.items() if p != identity)
    return ((identity, 1), *rest)


def _swap(arity: int, i: int, j: int) -> Tuple[int, ...]:
    perm = list(range(arity))
    perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


_CURVATURE = (
    (_swap(4, 0, 1), -1),
    (_swap(4, 2, 3), -1),
    ((2, 3, 0, 1), 1),
)
_SYMMETRIC_2 = ((_swap(2, 0, 1), 1),)


def _build_catalog() -> Dict[str, SymbolDecl]:
    decls: List[SymbolDecl] = [
        SymbolDecl("g", 2, generators=_SYMMETRIC_2, constant=True, description="Kronecker delta"),
        SymbolDecl("R", 4, generators=_CURVATURE, heat_ok=True, description="Riemann curvature"),
        SymbolDecl("Rc", 2, generators=_SYMMETRIC_2, heat_ok=True, description="Ricci tensor"),
        SymbolDecl("Scal", 0, heat_ok=True, description="Scalar curvature"),
        SymbolDecl(
            "P",
            3,
            generators=((_swap(3, 0, 1), -1),),
            heat_ok=True,
            description="P_abc = grad_a Rc_bc - grad_b Rc_ac",
        ),
        SymbolDecl("M", 2, generators=_SYMMETRIC_2, heat_ok=True, description="Harnack M tensor"),
        SymbolDecl(
            "S", 4, generators=_CURVATURE, heat_ok=True, description="Inverse curvature operator"
        ),
        SymbolDecl(
            "I", 4, generators=_CURVATURE, constant=True, description="Identity on 2-forms"
        ),
        SymbolDecl(
            "B",
            4,
            generators=(((2, 3, 0, 1), 1), ((1, 0, 3, 2), 1)),
            description="B_abcd = R_aebf R_cedf",
        ),
        SymbolDecl("U", 2, generators=((_swap(2, 0, 1), -1),), description="2-form argument"),
        SymbolDecl("W", 1, description="Vector argument"),
        SymbolDecl("V", 1, description="Vector argument"),
        SymbolDecl(
            "Y",
            2,
            label_arity=1,
            generators=(((0, 2, 1), -1),),
            description="Labeled 2-form frame family",
        ),
        SymbolDecl("X", 1, label_arity=1, description="Labeled vector frame family"),
        SymbolDecl(
            "E", 3, generators=((_swap(3, 0, 1), -1),), description="E_ija = S_ijkl P_kla"
        ),
        SymbolDecl("Z", 2, generators=_SYMMETRIC_2, description="Z_ab = M_ab - S_ijkl P_ija P_klb"),
        SymbolDecl(
            "K",
            4,
            generators=((_swap(4, 2, 3), -1),),
            description="Reaction-term tensor K_avxy",
        ),
        SymbolDecl(
            "L",
            1,
            label_arity=2,
            generators=(((1, 0, 2), -1),),
            description="Completed-square combination L_a^NM",
        ),
    ]
    return {decl.name: decl for decl in decls}


SYMBOLS: Dict[str, SymbolDecl] = _build_catalog()


def lookup(name: str, line=None, column=None) -> SymbolDecl:
    """Returns the declaration for ``name`` or raises ``UnknownSymbolError``."""
    try:
        return SYMBOLS[name]
    except KeyError:
        raise UnknownSymbolError(f"Unknown tensor symbol '{name}'", line, column) from None


__all__ = [
    "FRAME",
    "LABEL",
    "SYMBOLS",
    "SignedPerm",
    "SymbolDecl",
    "lookup",
    "signed_group_elements",
]
