"""Index-notation tensor expressions.

An expression is a finite sum of terms. A term is a rational coefficient, an
integer power of the time parameter ``t`` and a product of factors. A factor is
either a tensor symbol with its slots, covariant-derivative prefixes and an
optional heat-operator flag, or an unexpanded operator applied to a product
(``heat(F*G)`` or ``grad[v](F*G)``) that the Leibniz rules later expand.

Indices are summed over when they occur exactly twice in a term (Einstein
convention in an orthonormal frame, so upper and lower positions coincide).
Indices occurring once are free; every term of a sum carries the same free set.
"""

from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union

from harnack_verify.errors import FreeIndexMismatchError, IndexStructureError
from harnack_verify.tensor.symbols import FRAME, LABEL, SymbolDecl, lookup

_FRAME_NAMES = "ijklmnpqrsuvwxyzabcdefh"
_LABEL_NAMES = "NMQOJHGFA"


@dataclass(frozen=True, order=True)
class Index:
    """A named index of one of two classes: ``frame`` or ``label``."""

    name: str
    kind: str = FRAME

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Factor:
    """A tensor symbol with slots, derivative prefixes (outermost first) and heat flag."""

    symbol: str
    slots: Tuple[Index, ...] = ()
    derivs: Tuple[Index, ...] = ()
    heat: bool = False

    @property
    def decl(self) -> SymbolDecl:
        return lookup(self.symbol)

    @property
    def indices(self) -> Tuple[Index, ...]:
        return self.derivs + self.slots

    @property
    def signature(self) -> Tuple[str, int, bool, str]:
        return (self.symbol, len(self.derivs), self.heat, "")

    def rename(self, mapping: Dict[Index, Index]) -> "Factor":
        return Factor(
            self.symbol,
            tuple(mapping.get(i, i) for i in self.slots),
            tuple(mapping.get(i, i) for i in self.derivs),
            self.heat,
        )

    def __str__(self) -> str:
        decl = self.decl
        labels = ",".join(i.name for i in self.slots[: decl.label_arity])
        frames = ",".join(i.name for i in self.slots[decl.label_arity :])
        if decl.label_arity:
            text = f"{self.symbol}[{labels};{frames}]"
        elif decl.frame_arity:
            text = f"{self.symbol}[{frames}]"
        else:
            text = self.symbol
        if self.heat:
            text = f"heat({text})"
        for index in reversed(self.derivs):
            text = f"grad[{index.name}]({text})"
        return text


@dataclass(frozen=True)
class OpProduct:
    """An operator applied to a product that has not been expanded yet.

    Attributes:
        op: ``"heat"`` or ``"grad"``.
        index: The derivative index for ``grad``; None for ``heat``.
        body: The factors of the product.
    """

    op: str
    index: Optional[Index]
    body: Tuple["FactorLike", ...]

    @property
    def indices(self) -> Tuple[Index, ...]:
        head = (self.index,) if self.index is not None else ()
        return head + tuple(i for f in self.body for i in f.indices)

    @property
    def signature(self) -> Tuple[str, int, bool, str]:
        inner = "*".join(repr(f.signature) for f in self.body)
        return ("~" + self.op, len(self.body), False, inner)

    def rename(self, mapping: Dict[Index, Index]) -> "OpProduct":
        index = mapping.get(self.index, self.index) if self.index is not None else None
        return OpProduct(self.op, index, tuple(f.rename(mapping) for f in self.body))

    def __str__(self) -> str:
        inner = "*".join(str(f) for f in self.body)
        if self.op == "grad":
            return f"grad[{self.index}]({inner})"
        return f"heat({inner})"


FactorLike = Union[Factor, OpProduct]


def index_counts(factors: Iterable[FactorLike]) -> Counter:
    return Counter(i for f in factors for i in f.indices)


@dataclass(frozen=True)
class Term:
    """``coeff * t**t_power * product(factors)``."""

    coeff: Fraction
    factors: Tuple[FactorLike, ...] = ()
    t_power: int = 0

    @property
    def free(self) -> FrozenSet[Index]:
        return frozenset(i for i, c in index_counts(self.factors).items() if c == 1)

    @property
    def dummies(self) -> FrozenSet[Index]:
        return frozenset(i for i, c in index_counts(self.factors).items() if c == 2)

    @property
    def names(self) -> Set[str]:
        return {i.name for f in self.factors for i in f.indices}

    def scaled(self, c: Fraction) -> "Term":
        return replace(self, coeff=self.coeff * c)

    def rename(self, mapping: Dict[Index, Index]) -> "Term":
        return replace(self, factors=tuple(f.rename(mapping) for f in self.factors))

    def __str__(self) -> str:
        parts: List[str] = []
        if self.coeff != 1 or not self.factors and self.t_power == 0:
            parts.append(str(abs(self.coeff)) if self.coeff >= 0 else f"({self.coeff})")
        if self.t_power:
            parts.append(f"t^{self.t_power}")
        parts.extend(str(f) for f in self.factors)
        return "*".join(parts)


def check_term(term: Term, line: Optional[int] = None, column: Optional[int] = None) -> Term:
    """Validates the index structure of a single term.

    Raises:
        IndexStructureError: If an index occurs three or more times or one name is
            used both as a label and as a frame index.
    """
    where = f" (line {line}, column {column})" if line is not None else ""
    kinds: Dict[str, str] = {}
    for index, count in index_counts(term.factors).items():
        if count > 2:
            raise IndexStructureError(f"Index '{index.name}' appears {count} times in one term{where}")
        if kinds.setdefault(index.name, index.kind) != index.kind:
            raise IndexStructureError(
                f"Index '{index.name}' is used both as a label and a frame index{where}"
            )
    return term


def fresh_indices(kind: str, avoid: Set[str]) -> Iterator[Index]:
    """Yields indices of ``kind`` whose names are not in ``avoid`` (updated as it yields)."""
    alphabet = _LABEL_NAMES if kind == LABEL else _FRAME_NAMES
    suffix = 0
    while True:
        for ch in alphabet:
            name = ch if suffix == 0 else f"{ch}{suffix}"
            if name not in avoid:
                avoid.add(name)
                yield Index(name, kind)
        suffix += 1


def rename_apart(term: Term, avoid: Set[str], keep: FrozenSet[Index] = frozenset()) -> Term:
    """Renames dummies of ``term`` whose names clash with ``avoid``, except those in ``keep``."""
    taken = set(avoid) | term.names
    mapping: Dict[Index, Index] = {}
    generators = {FRAME: fresh_indices(FRAME, taken), LABEL: fresh_indices(LABEL, taken)}
    for index in sorted(term.dummies):
        if index.name in avoid and index not in keep:
            mapping[index] = next(generators[index.kind])
    return term.rename(mapping) if mapping else term


def multiply_terms(left: Term, right: Term) -> Term:
    """Product of two terms; dummies of ``right`` are renamed away from ``left``."""
    right = rename_apart(right, left.names)
    product = Term(
        left.coeff * right.coeff, left.factors + right.factors, left.t_power + right.t_power
    )
    return check_term(product)


@dataclass(frozen=True)
class TensorExpr:
    """A sum of terms sharing one free-index set."""

    terms: Tuple[Term, ...] = ()
    free: FrozenSet[Index] = frozenset()

    @classmethod
    def from_terms(cls, terms: Iterable[Term], free: Optional[FrozenSet[Index]] = None) -> "TensorExpr":
        """Builds an expression, dropping zero terms and checking homogeneity.

        Raises:
            FreeIndexMismatchError: If two terms carry different free indices.
        """
        kept = tuple(t for t in terms if t.coeff != 0)
        if free is None:
            free = kept[0].free if kept else frozenset()
        for term in kept:
            if term.free != free:
                raise FreeIndexMismatchError(
                    f"Term '{term}' has free indices {_names(term.free)}, expected {_names(free)}"
                )
        return cls(kept, free)

    @classmethod
    def constant(cls, value) -> "TensorExpr":
        return cls.from_terms([Term(Fraction(value))])

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "TensorExpr") -> "TensorExpr":
        free = self.free if self.terms else other.free
        return TensorExpr.from_terms(self.terms + other.terms, free)

    def __neg__(self) -> "TensorExpr":
        return TensorExpr(tuple(t.scaled(Fraction(-1)) for t in self.terms), self.free)

    def __sub__(self, other: "TensorExpr") -> "TensorExpr":
        return self + (-other)

    def __mul__(self, other: "TensorExpr") -> "TensorExpr":
        terms = [multiply_terms(a, b) for a in self.terms for b in other.terms]
        return TensorExpr.from_terms(terms)

    def scaled(self, c) -> "TensorExpr":
        return TensorExpr.from_terms((t.scaled(Fraction(c)) for t in self.terms), self.free)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for k, term in enumerate(self.terms):
            body = str(term.scaled(Fraction(-1)) if term.coeff < 0 else term)
            if k == 0:
                pieces.append(f"-{body}" if term.coeff < 0 else body)
            else:
                pieces.append(f"- {body}" if term.coeff < 0 else f"+ {body}")
        return " ".join(pieces)


def _names(indices: Iterable[Index]) -> str:
    return "{" + ", ".join(sorted(i.name for i in indices)) + "}"


def free_indices(expr: TensorExpr) -> FrozenSet[Index]:
    """Returns the free indices of ``expr``."""
    return expr.free


__all__ = [
    "Factor",
    "FactorLike",
    "Index",
    "OpProduct",
    "TensorExpr",
    "Term",
    "check_term",
    "fresh_indices",
    "free_indices",
    "index_counts",
    "multiply_terms",
    "rename_apart",
]
