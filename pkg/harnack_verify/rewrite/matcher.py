"""Pattern matching of factor templates against terms.

A pattern is a product of factors whose indices are variables. Matching assigns
pattern factors to distinct factors of the term (up to the target factor's slot
symmetries) so that every variable binds to exactly one actual index; distinct
variables may bind to the same actual index. A single-factor pattern may also
match a factor carrying extra outer derivatives, which are then re-applied to
the replacement.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from harnack_verify.tensor.canonical import symmetry_images
from harnack_verify.tensor.expr import (
    Factor,
    FactorLike,
    Index,
    TensorExpr,
    Term,
    check_term,
    fresh_indices,
    index_counts,
)
from harnack_verify.tensor.parser import grad_factors
from harnack_verify.tensor.symbols import FRAME, LABEL


@dataclass(frozen=True)
class Match:
    """One way a rule applies to a term.

    Attributes:
        positions: Factor positions in the term, in pattern order.
        binding: Pattern variable to actual index.
        sign: Product of the signs of the symmetry images used.
        outer: Extra outer derivative prefixes of a lifted match.
        extra: Rule-specific data (alternative number, contraction slots, ...).
    """

    positions: Tuple[int, ...]
    binding: Tuple[Tuple[Index, Index], ...] = ()
    sign: int = 1
    outer: Tuple[Index, ...] = ()
    extra: Any = field(default=None, compare=False)

    @property
    def mapping(self) -> Dict[Index, Index]:
        return dict(self.binding)


def _bind(variables: Sequence[Index], actuals: Sequence[Index], binding: Dict[Index, Index]) -> bool:
    for var, actual in zip(variables, actuals):
        if var.kind != actual.kind:
            return False
        if binding.setdefault(var, actual) != actual:
            return False
    return True


def match_pattern(term: Term, pattern: Sequence[Factor], lift: bool = False) -> Iterator[Match]:
    """Yields every match of ``pattern`` in ``term``, identity images first.

    Args:
        term: The term to search.
        pattern: Pattern factors (plain factors with variable indices).
        lift: Allow a single-factor pattern to match under extra outer derivatives.
    """
    lift = lift and len(pattern) == 1

    def search(i: int, used: Tuple[int, ...], binding: Dict[Index, Index], sign: int, outer):
        if i == len(pattern):
            yield Match(used, tuple(binding.items()), sign, outer)
            return
        wanted = pattern[i]
        for pos, factor in enumerate(term.factors):
            if pos in used or not isinstance(factor, Factor):
                continue
            if factor.symbol != wanted.symbol or factor.heat != wanted.heat:
                continue
            extra = len(factor.derivs) - len(wanted.derivs)
            if extra < 0 or (extra > 0 and not lift):
                continue
            for image, image_sign in symmetry_images(factor):
                trial = dict(binding)
                if not _bind(wanted.derivs, image.derivs[extra:], trial):
                    continue
                if not _bind(wanted.slots, image.slots, trial):
                    continue
                yield from search(i + 1, used + (pos,), trial, sign * image_sign, image.derivs[:extra])

    seen = set()
    for match in search(0, (), {}, 1, ()):
        key = (match.positions, match.binding, match.outer)
        if key not in seen:
            seen.add(key)
            yield match


def instantiate(replacement: TensorExpr, term: Term, match: Match) -> List[Term]:
    """Splices ``replacement`` into ``term`` in place of the matched factors.

    Replacement-only indices are renamed apart from every index in the term and
    lifted outer derivatives are re-applied to each replacement term.
    """
    binding = match.mapping
    rest = tuple(f for k, f in enumerate(term.factors) if k not in match.positions)
    avoid: Set[str] = term.names | {i.name for i in binding.values()}
    results = []
    for piece in replacement.terms:
        mapping: Dict[Index, Index] = {}
        generators = {FRAME: fresh_indices(FRAME, avoid), LABEL: fresh_indices(LABEL, avoid)}
        for index in sorted(index_counts(piece.factors)):
            mapping[index] = binding[index] if index in binding else next(generators[index.kind])
        factors: Tuple[FactorLike, ...] = tuple(f.rename(mapping) for f in piece.factors)
        dropped = False
        for derivative in reversed(match.outer):
            lifted = grad_factors(factors, derivative)
            if lifted is None:
                dropped = True
                break
            factors = lifted
        if dropped:
            continue
        coeff = term.coeff * match.sign * piece.coeff
        results.append(check_term(Term(Fraction(coeff), rest + factors, term.t_power + piece.t_power)))
    return results


def slot_positions(factor: Factor, index: Index) -> List[int]:
    """Symbol-slot positions (not derivative slots) where ``index`` occurs."""
    return [k for k, i in enumerate(factor.slots) if i == index]


def antisymmetric_pair(factor: FactorLike, first: int, second: int) -> bool:
    """True iff swapping symbol slots ``first`` and ``second`` of ``factor`` flips its sign."""
    if not isinstance(factor, Factor) or first == second:
        return False
    swap = list(range(factor.decl.arity))
    swap[first], swap[second] = swap[second], swap[first]
    return (tuple(swap), -1) in factor.decl.elements


def contraction_partner(term: Term, skip: Sequence[int], x: Index, y: Index):
    """Finds the factor outside ``skip`` holding both ``x`` and ``y`` in symbol slots.

    Returns:
        ``(position, slot_of_x, slot_of_y)`` or None.
    """
    for pos, factor in enumerate(term.factors):
        if pos in skip or not isinstance(factor, Factor):
            continue
        xs, ys = slot_positions(factor, x), slot_positions(factor, y)
        if len(xs) == 1 and len(ys) == 1:
            return pos, xs[0], ys[0]
    return None


__all__ = [
    "Match",
    "antisymmetric_pair",
    "contraction_partner",
    "instantiate",
    "match_pattern",
    "slot_positions",
]
