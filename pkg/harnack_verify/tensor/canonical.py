"""Canonical forms for tensor expressions.

Two terms denote the same tensor when one turns into the other by renaming
frame dummies, reordering factors and applying the signed slot symmetries of the
symbols. ``canonicalize`` picks, for every term, the lexicographically smallest
encoding reachable that way: factors are placed in signature order and every
slot is encoded by the free index name, by the order in which its frame dummy
first appears, or by the sorted rank of its summed label. The search keeps every
partial placement that ties on the smallest prefix, so a term that maps to minus
itself ends with both signs among the survivors and is dropped as zero.

Summed labels keep their relative order, so a label swap is never absorbed
here. Cancellation of label-swapped terms is left to the SYM-ANTISYM-ZERO rule.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import islice
from typing import Dict, FrozenSet, List, Optional, Tuple

from harnack_verify.errors import FreeIndexMismatchError
from harnack_verify.tensor.expr import (
    Factor,
    FactorLike,
    Index,
    OpProduct,
    TensorExpr,
    Term,
    fresh_indices,
    index_counts,
)
from harnack_verify.tensor.symbols import FRAME, LABEL

logger = logging.getLogger(__name__)


def symmetry_images(factor: FactorLike) -> List[Tuple[FactorLike, int]]:
    """All signed images of a factor under its slot symmetry group, identity first.

    Derivative slots are never permuted, except that the second derivative of a
    scalar is symmetric. Unexpanded operator products are opaque.
    """
    if isinstance(factor, OpProduct):
        return [(factor, 1)]
    images: List[Tuple[FactorLike, int]] = []
    for perm, sign in factor.decl.elements:
        slots = tuple(factor.slots[p] for p in perm)
        images.append((Factor(factor.symbol, slots, factor.derivs, factor.heat), sign))
    if factor.decl.arity == 0 and len(factor.derivs) == 2 and not factor.heat:
        swapped = (factor.derivs[1], factor.derivs[0])
        images.append((Factor(factor.symbol, (), swapped, False), 1))
    return images


@dataclass(frozen=True)
class _State:
    remaining: FrozenSet[int]
    dummies: Tuple[Tuple[Index, int], ...]
    sign: int
    path: Tuple[Tuple[int, int], ...]


def _encode(
    image: FactorLike, free: FrozenSet[Index], ranks: Dict[Index, int], numbering: Dict[Index, int]
):
    keys = []
    for index in image.indices:
        if index in free:
            keys.append((0, index.kind, index.name))
            continue
        if index in ranks:
            keys.append((1, LABEL, ranks[index]))
            continue
        if index not in numbering:
            numbering[index] = len(numbering)
        keys.append((1, index.kind, numbering[index]))
    return image.signature, tuple(keys)


@lru_cache(maxsize=1 << 16)
def canonical_product(factors: Tuple[FactorLike, ...]) -> Optional[Tuple[int, Tuple[FactorLike, ...]]]:
    """Canonical ordering and naming of a product of factors.

    Returns:
        ``(sign, factors)`` with the product equal to ``sign`` times the canonical
        factors, or None if the product vanishes by antisymmetry.
    """
    counts = index_counts(factors)
    free = frozenset(i for i, c in counts.items() if c == 1)
    summed_labels = sorted(i for i, c in counts.items() if c == 2 and i.kind == LABEL)
    ranks = {label: n for n, label in enumerate(summed_labels)}
    images = [symmetry_images(f) for f in factors]
    signatures = [f.signature for f in factors]

    states = [_State(frozenset(range(len(factors))), (), 1, ())]
    for _ in range(len(factors)):
        target = min(signatures[j] for j in states[0].remaining)
        best = None
        survivors: List[_State] = []
        seen = set()
        for state in states:
            for j in sorted(state.remaining):
                if signatures[j] != target:
                    continue
                for k, (image, sign) in enumerate(images[j]):
                    numbering = dict(state.dummies)
                    word = _encode(image, free, ranks, numbering)
                    if best is not None and word > best:
                        continue
                    if best is None or word < best:
                        best, survivors, seen = word, [], set()
                    key = (state.remaining - {j}, frozenset(numbering.items()), state.sign * sign)
                    if key in seen:
                        continue
                    seen.add(key)
                    survivors.append(
                        _State(key[0], tuple(numbering.items()), key[2], state.path + ((j, k),))
                    )
        states = survivors

    if len({s.sign for s in states}) > 1:
        return None
    chosen = states[0]
    avoid = {i.name for i in free}
    names = {FRAME: fresh_indices(FRAME, set(avoid)), LABEL: fresh_indices(LABEL, set(avoid))}
    numbering = dict(chosen.dummies)
    frames = list(islice(names[FRAME], len(numbering)))
    labels = sorted(islice(names[LABEL], len(ranks)))
    mapping = {index: frames[n] for index, n in numbering.items()}
    mapping.update((index, labels[n]) for index, n in ranks.items())
    placed = tuple(images[j][k][0].rename(mapping) for j, k in chosen.path)
    return chosen.sign, placed


def _term_key(term: Term):
    return (
        tuple((f.signature, tuple((i.kind, i.name) for i in f.indices)) for f in term.factors),
        term.t_power,
    )


def canonicalize(expr: TensorExpr) -> TensorExpr:
    """Returns the canonical form of ``expr``.

    Every term is brought to canonical factor order and dummy naming, like terms
    are merged, zero coefficients dropped and terms sorted. The result is
    idempotent and independent of factor order, frame dummy names and any
    order-preserving renaming of summed labels.
    """
    totals: Dict[Tuple[int, Tuple[FactorLike, ...]], Fraction] = defaultdict(Fraction)
    for term in expr.terms:
        result = canonical_product(term.factors)
        if result is None:
            continue
        sign, factors = result
        totals[(term.t_power, factors)] += sign * term.coeff
    terms = [Term(c, factors, power) for (power, factors), c in totals.items() if c != 0]
    terms.sort(key=_term_key)
    return TensorExpr.from_terms(terms, expr.free)


def difference(lhs: TensorExpr, rhs: TensorExpr) -> TensorExpr:
    """Canonical form of ``lhs - rhs``.

    Raises:
        FreeIndexMismatchError: If the free indices differ.
    """
    if lhs.free != rhs.free and not (lhs.is_zero or rhs.is_zero):
        raise FreeIndexMismatchError(
            f"Free indices differ: {sorted(i.name for i in lhs.free)} vs "
            f"{sorted(i.name for i in rhs.free)}"
        )
    combined = TensorExpr(lhs.terms + tuple(t.scaled(Fraction(-1)) for t in rhs.terms), lhs.free or rhs.free)
    return canonicalize(combined)


def equal_canonical(lhs: TensorExpr, rhs: TensorExpr) -> bool:
    """True iff ``canonicalize(lhs - rhs)`` is zero."""
    residual = difference(lhs, rhs)
    logger.debug("Canonical residual has %d term(s)", len(residual.terms))
    return residual.is_zero


__all__ = ["canonical_product", "canonicalize", "difference", "equal_canonical", "symmetry_images"]
