"""Rewrite rules and the machinery that applies them at a selector.

Most rules are directed pattern rewrites ``pattern -> replacement`` written in
the derivation DSL. A few are structural: the Leibniz expansions of an operator
applied to a product, contraction of the identity on 2-forms into an
antisymmetric slot pair, and removal of label sums that vanish under a label swap.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from harnack_verify import config
from harnack_verify.errors import RuleApplicationError, RuleError, SideConditionError
from harnack_verify.rewrite.matcher import (
    Match,
    antisymmetric_pair,
    contraction_partner,
    instantiate,
    match_pattern,
)
from harnack_verify.rewrite.selectors import Selector, template_matches
from harnack_verify.tensor.canonical import canonical_product, canonicalize
from harnack_verify.tensor.expr import (
    Factor,
    OpProduct,
    TensorExpr,
    Term,
    check_term,
    fresh_indices,
)
from harnack_verify.tensor.parser import grad_factors, parse
from harnack_verify.tensor.symbols import FRAME, LABEL

logger = logging.getLogger(__name__)


@dataclass
class RewriteRule:
    """Base class for a named, directed rewrite.

    Attributes:
        name: Catalog name, e.g. ``BIANCHI-1``.
        description: One-line statement of the identity.
        requires: Id of the derivation step whose success installs the rule.
        axiom: True for evolution equations taken as given.
        checks: ``(lhs, rhs)`` DSL pairs evaluated numerically to test soundness;
            None means the pattern rule checks its own alternatives.
        family: Numeric model family the check is evaluated on.
    """

    name: str
    description: str = ""
    requires: Optional[str] = None
    axiom: bool = False
    checks: Optional[Sequence[Tuple[str, str]]] = None
    family: str = "geometric"

    def matches(self, term: Term) -> Iterator[Match]:
        raise NotImplementedError

    def rewrite(self, term: Term, match: Match) -> List[Term]:
        raise NotImplementedError

    def side_failures(self, expr: TensorExpr) -> int:
        return 0

    def apply(self, expr: TensorExpr, selector: Selector) -> Tuple[TensorExpr, int]:
        """Applies the rule at ``selector`` and canonicalizes the result.

        Returns:
            The rewritten canonical expression and the number of rewrites done.

        Raises:
            RuleApplicationError: No match, or ``all`` did not reach a fixpoint.
            SideConditionError: Structural matches exist but none meets the side condition.
        """
        if selector.mode == "all":
            result, count = self._fixpoint(expr)
        elif selector.mode == "at":
            result, count = self._at(expr, selector)
        else:
            result, count = self._nth(expr, selector.position)
        if count == 0:
            if self.side_failures(expr):
                raise SideConditionError(f"Rule {self.name}: side condition fails at every match")
            raise RuleApplicationError(f"Rule {self.name} found no match for selector '{selector}'")
        logger.debug("Rule %s applied %d time(s) at '%s'", self.name, count, selector)
        return result, count

    def _rebuild(self, terms: Sequence[Term], like: TensorExpr) -> TensorExpr:
        return canonicalize(TensorExpr.from_terms(terms, like.free))

    def _fixpoint(self, expr: TensorExpr) -> Tuple[TensorExpr, int]:
        total = 0
        current = expr
        for _ in range(config.MAX_REWRITE_PASSES):
            terms: List[Term] = []
            hits = 0
            for term in current.terms:
                match = next(self.matches(term), None)
                if match is None:
                    terms.append(term)
                    continue
                terms.extend(self.rewrite(term, match))
                hits += 1
            if hits == 0:
                return current, total
            total += hits
            current = self._rebuild(terms, expr)
        raise RuleApplicationError(
            f"Rule {self.name} did not reach a fixpoint in {config.MAX_REWRITE_PASSES} passes"
        )

    def _at(self, expr: TensorExpr, selector: Selector) -> Tuple[TensorExpr, int]:
        terms: List[Term] = []
        count = 0
        for term in expr.terms:
            chosen = None
            for match in self.matches(term):
                if template_matches(term.factors[match.positions[0]], selector.template):
                    chosen = match
                    break
            if chosen is None:
                terms.append(term)
            else:
                terms.extend(self.rewrite(term, chosen))
                count += 1
        return (self._rebuild(terms, expr) if count else expr), count

    def _nth(self, expr: TensorExpr, position: int) -> Tuple[TensorExpr, int]:
        seen = 0
        for k, term in enumerate(expr.terms):
            for match in self.matches(term):
                seen += 1
                if seen == position:
                    terms = list(expr.terms[:k]) + self.rewrite(term, match) + list(expr.terms[k + 1 :])
                    return self._rebuild(terms, expr), 1
        return expr, 0


@dataclass
class PatternRule(RewriteRule):
    """``pattern -> replacement`` with optional alternatives and antisymmetric-pair side conditions.

    Attributes:
        alternatives: ``(pattern, replacement)`` DSL pairs tried in order.
        side_pairs: Pattern-variable pairs that must be contracted into one other
            factor at slots where that factor is antisymmetric.
        lift: Whether a single-factor pattern may match under extra derivatives.
    """

    alternatives: Sequence[Tuple[str, str]] = ()
    side_pairs: Sequence[Tuple[str, str]] = ()
    lift: bool = True
    _compiled: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        for pattern_text, replacement_text in self.alternatives:
            pattern = parse(pattern_text)
            replacement = parse(replacement_text)
            if len(pattern.terms) != 1 or pattern.terms[0].coeff != 1:
                raise RuleError(f"Rule {self.name}: pattern must be a single monomial")
            if not replacement.is_zero and replacement.free != pattern.free:
                raise RuleError(f"Rule {self.name}: replacement changes the free indices")
            factors = pattern.terms[0].factors
            if any(not isinstance(f, Factor) for f in factors):
                raise RuleError(f"Rule {self.name}: pattern factors must be plain symbols")
            self._compiled.append((factors, replacement))
        if self.checks is None:
            self.checks = () if self.axiom or self.side_pairs else tuple(self.alternatives)

    def _raw_matches(self, term: Term) -> Iterator[Match]:
        lift = self.lift and not self.side_pairs
        for k, (factors, _) in enumerate(self._compiled):
            for match in match_pattern(term, factors, lift):
                yield Match(match.positions, match.binding, match.sign, match.outer, k)

    def _side_condition(self, term: Term, match: Match) -> bool:
        binding = {var.name: actual for var, actual in match.binding}
        for first, second in self.side_pairs:
            x, y = binding[first], binding[second]
            if x == y or x not in term.dummies or y not in term.dummies:
                return False
            partner = contraction_partner(term, match.positions, x, y)
            if partner is None or not antisymmetric_pair(term.factors[partner[0]], partner[1], partner[2]):
                return False
        return True

    def matches(self, term: Term) -> Iterator[Match]:
        for match in self._raw_matches(term):
            if self._side_condition(term, match):
                yield match

    def side_failures(self, expr: TensorExpr) -> int:
        if not self.side_pairs:
            return 0
        return sum(1 for term in expr.terms for _ in self._raw_matches(term))

    def rewrite(self, term: Term, match: Match) -> List[Term]:
        return instantiate(self._compiled[match.extra][1], term, match)


def _fresh(term: Term, kind: str = FRAME):
    return next(fresh_indices(kind, set(term.names)))


@dataclass
class HeatLeibnizRule(RewriteRule):
    """heat(F1...Fk) = sum_i heat(Fi) prod_{j!=i} Fj - 2 sum_{i<j} grad_p Fi grad_p Fj prod_rest."""

    def matches(self, term: Term) -> Iterator[Match]:
        for pos, factor in enumerate(term.factors):
            if isinstance(factor, OpProduct) and factor.op == "heat":
                yield Match((pos,))

    def rewrite(self, term: Term, match: Match) -> List[Term]:
        pos = match.positions[0]
        body = term.factors[pos].body
        rest = term.factors[:pos] + term.factors[pos + 1 :]
        results: List[Term] = []
        for i, factor in enumerate(body):
            others = body[:i] + body[i + 1 :]
            if isinstance(factor, OpProduct):
                heated = OpProduct("heat", None, (factor,))
            elif factor.decl.constant:
                continue
            elif factor.derivs or factor.heat or not factor.decl.heat_ok:
                raise RuleApplicationError(f"Rule {self.name}: heat operator of '{factor}' is undefined")
            else:
                heated = Factor(factor.symbol, factor.slots, (), True)
            results.append(check_term(Term(term.coeff, rest + others + (heated,), term.t_power)))
        p = _fresh(term)
        for i in range(len(body)):
            for j in range(i + 1, len(body)):
                left = grad_factors((body[i],), p)
                right = grad_factors((body[j],), p)
                if left is None or right is None:
                    continue
                others = tuple(f for k, f in enumerate(body) if k not in (i, j))
                results.append(
                    check_term(Term(term.coeff * -2, rest + others + left + right, term.t_power))
                )
        return results


@dataclass
class GradLeibnizRule(RewriteRule):
    """grad_v(F1...Fk) = sum_i F1 ... grad_v Fi ... Fk."""

    def matches(self, term: Term) -> Iterator[Match]:
        for pos, factor in enumerate(term.factors):
            if isinstance(factor, OpProduct) and factor.op == "grad":
                yield Match((pos,))

    def rewrite(self, term: Term, match: Match) -> List[Term]:
        pos = match.positions[0]
        product = term.factors[pos]
        rest = term.factors[:pos] + term.factors[pos + 1 :]
        results = []
        for i, factor in enumerate(product.body):
            derived = grad_factors((factor,), product.index)
            if derived is None:
                continue
            others = product.body[:i] + product.body[i + 1 :]
            results.append(check_term(Term(term.coeff, rest + others + derived, term.t_power)))
        return results


@dataclass
class IdentityContractionRule(RewriteRule):
    """I_abcd T_..c..d.. -> T_..a..b.. when T is antisymmetric in the contracted slots."""

    symbol: str = "I"

    def _raw(self, term: Term) -> Iterator[Match]:
        for pos, factor in enumerate(term.factors):
            if not isinstance(factor, Factor) or factor.symbol != self.symbol or factor.derivs:
                continue
            for contracted, kept in (((2, 3), (0, 1)), ((0, 1), (2, 3))):
                x, y = factor.slots[contracted[0]], factor.slots[contracted[1]]
                if x == y or x not in term.dummies or y not in term.dummies:
                    continue
                partner = contraction_partner(term, (pos,), x, y)
                if partner is None:
                    continue
                yield Match((pos, partner[0]), extra=(kept, partner[1], partner[2]))

    def matches(self, term: Term) -> Iterator[Match]:
        for match in self._raw(term):
            _, first, second = match.extra
            if antisymmetric_pair(term.factors[match.positions[1]], first, second):
                yield match

    def side_failures(self, expr: TensorExpr) -> int:
        return sum(1 for term in expr.terms for _ in self._raw(term))

    def rewrite(self, term: Term, match: Match) -> List[Term]:
        identity_pos, partner_pos = match.positions
        kept, first, second = match.extra
        identity = term.factors[identity_pos]
        partner = term.factors[partner_pos]
        slots = list(partner.slots)
        slots[first], slots[second] = identity.slots[kept[0]], identity.slots[kept[1]]
        contracted = Factor(partner.symbol, tuple(slots), partner.derivs, partner.heat)
        factors = tuple(
            contracted if k == partner_pos else f
            for k, f in enumerate(term.factors)
            if k != identity_pos
        )
        return [check_term(Term(term.coeff, factors, term.t_power))]


@dataclass
class LabelSwapCancellationRule(RewriteRule):
    """Drops label sums that vanish by the swap test.

    Swapping two summed labels of a term and canonicalizing must give minus
    that term (it is zero alone) or minus another term (the two cancel).
    """

    def matches(self, term: Term) -> Iterator[Match]:
        return iter(())

    def apply(self, expr: TensorExpr, selector: Selector) -> Tuple[TensorExpr, int]:
        limit = 1 if selector.mode == "nth" else len(expr.terms)
        removed = set()
        keys = []
        for term in expr.terms:
            result = canonical_product(term.factors)
            keys.append(None if result is None else (term.t_power, result[1], result[0] * term.coeff))
        hits = 0
        for i, term in enumerate(expr.terms):
            if i in removed or keys[i] is None or hits >= limit:
                continue
            labels = sorted(index for index in term.dummies if index.kind == LABEL)
            swapped_keys = set()
            for a in range(len(labels)):
                for b in range(a + 1, len(labels)):
                    swapped = term.rename({labels[a]: labels[b], labels[b]: labels[a]})
                    result = canonical_product(swapped.factors)
                    if result is not None:
                        swapped_keys.add((term.t_power, result[1], result[0] * term.coeff))
            power, factors, value = keys[i]
            if (power, factors, -value) in swapped_keys:
                removed.add(i)
                hits += 1
                continue
            for j in range(i + 1, len(expr.terms)):
                if j in removed or keys[j] is None:
                    continue
                power, factors, value = keys[j]
                if (power, factors, -value) in swapped_keys:
                    removed.update((i, j))
                    hits += 1
                    break
        if hits == 0:
            raise RuleApplicationError(f"Rule {self.name} found no label sum that vanishes under a swap")
        kept = [t for k, t in enumerate(expr.terms) if k not in removed]
        return canonicalize(TensorExpr.from_terms(kept, expr.free)), hits


__all__ = [
    "GradLeibnizRule",
    "HeatLeibnizRule",
    "IdentityContractionRule",
    "LabelSwapCancellationRule",
    "PatternRule",
    "RewriteRule",
]
