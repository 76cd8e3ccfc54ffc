"""Unit tests for rewrite rules, selectors and the rule catalog."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import pytest

from harnack_verify.errors import (
    ExpressionSyntaxError,
    RuleApplicationError,
    RuleError,
    SideConditionError,
)
from harnack_verify.numeric.oracle import check_rule_soundness, randomized_equal
from harnack_verify.rewrite.catalog import (
    B_SKEW_STEP,
    GRAD_INVERSE_STEP,
    RuleCatalog,
    apply_rule,
    default_catalog,
)
from harnack_verify.rewrite.derivation import bundled_script, parse_script, run_steps
from harnack_verify.rewrite.rules import LabelSwapCancellationRule, PatternRule, RewriteRule
from harnack_verify.rewrite.selectors import parse_selector, template_matches
from harnack_verify.tensor.canonical import canonicalize, equal_canonical
from harnack_verify.tensor.parser import parse, parse_template

SR_HALF = ("S[d,e,k,l]*R[d,i,e,j]*P[i,j,a]", "1/2*P[k,l,a]")
B_SKEW = ("B[a,b,c,d]*U[c,d]", "1/4*R[a,b,e,f]*R[c,d,e,f]*U[c,d]")


class TestApplyRule:
    """Tests for applying catalog rules to expressions."""

    def test_inverse_then_identity_contraction(self):
        """Test S R U -> I U -> U."""
        expr = parse("S[a,b,e,f]*R[e,f,c,d]*U[c,d]")

        with_identity = apply_rule(expr, "INV")
        assert equal_canonical(with_identity, parse("I[a,b,c,d]*U[c,d]"))

        contracted = apply_rule(with_identity, "I-CONTRACT")
        assert equal_canonical(contracted, parse("U[a,b]"))

    def test_identity_contraction_needs_antisymmetric_partner(self):
        """Test that I contracted into a symmetric tensor is rejected."""
        with pytest.raises(SideConditionError):
            apply_rule(parse("I[a,b,c,d]*Rc[c,d]"), "I-CONTRACT")

    def test_derived_rule_unavailable_until_proven(self):
        """Test that B-SKEW needs its proving step."""
        with pytest.raises(RuleError):
            apply_rule(parse(B_SKEW[0]), "B-SKEW")

    def test_derived_rule_after_proving_step(self):
        """Test B-SKEW once its step has passed, and its side condition."""
        catalog = default_catalog()
        catalog.mark_proven(B_SKEW_STEP)

        result = apply_rule(parse(B_SKEW[0]), "B-SKEW", catalog=catalog)
        assert equal_canonical(result, parse(B_SKEW[1]))

        with pytest.raises(SideConditionError):
            apply_rule(parse("B[a,b,c,d]*Rc[c,d]"), "B-SKEW", catalog=catalog)

    def test_unknown_rule(self):
        """Test that an unknown rule name raises RuleError."""
        with pytest.raises(RuleError):
            apply_rule(parse("W[a]"), "NO-SUCH-RULE")

    def test_no_match(self):
        """Test that a rule without a match raises RuleApplicationError."""
        with pytest.raises(RuleApplicationError):
            apply_rule(parse("W[a]"), "B-DEF")

    def test_once_rewrites_a_single_occurrence(self):
        """Test that BIANCHI-1 once gives two terms equal to R on Bianchi models."""
        expr = parse("R[a,b,c,d]")
        result = apply_rule(expr, "BIANCHI-1", "once")

        assert len(result.terms) == 2
        assert randomized_equal(result, expr, family="bianchi", trials=3).passed
        assert not randomized_equal(result, expr, family="plain", trials=3, dimensions=(4,)).passed

    def test_pattern_must_be_a_monomial(self):
        """Test that a sum is rejected as a pattern."""
        with pytest.raises(RuleError):
            PatternRule("BAD", alternatives=[("W[a] + V[a]", "W[a]")])

    def test_replacement_must_keep_free_indices(self):
        """Test that a replacement changing the free indices is rejected."""
        with pytest.raises(RuleError):
            PatternRule("BAD", alternatives=[("W[a]", "V[b]")])


class TestSelectors:
    """Tests for selector parsing and template matching."""

    def test_once_is_first(self):
        """Test that 'once' means nth(1)."""
        selector = parse_selector("once")

        assert selector.mode == "nth"
        assert selector.position == 1

    def test_nth(self):
        """Test nth(k)."""
        assert parse_selector("nth(3)").position == 3

    def test_at_template(self):
        """Test that at() matches fixed names and wildcards."""
        selector = parse_selector("at(R[m,n,_,_])")
        assert selector.mode == "at"

        hit = parse("R[m,n,c,d]").terms[0].factors[0]
        miss = parse("R[m,p,c,d]").terms[0].factors[0]
        assert template_matches(hit, selector.template)
        assert not template_matches(miss, selector.template)
        assert not template_matches(hit, parse_template("S[m,n,_,_]"))

    @pytest.mark.parametrize("text", ["bogus", "nth(0)", "nth(-1)", "at(R[a,b,c,d]*W[a])"])
    def test_invalid_selectors(self, text):
        """Test that malformed selectors raise ExpressionSyntaxError."""
        with pytest.raises(ExpressionSyntaxError):
            parse_selector(text)


CHECKED_RULES = [rule.name for rule in default_catalog() if rule.checks]


class TestRuleSoundness:
    """Tests that every checked rule holds numerically on its model family."""

    @pytest.mark.parametrize("name", CHECKED_RULES)
    def test_checks_hold(self, name):
        """Test each check of a catalog rule on random models."""
        rule = default_catalog().rules[name]
        verdicts = check_rule_soundness(rule, trials=20, dimensions=(3, 4))

        assert verdicts
        failed = {check: v.worst_deviation for check, v in verdicts.items() if not v.passed}
        assert not failed

    def test_axioms_carry_no_checks(self):
        """Test that evolution axioms are not checked."""
        for name in ("EVO-R", "EVO-P", "EVO-M", "EVO-S"):
            assert check_rule_soundness(default_catalog().rules[name]) == {}

    @pytest.mark.parametrize("lhs, rhs", [SR_HALF, B_SKEW])
    def test_bianchi_shortcuts_fail_without_bianchi(self, lhs, rhs):
        """Test that shortcuts relying on the first Bianchi identity fail on plain models."""
        verdict = randomized_equal(lhs, rhs, family="plain", trials=3, dimensions=(4,))

        assert not verdict.passed
        assert verdict.worst_dimension == 4

    @pytest.mark.parametrize("lhs, rhs", [SR_HALF, B_SKEW])
    def test_bianchi_shortcuts_hold_in_dimension_three(self, lhs, rhs):
        """Test that in dimension three every pair-symmetric curvature satisfies Bianchi."""
        assert randomized_equal(lhs, rhs, family="plain", trials=3, dimensions=(3,)).passed


@dataclass
class DoubledRule(RewriteRule):
    """Wraps a catalog rule and doubles every term it writes."""

    inner: Optional[RewriteRule] = None

    @classmethod
    def of(cls, rule: RewriteRule) -> "DoubledRule":
        return cls(rule.name, rule.description, requires=rule.requires, axiom=rule.axiom, inner=rule)

    def matches(self, term):
        return self.inner.matches(term)

    def rewrite(self, term, match):
        return [t.scaled(Fraction(2)) for t in self.inner.rewrite(term, match)]

    def side_failures(self, expr):
        return self.inner.side_failures(expr)


@dataclass
class InertRule(RewriteRule):
    """Claims one rewrite and leaves the expression alone."""

    def apply(self, expr, selector):
        return expr, 1


CATCHING_STEP = {
    "LEIB-HEAT": "heat-inverse",
    "EVO-R": "heat-inverse",
    "GRAD-S": "heat-inverse",
    "LEIB-GRAD": "grad-inverse",
    "EVO-P": "heat-z-substituted",
    "EVO-M": "heat-z-substituted",
    "EVO-S": "heat-z-substituted",
    "B-DEF": "b-skew",
    "BIANCHI-1": "b-skew",
    "INV": "complete-square",
    "I-CONTRACT": "complete-square",
    "BIANCHI-2": "final-form",
    "RIC-TRACE": "final-form",
    "RC-TRACE": "final-form",
    "Z-DEF": "final-form",
    "K-DEF": "final-form",
    "BIANCHI-2C": "m-from-commutator",
    "P-DEF": "m-from-commutator",
    "M-DEF": "m-from-commutator",
    "RICCI-COMM": "m-from-commutator",
    "COMPLETE-YY": "quadratic-square",
    "COMPLETE-YX": "quadratic-square",
    "COMPLETE-XX": "quadratic-square",
    "L-DEF": "quadratic-square",
    "SYM-ANTISYM-ZERO": "quadratic-square",
    "E-DEF": "quadratic-e-form",
    "B-SKEW": "quadratic-e-form",
    "SR-HALF": "quadratic-e-form",
    "P-SQUARE": "quadratic-e-form",
}


def _mutant(rule: RewriteRule) -> RewriteRule:
    if isinstance(rule, LabelSwapCancellationRule):
        return InertRule(rule.name, rule.description, requires=rule.requires)
    return DoubledRule.of(rule)


def _run_until(step_id: str, catalog: RuleCatalog):
    steps = parse_script(bundled_script().read_text(encoding="utf-8"))
    ids = [step.step_id for step in steps]
    return run_steps(steps[: ids.index(step_id) + 1], "bundled", catalog)


class TestMutatedCatalog:
    """Tests that corrupting any single catalog rule makes the bundled proof fail."""

    def test_every_rule_has_a_catching_step(self):
        """Test that the mutation table covers the whole catalog."""
        assert set(CATCHING_STEP) == {rule.name for rule in default_catalog()}

    @pytest.mark.parametrize("name", sorted(CATCHING_STEP))
    def test_mutation_is_caught(self, name):
        """Test that a doubled rule breaks the step that depends on it."""
        rule = _mutant(default_catalog().rules[name])
        step_id = CATCHING_STEP[name]

        report = _run_until(step_id, default_catalog([rule]))

        assert not report.passed
        failed = {step.step_id for step in report.steps if not step.passed}
        assert step_id in failed

    def test_unmutated_prefix_passes(self):
        """Test that the same prefix passes with the real catalog."""
        assert _run_until("quadratic-square", default_catalog()).passed

    def test_label_sum_needs_its_rule(self):
        """Test that canonicalization alone does not cancel the label-swapped pair."""
        lhs = parse(
            "sum[N,M](Y[N;i,d]*Y[M;j,d]*E[i,j,a]*(Y[N;b,e]*X[M;e] + Y[M;b,e]*X[N;e]))"
        )

        assert len(canonicalize(lhs).terms) == 2
        assert apply_rule(lhs, "SYM-ANTISYM-ZERO").is_zero

    def test_single_term_swap_test(self):
        """Test that a term sent to its own negative by a label swap is removed."""
        expr = parse("sum[N,M](X[N;a]*X[M;b]*U[a,b])")
        symmetric = parse("sum[N,M](X[N;a]*X[M;b]*Rc[a,b])")

        assert len(canonicalize(expr).terms) == 1
        assert apply_rule(expr, "SYM-ANTISYM-ZERO").is_zero
        with pytest.raises(RuleApplicationError):
            apply_rule(symmetric, "SYM-ANTISYM-ZERO")

    def test_grad_s_needs_grad_inverse(self):
        """Test that GRAD-S is installed only by the grad-inverse step."""
        catalog = default_catalog()
        with pytest.raises(RuleError):
            catalog.get("GRAD-S")

        assert catalog.mark_proven(GRAD_INVERSE_STEP) == ["GRAD-S"]
        assert catalog.get("GRAD-S").requires == GRAD_INVERSE_STEP
