"""Unit tests for the derivation-DSL parser.

Tests cover products and contractions, coefficients and powers of t, labels,
operators, and the error types raised for malformed input.
"""

from fractions import Fraction

import pytest

from harnack_verify.errors import (
    ArityError,
    ExpressionSyntaxError,
    FreeIndexMismatchError,
    IndexStructureError,
    UnknownSymbolError,
)
from harnack_verify.tensor.expr import Factor, Index, OpProduct
from harnack_verify.tensor.parser import parse, parse_template
from harnack_verify.tensor.symbols import LABEL


class TestParse:
    """Tests for well-formed expressions."""

    def test_parse_product_with_contractions(self):
        """Test that repeated indices are summed and the rest are free."""
        expr = parse("2*S[i,j,k,l]*P[i,j,a]*W[a]")

        assert len(expr.terms) == 1
        term = expr.terms[0]
        assert term.coeff == Fraction(2)
        assert [f.symbol for f in term.factors] == ["S", "P", "W"]
        assert {i.name for i in expr.free} == {"k", "l"}
        assert {i.name for i in term.dummies} == {"i", "j", "a"}

    def test_parse_rational_and_time_power(self):
        """Test rational coefficients and t exponents."""
        term = parse("1/2*t^-1*Rc[a,b]").terms[0]

        assert term.coeff == Fraction(1, 2)
        assert term.t_power == -1
        assert parse("t").terms[0].t_power == 1

    def test_parse_distributes_products_over_sums(self):
        """Test that (x + y)(z - w) expands to four terms."""
        expr = parse("(W[a] + V[a])*(W[b] - V[b])")

        assert len(expr.terms) == 4
        assert sorted(t.coeff for t in expr.terms) == [-1, -1, 1, 1]

    def test_parse_label_sum(self):
        """Test that labels go before ';' and are summed when repeated."""
        expr = parse("sum[N](Y[N;a,b]*Y[N;c,d])")

        term = expr.terms[0]
        assert Index("N", LABEL) in term.dummies
        assert {i.name for i in expr.free} == {"a", "b", "c", "d"}

    def test_parse_grad_of_single_factor(self):
        """Test that grad of a symbol becomes a derivative prefix, outermost first."""
        factor = parse("grad[v](grad[b](Rc[v,a]))").terms[0].factors[0]

        assert isinstance(factor, Factor)
        assert [i.name for i in factor.derivs] == ["v", "b"]
        assert [i.name for i in factor.slots] == ["v", "a"]

    def test_parse_grad_of_product_stays_unexpanded(self):
        """Test that grad of a product waits for the Leibniz rule."""
        factor = parse("grad[v](S[i,j,k,l]*P[k,l,a])").terms[0].factors[0]

        assert isinstance(factor, OpProduct)
        assert factor.op == "grad"
        assert len(factor.body) == 2

    def test_parse_grad_of_constant_vanishes(self):
        """Test that the metric has zero derivative."""
        assert parse("grad[v](g[a,b])").is_zero

    def test_parse_heat_of_time_power(self):
        """Test that heat(t^k X) contributes k t^(k-1) X."""
        expr = parse("heat(t^-1*Rc[a,b])")

        powers = {t.t_power: t.coeff for t in expr.terms}
        assert powers == {-2: Fraction(-1), -1: Fraction(1)}

    def test_parse_ignores_comments(self):
        """Test that '#' starts a comment."""
        assert len(parse("W[a] # a vector").terms) == 1

    def test_parse_renders_back(self):
        """Test the text form of a parsed monomial."""
        assert str(parse("2*B[a,b,c,d]")) == "2*B[a,b,c,d]"
        assert str(parse("Y[N;a,b]*X[N;c]")) == "Y[N;a,b]*X[N;c]"


class TestParseErrors:
    """Tests for malformed input."""

    def test_unknown_symbol_has_position(self):
        """Test that an unknown tensor name reports line and column."""
        with pytest.raises(UnknownSymbolError) as info:
            parse("Q[a,b]")

        assert info.value.line == 1
        assert info.value.column == 1

    def test_wrong_arity(self):
        """Test that R needs four frame indices."""
        with pytest.raises(ArityError):
            parse("R[a,b,c]")

    def test_index_used_three_times(self):
        """Test that an index may occur at most twice per term."""
        with pytest.raises(IndexStructureError):
            parse("Rc[a,a]*W[a]")

    def test_label_and_frame_index_share_a_name(self):
        """Test that one name cannot be both a label and a frame index."""
        with pytest.raises(IndexStructureError):
            parse("X[N;a]*W[N]")

    def test_inhomogeneous_sum(self):
        """Test that every term of a sum must carry the same free indices."""
        with pytest.raises(FreeIndexMismatchError):
            parse("W[a] + V[b]")

    def test_malformed_text(self):
        """Test that syntax errors raise ExpressionSyntaxError."""
        with pytest.raises(ExpressionSyntaxError):
            parse("R[a,b,,c]")

    def test_wildcard_outside_selector(self):
        """Test that '_' is reserved for selector templates."""
        with pytest.raises(ExpressionSyntaxError):
            parse("R[a,_,c,d]")

    def test_heat_of_undeclared_symbol(self):
        """Test that heat() is only defined for evolving curvature quantities."""
        with pytest.raises(IndexStructureError):
            parse("heat(W[a])")

    def test_label_sum_over_free_label(self):
        """Test that sum[N] requires N to be contracted."""
        with pytest.raises(IndexStructureError):
            parse("sum[N](Y[N;a,b])")


class TestParseTemplate:
    """Tests for selector templates."""

    def test_wildcards_get_distinct_names(self):
        """Test that each '_' becomes its own wildcard."""
        template = parse_template("R[m,n,_,_]")

        names = [i.name for i in template.slots]
        assert names[:2] == ["m", "n"]
        assert names[2] != names[3]
        assert all(name.startswith("_") for name in names[2:])

    def test_template_must_be_one_factor(self):
        """Test that products are rejected as templates."""
        with pytest.raises(ExpressionSyntaxError):
            parse_template("R[a,b,c,d]*W[a]")
