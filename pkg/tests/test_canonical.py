"""Unit tests for canonical forms of tensor expressions."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harnack_verify.errors import FreeIndexMismatchError
from harnack_verify.rewrite.catalog import apply_rule
from harnack_verify.tensor.canonical import canonicalize, difference, equal_canonical
from harnack_verify.tensor.parser import parse
from harnack_verify.tensor.symbols import SYMBOLS


class TestCanonicalize:
    """Tests for slot symmetries, dummy renaming and factor order."""

    def test_pair_exchange(self):
        """Test R_abcd = R_cdab."""
        assert equal_canonical(parse("R[a,b,c,d]"), parse("R[c,d,a,b]"))

    def test_antisymmetric_pair_cancels(self):
        """Test R_abcd + R_bacd = 0."""
        assert canonicalize(parse("R[a,b,c,d] + R[b,a,c,d]")).is_zero

    def test_dummy_names_do_not_matter(self):
        """Test renaming of contracted indices."""
        assert equal_canonical(parse("S[a,b,i,j]*U[i,j]"), parse("S[a,b,k,l]*U[k,l]"))

    def test_factor_order_does_not_matter(self):
        """Test commuting factors."""
        assert equal_canonical(parse("U[i,j]*S[a,b,i,j]"), parse("S[a,b,i,j]*U[i,j]"))

    def test_symmetric_against_antisymmetric_vanishes(self):
        """Test that a term equal to minus itself is dropped."""
        assert canonicalize(parse("Rc[a,b]*U[a,b]")).is_zero
        assert canonicalize(parse("g[i,j]*U[i,j]")).is_zero

    def test_like_terms_merge(self):
        """Test that equal terms add their coefficients."""
        expr = canonicalize(parse("2*B[a,b,c,d] + B[c,d,a,b] - B[b,a,d,c]"))

        assert len(expr.terms) == 1
        assert expr.terms[0].coeff == 2

    def test_first_bianchi_is_not_a_slot_symmetry(self):
        """Test that the cyclic identity is left to the rewrite rules."""
        expr = canonicalize(parse("R[a,b,c,d] + R[a,c,d,b] + R[a,d,b,c]"))

        assert len(expr.terms) == 3

    def test_idempotent(self):
        """Test canonicalize(canonicalize(e)) == canonicalize(e)."""
        once = canonicalize(parse("P[c,d,a]*P[c,d,b] - 2*P[a,c,d]*P[b,c,d] + 2*P[a,c,d]*P[b,d,c]"))

        assert canonicalize(once) == once

    def test_difference_rejects_mismatched_free_indices(self):
        """Test that lhs and rhs must share free indices."""
        with pytest.raises(FreeIndexMismatchError):
            difference(parse("W[a]"), parse("W[b]"))


# Dummy names avoid the free indices a, b.
_DUMMY_NAMES = ["i", "j", "k", "m", "n", "p", "q"]


@settings(max_examples=50, deadline=None)
@given(
    names=st.permutations(_DUMMY_NAMES),
    order=st.permutations(range(3)),
    flip=st.booleans(),
)
def test_canonical_form_ignores_presentation(names, order, flip):
    """Test that renaming dummies, reordering factors and slot swaps give one canonical form."""
    x, y, z = names[:3]
    s = f"S[b,a,{x},{y}]" if flip else f"S[a,b,{x},{y}]"
    factors = [s, f"P[{x},{y},{z}]", f"W[{z}]"]
    text = "*".join(factors[k] for k in order)
    if flip:
        text = f"-{text}"

    assert canonicalize(parse(text)) == canonicalize(parse("S[a,b,i,j]*P[i,j,k]*W[k]"))


_FRAME_SYMBOLS = sorted(name for name, decl in SYMBOLS.items() if decl.label_arity == 0)
_FREE_POOL = "abcdefhw"
_RENAME_POOL = "ijkmnpqrsuvxyz"


def _factor_text(name: str, slots) -> str:
    return f"{name}[{','.join(slots)}]" if slots else name


@st.composite
def products(draw):
    """Random well-formed products of frame tensors: every name used at most twice."""
    names = draw(st.lists(st.sampled_from(_FRAME_SYMBOLS), min_size=1, max_size=4))
    uses = {name: 0 for name in _FREE_POOL}
    factors = []
    for name in names:
        slots = []
        for _ in range(SYMBOLS[name].frame_arity):
            index = draw(st.sampled_from([n for n, used in uses.items() if used < 2]))
            uses[index] += 1
            slots.append(index)
        factors.append((name, slots))
    return factors


def _text(factors, sign: int = 1) -> str:
    body = "*".join(_factor_text(name, slots) for name, slots in factors)
    return f"-{body}" if sign < 0 else body


def _dummies(factors):
    counts = {}
    for _, slots in factors:
        for index in slots:
            counts[index] = counts.get(index, 0) + 1
    return sorted(index for index, c in counts.items() if c == 2)


class TestCanonicalProperties:
    """Property tests of canonicalize over generated products."""

    @settings(max_examples=1000, deadline=None)
    @given(factors=products())
    def test_idempotent(self, factors):
        """Test that canonicalizing twice changes nothing."""
        once = canonicalize(parse(_text(factors)))

        assert canonicalize(once) == once

    @settings(max_examples=1000, deadline=None)
    @given(factors=products(), data=st.data())
    def test_dummy_relabeling(self, factors, data):
        """Test that renaming contracted indices gives the same canonical form."""
        dummies = _dummies(factors)
        targets = data.draw(st.permutations(_RENAME_POOL))[: len(dummies)]
        mapping = dict(zip(dummies, targets))
        renamed = [(name, [mapping.get(i, i) for i in slots]) for name, slots in factors]

        assert canonicalize(parse(_text(renamed))) == canonicalize(parse(_text(factors)))

    @settings(max_examples=1000, deadline=None)
    @given(factors=products(), data=st.data())
    def test_factor_order(self, factors, data):
        """Test that the canonical form does not depend on the order of factors."""
        order = data.draw(st.permutations(range(len(factors))))
        shuffled = [factors[k] for k in order]

        assert canonicalize(parse(_text(shuffled))) == canonicalize(parse(_text(factors)))

    @settings(max_examples=1000, deadline=None)
    @given(factors=products(), data=st.data())
    def test_slot_symmetries(self, factors, data):
        """Test that applying a random group element to one factor only changes the sign."""
        pos = data.draw(st.integers(0, len(factors) - 1))
        name, slots = factors[pos]
        perm, sign = data.draw(st.sampled_from(SYMBOLS[name].elements))
        moved = list(factors)
        moved[pos] = (name, [slots[p] for p in perm])

        assert equal_canonical(parse(_text(moved)), parse(_text(factors, sign)))


def _declared(name: str, slots, sign: int = 1) -> str:
    """One factor of ``name``; labels are summed against X partners to keep them contracted."""
    decl = SYMBOLS[name]
    labels, frames = slots[: decl.label_arity], slots[decl.label_arity :]
    if not labels:
        text = _factor_text(name, frames)
    else:
        partners = "*".join(f"X[{label};{free}]" for label, free in zip(sorted(labels), "xy"))
        factor = f"{name}[{','.join(labels)};{','.join(frames)}]"
        text = f"sum[{','.join(sorted(labels))}]({factor}*{partners})"
    return f"-{text}" if sign < 0 else text


@pytest.mark.parametrize("name", sorted(SYMBOLS))
def test_generators_are_consistent(name):
    """Test every declared generator on a factor with distinct indices."""
    decl = SYMBOLS[name]
    slots = ["M", "N"][: decl.label_arity] + list(_FREE_POOL[: decl.frame_arity])

    assert not canonicalize(parse(_declared(name, slots))).is_zero
    for perm, sign in decl.generators:
        moved = [slots[p] for p in perm]
        assert equal_canonical(parse(_declared(name, moved)), parse(_declared(name, slots, sign)))


class TestLabelOrder:
    """Tests that summed labels are ranked, not relabeled."""

    def test_order_preserving_renaming(self):
        """Test that renaming labels without changing their order is invisible."""
        assert equal_canonical(
            parse("sum[M,N](X[M;a]*Y[N;b,c])"), parse("sum[A,B](X[A;a]*Y[B;b,c])")
        )

    def test_label_swap_is_left_to_the_rule(self):
        """Test that a label swap is not merged here but is cancelled by SYM-ANTISYM-ZERO."""
        expr = parse("sum[M,N](X[M;a]*Y[N;b,c]) - sum[M,N](X[N;a]*Y[M;b,c])")

        assert len(canonicalize(expr).terms) == 2
        assert apply_rule(expr, "SYM-ANTISYM-ZERO").is_zero
