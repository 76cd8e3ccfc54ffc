"""Parser for the derivation DSL.

The grammar is a small arithmetic language over tensor factors::

    2*S[i,j,k,l]*P[i,j,a]*W[a] - 1/2*t^-1*Rc[a,b]
    grad[v](grad[b](Rc[v,a]))        heat(M[a,b])        heat(S[a,b,c,d]*P[c,d,e])
    sum[N,M](Y[N;a,b]*Y[M;c,d]*L[N,M;e])     # labels go before ';'

Products distribute over sums. The parser validates arity and index structure
but never canonicalizes or merges terms, so rules see the expression as written.
"""

import logging
from fractions import Fraction
from itertools import count
from typing import List, Optional, Sequence, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from harnack_verify.errors import (
    ArityError,
    ExpressionSyntaxError,
    HarnackError,
    IndexStructureError,
)
from harnack_verify.tensor.expr import (
    Factor,
    FactorLike,
    Index,
    OpProduct,
    TensorExpr,
    Term,
    check_term,
)
from harnack_verify.tensor.symbols import FRAME, LABEL, lookup

logger = logging.getLogger(__name__)

GRAMMAR = r"""
?start: sum

?sum: product
    | sum "+" product                        -> add
    | sum "-" product                        -> sub

?product: unary
    | product "*" unary                      -> mul

?unary: atom
    | "-" unary                              -> neg
    | "+" unary

?atom: INT "/" INT                           -> rational
    | INT                                    -> integer
    | "t" "^" SIGNED_INT                     -> tpower
    | "t"                                    -> tlinear
    | "grad" "[" NAME "]" "(" sum ")"        -> grad
    | "heat" "(" sum ")"                     -> heat
    | "sum" "[" NAME ("," NAME)* "]" "(" sum ")" -> labelsum
    | NAME "[" [names] "]"                   -> tensor
    | NAME "[" names ";" [names] "]"         -> labeled
    | NAME                                   -> scalar
    | "(" sum ")"

names: NAME ("," NAME)*

NAME: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /#[^\n]*/

%import common.INT
%import common.SIGNED_INT
%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True)


def _is_constant(factor: FactorLike) -> bool:
    return isinstance(factor, Factor) and factor.decl.constant


def apply_grad(expr: TensorExpr, index: Index) -> TensorExpr:
    """Covariant derivative ``grad[index](expr)``, linear over terms.

    A single factor receives a new outermost derivative prefix; a product is
    wrapped in an ``OpProduct`` for the Leibniz rule. Constants pass through.
    """
    terms = []
    for term in expr.terms:
        new = grad_factors(term.factors, index)
        if new is not None:
            terms.append(check_term(Term(term.coeff, new, term.t_power)))
    free = expr.free - {index} if index in expr.free else expr.free | {index}
    return TensorExpr.from_terms(terms, None if terms else free)


def grad_factors(factors: Sequence[FactorLike], index: Index) -> Optional[Tuple[FactorLike, ...]]:
    """Factors of ``grad[index]`` applied to a product, or None when the product is constant."""
    constants = tuple(f for f in factors if _is_constant(f))
    varying = tuple(f for f in factors if not _is_constant(f))
    if not varying:
        return None
    if len(varying) > 1:
        return constants + (OpProduct("grad", index, varying),)
    factor = varying[0]
    if isinstance(factor, OpProduct):
        return constants + (OpProduct("grad", index, (factor,)),)
    if factor.heat:
        raise IndexStructureError(f"Derivative of heat-operator factor '{factor}' is not supported")
    return constants + (Factor(factor.symbol, factor.slots, (index,) + factor.derivs, False),)


def apply_heat(expr: TensorExpr) -> TensorExpr:
    """Heat operator ``(d/dt - Laplacian)`` applied to ``expr``, linear over terms.

    Explicit powers of ``t`` contribute ``k * t^(k-1)`` times the remaining product.
    """
    terms: List[Term] = []
    for term in expr.terms:
        if term.t_power:
            terms.append(Term(term.coeff * term.t_power, term.factors, term.t_power - 1))
        constants = tuple(f for f in term.factors if _is_constant(f))
        varying = tuple(f for f in term.factors if not _is_constant(f))
        if not varying:
            continue
        if len(varying) > 1 or isinstance(varying[0], OpProduct):
            new: FactorLike = OpProduct("heat", None, varying)
        else:
            factor = varying[0]
            if factor.derivs or factor.heat:
                raise IndexStructureError(f"Heat operator of '{factor}' is not supported")
            if not factor.decl.heat_ok:
                raise IndexStructureError(f"Heat operator is not defined for symbol '{factor.symbol}'")
            new = Factor(factor.symbol, factor.slots, (), True)
        terms.append(Term(term.coeff, constants + (new,), term.t_power))
    return TensorExpr.from_terms(terms, None if terms else expr.free)


@v_args(inline=True)
class _ExprBuilder(Transformer):
    """Turns the parse tree into a ``TensorExpr``."""

    def __init__(self, template: bool = False):
        super().__init__()
        self.template = template
        self._wildcards = count()

    def _index(self, token: Token, kind: str) -> Index:
        name = str(token)
        if name == "_":
            if not self.template:
                raise ExpressionSyntaxError("Wildcard '_' is only allowed in selectors", token.line, token.column)
            name = f"_{next(self._wildcards)}"
        elif name.startswith("_"):
            raise ExpressionSyntaxError(f"Index names may not start with '_': '{name}'", token.line, token.column)
        return Index(name, kind)

    def _factor(self, name: Token, labels: Sequence[Token], frames: Sequence[Token]) -> TensorExpr:
        decl = lookup(str(name), name.line, name.column)
        if len(labels) != decl.label_arity or len(frames) != decl.frame_arity:
            raise ArityError(
                f"Symbol '{decl.name}' takes {decl.label_arity} label and {decl.frame_arity} "
                f"frame indices, got {len(labels)} and {len(frames)}",
                name.line,
                name.column,
            )
        slots = tuple(self._index(t, LABEL) for t in labels) + tuple(self._index(t, FRAME) for t in frames)
        term = Term(Fraction(1), (Factor(decl.name, slots),))
        if self.template:
            return TensorExpr((term,), frozenset())
        return TensorExpr.from_terms([check_term(term, name.line, name.column)])

    def names(self, *tokens):
        return list(tokens)

    def tensor(self, name, names):
        return self._factor(name, [], names or [])

    def labeled(self, name, labels, frames):
        return self._factor(name, labels, frames or [])

    def scalar(self, name):
        return self._factor(name, [], [])

    def integer(self, token):
        return TensorExpr.constant(int(token))

    def rational(self, num, den):
        if int(den) == 0:
            raise ExpressionSyntaxError("Division by zero in coefficient", den.line, den.column)
        return TensorExpr.constant(Fraction(int(num), int(den)))

    def tpower(self, exponent):
        return TensorExpr.from_terms([Term(Fraction(1), (), int(exponent))])

    def tlinear(self):
        return TensorExpr.from_terms([Term(Fraction(1), (), 1)])

    def grad(self, name, body):
        return apply_grad(body, self._index(name, FRAME))

    def heat(self, body):
        return apply_heat(body)

    def labelsum(self, *args):
        *labels, body = args
        for token in labels:
            label = Index(str(token), LABEL)
            for term in body.terms:
                if label not in term.dummies:
                    raise IndexStructureError(
                        f"Summed label '{label.name}' is not a contracted label in '{term}'"
                        f" (line {token.line}, column {token.column})"
                    )
        return body

    def add(self, left, right):
        return left + right

    def sub(self, left, right):
        return left - right

    def mul(self, left, right):
        return left * right

    def neg(self, operand):
        return -operand


def _position(error: VisitError):
    meta = getattr(error.obj, "meta", None)
    if meta is not None and not getattr(meta, "empty", True):
        return meta.line, meta.column
    return getattr(error.obj, "line", None), getattr(error.obj, "column", None)


def _run(text: str, template: bool) -> TensorExpr:
    try:
        tree = _PARSER.parse(text)
    except UnexpectedEOF as e:
        raise ExpressionSyntaxError(f"Unexpected end of input in '{text.strip()}'") from e
    except UnexpectedCharacters as e:
        raise ExpressionSyntaxError(f"Unexpected character '{e.char}'", e.line, e.column) from e
    except UnexpectedInput as e:
        token = getattr(e, "token", None)
        raise ExpressionSyntaxError(f"Unexpected token '{token}'", e.line, e.column) from e
    try:
        return _ExprBuilder(template).transform(tree)
    except VisitError as e:
        original = e.orig_exc
        if isinstance(original, ExpressionSyntaxError):
            raise original from None
        if isinstance(original, HarnackError):
            line, column = _position(e)
            where = f" (line {line}, column {column})" if line is not None else ""
            raise type(original)(f"{original}{where}") from None
        raise


def parse(text: str) -> TensorExpr:
    """Parses DSL text into an expression without canonicalizing it.

    Args:
        text: Expression text, e.g. ``"2*B[a,b,c,d] - R[a,e,b,f]*R[c,e,d,f]"``.

    Returns:
        The parsed ``TensorExpr``.

    Raises:
        ExpressionSyntaxError: Malformed text, unknown symbol or wrong arity (with position).
        IndexStructureError: An index used three or more times, or a mixed-class dummy.
        FreeIndexMismatchError: Terms of a sum with different free indices.
    """
    expr = _run(text, template=False)
    logger.debug("Parsed %d term(s) from %r", len(expr.terms), text)
    return expr


def parse_template(text: str) -> FactorLike:
    """Parses a single-factor selector template such as ``R[m,n,_,_]``.

    Each ``_`` becomes a distinct wildcard index whose name starts with ``_``.

    Raises:
        ExpressionSyntaxError: If the text is not a single factor.
    """
    expr = _run(text, template=True)
    if len(expr.terms) != 1 or len(expr.terms[0].factors) != 1 or expr.terms[0].coeff != 1:
        raise ExpressionSyntaxError(f"Selector template must be a single factor: '{text}'")
    return expr.terms[0].factors[0]


__all__ = ["GRAMMAR", "apply_grad", "apply_heat", "grad_factors", "parse", "parse_template"]
