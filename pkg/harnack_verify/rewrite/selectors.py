"""Selectors choosing where a rule applies: ``all``, ``once``, ``nth(k)``, ``at(<factor>)``."""

import re
from dataclasses import dataclass
from typing import Optional

from harnack_verify.errors import ExpressionSyntaxError
from harnack_verify.tensor.expr import Factor, FactorLike
from harnack_verify.tensor.parser import parse_template

_NTH = re.compile(r"^nth\((\d+)\)$")
_AT = re.compile(r"^at\((.+)\)$", re.DOTALL)


@dataclass(frozen=True)
class Selector:
    """Parsed selector.

    Attributes:
        mode: ``all`` (rewrite to a fixpoint), ``nth`` (the k-th match of the whole
            expression, ``once`` is ``nth(1)``) or ``at`` (first match per term
            whose leading factor fits the template).
        position: 1-based match number for ``nth``.
        template: Factor template for ``at``; indices named ``_k`` are wildcards.
        text: The selector as written.
    """

    mode: str
    position: int = 1
    template: Optional[FactorLike] = None
    text: str = "all"

    def __str__(self) -> str:
        return self.text


def parse_selector(text: str) -> Selector:
    """Parses selector text.

    Raises:
        ExpressionSyntaxError: For anything other than the four selector forms.
    """
    text = text.strip()
    if text == "all":
        return Selector("all", text=text)
    if text == "once":
        return Selector("nth", 1, text=text)
    nth = _NTH.match(text)
    if nth:
        position = int(nth.group(1))
        if position < 1:
            raise ExpressionSyntaxError(f"Selector position must be at least 1: '{text}'")
        return Selector("nth", position, text=text)
    at = _AT.match(text)
    if at:
        return Selector("at", template=parse_template(at.group(1)), text=text)
    raise ExpressionSyntaxError(f"Unknown selector '{text}'")


def template_matches(factor: FactorLike, template: FactorLike) -> bool:
    """True iff ``factor`` as written fits ``template`` (wildcards match any index)."""
    if not isinstance(factor, Factor) or not isinstance(template, Factor):
        return factor == template
    if (factor.symbol, factor.heat, len(factor.derivs)) != (template.symbol, template.heat, len(template.derivs)):
        return False
    return all(
        want.name.startswith("_") or want.name == got.name
        for want, got in zip(template.indices, factor.indices)
    )


__all__ = ["Selector", "parse_selector", "template_matches"]
