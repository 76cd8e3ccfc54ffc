"""Derivation scripts: parsing, per-step verification and whole-script runs.

A script is a sequence of steps::

    step sr-half {
      provenance: "contraction of S against a Bianchi-split curvature";
      lhs: 2*S[d,e,k,l]*R[d,i,e,j]*P[i,j,a];
      apply: BIANCHI-1@at(R[d,i,e,j]), INV@all, I-CONTRACT@all;
      rhs: P[k,l,a];
      solve: lhs;
    }

A step may hold several claims; each ``lhs:`` starts a new one. ``apply:``
rewrites the current claim's left side, ``apply_rhs:`` its right side. A claim
passes when the canonical forms of both rewritten sides agree. In solve mode it
passes when the rewritten left side minus the right side is a multiple c != 1
of the original difference, which proves lhs = rhs whenever c != 1.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple, Union

from harnack_verify.errors import (
    DependencyError,
    FreeIndexMismatchError,
    HarnackError,
    ScriptError,
)
from harnack_verify.rewrite.catalog import RuleCatalog, default_catalog
from harnack_verify.rewrite.selectors import Selector, parse_selector
from harnack_verify.schemas.data_models import ClaimReport, RuleTrace, ScriptReport, StepReport
from harnack_verify.tensor.canonical import canonicalize, difference
from harnack_verify.tensor.expr import TensorExpr
from harnack_verify.tensor.parser import parse

logger = logging.getLogger(__name__)

_STEP = re.compile(r"step\s+([A-Za-z0-9_.\-]+)\s*\{")
_KEYS = {"provenance", "lhs", "rhs", "apply", "apply_rhs", "solve"}
RESIDUAL_LIMIT = 20


@dataclass
class RuleCall:
    rule: str
    selector: Selector
    line: int = 0


@dataclass
class Claim:
    lhs: str
    rhs: Optional[str] = None
    lhs_script: List[RuleCall] = field(default_factory=list)
    rhs_script: List[RuleCall] = field(default_factory=list)
    solve: bool = False
    line: int = 0


@dataclass
class DerivationStep:
    """One parsed step: id, provenance and its claims."""

    step_id: str
    provenance: str = ""
    claims: List[Claim] = field(default_factory=list)
    line: int = 0

    @property
    def rule_calls(self) -> List[RuleCall]:
        return [call for c in self.claims for call in c.lhs_script + c.rhs_script]


def _strip_comments(text: str) -> str:
    out = []
    in_string = False
    skipping = False
    for ch in text:
        if skipping:
            if ch == "\n":
                skipping = False
                out.append(ch)
            continue
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            skipping = True
            continue
        out.append(ch)
    return "".join(out)


def _split_top(text: str, sep: str, base: int) -> List[Tuple[str, int]]:
    """Splits on ``sep`` outside brackets and quotes; returns (piece, offset) pairs."""
    pieces = []
    depth = 0
    in_string = False
    start = 0
    for k, ch in enumerate(text):
        if ch == '"':
            in_string = not in_string
        elif in_string:
            continue
        elif ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            pieces.append((text[start:k], base + start))
            start = k + 1
    pieces.append((text[start:], base + start))
    return pieces


def parse_script(text: str) -> List[DerivationStep]:
    """Parses script text into steps.

    Raises:
        ScriptError: Unbalanced braces, unknown statement keys, statements before
            any ``lhs:``, duplicate step ids or claims without ``rhs:``.
    """
    text = _strip_comments(text)

    def line_of(offset: int) -> int:
        return text.count("\n", 0, offset) + 1

    steps: List[DerivationStep] = []
    position = 0
    while True:
        rest = text[position:]
        if not rest.strip():
            break
        match = _STEP.match(rest.lstrip())
        if match is None:
            offset = position + len(rest) - len(rest.lstrip())
            raise ScriptError("Expected 'step <id> {'", line_of(offset), 1)
        begin = position + (len(rest) - len(rest.lstrip())) + match.end()
        end = text.find("}", begin)
        if end < 0:
            raise ScriptError(f"Unterminated step '{match.group(1)}'", line_of(begin), 1)
        step = DerivationStep(match.group(1), line=line_of(begin))
        if any(s.step_id == step.step_id for s in steps):
            raise ScriptError(f"Duplicate step id '{step.step_id}'", step.line, 1)
        _parse_body(step, text[begin:end], begin, line_of)
        steps.append(step)
        position = end + 1
    return steps


def _parse_body(step: DerivationStep, body: str, base: int, line_of) -> None:
    for statement, offset in _split_top(body, ";", base):
        if not statement.strip():
            continue
        line = line_of(offset + len(statement) - len(statement.lstrip()))
        key, sep, value = statement.strip().partition(":")
        key = key.strip()
        if not sep or key not in _KEYS:
            raise ScriptError(f"Unknown statement '{statement.strip()[:40]}'", line, 1)
        value = value.strip()
        if key == "provenance":
            step.provenance = value.strip('"')
            continue
        if key == "lhs":
            step.claims.append(Claim(lhs=value, line=line))
            continue
        if not step.claims:
            raise ScriptError(f"'{key}:' before any 'lhs:' in step '{step.step_id}'", line, 1)
        claim = step.claims[-1]
        if key == "rhs":
            claim.rhs = value
        elif key == "solve":
            if value != "lhs":
                raise ScriptError(f"Only 'solve: lhs' is supported, got '{value}'", line, 1)
            claim.solve = True
        else:
            target = claim.lhs_script if key == "apply" else claim.rhs_script
            for call, _ in _split_top(value, ",", 0):
                name, at, selector = call.strip().partition("@")
                if not name:
                    raise ScriptError(f"Empty rule call in step '{step.step_id}'", line, 1)
                target.append(RuleCall(name.strip(), parse_selector(selector if at else "all"), line))
    for claim in step.claims:
        if claim.rhs is None:
            raise ScriptError(f"Claim in step '{step.step_id}' has no 'rhs:'", claim.line, 1)


def proportionality(residual: TensorExpr, base: TensorExpr) -> Optional[Fraction]:
    """Returns c with ``residual == c * base`` term by term (both canonical), or None."""
    if base.is_zero:
        return None
    if residual.is_zero:
        return Fraction(0)
    ours = {(t.t_power, t.factors): t.coeff for t in residual.terms}
    theirs = {(t.t_power, t.factors): t.coeff for t in base.terms}
    if ours.keys() != theirs.keys():
        return None
    ratios = {ours[k] / theirs[k] for k in ours}
    return ratios.pop() if len(ratios) == 1 else None


def _run_calls(
    expr: TensorExpr, calls: List[RuleCall], side: str, catalog: RuleCatalog, trace: List[RuleTrace]
) -> TensorExpr:
    for call in calls:
        rule = catalog.get(call.rule)
        expr, count = rule.apply(expr, call.selector)
        trace.append(
            RuleTrace(
                rule=call.rule,
                selector=str(call.selector),
                side=side,
                rewrites=count,
                terms_after=len(expr.terms),
            )
        )
    return expr


def verify_claim(claim: Claim, catalog: RuleCatalog) -> ClaimReport:
    """Checks one claim.

    Raises:
        ExpressionSyntaxError: Either side does not parse.
        FreeIndexMismatchError: The two sides have different free indices.
        RuleError: A rule is unknown or not installed.
        RuleApplicationError: A rule finds no match at its selector.
    """
    lhs0 = parse(claim.lhs)
    rhs0 = parse(claim.rhs)
    if lhs0.free != rhs0.free and not (lhs0.is_zero or rhs0.is_zero):
        raise FreeIndexMismatchError(
            f"lhs free indices {sorted(i.name for i in lhs0.free)} differ from "
            f"rhs free indices {sorted(i.name for i in rhs0.free)} (line {claim.line})"
        )
    trace: List[RuleTrace] = []
    lhs = canonicalize(_run_calls(lhs0, claim.lhs_script, "lhs", catalog, trace))
    rhs = canonicalize(_run_calls(rhs0, claim.rhs_script, "rhs", catalog, trace))
    residual = difference(lhs, rhs)
    report = ClaimReport(
        lhs=claim.lhs,
        rhs=claim.rhs,
        canonical_lhs=str(lhs),
        canonical_rhs=str(rhs),
        trace=trace,
    )
    if residual.is_zero:
        report.passed = True
        return report
    if claim.solve:
        factor = proportionality(residual, difference(lhs0, rhs))
        if factor is not None and factor != 1:
            report.passed = True
            report.solved_factor = str(factor)
            return report
    terms = [str(TensorExpr((t,), residual.free)) for t in residual.terms]
    report.residual_terms = len(terms)
    report.residual = terms[:RESIDUAL_LIMIT]
    report.first_mismatch = terms[0]
    return report


def verify_step(step: DerivationStep, catalog: Optional[RuleCatalog] = None) -> StepReport:
    """Verifies every claim of ``step``; the step passes iff all claims pass.

    Raises:
        HarnackError: The subclasses listed in ``verify_claim``.
    """
    catalog = catalog or default_catalog()
    claims = [verify_claim(claim, catalog) for claim in step.claims]
    passed = bool(claims) and all(c.passed for c in claims)
    return StepReport(step_id=step.step_id, provenance=step.provenance, passed=passed, claims=claims)


def check_dependencies(steps: List[DerivationStep], catalog: RuleCatalog) -> None:
    """Ensures every derived rule is used only after the step that proves it.

    Raises:
        DependencyError: Naming the rule, the using step and the required step.
    """
    seen = set()
    for step in steps:
        for call in step.rule_calls:
            rule = catalog.rules.get(call.rule)
            if rule is not None and rule.requires is not None and rule.requires not in seen:
                raise DependencyError(
                    f"Step '{step.step_id}' uses {call.rule} (line {call.line}) before step "
                    f"'{rule.requires}' that proves it"
                )
        seen.add(step.step_id)


def run_steps(steps: List[DerivationStep], name: str, catalog: Optional[RuleCatalog] = None) -> ScriptReport:
    """Verifies ``steps`` in order, installing derived rules as their steps pass."""
    catalog = catalog or default_catalog()
    check_dependencies(steps, catalog)
    reports = []
    for step in steps:
        try:
            report = verify_step(step, catalog)
        except HarnackError as e:
            logger.warning("Step %s errored: %s", step.step_id, e)
            first = step.claims[0] if step.claims else Claim(lhs="")
            report = StepReport(
                step_id=step.step_id,
                provenance=step.provenance,
                passed=False,
                claims=[ClaimReport(lhs=first.lhs, rhs=first.rhs or "", error=str(e))],
            )
        if report.passed:
            report.installed_rules = catalog.mark_proven(step.step_id)
        logger.info("Step %s: %s", step.step_id, "PASS" if report.passed else "FAIL")
        reports.append(report)
    return ScriptReport(script=name, steps=reports, passed=all(r.passed for r in reports))


def run_script(source: Union[str, Path], catalog: Optional[RuleCatalog] = None) -> ScriptReport:
    """Parses and runs a script file.

    Args:
        source: Path to the script.
        catalog: Rule catalog; a fresh default catalog when omitted.

    Returns:
        A ``ScriptReport``; an empty file yields an empty passing report.

    Raises:
        IOError: If the file cannot be read.
        ScriptError: If the file does not parse.
        DependencyError: If a derived rule is used before the step proving it.
    """
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IOError(f"Failed to read derivation script {path}: {e}")
    return run_steps(parse_script(text), str(path), catalog)


def bundled_script(name: str = "harnack_proof.drv") -> Path:
    """Path of a script shipped in ``harnack_verify/assets``."""
    return Path(str(resources.files("harnack_verify") / "assets" / name))


__all__ = [
    "Claim",
    "DerivationStep",
    "RuleCall",
    "bundled_script",
    "check_dependencies",
    "parse_script",
    "proportionality",
    "run_script",
    "run_steps",
    "verify_claim",
    "verify_step",
]
