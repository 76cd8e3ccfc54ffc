"""The rule catalog used by derivation scripts.

Evolution equations are axioms. Derived rules (the gradient and evolution of the
inverse curvature operator and three algebraic shortcuts) name the derivation step that
proves them and stay unavailable until that step has passed in the current run.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set

from harnack_verify.errors import RuleError
from harnack_verify.rewrite.rules import (
    GradLeibnizRule,
    HeatLeibnizRule,
    IdentityContractionRule,
    LabelSwapCancellationRule,
    PatternRule,
    RewriteRule,
)
from harnack_verify.rewrite.selectors import parse_selector
from harnack_verify.tensor.expr import TensorExpr

logger = logging.getLogger(__name__)

GRAD_INVERSE_STEP = "grad-inverse"
HEAT_INVERSE_STEP = "heat-inverse"
B_SKEW_STEP = "b-skew"
SR_HALF_STEP = "sr-half"
P_SQUARE_STEP = "p-square"

_B_SUM = "B[a,b,c,d] - B[a,b,d,c] + B[a,c,b,d] - B[a,d,b,c]"

_EVO_S = (
    "-2*S[i,j,m,n]*S[k,l,p,q]*(B[m,n,p,q] - B[m,n,q,p] + B[m,p,n,q] - B[m,q,n,p])"
    " - (S[i,j,r,s]*S[m,n,x,y]*S[k,l,p,q] + S[i,j,m,n]*S[k,l,r,s]*S[p,q,x,y])"
    "*grad[v](R[r,s,x,y])*grad[v](R[m,n,p,q])"
)

_EVO_M = (
    "2*Rc[c,d]*grad[c](P[d,a,b]) + 2*Rc[c,d]*grad[c](P[d,b,a]) + 2*R[a,c,b,d]*M[c,d]"
    " + 2*P[a,c,d]*P[b,c,d] - 4*P[a,c,d]*P[b,d,c] + 2*Rc[c,d]*Rc[c,e]*R[a,d,b,e]"
    " - 1/2*t^-2*Rc[a,b]"
)

_EVO_P = (
    "-2*Rc[d,e]*grad[d](R[a,b,c,e]) + 2*R[a,d,b,e]*P[d,e,c] + 2*R[a,d,c,e]*P[d,b,e]"
    " + 2*R[b,d,c,e]*P[a,d,e]"
)

_M_DEF = (
    "grad[c](grad[c](Rc[a,b])) - 1/2*grad[a](grad[b](Scal)) + 2*R[a,c,b,d]*Rc[c,d]"
    " - Rc[a,c]*Rc[b,c] + 1/2*t^-1*Rc[a,b]"
)

_K_DEF = (
    "S[i,j,r,s]*P[i,j,a]*grad[v](R[r,s,x,y]) - grad[v](P[x,y,a]) + R[x,y,a,w]*Rc[v,w]"
    " + 1/2*t^-1*R[x,y,a,v]"
)

_L_DEF = "2*Y[N;i,d]*Y[M;j,d]*E[i,j,a] + Y[N;a,h]*X[M;h] - Y[M;a,h]*X[N;h]"


def _rules() -> List[RewriteRule]:
    return [
        HeatLeibnizRule("LEIB-HEAT", "heat of a product expands with a -2 grad.grad cross term"),
        GradLeibnizRule("LEIB-GRAD", "covariant derivative of a product"),
        PatternRule(
            "EVO-R",
            "heat(R_abcd) = 2(B_abcd - B_abdc + B_acbd - B_adbc)",
            axiom=True,
            alternatives=[("heat(R[a,b,c,d])", "2*(" + _B_SUM + ")")],
        ),
        PatternRule(
            "EVO-P",
            "heat(P_abc) in an evolving orthonormal frame",
            axiom=True,
            alternatives=[("heat(P[a,b,c])", _EVO_P)],
        ),
        PatternRule(
            "EVO-M",
            "heat(M_ab) in an evolving orthonormal frame",
            axiom=True,
            alternatives=[("heat(M[a,b])", _EVO_M)],
        ),
        PatternRule(
            "EVO-S",
            "heat(S_ijkl) derived from heat(R) and the inverse relation",
            requires=HEAT_INVERSE_STEP,
            checks=(),
            alternatives=[("heat(S[i,j,k,l])", _EVO_S)],
        ),
        PatternRule(
            "B-DEF",
            "B_abcd = R_aebf R_cedf",
            alternatives=[("B[a,b,c,d]", "R[a,e,b,f]*R[c,e,d,f]")],
            family="bianchi",
        ),
        PatternRule(
            "INV",
            "S_abef R_efcd = I_abcd = R_abef S_efcd",
            alternatives=[
                ("S[a,b,e,f]*R[e,f,c,d]", "I[a,b,c,d]"),
                ("R[a,b,e,f]*S[e,f,c,d]", "I[a,b,c,d]"),
            ],
            family="bianchi",
        ),
        IdentityContractionRule(
            "I-CONTRACT",
            "I_abcd T_..c..d.. = T_..a..b.. for T antisymmetric in the contracted slots",
            checks=[("I[a,b,c,d]*U[c,d]", "U[a,b]"), ("I[a,b,c,d]*P[c,d,e]", "P[a,b,e]")],
            family="bianchi",
        ),
        PatternRule(
            "GRAD-S",
            "grad_v S_ijkl = -S_ijmn grad_v R_mnpq S_pqkl",
            requires=GRAD_INVERSE_STEP,
            alternatives=[
                ("grad[v](S[i,j,k,l])", "-S[i,j,m,n]*grad[v](R[m,n,p,q])*S[p,q,k,l]")
            ],
        ),
        PatternRule(
            "BIANCHI-1",
            "R_abcd = R_acbd - R_adbc",
            alternatives=[("R[a,b,c,d]", "R[a,c,b,d] - R[a,d,b,c]")],
            family="bianchi",
        ),
        PatternRule(
            "BIANCHI-2",
            "grad_e R_abcd = -grad_a R_becd - grad_b R_eacd",
            alternatives=[
                ("grad[e](R[a,b,c,d])", "-grad[a](R[b,e,c,d]) - grad[b](R[e,a,c,d])")
            ],
        ),
        PatternRule(
            "BIANCHI-2C",
            "contracted second Bianchi identities",
            alternatives=[
                ("grad[v](R[r,s,b,v])", "-P[r,s,b]"),
                ("grad[v](Rc[v,a])", "1/2*grad[a](Scal)"),
            ],
        ),
        PatternRule(
            "RIC-TRACE",
            "R_xbxd = Rc_bd",
            alternatives=[("R[x,b,x,d]", "Rc[b,d]")],
        ),
        PatternRule(
            "RC-TRACE",
            "Rc_aa = Scal",
            alternatives=[("Rc[a,a]", "Scal")],
        ),
        PatternRule(
            "P-DEF",
            "P_abc = grad_a Rc_bc - grad_b Rc_ac",
            alternatives=[("P[a,b,c]", "grad[a](Rc[b,c]) - grad[b](Rc[a,c])")],
        ),
        PatternRule(
            "M-DEF",
            "M_ab = Lap Rc_ab - 1/2 Hess_ab Scal + 2 R_acbd Rc_cd - Rc_ac Rc_bc + Rc_ab/(2t)",
            alternatives=[("M[a,b]", _M_DEF)],
        ),
        PatternRule(
            "Z-DEF",
            "Z_ab = M_ab - S_ijkl P_ija P_klb",
            alternatives=[("Z[a,b]", "M[a,b] - S[i,j,k,l]*P[i,j,a]*P[k,l,b]")],
        ),
        PatternRule(
            "K-DEF",
            "K_avxy = S_ijrs P_ija grad_v R_rsxy - grad_v P_xya + R_xyaw Rc_vw + R_xyav/(2t)",
            alternatives=[("K[a,v,x,y]", _K_DEF)],
        ),
        PatternRule(
            "L-DEF",
            "L_a^NM = 2 Y^N_id Y^M_jd E_ija + Y^N_ah X^M_h - Y^M_ah X^N_h",
            alternatives=[("L[N,M;a]", _L_DEF)],
            family="frames",
        ),
        PatternRule(
            "RICCI-COMM",
            "grad_v grad_b Rc_va = grad_b grad_v Rc_va + Rc_bw Rc_wa - R_bvaw Rc_vw",
            alternatives=[
                (
                    "grad[v](grad[b](Rc[v,a]))",
                    "grad[b](grad[v](Rc[v,a])) + Rc[b,w]*Rc[w,a] - R[b,v,a,w]*Rc[v,w]",
                )
            ],
        ),
        PatternRule(
            "COMPLETE-YY",
            "sum_N Y^N_ab Y^N_cd = R_abcd",
            alternatives=[("Y[N;a,b]*Y[N;c,d]", "R[a,b,c,d]")],
            family="frames",
        ),
        PatternRule(
            "COMPLETE-YX",
            "sum_N Y^N_ab X^N_c = P_abc",
            alternatives=[("Y[N;a,b]*X[N;c]", "P[a,b,c]")],
            family="frames",
        ),
        PatternRule(
            "COMPLETE-XX",
            "sum_N X^N_a X^N_b = M_ab",
            alternatives=[("X[N;a]*X[N;b]", "M[a,b]")],
            family="frames",
        ),
        PatternRule(
            "E-DEF",
            "E_ija = S_ijkl P_kla",
            alternatives=[("E[i,j,a]", "S[i,j,k,l]*P[k,l,a]")],
        ),
        LabelSwapCancellationRule(
            "SYM-ANTISYM-ZERO",
            "a label sum that a swap of two summed labels sends to its negative vanishes",
        ),
        PatternRule(
            "B-SKEW",
            "B_abcd contracted into an antisymmetric pair at (c,d) equals 1/4 R_abef R_cdef",
            requires=B_SKEW_STEP,
            alternatives=[("B[a,b,c,d]", "1/4*R[a,b,e,f]*R[c,d,e,f]")],
            side_pairs=[("c", "d")],
            checks=[("B[a,b,c,d]*U[c,d]", "1/4*R[a,b,e,f]*R[c,d,e,f]*U[c,d]")],
            family="bianchi",
        ),
        PatternRule(
            "SR-HALF",
            "2 S_dekl R_diej P_ija = P_kla",
            requires=SR_HALF_STEP,
            alternatives=[("S[d,e,k,l]*R[d,i,e,j]*P[i,j,a]", "1/2*P[k,l,a]")],
            family="bianchi",
        ),
        PatternRule(
            "P-SQUARE",
            "P_cda P_cdb = 2 P_acd P_bcd - 2 P_acd P_bdc",
            requires=P_SQUARE_STEP,
            alternatives=[("P[c,d,a]*P[c,d,b]", "2*P[a,c,d]*P[b,c,d] - 2*P[a,c,d]*P[b,d,c]")],
        ),
    ]


@dataclass
class RuleCatalog:
    """Named rules plus the set of derivation steps that have passed in this run.

    Attributes:
        rules: Rule name to rule.
        proven: Step ids that have passed; derived rules requiring them are usable.
    """

    rules: Dict[str, RewriteRule]
    proven: Set[str] = field(default_factory=set)

    def __contains__(self, name: str) -> bool:
        return name in self.rules

    def __iter__(self):
        return iter(self.rules.values())

    def get(self, name: str) -> RewriteRule:
        """Returns an installed rule.

        Raises:
            RuleError: If the rule is unknown or its proving step has not passed.
        """
        rule = self.rules.get(name)
        if rule is None:
            raise RuleError(f"Unknown rule '{name}'")
        if rule.requires is not None and rule.requires not in self.proven:
            raise RuleError(f"Rule '{name}' is not installed: step '{rule.requires}' has not passed")
        return rule

    def mark_proven(self, step_id: str) -> List[str]:
        """Records a passed step and returns the names of the rules it installs."""
        self.proven.add(step_id)
        installed = [r.name for r in self.rules.values() if r.requires == step_id]
        if installed:
            logger.info("Step %s installs %s", step_id, ", ".join(installed))
        return installed

    def installed_by(self, step_id: str) -> List[str]:
        return [r.name for r in self.rules.values() if r.requires == step_id]


def default_catalog(rules: Iterable[RewriteRule] = ()) -> RuleCatalog:
    """Builds a fresh catalog; extra ``rules`` replace built-ins with the same name."""
    table = {rule.name: rule for rule in _rules()}
    for rule in rules:
        table[rule.name] = rule
    return RuleCatalog(table)


def apply_rule(
    expr: TensorExpr, rule: str, where: str = "all", catalog: Optional[RuleCatalog] = None
) -> TensorExpr:
    """Applies the named rule at a selector and returns the canonical result.

    Args:
        expr: Expression to rewrite.
        rule: Catalog name, e.g. ``"INV"``.
        where: Selector text: ``all``, ``once``, ``nth(k)`` or ``at(<factor>)``.
        catalog: Catalog to look the rule up in; a fresh default catalog when omitted.

    Returns:
        The rewritten, canonicalized expression.

    Raises:
        RuleError: Unknown or not yet installed rule.
        RuleApplicationError: No match at the selector.
        SideConditionError: Matches exist but none meets the rule's side condition.

    Example:
        apply_rule(parse("S[a,b,e,f]*R[e,f,c,d]*U[c,d]"), "INV")  # I[a,b,c,d]*U[c,d]
    """
    catalog = catalog or default_catalog()
    result, _ = catalog.get(rule).apply(expr, parse_selector(where))
    return result


__all__ = [
    "B_SKEW_STEP",
    "GRAD_INVERSE_STEP",
    "HEAT_INVERSE_STEP",
    "P_SQUARE_STEP",
    "RuleCatalog",
    "SR_HALF_STEP",
    "apply_rule",
    "default_catalog",
]
