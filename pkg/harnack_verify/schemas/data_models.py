from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator


class RuleTrace(BaseModel):
    """One rule application recorded while checking a claim.

    Attributes:
        rule: Catalog name of the rule.
        selector: Selector text, e.g. ``all`` or ``at(R[m,n,_,_])``.
        side: Which side of the claim was rewritten (``lhs`` or ``rhs``).
        rewrites: Number of rewrites performed.
        terms_after: Number of terms in the canonical expression afterwards.
    """

    rule: str = Field(description="Catalog name of the rule.")
    selector: str = Field(description="Selector text, e.g. 'all' or 'at(R[m,n,_,_])'.")
    side: str = Field(description="Which side of the claim was rewritten ('lhs' or 'rhs').")
    rewrites: int = Field(description="Number of rewrites performed.")
    terms_after: int = Field(description="Number of terms in the canonical expression afterwards.")


class ClaimReport(BaseModel):
    """Outcome of checking one ``lhs = rhs`` claim of a derivation step.

    Attributes:
        lhs: The left-hand side as written.
        rhs: The right-hand side as written.
        canonical_lhs: Canonical form of the rewritten left-hand side.
        canonical_rhs: Canonical form of the rewritten right-hand side.
        passed: Whether the claim holds.
        residual_terms: Number of terms in canonical(lhs' - rhs').
        residual: Residual terms, rendered in the derivation DSL.
        first_mismatch: The first residual term, if any.
        solved_factor: For solve-mode claims, c with lhs' - rhs = c (lhs - rhs).
        trace: Rule applications in order.
        error: Error message when the claim could not be evaluated.
    """

    lhs: str = Field(description="The left-hand side as written.")
    rhs: str = Field(description="The right-hand side as written.")
    canonical_lhs: str = Field(default="", description="Canonical form of the rewritten lhs.")
    canonical_rhs: str = Field(default="", description="Canonical form of the rewritten rhs.")
    passed: bool = Field(default=False, description="Whether the claim holds.")
    residual_terms: int = Field(default=0, description="Number of terms in canonical(lhs' - rhs').")
    residual: List[str] = Field(default_factory=list, description="Residual terms in DSL form.")
    first_mismatch: Optional[str] = Field(default=None, description="The first residual term.")
    solved_factor: Optional[str] = Field(
        default=None, description="For solve-mode claims, c with lhs' - rhs = c (lhs - rhs)."
    )
    trace: List[RuleTrace] = Field(default_factory=list, description="Rule applications in order.")
    error: Optional[str] = Field(default=None, description="Error message, if evaluation failed.")


class StepReport(BaseModel):
    """Verdict for one derivation step.

    Attributes:
        step_id: Identifier of the step.
        provenance: Where the step comes from, free text.
        passed: True iff every claim of the step holds.
        claims: Per-claim reports.
        installed_rules: Derived rules that became available because the step passed.
    """

    step_id: str = Field(description="Identifier of the step.")
    provenance: str = Field(default="", description="Where the step comes from, free text.")
    passed: bool = Field(description="True iff every claim of the step holds.")
    claims: List[ClaimReport] = Field(default_factory=list, description="Per-claim reports.")
    installed_rules: List[str] = Field(
        default_factory=list, description="Derived rules installed because the step passed."
    )

    @property
    def residual_terms(self) -> int:
        return sum(c.residual_terms for c in self.claims)


class ScriptReport(BaseModel):
    """Verdicts for every step of a derivation script, in file order.

    Attributes:
        script: Path or name of the script.
        steps: Step reports in order.
        passed: True iff every step passed (an empty script passes).
    """

    script: str = Field(description="Path or name of the script.")
    steps: List[StepReport] = Field(default_factory=list, description="Step reports in order.")
    passed: bool = Field(default=True, description="True iff every step passed.")

    def summary(self) -> str:
        lines = []
        for step in self.steps:
            status = "PASS" if step.passed else "FAIL"
            detail = "" if step.passed else f" ({step.residual_terms} residual term(s))"
            lines.append(f"{status} {step.step_id}{detail}")
            for claim in step.claims:
                if claim.error:
                    lines.append(f"    error: {claim.error}")
                elif claim.first_mismatch:
                    lines.append(f"    first mismatch: {claim.first_mismatch}")
        n_passed = sum(1 for s in self.steps if s.passed)
        lines.append(f"{n_passed}/{len(self.steps)} step(s) passed")
        return "\n".join(lines)


class RunConfig(BaseModel):
    """Parameters shared by randomized and finite-difference checks.

    Attributes:
        seed: Base seed; trial k uses seed + k.
        trials: Number of random trials.
        tolerance: Relative tolerance for randomized equality.
        dimensions: Manifold dimensions cycled through by the trials.
        fd_step: Finite-difference step in t.
        fd_tolerance: Tolerance for finite-difference residuals.
    """

    seed: int = Field(default=0, description="Base seed; trial k uses seed + k.")
    trials: int = Field(default=100, description="Number of random trials.")
    tolerance: float = Field(default=1e-10, description="Relative tolerance for randomized equality.")
    dimensions: List[int] = Field(default_factory=lambda: [3, 4, 5], description="Dimensions tried.")
    fd_step: float = Field(default=1e-4, description="Finite-difference step in t.")
    fd_tolerance: float = Field(default=1e-6, description="Tolerance for finite-difference residuals.")

    @field_validator("trials")
    @classmethod
    def _positive_trials(cls, value: int) -> int:
        if value < 1:
            raise ValueError("trials must be at least 1")
        return value

    @field_validator("tolerance", "fd_tolerance")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("tolerances must be non-negative")
        return value

    @field_validator("fd_step")
    @classmethod
    def _positive_step(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("fd_step must be positive")
        return value

    @field_validator("dimensions")
    @classmethod
    def _valid_dimensions(cls, value: List[int]) -> List[int]:
        if not value or any(n < 2 for n in value):
            raise ValueError("dimensions must be a non-empty list of integers >= 2")
        return value


class DenseTensorRecord(BaseModel):
    """JSON form of a dense tensor: dimension, rank and row-major data.

    Attributes:
        n: Dimension of every axis.
        rank: Number of axes.
        data: Row-major entries, n**rank of them.
    """

    n: int = Field(description="Dimension of every axis.")
    rank: int = Field(description="Number of axes.")
    data: List[float] = Field(description="Row-major entries, n**rank of them.")


class CurvaturePointRecord(BaseModel):
    """JSON form of the curvature data at one point and time.

    Attributes:
        n: Manifold dimension.
        t: Time parameter, strictly positive.
        Rm: Riemann tensor R_abcd.
        Rc: Ricci tensor.
        R: Scalar curvature.
        gradRc: grad_a Rc_bc.
        gradRm: grad_e R_abcd (derivative slot first).
        lapRc: Laplacian of Rc.
        hessR: Hessian of the scalar curvature.
    """

    n: int = Field(description="Manifold dimension.")
    t: float = Field(description="Time parameter, strictly positive.")
    Rm: DenseTensorRecord = Field(description="Riemann tensor R_abcd.")
    Rc: DenseTensorRecord = Field(description="Ricci tensor.")
    R: float = Field(description="Scalar curvature.")
    gradRc: DenseTensorRecord = Field(description="grad_a Rc_bc.")
    gradRm: DenseTensorRecord = Field(description="grad_e R_abcd, derivative slot first.")
    lapRc: DenseTensorRecord = Field(description="Laplacian of Rc.")
    hessR: DenseTensorRecord = Field(description="Hessian of the scalar curvature.")

    @field_validator("t")
    @classmethod
    def _positive_time(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("t must be strictly positive")
        return value


class IdentityVerdict(BaseModel):
    """Result of a randomized numeric equality check.

    Attributes:
        passed: Whether every trial stayed within tolerance.
        trials: Number of trials run.
        worst_deviation: Largest relative deviation observed.
        worst_seed: Seed of the trial with the largest deviation.
        worst_dimension: Dimension of that trial.
        family: Model family the expressions were evaluated on.
    """

    passed: bool = Field(description="Whether every trial stayed within tolerance.")
    trials: int = Field(description="Number of trials run.")
    worst_deviation: float = Field(description="Largest relative deviation observed.")
    worst_seed: int = Field(description="Seed of the trial with the largest deviation.")
    worst_dimension: int = Field(description="Dimension of that trial.")
    family: str = Field(description="Model family the expressions were evaluated on.")


class SphereRow(BaseModel):
    """One time sample of the shrinking-sphere check.

    Attributes:
        t: Time.
        K: Sectional curvature at t.
        z_min: Smallest eigenvalue of Z_ab.
        z_max: Largest eigenvalue of Z_ab.
        traceZ: Trace of Z_ab.
        mt_residual: Max-norm residual of the Z_ab evolution equation.
        mt_relative: The same residual divided by max(1, max-norm of dZ/dt).
        trace_residual: Residual of the traced evolution equation, relative to its size.
        trace_supersolution: (d/dt - Lap) Z + (2/t) Z for the trace; nonnegative.
    """

    t: float = Field(description="Time.")
    K: float = Field(description="Sectional curvature at t.")
    z_min: float = Field(description="Smallest eigenvalue of Z_ab.")
    z_max: float = Field(description="Largest eigenvalue of Z_ab.")
    traceZ: float = Field(description="Trace of Z_ab.")
    mt_residual: float = Field(description="Max-norm residual of the Z_ab evolution equation.")
    mt_relative: float = Field(description="mt_residual divided by max(1, max-norm of dZ/dt).")
    trace_residual: float = Field(description="Relative residual of the traced evolution equation.")
    trace_supersolution: float = Field(description="(d/dt - Lap) Z + (2/t) Z for the trace.")


class SphereReport(BaseModel):
    """A t-sweep on the shrinking round sphere.

    Attributes:
        n: Dimension.
        K0: Initial sectional curvature.
        step: Finite-difference step relative to t.
        tolerance: Residual tolerance.
        passed: Whether every row is within tolerance and Z stays positive definite.
        rows: Samples in increasing t.
    """

    n: int = Field(description="Dimension.")
    K0: float = Field(description="Initial sectional curvature.")
    step: float = Field(description="Finite-difference step.")
    tolerance: float = Field(description="Residual tolerance.")
    passed: bool = Field(description="Whether every row is within tolerance and Z > 0.")
    rows: List[SphereRow] = Field(default_factory=list, description="Samples in increasing t.")


class QuadraticReport(BaseModel):
    """Inverse curvature operator, minimizer and Z at one point.

    Attributes:
        n: Dimension.
        W: The vector argument.
        inverse_residual: max |S.R - I| over all slots.
        U_star: The minimizing 2-form, row-major n x n.
        Z_at_minimum: Z(U*, W).
        WZW: Z_ab W_a W_b.
        z_eigenvalues: Eigenvalues of Z_ab in increasing order.
        brute_force_match: Whether the independent linear solve agrees with U*.
        trace_z: Z_aa computed directly.
        trace_z_formula: Z_aa from the scalar-curvature formula.
        extras: Optional further values (e.g. trace Harnack quantity).
    """

    n: int = Field(description="Dimension.")
    W: List[float] = Field(description="The vector argument.")
    inverse_residual: float = Field(description="max |S.R - I| over all slots.")
    U_star: List[float] = Field(description="The minimizing 2-form, row-major n x n.")
    Z_at_minimum: float = Field(description="Z(U*, W).")
    WZW: float = Field(description="Z_ab W_a W_b.")
    z_eigenvalues: List[float] = Field(description="Eigenvalues of Z_ab in increasing order.")
    brute_force_match: bool = Field(description="Whether the independent linear solve agrees.")
    trace_z: float = Field(description="Z_aa computed directly.")
    trace_z_formula: float = Field(description="Z_aa from the scalar-curvature formula.")
    extras: Dict[str, float] = Field(default_factory=dict, description="Optional further values.")
