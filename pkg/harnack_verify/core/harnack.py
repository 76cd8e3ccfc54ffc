"""Pointwise numerics for the matrix Harnack quantities.

Conventions used throughout (all indices refer to an orthonormal frame, so sums
run over every index value):

- ``Rc_bd = R_abad``; on the round sphere ``R_abcd = K (d_ac d_bd - d_ad d_bc)``.
- ``I_abcd = 1/2 (d_ac d_bd - d_ad d_bc)`` is the identity on 2-forms and the
  inverse ``S`` satisfies ``S_abef R_efcd = I_abcd`` under the plain double sum.
- On the basis ``e_a ^ e_b`` (``a < b``) of 2-forms the curvature operator is the
  matrix ``Rmat[(ab),(cd)] = R_abcd``; then ``Smat = 1/4 Rmat^-1``.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from harnack_verify import config
from harnack_verify.errors import (
    FrameConstructionError,
    IntervalError,
    SingularCurvatureOperator,
    SingularRicci,
)
from harnack_verify.schemas.data_models import QuadraticReport, SphereReport, SphereRow

logger = logging.getLogger(__name__)

SUPERSOLUTION_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CurvaturePoint:
    """Curvature data at one point and time.

    Attributes:
        n: Dimension.
        t: Time, strictly positive.
        Rm: ``R_abcd``.
        Rc: ``Rc_ab``.
        R: Scalar curvature.
        gradRc: ``grad_a Rc_bc``.
        gradRm: ``grad_e R_abcd``, derivative axis first.
        lapRc: Laplacian of ``Rc``.
        hessR: Hessian of ``R``.
        grad2Rc: ``grad_a grad_b Rc_cd`` when known; needed for ``grad P``.
    """

    n: int
    t: float
    Rm: np.ndarray
    Rc: np.ndarray
    R: float
    gradRc: np.ndarray
    gradRm: np.ndarray
    lapRc: np.ndarray
    hessR: np.ndarray
    grad2Rc: Optional[np.ndarray] = field(default=None, compare=False)

    @classmethod
    def from_derivatives(
        cls,
        Rm: np.ndarray,
        t: float,
        gradRm: Optional[np.ndarray] = None,
        grad2Rc: Optional[np.ndarray] = None,
    ) -> "CurvaturePoint":
        """Builds a point whose contractions are consistent by construction.

        Missing derivative data is taken to vanish.
        """
        n = Rm.shape[0]
        gradRm = np.zeros((n,) * 5) if gradRm is None else gradRm
        grad2Rc = np.zeros((n,) * 4) if grad2Rc is None else grad2Rc
        Rc = np.einsum("abad->bd", Rm)
        return cls(
            n=n,
            t=t,
            Rm=Rm,
            Rc=Rc,
            R=float(np.trace(Rc)),
            gradRc=np.einsum("eabad->ebd", gradRm),
            gradRm=gradRm,
            lapRc=np.einsum("ccab->ab", grad2Rc),
            hessR=np.einsum("abcc->ab", grad2Rc),
            grad2Rc=grad2Rc,
        )

    def check(self, tolerance: float = config.CONSTRAINT_TOLERANCE) -> None:
        """Checks the contraction invariants.

        Raises:
            ValueError: If ``t <= 0`` or ``Rc``, ``R`` or ``gradRc`` disagree with
                the contractions of ``Rm`` and ``gradRm``.
        """
        if self.t <= 0:
            raise ValueError(f"t must be positive, got {self.t}")
        scale = max(1.0, float(np.abs(self.Rm).max()))
        if np.abs(np.einsum("abad->bd", self.Rm) - self.Rc).max() > tolerance * scale:
            raise ValueError("Rc is not the contraction R_abad of Rm")
        if abs(np.trace(self.Rc) - self.R) > tolerance * scale:
            raise ValueError("R is not the trace of Rc")
        grad_scale = max(1.0, float(np.abs(self.gradRm).max()))
        if np.abs(np.einsum("eabad->ebd", self.gradRm) - self.gradRc).max() > tolerance * grad_scale:
            raise ValueError("gradRc is not the contraction of gradRm")


@dataclass(frozen=True)
class HarnackState:
    """P, M, the inverse curvature operator S and Z at one point."""

    P: np.ndarray
    M: np.ndarray
    S: Optional[np.ndarray]
    Z: Optional[np.ndarray] = None


@lru_cache(maxsize=None)
def wedge_pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    """Index pairs ``(a, b)``, ``a < b``, labelling the basis of 2-forms."""
    return tuple((a, b) for a in range(n) for b in range(a + 1, n))


def curvature_matrix(Rm: np.ndarray) -> np.ndarray:
    """The curvature operator as a symmetric matrix on 2-forms."""
    pairs = wedge_pairs(Rm.shape[0])
    rows = np.array([p[0] for p in pairs], dtype=int)
    cols = np.array([p[1] for p in pairs], dtype=int)
    return Rm[rows[:, None], cols[:, None], rows[None, :], cols[None, :]]


def from_wedge_matrix(matrix: np.ndarray, n: int) -> np.ndarray:
    """Rank-4 tensor antisymmetric in both pairs with ``T[a,b,c,d] = matrix[(ab),(cd)]``."""
    out = np.zeros((n, n, n, n))
    for p, (a, b) in enumerate(wedge_pairs(n)):
        for q, (c, d) in enumerate(wedge_pairs(n)):
            value = matrix[p, q]
            out[a, b, c, d] = value
            out[b, a, c, d] = -value
            out[a, b, d, c] = -value
            out[b, a, d, c] = value
    return out


def identity_on_forms(n: int) -> np.ndarray:
    """``I_abcd = 1/2 (d_ac d_bd - d_ad d_bc)``."""
    delta = np.eye(n)
    return 0.5 * (np.einsum("ac,bd->abcd", delta, delta) - np.einsum("ad,bc->abcd", delta, delta))


def sphere_curvature(n: int, K: float) -> np.ndarray:
    """``R_abcd = K (d_ac d_bd - d_ad d_bc)``."""
    return 2.0 * K * identity_on_forms(n)


def build_PM(pt: CurvaturePoint) -> Tuple[np.ndarray, np.ndarray]:
    """Computes ``P_abc`` and ``M_ab``.

    ``P_abc = grad_a Rc_bc - grad_b Rc_ac`` and
    ``M_ab = Lap Rc_ab - 1/2 Hess_ab R + 2 R_acbd Rc_cd - Rc_ac Rc_bc + Rc_ab / (2t)``.

    Raises:
        IntervalError: If ``t <= 0``.
    """
    if pt.t <= 0:
        raise IntervalError(f"t must be positive, got {pt.t}")
    P = pt.gradRc - np.einsum("bac->abc", pt.gradRc)
    M = (
        pt.lapRc
        - 0.5 * pt.hessR
        + 2.0 * np.einsum("acbd,cd->ab", pt.Rm, pt.Rc)
        - pt.Rc @ pt.Rc.T
        + pt.Rc / (2.0 * pt.t)
    )
    return P, M


def invert_curvature_operator(Rm: np.ndarray, require_positive: bool = False) -> np.ndarray:
    """Inverse ``S`` of the curvature operator with ``S_abef R_efcd = I_abcd``.

    Args:
        Rm: Tensor with the curvature symmetries.
        require_positive: Log a warning when the operator is not positive definite.

    Returns:
        ``S`` with the curvature symmetries.

    Raises:
        SingularCurvatureOperator: If the smallest eigenvalue in absolute value is
            below ``SINGULAR_THRESHOLD`` times the largest.

    Example:
        S = invert_curvature_operator(sphere_curvature(3, 1.0))  # 1/4 (dd - dd)
    """
    n = Rm.shape[0]
    matrix = curvature_matrix(Rm)
    eigenvalues, vectors = linalg.eigh(matrix)
    largest = float(np.abs(eigenvalues).max()) if eigenvalues.size else 0.0
    smallest = eigenvalues[np.argmin(np.abs(eigenvalues))] if eigenvalues.size else 0.0
    if largest == 0.0 or abs(smallest) < config.SINGULAR_THRESHOLD * largest:
        raise SingularCurvatureOperator(
            f"Curvature operator is singular: eigenvalue {smallest:.3e} "
            f"(largest {largest:.3e})",
            float(smallest),
        )
    if require_positive and eigenvalues.min() <= 0:
        logger.warning("Curvature operator is not positive: eigenvalue %.3e", eigenvalues.min())
    inverse = (vectors / eigenvalues) @ vectors.T
    return from_wedge_matrix(0.25 * inverse, n)


def inverse_residual(S: np.ndarray, Rm: np.ndarray) -> float:
    """``max |S_abef R_efcd - I_abcd|``."""
    return float(np.abs(np.einsum("abef,efcd->abcd", S, Rm) - identity_on_forms(Rm.shape[0])).max())


def z_tensor(P: np.ndarray, M: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``Z_ab = M_ab - S_ijkl P_ija P_klb``, symmetrized.

    Raises:
        ValueError: If the unsymmetrized result is asymmetric beyond round-off.
    """
    Z = M - np.einsum("ijkl,ija,klb->ab", S, P, P)
    scale = max(1.0, float(np.abs(Z).max()))
    asymmetry = float(np.abs(Z - Z.T).max())
    if asymmetry > config.CONSTRAINT_TOLERANCE * scale:
        raise ValueError(f"Z_ab is not symmetric: asymmetry {asymmetry:.3e}")
    return 0.5 * (Z + Z.T)


def harnack_state(pt: CurvaturePoint, require_positive: bool = True) -> HarnackState:
    """P, M, S and Z at ``pt``.

    Raises:
        IntervalError: If ``t <= 0``.
        SingularCurvatureOperator: If the curvature operator is singular.
    """
    P, M = build_PM(pt)
    S = invert_curvature_operator(pt.Rm, require_positive)
    return HarnackState(P=P, M=M, S=S, Z=z_tensor(P, M, S))


def _check_vectors(n: int, U: np.ndarray, W: np.ndarray) -> None:
    if U.shape != (n, n) or W.shape != (n,):
        raise ValueError(f"Expected U of shape ({n}, {n}) and W of shape ({n},), got {U.shape} and {W.shape}")
    if np.abs(U + U.T).max() > config.CONSTRAINT_TOLERANCE * max(1.0, float(np.abs(U).max())):
        raise ValueError("U must be antisymmetric")


def harnack_quadratic(state: HarnackState, Rm: np.ndarray, U: np.ndarray, W: np.ndarray) -> float:
    """``Z(U, W) = M_ab W_a W_b + 2 P_abc U_ab W_c + R_abcd U_ab U_cd``.

    Raises:
        ValueError: Shape mismatch or ``U`` not antisymmetric.
    """
    _check_vectors(Rm.shape[0], U, W)
    return float(
        W @ state.M @ W
        + 2.0 * np.einsum("abc,ab,c->", state.P, U, W)
        + np.einsum("abcd,ab,cd->", Rm, U, U)
    )


def minimizing_U(state: HarnackState, W: np.ndarray) -> np.ndarray:
    """``U_ab = -S_abij P_ijp W_p``, the 2-form minimizing ``Z(., W)``.

    Raises:
        ValueError: If the state carries no inverse curvature operator.
    """
    if state.S is None:
        raise ValueError("Minimizing 2-form needs the inverse curvature operator S")
    return -np.einsum("abij,ijp,p->ab", state.S, state.P, W)


def brute_force_minimizer(state: HarnackState, Rm: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Minimizer of ``Z(., W)`` from the stationarity system on the 2-form basis.

    In coordinates ``u_(ab)``, ``a < b``, the quadratic reads
    ``MWW + 4 p.u + 4 u.Rmat.u`` with ``p_(ab) = P_abc W_c``.
    """
    n = Rm.shape[0]
    pairs = wedge_pairs(n)
    p = np.array([state.P[a, b] @ W for a, b in pairs])
    u = linalg.solve(curvature_matrix(Rm), -0.5 * p, assume_a="sym")
    U = np.zeros((n, n))
    for value, (a, b) in zip(u, pairs):
        U[a, b], U[b, a] = value, -value
    return U


def trace_z(state: HarnackState, pt: CurvaturePoint) -> Tuple[float, float]:
    """``Z_aa`` computed directly and from ``1/2 (Lap R + 2|Rc|^2 + R/t) - S_ijkl P_ija P_kla``."""
    direct = float(np.trace(state.Z if state.Z is not None else z_tensor(state.P, state.M, state.S)))
    lap_R = float(np.trace(pt.lapRc))
    formula = 0.5 * (lap_R + 2.0 * float(np.sum(pt.Rc * pt.Rc)) + pt.R / pt.t) - float(
        np.einsum("ijkl,ija,kla->", state.S, state.P, state.P)
    )
    return direct, formula


def scalar_time_derivative(pt: CurvaturePoint) -> float:
    """``dR/dt = Lap R + 2 |Rc|^2`` along the flow."""
    return float(np.trace(pt.lapRc) + 2.0 * np.sum(pt.Rc * pt.Rc))


def scalar_gradient(pt: CurvaturePoint) -> np.ndarray:
    return np.einsum("acc->a", pt.gradRc)


def trace_harnack_vector(pt: CurvaturePoint, V: np.ndarray) -> float:
    """``dR/dt + R/t + 2 grad_a R V_a + 2 Rc_ab V_a V_b``."""
    return float(
        scalar_time_derivative(pt) + pt.R / pt.t + 2.0 * scalar_gradient(pt) @ V + 2.0 * V @ pt.Rc @ V
    )


def trace_harnack_minimum(pt: CurvaturePoint) -> Tuple[float, np.ndarray]:
    """Minimum over ``V`` of the trace quantity and the minimizer ``V* = -1/2 Rc^-1 grad R``.

    Raises:
        SingularRicci: If ``Rc`` is singular.
    """
    eigenvalues = linalg.eigvalsh(pt.Rc)
    largest = float(np.abs(eigenvalues).max())
    smallest = float(eigenvalues[np.argmin(np.abs(eigenvalues))])
    if largest == 0.0 or abs(smallest) < config.SINGULAR_THRESHOLD * largest:
        raise SingularRicci(f"Ricci tensor is singular: eigenvalue {smallest:.3e}")
    grad_R = scalar_gradient(pt)
    solved = linalg.solve(pt.Rc, grad_R, assume_a="sym")
    value = scalar_time_derivative(pt) + pt.R / pt.t - 0.5 * float(grad_R @ solved)
    return value, -0.5 * solved


def trace_from_quadratic(state: HarnackState, pt: CurvaturePoint, V: np.ndarray) -> float:
    """``sum_c Z(U^c, e_c)`` with ``U^c_ab = 1/2 (V_a d_bc - V_b d_ac)``.

    Equals half of ``trace_harnack_vector(pt, V)`` on consistent curvature data.
    """
    total = 0.0
    for W in np.eye(pt.n):
        U = 0.5 * (np.outer(V, W) - np.outer(W, V))
        total += harnack_quadratic(state, pt.Rm, U, W)
    return total


def joint_minimum(state: HarnackState, Rm: np.ndarray) -> float:
    """Minimum over unit ``W`` of ``min_U Z(U, W)``.

    The smallest eigenvalue of the Schur complement of the joint quadratic form on
    ``2-forms + vectors``; agrees with the smallest eigenvalue of ``Z``.
    """
    n = Rm.shape[0]
    pairs = wedge_pairs(n)
    Rmat = curvature_matrix(Rm)
    Pw = np.array([state.P[a, b] for a, b in pairs])
    # Z(u, W) = W.M.W + 4 u.Pw.W + 4 u.Rmat.u
    joint = np.block([[4.0 * Rmat, 2.0 * Pw], [2.0 * Pw.T, state.M]])
    schur = joint[len(pairs) :, len(pairs) :] - joint[len(pairs) :, : len(pairs)] @ linalg.solve(
        joint[: len(pairs), : len(pairs)], joint[: len(pairs), len(pairs) :], assume_a="sym"
    )
    return float(linalg.eigvalsh(0.5 * (schur + schur.T)).min())


def quadratic_report(pt: CurvaturePoint, W: np.ndarray) -> QuadraticReport:
    """Inverse residual, minimizing 2-form and Z at one point for the vector ``W``.

    Raises:
        IntervalError: If ``t <= 0``.
        SingularCurvatureOperator: If the curvature operator is singular.
    """
    state = harnack_state(pt)
    U = minimizing_U(state, W)
    brute = brute_force_minimizer(state, pt.Rm, W)
    direct, formula = trace_z(state, pt)
    extras = {"joint_minimum": joint_minimum(state, pt.Rm)}
    try:
        extras["trace_harnack_minimum"] = trace_harnack_minimum(pt)[0]
    except SingularRicci:
        logger.info("Ricci tensor is singular; skipping the trace Harnack minimum")
    return QuadraticReport(
        n=pt.n,
        W=[float(w) for w in W],
        inverse_residual=inverse_residual(state.S, pt.Rm),
        U_star=U.reshape(-1).tolist(),
        Z_at_minimum=harnack_quadratic(state, pt.Rm, U, W),
        WZW=float(W @ state.Z @ W),
        z_eigenvalues=linalg.eigvalsh(state.Z).tolist(),
        brute_force_match=bool(np.allclose(U, brute, rtol=1e-9, atol=1e-9)),
        trace_z=direct,
        trace_z_formula=formula,
        extras=extras,
    )


@dataclass(frozen=True)
class SphereFamily:
    """The shrinking round sphere ``K(t) = K0 / (1 - 2(n-1) K0 t)``."""

    n: int
    K0: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Dimension must be at least 2, got {self.n}")
        if self.K0 <= 0:
            raise ValueError(f"K0 must be positive, got {self.K0}")

    @property
    def blow_up(self) -> float:
        return 1.0 / (2.0 * (self.n - 1) * self.K0)

    def contains(self, t: float) -> bool:
        return 0.0 < t < self.blow_up

    def K(self, t: float) -> float:
        if not self.contains(t):
            raise IntervalError(f"t={t} is outside the valid interval (0, {self.blow_up})")
        return self.K0 / (1.0 - 2.0 * (self.n - 1) * self.K0 * t)


def sphere_point(family: SphereFamily, t: float) -> CurvaturePoint:
    """Curvature of the shrinking sphere at time ``t``; all derivative fields vanish.

    Raises:
        IntervalError: If ``t`` is outside ``(0, 1/(2(n-1)K0))``.
    """
    return CurvaturePoint.from_derivatives(sphere_curvature(family.n, family.K(t)), t)


def frame_decomposition(Rm: np.ndarray, P: np.ndarray, M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Frames ``Y^N``, ``X^N`` with ``sum YY = Rm``, ``sum YX = P`` and ``sum XX = M``.

    Built from the eigendecomposition of the Gram matrix ``[[Rmat, Pw], [Pw^T, M]]``
    on ``2-forms + vectors``; there are ``n(n+1)/2`` frames.

    Raises:
        FrameConstructionError: If the Gram matrix is not positive semidefinite.
    """
    n = Rm.shape[0]
    pairs = wedge_pairs(n)
    Pw = np.array([P[a, b] for a, b in pairs]).reshape(len(pairs), n)
    gram = np.block([[curvature_matrix(Rm), Pw], [Pw.T, M]])
    eigenvalues, vectors = linalg.eigh(0.5 * (gram + gram.T))
    scale = max(1.0, float(np.abs(eigenvalues).max()))
    if eigenvalues.min() < -config.SINGULAR_THRESHOLD * scale:
        raise FrameConstructionError(
            f"Cannot write the Harnack form as a sum of squares: eigenvalue {eigenvalues.min():.3e}"
        )
    columns = vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    m = columns.shape[1]
    Y = np.zeros((m, n, n))
    for p, (a, b) in enumerate(pairs):
        Y[:, a, b] = columns[p]
        Y[:, b, a] = -columns[p]
    X = columns[len(pairs) :].T
    return Y, X


def k_tensor(
    pt: CurvaturePoint, P: np.ndarray, S: np.ndarray, gradP: Optional[np.ndarray] = None
) -> np.ndarray:
    """``K_avxy = S_ijrs P_ija grad_v R_rsxy - grad_v P_xya + R_xyaw Rc_vw + R_xyav / (2t)``.

    ``gradP[v, x, y, a]`` defaults to the value derived from ``pt.grad2Rc``.

    Raises:
        ValueError: If neither ``gradP`` nor ``pt.grad2Rc`` is available.
    """
    if gradP is None:
        if pt.grad2Rc is None:
            raise ValueError("K_avxy needs grad P or the second derivatives of Rc")
        gradP = pt.grad2Rc - np.einsum("vbac->vabc", pt.grad2Rc)
    return (
        np.einsum("ijrs,ija,vrsxy->avxy", S, P, pt.gradRm)
        - np.einsum("vxya->avxy", gradP)
        + np.einsum("xyaw,vw->avxy", pt.Rm, pt.Rc)
        + np.einsum("xyav->avxy", pt.Rm) / (2.0 * pt.t)
    )


def l_tensor(Y: np.ndarray, X: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``L^NM_a = 2 Y^N_id Y^M_jd E_ija + Y^N_ah X^M_h - Y^M_ah X^N_h``, shape ``(m, m, n)``."""
    return (
        2.0 * np.einsum("Nid,Mjd,ija->NMa", Y, Y, E)
        + np.einsum("Nah,Mh->NMa", Y, X)
        - np.einsum("Mah,Nh->NMa", Y, X)
    )


def mt_rhs(pt: CurvaturePoint, state: Optional[HarnackState] = None) -> np.ndarray:
    """``2 S_mnxy K_avxy K_bvmn + sum L^NM_a L^NM_b - (2/t) Z_ab`` at ``pt``."""
    state = state or harnack_state(pt)
    K = k_tensor(pt, state.P, state.S)
    Y, X = frame_decomposition(pt.Rm, state.P, state.M)
    L = l_tensor(Y, X, np.einsum("ijkl,kla->ija", state.S, state.P))
    return (
        2.0 * np.einsum("mnxy,avxy,bvmn->ab", state.S, K, K)
        + np.einsum("NMa,NMb->ab", L, L)
        - (2.0 / pt.t) * state.Z
    )


# Central-difference weights for d/dt, keyed by order.
_STENCILS = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)),
}


def _time_derivative(family: SphereFamily, t: float, h: float, order: int) -> np.ndarray:
    if order not in _STENCILS:
        raise ValueError(f"Unsupported stencil order {order}; use 2 or 4")
    # Step proportional to t, rounded so that t + step is exact.
    step = (t + h * t) - t
    reach = max(abs(k) for k, _ in _STENCILS[order]) * step
    if not (family.contains(t - reach) and family.contains(t + reach)):
        raise IntervalError(
            f"[{t - reach}, {t + reach}] is not inside the valid interval (0, {family.blow_up})"
        )
    return sum(
        weight * harnack_state(sphere_point(family, t + k * step)).Z for k, weight in _STENCILS[order]
    ) / step


def mt_residual(family: SphereFamily, t: float, h: float, order: int = 4) -> np.ndarray:
    """``dZ/dt`` by central differences minus the right side of the evolution equation.

    The Laplacian of ``Z`` vanishes on the homogeneous sphere. The stencil step is
    ``h * t``, since ``Z`` has a pole at ``t = 0``.

    Args:
        family: The sphere family.
        t: Time.
        h: Step relative to ``t``.
        order: Stencil order, 2 or 4.

    Raises:
        IntervalError: If the stencil leaves the valid interval.
        FrameConstructionError: If the frame decomposition fails.
    """
    return _time_derivative(family, t, h, order) - mt_rhs(sphere_point(family, t))


def relative_max(residual: np.ndarray, reference: np.ndarray) -> float:
    return float(np.abs(residual).max() / max(1.0, float(np.abs(reference).max())))


def sphere_row(family: SphereFamily, t: float, h: float, order: int = 4) -> SphereRow:
    """One sweep sample: eigenvalues and trace of Z and the residuals of both equations."""
    pt = sphere_point(family, t)
    state = harnack_state(pt)
    dZ = _time_derivative(family, t, h, order)
    rhs = mt_rhs(pt, state)
    eigenvalues = linalg.eigvalsh(state.Z)
    d_trace = float(np.trace(dZ))
    trace = float(np.trace(state.Z))
    return SphereRow(
        t=t,
        K=family.K(t),
        z_min=float(eigenvalues.min()),
        z_max=float(eigenvalues.max()),
        traceZ=trace,
        mt_residual=float(np.abs(dZ - rhs).max()),
        mt_relative=relative_max(dZ - rhs, dZ),
        trace_residual=abs(d_trace - float(np.trace(rhs))) / max(1.0, abs(d_trace)),
        trace_supersolution=d_trace + 2.0 * trace / t,
    )


def parse_t_grid(text: str) -> List[float]:
    """``"a:b:k"`` -> ``[a + (b - a) i / k for i in 1..k]``.

    Raises:
        ValueError: Malformed text or ``k < 1``.
    """
    try:
        a, b, k = text.split(":")
        start, stop, count = float(a), float(b), int(k)
    except ValueError:
        raise ValueError(f"t-grid must look like 'a:b:k', got '{text}'")
    if count < 1:
        raise ValueError(f"t-grid needs at least one point, got k={count}")
    return [start + (stop - start) * i / count for i in range(1, count + 1)]


def sphere_sweep(
    family: SphereFamily,
    grid: Sequence[float],
    h: float = config.DEFAULT_FD_STEP,
    tolerance: float = config.DEFAULT_FD_TOLERANCE,
    order: int = 4,
) -> SphereReport:
    """Checks the evolution equation and positivity of Z along a t-grid.

    Raises:
        IntervalError: If a grid point or its stencil leaves the valid interval.
    """
    rows = [sphere_row(family, t, h, order) for t in grid]
    passed = all(
        row.mt_residual <= tolerance
        and row.trace_residual <= tolerance
        and row.z_min > 0
        and row.trace_supersolution >= -SUPERSOLUTION_TOLERANCE
        for row in rows
    )
    logger.info("Sphere sweep n=%d K0=%g over %d point(s): %s", family.n, family.K0, len(rows), passed)
    return SphereReport(n=family.n, K0=family.K0, step=h, tolerance=tolerance, passed=passed, rows=rows)


__all__ = [
    "CurvaturePoint",
    "HarnackState",
    "SphereFamily",
    "brute_force_minimizer",
    "build_PM",
    "curvature_matrix",
    "frame_decomposition",
    "from_wedge_matrix",
    "harnack_quadratic",
    "harnack_state",
    "identity_on_forms",
    "invert_curvature_operator",
    "inverse_residual",
    "joint_minimum",
    "k_tensor",
    "l_tensor",
    "minimizing_U",
    "mt_residual",
    "mt_rhs",
    "parse_t_grid",
    "quadratic_report",
    "sphere_curvature",
    "sphere_point",
    "sphere_row",
    "sphere_sweep",
    "trace_from_quadratic",
    "trace_harnack_minimum",
    "trace_harnack_vector",
    "trace_z",
    "wedge_pairs",
    "z_tensor",
]
