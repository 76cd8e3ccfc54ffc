"""Randomized numeric oracle for tensor identities.

Symbols are bound to dense arrays drawn from one of four model families and
expressions are evaluated with ``numpy.einsum``:

- ``plain``: curvature with the pair symmetries only; derivative data unconstrained.
- ``bianchi``: curvature that also satisfies the first Bianchi identity.
- ``geometric``: first and second Bianchi identities, commuting derivatives
  through the Ricci identity, and every defined tensor (P, M, Z, K, ...) computed
  from its definition.
- ``frames``: labeled frames ``Y^N``, ``X^N`` with ``R``, ``P`` and ``M`` induced by
  them.

Bindings are keyed by symbol with a derivative prefix: ``R``, ``grad:R``,
``grad2:Rc``. Array axes are the derivative indices (outermost first) followed
by the slots, with label axes of length ``m`` and frame axes of length ``n``.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from harnack_verify import config
from harnack_verify.core.harnack import (
    CurvaturePoint,
    build_PM,
    curvature_matrix,
    identity_on_forms,
    invert_curvature_operator,
    k_tensor,
    l_tensor,
    sphere_curvature,
    z_tensor,
)
from harnack_verify.errors import EvaluationError, FreeIndexMismatchError, UnboundSymbolError
from harnack_verify.rewrite.rules import RewriteRule
from harnack_verify.schemas.data_models import IdentityVerdict
from harnack_verify.tensor.expr import Factor, Index, TensorExpr
from harnack_verify.tensor.parser import parse
from harnack_verify.tensor.symbols import LABEL

logger = logging.getLogger(__name__)

FAMILIES = ("plain", "bianchi", "geometric", "frames")

# Smallest curvature-operator eigenvalue accepted for positive samples, relative to K.
POSITIVITY_MARGIN = 0.1


def binding_key(factor: Factor) -> str:
    """``R`` -> ``"R"``, ``grad[e](R[...])`` -> ``"grad:R"``, two derivatives -> ``"grad2:R"``."""
    k = len(factor.derivs)
    if k == 0:
        return factor.symbol
    return f"{'grad' if k == 1 else f'grad{k}'}:{factor.symbol}"


# --- Symmetrizers acting on the last four axes ---


def r_symmetrize(T: np.ndarray) -> np.ndarray:
    """Projects onto tensors antisymmetric in each pair and symmetric under pair exchange."""
    A = (
        T
        - np.einsum("...bacd->...abcd", T)
        - np.einsum("...abdc->...abcd", T)
        + np.einsum("...badc->...abcd", T)
    ) / 4.0
    return (A + np.einsum("...cdab->...abcd", A)) / 2.0


def bianchi_part(T: np.ndarray) -> np.ndarray:
    """``(T_abcd + T_acdb + T_adbc) / 3``; totally antisymmetric on R-symmetric input."""
    return (T + np.einsum("...acdb->...abcd", T) + np.einsum("...adbc->...abcd", T)) / 3.0


def first_bianchi_defect(T: np.ndarray) -> float:
    return float(np.abs(3.0 * bianchi_part(T)).max())


def second_bianchi_defect(G: np.ndarray) -> float:
    """``max |grad_a R_bcde + grad_b R_cade + grad_c R_abde|``."""
    return float(np.abs(_cyclic_derivative_sum(G)).max())


def _cyclic_derivative_sum(G: np.ndarray) -> np.ndarray:
    return G + np.einsum("...bcade->...abcde", G) + np.einsum("...cabde->...abcde", G)


def _pair_symmetrize(T: np.ndarray) -> np.ndarray:
    T = (T + np.einsum("...bacd->...abcd", T)) / 2.0
    return (T + np.einsum("...abdc->...abcd", T)) / 2.0


@lru_cache(maxsize=None)
def _curvature_basis(n: int) -> np.ndarray:
    """Orthonormal basis of algebraic curvature tensors, shape ``(n**4, d)``."""
    dim = n**4
    stack = np.eye(dim).reshape((dim, n, n, n, n))
    symmetric = r_symmetrize(stack)
    projector = (symmetric - bianchi_part(symmetric)).reshape(dim, dim)
    return linalg.orth(projector.T)


@lru_cache(maxsize=None)
def _grad_curvature_basis(n: int) -> np.ndarray:
    """Orthonormal basis of ``grad R`` tensors obeying both Bianchi identities, shape ``(n**5, r)``."""
    basis = _curvature_basis(n).T.reshape((-1, n, n, n, n))
    d = basis.shape[0]
    columns = np.einsum("xe,kabcd->xkeabcd", np.eye(n), basis).reshape((n * d,) + (n,) * 5)
    constraint = _cyclic_derivative_sum(columns).reshape(n * d, n**5).T
    null = linalg.null_space(constraint)
    flat = columns.reshape(n * d, n**5).T
    return linalg.orth(flat @ null) if null.size else np.zeros((n**5, 0))


def project_grad_curvature(raw: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``raw[e,a,b,c,d]`` onto tensors obeying both Bianchi identities."""
    n = raw.shape[0]
    basis = _grad_curvature_basis(n)
    return (basis @ (basis.T @ raw.reshape(-1))).reshape((n,) * 5)


@lru_cache(maxsize=None)
def _hessian_constraint(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Basis of tensors symmetric in (a,b) and (c,d), and the contraction map on it."""
    dim = n**4
    stack = np.eye(dim).reshape((dim, n, n, n, n))
    basis = linalg.orth(_pair_symmetrize(stack).reshape(dim, dim).T)
    images = np.einsum("kbvva->kba", stack) - 0.5 * np.einsum("kbacc->kba", stack)
    return basis, images.reshape(dim, n * n).T @ basis


def ricci_commutator(Rm: np.ndarray, Rc: np.ndarray) -> np.ndarray:
    """``C_abcd = R_abce Rc_ed + R_abde Rc_ce``, the antisymmetric part of ``grad_a grad_b Rc_cd``."""
    return np.einsum("abce,ed->abcd", Rm, Rc) + np.einsum("abde,ce->abcd", Rm, Rc)


def second_derivative_data(rng: np.random.Generator, Rm: np.ndarray, Rc: np.ndarray) -> np.ndarray:
    """Random ``grad_a grad_b Rc_cd`` obeying the Ricci identity and the differentiated contracted Bianchi identity.

    Written as ``H + C/2`` with ``H`` symmetric in both pairs and ``C`` the Ricci
    commutator, then ``H`` is moved the least distance that makes
    ``grad_b grad_v Rc_va = 1/2 grad_b grad_a Scal``.
    """
    n = Rm.shape[0]
    C = ricci_commutator(Rm, Rc)
    basis, contraction = _hessian_constraint(n)
    coords = basis.T @ _pair_symmetrize(rng.standard_normal((n,) * 4)).reshape(-1)
    target = (-0.5 * np.einsum("bvva->ba", C)).reshape(-1)
    correction = linalg.lstsq(contraction, contraction @ coords - target)[0]
    H = (basis @ (coords - correction)).reshape((n,) * 4)
    return H + 0.5 * C


# --- Generators ---


def _rng(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_curvature(
    n: int,
    seed: Union[int, np.random.Generator] = 0,
    bianchi1: bool = True,
    positive: bool = True,
    K: float = 1.0,
) -> np.ndarray:
    """Random tensor with the curvature pair symmetries.

    A sphere part ``K (dd - dd)`` plus a random perturbation with the pair
    symmetries (and the first Bianchi identity when ``bianchi1``). With
    ``positive`` the perturbation is halved until the curvature operator's
    smallest eigenvalue exceeds ``POSITIVITY_MARGIN * K``.

    Args:
        n: Dimension.
        seed: Seed or generator.
        bianchi1: Impose the first Bianchi identity. For ``n <= 3`` it holds anyway.
        positive: Require a positive definite curvature operator.
        K: Sectional curvature of the sphere part.

    Returns:
        Array of shape ``(n, n, n, n)``.
    """
    rng = _rng(seed)
    perturbation = r_symmetrize(rng.standard_normal((n, n, n, n)))
    if bianchi1:
        perturbation = perturbation - bianchi_part(perturbation)
    sphere = sphere_curvature(n, K)
    scale = 0.5 * K
    for _ in range(60):
        Rm = sphere + scale * perturbation
        if not positive or linalg.eigvalsh(curvature_matrix(Rm)).min() > POSITIVITY_MARGIN * K:
            return Rm
        scale /= 2.0
    return sphere


def gen_grad_curvature(n: int, seed: Union[int, np.random.Generator] = 0, scale: float = 1.0) -> np.ndarray:
    """Random ``grad_e R_abcd`` obeying both Bianchi identities, derivative axis first."""
    return scale * project_grad_curvature(_rng(seed).standard_normal((n,) * 5))


def gen_frames(
    n: int, m: int, seed: Union[int, np.random.Generator] = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Random labeled frames: ``Y`` of shape ``(m, n, n)`` antisymmetric, ``X`` of shape ``(m, n)``."""
    rng = _rng(seed)
    raw = rng.standard_normal((m, n, n))
    return (raw - np.swapaxes(raw, 1, 2)) / 2.0, rng.standard_normal((m, n))


def induced_tensors(Y: np.ndarray, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``sum YY``, ``sum YX`` and ``sum XX`` over the labels."""
    return (
        np.einsum("Nab,Ncd->abcd", Y, Y),
        np.einsum("Nab,Nc->abc", Y, X),
        np.einsum("Na,Nb->ab", X, X),
    )


# --- Models ---


@dataclass(frozen=True)
class Model:
    """Arrays bound to symbols, with the dimension, label count and time."""

    bindings: Dict[str, np.ndarray]
    n: int
    m: int
    t: float
    family: str
    seed: int = 0

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self.bindings[key]
        except KeyError:
            raise UnboundSymbolError(
                f"No binding for '{key}' in the {self.family} model (n={self.n})"
            ) from None


def _antisymmetric_first_pair(rng: np.random.Generator, shape) -> np.ndarray:
    raw = rng.standard_normal(shape)
    return (raw - np.swapaxes(raw, 0, 1)) / 2.0


def _derivative_data(
    rng: np.random.Generator, Rm: np.ndarray, Rc: np.ndarray, constrained: bool
) -> Tuple[np.ndarray, np.ndarray]:
    n = Rm.shape[0]
    if constrained:
        return gen_grad_curvature(n, rng), second_derivative_data(rng, Rm, Rc)
    gradRm = r_symmetrize(rng.standard_normal((n,) * 5))
    return gradRm, _pair_symmetrize(rng.standard_normal((n,) * 4))


def _curvature_family(n: int, rng: np.random.Generator, family: str, t: float) -> Dict[str, np.ndarray]:
    Rm = gen_curvature(n, rng, bianchi1=family != "plain", positive=True)
    Rc = np.einsum("abad->bd", Rm)
    gradRm, grad2Rc = _derivative_data(rng, Rm, Rc, constrained=family == "geometric")
    if family == "geometric":
        gradRc = np.einsum("eabad->ebd", gradRm)
    else:
        raw = rng.standard_normal((n, n, n))
        gradRc = (raw + np.swapaxes(raw, 1, 2)) / 2.0
    pt = CurvaturePoint(
        n=n,
        t=t,
        Rm=Rm,
        Rc=Rc,
        R=float(np.trace(Rc)),
        gradRc=gradRc,
        gradRm=gradRm,
        lapRc=np.einsum("ccab->ab", grad2Rc),
        hessR=np.einsum("abcc->ab", grad2Rc),
        grad2Rc=grad2Rc,
    )
    P, M = build_PM(pt)
    if family != "geometric":
        raw = rng.standard_normal((n, n))
        M = raw + raw.T
    S = invert_curvature_operator(Rm)
    gradP = grad2Rc - np.einsum("vbac->vabc", grad2Rc)
    return {
        "R": Rm,
        "Rc": Rc,
        "Scal": np.array(pt.R),
        "grad:R": gradRm,
        "grad:Rc": gradRc,
        "grad2:Rc": grad2Rc,
        "grad:Scal": np.einsum("acc->a", gradRc),
        "grad2:Scal": pt.hessR,
        "P": P,
        "grad:P": gradP,
        "M": M,
        "S": S,
        "grad:S": -np.einsum("ijmn,vmnpq,pqkl->vijkl", S, gradRm, S),
        "K": k_tensor(pt, P, S, gradP),
    }


def _frames_family(n: int, m: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    Y, X = gen_frames(n, m, rng)
    Rm, P, M = induced_tensors(Y, X)
    S = invert_curvature_operator(Rm)
    E = np.einsum("ijkl,kla->ija", S, P)
    Rc = np.einsum("abad->bd", Rm)
    return {
        "Y": Y,
        "X": X,
        "R": Rm,
        "Rc": Rc,
        "Scal": np.array(np.trace(Rc)),
        "P": P,
        "M": M,
        "S": S,
        "L": l_tensor(Y, X, E),
    }


@lru_cache(maxsize=256)
def build_model(n: int, seed: int = 0, family: str = "geometric", t: float = 1.0, m: Optional[int] = None) -> Model:
    """Draws a model of ``family`` in dimension ``n``.

    Frame families carry ``m = n(n+1)/2`` labels unless ``m`` is given. The arrays
    are read-only since models are cached.

    Raises:
        ValueError: Unknown family, ``n < 2`` or ``t <= 0``.
        SingularCurvatureOperator: If the drawn curvature operator is singular.
    """
    if family not in FAMILIES:
        raise ValueError(f"Unknown model family '{family}'; expected one of {', '.join(FAMILIES)}")
    if n < 2:
        raise ValueError(f"Dimension must be at least 2, got {n}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    rng = np.random.default_rng(seed)
    m = n * (n + 1) // 2 if m is None else m
    if family == "frames":
        bindings = _frames_family(n, m, rng)
    else:
        bindings = _curvature_family(n, rng, family, t)
    Rm, P, S = bindings["R"], bindings["P"], bindings["S"]
    bindings.update(
        {
            "g": np.eye(n),
            "I": identity_on_forms(n),
            "B": np.einsum("aebf,cedf->abcd", Rm, Rm),
            "E": np.einsum("ijkl,kla->ija", S, P),
            "Z": z_tensor(P, bindings["M"], S),
            "U": _antisymmetric_first_pair(rng, (n, n)),
            "W": rng.standard_normal(n),
            "V": rng.standard_normal(n),
        }
    )
    for array in bindings.values():
        array.setflags(write=False)
    return Model(bindings=bindings, n=n, m=m, t=t, family=family, seed=seed)


def sample_point(n: int, seed: int = 0, t: float = 1.0) -> CurvaturePoint:
    """Curvature point from a geometric model, with every contraction consistent."""
    model = build_model(n, seed, "geometric", t)
    return CurvaturePoint.from_derivatives(
        np.array(model["R"]), t, np.array(model["grad:R"]), np.array(model["grad2:Rc"])
    )


# --- Evaluation ---

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def output_order(expr: TensorExpr) -> List[Index]:
    """Free indices in the axis order ``evaluate`` returns them: sorted by (kind, name)."""
    return sorted(expr.free, key=lambda i: (i.kind, i.name))


def evaluate_with_scale(expr: Union[str, TensorExpr], model: Model) -> Tuple[np.ndarray, float]:
    """Evaluates ``expr`` and the largest entry of the same sum taken over absolute values.

    The second value bounds every partial sum, so it is the magnitude a rounding
    error in the first value is measured against.

    Raises:
        EvaluationError: For ``heat(...)`` or an unexpanded operator on a product,
            when a binding's shape does not fit the factor, or when a term has more
            distinct indices than einsum has subscript letters.
        UnboundSymbolError: If a symbol has no binding in the model.
    """
    if isinstance(expr, str):
        expr = parse(expr)
    order = output_order(expr)
    shape = tuple(model.m if i.kind == LABEL else model.n for i in order)
    total = np.zeros(shape)
    bound = np.zeros(shape)
    for term in expr.terms:
        letters: Dict[Index, str] = {}
        operands: List[np.ndarray] = []
        subscripts: List[str] = []
        for factor in term.factors:
            if not isinstance(factor, Factor):
                raise EvaluationError(f"Cannot evaluate unexpanded operator '{factor}'; expand it first")
            if factor.heat:
                raise EvaluationError(f"Cannot evaluate '{factor}': the heat operator has no numeric model")
            array = model[binding_key(factor)]
            if array.ndim != len(factor.indices):
                raise EvaluationError(
                    f"Binding '{binding_key(factor)}' has rank {array.ndim}, '{factor}' needs {len(factor.indices)}"
                )
            for index in factor.indices:
                if index not in letters and len(letters) == len(_LETTERS):
                    raise EvaluationError(
                        f"Term '{term}' has more than {len(_LETTERS)} distinct indices; split it first"
                    )
                letters.setdefault(index, _LETTERS[len(letters)])
            subscripts.append("".join(letters[i] for i in factor.indices))
            operands.append(array)
        value = float(term.coeff) * model.t**term.t_power
        out = "".join(letters[i] for i in order)
        if operands:
            spec = ",".join(subscripts) + "->" + out
            total = total + value * np.einsum(spec, *operands, optimize="greedy")
            bound = bound + abs(value) * np.einsum(spec, *(np.abs(a) for a in operands), optimize="greedy")
        else:
            total = total + value
            bound = bound + abs(value)
    return total, float(bound.max()) if bound.size else 0.0


def evaluate(expr: Union[str, TensorExpr], model: Model) -> np.ndarray:
    """Evaluates ``expr`` on ``model``.

    Returns:
        Array with one axis per free index, in ``output_order(expr)``.

    Raises:
        EvaluationError: See ``evaluate_with_scale``.
        UnboundSymbolError: If a symbol has no binding in the model.
    """
    return evaluate_with_scale(expr, model)[0]


def relative_deviation(a: np.ndarray, b: np.ndarray, scale: float = 0.0) -> float:
    """``max|a - b|`` relative to ``max(|a|, |b|, scale)``, never dividing by zero."""
    if a.size == 0:
        return 0.0
    denominator = max(float(np.abs(a).max()), float(np.abs(b).max()), scale, np.finfo(float).tiny)
    return float(np.abs(a - b).max()) / denominator


def randomized_equal(
    lhs: Union[str, TensorExpr],
    rhs: Union[str, TensorExpr],
    family: str = "geometric",
    trials: int = config.DEFAULT_TRIALS,
    tolerance: float = config.DEFAULT_TOLERANCE,
    seed: int = config.DEFAULT_SEED,
    dimensions: Sequence[int] = config.DEFAULT_DIMENSIONS,
) -> IdentityVerdict:
    """Compares two expressions on ``trials`` random models.

    Trial ``k`` uses seed ``seed + k``, dimension ``dimensions[k % len(dimensions)]``
    and a time drawn from the seed. Deviations are ``max|lhs - rhs|`` relative to the
    largest entry of either side evaluated over absolute values (``evaluate_with_scale``),
    so identities whose sides vanish are still judged against the size of their terms.

    Raises:
        FreeIndexMismatchError: If the free-index sets differ.
        EvaluationError: If either side cannot be evaluated.
    """
    lhs = parse(lhs) if isinstance(lhs, str) else lhs
    rhs = parse(rhs) if isinstance(rhs, str) else rhs
    if lhs.free != rhs.free and not (lhs.is_zero or rhs.is_zero):
        raise FreeIndexMismatchError(
            f"Free indices differ: {sorted(i.name for i in lhs.free)} vs {sorted(i.name for i in rhs.free)}"
        )
    if rhs.is_zero:
        rhs = TensorExpr((), lhs.free)
    if lhs.is_zero:
        lhs = TensorExpr((), rhs.free)
    worst, worst_seed, worst_dim = 0.0, seed, dimensions[0]
    for k in range(trials):
        trial_seed = seed + k
        n = dimensions[k % len(dimensions)]
        t = float(np.random.default_rng(trial_seed).uniform(0.5, 2.0))
        model = build_model(n, trial_seed, family, t)
        left, left_scale = evaluate_with_scale(lhs, model)
        right, right_scale = evaluate_with_scale(rhs, model)
        deviation = relative_deviation(left, right, max(left_scale, right_scale))
        if deviation > worst or k == 0:
            worst, worst_seed, worst_dim = deviation, trial_seed, n
    passed = worst <= tolerance
    logger.debug("Randomized check on %s: worst deviation %.3e (%s)", family, worst, passed)
    return IdentityVerdict(
        passed=passed,
        trials=trials,
        worst_deviation=worst,
        worst_seed=worst_seed,
        worst_dimension=worst_dim,
        family=family,
    )


def check_rule_soundness(
    rule: RewriteRule,
    trials: int = config.DEFAULT_TRIALS,
    tolerance: float = config.DEFAULT_TOLERANCE,
    seed: int = config.DEFAULT_SEED,
    dimensions: Sequence[int] = config.DEFAULT_DIMENSIONS,
) -> Dict[str, IdentityVerdict]:
    """Evaluates every check of ``rule`` on its model family.

    Returns:
        Mapping from ``"lhs = rhs"`` to its verdict; empty for rules without checks.
    """
    verdicts: Dict[str, IdentityVerdict] = {}
    for lhs, rhs in rule.checks or ():
        verdicts[f"{lhs} = {rhs}"] = randomized_equal(lhs, rhs, rule.family, trials, tolerance, seed, dimensions)
    return verdicts


__all__ = [
    "FAMILIES",
    "Model",
    "binding_key",
    "bianchi_part",
    "build_model",
    "check_rule_soundness",
    "evaluate",
    "evaluate_with_scale",
    "first_bianchi_defect",
    "gen_curvature",
    "gen_frames",
    "gen_grad_curvature",
    "induced_tensors",
    "output_order",
    "project_grad_curvature",
    "r_symmetrize",
    "randomized_equal",
    "relative_deviation",
    "ricci_commutator",
    "sample_point",
    "second_bianchi_defect",
    "second_derivative_data",
]
