"""Reference solutions and closed-form theoretical bounds.

All bounds are plain arithmetic on the problem constants; they can be
astronomically large (``1 - beta`` scales like ``p_min**N``) and are then
reported as ``inf`` once they overflow float64.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .graph import spectral_quantities
from .schedule import Sublinear


class BudgetExhausted(RuntimeError):
    """An iterative oracle hit its iteration budget before converging."""


# ---------------------------------------------------------------- reference points

@dataclass(frozen=True, eq=False)
class CentralizedSolution:
    x_star: np.ndarray
    f_star: float
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class PenaltySolution:
    x_bullet: np.ndarray
    step_norm: float
    iterations: int


def solve_centralized(instance, tol=1e-12, max_iter=2_000_000, x0=None):
    """Minimise f = sum_i f_i over the set by accelerated projected gradient.

    Uses step 1/(N L), strong-convexity momentum and a gradient restart test.
    Convergence is certified by the plain projected-gradient residual, which
    must drop below ``tol`` (or a few ulps of the iterate norm, if larger).
    """
    model = instance.model
    step = 1.0 / (instance.n_nodes * instance.lipschitz_L)
    sq = math.sqrt(instance.mu / instance.lipschitz_L)
    mom = (1.0 - sq) / (1.0 + sq)
    x = instance.project(np.zeros(instance.dim) if x0 is None else np.asarray(x0, float))
    y = x
    for it in range(1, max_iter + 1):
        x_new = instance.project(y - step * model.total_gradient(y))
        moved = float(np.linalg.norm(x_new - x))
        # restart the momentum when it points against the gradient step
        y = x_new if np.dot(y - x_new, x_new - x) > 0 else x_new + mom * (x_new - x)
        x = x_new
        thresh = max(tol, 16 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(x))))
        if moved < thresh:
            plain = instance.project(x - step * model.total_gradient(x))
            residual = float(np.linalg.norm(x - plain))
            if residual < thresh:
                return CentralizedSolution(x, model.total_value(x), residual, it)
    raise BudgetExhausted(f"centralized solver did not reach tol={tol} in {max_iter} steps")


def _standard_map(instance, c, alpha):
    ptr, idx, w, eid = c.csr
    kind, radius, lo, hi = instance.kernel_projection
    active = np.ones(c.n, dtype=bool)
    links = np.ones(c.network.m, dtype=bool)
    gscale = np.full(c.n, float(alpha))

    def apply(X):
        G = instance.model.gradients(X)
        return kernels.consensus_step(X, G, active, links, ptr, idx, w, eid, gscale,
                                      kind, radius, lo, hi)
    return apply


def solve_penalty(instance, c, alpha, tol=1e-12, max_iter=5_000_000, x0=None):
    """Fixed point of the standard distributed gradient map.

    The fixed point minimises the penalty over the product set, so it is found
    by accelerated projected gradient on the penalty with step ``1 / L_psi``.
    It is accepted once one application of the standard map moves it less than
    ``tol * alpha`` or, if that is under the rounding floor, a few ulps.
    """
    apply = _standard_map(instance, c, alpha)
    lap = np.eye(c.n) - c.entries
    L_psi = instance.lipschitz_L + (1.0 - c.lambdaN) / alpha
    step = 1.0 / L_psi
    sq = math.sqrt(instance.mu / L_psi)
    mom = (1.0 - sq) / (1.0 + sq)

    def grad(X):
        return instance.model.gradients(X) + lap @ X / alpha

    X = instance.project(np.zeros((instance.n_nodes, instance.dim)) if x0 is None
                         else np.array(x0, dtype=float))
    Y = X
    for it in range(1, max_iter + 1):
        X_new = instance.project(Y - step * grad(Y))
        moved = float(np.linalg.norm(X_new - X))
        Y = X_new if np.sum((Y - X_new) * (X_new - X)) > 0 else X_new + mom * (X_new - X)
        X = X_new
        thresh = max(tol * alpha, 16 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(X))))
        if moved * max(1.0, alpha / step) < thresh:
            residual = float(np.linalg.norm(apply(X) - X))
            if residual < thresh:
                return PenaltySolution(X, residual, it)
    raise BudgetExhausted(f"penalty solver did not converge in {max_iter} steps")


def penalty_closed_form_quadratic(centers, c, alpha):
    """Unconstrained identity-Hessian case: x = (I + (I - C)/alpha)^-1 b."""
    n = c.n
    A = np.eye(n) + (np.eye(n) - c.entries) / alpha
    return np.linalg.solve(A, np.asarray(centers, dtype=float))


# ---------------------------------------------------------------- general bounds

def one_minus_beta(p_min, n, lambda2):
    """1 - beta for beta^2 = 1 - p_min^N (1 - lambda2^2), without cancellation."""
    t = p_min ** n * (1.0 - lambda2 ** 2)
    if t >= 1.0:  # beta = 0
        return 1.0
    return -math.expm1(0.5 * math.log1p(-t))


def _safe(f):
    try:
        v = f()
    except (OverflowError, ZeroDivisionError):
        return math.inf
    return v if math.isfinite(v) else math.inf


@dataclass(frozen=True)
class Bounds:
    alpha: float
    p_min: float
    lambda2_C: float
    beta_sq: float
    one_minus_beta: float
    C_psi: float
    C_e: float
    eta: float | None
    delta: float | None
    idling_rate_const: float
    disagreement_sq_bound: float
    G_psi_sq: float
    S_u: float | None
    N: int
    D: float
    G: float
    mu: float

    def neighborhood(self):
        """Upper bound on ||x_bullet - 1 (x) x_star||^2."""
        return self.alpha * self.C_psi

    def standard_rate(self, k):
        return 2 * math.sqrt(self.N) * self.D * (1 - self.alpha * self.mu) ** np.asarray(k, float)

    def idling_rate(self, k):
        if self.eta is None:
            raise ValueError("rate constant needs a geometric schedule")
        k = np.asarray(k, dtype=float)
        with np.errstate(over="ignore"):
            return self.idling_rate_const * k * self.eta ** k

    def error_bound(self, p_k):
        """Bound on E||e^(k)||^2 given the activation probability p_k."""
        with np.errstate(over="ignore"):
            return self.C_e * (1.0 - np.asarray(p_k, dtype=float) ** 2)

    def running_average_bound(self, k):
        """Right side of the running-average optimality-gap bound at iteration k."""
        if self.S_u is None:
            raise ValueError("the running-average bound needs a summable schedule")
        a, N, D, G = self.alpha, self.N, self.D, self.G
        k = np.asarray(k, dtype=float)
        omb = np.float64(self.one_minus_beta)
        with np.errstate(over="ignore", divide="ignore"):
            return (4 * N * D**2 / (2 * a * k)
                    + 2 * math.sqrt(2) * math.sqrt(N) * D * math.sqrt(self.C_e) * self.S_u / k
                    + a * self.G_psi_sq + 2 * a * self.C_e
                    + a * N * G**2 / (2 * (1 - self.lambda2_C))
                    + 3 * a * N * G**2 / (self.p_min * omb))

    def to_dict(self):
        return asdict(self)


def error_constant(N, G, p_min, omb):
    """C_e = 4 N G^2 / p_min + 72 N G^2 / (p_min^2 (1 - beta)^2)."""
    return _safe(lambda: 4 * N * G**2 / p_min + 72 * N * G**2 / (p_min**2 * omb**2))


def rate_factor(alpha, mu, delta):
    """eta = max(1 - alpha mu, sqrt(delta))."""
    return max(1 - alpha * mu, math.sqrt(delta))


def theory_bounds(instance, c, alpha, schedule):
    """Every closed-form constant used by the convergence checks."""
    N = instance.n_nodes
    G, D, mu = instance.grad_bound_G, instance.diameter_D, instance.mu
    Mf, mf = instance.f_upper_Mf, instance.f_lower_mf
    lam2 = c.lambda2
    p_min = float(schedule.p_min)
    omb = one_minus_beta(p_min, N, lam2)
    beta_sq = 1.0 - p_min ** N * (1.0 - lam2 ** 2)
    gap = 1.0 - lam2
    C_psi = 4 * N * (Mf - mf) / gap + 2 * N * G**2 / (mu * gap)
    C_e = error_constant(N, G, p_min, omb)
    delta = getattr(schedule, "effective_delta", getattr(schedule, "delta", None))
    eta = rate_factor(alpha, mu, delta) if delta is not None else None
    scaled = _safe(lambda: alpha * math.sqrt(N) * G / (p_min * omb))
    idling_rate_const = 12 * max(math.sqrt(N) * D, scaled)
    disagreement_sq = _safe(lambda: (3 * scaled) ** 2)
    G_psi_sq = _safe(lambda: 2 * N * G**2 + 18 * N * G**2 / (p_min * omb**2))
    S_u = schedule.sqrt_u_sum() if isinstance(schedule, Sublinear) else None
    return Bounds(alpha=float(alpha), p_min=p_min, lambda2_C=lam2, beta_sq=beta_sq,
                  one_minus_beta=omb, C_psi=C_psi, C_e=C_e, eta=eta, delta=delta,
                  idling_rate_const=idling_rate_const, disagreement_sq_bound=disagreement_sq,
                  G_psi_sq=G_psi_sq, S_u=S_u, N=N, D=D, G=G, mu=mu)


# ---------------------------------------------------------------- quadratic case

@dataclass(frozen=True, eq=False)
class QuadraticSetup:
    """Identity-Hessian costs with equal weights C = I - c0 * Laplacian."""

    centers: np.ndarray
    network: object
    c0: float
    theta: float
    alpha: float
    x0: np.ndarray

    def __post_init__(self):
        B = np.array(self.centers, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        object.__setattr__(self, "centers", B)
        X0 = np.broadcast_to(np.asarray(self.x0, dtype=float), B.shape).copy()
        object.__setattr__(self, "x0", X0)

    @property
    def lambda2_L(self):
        return float(np.linalg.eigvalsh(self.network.laplacian())[1])

    @property
    def delta(self):
        return 1.0 - self.alpha * self.theta

    @property
    def b_star(self):
        return np.tile(self.centers.mean(axis=0), (self.centers.shape[0], 1))

    @property
    def R_sp(self):
        return float(np.linalg.norm(self.centers - self.centers.mean(axis=0)))

    @property
    def R_0(self):
        return float(np.linalg.norm(self.x0 - self.b_star))

    def accuracy(self):
        """The accuracy guaranteed for this step size, 2 alpha (N-1) R_sp / (c0 lambda_2)."""
        N = self.centers.shape[0]
        return 2 * self.alpha * (N - 1) * self.R_sp / (self.c0 * self.lambda2_L)


@dataclass(frozen=True, eq=False)
class QuadraticBounds:
    xi_ub: np.ndarray
    chi_ub: np.ndarray  # NaN except at odd k >= 3
    K_epsilon: float
    predicted_savings: float
    R_sp: float
    R_0: float
    theta: float
    c0: float
    lambda2_L: float
    delta: float
    epsilon: float

    def xi_limit(self, n_nodes, alpha):
        return alpha * self.R_sp * (n_nodes - 1) / (self.c0 * self.lambda2_L + alpha)


class QuadraticError(ValueError):
    pass


def quadratic_bounds(setup, horizon, epsilon=None):
    """Upper bounds on the standard and idling mean-distance sequences.

    ``epsilon`` defaults to the accuracy guaranteed by ``setup.alpha``.
    """
    N = setup.centers.shape[0]
    if N < 2:
        raise QuadraticError("need at least two nodes")
    a, c0, lam2 = setup.alpha, setup.c0, setup.lambda2_L
    delta = setup.delta
    if not 0 < delta < 1:
        raise QuadraticError(f"delta = 1 - alpha*theta = {delta} must lie in (0, 1)")
    R_sp, R_0 = setup.R_sp, setup.R_0
    k = np.arange(horizon + 1, dtype=float)
    q = 1 - a - c0 * lam2
    xi = (1 - a) ** k * R_0 + a * R_sp * (N - 1) * (1 - q ** k) / (c0 * lam2 + a)
    q1 = 1 - a - c0 * lam2 * (1 - delta)
    chi = (1 - a) ** k * R_0 + a * R_sp * (N - 1) * (
        1.0 / (c0 * lam2 * (1 - delta ** (k / 2)) + a)
        + q1 ** ((k - 1) / 2) / (c0 * lam2 * (1 - delta) + a))
    valid = (k >= 3) & (k % 2 == 1)
    chi = np.where(valid, chi, np.nan)
    eps = setup.accuracy() if epsilon is None else float(epsilon)
    # undefined when the spread (hence the guaranteed accuracy) is zero
    K_eps = (R_sp * (N - 1) / (c0 * lam2 * eps) * 2 * math.log(2 * R_0 / eps)
             if eps > 0 and R_sp > 0 else math.nan)
    return QuadraticBounds(xi_ub=xi, chi_ub=chi, K_epsilon=K_eps,
                           predicted_savings=1.0 / (2 * a * setup.theta), R_sp=R_sp, R_0=R_0,
                           theta=setup.theta, c0=c0, lambda2_L=lam2, delta=delta, epsilon=eps)


def quadratic_mean_recursion(setup, schedule, horizon):
    """Exact E[x^(k)] for the unconstrained idling method; returns (means, chi).

    Uses E[W^(k)] = I - c0 p_k^2 Laplacian, which holds because the
    activations at k are independent of x^(k).
    """
    Lap = setup.network.laplacian()
    B = setup.centers
    a = setup.alpha
    bstar = setup.b_star
    X = setup.x0.copy()
    means = np.empty((horizon + 1,) + X.shape)
    means[0] = X
    eye = np.eye(Lap.shape[0])
    for k in range(horizon):
        p = schedule.probability(k)
        EW = eye - setup.c0 * p * p * Lap
        X = EW @ X - a * (X - B)
        means[k + 1] = X
    chi = np.linalg.norm((means - bstar).reshape(horizon + 1, -1), axis=1)
    return means, chi


def spectral_summary(c, c0=None):
    s = spectral_quantities(c, c0)
    return {"lambda2_C": s.lambda2_C, "lambdaN_C": s.lambdaN_C, "lambda2_L": s.lambda2_L}
