"""Weighted proximal mapping solvers.

Two routes are provided for ``argmin_x ||x - v||_B^2 + 2*lam*(alpha*||Tx||_1
+ (1-alpha)*TV(x))``: an accelerated projected-gradient solve of the dual
problem (any ``alpha``), and, for the pure l1 case, an exact reduction to a
scalar root-finding problem that exploits the metric's rank-1 structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import Rank1Metric
from .transforms import (
    DualTriple,
    WaveletSpec,
    l_adjoint,
    l_apply,
    proj_pair,
    proj_unit_ball,
    wavelet_adjoint,
    wavelet_forward,
)

L_OP_NORM_SQ = 8.0  # operator norm bound of the difference pair assembler


class RootConvergenceError(RuntimeError):
    """Root search for the rank-1 correction failed to reach tolerance."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"rank-1 root search stalled at residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass
class WpmProblem:
    """One weighted-proximal subproblem instance.

    ``v`` is the gradient-stepped point, ``metric`` the weighting, and
    ``lam`` the (step-scaled) regularization weight. ``alpha`` balances
    the wavelet term against TV; the wavelet spec may be ``None`` when
    ``alpha == 0``.
    """

    v: np.ndarray
    metric: Rank1Metric
    lam: float
    alpha: float
    dims: tuple[int, int]
    tv_variant: str = "iso"
    wavelet: WaveletSpec | None = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=np.complex128)
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        rows, cols = self.dims
        if self.v.shape != (rows * cols,):
            raise ValueError("v length must equal I*J")
        if self.alpha > 0 and self.wavelet is None:
            raise ValueError("wavelet spec required when alpha > 0")


@dataclass
class WpmSettings:
    max_iter: int = 20
    tol: float = 1e-6
    warm_start: DualTriple | None = field(default=None)

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def _zero_triple(problem: WpmProblem) -> DualTriple:
    rows, cols = problem.dims
    z = np.zeros(rows * cols, dtype=np.complex128) if problem.alpha > 0 else None
    if problem.alpha < 1:
        p = np.zeros((rows - 1, cols), dtype=np.complex128)
        q = np.zeros((rows, cols - 1), dtype=np.complex128)
    else:
        p = q = None
    return DualTriple(z, p, q)


def w_of(problem: WpmProblem, triple: DualTriple) -> np.ndarray:
    """Candidate primal point ``v - lam * B^{-1}(alpha*T^H z + (1-alpha)*L(P,Q))``."""
    rows, cols = problem.dims
    g = np.zeros(rows * cols, dtype=np.complex128)
    if problem.alpha > 0 and triple.z is not None:
        g += problem.alpha * wavelet_adjoint(triple.z, problem.wavelet, problem.dims).ravel()
    if problem.alpha < 1 and triple.p is not None:
        g += (1.0 - problem.alpha) * l_apply(triple.p, triple.q).ravel()
    if problem.lam == 0.0 or not g.any():
        return problem.v.copy()
    return problem.v - problem.lam * problem.metric.apply_inverse(g)


def dual_gradient(problem: WpmProblem, triple: DualTriple) -> DualTriple:
    """Gradient of ``||w(z,P,Q)||_B^2`` with respect to the dual blocks."""
    w = w_of(problem, triple)
    img = w.reshape(problem.dims)
    gz = gp = gq = None
    if problem.alpha > 0:
        gz = -2.0 * problem.lam * problem.alpha * wavelet_forward(img, problem.wavelet)
    if problem.alpha < 1:
        p, q = l_adjoint(img)
        scale = -2.0 * problem.lam * (1.0 - problem.alpha)
        gp, gq = scale * p, scale * q
    return DualTriple(gz, gp, gq)


def dual_lipschitz(problem: WpmProblem) -> float:
    """Step-size constant for the dual problem's gradient.

    ``2*lam^2*(alpha^2*||T||^2 + 8*(1-alpha)^2) / lambda_min(B)``; the
    division by the smallest eigenvalue bounds ``||B^{-1}||``.
    """
    lam_min = problem.metric.min_eigenvalue()
    a = problem.alpha
    return 2.0 * problem.lam ** 2 * (a ** 2 + L_OP_NORM_SQ * (1.0 - a) ** 2) / lam_min


def solve_dual_fista(problem: WpmProblem, settings: WpmSettings):
    """Accelerated projected gradient on the dual of the WPM.

    Returns ``(x_next, triple, iters_used)`` where ``triple`` is the final
    feasible dual point, suitable for warm-starting the next call.
    """
    if problem.lam == 0.0:
        triple = settings.warm_start.copy() if settings.warm_start is not None else _zero_triple(problem)
        return problem.v.copy(), triple, 0

    cur = settings.warm_start.copy() if settings.warm_start is not None else _zero_triple(problem)
    over = cur.copy()
    lc = dual_lipschitz(problem)
    step_z = 2.0 * problem.lam * problem.alpha / lc
    step_pq = 2.0 * problem.lam * (1.0 - problem.alpha) / lc
    t = 1.0
    iters = 0
    for _ in range(settings.max_iter):
        iters += 1
        w = w_of(problem, over)
        img = w.reshape(problem.dims)
        nxt = DualTriple()
        sq = 0.0
        if problem.alpha > 0:
            nxt.z = proj_unit_ball(over.z + step_z * wavelet_forward(img, problem.wavelet))
            sq += float(np.vdot(nxt.z - cur.z, nxt.z - cur.z).real)
        if problem.alpha < 1:
            dp, dq = l_adjoint(img)
            nxt.p, nxt.q = proj_pair(over.p + step_pq * dp, over.q + step_pq * dq,
                                     problem.tv_variant)
            sq += float(np.vdot(nxt.p - cur.p, nxt.p - cur.p).real)
            sq += float(np.vdot(nxt.q - cur.q, nxt.q - cur.q).real)
        if np.sqrt(sq) <= settings.tol:
            cur = nxt
            break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        c1 = (t_next + t - 1.0) / t_next
        c2 = (t - 1.0) / t_next
        over = DualTriple(
            None if nxt.z is None else c1 * nxt.z - c2 * cur.z,
            None if nxt.p is None else c1 * nxt.p - c2 * cur.p,
            None if nxt.q is None else c1 * nxt.q - c2 * cur.q,
        )
        cur = nxt
        t = t_next
    return w_of(problem, cur), cur, iters


def prox_l1_diag(x: np.ndarray, thresholds) -> np.ndarray:
    """Componentwise magnitude shrinkage preserving phase."""
    x = np.asarray(x, dtype=np.complex128)
    thresholds = np.broadcast_to(np.asarray(thresholds, dtype=float), x.shape)
    if np.any(thresholds < 0):
        raise ValueError("thresholds must be nonnegative")
    mag = np.abs(x)
    scale = np.zeros_like(mag)
    np.divide(np.maximum(mag - thresholds, 0.0), mag, out=scale, where=mag > 0)
    return x * scale


def solve_rank1_root(x: np.ndarray, metric: Rank1Metric, lam: float,
                     tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Weighted l1 proximal mapping for a diagonal +/- rank-1 metric.

    Reduces the coupled problem to a single complex unknown ``beta``: the
    output equals the diagonal-metric shrinkage of ``x - sign*u*beta/tau``
    where ``beta`` zeroes ``J(beta) = u^H (x - shrink(x - sign*u*beta/tau))
    + beta``. The root is found by a damped 2x2 secant (Broyden) iteration
    on the real and imaginary parts.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (metric.dim,):
        raise ValueError("x length does not match metric dim")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    thr = lam / metric.tau
    if metric.sign == 0:
        return prox_l1_diag(x, thr)
    u = metric.u
    shift = metric.sign / metric.tau

    def residual(beta: complex) -> complex:
        shrunk = prox_l1_diag(x - shift * u * beta, thr)
        return complex(np.vdot(u, x - shrunk) + beta)

    beta = 0.0 + 0.0j
    r = residual(beta)
    jac = np.eye(2)
    best = abs(r)
    for it in range(max_iter):
        if abs(r) <= tol:
            return prox_l1_diag(x - shift * u * beta, thr)
        rvec = np.array([r.real, r.imag])
        try:
            d = np.linalg.solve(jac, -rvec)
        except np.linalg.LinAlgError:
            jac = np.eye(2)
            d = -rvec
        step = 1.0
        while True:
            cand = beta + step * (d[0] + 1j * d[1])
            r_new = residual(cand)
            if abs(r_new) < abs(r) or step < 1e-8:
                break
            step *= 0.5
        db = np.array([(cand - beta).real, (cand - beta).imag])
        dr = np.array([(r_new - r).real, (r_new - r).imag])
        denom = float(db @ db)
        if denom > 0:
            jac = jac + np.outer(dr - jac @ db, db) / denom
        beta, r = cand, r_new
        best = min(best, abs(r))
    if abs(r) <= tol:
        return prox_l1_diag(x - shift * u * beta, thr)
    raise RootConvergenceError(best, max_iter)
