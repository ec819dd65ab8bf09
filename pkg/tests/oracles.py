"""Independent reference solvers used to validate the fast paths.

Everything here deliberately avoids the package's dual/root-finding
machinery: the weighted proximal problems are restated as conic programs
(cvxpy) or solved by plain Euclidean proximal-gradient descent on dense
matrices.
"""

import numpy as np

from qnprox import tv_value, wavelet_forward


def dense_wavelet_matrix(spec, dims):
    rows, cols = dims
    n = rows * cols
    t = np.zeros((n, n), dtype=complex)
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = 1.0
        t[:, i] = wavelet_forward(e.reshape(dims), spec)
    return t


def wpm_objective(problem, x):
    """Primal value ||x - v||_B^2 + 2*lam*(alpha*||Tx||_1 + (1-alpha)*TV)."""
    d = x - problem.v
    val = float(np.vdot(d, problem.metric.apply(d)).real)
    reg = 0.0
    img = x.reshape(problem.dims)
    if problem.alpha > 0:
        reg += problem.alpha * float(np.abs(wavelet_forward(img, problem.wavelet)).sum())
    if problem.alpha < 1:
        reg += (1.0 - problem.alpha) * tv_value(img, problem.tv_variant)
    return val + 2.0 * problem.lam * reg


def solve_wpm_cvxpy(problem):
    """High-accuracy conic solve of the weighted proximal subproblem.

    Returns ``(optimal_value, x_opt)`` for the same objective as
    :func:`wpm_objective`.
    """
    import cvxpy as cp

    rows, cols = problem.dims
    n = rows * cols
    bd = problem.metric.dense()
    w, v = np.linalg.eigh(bd)
    b_half = v @ np.diag(np.sqrt(np.maximum(w, 0.0))) @ v.conj().T

    x = cp.Variable(n, complex=True)
    xm = cp.reshape(x, (rows, cols), order="C")
    terms = cp.sum_squares(b_half @ (x - problem.v))
    reg = 0
    if problem.alpha > 0:
        t = dense_wavelet_matrix(problem.wavelet, problem.dims)
        reg += problem.alpha * cp.norm1(t @ x)
    if problem.alpha < 1:
        p = xm[:-1, :] - xm[1:, :]
        q = xm[:, :-1] - xm[:, 1:]
        if problem.tv_variant == "l1":
            tv = cp.sum(cp.abs(p)) + cp.sum(cp.abs(q))
        else:
            pieces = []
            for i in range(rows - 1):
                for j in range(cols - 1):
                    pieces.append(cp.norm(cp.hstack([
                        cp.real(p[i, j]), cp.imag(p[i, j]),
                        cp.real(q[i, j]), cp.imag(q[i, j])])))
            for i in range(rows - 1):
                pieces.append(cp.abs(p[i, cols - 1]))
            for j in range(cols - 1):
                pieces.append(cp.abs(q[rows - 1, j]))
            tv = cp.sum(cp.hstack(pieces))
        reg += (1.0 - problem.alpha) * tv
    objective = terms + 2.0 * problem.lam * reg
    cp_problem = cp.Problem(cp.Minimize(objective))
    cp_problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
                     tol_feas=1e-12, max_iter=200000)
    return float(cp_problem.value), np.asarray(x.value)


def prox_grad_weighted_l1(x, b_dense, lam, iters=200000):
    """Euclidean proximal gradient on lam*||w||_1 + 0.5*||w - x||_B^2."""
    step = 1.0 / np.linalg.eigvalsh(b_dense)[-1]
    w = x.copy()
    for _ in range(iters):
        g = b_dense @ (w - x)
        u = w - step * g
        mag = np.abs(u)
        shrink = np.zeros_like(mag)
        np.divide(np.maximum(mag - lam * step, 0.0), mag, out=shrink, where=mag > 0)
        w = u * shrink
    return w
