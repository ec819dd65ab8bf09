"""Sparsifying transforms and their dual machinery.

Provides the orthonormal Haar wavelet pair ``T``/``T^H``, the discrete
total-variation functions with zero Neumann boundaries, the difference
operator pair used by the TV dual representation, projections onto the
dual feasible sets, and a smooth surrogate for the l1 norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class WaveletSpec:
    """Orthonormal wavelet configuration (Haar family only)."""

    levels: int
    family: str = "haar"

    def __post_init__(self):
        if self.family != "haar":
            raise ValueError(f"unsupported wavelet family: {self.family!r}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")

    def validate_dims(self, dims: tuple[int, int]) -> None:
        rows, cols = dims
        block = 1 << self.levels
        if block > min(rows, cols) or rows % block or cols % block:
            raise ValueError(
                f"dims {dims} not divisible by 2^{self.levels} (or too small)")


def _haar_step(block: np.ndarray, axis: int) -> np.ndarray:
    even = np.take(block, np.arange(0, block.shape[axis], 2), axis=axis)
    odd = np.take(block, np.arange(1, block.shape[axis], 2), axis=axis)
    return np.concatenate([(even + odd) * _INV_SQRT2, (even - odd) * _INV_SQRT2], axis=axis)


def _haar_step_inv(block: np.ndarray, axis: int) -> np.ndarray:
    half = block.shape[axis] // 2
    approx = np.take(block, np.arange(half), axis=axis)
    detail = np.take(block, np.arange(half, 2 * half), axis=axis)
    out = np.empty_like(block)
    even = (approx + detail) * _INV_SQRT2
    odd = (approx - detail) * _INV_SQRT2
    idx_even = np.arange(0, block.shape[axis], 2)
    idx_odd = np.arange(1, block.shape[axis], 2)
    if axis == 0:
        out[idx_even, :] = even
        out[idx_odd, :] = odd
    else:
        out[:, idx_even] = even
        out[:, idx_odd] = odd
    return out


def wavelet_forward(img: np.ndarray, spec: WaveletSpec) -> np.ndarray:
    """Multi-level separable Haar analysis; returns coefficients ``t = T x``.

    The transform is complex-linear and orthonormal, so ``||t|| = ||x||``.
    Coefficients come back as a flat row-major vector of length ``I*J``.
    """
    img = np.asarray(img, dtype=np.complex128)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    spec.validate_dims(img.shape)
    coeffs = img.copy()
    rows, cols = img.shape
    for _ in range(spec.levels):
        sub = coeffs[:rows, :cols]
        sub = _haar_step(sub, axis=0)
        sub = _haar_step(sub, axis=1)
        coeffs[:rows, :cols] = sub
        rows //= 2
        cols //= 2
    return coeffs.ravel()


def wavelet_adjoint(coeffs: np.ndarray, spec: WaveletSpec, dims: tuple[int, int]) -> np.ndarray:
    """Inverse (= adjoint) of :func:`wavelet_forward`: ``T^H t``."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    rows, cols = dims
    if coeffs.shape != (rows * cols,):
        raise ValueError("coefficient length must equal I*J")
    spec.validate_dims(dims)
    img = coeffs.reshape(rows, cols).copy()
    sizes = [(rows >> k, cols >> k) for k in range(spec.levels)]
    for r, c in reversed(sizes):
        sub = img[:r, :c]
        sub = _haar_step_inv(sub, axis=1)
        sub = _haar_step_inv(sub, axis=0)
        img[:r, :c] = sub
    return img


def tv_value(img: np.ndarray, variant: str = "iso") -> float:
    """Discrete total variation with zero Neumann boundary conditions.

    ``iso`` couples the vertical/horizontal differences inside a square
    root of squared magnitudes; ``l1`` sums their magnitudes separately.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    p = img[:-1, :] - img[1:, :]
    q = img[:, :-1] - img[:, 1:]
    if variant == "l1":
        return float(np.abs(p).sum() + np.abs(q).sum())
    if variant != "iso":
        raise ValueError(f"unknown TV variant: {variant!r}")
    joint = np.sqrt(np.abs(p[:, :-1]) ** 2 + np.abs(q[:-1, :]) ** 2)
    total = joint.sum()
    if img.shape[1] >= 1 and p.shape[0]:
        total += np.abs(p[:, -1]).sum()
    if q.shape[1]:
        total += np.abs(q[-1, :]).sum()
    return float(total)


def l_apply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Assemble an image from a difference pair: the operator adjoint to
    :func:`l_adjoint`, with out-of-range pair entries treated as zero."""
    p = np.asarray(p, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    rows = q.shape[0]
    cols = p.shape[1]
    if p.shape != (rows - 1, cols) or q.shape != (rows, cols - 1):
        raise ValueError(f"inconsistent pair shapes {p.shape}, {q.shape}")
    out = np.zeros((rows, cols), dtype=np.complex128)
    out[:-1, :] += p
    out[1:, :] -= p
    out[:, :-1] += q
    out[:, 1:] -= q
    return out


def l_adjoint(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertical and horizontal forward differences of an image."""
    img = np.asarray(img, dtype=np.complex128)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    return img[:-1, :] - img[1:, :], img[:, :-1] - img[:, 1:]


def proj_unit_ball(z: np.ndarray) -> np.ndarray:
    """Componentwise projection onto the complex unit disk."""
    z = np.asarray(z, dtype=np.complex128)
    return z / np.maximum(1.0, np.abs(z))


def proj_pair(p: np.ndarray, q: np.ndarray, variant: str = "iso"):
    """Project a difference pair onto the TV dual feasible set.

    ``l1``: every entry of both grids onto the unit disk independently.
    ``iso``: entries sharing a pixel are scaled jointly by the root of
    their summed squared magnitudes; the last column of ``p`` and last
    row of ``q`` are projected onto unit disks individually.
    """
    p = np.asarray(p, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    rows = q.shape[0]
    cols = p.shape[1]
    if p.shape != (rows - 1, cols) or q.shape != (rows, cols - 1):
        raise ValueError(f"inconsistent pair shapes {p.shape}, {q.shape}")
    if variant == "l1":
        return proj_unit_ball(p), proj_unit_ball(q)
    if variant != "iso":
        raise ValueError(f"unknown TV variant: {variant!r}")
    p = p.copy()
    q = q.copy()
    joint = np.maximum(1.0, np.sqrt(np.abs(p[:, :-1]) ** 2 + np.abs(q[:-1, :]) ** 2))
    p[:, :-1] /= joint
    q[:-1, :] /= joint
    if cols >= 1 and p.shape[0]:
        p[:, -1] = proj_unit_ball(p[:, -1])
    if q.shape[1]:
        q[-1, :] = proj_unit_ball(q[-1, :])
    return p, q


@dataclass
class DualTriple:
    """Dual variables ``(z, P, Q)``; blocks are ``None`` when their term
    is absent (``z`` for pure TV, the pair for pure wavelet)."""

    z: np.ndarray | None = None
    p: np.ndarray | None = None
    q: np.ndarray | None = None

    def copy(self) -> "DualTriple":
        return DualTriple(
            None if self.z is None else self.z.copy(),
            None if self.p is None else self.p.copy(),
            None if self.q is None else self.q.copy(),
        )


def smoothed_l1(coeffs: np.ndarray, eta: float):
    """Smooth l1 surrogate ``sum_n sqrt(|t_n|^2 + eta)`` and its gradient.

    The gap to the true l1 norm is between 0 and ``N*sqrt(eta)``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    root = np.sqrt(np.abs(coeffs) ** 2 + eta)
    return float(root.sum()), coeffs / root
