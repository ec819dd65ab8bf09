"""Rank-one quasi-Newton metric for the smooth term's curvature.

A single symmetric rank-1 update of a scaled identity, kept in factored
form ``B = tau*I + sign * u u^H`` so that applying ``B`` and ``B^{-1}``
costs one inner product each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotPositiveDefiniteError(ValueError):
    """Raised when a metric that must be positive definite is not."""


@dataclass(frozen=True)
class Rank1Metric:
    """Hermitian positive definite weighting ``tau*I + sign * u u^H``.

    ``sign = 0`` means a pure scaled identity (``u`` is all zeros, either
    the fallback scale or a clean quasi-Newton diagonal). Instances are
    immutable and safe to share.
    """

    dim: int
    tau: float
    sign: int
    u: np.ndarray

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "Rank1Metric":
        if scale <= 0:
            raise ValueError("scale must be positive")
        return cls(dim, float(scale), 0, np.zeros(dim, dtype=np.complex128))

    def _check_dim(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape != (self.dim,):
            raise ValueError(f"vector length {v.shape} does not match metric dim {self.dim}")
        return v

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``B v``."""
        v = self._check_dim(v)
        if self.sign == 0:
            return self.tau * v
        return self.tau * v + self.sign * self.u * np.vdot(self.u, v)

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        """``B^{-1} v`` via the rank-1 (Sherman-Morrison) inverse."""
        v = self._check_dim(v)
        if self.sign == 0:
            return v / self.tau
        unorm2 = float(np.vdot(self.u, self.u).real)
        denom = self.tau ** 2 * (1.0 + self.sign * unorm2 / self.tau)
        if denom <= 0:
            raise NotPositiveDefiniteError("metric is not positive definite")
        return v / self.tau - self.sign * self.u * (np.vdot(self.u, v) / denom)

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue, available in closed form."""
        if self.sign == -1:
            lam = self.tau - float(np.vdot(self.u, self.u).real)
            if lam <= 0:
                raise NotPositiveDefiniteError("metric is not positive definite")
            return lam
        return self.tau

    def dense(self) -> np.ndarray:
        """Materialize ``B`` (tests and tiny problems only)."""
        b = self.tau * np.eye(self.dim, dtype=np.complex128)
        if self.sign != 0:
            b += self.sign * np.outer(self.u, self.u.conj())
        return b


def sr1_update(s: np.ndarray, m: np.ndarray, gamma: float = 1.7,
               xi: float = 1.0, delta: float = 1e-8) -> Rank1Metric:
    """Rank-1 curvature update from a step ``s`` and gradient change ``m``.

    The base scale is ``tau = gamma*||m||^2 / Re<s, m>`` (``gamma > 1``
    keeps the result positive definite when ``m`` comes from a PSD
    quadratic); the rank-1 correction uses ``u = m - tau*s``, dropped when
    nearly orthogonal to ``s``. Non-positive curvature ``Re<s, m> <= 0``
    falls back to ``xi*I``.
    """
    if gamma <= 1:
        raise ValueError("gamma must be > 1")
    if xi <= 0:
        raise ValueError("xi must be positive")
    s = np.asarray(s, dtype=np.complex128)
    m = np.asarray(m, dtype=np.complex128)
    if s.shape != m.shape or s.ndim != 1:
        raise ValueError("s and m must be 1-D vectors of equal length")
    dim = s.shape[0]
    zeros = np.zeros(dim, dtype=np.complex128)
    s_norm = np.linalg.norm(s)
    m_norm2 = float(np.vdot(m, m).real)
    if s_norm == 0.0 or m_norm2 == 0.0:
        return Rank1Metric(dim, float(xi), 0, zeros)
    # <s, m> = m^H s; only the real part enters (imaginary residue is
    # discarded to keep B Hermitian)
    sm = float(np.vdot(m, s).real)
    if sm <= 0.0:
        return Rank1Metric(dim, float(xi), 0, zeros)
    tau = gamma * m_norm2 / sm
    u = m - tau * s
    us = np.vdot(s, u)  # <u, s> = s^H u
    if abs(us) <= delta * s_norm * np.linalg.norm(u):
        return Rank1Metric(dim, float(tau), 0, zeros)
    d = float(us.real)
    if d == 0.0:
        return Rank1Metric(dim, float(tau), 0, zeros)
    sign = 1 if d > 0 else -1
    return Rank1Metric(dim, float(tau), sign, u / np.sqrt(abs(d)))
