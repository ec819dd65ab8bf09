"""Simulated multi-coil non-Cartesian MRI forward model.

Trajectories are lists of k-space coordinates in radians/pixel; the
sampling operator is an exact (slow) non-uniform DFT, evaluated with a
separable phase factorization so it stays usable at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Coordinates may touch +pi (spiral endpoints); anything beyond is a bug.
COORD_BOUND = np.pi + 1e-12


def make_radial_trajectory(n_spokes: int, n_readout: int) -> np.ndarray:
    """Equispaced-angle radial trajectory.

    Spoke ``s`` has angle ``s*pi/n_spokes``; along each spoke the radii are
    ``n_readout`` equispaced values covering ``[-pi, pi*(1 - 2/n_readout)]``.

    Returns an ``(n_spokes*n_readout, 2)`` array of ``(k_x, k_y)`` pairs.
    """
    if n_spokes < 1 or n_readout < 2:
        raise ValueError("need n_spokes >= 1 and n_readout >= 2")
    angles = np.arange(n_spokes) * (np.pi / n_spokes)
    radii = -np.pi + 2.0 * np.pi * np.arange(n_readout) / n_readout
    kx = np.outer(np.cos(angles), radii).ravel()
    ky = np.outer(np.sin(angles), radii).ravel()
    return np.column_stack([kx, ky])


def make_spiral_trajectory(n_interleaves: int, n_readout: int, n_turns: int = 8) -> np.ndarray:
    """Archimedean spiral trajectory with ``n_interleaves`` rotated copies.

    Sample ``t`` of interleave ``m`` sits at radius ``pi*t/(n_readout-1)``
    and angle ``2*pi*n_turns*t/(n_readout-1) + 2*pi*m/n_interleaves``.
    """
    if n_interleaves < 1 or n_readout < 2:
        raise ValueError("need n_interleaves >= 1 and n_readout >= 2")
    t = np.arange(n_readout) / (n_readout - 1)
    r = np.pi * t
    base = 2.0 * np.pi * n_turns * t
    offs = 2.0 * np.pi * np.arange(n_interleaves) / n_interleaves
    phi = base[None, :] + offs[:, None]
    kx = (r[None, :] * np.cos(phi)).ravel()
    ky = (r[None, :] * np.sin(phi)).ravel()
    return np.column_stack([kx, ky])


def validate_trajectory(traj: np.ndarray) -> np.ndarray:
    traj = np.asarray(traj, dtype=float)
    if traj.ndim != 2 or traj.shape[1] != 2 or traj.shape[0] < 1:
        raise ValueError("trajectory must be an (M, 2) array with M >= 1")
    if np.abs(traj).max() > COORD_BOUND:
        raise ValueError("trajectory coordinates must lie within [-pi, pi]")
    return traj


def _phase_tables(traj: np.ndarray, rows: int, cols: int):
    """Separable NUDFT phases: E[m, (r,c)] = Er[m,r] * Ec[m,c]."""
    kx = traj[:, 0]
    ky = traj[:, 1]
    er = np.exp(-1j * np.outer(ky, np.arange(rows)))
    ec = np.exp(-1j * np.outer(kx, np.arange(cols)))
    return er, ec


def nudft_forward(img: np.ndarray, traj: np.ndarray, tables=None) -> np.ndarray:
    """Exact non-uniform DFT of a 2-D image.

    Sample ``m`` is ``(1/sqrt(I*J)) * sum_{r,c} img[r,c] exp(-i(kx*c + ky*r))``.
    """
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be a 2-D array")
    rows, cols = img.shape
    er, ec = tables if tables is not None else _phase_tables(validate_trajectory(traj), rows, cols)
    # sum over columns first, then rows: keeps memory at O(M*max(I,J))
    partial = img.astype(np.complex128, copy=False) @ ec.T
    samples = np.einsum("mr,rm->m", er, partial)
    return samples / np.sqrt(rows * cols)


def nudft_adjoint(samples: np.ndarray, traj: np.ndarray, dims: tuple[int, int], tables=None) -> np.ndarray:
    """Exact adjoint of :func:`nudft_forward` under ``<a,b> = b^H a``."""
    samples = np.asarray(samples, dtype=np.complex128)
    traj = validate_trajectory(traj)
    if samples.shape != (traj.shape[0],):
        raise ValueError("sample count must match trajectory length")
    rows, cols = dims
    er, ec = tables if tables is not None else _phase_tables(traj, rows, cols)
    img = (er.conj() * samples[:, None]).T @ ec.conj()
    return img / np.sqrt(rows * cols)


def validate_sensitivities(maps: np.ndarray) -> np.ndarray:
    maps = np.asarray(maps, dtype=np.complex128)
    if maps.ndim != 3 or maps.shape[0] < 1:
        raise ValueError("sensitivities must be an (L, I, J) array")
    ssq = np.sum(np.abs(maps) ** 2, axis=0)
    if ssq.max() > 1.0 + 1e-12:
        raise ValueError("coil sensitivity energy exceeds 1 somewhere")
    return maps


@dataclass
class ForwardModel:
    """Multi-coil sampling operator ``A``: coil weighting followed by NUDFT.

    Acquired data is a flat vector of length ``M*L`` in coil-major blocks.
    The NUDFT phase tables are cached on first use; instances are safe to
    share read-only across threads.
    """

    trajectory: np.ndarray
    maps: np.ndarray
    _tables: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.trajectory = validate_trajectory(self.trajectory)
        self.maps = validate_sensitivities(self.maps)

    @property
    def dims(self) -> tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]

    @property
    def n_coils(self) -> int:
        return self.maps.shape[0]

    @property
    def n_samples(self) -> int:
        return self.trajectory.shape[0]

    @property
    def data_size(self) -> int:
        return self.n_samples * self.n_coils

    def _get_tables(self):
        if self._tables is None:
            self._tables = _phase_tables(self.trajectory, *self.dims)
        return self._tables

    def forward(self, img: np.ndarray) -> np.ndarray:
        """Apply ``A``: per-coil weighted NUDFT, blocks concatenated in coil order."""
        img = np.asarray(img)
        if img.shape != self.dims:
            raise ValueError(f"image shape {img.shape} does not match model dims {self.dims}")
        tables = self._get_tables()
        out = np.empty(self.data_size, dtype=np.complex128)
        m = self.n_samples
        for l in range(self.n_coils):
            out[l * m:(l + 1) * m] = nudft_forward(self.maps[l] * img, self.trajectory, tables)
        return out

    def adjoint(self, data: np.ndarray) -> np.ndarray:
        """Apply ``A^H``; satisfies the adjoint identity with :meth:`forward`."""
        data = np.asarray(data, dtype=np.complex128)
        if data.shape != (self.data_size,):
            raise ValueError(f"data length {data.shape} does not match M*L = {self.data_size}")
        tables = self._get_tables()
        img = np.zeros(self.dims, dtype=np.complex128)
        m = self.n_samples
        for l in range(self.n_coils):
            block = nudft_adjoint(data[l * m:(l + 1) * m], self.trajectory, self.dims, tables)
            img += np.conj(self.maps[l]) * block
        return img

    def fidelity_grad(self, img: np.ndarray, data: np.ndarray):
        """Value and gradient of ``0.5*||A x - y||^2``.

        The gradient is ``A^H (A x - y)``; for a direction ``d`` the
        directional derivative equals ``Re <grad, d>``.
        """
        resid = self.forward(img) - data
        value = 0.5 * float(np.vdot(resid, resid).real)
        return value, self.adjoint(resid)


def fidelity_grad(model: ForwardModel, img: np.ndarray, data: np.ndarray):
    """Functional form of :meth:`ForwardModel.fidelity_grad`."""
    return model.fidelity_grad(img, data)
