"""Benchmark harness: synthetic problems, experiment dispatch, file I/O.

Ground truth and coil maps are generated on the fly (deterministically for
a given size), k-space data is simulated with seeded complex Gaussian
noise, and every requested solver runs on the same data. Each solver's
per-iteration records go to one CSV; a manifest ties the outputs together.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .operators import ForwardModel, make_radial_trajectory, make_spiral_trajectory
from .solvers import METHODS, RUNNERS, IterationRecord, SolverConfig, WpmSettings
from .transforms import WaveletSpec

CSV_HEADER = "iter,time_s,cost,psnr,inner_iters"

IMAGE_MAGIC = b"QPXCIMG\x00"  # 8 bytes; header = magic + u32 rows + u32 cols


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value, or combination)."""


# Shepp-Logan-style ellipses: (weight, semi-x, semi-y, x0, y0, angle_deg)
_ELLIPSES = (
    (1.00, 0.690, 0.920, 0.00, 0.000, 0.0),
    (-0.80, 0.662, 0.874, 0.00, -0.018, 0.0),
    (-0.20, 0.110, 0.310, 0.22, 0.000, -18.0),
    (-0.20, 0.160, 0.410, -0.22, 0.000, 18.0),
    (0.10, 0.210, 0.250, 0.00, 0.350, 0.0),
    (0.10, 0.046, 0.046, 0.00, 0.100, 0.0),
    (0.10, 0.046, 0.046, 0.00, -0.100, 0.0),
    (0.10, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.10, 0.023, 0.023, 0.00, -0.606, 0.0),
    (0.10, 0.023, 0.046, 0.06, -0.605, 0.0),
)

# quadratic phase surface; coefficient sum 1.1 keeps |phi| <= pi/2 after scaling
_PHASE_COEFFS = (0.30, 0.20, 0.25, -0.15, 0.20)


def make_phantom(size: int) -> np.ndarray:
    """Deterministic complex phantom with unit peak magnitude.

    An ellipse (head-style) magnitude image multiplied by a smooth
    quadratic phase that vanishes at the center pixel and stays within
    ``[-pi/2, pi/2]``.
    """
    if size < 8 or size & (size - 1):
        raise ValueError("size must be a power of two, at least 8")
    u = (np.arange(size) - size // 2) / (size / 2.0)
    xx, yy = np.meshgrid(u, u)  # xx varies along columns, yy along rows
    mag = np.zeros((size, size))
    for weight, a, b, x0, y0, ang in _ELLIPSES:
        th = math.radians(ang)
        xr = (xx - x0) * math.cos(th) + (yy - y0) * math.sin(th)
        yr = -(xx - x0) * math.sin(th) + (yy - y0) * math.cos(th)
        mag += weight * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    mag = np.maximum(mag, 0.0)
    mag /= mag.max()
    c1, c2, c3, c4, c5 = _PHASE_COEFFS
    phase = (np.pi / 2.0) * (c1 * xx + c2 * yy + c3 * xx ** 2 + c4 * xx * yy
                             + c5 * yy ** 2) / 1.1
    return mag * np.exp(1j * phase)


def make_sensitivities(size: int, n_coils: int) -> np.ndarray:
    """Smooth Gaussian coil profiles, normalized so the pointwise coil
    energy is exactly one everywhere."""
    if n_coils < 1:
        raise ValueError("need at least one coil")
    u = (np.arange(size) - size // 2) / (size / 2.0)
    xx, yy = np.meshgrid(u, u)
    width = 1.6
    maps = np.empty((n_coils, size, size), dtype=np.complex128)
    for l in range(n_coils):
        th = 2.0 * np.pi * l / n_coils
        cx, cy = 1.1 * math.cos(th), 1.1 * math.sin(th)
        profile = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * width ** 2))
        ramp = 0.2 * np.pi * (math.cos(th) * xx + math.sin(th) * yy)
        maps[l] = profile * np.exp(1j * ramp)
    maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))[None, :, :]
    return maps


@dataclass
class ExperimentConfig:
    size: int = 64
    trajectory: str = "radial"
    spokes: int = 16
    interleaves: int = 8
    readout: int = 64
    coils: int = 2
    noise_var: float = 1e-2
    lam: float = 5e-4
    alpha: float = 1.0
    eta: float = 1e-5
    gamma: float = 1.7
    xi: float = 1.0
    a_k: float = 1.0
    outer_iters: int = 30
    wpm_max_iter: int = 20
    wpm_tol: float = 1e-6
    methods: tuple[str, ...] = ("cqnpm", "apm")
    tv_variant: str = "iso"
    formulation: str = "analysis"
    seed: int = 0

    def validate(self) -> None:
        if self.size < 8 or self.size & (self.size - 1):
            raise ConfigError("size must be a power of two, at least 8")
        if self.trajectory not in ("radial", "spiral"):
            raise ConfigError(f"unknown trajectory {self.trajectory!r}")
        for name in ("spokes", "interleaves", "readout", "coils", "outer_iters",
                     "wpm_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be nonnegative")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.tv_variant not in ("iso", "l1"):
            raise ConfigError(f"unknown tv_variant {self.tv_variant!r}")
        if self.formulation not in ("analysis", "synthesis"):
            raise ConfigError(f"unknown formulation {self.formulation!r}")
        if self.formulation == "synthesis" and self.alpha != 1.0:
            raise ConfigError("synthesis formulation requires alpha = 1")
        try:
            self.solver_config(self.methods[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def wavelet_levels(self) -> int:
        return min(5, int(math.log2(self.size)))

    def solver_config(self, method: str) -> SolverConfig:
        return SolverConfig(
            method=method,
            formulation=self.formulation,
            lam=self.lam,
            alpha=self.alpha,
            eta=self.eta,
            gamma=self.gamma,
            xi=self.xi,
            a_k=self.a_k,
            outer_iters=self.outer_iters,
            wpm=WpmSettings(max_iter=self.wpm_max_iter, tol=self.wpm_tol),
            tv_variant=self.tv_variant,
            wavelet=WaveletSpec(levels=self.wavelet_levels()),
        )


_CONFIG_KEYS = {
    "size": ("size", int),
    "trajectory": ("trajectory", str),
    "spokes": ("spokes", int),
    "interleaves": ("interleaves", int),
    "readout": ("readout", int),
    "coils": ("coils", int),
    "noise_var": ("noise_var", float),
    "lambda": ("lam", float),
    "alpha": ("alpha", float),
    "eta": ("eta", float),
    "gamma": ("gamma", float),
    "xi": ("xi", float),
    "a_k": ("a_k", float),
    "outer_iters": ("outer_iters", int),
    "wpm_max_iter": ("wpm_max_iter", int),
    "wpm_tol": ("wpm_tol", float),
    "methods": ("methods", "methods"),
    "tv_variant": ("tv_variant", str),
    "formulation": ("formulation", str),
    "seed": ("seed", int),
}

_FIELD_TO_KEY = {f: k for k, (f, _) in _CONFIG_KEYS.items()}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a config."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        fname, conv = _CONFIG_KEYS[key]
        try:
            if conv == "methods":
                values[fname] = tuple(m.strip() for m in val.split(",") if m.strip())
            else:
                values[fname] = conv(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def emit_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`: parse(emit(cfg)) == cfg."""
    lines = []
    for f in fields(ExperimentConfig):
        key = _FIELD_TO_KEY[f.name]
        val = getattr(cfg, f.name)
        if f.name == "methods":
            val = ",".join(val)
        elif isinstance(val, float):
            val = format(val, ".17g")
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def build_trajectory(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.trajectory == "radial":
        return make_radial_trajectory(cfg.spokes, cfg.readout)
    return make_spiral_trajectory(cfg.interleaves, cfg.readout)


def simulate(cfg: ExperimentConfig):
    """Ground truth, forward model, and noisy k-space data for a config.

    Noise is i.i.d. complex Gaussian: real and imaginary parts each have
    variance ``noise_var/2`` per sample.
    """
    truth = make_phantom(cfg.size)
    maps = make_sensitivities(cfg.size, cfg.coils)
    model = ForwardModel(build_trajectory(cfg), maps)
    clean = model.forward(truth)
    rng = np.random.default_rng(cfg.seed)
    scale = np.sqrt(cfg.noise_var / 2.0)
    noise = scale * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return truth, model, clean + noise


@dataclass
class RunArtifact:
    config_echo: str
    tables: dict[str, list[IterationRecord]] = field(default_factory=dict)
    finals: dict[str, np.ndarray] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


def write_image(path: Path, img: np.ndarray) -> None:
    """Two little-endian float64 planes (real, imag) behind a 16-byte header."""
    img = np.asarray(img, dtype=np.complex128)
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(IMAGE_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(np.ascontiguousarray(img.real).astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(img.imag).astype("<f8").tobytes())


def read_image(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != IMAGE_MAGIC:
            raise ValueError(f"{path}: not an image file (bad magic)")
        rows, cols = struct.unpack("<II", fh.read(8))
        plane = rows * cols * 8
        real = np.frombuffer(fh.read(plane), dtype="<f8").reshape(rows, cols)
        imag = np.frombuffer(fh.read(plane), dtype="<f8").reshape(rows, cols)
    return real + 1j * imag


def write_records_csv(path: Path, records: list[IterationRecord]) -> None:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(f"{r.iter},{r.time_s:.6f},{format(r.cost, '.17g')},"
                     f"{format(r.psnr, '.17g')},{r.inner_iters}")
    path.write_text("\n".join(lines) + "\n")


def read_records_csv(path: Path) -> list[IterationRecord]:
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    out = []
    for line in lines[1:]:
        it, ts, c, p, ii = line.split(",")
        out.append(IterationRecord(int(it), float(ts), float(c), float(p), int(ii)))
    return out


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   render_figures: bool = True) -> RunArtifact:
    """Run every configured solver on one simulated problem.

    Solvers run sequentially on identical data; a failing solver is
    recorded in the artifact without stopping the others. Emits one CSV
    per solver, the final and ground-truth images, a config echo, figures,
    and a manifest.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth, model, data = simulate(cfg)
    artifact = RunArtifact(config_echo=emit_config(cfg))

    for method in cfg.methods:
        solver_cfg = cfg.solver_config(method)
        try:
            final, records = RUNNERS[method](model, data, solver_cfg, reference=truth)
        except Exception as exc:  # noqa: BLE001 - per-solver isolation
            artifact.failures[method] = f"{type(exc).__name__}: {exc}"
            continue
        artifact.tables[method] = records
        artifact.finals[method] = final

    files = ["config.cfg", "ground_truth.cimg"]
    (out / "config.cfg").write_text(artifact.config_echo)
    write_image(out / "ground_truth.cimg", truth)
    for method, records in artifact.tables.items():
        write_records_csv(out / f"{method}.csv", records)
        write_image(out / f"{method}_final.cimg", artifact.finals[method])
        files += [f"{method}.csv", f"{method}_final.cimg"]
    if render_figures and artifact.tables:
        from .report import render_figures as _render
        files += _render(artifact.tables, out)

    noise_power = model.data_size * cfg.noise_var
    snr_db = (10.0 * np.log10(float(np.vdot(data, data).real) / noise_power)
              if noise_power > 0 else float("inf"))
    manifest = ["[experiment]", f"data_snr_db = {snr_db:.2f}"]
    for method in cfg.methods:
        status = artifact.failures.get(method, "ok")
        manifest.append(f"status_{method} = {status}")
    manifest.append("[files]")
    manifest.extend(files)
    manifest.append("[config]")
    manifest.append(artifact.config_echo.rstrip("\n"))
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n")
    return artifact


def sweep_values(cfg: ExperimentConfig, key: str, raw_values: list[str]):
    """Configs for a one-key sweep, in the order given."""
    if key not in _CONFIG_KEYS:
        raise ConfigError(f"unknown sweep key {key!r}")
    fname, conv = _CONFIG_KEYS[key]
    out = []
    for raw in raw_values:
        try:
            val = tuple(m.strip() for m in raw.split("+")) if conv == "methods" else conv(raw)
        except ValueError:
            raise ConfigError(f"bad sweep value {raw!r} for {key}") from None
        sub = replace(cfg, **{fname: val})
        sub.validate()
        out.append((raw, sub))
    return out
