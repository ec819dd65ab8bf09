"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The heavy convergence
criteria build the bundled benchmark problems from ``configs/``.
"""

import dataclasses
from pathlib import Path

import numpy as np
import pytest

import qnprox as q
from qnprox.bench import parse_config, read_records_csv, run_experiment, simulate
from qnprox.solvers import _Objective
from qnprox.wpm import WpmProblem, WpmSettings

from conftest import random_complex
from oracles import solve_wpm_cvxpy, wpm_objective

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def report(criterion: int, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion} {status} {detail}".rstrip())
    assert ok, f"criterion {criterion}: {detail}"


def load_problem(name):
    cfg = parse_config((CONFIG_DIR / name).read_text())
    truth, model, data = simulate(cfg)
    return cfg, truth, model, data


def test_criterion_01_adjoint_identities():
    rng = np.random.default_rng(101)
    traj = q.make_radial_trajectory(8, 32)
    model = q.ForwardModel(traj, q.make_sensitivities(32, 2))
    spec = q.WaveletSpec(levels=3)
    worst = 0.0
    for _ in range(100):
        x = random_complex(rng, 32, 32)
        s_f = random_complex(rng, traj.shape[0])
        gap = abs(np.vdot(s_f, q.nudft_forward(x, traj))
                  - np.vdot(q.nudft_adjoint(s_f, traj, (32, 32)), x))
        worst = max(worst, gap / (np.linalg.norm(x) * np.linalg.norm(s_f)))

        s_a = random_complex(rng, model.data_size)
        gap = abs(np.vdot(s_a, model.forward(x)) - np.vdot(model.adjoint(s_a), x))
        worst = max(worst, gap / (np.linalg.norm(x) * np.linalg.norm(s_a)))

        s_w = random_complex(rng, 1024)
        gap = abs(np.vdot(s_w, q.wavelet_forward(x, spec))
                  - np.vdot(q.wavelet_adjoint(s_w, spec, (32, 32)), x))
        worst = max(worst, gap / (np.linalg.norm(x) * np.linalg.norm(s_w)))

        p = random_complex(rng, 31, 32)
        qq = random_complex(rng, 32, 31)
        ap, aq = q.l_adjoint(x)
        gap = abs(np.vdot(x, q.l_apply(p, qq)) - (np.vdot(ap, p) + np.vdot(aq, qq)))
        pair_norm = np.sqrt(np.linalg.norm(p) ** 2 + np.linalg.norm(qq) ** 2)
        worst = max(worst, gap / (np.linalg.norm(x) * pair_norm))
    report(1, worst <= 1e-10, f"(worst relative adjoint gap {worst:.2e})")


def test_criterion_02_wavelet_left_invertibility():
    rng = np.random.default_rng(102)
    spec = q.WaveletSpec(levels=5)
    worst = 0.0
    for _ in range(100):
        x = random_complex(rng, 64, 64)
        back = q.wavelet_adjoint(q.wavelet_forward(x, spec), spec, (64, 64))
        worst = max(worst, np.linalg.norm(back - x) / np.linalg.norm(x))
    report(2, worst <= 1e-12, f"(worst round-trip error {worst:.2e})")


def test_criterion_03_difference_operator_norm():
    rng = np.random.default_rng(103)
    x = random_complex(rng, 64, 64)
    est = 0.0
    for _ in range(300):
        p, qq = q.l_adjoint(x)
        y = q.l_apply(p, qq)
        est = np.vdot(x, y).real / np.vdot(x, x).real
        x = y / np.linalg.norm(y)
    report(3, 7.5 <= est <= 8.0 + 1e-6, f"(||L||^2 estimate {est:.6f})")


def test_criterion_04_sr1_secant_and_min_eigenvalue():
    rng = np.random.default_rng(104)
    worst_secant = worst_eig = 0.0
    kept = 0
    for _ in range(1000):
        g = random_complex(rng, 16, 16)
        g = g @ g.conj().T / 16
        s = random_complex(rng, 16)
        m = g @ s
        b = q.sr1_update(s, m, gamma=1.7)
        if b.sign != 0:
            kept += 1
            worst_secant = max(worst_secant,
                               np.linalg.norm(b.apply(s) - m) / np.linalg.norm(m))
        dense_min = np.linalg.eigvalsh(b.dense())[0]
        worst_eig = max(worst_eig, abs(b.min_eigenvalue() - dense_min)
                        / max(1.0, abs(dense_min)))
    ok = worst_secant <= 1e-10 and worst_eig <= 1e-8 and kept > 900
    report(4, ok, f"(secant {worst_secant:.2e}, eig gap {worst_eig:.2e}, "
                  f"rank-1 kept {kept}/1000)")


def test_criterion_05_wpm_oracle_equivalence():
    rng = np.random.default_rng(105)
    spec = q.WaveletSpec(levels=2)
    cases = [(0.0, "iso"), (0.0, "l1"), (0.5, "iso"), (0.5, "l1"), (1.0, "iso")]
    worst_obj = worst_pair = 0.0
    for trial in range(50):
        alpha, variant = cases[trial % len(cases)]
        s = random_complex(rng, 64)
        g = random_complex(rng, 64, 64)
        g = g @ g.conj().T / 64
        metric = q.sr1_update(s, g @ s, gamma=1.7)
        v = random_complex(rng, 64)
        prob = WpmProblem(v, metric, 0.3, alpha, (8, 8), variant, spec)
        x, _, _ = q.solve_dual_fista(prob, WpmSettings(max_iter=2000, tol=1e-10))
        ref, _ = solve_wpm_cvxpy(prob)
        worst_obj = max(worst_obj, abs(wpm_objective(prob, x) - ref) / abs(ref))
        if alpha == 1.0:
            tv_vec = q.wavelet_forward(v.reshape(8, 8), spec)
            tu = q.wavelet_forward(metric.u.reshape(8, 8), spec)
            tb = q.Rank1Metric(64, metric.tau, metric.sign, tu)
            x_root = q.wavelet_adjoint(q.solve_rank1_root(tv_vec, tb, prob.lam),
                                       spec, (8, 8)).ravel()
            worst_pair = max(worst_pair, np.abs(x_root - x).max())
    ok = worst_obj <= 1e-6 and worst_pair <= 1e-6
    report(5, ok, f"(worst objective gap {worst_obj:.2e}, "
                  f"worst route disagreement {worst_pair:.2e})")


def test_criterion_06_dual_gradient_finite_differences():
    rng = np.random.default_rng(106)
    spec = q.WaveletSpec(levels=2)
    worst = 0.0
    for trial in range(20):
        alpha = (0.0, 0.5, 1.0)[trial % 3]
        s = random_complex(rng, 64)
        g = random_complex(rng, 64, 64)
        g = g @ g.conj().T / 64
        metric = q.sr1_update(s, g @ s)
        prob = WpmProblem(random_complex(rng, 64), metric, 0.3, alpha, (8, 8),
                          "iso", spec)
        triple = q.DualTriple(
            0.3 * random_complex(rng, 64) if alpha > 0 else None,
            0.3 * random_complex(rng, 7, 8) if alpha < 1 else None,
            0.3 * random_complex(rng, 8, 7) if alpha < 1 else None,
        )
        grad = q.dual_gradient(prob, triple)

        def h_of(t):
            w = q.w_of(prob, t)
            return float(np.vdot(w, prob.metric.apply(w)).real)

        step = 1e-6
        for block in ("z", "p", "q"):
            gblock = getattr(grad, block)
            if gblock is None:
                continue
            d = random_complex(rng, *getattr(triple, block).shape)
            tp, tm = triple.copy(), triple.copy()
            setattr(tp, block, getattr(triple, block) + step * d)
            setattr(tm, block, getattr(triple, block) - step * d)
            fd = (h_of(tp) - h_of(tm)) / (2 * step)
            an = float(np.vdot(gblock, d).real)
            worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    report(6, worst <= 1e-5, f"(worst relative gradient error {worst:.2e})")


def test_criterion_07_convergence_trend():
    cfg0, _, _, _ = load_problem("radial_wavelet.cfg")
    wins = 0
    gaps = []
    for seed in (1, 2, 3, 4, 5):
        cfg = dataclasses.replace(cfg0, seed=seed, outer_iters=100)
        truth, model, data = simulate(cfg)
        _, rec_c = q.run_cqnpm(model, data, cfg.solver_config("cqnpm"), reference=truth)
        apm_cfg = dataclasses.replace(cfg.solver_config("apm"), outer_iters=500)
        _, rec_a = q.run_apm(model, data, apm_cfg, reference=truth)
        wins += rec_c[16].cost <= rec_a[16].cost
        ref = rec_a[500].cost
        gaps.append(max(abs(rec_c[100].cost - ref), abs(rec_a[100].cost - ref)) / ref)
    ok_a = wins >= 4
    ok_b = max(gaps) <= 0.01
    report(7, ok_a and ok_b,
           f"(part a: quasi-Newton ahead at iter 16 on {wins}/5 seeds; "
           f"part b: worst 100-iteration gap to the 500-iteration reference "
           f"{max(gaps):.3f} vs 0.01 allowed)")


def test_criterion_08_partial_smoothing_fidelity():
    rng = np.random.default_rng(108)
    spec = q.WaveletSpec(levels=5)
    eta = 1e-5
    worst_gap = 0.0
    for _ in range(20):
        x = random_complex(rng, 64, 64)
        t = q.wavelet_forward(x, spec)
        sval, _ = q.smoothed_l1(t, eta)
        gap = sval - np.abs(t).sum()
        assert gap >= 0.0
        worst_gap = max(worst_gap, gap)
    bound = 64 * 64 * np.sqrt(eta)
    ok_bound = worst_gap <= bound

    cfg, truth, model, data = load_problem("radial_wavtv.cfg")
    _, rec_c = q.run_cqnpm(model, data, cfg.solver_config("cqnpm"), reference=truth)
    _, rec_s = q.run_partial_smoothing(model, data, cfg.solver_config("s_cqnpm"),
                                       reference=truth)
    rel = abs(rec_s[30].cost - rec_c[30].cost) / rec_c[30].cost
    ok_cost = rel <= 0.02
    report(8, ok_bound and ok_cost,
           f"(surrogate gap {worst_gap:.3f} <= {bound:.3f}; "
           f"30-iteration cost difference {rel:.4f} vs 0.02 allowed)")


def _mono_violations(costs, start=3, slack=5e-3):
    return [(k, costs[k + 1] / costs[k] - 1.0) for k in range(start, len(costs) - 1)
            if costs[k + 1] > costs[k] * (1.0 + slack)]


def test_criterion_09_robustness_sweeps():
    cfg0, truth, model, data = load_problem("radial_wavtv.cfg")
    cfg0 = dataclasses.replace(cfg0, outer_iters=16)
    problems = []

    finals = []
    for gamma in (1.25, 1.7, 2.0, 3.0):
        sc = dataclasses.replace(cfg0.solver_config("cqnpm"), gamma=gamma)
        _, rec = q.run_cqnpm(model, data, sc, reference=truth)
        costs = [r.cost for r in rec]
        finals.append(costs[-1])
        for k, jump in _mono_violations(costs):
            problems.append(f"gamma={gamma}: +{jump:.1%} at iter {k + 1}")
    spread = max(finals) / min(finals) - 1.0
    if spread > 0.05:
        problems.append(f"gamma final-cost spread {spread:.1%}")

    finals = {}
    for max_iter in (1, 5, 10, 20, 50):
        sc = dataclasses.replace(cfg0.solver_config("cqnpm"),
                                 wpm=WpmSettings(max_iter=max_iter, tol=1e-6))
        _, rec = q.run_cqnpm(model, data, sc, reference=truth)
        costs = [r.cost for r in rec]
        finals[max_iter] = costs[-1]
        for k, jump in _mono_violations(costs):
            problems.append(f"max_iter={max_iter}: +{jump:.1%} at iter {k + 1}")
    big = [v for mi, v in finals.items() if mi >= 10]
    spread = max(big) / min(big) - 1.0
    if spread > 0.05:
        problems.append(f"max_iter>=10 final-cost spread {spread:.1%}")

    report(9, not problems, "(" + "; ".join(problems) + ")" if problems else "")


def test_criterion_10_determinism(tmp_path):
    cfg, _, _, _ = load_problem("radial_wavelet.cfg")
    cfg = dataclasses.replace(cfg, outer_iters=5)
    run_experiment(cfg, tmp_path / "a", render_figures=False)
    run_experiment(cfg, tmp_path / "b", render_figures=False)
    identical = True
    for method in cfg.methods:
        for rows in zip((tmp_path / "a" / f"{method}.csv").read_text().splitlines(),
                        (tmp_path / "b" / f"{method}.csv").read_text().splitlines()):
            cells = [r.split(",") for r in rows]
            stripped = [[c for i, c in enumerate(cs) if i != 1] for cs in cells]
            if stripped[0] != stripped[1]:
                identical = False
    report(10, identical, "(CSVs byte-identical excluding the time column)")
