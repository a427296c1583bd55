"""Acceptance suite: the nine headline checks at full replication.

Each test prints a one-line verdict so a scan of the output shows where the
suite stands.  Large shared sample sets come from session fixtures.
"""

import os

import numpy as np
import pytest
from scipy.special import ndtr

from conftest import MASTER_SEED, mean_se

from wz_she_lab import brownian as bw
from wz_she_lab import experiments as ex
from wz_she_lab import functionals as fn
from wz_she_lab import rng, she
from wz_she_lab.noise import GridSpec, mollify, sample_white_noise
from wz_she_lab.solver import c_eps, constant_one, feynman_kac, solve_fd


def test_criterion_1_constants_cross_check(constants_big):
    est, c_mc = constants_big
    dc = abs(est.c_star - c_mc.value)
    assert dc <= 3 * c_mc.se, f"c routes differ: {est.c_star} vs {c_mc.value} (se {c_mc.se})"
    ds = abs(est.sigma_star_sq - est.sigma_prime_sq)
    combined = np.hypot(est.sigma_star_sq_se, est.sigma_prime_sq_se)
    assert ds <= 3 * combined, f"sigma routes differ: {ds} > 3*{combined}"
    print(
        f"criterion 1 PASS: c {est.c_star:.5f} vs {c_mc.value:.5f} "
        f"(3se {3*c_mc.se:.5f}); sigma {est.sigma_star_sq:.6f} vs "
        f"{est.sigma_prime_sq:.6f} (3se {3*combined:.6f})"
    )


def test_criterion_2_local_time_oracles(local_time_samples_big, pair_local_time_samples_big):
    mL, _ = mean_se(local_time_samples_big)
    target_L = np.sqrt(2 / np.pi)
    assert abs(mL - target_L) <= 0.02 * target_L, f"E[L(1,0)] {mL} vs {target_L}"
    mell, _ = mean_se(pair_local_time_samples_big)
    target_ell = np.sqrt(1 / np.pi)
    assert abs(mell - target_ell) <= 0.02 * target_ell, f"E[ell(1)] {mell} vs {target_ell}"
    mexp, _ = mean_se(np.exp(pair_local_time_samples_big))
    target_exp = 2 * np.exp(0.25) * float(ndtr(np.sqrt(0.5)))
    assert abs(mexp - target_exp) <= 0.02 * target_exp, f"E[e^ell] {mexp} vs {target_exp}"
    print(
        f"criterion 2 PASS: L {mL:.4f}/{target_L:.4f}, ell {mell:.4f}/"
        f"{target_ell:.4f}, e^ell {mexp:.4f}/{target_exp:.4f}"
    )


def test_criterion_3_tanaka_ladder():
    ns = (4, 16, 64, 256)
    ladder = bw.tanaka_error_ladder(1000, ns, 1.0 / 102400, seed=MASTER_SEED + 5)
    stats = {n: mean_se(ladder[n]) for n in ns}
    vals = [stats[n][0] for n in ns]
    assert all(a > b for a, b in zip(vals, vals[1:])), f"not decreasing: {vals}"
    gap = stats[ns[0]][0] - stats[ns[-1]][0]
    sep = 3 * np.hypot(stats[ns[0]][1], stats[ns[-1]][1])
    assert gap > sep, f"endpoints not separated: gap {gap} <= {sep}"
    print("criterion 3 PASS: sup-error ladder " + " > ".join(f"{v:.3f}" for v in vals))


def test_criterion_4_functional_limits(constants_big, pair_local_time_samples_big):
    est, _ = constants_big
    # centered microscopic functional: zero mean at every scale
    for eps, npaths in ((0.4, 5000), (0.2, 5000), (0.1, 10_000)):
        x = fn.x_eps_samples(npaths, eps, 1.0, seed=MASTER_SEED + 4)
        m, se = mean_se(x)
        assert abs(m) <= 3 * se, f"E[X_{eps}] {m} vs 3se {3*se}"
        if eps == 0.1:
            var = float(x.var(ddof=1))
            ref = est.sigma_prime_sq
            assert abs(var - ref) <= 0.10 * ref, f"Var[X_0.1] {var} vs {ref}"
    # pair functional converges to the intersection local time in L^2
    data = fn.pair_functional_samples(600, [0.4, 0.2, 0.1], 1.0, seed=MASTER_SEED + 3)
    errs = [float(np.mean((data[("Y", e)] - data["ell"]) ** 2)) for e in (0.4, 0.2, 0.1)]
    assert errs[0] > errs[1] > errs[2], f"E[(Y-ell)^2] not decreasing: {errs}"
    print(
        f"criterion 4 PASS: Var[X_0.1] {var:.6f} vs {ref:.6f}; "
        f"E[(Y-ell)^2] {errs[0]:.4f} > {errs[1]:.4f} > {errs[2]:.4f}"
    )


def test_criterion_5_solver_cross_validation(constants_big):
    est, _ = constants_big
    grid = GridSpec(t_max=0.6, x_min=-8.0, x_max=8.0, dt=1e-3, dx=0.02, t_min=-0.05)
    field = mollify(sample_white_noise(grid, MASTER_SEED + 6), 0.2)
    c = c_eps(0.2, est)
    u0 = constant_one()
    sol = solve_fd(field, c, u0, t_max=0.5, store_every=500)
    lines = []
    for x in (-1.0, -0.5, 0.0, 0.5, 1.0):
        fk = feynman_kac(field, c, u0, 0.5, x, 100_000, seed=MASTER_SEED + 6)
        fd_val = float(sol.at(0.5, x))
        allowance = 0.03 * abs(fk.value)
        assert abs(fd_val - fk.value) <= 3 * fk.se + allowance, (
            f"FD {fd_val} vs FK {fk.value} +/- {fk.se} at x={x}"
        )
        lines.append(f"{x:+.1f}:{fd_val:.3f}/{fk.value:.3f}")
    # self-convergence under grid halving
    xs_fine = np.arange(-8.0 + 0.005, 8.0, 0.01)
    fine = solve_fd(field, c, u0, t_max=0.5, dt_s=5e-4, store_every=1000, xs=xs_fine)
    for x in (-1.0, 0.0, 1.0):
        a, b = float(sol.at(0.5, x)), float(fine.at(0.5, x))
        assert abs(a - b) <= 0.03 * abs(b), f"self-convergence at {x}: {a} vs {b}"
    print("criterion 5 PASS: FD/FK " + " ".join(lines))


def test_criterion_6_second_moment_triangle(pair_local_time_samples_big):
    oracle = she.second_moment_oracle(1.0)
    chaos = she.chaos_second_moment(1.0, 12)
    assert abs(chaos - oracle) <= 0.01 * oracle, f"chaos {chaos} vs {oracle}"
    lt, _ = mean_se(np.exp(pair_local_time_samples_big))
    assert abs(lt - oracle) <= 0.02 * oracle, f"local-time MC {lt} vs {oracle}"
    grid = GridSpec(t_max=1.0, x_min=-8.0, x_max=8.0, dt=2e-4, dx=0.02)
    ito = she.ito_second_moment(grid, 500, seed=MASTER_SEED + 7)
    assert abs(ito.value - oracle) <= 0.05 * oracle, f"Ito MC {ito.value} vs {oracle}"
    print(
        f"criterion 6 PASS: chaos {chaos:.4f}, local-time {lt:.4f}, "
        f"Ito {ito.value:.4f} +/- {ito.se:.4f} vs {oracle:.4f}"
    )


def test_criterion_7_theorem_convergence(constants_big):
    est, _ = constants_big
    cfg = ex.ExperimentConfig(
        experiment="theorem-convergence",
        master_seed=MASTER_SEED,
        replicates=300,
        grid={"t_max": 0.6, "x_min": -8.0, "x_max": 8.0, "dt": 1e-3, "dx": 0.01, "t_min": -0.1},
        x_probes=tuple(np.arange(-5.0, 5.5, 0.5)),
    )
    rep = ex.run_theorem_convergence(cfg, est)
    for name, ok in rep.checks.items():
        assert ok, f"{name} failed: {rep.cells}"
    a = rep.cells["cauchy_sq_0.4_0.2"]["value"]
    b = rep.cells["cauchy_sq_0.2_0.1"]["value"]
    sm = rep.cells["second_moment_0.2_0.1"]["value"]
    print(
        f"criterion 7 PASS: cauchy {a:.4f} > {b:.4f}; E[u02*u01] {sm:.4f} "
        f"vs {rep.cells['second_moment_target']['value']:.4f}"
    )


def test_criterion_8_homogenization():
    cfg = ex.ExperimentConfig(
        experiment="homogenization",
        master_seed=MASTER_SEED,
        replicates=800,
        sweep_replicates=200,
        x_probes=tuple(np.arange(-5.0, 5.5, 0.5)),
    )
    rep = ex.run_homogenization_suite(cfg, fn.c_star_quadrature())
    for name, ok in rep.checks.items():
        assert ok, f"{name} failed: {rep.cells}"
    print(
        f"criterion 8 PASS: L1 {rep.cells['corrected_L1_error']['value']:.4f}; "
        f"EW var {rep.cells['ew_variance']['value']:.4f} vs "
        f"{rep.cells['ew_target']['value']:.4f}; slope "
        f"{rep.cells['loglog_slope']['value']:.3f}"
    )


def test_criterion_9_determinism(monkeypatch, tmp_path):
    cfg = ex.ExperimentConfig(
        experiment="theorem-convergence", master_seed=MASTER_SEED + 9, replicates=8,
        npaths=4000,
    )
    texts = {}
    for workers in (1, 4, 8):
        monkeypatch.setenv(ex.WORKERS_ENV, str(workers))
        from wz_she_lab.functionals import ConstantsEstimate, c_star_quadrature

        consts = ConstantsEstimate(c_star_quadrature(), 0.0, 0.004, 0.0, 0.004, 0.0)
        rep = ex.run_theorem_convergence(cfg, consts)
        out = tmp_path / f"w{workers}"
        rep.write(str(out))
        texts[workers] = (out / "report.json").read_bytes()
    assert texts[1] == texts[4] == texts[8], "reports differ across worker counts"
    print("criterion 9 PASS: byte-identical reports across workers 1, 4, 8")
