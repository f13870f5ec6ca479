"""End-to-end acceptance checks for the headline numerical claims.

Each test records a one-line verdict with the session recorder (see
conftest.py); run `pytest tests/test_acceptance.py` to get the full block.
Tolerances are pinned here on purpose -- loosening them is a behavior change,
not a test fix. Expensive minimizers come from the shared session cache.
"""
from __future__ import annotations

import json
from time import perf_counter

import numpy as np
import pytest

from hophase import (
    EnergyParams,
    EnsembleSpec,
    Grid2D,
    GridFunction1D,
    JumpFunction,
    LineInterface,
    CircleInterface,
    ProfileProblem,
    build_recovery_1d,
    build_recovery_2d,
    count_transitions,
    energy_F_eps,
    energy_F_eps_2d,
    energy_gradient,
    estimate_mk,
    gamma_sweep,
    hermite_extension,
    interface_length,
    interp_probe,
    interp_ratio,
    make_grid,
    mstar_k,
    project_BV,
    relaxed_family,
    solve_clamped,
)
from hophase.cli import main as cli_main
from hophase.diagnostics import _ensemble
from hophase.profile import _Encoding, _Objective, default_initial_profile

M1_EXACT = 8.0 / 3.0

TARGETS = {
    1: JumpFunction((0.0, 1.0), (0.5,), -1),
    2: JumpFunction((0.0, 1.0), (1.0 / 3.0, 2.0 / 3.0), -1),
    3: JumpFunction((0.0, 1.0), (0.25, 0.5, 0.75), -1),
}
EPS_LISTS = {1: [2.0**-5, 2.0**-6], 2: [2.0**-5, 2.0**-6], 3: [2.0**-6, 2.0**-7]}

CACHE_GRIDS = {1: (5.0, 1001), 2: (5.0, 1001), 3: (5.0, 641)}


def _cached(profiles, k):
    T, n = CACHE_GRIDS[k]
    return profiles.clamped(k, T, n)


def _richardson(fn, x, d, delta):
    """Directional derivative by Richardson-extrapolated central differences;
    exact (up to round-off) for objectives that are quartic along lines."""

    def central(dl):
        return (fn(x + dl * d) - fn(x - dl * d)) / (2.0 * dl)

    return (4.0 * central(delta / 2.0) - central(delta)) / 3.0


def test_c01_m1_table(acceptance, profiles):
    t0 = perf_counter()
    table = estimate_mk(1, profiles.well, [10.0], [4001])
    dt = perf_counter() - t0
    err = abs(table.estimate - M1_EXACT)
    acceptance.check(
        "C01",
        err <= 1e-3 and dt < 30.0,
        f"m1={table.estimate:.7f} err={err:.1e} {dt:.1f}s",
    )


def test_c02_positivity(acceptance, profiles):
    t0 = perf_counter()
    mk = {k: _cached(profiles, k).value for k in (1, 2, 3)}
    mstar = {k: mstar_k(k, profiles.well, 0.1, 10, 20.0).value for k in (1, 2, 3)}
    dt = perf_counter() - t0
    ok = all(mk[k] > 0.1 for k in mk) and all(mstar[k] > 0.0 for k in mstar) and dt < 300.0
    detail = (
        "m=" + "/".join(f"{mk[k]:.3f}" for k in (1, 2, 3))
        + " m*=" + "/".join(f"{mstar[k]:.4f}" for k in (1, 2, 3))
        + f" {dt:.0f}s"
    )
    acceptance.check("C02", ok, detail)


def test_c03_monotonicity(acceptance, profiles):
    t0 = perf_counter()
    violations = []

    # m_k(T) along T = 2, 4, 8, 16 at fixed spacing, each horizon warm-started
    # from the previous minimizer extended by well constants, so descent makes
    # the sequence nonincreasing up to solver noise
    h = 0.025
    for k in (1, 2, 3):
        prev = None
        vals = []
        for T in (2.0, 4.0, 8.0, 16.0):
            n = int(round(2.0 * T / h)) + 1
            pb = ProfileProblem(k=k, T=T, n=n, well=profiles.well)
            if prev is None:
                res = solve_clamped(pb)
            else:
                pad = (n - prev.minimizer.grid.n) // 2
                start = np.concatenate(
                    [np.full(pad, -1.0), prev.minimizer.values, np.full(pad, 1.0)]
                )
                res = solve_clamped(pb, start=start)
            vals.append(res.value)
            prev = res
        for T, (a, b) in zip((4.0, 8.0, 16.0), zip(vals, vals[1:])):
            if b > a + 1e-6:
                violations.append(f"k={k}: m({T}) = {b:.8f} > {a:.8f}")

    # relaxed boxes: wider eta / smaller N can only lower the minimum
    etas, Ns = (0.4, 0.2, 0.1), (1, 4, 16)
    for k in (1, 2):
        fam = relaxed_family(k, 4.0, 241, profiles.well, etas, Ns)
        vals = {key: res.value for key, res in fam.results.items()}
        slack = 1e-10
        for eta in etas:
            for N in Ns:
                if vals[(eta, N)] > fam.clamped.value + slack:
                    violations.append(f"k={k} ({eta},{N}) above clamped")
            if not vals[(eta, 1)] <= vals[(eta, 4)] + slack <= vals[(eta, 16)] + 2 * slack:
                violations.append(f"k={k} eta={eta}: not monotone in N")
        for N in Ns:
            if not vals[(0.4, N)] <= vals[(0.2, N)] + slack <= vals[(0.1, N)] + 2 * slack:
                violations.append(f"k={k} N={N}: not monotone in eta")

    dt = perf_counter() - t0
    acceptance.check("C03", not violations, "; ".join(violations) or f"0 violations {dt:.0f}s")


def test_c04_gamma_ratios(acceptance, profiles):
    t0 = perf_counter()
    worst = 0.0
    ok = True
    for jumps, target in TARGETS.items():
        for k in (1, 2, 3):
            sweep = gamma_sweep(target, profiles.well, EPS_LISTS[jumps], _cached(profiles, k))
            ratio = sweep.rows[-1][2]
            worst = max(worst, abs(ratio - 1.0))
            if not 0.98 <= ratio <= 1.02:
                ok = False
    dt = perf_counter() - t0
    acceptance.check("C04", ok and dt < 300.0, f"max |ratio-1| = {worst:.2e} {dt:.0f}s")


def test_c05_two_dimensional(acceptance, profiles):
    t0 = perf_counter()
    grid = Grid2D(513)
    eps = 2.0**-6
    line = LineInterface((0.5, 0.5), (0.0, 1.0))
    circle = CircleInterface((0.5, 0.5), 0.25)
    worst = {"line": 0.0, "circle": 0.0}
    for k in (1, 2):
        pr = profiles.clamped(k, 5.0, 1001)
        for name, shape, tol in (("line", line, 0.02), ("circle", circle, 0.05)):
            rec = build_recovery_2d(shape, eps, pr, grid)
            got = energy_F_eps_2d(rec, eps, k, profiles.well)
            rel = abs(got / (pr.value * interface_length(shape)) - 1.0)
            worst[name] = max(worst[name], rel)
    dt = perf_counter() - t0
    ok = worst["line"] <= 0.02 and worst["circle"] <= 0.05 and dt < 600.0
    acceptance.check(
        "C05", ok, f"line {worst['line']:.2%}, circle {worst['circle']:.2%}, {dt:.0f}s"
    )


def test_c06_gradient_checks(acceptance, profiles, rng):
    g = make_grid(-1.0, 1.0, 161)
    tau = (g.nodes + 1.0) / 2.0
    worst_field = 0.0
    for i in range(100):
        k = 1 + i % 3
        params = EnergyParams(k, 0.5, profiles.well)
        coef = rng.standard_normal(6)
        vals = sum(c * np.sin((m + 1) * np.pi * tau) for m, c in enumerate(coef))
        d = rng.standard_normal(g.n)
        d /= np.linalg.norm(d)

        def f(v):
            return energy_F_eps(GridFunction1D(g, v), params)

        lhs = float(energy_gradient(GridFunction1D(g, vals), params) @ d)
        rhs = _richardson(f, vals, d, 1e-3)
        worst_field = max(worst_field, abs(lhs - rhs) / max(abs(lhs), 1e-9))

    worst_solver = 0.0
    for i in range(20):
        k = 1 + i % 3
        pb = ProfileProblem(k=k, T=2.0, n=101, well=profiles.well)
        enc = _Encoding(pb)
        obj = _Objective(pb, enc)
        x = enc.x_from_values(default_initial_profile(pb) + 0.1 * rng.standard_normal(pb.n))
        d = rng.standard_normal(x.size)
        d /= np.linalg.norm(d)
        f0, grad = obj.fun(x)
        lhs = float(grad @ d)
        rhs = _richardson(lambda xv: obj.fun(xv)[0], x, d, 1e-3)
        worst_solver = max(worst_solver, abs(lhs - rhs) / max(abs(lhs), 1e-9))

    ok = worst_field < 1e-6 and worst_solver < 1e-6
    acceptance.check(
        "C06", ok, f"field max rel {worst_field:.1e}, solver max rel {worst_solver:.1e}"
    )


def test_c07_interpolation_fixture(acceptance):
    g = make_grid(0.0, 1.0, 4097)
    v = GridFunction1D(g, np.sin(np.pi * g.nodes))
    r = interp_ratio(v, 2, 1)
    err = abs(r - np.pi / (np.pi + 1.0))
    scaled = interp_ratio(GridFunction1D(g, 10.0 * v.values), 2, 1)
    scale_gap = abs(scaled - r) / r

    spec = EnsembleSpec(max_freq=6)
    rep = interp_probe(spec, 2, 1, samples=30, n=1025, seed=5)
    grid = make_grid(0.0, 1.0, 1025)
    member_max = max(interp_ratio(f, 2, 1) for _, f in _ensemble(spec, grid, 30, 5, 2))
    attained = rep.max_ratio == member_max

    ok = err <= 1e-6 and scale_gap <= 1e-12 and attained
    acceptance.check("C07", ok, f"err={err:.1e} scale gap={scale_gap:.1e}")


def test_c08_transition_diagnostics(acceptance, profiles):
    eta, N = 0.2, 2
    worst_loc = 0.0
    ok = True
    for eps in (1e-3, 5e-4):
        for jumps, target in TARGETS.items():
            for k in (1, 2):
                rec = build_recovery_1d(target, eps, _cached(profiles, k))
                bound = 2.0 * eps * rec.T
                if count_transitions(rec.u, eps, eta, N, k) != jumps:
                    ok = False
                proj = project_BV(rec.u, eps, eta, N, k)
                if proj.jump.count != jumps:
                    ok = False
                    continue
                for found, true in zip(proj.jump.jumps, target.jumps):
                    worst_loc = max(worst_loc, abs(found - true))
                    if abs(found - true) > bound:
                        ok = False
    acceptance.check("C08", ok, f"max location error {worst_loc:.1e} (bound {bound:.1e})")


def test_c09_hermite_theta(acceptance):
    zero = hermite_extension(3, [0.0, 0.0, 0.0]).theta
    ramp = hermite_extension(1, [1.0]).theta
    k2 = hermite_extension(2, [1.0, 0.0]).theta
    base = hermite_extension(2, [0.7, -0.3]).theta
    scaled = hermite_extension(2, [3.0 * 0.7, 3.0 * -0.3]).theta
    quad_gap = abs(scaled - 9.0 * base) / (9.0 * base)
    ok = (
        zero == 0.0
        and abs(ramp - 1.0) <= 1e-12
        and abs(k2 - 12.0) <= 1e-11
        and quad_gap <= 1e-12
    )
    acceptance.check(
        "C09", ok, f"theta(0)={zero} ramp={ramp} k2={k2} scaling gap={quad_gap:.1e}"
    )


def test_c10_cli_determinism(acceptance, tmp_path):
    cfg = tmp_path / "probe.json"
    cfg.write_text(json.dumps({"samples": 10, "n": 257, "split": False, "max_freq": 4}))
    table_cfg = tmp_path / "table.json"
    table_cfg.write_text(json.dumps({"k": [1], "T": [3.0], "n": [161]}))
    runs = {
        "hermite": ["hermite"],
        "probe_interp": ["probe-interp", "--config", str(cfg), "--seed", "42"],
        "mk_table": ["mk-table", "--config", str(table_cfg)],
    }
    ok = True
    for stem, argv in runs.items():
        out_a, out_b = tmp_path / f"{stem}_a", tmp_path / f"{stem}_b"
        for out in (out_a, out_b):
            code = cli_main(argv + ["--out", str(out)])
            if code != 0:
                ok = False
        name = f"{stem}.json"
        if (out_a / name).read_bytes() != (out_b / name).read_bytes():
            ok = False
    acceptance.check("C10", ok, "3 commands, byte-identical JSON")
