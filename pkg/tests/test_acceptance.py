"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (lines are repeated in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from translab import (Ball, CoefficientTensor, Cusp, Empty, Grid, HalfSpace, Modulus, TransmissionProblem,
                      dini_integral, lemma_a2_check, psi, refine_study, rescaled_density, solve_parabolic,
                      solve_transmission)
from translab.cli import OK, run
from translab.fem import DiscreteField, mass_matrix
from translab.oracle import disk_inclusion, eigenmode_decay, flat_interface
from translab.parabolic import TimeField
from translab.regularity import (analyze, bmo_profile, frozen_comparison, holder_time_exponent, lipschitz_ratio,
                                 parabolic_affine_fit)

RESULTS = []


def report(num, title, passed, detail):
    line = f"criterion {num:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def iso(v):
    return CoefficientTensor.isotropic(2, 1, v)


def flat_problem():
    return TransmissionProblem(iso(1.0), iso(4.0), HalfSpace((0.0, 1.0)),
                               boundary=lambda x: flat_interface(1.0, 4.0, x)[0], label="flat")


def disk_problem():
    return TransmissionProblem(iso(1.0), iso(2.0), Ball((0.0, 0.0), 0.5),
                               boundary=lambda x: disk_inclusion(2.0, 0.5, x)[0], label="disk")


def heat_problem():
    return TransmissionProblem(iso(1.0), iso(1.0), Empty(), boundary=lambda x, t: np.zeros(len(x)))


def mode(x):
    return eigenmode_decay(2, (1, 1), x, 0.0)[0]


def steady_time_field(u, levels=257):
    times = np.linspace(-0.25, 0.0, levels)
    return TimeField(u.grid, times, np.repeat(u.values[None], levels, axis=0), times[1] - times[0])


def check_1():
    g = Grid(2, 64)
    t0 = time.perf_counter()
    u = solve_transmission(flat_problem(), g)
    wall = time.perf_counter() - t0
    err = float(np.abs(u.values[0] - flat_interface(1.0, 4.0, g.nodes)[0]).max())
    return report(1, "flat-interface exactness", err <= 1e-9 and wall <= 5.0,
                  f"max nodal error {err:.2e} (<= 1e-9), {wall:.2f} s (<= 5 s)")


def check_2():
    t0 = time.perf_counter()
    table = refine_study(disk_problem(), [32, 64, 128], exact=lambda x: disk_inclusion(2.0, 0.5, x)[0])
    wall = time.perf_counter() - t0
    rel = table.relative
    mono = all(b < a for a, b in zip(rel, rel[1:]))
    rate = table.fitted_rate
    ok = mono and rel[-1] <= 0.02 and rate >= 0.9 and wall <= 60.0
    return report(2, "disk-inclusion convergence", ok,
                  f"relative L2 {', '.join(f'{e:.3e}' for e in rel)}, rate {rate:.3f} (>= 0.9), {wall:.1f} s (<= 60 s)")


def check_3():
    p = TransmissionProblem(iso(1.0), iso(4.0), Cusp(0.5), boundary=lambda x: x[:, 1].copy(), label="cusp")
    ratios = [lipschitz_ratio(p, solve_transmission(p, Grid(2, N))).ratio for N in (64, 128, 256)]
    growth = [b / a for a, b in zip(ratios, ratios[1:])]
    ok = all(g <= 1.10 for g in growth)
    return report(3, "Lipschitz transmission on a cusp", ok,
                  f"ratios {', '.join(f'{r:.4f}' for r in ratios)}, growth {', '.join(f'{g:.4f}' for g in growth)} (<= 1.10)")


def check_4(disk_field):
    centers = [(0.0, 0.0), (0.5, 0.0), (0.0, -0.5), (0.25, 0.25), (-0.3, 0.1),
               (0.1, -0.2), (-0.2, -0.35), (0.6, 0.3), (-0.55, 0.0)]
    worst = -math.inf
    for z in centers:
        rep = bmo_profile(disk_field, z, 0.25, 4, min_cells=1)
        worst = max(worst, float(rep.bmo.max() - (4 * rep.bmo[0] + 1e-6)))
    return report(4, "BMO boundedness", worst <= 0, f"max_k C_r - (4 C_1/4 + 1e-6) = {worst:.3e} over 9 centers (<= 0)")


def check_5():
    half = HalfSpace((0.0, 1.0))
    centers = [(x, y) for x in (-0.25, 0.0, 0.25) for y in (-0.25, 0.0, 0.25)]
    scales = [0.25 / 2**k for k in range(5)]
    herr = max(abs(rescaled_density(half, (x, 0.0), r) - math.pi / 2) for x in (-0.25, 0.0, 0.25) for r in scales)
    derr = 0.0
    for D in (half, Ball((0.1, 0.0), 0.3), Cusp(0.5)):
        for z in centers:
            for r in scales:
                lhs = rescaled_density(D, z, r / 2)
                rhs = 4 * rescaled_density(D, z, r, within=0.5)
                derr = max(derr, abs(lhs - rhs))
    ok = herr <= 1e-3 and derr <= 1e-3
    return report(5, "density machinery", ok, f"half-space error {herr:.2e}, doubling error {derr:.2e} (<= 1e-3)")


def check_6(disk_field):
    tags = {}
    for name, p, u in (("flat", flat_problem(), solve_transmission(flat_problem(), Grid(2, 128))),
                       ("disk", disk_problem(), disk_field)):
        M = 10 * lipschitz_ratio(p, u).norm_sum
        reps = analyze(p, u, [(x, y) for x in (-0.375, -0.125, 0.125, 0.375) for y in (-0.375, -0.125, 0.125, 0.375)],
                       [0.25 / 2**k for k in range(4)], M=M, resolution=64, min_cells=1)
        tags[name] = [r.case_tag for r in reps]
    ok = all(t == "Case1" for v in tags.values() for t in v)
    return report(6, "dichotomy sanity", ok,
                  ", ".join(f"{k}: {v.count('Case1')}/{len(v)} Case1" for k, v in tags.items()))


def check_7():
    # the cutoff leaves a tail of scale * r_min**a / a; keep it below 1e-10 relative
    errs = [abs(dini_integral(Modulus.power(a, s), r_min=min(1e-20, 10 ** (-10 / a))).value * a / s - 1)
            for a in (0.25, 0.5, 1.0, 2.0) for s in (0.5, 1.0, 3.0)]
    non_dini = not dini_integral(Modulus.log_power(1.0)).is_convergent
    val = psi(Modulus.power(1.0), 0.5, 2)
    a2 = all(lemma_a2_check(Modulus.power(a), 3.0).is_convergent for a in (0.25, 0.5, 1.0, 2.0))
    ok = max(errs) <= 1e-8 and non_dini and abs(val - 1.24206) <= 1e-4 and a2
    return report(7, "modulus suite", ok,
                  f"power Dini relative error {max(errs):.1e}, log_power(1) non-Dini {non_dini}, psi {val:.6f}, A.2 convergent {a2}")


def check_8():
    g = Grid(2, 32)
    f = solve_parabolic(heat_problem(), g, dt=1e-4, scheme="crank-nicolson", initial=mode, t0=0.0, n_steps=1000)
    M = mass_matrix(g)
    nrm = [math.sqrt(v.ravel() @ (M @ v.ravel())) for v in f.values]
    rate = -np.polyfit(f.times, np.log(nrm), 1)[0]
    rel = abs(rate / (2 * math.pi**2) - 1)
    energies, l2 = [], []

    def watch(k, t, u, K):
        energies.append(u @ (K @ u))
        l2.append(u @ (M @ u))

    init = lambda x: mode(x) + 0.5 * eigenmode_decay(2, (3, 2), x, 0.0)[0] + 0.2 * x[:, 0] * (1 - x[:, 0] ** 2) * (1 - x[:, 1] ** 2)  # noqa: E731
    solve_parabolic(heat_problem(), g, dt=1e-4, scheme="backward-euler", initial=init, t0=0.0, n_steps=200, on_step=watch)
    mono = bool(np.all(np.diff(energies) <= 0) and np.all(np.diff(l2) <= 0))
    return report(8, "parabolic solver", rel <= 0.02 and mono,
                  f"CN rate {rate:.4f} vs 2 pi^2 = {2 * math.pi**2:.4f} ({rel:.2%}, <= 2%), BE energy non-increasing {mono}")


def check_9(flat_steady):
    g = Grid(2, 64)
    f = TimeField.from_function(g, lambda x, t: x[:, 0] + t, np.linspace(-0.5, 0.0, 129))
    r = 0.25
    fit = parabolic_affine_fit(f, (0.0, 0.0, 0.0), r)
    # sup over levels of r^-4 int_{B_r} (t - s)^2 dx, attained at the oldest level s = -r^2
    hand = math.pi * r * r
    res_err = abs(fit.sup_t_residual / hand - 1)

    eig = TimeField.from_function(Grid(2, 32), lambda x, t: eigenmode_decay(2, (1, 1), x, t + 0.25)[0],
                                  np.linspace(-0.25, 0.0, 1025))
    solved = solve_parabolic(heat_problem(), Grid(2, 32), dt=1e-4, scheme="crank-nicolson", initial=mode,
                             t0=-0.25, t_end=0.0, snapshot_every=5)
    pair = [((0.0, 0.0, 0.0), (0.1, 0.1, -0.1))]
    exps = [holder_time_exponent(h, pair, probe=(x, 0.0)).exponent
            for h in (eig, solved) for x in ((0.3, 0.2), (-0.25, 0.15))]

    rng = np.random.default_rng(11)
    pts = []
    while len(pts) < 200:
        X = np.append(rng.uniform(-0.5, 0.5, 2), -rng.uniform(0, 0.25))
        Y = np.append(rng.uniform(-0.5, 0.5, 2), -rng.uniform(0, 0.25))
        if max(np.linalg.norm(X[:2]), np.linalg.norm(Y[:2])) < 0.5 and math.sqrt(np.sum((X[:2] - Y[:2]) ** 2) + abs(X[2] - Y[2])) >= 0.1:
            pts.append((X, Y))
    dp = holder_time_exponent(flat_steady, pts).max_ratio
    ok = res_err <= 0.01 and min(exps) >= 0.95 and dp <= 1.05
    return report(9, "parabolic harness", ok,
                  f"residual error {res_err:.2e} (<= 1%), min exponent {min(exps):.3f} (>= 0.95), "
                  f"max d_p ratio {dp:.3f} (<= 1.05)")


def check_10():
    g = Grid(2, 128)
    disk = disk_problem()
    aff = DiscreteField.interpolate(g, lambda x: 0.3 + 2 * x[:, 0] - 0.7 * x[:, 1])
    sup = max(frozen_comparison(disk, aff, z, 0.25).sup_grad_inner for z in ((0.0, 0.0), (0.5, 0.0), (-0.2, 0.3)))
    A = CoefficientTensor.scalar_identity(2, 1, lambda x: 1 + 0.25 * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]))
    p = TransmissionProblem(A, A, Ball((0.0, 0.0), 0.5),
                            boundary=lambda x: x[:, 0] ** 2 - x[:, 1] ** 2 + 0.5 * x[:, 0] * x[:, 1] + x[:, 1])
    u = solve_transmission(p, g)
    ratio = max(frozen_comparison(p, u, z, r).energy_ratio for z, r in (((0.0, 0.0), 0.5), ((0.2, -0.1), 0.25)))
    ok = sup <= 1e-9 and ratio <= 1.1
    return report(10, "frozen comparison", ok, f"affine sup_grad_inner {sup:.1e} (<= 1e-9), smooth energy_ratio {ratio:.4f} (<= 1.1)")


def check_11(tmp_path):
    cfg = tmp_path / "disk.yaml"
    cfg.write_text("problem:\n  B: {kind: isotropic, value: 2.0}\n  D: {shape: ball, center: [0, 0], radius: 0.5}\n"
                   "  boundary: {kind: oracle, name: disk_inclusion, k: 2.0, R: 0.5}\n"
                   "grid: {cells_per_side: 64}\nanalysis: {centers: grid4, scales: '0.25:3'}\n")
    fld = tmp_path / "u.fld"
    assert run(["solve", "--config", str(cfg), "--out", str(fld)]) == OK
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        assert run(["analyze", "--field", str(fld), "--out", str(out)]) == OK
    a, b = (o.read_bytes() for o in outs)
    return report(11, "deterministic analyze", a == b, f"{len(a)} bytes, identical {a == b}")


# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def disk128():
    return solve_transmission(disk_problem(), Grid(2, 128))


@pytest.fixture(scope="module")
def flat_steady():
    return steady_time_field(solve_transmission(flat_problem(), Grid(2, 64)))


def test_criterion_01_flat_exactness():
    assert check_1()


def test_criterion_02_disk_convergence():
    assert check_2()


def test_criterion_03_cusp_lipschitz():
    assert check_3()


def test_criterion_04_bmo_bounded(disk128):
    assert check_4(disk128)


def test_criterion_05_density_machinery():
    assert check_5()


def test_criterion_06_dichotomy(disk128):
    assert check_6(disk128)


def test_criterion_07_modulus_suite():
    assert check_7()


def test_criterion_08_parabolic_solver():
    assert check_8()


def test_criterion_09_parabolic_harness(flat_steady):
    assert check_9(flat_steady)


def test_criterion_10_frozen_comparison():
    assert check_10()


def test_criterion_11_determinism(tmp_path):
    assert check_11(tmp_path)


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    disk = solve_transmission(disk_problem(), Grid(2, 128))
    steady = steady_time_field(solve_transmission(flat_problem(), Grid(2, 64)))
    with tempfile.TemporaryDirectory() as tmp:
        results = [check_1(), check_2(), check_3(), check_4(disk), check_5(), check_6(disk), check_7(), check_8(),
                   check_9(steady), check_10(), check_11(Path(tmp))]
    sys.exit(0 if all(results) else 1)
