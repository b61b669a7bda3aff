"""Acceptance gate: every project-level claim at its stated tolerance.

Run with `pytest tests/test_acceptance.py -s` to see one PASS/FAIL line per
criterion.  Criterion 5 measures a neck profile (f = cosh) whose per-m
ground modes provably localize at the boundary circles, where the
effective angular potential m^2/f^2 is smallest; its center-concentration
clauses therefore fail, and the line reports the measured values.
"""

import json
import math

import numpy as np

from quasilab.experiments import (
    LabConfig,
    emit_report,
    emit_summary,
    run_all,
    run_flat_smallp,
    run_pinfty,
    run_revolution,
    run_sphere_instability,
)
from quasilab.grids import GridField, box_grid, field_from_function, l2_norm, sphere_grid
from quasilab.propagation import (
    HamiltonianBlock,
    evolve_dense,
    evolve_free_box,
    evolve_krylov,
    evolve_splitstep,
)
from quasilab.quasimodes import make_equatorial, measure_pairing, weakstar_limit_gap
from quasilab.transforms import sphere_analyze


def _criterion(num: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} ({name}): {status}" + (f" | {detail}" if detail else ""))
    assert ok, f"acceptance criterion {num} ({name}): {detail}"


def test_criterion_1_eigen_exactness():
    worst = 0.0
    for n in (1, 2, 4, 8, 16, 32):
        l_max = n + 8
        grid = sphere_grid(l_max + 1, 2 * l_max + 2)
        harm, u = make_equatorial(n, grid)
        state = sphere_analyze(u, l_max)
        ls = np.array([l for l in range(l_max + 1) for _ in range(2 * l + 1)], float)
        gaps = ls * (ls + 1.0) - harm.eigenvalue
        resid = math.sqrt(float(np.sum(np.abs(state.coeffs) ** 2 * gaps**2)))
        worst = max(worst, resid)
    _criterion(1, "eigen-exactness", worst <= 1e-10, f"worst residual {worst:.3e}")


def test_criterion_2_weakstar_concentration():
    grid = sphere_grid(129, 128)
    f = field_from_function(grid, lambda th, ph: np.cos(th) ** 2 + 0 * ph)
    worst = 0.0
    gaps = []
    for n in range(1, 51):
        _, u = make_equatorial(n, grid)
        worst = max(worst, abs(measure_pairing(f, u) - 1.0 / (2 * n + 3)))
        gaps.append(weakstar_limit_gap(f, n))
    ok = (
        worst <= 1e-10
        and all(b < a for a, b in zip(gaps, gaps[1:]))
        and gaps[-1] < 0.01
    )
    _criterion(
        2, "weak-star concentration", ok,
        f"worst pairing error {worst:.3e}, final gap {gaps[-1]:.5f}",
    )


def test_criterion_3_sphere_instability():
    cfg = LabConfig()
    rep = run_sphere_instability(cfg)
    margins = [r[10] for r in rep.rows]
    final_rows = [r for r in rep.rows if r[0] == 64]
    dist_final = min(r[8] for r in final_rows)
    l1 = [r[11] for r in rep.rows]
    linf_err = max(abs(r[14] - 0.5) for r in rep.rows)
    ok = (
        min(margins) >= -1e-6
        and dist_final >= 1.5
        and l1[0] / l1[-1] >= 10.0
        and linf_err <= 1e-12
    )
    _criterion(
        3, "sphere instability", ok,
        f"worst margin {min(margins):.3e}, distance(k=64) {dist_final:.6f}, "
        f"L1 decay x{l1[0] / l1[-1]:.1f}",
    )


def test_criterion_4_pinfty_stability():
    rep = run_pinfty(LabConfig())
    slacks = [r[6] for r in rep.rows]
    ok = len(rep.rows) >= 20 and min(slacks) >= 0.0
    _criterion(
        4, "p=infinity stability", ok,
        f"{len(rep.rows)} trials, worst slack {min(slacks):.3e}",
    )


def test_criterion_5_revolution_concentration():
    rep = run_revolution(LabConfig())  # f = cosh on [-1, 1], ground modes
    masses = [r[6] for r in rep.rows]
    pairings = [r[7] for r in rep.rows]
    ratios = [r[4] for r in rep.rows]
    mass_ok = all(b >= a for a, b in zip(masses, masses[1:])) and masses[-1] >= 0.99
    pairing_ok = all(b < a for a, b in zip(pairings, pairings[1:]))
    ratio_ok = all(3.5 <= r <= 4.5 for r in ratios)
    ok = mass_ok and pairing_ok and ratio_ok
    _criterion(
        5, "surface-of-revolution concentration", ok,
        "per-m ground modes of the cosh neck localize at the boundary "
        f"circles (m^2/f^2 is smallest there): window masses {masses}, "
        f"t^2 pairings {[round(p, 4) for p in pairings]}, "
        f"refinement ratios {[round(r, 3) for r in ratios]}",
    )


def test_criterion_6_flat_smallp():
    rep = run_flat_smallp(LabConfig())
    rows = rep.rows
    ns = [r[0] for r in rows]
    phase_err = max(abs(r[4] - 2.0) for r in rows)
    seps = [r[5] for r in rows]
    c_fit = max((2.0 - s) * math.log(n + 1.0) for n, s in zip(ns, seps))
    bound_ok = all(s >= 2.0 - c_fit / math.log(n + 1.0) - 1e-12 for n, s in zip(ns, seps))
    l1 = [r[11] for r in rows]
    l1_pred = [r[12] for r in rows]
    l1_rel = max(abs(a - b) / b for a, b in zip(l1, l1_pred))
    l2 = [r[15] for r in rows]
    ok = (
        phase_err <= 1e-12
        and all(b > a for a, b in zip(seps, seps[1:]))
        and bound_ok
        and l1_rel <= 0.01
        and all(b < a for a, b in zip(l1, l1[1:]))
        and all(b > a for a, b in zip(l2, l2[1:]))
    )
    boundary = max(r[9] for r in rows)
    _criterion(
        6, "flat small-p construction", ok,
        f"phase error {phase_err:.2e}, separations {[round(s, 9) for s in seps]}, "
        f"fitted c {c_fit:.3e}, L1 scaling error {l1_rel:.2e} "
        f"(guard-band diagnostic {boundary:.2e}; wrap-around tails at these "
        f"scales are reported per record)",
    )


def test_criterion_7_numerical_kernels():
    defects = []
    # dense vs Krylov on a 200 x 200 Hermitian block
    rng = np.random.default_rng(42)
    a = rng.standard_normal((200, 200)) + 1j * rng.standard_normal((200, 200))
    h = 0.5 * (a + a.conj().T)
    blk = HamiltonianBlock(geometry="sphere", kinetic=np.zeros(200), coupling=h,
                           m=0, l_min=0)
    u0 = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    u0 /= np.linalg.norm(u0)
    dense = evolve_dense(blk, u0, 1.9)
    kry = evolve_krylov(lambda x: h @ x, u0, 1.9, tol=1e-11)
    agree = float(np.linalg.norm(dense.state - kry.state))
    defects += [dense.unitarity_defect, kry.unitarity_defect]
    # split-step second-order refinement and the free Gaussian closed form
    box = box_grid(32.0, 64)
    c = box.length / 2
    u0f = field_from_function(
        box,
        lambda x, y, z: (np.pi * 1.44) ** -0.75
        * np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / 2.88) + 0j,
    )
    v = field_from_function(
        box,
        lambda x, y, z: 1.5
        * np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / 18.0),
    )
    ref = evolve_splitstep(box, v, u0f, 0.4, steps=128)
    e1 = evolve_splitstep(box, v, u0f, 0.4, steps=8)
    e2 = evolve_splitstep(box, v, u0f, 0.4, steps=16)
    defects += [ref.unitarity_defect, e1.unitarity_defect, e2.unitarity_defect]
    d1 = l2_norm(GridField(box, e1.state.values - ref.state.values))
    d2 = l2_norm(GridField(box, e2.state.values - ref.state.values))
    ratio = d1 / d2
    free = evolve_free_box(u0f, 0.35)
    defects.append(free.unitarity_defect)
    azt = 1.44 + 2j * 0.35
    exact = field_from_function(
        box,
        lambda x, y, z: np.pi**-0.75 * 1.44**0.75 / azt**1.5
        * np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / (2 * azt)),
    )
    gauss_err = l2_norm(GridField(box, free.state.values - exact.values))
    ok = (
        max(defects) <= 1e-9
        and agree <= 1e-9
        and 3.5 <= ratio <= 4.5
        and gauss_err <= 1e-8
    )
    _criterion(
        7, "numerical kernels", ok,
        f"unitarity {max(defects):.2e}, dense/Krylov {agree:.2e}, "
        f"order-2 ratio {ratio:.3f}, Gaussian error {gauss_err:.2e}",
    )


def test_criterion_8_determinism(tmp_path):
    cfg = LabConfig()  # fixed seed 0
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    for out in (out1, out2):
        reports = run_all(cfg)
        for rep in reports:
            emit_report(rep, str(out), "both")
        emit_summary(reports, str(out), "both")
    names = ["weakstar", "sphere-instability", "revolution", "flat-smallp", "pinfty"]
    identical = all(
        (out1 / f"{n}.csv").read_bytes() == (out2 / f"{n}.csv").read_bytes()
        for n in names
    )

    def strip_timing(path):
        data = json.load(open(path))
        for rec in data["experiments"].values():
            rec.pop("elapsed_seconds", None)
        return data

    summaries_equal = strip_timing(out1 / "summary.json") == strip_timing(
        out2 / "summary.json"
    )
    ok = identical and summaries_equal
    _criterion(8, "determinism", ok, f"csv identical: {identical}, "
               f"summaries (minus timing) identical: {summaries_equal}")
