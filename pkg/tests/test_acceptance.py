"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a ``PASS``/``FAIL`` line (printed immediately and again in
the terminal summary) before asserting.
"""

import json
import math
import statistics
import time

import numpy as np
import pytest

import test_properties as props
from conftest import ACCEPTANCE_LINES
from trapdyn import cli, model, opt, oracle, sim, systems
from trapdyn.model import shift
from trapdyn.opt import TrappingStatus

LORENZ_M = np.array([0.0, 0.0, 38.0])


def report(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def two_report(tmp_path_factory):
    d = tmp_path_factory.mktemp("acc_two")
    model.save_system(systems.two_state(), d / "two.json")
    t0 = time.perf_counter()
    code = cli.main(["radius", str(d / "two.json"), "--center", "zero", "--out", str(d), "--samples", "10"])
    wall = time.perf_counter() - t0
    return code, json.loads((d / "report.json").read_text()), wall


@pytest.fixture(scope="module")
def lorenz_report():
    return opt.analyze(systems.lorenz(), LORENZ_M)


def test_01_two_state_tight_radius(two_report):
    code, rep, wall = two_report
    R, lam = rep["region"]["R_tight"], rep["region"]["lambda_star"]
    ok = code == 0 and abs(R - 0.28868) <= 5e-4 and abs(lam - 1.0) <= 1e-6 and wall < 1.0
    report(1, "two-state tight radius", ok, f"R_tight={R:.6f} lambda*={lam:.9f} runtime={wall:.3f}s")
    assert ok


def test_02_two_state_conservative_radius(two_report):
    R = two_report[1]["region"]["R_conservative"]
    ok = abs(R - 1.0) <= 1e-12
    report(2, "two-state conservative radius", ok, f"R_conservative={R!r}")
    assert ok


def test_03_two_state_critical_points(two_report):
    pts = np.array(two_report[1]["critical_sphere"]["points_original"])
    pts = pts[np.argsort(pts[:, 0])]
    expect = np.array([[-0.2357, 0.1667], [0.2357, 0.1667]])
    err = float(np.max(np.abs(pts - expect)))
    # the points also lie on the boundary of E at distance R_tight
    sf = shift(systems.two_state(), [0.0, 0.0])
    on_E = float(np.max(np.abs(model.energy_rate(sf, pts))))
    R = two_report[1]["region"]["R_tight"]
    norm_err = float(np.max(np.abs(np.linalg.norm(pts, axis=1) - R)))
    ok = pts.shape == (2, 2) and err <= 1e-3 and on_E < 1e-9 and norm_err < 1e-9
    report(3, "two-state critical points", ok,
           f"{np.round(pts, 5).tolist()} max coord err={err:.1e}, |rate|={on_E:.1e}")
    assert ok


def test_04_lorenz_existence():
    lor = systems.lorenz()
    t0 = time.perf_counter()
    ex = opt.solve_existence(lor)
    wall = time.perf_counter() - t0
    lam1 = float(np.linalg.eigvalsh(shift(lor, ex.m_star).A_s)[-1])
    ok = (abs(ex.a_star + 1.0) <= 1e-5 and lam1 < 0 and ex.status is TrappingStatus.TRAPPING_EXISTS
          and wall < 1.0)
    report(4, "Lorenz existence", ok,
           f"a*={ex.a_star:.10f} direct lambda_max={lam1:.10f} m*={np.round(ex.m_star, 6).tolist()} "
           f"runtime={wall:.3f}s")
    assert ok


def test_05_lorenz_radii(lorenz_report):
    rg = lorenz_report.region
    sf = lorenz_report.shifted
    R_scalar, _ = opt.tight_radius_scalar(sf)
    R_sdp, _, _ = opt.tight_radius_sdp(sf)
    rel = abs(R_scalar - R_sdp) / R_scalar
    ok = (abs(rg.R_conservative - 101.333) <= 1e-2 and abs(R_scalar - 39.25) <= 5e-2
          and abs(R_sdp - 39.25) <= 5e-2 and rel <= 1e-6)
    report(5, "Lorenz radii at m=(0,0,38)", ok,
           f"R_cons={rg.R_conservative:.6f} R_tight scalar={R_scalar:.6f} sdp={R_sdp:.6f} rel diff={rel:.1e}")
    assert ok


def test_06_lorenz_critical_points(lorenz_report):
    pts = lorenz_report.sphere.extreme_points()
    pts = pts[np.argsort(pts[:, 1])]
    expect = np.array([[0.0, -24.82, -30.4], [0.0, 24.82, -30.4]])
    err = float(np.max(np.abs(pts - expect))) if pts.shape == expect.shape else math.inf
    ok = err <= 2e-2
    report(6, "Lorenz critical points", ok, f"y*={np.round(pts, 4).tolist()} max coord err={err:.1e}")
    assert ok


def test_07_zero_system_falsification():
    s = systems.zero_system(3)
    ex = opt.solve_existence(s)
    chk = opt.certificate_checks(s, ex.certificate) if ex.certificate is not None else {}
    ok = (abs(ex.a_star) <= 1e-6 and ex.status is TrappingStatus.NO_TRAPPING_REGION
          and bool(chk) and chk["psd"] and chk["orthogonal"] and chk["sign"])
    report(7, "zero-system falsification", ok,
           f"a*={ex.a_star:.2e} status={ex.status.value} "
           f"Z min eig={chk.get('min_eig', float('nan')):.3e} "
           f"max|<Q,Z>|={chk.get('max_abs_q_inner', float('nan')):.1e} <L_s,Z>={chk.get('ls_inner', float('nan')):.1e}")
    assert ok


@pytest.mark.parametrize("name", ["two-state", "lorenz"])
def test_08_oracle_tightness(name, two_report, lorenz_report):
    if name == "two-state":
        sf = shift(systems.two_state(), [0.0, 0.0])
        R = two_report[1]["region"]["R_tight"]
    else:
        sf = lorenz_report.shifted
        R = lorenz_report.region.R_tight
    ee = model.ellipsoid_E(sf)
    t0 = time.perf_counter()
    sr = oracle.brute_force_radius(ee, 1_000_000, 42)
    wall = time.perf_counter() - t0
    ok = R * (1 - 1e-3) <= sr.max_norm_found <= R * (1 + 1e-6) and wall < 30.0
    report(8, f"oracle tightness ({name})", ok,
           f"sampled max={sr.max_norm_found:.6f} R_tight={R:.6f} ratio={sr.max_norm_found / R:.7f} "
           f"runtime={wall:.2f}s")
    assert ok


def test_09_lorenz_trapping_dynamics(lorenz_report):
    lor = systems.lorenz()
    m = LORENZ_M
    R = 39.25 * 1.001
    sf = lorenz_report.shifted
    # same initial-condition box as the simulate command: m +/- max(3, 2 R_tight)
    half = max(3.0, 2.0 * lorenz_report.region.R_tight)
    t0 = time.perf_counter()
    x0s = sim.random_initial_conditions(10, m - half, m + half, 42)
    trapped, worst = 0, -math.inf
    for x0 in x0s:
        tr = sim.integrate(lor, x0, 50.0, 1e-3)
        trapped += sim.check_ultimate_bound(tr, m, R, 25.0)
        v = sim.monotonicity_outside(tr, sf, R)
        if v is not None:
            worst = max(worst, v)
    wall = time.perf_counter() - t0
    ok = trapped == 10 and worst < 0 and wall < 60.0
    report(9, "Lorenz trapping verified dynamically", ok,
           f"{trapped}/10 trapped, max rate outside={worst:.4g}, runtime={wall:.1f}s")
    assert ok


def test_10_stacked_rotated_scaling():
    times: dict[int, list[float]] = {}
    bad = []
    t_all = time.perf_counter()
    for K in (1, 2, 4, 8, 16):
        for seed in (1, 2, 3):
            s, _ = systems.stacked_lorenz(K, seed)
            t0 = time.perf_counter()
            ex = opt.solve_existence(s)
            R, _, _ = opt.tight_radius_sdp(shift(s, ex.m_star))
            times.setdefault(3 * K, []).append(time.perf_counter() - t0)
            if not (abs(ex.a_star + 1.0) <= 1e-4 and ex.status is TrappingStatus.TRAPPING_EXISTS
                    and ex.certificate is None and math.isfinite(R)):
                bad.append((K, seed, ex.a_star, ex.status.value))
    wall = time.perf_counter() - t_all
    med = {n: statistics.median(v) for n, v in sorted(times.items())}
    upper = [med[n] for n in med if n >= 12]
    monotone = all(a < b for a, b in zip(upper, upper[1:]))
    ok = not bad and 48 in med and monotone and wall < 600.0
    detail = " ".join(f"n={n}:{t * 1e3:.1f}ms" for n, t in med.items())
    report(10, "stacked-rotated scaling", ok,
           f"15/15 a*=-1 ({len(bad)} bad); median {detail}; monotone n>=12: {monotone}; total={wall:.1f}s")
    assert ok


@pytest.mark.parametrize("check", ["lossless-defect", "shift-consistency", "kkt-residual",
                                   "tight<=conservative", "rk4-order"])
def test_11_property_suites(check):
    fn = {
        "lossless-defect": props.check_defect,
        "shift-consistency": props.check_shift,
        "kkt-residual": props.check_kkt,
        "tight<=conservative": props.check_radius_order,
        "rk4-order": props.check_rk4_order,
    }[check]
    failed = [s for s in props.SEEDS if not fn(s)]
    ok = not failed
    report(11, f"property suite {check}", ok, f"{50 - len(failed)}/50 seeds pass" + (f", failing {failed}" if failed else ""))
    assert ok
