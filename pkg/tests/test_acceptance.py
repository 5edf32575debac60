"""Headline acceptance runs.

Each test exercises one end-to-end guarantee of the package — exact
identities, distribution equivalence, oracle cross-checks, asymptotic rates,
determinism — at its documented tolerance, and prints a single
``[acceptance] <name>: PASS/FAIL`` line with the worst measured value and the
wall time against the intended budget.  The budgets are laptop-scale; a slow
box failing only a time assertion is a performance regression, not a
numerics bug.
"""

import math
import time

import numpy as np
import pytest

from airykdv.asymptotics import regime_ii_u, v_estimate
from airykdv.cli import main
from airykdv.fredholm import Resolution
from airykdv.observables import Engine
from airykdv.painleve2 import (
    f_tw,
    p2_tail_integral,
    solve_hm,
    tw_left_tail_constant,
    y_sq_from_determinant,
)
from airykdv.residuals import (
    cyl_kdv_residual,
    evolution_residual,
    idpii_residual,
    kdv_residual,
    mkdv_residual,
    phi_identity_gap,
    schrodinger_residual,
)
from airykdv.sigma import make_fermi, make_kpz, make_piecewise, make_step, sigma_gap_integral

SIGMAS = {
    "step1": make_step(1.0),
    "step05": make_step(0.5),
    "kpz": make_kpz(),
    "fermi05": make_fermi(0.5),
    "pw": make_piecewise([(-1.0, 0.3), (0.0, 1.0)]),
}
POINTS = [(-1.0, 0.5), (-0.2, 0.2), (0.0, 0.5), (0.3, 0.2), (0.8, 0.05)]
ZS = [-0.5, 0.0, 0.7]


@pytest.fixture(scope="module")
def engines():
    return {name: Engine(w) for name, w in SIGMAS.items()}


def _line(capsys, name, ok, detail, elapsed, budget):
    with capsys.disabled():
        verdict = "PASS" if ok else "FAIL"
        print(f"[acceptance] {name}: {verdict} — {detail}; {elapsed:.1f}s < {budget:.0f}s")


def test_phi_square_measure_identity(engines, capsys):
    # integral of phi^2 dsigma + t*u - x/2 vanishes for every weight and point
    tol, budget = 1e-6, 120.0
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for name, sig in SIGMAS.items():
        for (x, t) in POINTS:
            g = phi_identity_gap(sig, x, t, engine=engines[name]).normalized
            if g > worst:
                worst, where = g, (name, x, t)
    elapsed = time.perf_counter() - t0
    ok = worst <= tol and elapsed < budget
    _line(capsys, "phi-identity", ok, f"worst {worst:.2e} (tol {tol:.0e}) at {where}", elapsed, budget)
    assert worst <= tol, f"phi identity worst {worst:.3e} at {where}"
    assert elapsed < budget


def test_pde_residual_matrix(engines, capsys):
    # all six differential identities, every weight x point (x z where applicable)
    tols = {"kdv": 1e-4, "schrodinger": 1e-4, "idpii": 1e-4,
            "evolution": 5e-4, "mkdv": 5e-4, "cyl_kdv": 1e-4}
    budget = 300.0
    t0 = time.perf_counter()
    worst = {k: (0.0, None) for k in tols}

    def track(op, val, tag):
        if val > worst[op][0]:
            worst[op] = (val, tag)

    for name, sig in SIGMAS.items():
        eng = engines[name]
        for (x, t) in POINTS:
            track("kdv", kdv_residual(sig, x, t, engine=eng).normalized, (name, x, t))
            track("cyl_kdv",
                  cyl_kdv_residual(sig, -x / t, t**-2, engine=eng).normalized, (name, x, t))
            for z in ZS:
                tag = (name, x, t, z)
                track("schrodinger", schrodinger_residual(sig, x, t, z, engine=eng).normalized, tag)
                track("idpii", idpii_residual(sig, x, t, z, engine=eng).normalized, tag)
                track("evolution", evolution_residual(sig, x, t, z, engine=eng).normalized, tag)
                track("mkdv", mkdv_residual(sig, x, t, z, engine=eng).normalized, tag)
    elapsed = time.perf_counter() - t0
    fails = {op: w for op, w in worst.items() if w[0] > tols[op]}
    ok = not fails and elapsed < budget
    head = max(worst.items(), key=lambda kv: kv[1][0] / tols[kv[0]])
    detail = f"worst {head[0]} {head[1][0]:.2e} (tol {tols[head[0]]:.0e}) at {head[1][1]}"
    _line(capsys, "pde-residuals", ok, detail, elapsed, budget)
    assert not fails, f"residuals above tolerance: {fails}"
    assert elapsed < budget


def test_step_weight_matches_tw_distribution(capsys):
    # step-weight determinant is the Tracy-Widom law in the self-similar variable
    tol, budget = 1e-9, 60.0
    t0 = time.perf_counter()
    t = 0.343  # t^(1/3) = 0.7 exactly
    svals = np.linspace(-4.0, 3.0, 10)
    worst, where = 0.0, None
    for gamma in (0.5, 1.0):
        eng = Engine(make_step(gamma))
        for s in svals:
            x = s * 0.7  # -x t^(-1/3) = -s
            q = math.exp(min(eng.log_q(x, t), 0.0))
            d = abs(q - f_tw(-s, gamma))
            if d > worst:
                worst, where = d, (gamma, float(s))
    elapsed = time.perf_counter() - t0
    ok = worst <= tol and elapsed < budget
    _line(capsys, "tw-equivalence", ok, f"worst {worst:.2e} (tol {tol:.0e}) at {where}", elapsed, budget)
    assert worst <= tol, f"distribution mismatch {worst:.3e} at {where}"
    assert elapsed < budget


def test_painleve_cross_checks(capsys):
    # boundary-value solution vs determinant second derivative, and the slope
    # observable vs the tail integral of the squared solution
    tol_y, tol_p, budget = 1e-6, 1e-5, 120.0
    t0 = time.perf_counter()
    sol = solve_hm()
    worst_y = max(abs(sol(float(s)) ** 2 - y_sq_from_determinant(1.0, float(s)))
                  for s in (-2.0, -1.0, 0.0, 1.0, 2.0))
    x, t = 0.4, 0.3
    s0 = -x * t ** (-1.0 / 3.0)
    worst_p = 0.0
    for gamma in (0.5, 1.0):
        eng = Engine(make_step(gamma))
        lhs = eng.p(x, t) - x * x / (4.0 * t)
        rhs = -(t ** (-1.0 / 3.0)) * p2_tail_integral(gamma, s0)
        worst_p = max(worst_p, abs(lhs - rhs))
    elapsed = time.perf_counter() - t0
    ok = worst_y <= tol_y and worst_p <= tol_p and elapsed < budget
    detail = f"y^2 gap {worst_y:.2e} (tol {tol_y:.0e}), slope-integral gap {worst_p:.2e} (tol {tol_p:.0e})"
    _line(capsys, "painleve-triangle", ok, detail, elapsed, budget)
    assert worst_y <= tol_y
    assert worst_p <= tol_p
    assert elapsed < budget


def test_left_tail_constant(capsys):
    # Richardson-extrapolated additive constant of the deep-gap expansion,
    # and a guard that it is log2/24 + zeta'(-1), not any log(zeta'(-1)) reading
    tol, budget = 2e-2, 120.0
    t0 = time.perf_counter()
    r = tw_left_tail_constant()
    err = abs(r["error"])
    zp = -0.16542114370045093  # zeta'(-1) = 1/12 - log(Glaisher)
    misreads = (math.log(2.0) / 24.0 + math.log(abs(zp)), math.log(abs(zp)))
    sep = min(abs(r["extrapolated"] - m) for m in misreads)
    elapsed = time.perf_counter() - t0
    ok = err <= tol and sep > 50 * tol and elapsed < budget
    detail = f"constant {r['extrapolated']:.6f} vs {r['expected']:.6f} (err {err:.2e}, tol {tol:.0e}); misread gap {sep:.2f}"
    _line(capsys, "tail-constant", ok, detail, elapsed, budget)
    assert err <= tol
    assert sep > 50 * tol, "extrapolated constant does not clearly reject the log(zeta') reading"
    assert elapsed < budget


def test_small_time_regime_rates(engines, capsys):
    budget = 300.0
    t0 = time.perf_counter()
    # (a) left zone: |log Q| collapses at least 4x per 0.3 step outward in x
    eng_kpz = engines["kpz"]
    tt = 0.01
    decay = [abs(eng_kpz.log_q(x, tt)) for x in (-0.8, -1.1, -1.4, -1.7, -2.0)]
    decay_ok = all(decay[i + 1] <= 0.25 * decay[i] for i in range(len(decay) - 1))

    # (b)+(c): scaled gap between u and the edge-profile formula on the ladder
    ts = np.array([0.2, 0.1, 0.05, 0.025])

    def scaled_gaps(eng, s_star):
        out = []
        for t in ts:
            x = -s_star * t ** (1.0 / 3.0)
            out.append(t ** (2.0 / 3.0) * abs(eng.u(x, t) - regime_ii_u(x, t, 1.0)))
        return np.array(out)

    gaps = {(name, s): scaled_gaps(engines[name], s)
            for name in ("kpz", "pw") for s in (-0.5, -2.0)}
    slope = {name: float(np.polyfit(np.log(ts), np.log(gaps[(name, -2.0)]), 1)[0])
             for name in ("kpz", "pw")}
    slopes_ok = slope["kpz"] >= 0.8 and 0.2 <= slope["pw"] <= 0.5
    envelope_ok = all(g.max() <= 1.2 * g[0] and g[-1] <= g[0] for g in gaps.values())

    elapsed = time.perf_counter() - t0
    ok = decay_ok and slopes_ok and envelope_ok and elapsed < budget
    detail = (f"decay x4+ {'yes' if decay_ok else 'NO'}, "
              f"slopes kpz {slope['kpz']:.2f} (>=0.8) pw {slope['pw']:.2f} (in [0.2,0.5]), "
              f"gaps bounded {'yes' if envelope_ok else 'NO'}")
    _line(capsys, "regime-rates", ok, detail, elapsed, budget)
    assert decay_ok, f"|log Q| ladder not contracting: {decay}"
    assert slope["kpz"] >= 0.8, f"kpz gap slope {slope['kpz']:.3f}"
    assert 0.2 <= slope["pw"] <= 0.5, f"piecewise gap slope {slope['pw']:.3f}"
    assert envelope_ok, f"scaled u-gap grew along the ladder: {gaps}"
    assert elapsed < budget


def test_small_time_u_limit_expansion(capsys):
    # v(x) = lim u: leading 1/(8x^2) within 5%, weight-dependent constant
    # within 10%, and the pure-step value within 2% further out
    budget = 240.0
    t0 = time.perf_counter()
    weights = {"step1": SIGMAS["step1"], "kpz": SIGMAS["kpz"], "pw": SIGMAS["pw"]}
    worst_lead, lead_where = 0.0, None
    worst_const, const_where = 0.0, None
    for name, sig in weights.items():
        half_gap = 0.5 * sigma_gap_integral(sig)
        for x in (0.1, 0.2):
            v_hat = v_estimate(sig, x).v_hat
            rel = abs(8.0 * x * x * v_hat - 1.0)
            if rel > worst_lead:
                worst_lead, lead_where = rel, (name, x)
            if x == 0.1:
                dev = abs((v_hat - 1.0 / (8.0 * x * x)) - half_gap)
                bar = 0.1 * max(1.0, abs(half_gap))
                if dev / bar > worst_const:
                    worst_const, const_where = dev / bar, (name, x)
    v_far = v_estimate(weights["step1"], 0.5, t_samples=(1e-3, 5e-4)).v_hat
    far_rel = abs(8.0 * 0.25 * v_far - 1.0)
    elapsed = time.perf_counter() - t0
    ok = worst_lead <= 0.05 and worst_const <= 1.0 and far_rel <= 0.02 and elapsed < budget
    detail = (f"leading-term off by {worst_lead:.1%} max (cap 5%) at {lead_where}, "
              f"constant at {worst_const:.2f} of its 10% bar at {const_where}, "
              f"step x=0.5 off by {far_rel:.2%} (cap 2%)")
    _line(capsys, "v-expansion", ok, detail, elapsed, budget)
    assert worst_lead <= 0.05, f"8x^2 v_hat off by {worst_lead:.3%} at {lead_where}"
    assert worst_const <= 1.0, f"weight constant off at {const_where}"
    assert far_rel <= 0.02, f"step x=0.5 v_hat off by {far_rel:.3%}"
    assert elapsed < budget


def test_determinism_and_resolution_convergence(engines, capsys):
    tol, budget = 1e-10, 120.0
    t0 = time.perf_counter()
    # doubling the quadrature density moves no log-determinant measurably
    worst, where = 0.0, None
    for name, sig in SIGMAS.items():
        fine = Engine(sig, res=Resolution().doubled())
        for (x, t) in POINTS:
            d = abs(engines[name].log_q(x, t) - fine.log_q(x, t))
            if d > worst:
                worst, where = d, (name, x, t)
    # thread count must not change a single output byte
    argv = ["scan", "--sigma", '{"type": "kpz"}',
            "--x-from", "-1", "--x-to", "0.8", "--x-step", "0.3",
            "--t-from", "0.05", "--t-to", "0.5", "--t-step", "0.15"]
    assert main(argv + ["--threads", "1"]) == 0
    out1 = capsys.readouterr().out
    assert main(argv + ["--threads", "8"]) == 0
    out8 = capsys.readouterr().out
    bitwise = out1 == out8
    elapsed = time.perf_counter() - t0
    ok = worst <= tol and bitwise and elapsed < budget
    detail = f"doubling shift {worst:.2e} (tol {tol:.0e}) at {where}, thread outputs {'identical' if bitwise else 'DIFFER'}"
    _line(capsys, "determinism", ok, detail, elapsed, budget)
    assert worst <= tol, f"resolution doubling moved log Q by {worst:.3e} at {where}"
    assert bitwise, "outputs differ across thread counts"
    assert elapsed < budget
