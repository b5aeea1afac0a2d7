"""The ten acceptance criteria at their stated tolerances.

Each test records one "CRITERION k: PASS/FAIL ..." line, printed in the terminal summary. Some
criteria also record INFO lines. These report diagnostics and never decide pass or fail.
"""
import math
import time

from hermitian_energy import exact
from hermitian_energy.exact import GaussianRational, binomial
from hermitian_energy.functionals import (
    MARGIN_KEYS,
    cocycle_check,
    err_term,
    i_ay,
    identity_suite_s3,
    inequality_report,
    j_ay,
    mabuchi_explicit,
    mabuchi_path,
    path_weights,
    proof_identity_suite_s2,
    residual,
    shift_laws,
    substrate_residuals,
    torsion_terms,
)
from hermitian_energy.scenarios import (
    _rng,
    admissible_potential,
    default_grid,
    gauss_legendre,
    make_metric,
    make_path,
    omega_phi,
    random_real_field,
)
from hermitian_energy.spectral import Form, constant_field, integrate_top, wedge, wedge_power

import conftest

NK = "nonkaehler_perturbed"
SEEDS10 = range(10)
SEEDS5 = range(5)


def record(k: int, ok: bool, detail: str, info=()):
    lines = [f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"]
    lines += [f"CRITERION {k} INFO: {s}" for s in info]
    conftest.ACCEPTANCE_LINES[k] = lines
    for line in lines:
        print(line)


def two_potentials(n: int, seed: int):
    sc = make_metric(NK, n, default_grid(n), 0.3, seed)
    p1 = admissible_potential(sc, seed=seed).phi
    p2 = admissible_potential(sc, seed=seed + 1000).phi
    return sc, p1, p2


# -- 1 ------------------------------------------------------------------------

def test_criterion_1_exact_constants():
    t0 = time.perf_counter()
    bad = []
    for n in range(3, 13):
        c = exact.ay_constants(n)
        if any(v != 0 for v in exact.ay_residuals(n, c).values()) or c != exact.ay_closed_forms(n):
            bad.append(f"constants n={n}")
        if n >= 4:
            if any(exact.recursion_expand(n, i) != exact.closed_form(n, i) for i in range(2, n)):
                bad.append(f"recursion n={n}")
            if not exact.substitute_c2(exact.closed_form(n, n - 1), exact.c2_solution(n)).is_zero():
                bad.append(f"c_last n={n}")
        want = [GaussianRational(0, -binomial(n, 2)), GaussianRational(0, binomial(n, 2))]
        for k in range(1, n - 1):
            want += [GaussianRational((-1) ** k * binomial(n, k + 2))] * 2
        if exact.mabuchi_weights(n) != want:
            bad.append(f"weights n={n}")
    if not exact.c2_solution(3).is_zero():
        bad.append("c2_solution(3)")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    record(1, ok, f"n=3..12 exact residuals zero={not bad} runtime={dt:.3f}s (limit 1s)"
           + (f" failures={bad}" if bad else ""))
    assert ok


# -- 2 -------------------------------------------------------------------------

def test_criterion_2_path_independence():
    worst, info, times = {}, [], {}
    for n in (2, 3):
        t0 = time.perf_counter()
        rule = gauss_legendre(n + 3)
        worst[n] = 0.0
        worst_fix = 0.0
        for s in SEEDS10:
            sc, p1, p2 = two_potentials(n, s)
            om = sc.omega
            lin_path = make_path("linear", om, p1, p2, rule)
            br_path = make_path("bridge", om, p1, p2, rule, seed=s + 3000)
            worst[n] = max(worst[n], residual(mabuchi_path(om, lin_path, rule), mabuchi_path(om, br_path, rule)))
            if n >= 3:
                w = path_weights(n, sign_corrected=True)
                worst_fix = max(worst_fix, residual(mabuchi_path(om, lin_path, rule, w),
                                                    mabuchi_path(om, br_path, rule, w)))
        times[n] = time.perf_counter() - t0
        if n >= 3:
            info.append(f"n={n} with real weights negated (sign-corrected reduction) "
                        f"max residual={worst_fix:.2e}")
    ok = all(worst[n] <= 1e-8 and times[n] <= 120 for n in worst)
    detail = " ".join(f"n={n} max residual={worst[n]:.2e} ({times[n]:.1f}s)" for n in worst)
    record(2, ok, f"{detail} (tol 1e-8)", info)
    assert ok


# -- 3, 4 ------------------------------------------------------------------------

def test_criterion_3_explicit_formula():
    worst = {}
    for n in (2, 3, 4):
        rule = gauss_legendre(n + 3)
        worst[n] = 0.0
        for s in SEEDS10:
            sc, p1, _ = two_potentials(n, s)
            zero = constant_field(sc.grid, 0.0)
            path = mabuchi_path(sc.omega, make_path("linear", sc.omega, zero, p1, rule), rule)
            worst[n] = max(worst[n], residual(mabuchi_explicit(sc.omega, p1), path))
    ok = all(v <= 1e-9 for v in worst.values())
    record(3, ok, " ".join(f"n={n} max residual={v:.2e}" for n, v in worst.items()) + " (tol 1e-9)")
    assert ok


def test_criterion_4_dual_forms():
    worst = {}
    for n in (2, 3, 4):
        worst[n] = 0.0
        for s in SEEDS10:
            sc, p1, _ = two_potentials(n, s)
            worst[n] = max(worst[n], residual(i_ay(sc.omega, p1, "direct"), i_ay(sc.omega, p1, "gradient")),
                           residual(j_ay(sc.omega, p1, "direct"), j_ay(sc.omega, p1, "gradient")))
    ok = all(v <= 1e-9 for v in worst.values())
    record(4, ok, " ".join(f"n={n} max residual={v:.2e}" for n, v in worst.items()) + " (tol 1e-9)")
    assert ok


# -- 5 ---------------------------------------------------------------------------

def test_criterion_5_inequalities():
    # 20 scenarios per n: both metric kinds, varied metric and potential seeds
    worst = {}
    for n in (2, 3, 4):
        worst[n] = math.inf
        for i in range(20):
            kind = NK if i % 2 == 0 else "kaehler_perturbed"
            sc = make_metric(kind, n, default_grid(n), 0.3, 100 + i)
            phi = admissible_potential(sc, seed=200 + i, amplitude=0.4 + 0.05 * (i % 5)).phi
            m = inequality_report(sc.omega, phi)
            scale = 1 + abs(m["I"]) + abs(m["J"])
            worst[n] = min(worst[n], min(m[k] / scale for k in MARGIN_KEYS + ("I", "J")))
    ok = all(v >= -1e-10 for v in worst.values())
    record(5, ok, " ".join(f"n={n} min relative margin={v:.2e}" for n, v in worst.items())
           + " (six margins plus I, J; tol -1e-10)")
    assert ok


# -- 6 ---------------------------------------------------------------------------

def test_criterion_6_section2_identities():
    worst, master, master_fix = {}, {}, {}
    for n in (4, 5):
        worst[n] = master[n] = master_fix[n] = 0.0
        for s in SEEDS5:
            sc, psi, _ = two_potentials(n, s)
            rng = _rng(s, 8)
            u, v = random_real_field(sc.grid, rng), random_real_field(sc.grid, rng)
            r = proof_identity_suite_s2(sc.omega, psi, u, v)
            local = [val for k, val in r.residuals.items() if k.startswith(("eq_2_31", "eq_2_46", "eq_2_87",
                                                                            "eq_2_98"))]
            worst[n] = max([worst[n]] + local)
            master[n] = max(master[n], r.residuals["eq_2_114"])
            master_fix[n] = max(master_fix[n], r.residuals["eq_2_114_sign_corrected"])
    ok = all(worst[n] <= 1e-8 and master[n] <= 1e-8 for n in worst)
    detail = " ".join(f"n={n} local max={worst[n]:.2e} master={master[n]:.2e}" for n in worst)
    info = [" ".join(f"n={n} master with real weights negated={master_fix[n]:.2e}" for n in worst)]
    record(6, ok, detail + " (tol 1e-8)", info)
    assert ok


# -- 7 ---------------------------------------------------------------------------

S3_KEYS = ("eq_3_17", "eq_3_21", "eq_3_25", "eq_3_26", "eq_3_27_vs_3_43", "eq_3_28_vs_3_44")


def test_criterion_7_section3_identities():
    worst = {}
    for n in (3, 4):
        worst[n] = 0.0
        for s in SEEDS5:
            sc, p1, _ = two_potentials(n, s)
            res = identity_suite_s3(sc.omega, p1)
            worst[n] = max([worst[n]] + [res[k] for k in S3_KEYS])
    ok = all(v <= 1e-9 for v in worst.values())
    record(7, ok, " ".join(f"n={n} max residual={v:.2e}" for n, v in worst.items()) + " (tol 1e-9)")
    assert ok


# -- 8 ---------------------------------------------------------------------------

def test_criterion_8_cocycle_and_shift():
    anti = cyc = sh = 0.0
    kc = 0.0
    cyc_n, cyc_fix = {}, {}
    for n in (2, 3):
        rule = gauss_legendre(n + 3)
        cyc_n[n] = cyc_fix[n] = 0.0
        for s in SEEDS5:
            sc, p1, p2 = two_potentials(n, s)
            p3 = admissible_potential(sc, seed=s + 2000).phi
            c = cocycle_check(sc.omega, p1, p2, p3, rule)
            anti = max(anti, c["antisymmetry"])
            cyc_n[n] = max(cyc_n[n], c["three_cycle"])
            if n >= 3:
                cf = cocycle_check(sc.omega, p1, p2, p3, rule, path_weights(n, sign_corrected=True))
                cyc_fix[n] = max(cyc_fix[n], cf["three_cycle"])
            C = float(_rng(s, 7).uniform(-1, 1))
            r = shift_laws(sc.omega, p1, p2, C, rule)
            sh = max(sh, r["shift"], r["shift_two_point"])
            ks = make_metric("kaehler_perturbed", n, default_grid(n), 0.3, s)
            kp = admissible_potential(ks, seed=s).phi
            kc = max(kc, abs(shift_laws(ks.omega, kp, kp, C, rule)["shift_value"] - C) / (1 + abs(C)))
    cyc = max(cyc_n.values())
    ok = anti <= 1e-8 and cyc <= 1e-8 and sh <= 1e-9 and kc <= 1e-10
    detail = (f"antisymmetry={anti:.2e} three-cycle n=2 {cyc_n[2]:.2e} n=3 {cyc_n[3]:.2e} (tol 1e-8) "
              f"shift={sh:.2e} (tol 1e-9) kaehler exactly-C={kc:.2e} (tol 1e-10)")
    info = [f"n=3 three-cycle with real weights negated={cyc_fix[3]:.2e}"]
    record(8, ok, detail, info)
    assert ok


# -- 9 ---------------------------------------------------------------------------

def _kaehler_oracle(omega, phi, n: int, order: int):
    # evaluated straight from forms: L = (1/V) ∫_0^1 ∫ φ ω_{tφ}^n dt, I = (1/V) ∫ φ (ω^n - ω_φ^n),
    # J = (1/V) ∫ φ ω^n - L
    f = Form.function(phi)
    V = integrate_top(wedge_power(omega, n)).real
    rule = gauss_legendre(order)
    L = sum(w * integrate_top(wedge(f, wedge_power(omega_phi(omega, phi.scale(float(t))), n))).real
            for t, w in zip(rule.nodes, rule.weights)) / V
    base = integrate_top(wedge(f, wedge_power(omega, n))).real / V
    I = base - integrate_top(wedge(f, wedge_power(omega_phi(omega, phi), n))).real / V
    return L, I, base - L


def test_criterion_9_kaehler_reduction():
    extra = match = 0.0
    for n in (2, 3):
        for s in range(3):
            sc = make_metric("kaehler_perturbed", n, default_grid(n), 0.3, s)
            phi = admissible_potential(sc, seed=s).phi
            X, Y = torsion_terms(sc.omega, phi)
            main = abs(integrate_top(wedge(Form.function(phi), wedge_power(sc.omega, n))))
            extra = max(extra, max(abs(z) for z in X + Y) / (1 + main),
                        abs(err_term(sc.omega, phi)) / (1 + main))
            L, I, J = _kaehler_oracle(sc.omega, phi, n, n + 3)
            match = max(match, residual(mabuchi_explicit(sc.omega, phi), L),
                        residual(i_ay(sc.omega, phi, "gradient"), I), residual(i_ay(sc.omega, phi, "direct"), I),
                        residual(j_ay(sc.omega, phi, "gradient"), J), residual(j_ay(sc.omega, phi, "direct"), J))
    ok = extra <= 1e-12 and match <= 1e-12
    record(9, ok, f"extra terms max={extra:.2e} L/I/J vs Kaehler formulas max={match:.2e} (tol 1e-12)")
    assert ok


# -- 10 --------------------------------------------------------------------------

def test_criterion_10_substrate():
    worst = 0.0
    for n in (1, 2, 3, 4):
        for s in range(2):
            worst = max([worst] + list(substrate_residuals(default_grid(n), s).values()))
    ok = worst <= 1e-12
    record(10, ok, f"d^2, dbar^2, anticommutator, Stokes, flat volume n=1..4 max={worst:.2e} (tol 1e-12)")
    assert ok
