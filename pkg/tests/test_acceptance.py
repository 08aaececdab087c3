"""One test per acceptance criterion, each at its stated tolerance.

Every test records a PASS/FAIL line (also printed in the terminal summary).
"""
import json
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from katoreg import cli
from katoreg.hermitian import basis_projector, ket_bra, trace_norm
from katoreg.semigroup import (
    ModelParams,
    RegularizationFamily,
    build_generator,
    build_H,
    build_Q,
    build_Q_tilde,
    build_regularized_Q,
    evolve,
    neumann_series_resolvent,
    random_states,
    stationary_state,
    tilt_constants,
)
from katoreg.superop import apply, apply_many, euler_power, exponential, factorize, propagate
from katoreg.verify import (
    EULER_STEPS,
    LAMBDA_GRID,
    T_GRID,
    check_contraction,
    monotonicity_witnesses,
    run_suite,
    scan_generator_form,
    trace_drift,
)


def record(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_subsemigroup_trace_decay():
    p = ModelParams.make(dim=8, buffer=2)
    times = np.linspace(0.0, 2.0, 20)
    rec = evolve(build_H(p), basis_projector(1, p.dim), times)
    rate = p.sigma_minus + 2 * p.sigma_plus
    err = max(abs(tr - math.exp(-rate * t)) for t, tr in zip(times, rec.trace))
    record(1, "damped trace decay on |e_1><e_1|, D=8", err <= 1e-10, f"max error {err:.3e} (tol 1e-10)")


def test_criterion_02_generator_form_scan():
    p = ModelParams.make(dim=40, buffer=4, sigma_minus=1.0, sigma_plus=1.0)
    rows = scan_generator_form(p, range(2, 21), [round(0.1 * i, 1) for i in range(1, 10)])
    disagreement = max(abs(c - m) for _, _, c, m in rows)
    at_point = [m for k, lam, _, m in rows if k == 10 and lam == 0.4][0]
    ok = disagreement <= 1e-9 and abs(at_point + 0.84) <= 1e-9
    record(2, "closed form vs matrix, k=2..20, lambda=0.1..0.9", ok,
           f"max disagreement {disagreement:.3e}, value at (k=10, lambda=0.4) {at_point:.12g}")


def test_criterion_03_neumann_resolvent():
    p = ModelParams.make(dim=24, buffer=2, sigma_minus=1.0, sigma_plus=0.25)
    u = basis_projector(2, p.dim)
    total, rec = neumann_series_resolvent(build_H(p), build_Q(p), 1.0, u, tol=1e-13, max_terms=500)
    direct = factorize(build_generator(p), 1.0).solve(u)
    err = trace_norm(total - direct)
    min_inc = min(rec.increment_min_eigs)
    ok = rec.converged and rec.terms <= 500 and min_inc >= -1e-10 and err <= 1e-8
    record(3, "Neumann partial sums, D=24, lambda=1", ok,
           f"{rec.terms} terms, min increment eig {min_inc:.3e}, error {err:.3e}")


def test_criterion_04_euler_order():
    p = ModelParams.make(dim=16, buffer=2)
    L = build_generator(p)
    u = basis_projector(1, p.dim)
    exact = exponential(-L, 1.0)(u)
    errs = [trace_norm(euler_power(L, 1.0, n, u) - exact) for n in EULER_STEPS]
    slope = float(np.polyfit(np.log(EULER_STEPS), np.log(errs), 1)[0])
    record(4, "backward-Euler convergence order, D=16", abs(slope + 1) <= 0.2, f"slope {slope:.4f}")


def test_criterion_05_domination():
    p = ModelParams.make()
    rhos = random_states(p, 50, seed=5)
    fams = [RegularizationFamily.kato_scaling(r) for r in (0.0, 0.25, 0.5, 0.75)]
    fams += [RegularizationFamily.number_cutoff(N) for N in (0, 4, 8)]
    s_states = propagate(-build_H(p), T_GRID, rhos)
    worst, where = math.inf, None
    for fam in fams:
        t_states = propagate(-build_generator(p, fam), T_GRID, rhos)
        for t, ss, ts in zip(T_GRID, s_states, t_states):
            for a, b in zip(ss, ts):
                m = (b - a).min_eigenvalue()
                if m < worst:
                    worst, where = m, f"{fam} t={t}"
    record(5, "S_t <= T^alpha_t on 50 seeded states", worst >= -1e-9, f"min eigenvalue {worst:.3e} at {where}")


def test_criterion_06_contraction():
    p = ModelParams.make()
    fams = [RegularizationFamily.kato_scaling(r) for r in (0.0, 0.25, 0.5, 0.75)]
    fams += [RegularizationFamily.number_cutoff(N) for N in (0, 4, 8)]
    fams += [RegularizationFamily.compress_first(N) for N in (0, 4, 8)]
    rep = check_contraction(p, 6, fams, t_grid=T_GRID, lam_grid=LAMBDA_GRID, samples=50)
    record(6, "trace-norm contraction of semigroups and resolvents", rep.worst_violation <= 1e-9,
           f"worst excess {rep.worst_violation:.3e}")


def test_criterion_07_trace_preservation():
    p = ModelParams.make(dim=40, buffer=4, sigma_minus=1.0, sigma_plus=0.25)
    rhos = random_states(p, 20, seed=7, support=10)
    times = list(np.linspace(0.05, 1.0, 20))
    drift = trace_drift(p, times, rhos)
    q = p.with_dim(80)
    big = []
    for r in rhos:
        m = np.zeros((80, 80), dtype=complex)
        m[:40, :40] = r.entries
        big.append(m)
    drift2 = trace_drift(q, times, big)
    ok = drift <= 1e-6 and drift2 <= drift / 10
    record(7, "trace drift at D=40 and shrink under doubling", ok,
           f"drift(40) {drift:.3e}, drift(80) {drift2:.3e}, ratio {drift / max(drift2, 1e-300):.3g}")


def test_criterion_08_tilted_trace_identity():
    p = ModelParams.make(dim=40, buffer=4, sigma_minus=2.0, sigma_plus=1.0)
    s = 0.3
    r, c, regime = tilt_constants(p, s)
    H, Qt = build_H(p), build_Q_tilde(p, s)
    rhos = random_states(p, 100, seed=8, psd=False)
    err = max(abs(a.trace() - (r * b.trace() + c * x.trace()))
              for x, a, b in zip(rhos, apply_many(Qt, rhos), apply_many(H, rhos)))
    # quoted constants carry six decimals; c = 4 sinh(0.6) / 3 = 0.8488714..., so allow one unit in the last place
    ok = regime and abs(r - 0.973247) <= 1e-6 and abs(c - 0.848872) <= 1e-6 and err <= 1e-9
    record(8, "tilted gain trace identity, s=0.3", ok, f"r={r:.9f}, c={c:.9f}, regime={regime}, max error {err:.3e}")


def test_criterion_09_regularisation_independence():
    p = ModelParams.make()
    rhos = random_states(p, 20, seed=9, support=10)
    kato = propagate(-build_generator(p, RegularizationFamily.kato_scaling(1 - 1e-8)), T_GRID, rhos)
    cut = propagate(-build_generator(p, RegularizationFamily.number_cutoff(p.dim - 2)), T_GRID, rhos)
    worst = max(trace_norm(a - b) for xs, ys in zip(kato, cut) for a, b in zip(xs, ys))
    record(9, "converged kato vs cutoff evolutions", worst <= 1e-6, f"max trace-norm difference {worst:.3e}")


def test_criterion_10_family_monotone_witness():
    p = ModelParams.make(dim=40, buffer=4, sigma_minus=1.0, sigma_plus=0.0)
    reports = {r.name: r for r in run_suite(p, seed=42, samples={"large": 20, "medium": 10, "small": 10})}
    rep = reports["family_monotone_cutoff"]
    w = monotonicity_witnesses(p, 0)[0]
    expected = np.zeros(p.dim)
    expected[1], expected[2] = 1.0, 1 / math.sqrt(2)
    diff = build_regularized_Q(p, RegularizationFamily.number_cutoff(1)) - build_regularized_Q(
        p, RegularizationFamily.number_cutoff(0))
    m = apply(diff, ket_bra(w)).min_eigenvalue()
    serialised = json.loads(json.dumps(rep.to_dict()))
    ok = (
        np.allclose(w, expected)
        and m <= -0.5 * p.sigma_minus
        and rep.informational
        and "vector" in (serialised["witness"] or {})
    )
    record(10, "cutoff monotonicity witness, sigma_+=0, N=0", ok,
           f"min eigenvalue {m:.6f} (2x2 value {(1 - math.sqrt(5)) / 2:.6f}), informational={rep.informational}")


def test_criterion_11_stationary_state():
    p = ModelParams.make(dim=40, buffer=4, sigma_minus=1.0, sigma_plus=0.25)
    st = stationary_state(build_generator(p))
    pops = np.diag(st.entries).real
    ratio_err = max(abs(pops[n + 1] / pops[n] - 0.25) for n in range(21))
    offdiag = np.abs(st.entries - np.diag(np.diag(st.entries))).max()
    record(11, "stationary populations geometric with ratio 0.25", ratio_err <= 1e-6 and offdiag <= 1e-12,
           f"max ratio error {ratio_err:.3e}, max off-diagonal {offdiag:.3e}")


def test_criterion_12_determinism(tmp_path):
    first = tmp_path / "first"
    assert cli.main(["verify", "--out-dir", str(first)]) in (0, 1)
    manifest = first / "manifest.json"
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(["verify", "--manifest", str(manifest), "--out-dir", str(out)]) in (0, 1)
        outputs.append((out / "reports.json").read_bytes())
    same = outputs[0] == outputs[1] == (first / "reports.json").read_bytes()
    record(12, "verify twice from one manifest", same, "reports.json byte-identical" if same else "reports differ")
