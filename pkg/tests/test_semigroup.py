import math

import numpy as np
import pytest

from katoreg.hermitian import basis_projector, is_psd, trace_norm
from katoreg.semigroup import (
    AmbiguousKernelError,
    ModelParams,
    RegularizationFamily,
    build_generator,
    build_H,
    build_h_sigma,
    build_psi,
    build_Q,
    build_Q_pm,
    build_regularized_Q,
    build_tilt,
    evolve,
    interior_support,
    neumann_series_resolvent,
    psi_decompose,
    random_states,
    regularization_sweep,
    stationary_state,
    tilt_constants,
)
from katoreg.superop import apply, factorize, positivity_probe


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams.make(energy=0.0)
    with pytest.raises(ValueError):
        ModelParams.make(sigma_minus=-1.0)
    p = ModelParams.make(dim=10, sigma_plus=2.0)
    assert not p.markov_regime
    assert p.with_dim(20).dim == 20
    assert p.to_dict()["dim"] == 10


def test_h_sigma_is_diagonal_with_expected_entries(small_params):
    p = small_params
    h = build_h_sigma(p).entries
    n = np.arange(p.dim)
    bbd = np.append(n[1:], 0)
    expected = 1j * p.energy * n + 0.5 * (p.sigma_minus * n + p.sigma_plus * bbd)
    np.testing.assert_allclose(np.diag(h), expected, atol=1e-14)


def test_trace_of_gain_equals_trace_of_damping(small_params):
    H, Q = build_H(small_params), build_Q(small_params)
    for rho in random_states(small_params, 6, seed=1, support=small_params.dim, psd=False):
        assert apply(Q, rho).trace() == pytest.approx(apply(H, rho).trace(), abs=1e-12)


def test_gain_parts_sum_to_gain(small_params):
    qm, qp = build_Q_pm(small_params)
    rho = random_states(small_params, 1, seed=2)[0]
    np.testing.assert_allclose(apply(qm + qp, rho).entries, apply(build_Q(small_params), rho).entries)


@pytest.mark.parametrize("kind,index", [("cutoff", 3), ("compress", 3), ("kato", 0.4)])
def test_regularised_gain_is_positive_and_below_trace_of_damping(small_params, kind, index):
    K = build_regularized_Q(small_params, RegularizationFamily(kind, index))
    assert not positivity_probe(K, 10, seed=0).violation_found(1e-9)
    H = build_H(small_params)
    for rho in random_states(small_params, 5, seed=3, support=small_params.dim):
        assert apply(K, rho).trace() <= apply(H, rho).trace() + 1e-12


def test_cutoff_sandwich_compresses_output(small_params):
    N = 4
    K = build_regularized_Q(small_params, RegularizationFamily.number_cutoff(N))
    out = apply(K, random_states(small_params, 1, seed=4, support=small_params.dim)[0]).entries
    assert np.abs(out[N + 1:, :]).max() == 0 and np.abs(out[:, N + 1:]).max() == 0


def test_maximal_members_reproduce_full_gain_on_interior(small_params):
    p = small_params
    rho = random_states(p, 1, seed=5)[0]
    full = apply(build_Q(p), rho)
    for kind in ("cutoff", "compress"):
        K = build_regularized_Q(p, RegularizationFamily.maximal(kind, p.trunc))
        assert trace_norm(apply(K, rho) - full) < 1e-12


def test_family_validation(small_params):
    for fam in (RegularizationFamily("kato", 1.0), RegularizationFamily("cutoff", small_params.dim - 1),
                RegularizationFamily("compress", 1.5), RegularizationFamily("bogus", 0)):
        with pytest.raises(ValueError):
            fam.validate(small_params.trunc)
    assert str(RegularizationFamily.kato_scaling(0.5)) == "kato(0.5)"


def test_tilt_constants_at_zero_and_regime():
    p = ModelParams.make(sigma_minus=2.0, sigma_plus=1.0)
    r, c, regime = tilt_constants(p, 0.0)
    assert r == pytest.approx(1.0) and c == 0.0
    assert tilt_constants(p, 0.3)[2] is True
    assert tilt_constants(p, 0.4)[2] is False  # e^{0.8} > 2


def test_tilt_map_commutes_with_damping(small_params):
    R, H = build_tilt(small_params, 0.3), build_H(small_params)
    rho = random_states(small_params, 1, seed=6, psd=False)[0]
    assert trace_norm(apply(R @ H, rho) - apply(H @ R, rho)) < 1e-12


def test_psi_decompose(small_params):
    rho = random_states(small_params, 1, seed=7, psd=False)[0]
    r1, r2 = psi_decompose(rho, 1e-3, small_params)
    assert is_psd(r1) and is_psd(r2)
    assert r1.trace() + r2.trace() <= trace_norm(rho) + 1e-3
    assert trace_norm(r1 - r2 - rho) < 1e-10
    assert is_psd(apply(build_psi(small_params), basis_projector(3, small_params.dim)))


def test_random_states_are_seeded_and_interior(small_params):
    a = random_states(small_params, 3, seed=9)
    b = random_states(small_params, 3, seed=9)
    k = interior_support(small_params)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.entries, y.entries)
        assert x.trace() == pytest.approx(1.0)
        assert np.abs(x.entries[k:, :]).max() == 0


def test_evolve_record_columns(small_params):
    rec = evolve(build_generator(small_params), basis_projector(2, small_params.dim), [0.0, 0.5])
    row0 = rec.rows()[0]
    assert row0 == (0.0, 1.0, 1.0, 0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        evolve(build_H(small_params), basis_projector(0, small_params.dim), [0.5, 0.1])


def test_subsemigroup_trace_loss(small_params):
    p = small_params
    rec = evolve(build_H(p), basis_projector(1, p.dim), [0.0, 1.0])
    assert rec.trace[-1] == pytest.approx(math.exp(-(p.sigma_minus + 2 * p.sigma_plus)), abs=1e-12)


def test_neumann_series_matches_direct_solve(small_params):
    u = basis_projector(2, small_params.dim)
    total, rec = neumann_series_resolvent(build_H(small_params), build_Q(small_params), 1.0, u)
    assert rec.converged
    assert min(rec.increment_min_eigs) >= -1e-12
    assert all(b >= a - 1e-12 for a, b in zip(rec.partial_traces, rec.partial_traces[1:]))
    assert trace_norm(total - factorize(build_generator(small_params), 1.0).solve(u)) < 1e-10


def test_kato_sweep_error_decreases(small_params):
    rho = random_states(small_params, 1, seed=10, support=5)[0]
    rows = regularization_sweep(small_params, "kato", [0.0, 0.5, 0.9, 0.99], 1.0, rho)
    errs = [r.evo_error for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert all(r.evo_margin >= -1e-12 for r in rows)
    with pytest.raises(ValueError):
        regularization_sweep(small_params, "kato", [0.5, 0.1], 1.0, rho)


def test_stationary_state_is_geometric():
    p = ModelParams.make(dim=20, buffer=2, sigma_minus=1.0, sigma_plus=0.5)
    pops = np.diag(stationary_state(build_generator(p)).entries).real
    np.testing.assert_allclose(pops[1:] / pops[:-1], 0.5, rtol=1e-10)


def test_isolated_system_kernel_is_ambiguous():
    p = ModelParams.make(dim=6, buffer=2, sigma_minus=0.0, sigma_plus=0.0)
    with pytest.raises(AmbiguousKernelError):
        stationary_state(build_generator(p))
