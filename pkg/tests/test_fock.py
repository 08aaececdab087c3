import numpy as np
import pytest

from katoreg import fock


@pytest.fixture
def cfg():
    return fock.TruncationConfig(dim=6)


def test_ladder_matrix_elements(cfg):
    b = fock.annihilation(cfg).entries
    for n in range(1, cfg.dim):
        assert b[n - 1, n] == pytest.approx(np.sqrt(n))
    assert np.count_nonzero(b) == cfg.dim - 1


def test_creation_is_adjoint_of_annihilation(cfg):
    b = fock.annihilation(cfg)
    np.testing.assert_allclose(fock.creation(cfg).entries, b.adjoint.entries)


def test_number_operator_factorises(cfg):
    b, bs = fock.annihilation(cfg), fock.creation(cfg)
    np.testing.assert_allclose((bs @ b).entries, fock.number_op(cfg).entries, atol=1e-14)


def test_commutator_fails_only_at_the_edge(cfg):
    d = fock.commutation_defect(cfg).entries
    b, bs = fock.annihilation(cfg), fock.creation(cfg)
    comm = (b @ bs - bs @ b).entries
    np.testing.assert_allclose(np.diag(comm)[:-1], 1.0, atol=1e-13)
    assert comm[-1, -1] == pytest.approx(-(cfg.dim - 1))
    assert np.abs(d).max() > 0


def test_projector_ranks_and_bounds(cfg):
    for N in range(cfg.dim):
        assert np.trace(fock.projector(N, cfg).entries).real == pytest.approx(N + 1)
    with pytest.raises(IndexError):
        fock.projector(cfg.dim, cfg)
    with pytest.raises(IndexError):
        fock.projector(-1, cfg)


def test_hamiltonian_and_tilt_are_diagonal(cfg):
    h = fock.hamiltonian(2.0, cfg).entries
    np.testing.assert_allclose(np.diag(h).real, 2.0 * np.arange(cfg.dim))
    r = fock.exp_tilt(0.3, cfg).entries
    np.testing.assert_allclose(np.diag(r).real, np.exp(-0.3 * np.arange(cfg.dim)))
    assert np.count_nonzero(r - np.diag(np.diag(r))) == 0


def test_exp_tilt_at_zero_is_identity(cfg):
    np.testing.assert_allclose(fock.exp_tilt(0.0, cfg).entries, np.eye(cfg.dim))


def test_operators_are_read_only(cfg):
    b = fock.annihilation(cfg)
    with pytest.raises(ValueError):
        b.entries[0, 1] = 5.0


@pytest.mark.parametrize("dim", [0, 1])
def test_too_small_truncation_rejected(dim):
    with pytest.raises(ValueError):
        fock.TruncationConfig(dim=dim)
