"""Open one-mode boson model and its regularised generators.

Sign conventions: ``H`` and ``L`` are minus-generators, so the semigroups are
``S_t = exp(-t H)`` and ``T_t = exp(-t L)`` with ``L = H - K`` for a
positivity preserving gain term ``K``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fock
from .fock import FockOperator, TruncationConfig
from .hermitian import HermitianMatrix, as_array, jordan_decompose, trace_norm
from .superop import (
    ConditioningError,
    SuperOperator,
    apply,
    factorize,
    from_left_right,
    from_sandwich_sum,
    propagate,
    unvec,
    vec,
)

KATO_MAX = 1.0 - 1e-8


@dataclass(frozen=True)
class ModelParams:
    energy: float
    sigma_minus: float
    sigma_plus: float
    trunc: TruncationConfig

    def __post_init__(self):
        if not (math.isfinite(self.energy) and self.energy > 0):
            raise ValueError(f"energy must be positive, got {self.energy!r}")
        for name in ("sigma_minus", "sigma_plus"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be >= 0, got {value!r}")

    @classmethod
    def make(cls, dim=40, buffer=4, energy=1.0, sigma_minus=1.0, sigma_plus=0.25, **tols):
        return cls(energy, sigma_minus, sigma_plus, TruncationConfig(dim, buffer, **tols))

    @property
    def dim(self) -> int:
        return self.trunc.dim

    @property
    def markov_regime(self) -> bool:
        return self.sigma_plus < self.sigma_minus

    @property
    def dissipative(self) -> bool:
        return self.sigma_minus + self.sigma_plus > 0

    def with_dim(self, dim: int) -> "ModelParams":
        t = self.trunc
        return ModelParams(self.energy, self.sigma_minus, self.sigma_plus, TruncationConfig(dim, t.buffer, t.psd_tol, t.eq_tol))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("trunc"))
        return d


CUTOFF, COMPRESS, KATO = "cutoff", "compress", "kato"
FAMILY_KINDS = (CUTOFF, COMPRESS, KATO)


@dataclass(frozen=True)
class RegularizationFamily:
    """One member of a regularising family of gain terms.

    ``cutoff``: jump operators compressed by the number projector P_N.
    ``compress``: Q applied after rho -> P_N rho P_N.
    ``kato``: the scaled gain r Q with 0 <= r < 1.
    """

    kind: str
    index: float

    @classmethod
    def number_cutoff(cls, N: int):
        return cls(CUTOFF, int(N))

    @classmethod
    def compress_first(cls, N: int):
        return cls(COMPRESS, int(N))

    @classmethod
    def kato_scaling(cls, r: float):
        return cls(KATO, float(r))

    @classmethod
    def maximal(cls, kind: str, trunc: TruncationConfig):
        return cls(kind, KATO_MAX if kind == KATO else trunc.dim - 2)

    def validate(self, trunc: TruncationConfig):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == KATO:
            if not 0 <= self.index < 1:
                raise ValueError(f"kato scaling must lie in [0, 1), got {self.index!r}")
        elif int(self.index) != self.index or not 0 <= self.index <= trunc.dim - 2:
            raise ValueError(f"{self.kind} index must lie in [0, {trunc.dim - 2}], got {self.index!r}")

    def __str__(self):
        return f"{self.kind}({self.index:g})"


def interior_support(p: ModelParams) -> int:
    """Number of leading levels an interior state may occupy."""
    return p.dim - max(p.trunc.buffer, 2)


def random_states(p: ModelParams, n: int, seed: int, support: Optional[int] = None, psd: bool = True) -> List[HermitianMatrix]:
    """Seeded random matrices supported on the first ``support`` levels.

    PSD samples alternate between rank-one and full-rank Gram states with
    unit trace; Hermitian samples are normalised to unit trace norm.
    """
    rng = np.random.default_rng(seed)
    k = interior_support(p) if support is None else support
    out = []
    for i in range(n):
        m = np.zeros((p.dim, p.dim), dtype=complex)
        if psd:
            cols = 1 if i % 2 == 0 else k
            g = rng.normal(size=(k, cols)) + 1j * rng.normal(size=(k, cols))
            block = g @ g.conj().T
            m[:k, :k] = block / np.trace(block).real
        else:
            g = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
            block = g + g.conj().T
            m[:k, :k] = block / np.sum(np.abs(np.linalg.eigvalsh(block)))
        out.append(HermitianMatrix(m))
    return out


def build_h_sigma(p: ModelParams) -> FockOperator:
    """i h + (sigma_- b*b + sigma_+ b b*)/2, with b b* truncated at the top level."""
    cfg = p.trunc
    b, bd = fock.annihilation(cfg), fock.creation(cfg)
    m = 1j * fock.hamiltonian(p.energy, cfg).entries + 0.5 * (
        p.sigma_minus * (bd @ b).entries + p.sigma_plus * (b @ bd).entries
    )
    return FockOperator(cfg.dim, m, "h_sigma")


def build_H(p: ModelParams) -> SuperOperator:
    """rho -> h_sigma rho + rho h_sigma*; minus the generator of the damped evolution."""
    return from_left_right(build_h_sigma(p), "H")


def build_Q_pm(p: ModelParams):
    cfg = p.trunc
    b, bd = fock.annihilation(cfg), fock.creation(cfg)
    return (
        from_sandwich_sum([(p.sigma_minus, b)], "Q-"),
        from_sandwich_sum([(p.sigma_plus, bd)], "Q+"),
    )


def build_Q(p: ModelParams) -> SuperOperator:
    """Gain term sigma_- b rho b* + sigma_+ b* rho b."""
    q_minus, q_plus = build_Q_pm(p)
    q = q_minus + q_plus
    return SuperOperator(q.dim, q.matrix, "Q")


def tilt_constants(p: ModelParams, s: float):
    """(r, c, in_regime) for the tilt parameter s.

    r = (e^{-2s} sigma_- + e^{2s} sigma_+) / (sigma_- + sigma_+) and
    c = 2 sigma_- sigma_+ sinh(2s) / (sigma_- + sigma_+); the working regime
    is sigma_+ e^{2s} < sigma_-.
    """
    total = p.sigma_minus + p.sigma_plus
    if total <= 0:
        raise ValueError("tilt constants need sigma_- + sigma_+ > 0")
    r = (math.exp(-2 * s) * p.sigma_minus + math.exp(2 * s) * p.sigma_plus) / total
    c = 2 * p.sigma_minus * p.sigma_plus * math.sinh(2 * s) / total
    return r, c, p.sigma_plus * math.exp(2 * s) < p.sigma_minus


def build_Q_tilde(p: ModelParams, s: float) -> SuperOperator:
    if not s > 0:
        raise ValueError(f"tilt parameter must be positive, got {s!r}")
    q_minus, q_plus = build_Q_pm(p)
    q = math.exp(-2 * s) * q_minus + math.exp(2 * s) * q_plus
    return SuperOperator(q.dim, q.matrix, f"Q~({s:g})")


def build_tilt(p: ModelParams, s: float) -> SuperOperator:
    """rho -> exp(-s n) rho exp(-s n)."""
    return from_sandwich_sum([(1.0, fock.exp_tilt(s, p.trunc))], f"R({s:g})")


def build_regularized_Q(p: ModelParams, fam: RegularizationFamily) -> SuperOperator:
    fam.validate(p.trunc)
    cfg = p.trunc
    if fam.kind == KATO:
        q = fam.index * build_Q(p)
        return SuperOperator(q.dim, q.matrix, f"Q[{fam}]")
    proj = fock.projector(int(fam.index), cfg)
    b, bd = fock.annihilation(cfg), fock.creation(cfg)
    if fam.kind == CUTOFF:
        # (b* P_N)* rho (b* P_N) = P_N b rho b* P_N, likewise for the sigma_+ term
        return from_sandwich_sum([(p.sigma_minus, proj @ b), (p.sigma_plus, proj @ bd)], f"Q[{fam}]")
    compress = from_sandwich_sum([(1.0, proj)], "P.P")
    q = build_Q(p) @ compress
    return SuperOperator(q.dim, q.matrix, f"Q[{fam}]")


def build_generator(p: ModelParams, fam: Optional[RegularizationFamily] = None) -> SuperOperator:
    """H - K_fam, or H - Q when ``fam`` is None (the full generator)."""
    k = build_Q(p) if fam is None else build_regularized_Q(p, fam)
    g = build_H(p) - k
    return SuperOperator(g.dim, g.matrix, "L" if fam is None else f"L[{fam}]")


def build_psi(p: ModelParams) -> SuperOperator:
    """rho -> (I + n)^{-1} rho (I + n)^{-1}."""
    inv = np.diag(1.0 / (1.0 + np.arange(p.dim)))
    return from_sandwich_sum([(1.0, inv)], "Psi")


psi_map = build_psi


def psi_decompose(rho, eps: float, p: ModelParams, max_iter: int = 200):
    """Split rho = rho1 - rho2 with rho1, rho2 >= 0 and Tr rho1 + Tr rho2 <= ||rho||_1 + eps.

    rho_t = (I + t n) rho (I + t n) is brought within eps of ||rho||_1 by
    halving t from 1, Jordan-decomposed, and conjugated back by (I + t n)^{-1}.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    rho = HermitianMatrix(as_array(rho))
    n = np.arange(p.dim)
    target = trace_norm(rho) + eps
    t = 1.0
    for _ in range(max_iter):
        grow = 1.0 + t * n
        rho_t = HermitianMatrix(grow[:, None] * rho.entries * grow[None, :])
        if trace_norm(rho_t) <= target:
            break
        t *= 0.5
    else:
        raise RuntimeError(f"no admissible t found within {max_iter} halvings")
    v, w = jordan_decompose(rho_t)
    shrink = 1.0 / grow
    rho1 = HermitianMatrix(shrink[:, None] * v.entries * shrink[None, :])
    rho2 = HermitianMatrix(shrink[:, None] * w.entries * shrink[None, :])
    return rho1, rho2


@dataclass(frozen=True)
class EvolutionRecord:
    times: tuple
    states: tuple = field(repr=False)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    @property
    def trace(self):
        return [s.trace() for s in self.states]

    @property
    def trace_norm(self):
        return [trace_norm(s) for s in self.states]

    @property
    def min_eigenvalue(self):
        return [s.min_eigenvalue() for s in self.states]

    @property
    def purity(self):
        return [float(np.real(np.vdot(s.entries, s.entries))) for s in self.states]

    @property
    def mean_occupation(self):
        n = np.arange(self.states[0].dim) if self.states else None
        return [float(np.real(np.diag(s.entries)) @ n) for s in self.states]

    def rows(self):
        cols = (self.trace, self.trace_norm, self.min_eigenvalue, self.purity, self.mean_occupation)
        return [(t,) + tuple(c[i] for c in cols) for i, t in enumerate(self.times)]


def evolve(L: SuperOperator, rho0, t_grid: Sequence[float]) -> EvolutionRecord:
    """Record exp(-t L) rho0 on the grid."""
    times = tuple(float(t) for t in t_grid)
    if not times or times[0] < 0:
        raise ValueError("time grid must be nonempty with t >= 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    states = propagate(-L, times, HermitianMatrix(as_array(rho0)))
    return EvolutionRecord(times, tuple(states))


class NeumannRecord(NamedTuple):
    converged: bool
    terms: int
    increments: list
    increment_min_eigs: list
    partial_traces: list

    @property
    def last_increment(self) -> float:
        return self.increments[-1]


def neumann_series_resolvent(H: SuperOperator, K: SuperOperator, lam: float, u, tol: float = 1e-12, max_terms: int = 500):
    """Partial sums of sum_n (lam I + H)^{-1} (K (lam I + H)^{-1})^n u.

    Stops once the trace norm of the newest term falls below ``tol``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    solver = factorize(H, lam)
    dim = H.dim
    term = solver.solve_vec(vec(as_array(u)))
    total = term.copy()
    increments, min_eigs, traces = [], [], []
    converged = False
    for n in range(max_terms):
        m = HermitianMatrix(unvec(term, dim))
        evals = m.eigvalsh()
        increments.append(float(np.sum(np.abs(evals))))
        min_eigs.append(float(evals[0]))
        traces.append(float(np.trace(unvec(total, dim)).real))
        if increments[-1] < tol:
            converged = True
            break
        if n + 1 == max_terms:
            break
        term = solver.solve_vec(K.matrix @ term)
        total = total + term
    record = NeumannRecord(converged, len(increments), increments, min_eigs, traces)
    return HermitianMatrix(unvec(total, dim)), record


class SweepRow(NamedTuple):
    index: float
    evo_error: float
    evo_margin: float
    res_error: float
    res_margin: float
    evo_trace: float


def regularization_sweep(p: ModelParams, fam_kind: str, indices: Sequence[float], t: float, rho0, lam: float = 1.0) -> List[SweepRow]:
    """Distance of the regularised evolution and resolvent from the full ones.

    Margins are min-eigenvalues of (full - regularised), which domination
    predicts to be nonnegative for PSD rho0.
    """
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("indices must be increasing")
    full = build_generator(p)
    rho0 = HermitianMatrix(as_array(rho0))
    evo_full = propagate(-full, [t], rho0)[-1]
    res_full = factorize(full, lam).solve(rho0)
    rows = []
    for idx in indices:
        gen = build_generator(p, RegularizationFamily(fam_kind, idx))
        evo = propagate(-gen, [t], rho0)[-1]
        res = factorize(gen, lam).solve(rho0)
        rows.append(
            SweepRow(
                float(idx),
                trace_norm(evo_full - evo),
                (evo_full - evo).min_eigenvalue(),
                trace_norm(res_full - res),
                (res_full - res).min_eigenvalue(),
                evo.trace(),
            )
        )
    return rows


class AmbiguousKernelError(RuntimeError):
    pass


def _kernel_eigenvalues(L: SuperOperator, count: int = 4) -> np.ndarray:
    n = L.dim * L.dim
    if n <= 400:
        return np.linalg.eigvals(L.dense())
    # eigenvalues of a minus-generator sit in Re >= 0; shift to the left of 0
    vals = spla.eigs(sp.csc_matrix(L.matrix), k=count, sigma=-0.5, return_eigenvectors=False)
    return np.asarray(vals)


def _gth_stationary(rates: np.ndarray) -> np.ndarray:
    """Stationary vector of a CTMC generator (rows sum to zero) by GTH elimination.

    Only off-diagonal rates enter, without subtractions, so small stationary
    probabilities keep full relative accuracy.
    """
    a = np.array(rates, dtype=float)
    n = a.shape[0]
    for k in range(n - 1, 0, -1):
        s = a[k, :k].sum()
        if s <= 0:
            raise AmbiguousKernelError(f"state {k} has no outgoing rate to lower states; chain is reducible")
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def stationary_state(L: SuperOperator, kernel_tol: float = 1e-8, residual_tol: float = 1e-8) -> HermitianMatrix:
    """Trace-one PSD kernel vector of L.

    Raises AmbiguousKernelError unless exactly one eigenvalue lies within
    ``kernel_tol`` of zero. When L maps diagonal matrices to diagonal
    matrices, the population block is a Markov generator and is solved by
    GTH elimination; otherwise the smallest singular vector is used.
    """
    dim = L.dim
    evals = _kernel_eigenvalues(L)
    near = int(np.sum(np.abs(evals) < kernel_tol))
    if near != 1:
        raise AmbiguousKernelError(f"{near} eigenvalues within {kernel_tol:g} of zero; kernel is not one-dimensional")
    m = L.matrix.tocsc() if L.is_sparse else sp.csc_matrix(L.matrix)
    diag_idx = np.arange(dim) * (dim + 1)
    cols = m[:, diag_idx]
    closed = cols.nnz == 0 or np.all(np.isin(cols.nonzero()[0], diag_idx))
    pops = cols[diag_idx, :].toarray() if closed else None
    rates = None
    if pops is not None and np.allclose(pops.imag, 0):
        rates = -pops.real.T
        off = rates - np.diag(np.diag(rates))
        if np.any(off < 0) or not np.allclose(rates.sum(axis=1), 0, atol=1e-12 * max(1.0, np.abs(rates).max())):
            rates = None
    if rates is not None:
        rho = np.diag(_gth_stationary(rates)).astype(complex)
    else:
        _, _, vh = np.linalg.svd(L.dense())
        rho = unvec(vh[-1].conj(), dim)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
    state = HermitianMatrix(rho)
    residual = trace_norm(apply(L, state))
    if residual > residual_tol:
        raise AmbiguousKernelError(f"stationary residual {residual:.3e} exceeds {residual_tol:g}")
    return state
