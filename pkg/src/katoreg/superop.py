"""Linear maps on D x D matrices (superoperators).

Convention: column stacking, ``vec(X) = X.reshape(-1, order="F")``, so the
sandwich ``X -> A X B*`` is the matrix ``kron(conj(B), A)``.

Generators built from Fock operators are stored as sparse CSR matrices;
exponentials come back dense. Both storage kinds support the same API.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import FockOperator
from .hermitian import DEFAULT_EQ_TOL, HermiticityError, HermitianMatrix, as_array, trace_norm


class ConditioningError(RuntimeError):
    pass


def vec(x) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def _fock_entries(v) -> np.ndarray:
    return v.entries if isinstance(v, FockOperator) else np.asarray(v, dtype=complex)


def _random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


@dataclass(frozen=True, eq=False)
class SuperOperator:
    dim: int
    matrix: object = field(repr=False)
    label: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = self.matrix
        m = m.tocsr() if sp.issparse(m) else np.asarray(m, dtype=complex)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix for dim {self.dim}, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        if self.check:
            self._hermiticity_probe()

    def _hermiticity_probe(self, samples: int = 3):
        rng = np.random.default_rng(0)
        for _ in range(samples):
            x = _random_hermitian(rng, self.dim)
            y = unvec(self.matrix @ vec(x), self.dim)
            asym = 0.5 * np.linalg.norm(y - y.conj().T)
            if asym > DEFAULT_EQ_TOL * max(1.0, np.linalg.norm(y)):
                raise HermiticityError(f"{self.label or 'superoperator'} does not preserve Hermiticity ({asym:.3e})")

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def _combine(self, other, op, label):
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        a, b = self.matrix, other.matrix
        if self.is_sparse and other.is_sparse:
            m = op(a, b)
        else:
            m = op(self.dense(), other.dense())
        return SuperOperator(self.dim, m, label, check=False)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, f"({self.label}+{other.label})")

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, f"({self.label}-{other.label})")

    def __matmul__(self, other):
        return self._combine(other, lambda a, b: a @ b, f"{self.label}{other.label}")

    def __mul__(self, scalar):
        if np.imag(scalar) != 0:
            raise TypeError("only real scalars keep a superoperator Hermiticity preserving")
        return SuperOperator(self.dim, float(np.real(scalar)) * self.matrix, f"{scalar}*{self.label}", check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return SuperOperator(self.dim, -self.matrix, f"-{self.label}", check=False)

    def __call__(self, rho) -> HermitianMatrix:
        return apply(self, rho)


def identity_superop(dim: int) -> SuperOperator:
    return SuperOperator(dim, sp.identity(dim * dim, dtype=complex, format="csr"), "Id", check=False)


def zero_superop(dim: int) -> SuperOperator:
    return SuperOperator(dim, sp.csr_matrix((dim * dim, dim * dim), dtype=complex), "0", check=False)


def _transpose_permutation(dim: int) -> sp.csr_matrix:
    idx = np.arange(dim * dim)
    i, j = idx % dim, idx // dim
    return sp.csr_matrix((np.ones(dim * dim), (idx, j + i * dim)), shape=(dim * dim, dim * dim))


def transpose_map(dim: int) -> SuperOperator:
    """X -> X^T, positive but not completely positive."""
    return SuperOperator(dim, _transpose_permutation(dim).astype(complex), "T")


def from_sandwich_sum(terms: Iterable, label: str = "sandwich") -> SuperOperator:
    """X -> sum_i c_i V_i X V_i* for c_i >= 0."""
    terms = list(terms)
    if not terms:
        raise ValueError("need at least one term")
    dim = _fock_entries(terms[0][1]).shape[0]
    m = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
    for c, v in terms:
        if not c >= 0:
            raise ValueError(f"sandwich coefficients must be nonnegative, got {c!r}")
        v = _fock_entries(v)
        if v.shape != (dim, dim):
            raise ValueError(f"dimension mismatch: {v.shape} vs {(dim, dim)}")
        m = m + c * sp.kron(sp.csr_matrix(v.conj()), sp.csr_matrix(v), format="csr")
    return SuperOperator(dim, m, label)


def from_left_right(a, label: str = "") -> SuperOperator:
    """X -> A X + X A*."""
    a = _fock_entries(a)
    dim = a.shape[0]
    eye = sp.identity(dim, dtype=complex, format="csr")
    m = sp.kron(eye, sp.csr_matrix(a), format="csr") + sp.kron(sp.csr_matrix(a.conj()), eye, format="csr")
    return SuperOperator(dim, m, label or f"LR({getattr(a, 'label', 'A')})")


def apply(s: SuperOperator, rho) -> HermitianMatrix:
    x = as_array(rho)
    if x.shape != (s.dim, s.dim):
        raise ValueError(f"{s.label}: expected a {s.dim}x{s.dim} input, got {x.shape}")
    y = unvec(s.matrix @ vec(x), s.dim)
    try:
        return HermitianMatrix(y)
    except HermiticityError as exc:
        raise HermiticityError(f"{s.label}: {exc}") from None


def apply_many(s: SuperOperator, rhos: Sequence) -> list:
    """Apply to a batch of matrices with one matrix product."""
    if not len(rhos):
        return []
    block = np.column_stack([vec(as_array(r)) for r in rhos])
    out = s.matrix @ block
    return [HermitianMatrix(unvec(out[:, k], s.dim)) for k in range(out.shape[1])]


def trace_adjoint(s: SuperOperator) -> SuperOperator:
    """The map S* with Tr((S rho) A) = Tr(rho S*(A))."""
    idx = np.arange(s.dim * s.dim)
    perm = (idx // s.dim) + (idx % s.dim) * s.dim
    m = s.matrix.T
    m = m.tocsr()[perm][:, perm] if s.is_sparse else m[np.ix_(perm, perm)]
    return SuperOperator(s.dim, m, f"{s.label}^*")


class ProbeReport(NamedTuple):
    samples: int
    worst_min_eigenvalue: float
    witness_input: Optional[HermitianMatrix]
    seed: int

    def violation_found(self, tol: float) -> bool:
        return self.worst_min_eigenvalue < -tol


def _psd_samples(dim, n_samples, rng):
    out = []
    for _ in range(n_samples):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        out.append(np.outer(v, v.conj()))
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gram = g @ g.conj().T
        out.append(gram / np.trace(gram).real)
    for n in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[n, n] = 1.0
        out.append(e)
    return out


def positivity_probe(s: SuperOperator, n_samples: int, seed: int, tol: float = 1e-9, extra_inputs=()) -> ProbeReport:
    """Look for a PSD input whose image has a negative eigenvalue.

    A clean report only means no violation was found among the samples.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    inputs = _psd_samples(s.dim, n_samples, rng) + [as_array(x) for x in extra_inputs]
    outputs = apply_many(s, inputs)
    mins = np.array([o.min_eigenvalue() for o in outputs])
    k = int(np.argmin(mins))
    witness = HermitianMatrix(inputs[k]) if mins[k] < -tol else None
    return ProbeReport(len(inputs), float(mins[k]), witness, seed)


def induced_trace_norm_probe(s: SuperOperator, n_samples: int, seed: int, ascent_steps: int = 200) -> float:
    """Certified lower bound on the trace-norm induced norm of ``s``.

    Extreme points of the Hermitian trace-norm ball are +-|v><v|, so the bound
    is a max over unit vectors, followed by a random-direction local ascent
    from the best sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    dim = s.dim

    def value(v):
        return trace_norm(unvec(s.matrix @ vec(np.outer(v, v.conj())), dim))

    candidates = list(np.eye(dim, dtype=complex))
    for _ in range(n_samples):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        candidates.append(v / np.linalg.norm(v))
    values = [value(v) for v in candidates]
    k = int(np.argmax(values))
    best_v, best = candidates[k], values[k]
    step = 0.5
    for _ in range(ascent_steps):
        trial = best_v + step * (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(dim)
        trial /= np.linalg.norm(trial)
        val = value(trial)
        if val > best:
            best_v, best = trial, val
        else:
            step = max(step * 0.9, 1e-6)
    return float(best)


def exponential(s: SuperOperator, t: float) -> SuperOperator:
    """exp(t S), dense, by scaling and squaring with a Pade core (scipy)."""
    if not (np.isfinite(t) and t >= 0):
        raise ValueError(f"t must be finite and >= 0, got {t!r}")
    if t == 0:
        return SuperOperator(s.dim, np.eye(s.dim * s.dim, dtype=complex), f"exp(0*{s.label})", check=False)
    with np.errstate(over="raise", invalid="raise"):
        try:
            m = sla.expm(t * s.dense())
        except FloatingPointError:
            m = None
    if m is None or not np.all(np.isfinite(m)):
        raise OverflowError(f"exp(t*{s.label}) overflowed at t={t}; rescale the generator or shorten t")
    return SuperOperator(s.dim, m, f"exp({t}*{s.label})", check=False)


def propagate(s: SuperOperator, times: Sequence[float], u) -> list:
    """exp(t S) u for each t in an increasing grid starting at t >= 0.

    ``u`` is a matrix or a list of matrices; the result is one list of
    HermitianMatrix per time. Steps between grid points are applied
    successively with scipy's ``expm_multiply``.
    """
    single = not isinstance(u, (list, tuple))
    us = [u] if single else list(u)
    block = np.column_stack([vec(as_array(x)) for x in us])
    out = []
    prev = 0.0
    a = s.matrix if s.is_sparse else sp.csr_matrix(s.matrix)
    for t in times:
        dt = float(t) - prev
        if dt < 0:
            raise ValueError("time grid must be nondecreasing and start at t >= 0")
        if dt > 0:
            block = spla.expm_multiply(dt * a, block)
            if not np.all(np.isfinite(block)):
                raise OverflowError(f"propagation by {s.label} overflowed at t={t}")
        prev = float(t)
        states = [HermitianMatrix(unvec(block[:, k], s.dim)) for k in range(block.shape[1])]
        out.append(states[0] if single else states)
    return out


class _Factorized:
    """LU factorisation of (shift I + S) reused across solves."""

    def __init__(self, s: SuperOperator, shift: float):
        n = s.dim * s.dim
        self.dim = s.dim
        if s.is_sparse:
            self.a = (shift * sp.identity(n, dtype=complex, format="csc") + s.matrix).tocsc()
            try:
                lu = spla.splu(self.a)
            except RuntimeError as exc:
                raise ConditioningError(f"shift {shift}: ({shift} I + {s.label}) is singular: {exc}") from None
            self._solve = lu.solve
        else:
            self.a = shift * np.eye(n) + s.matrix
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu = sla.lu_factor(self.a, check_finite=True)
            if np.any(np.diag(lu[0]) == 0):
                raise ConditioningError(f"({shift} I + {s.label}) is singular")
            self._solve = lambda b: sla.lu_solve(lu, b)
        self.label = s.label
        self.shift = shift

    def condition_estimate(self) -> float:
        """1-norm condition number; exact when small, a lower bound otherwise."""
        a = self.a
        n = a.shape[0]
        if n <= 4096:
            return float(np.linalg.cond(a.toarray() if sp.issparse(a) else a, 1))
        rng = np.random.default_rng(0)
        b = rng.normal(size=n) + 0j
        x = self._solve(b)
        norm_a = spla.norm(a, 1) if sp.issparse(a) else np.linalg.norm(a, 1)
        return float(norm_a * np.linalg.norm(x, 1) / np.linalg.norm(b, 1))

    def solve_vec(self, b, rtol: float = 1e-10) -> np.ndarray:
        x = self._solve(b)
        res = np.linalg.norm(self.a @ x - b)
        if not np.all(np.isfinite(x)) or res > rtol * max(np.linalg.norm(b), np.finfo(float).tiny):
            raise ConditioningError(
                f"solve with ({self.shift} I + {self.label}) has residual {res:.3e}; "
                f"condition estimate {self.condition_estimate():.3e}"
            )
        return x

    def solve(self, u, rtol: float = 1e-10) -> HermitianMatrix:
        return HermitianMatrix(unvec(self.solve_vec(vec(as_array(u)), rtol), self.dim))


def factorize(s: SuperOperator, shift: float) -> _Factorized:
    return _Factorized(s, shift)


def resolvent_apply(s: SuperOperator, lam: float, u) -> HermitianMatrix:
    """Solve (lam I + S) x = u."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    return factorize(s, lam).solve(u)


def euler_power(s_generator: SuperOperator, t: float, n: int, u) -> HermitianMatrix:
    """(I + (t/n) S)^{-n} u, the backward-Euler approximation of exp(-t S) u."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t == 0:
        return HermitianMatrix(as_array(u))
    step = factorize((t / n) * s_generator, 1.0)
    x = vec(as_array(u))
    for _ in range(n):
        x = step.solve_vec(x)
    return HermitianMatrix(unvec(x, s_generator.dim))


def laplace_resolvent(s_generator: SuperOperator, lam: float, u, horizon: Optional[float] = None, order: int = 16) -> HermitianMatrix:
    """Quadrature of int_0^horizon exp(-lam t) exp(-t S) u dt.

    Composite Gauss-Legendre on panels short enough that each panel spans at
    most 2/||S||_1. The default horizon truncates the tail at 1e-12 relative,
    assuming exp(-t S) is a contraction.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    if horizon is None:
        horizon = (12 * np.log(10) + max(0.0, -np.log(lam))) / lam
    m = s_generator.matrix
    norm = spla.norm(m, 1) if s_generator.is_sparse else np.linalg.norm(m, 1)
    panels = max(1, int(np.ceil(horizon * max(norm, 1.0) / 2)))
    h = horizon / panels
    x, w = np.polynomial.legendre.leggauss(order)
    offsets = 0.5 * h * (x + 1)
    weights = 0.5 * h * w
    steps = [exponential(-s_generator, float(o)).matrix for o in offsets]
    panel_step = exponential(-s_generator, h).matrix
    state = vec(as_array(u)).astype(complex)
    acc = np.zeros_like(state)
    for k in range(panels):
        a = k * h
        for step, o, wt in zip(steps, offsets, weights):
            acc += wt * np.exp(-lam * (a + o)) * (step @ state)
        state = panel_step @ state
    return HermitianMatrix(unvec(acc, s_generator.dim))
