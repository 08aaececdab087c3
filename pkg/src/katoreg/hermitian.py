"""Self-adjoint matrices as elements of the truncated trace class.

Cone membership and order comparisons go through ``eigh`` so that a failing
test can hand back the offending eigenvector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

DEFAULT_EQ_TOL = 1e-10
DEFAULT_PSD_TOL = 1e-9


class HermiticityError(ValueError):
    pass


class PreconditionError(ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Square matrix symmetrised as (M + M*)/2 on construction.

    The asymmetry ``||M - M*||_F / 2`` is recorded; it may not exceed
    ``eq_tol * max(1, ||M||_F)``.
    """

    entries: np.ndarray = field(repr=False)
    eq_tol: float = DEFAULT_EQ_TOL
    asymmetry: float = field(default=0.0, init=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        asym = 0.5 * np.linalg.norm(m - m.conj().T)
        if asym > self.eq_tol * max(1.0, np.linalg.norm(m)):
            raise HermiticityError(f"matrix is not Hermitian: asymmetry {asym:.3e}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "asymmetry", float(asym))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def min_eigenvalue(self) -> float:
        return float(self.eigvalsh()[0])

    def _wrap(self, m) -> "HermitianMatrix":
        return HermitianMatrix(m, self.eq_tol)

    def __add__(self, other):
        return self._wrap(self.entries + as_array(other))

    def __sub__(self, other):
        return self._wrap(self.entries - as_array(other))

    def __neg__(self):
        return self._wrap(-self.entries)

    def __mul__(self, scalar):
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise TypeError("only real scalars keep a matrix Hermitian")
        return self._wrap(float(np.real(scalar)) * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim}, trace={self.trace():.6g})"


def as_hermitian(u, eq_tol: float = DEFAULT_EQ_TOL) -> HermitianMatrix:
    if isinstance(u, HermitianMatrix):
        return u
    return HermitianMatrix(u, eq_tol)


def as_array(u) -> np.ndarray:
    if isinstance(u, HermitianMatrix):
        return u.entries
    return np.asarray(u, dtype=complex)


def ket_bra(v) -> HermitianMatrix:
    """Rank-one projector |v><v|."""
    v = np.asarray(v, dtype=complex).ravel()
    return HermitianMatrix(np.outer(v, v.conj()))


def basis_projector(n: int, dim: int) -> HermitianMatrix:
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return HermitianMatrix(m)


class Jordan(NamedTuple):
    positive: HermitianMatrix
    negative: HermitianMatrix


def jordan_decompose(u) -> Jordan:
    """Split ``u = v - w`` with v, w >= 0, vw = 0 and |u| = v + w."""
    u = as_hermitian(u)
    evals, evecs = np.linalg.eigh(u.entries)
    pos = (evecs * np.clip(evals, 0, None)) @ evecs.conj().T
    neg = (evecs * np.clip(-evals, 0, None)) @ evecs.conj().T
    return Jordan(HermitianMatrix(pos, u.eq_tol), HermitianMatrix(neg, u.eq_tol))


def abs_matrix(u) -> HermitianMatrix:
    u = as_hermitian(u)
    evals, evecs = np.linalg.eigh(u.entries)
    return HermitianMatrix((evecs * np.abs(evals)) @ evecs.conj().T, u.eq_tol)


def trace_norm(u) -> float:
    """Sum of absolute eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_hermitian(u).entries))))


class PSDResult(NamedTuple):
    ok: bool
    min_eigenvalue: float
    witness: Optional[np.ndarray]

    def __bool__(self):
        return self.ok


def is_psd(u, tol: float = DEFAULT_PSD_TOL) -> PSDResult:
    """Cone membership up to ``tol``; on failure the witness x has (ux, x) < -tol."""
    evals, evecs = np.linalg.eigh(as_hermitian(u).entries)
    if evals[0] >= -tol:
        return PSDResult(True, float(evals[0]), None)
    return PSDResult(False, float(evals[0]), evecs[:, 0])


def psd_order_le(u, v, tol: float = DEFAULT_PSD_TOL) -> PSDResult:
    """u <= v in the PSD order, i.e. v - u >= 0."""
    u, v = as_hermitian(u), as_hermitian(v)
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    return is_psd(v - u, tol)


class MonotoneLimit(NamedTuple):
    limit: HermitianMatrix
    increments: list
    traces: list


def monotone_net_limit(sequence: Sequence, trace_bound: float, tol: float = DEFAULT_PSD_TOL) -> MonotoneLimit:
    """Limit of a nondecreasing PSD sequence with bounded traces.

    For such a sequence each increment is PSD, so its trace norm equals its
    trace and the traces form a bounded monotone Cauchy sequence. The last
    element is returned together with the increment record.
    """
    seq = [as_hermitian(u) for u in sequence]
    if not seq:
        raise PreconditionError("empty sequence")
    traces = []
    for k, u in enumerate(seq):
        res = is_psd(u, tol)
        if not res:
            raise PreconditionError(f"element {k} is not PSD (min eigenvalue {res.min_eigenvalue:.3e})", k)
        tr = u.trace()
        if tr > trace_bound + tol:
            raise PreconditionError(f"element {k} has trace {tr:.6g} above bound {trace_bound:.6g}", k)
        traces.append(tr)
    increments = []
    for k in range(len(seq) - 1):
        res = psd_order_le(seq[k], seq[k + 1], tol)
        if not res:
            raise PreconditionError(
                f"order violated between elements {k} and {k + 1} (min eigenvalue {res.min_eigenvalue:.3e})", k + 1
            )
        increments.append(trace_norm(seq[k + 1] - seq[k]))
    return MonotoneLimit(seq[-1], increments, traces)
