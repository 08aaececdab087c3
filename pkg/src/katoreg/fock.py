"""Truncated one-mode Fock space.

All operators are compressions onto span{e_0, ..., e_{D-1}}. The creation
operator drops the transition e_{D-1} -> e_D, so ``b @ b*`` misses the value
D at the top level while ``b* @ b`` stays exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class TruncationConfig:
    """Truncation dimension, edge buffer and numerical tolerances."""

    dim: int
    buffer: int = 2
    psd_tol: float = 1e-9
    eq_tol: float = 1e-10

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        if int(self.buffer) != self.buffer or not 0 <= self.buffer <= self.dim - 2:
            raise ValueError(f"buffer must lie in [0, dim - 2], got {self.buffer!r}")
        for name in ("psd_tol", "eq_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def interior(self) -> int:
        """Number of levels counted as interior (indices below the buffer)."""
        return self.dim - self.buffer


@dataclass(frozen=True)
class FockOperator:
    dim: int
    entries: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError(f"{self.label or 'operator'} has non-finite entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.dim, self.entries @ other.entries, f"{self.label}*{other.label}")

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.dim, self.entries + other.entries, f"{self.label}+{other.label}")

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.dim, self.entries - other.entries, f"{self.label}-{other.label}")

    def __rmul__(self, scalar) -> "FockOperator":
        return FockOperator(self.dim, scalar * self.entries, f"{scalar}*{self.label}")

    @property
    def adjoint(self) -> "FockOperator":
        return FockOperator(self.dim, self.entries.conj().T, f"{self.label}^*")


def annihilation(cfg: TruncationConfig) -> FockOperator:
    """b e_n = sqrt(n) e_{n-1}."""
    return FockOperator(cfg.dim, np.diag(np.sqrt(np.arange(1, cfg.dim)), 1), "b")


def creation(cfg: TruncationConfig) -> FockOperator:
    """b* e_n = sqrt(n+1) e_{n+1}; the top level is mapped to zero."""
    return FockOperator(cfg.dim, annihilation(cfg).entries.conj().T, "b*")


def number_op(cfg: TruncationConfig) -> FockOperator:
    return FockOperator(cfg.dim, np.diag(np.arange(cfg.dim, dtype=float)), "n")


def identity(cfg: TruncationConfig) -> FockOperator:
    return FockOperator(cfg.dim, np.eye(cfg.dim), "I")


def hamiltonian(energy: float, cfg: TruncationConfig) -> FockOperator:
    """Oscillator Hamiltonian ``energy * n``."""
    if not energy > 0:
        raise ValueError(f"energy must be positive, got {energy!r}")
    return FockOperator(cfg.dim, energy * number_op(cfg).entries, "h")


def projector(N: int, cfg: TruncationConfig) -> FockOperator:
    """Spectral projector of the number operator onto levels 0..N."""
    if int(N) != N or not 0 <= N <= cfg.dim - 1:
        raise IndexError(f"projector index must lie in [0, {cfg.dim - 1}], got {N!r}")
    diag = np.zeros(cfg.dim)
    diag[: int(N) + 1] = 1.0
    return FockOperator(cfg.dim, np.diag(diag), f"P_{int(N)}")


def exp_tilt(s: float, cfg: TruncationConfig) -> FockOperator:
    """diag(exp(-s n))."""
    if not s >= 0:
        raise ValueError(f"tilt parameter must be >= 0, got {s!r}")
    return FockOperator(cfg.dim, np.diag(np.exp(-s * np.arange(cfg.dim))), f"exp(-{s} n)")


def commutation_defect(cfg: TruncationConfig) -> FockOperator:
    """b b* - b* b - I. Zero except for the entry -D at the top level."""
    b, bd = annihilation(cfg).entries, creation(cfg).entries
    return FockOperator(cfg.dim, b @ bd - bd @ b - np.eye(cfg.dim), "[b,b*]-I")
