"""Kronecker algebra for unit-modulus phase vectors.

Phase-ramp vectors (array steering responses) factor into Kronecker
products of prime-length ramps.  This module provides that factorization,
the plain Kronecker product, and the permutations needed to swap factors
inside a chain without rematerializing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

UNIT_MODULUS_TOL = 1e-12


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two vectors: out[i*len(b)+j] = a[i]*b[j]."""
    a = np.asarray(a)
    b = np.asarray(b)
    return (a[:, None] * b[None, :]).ravel()


def kron_all(vectors) -> np.ndarray:
    """Left fold of `kron` over a sequence of vectors."""
    out = np.asarray(vectors[0])
    for v in vectors[1:]:
        out = (out[:, None] * np.asarray(v)[None, :]).ravel()
    return out


def prime_factors(n: int) -> list[int]:
    """Prime factorization by trial division, ascending. prime_factors(1) == []."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    factors = []
    m = n
    f = 2
    while f * f <= m:
        while m % f == 0:
            factors.append(f)
            m //= f
        f += 1
    if m > 1:
        factors.append(m)
    return factors


def phase_ramp(phase: float, n: int) -> np.ndarray:
    """[1, e^{j*phase}, ..., e^{j*(n-1)*phase}]."""
    return np.exp(1j * phase * np.arange(n))


@dataclass(frozen=True)
class PhaseVector:
    """Complex vector with unit-modulus entries."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("PhaseVector requires a nonempty 1-D vector")
        if np.max(np.abs(np.abs(e) - 1.0)) > UNIT_MODULUS_TOL:
            raise ValueError("PhaseVector entries must have unit modulus")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __len__(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class KroneckerChain:
    """Ordered Kronecker factors whose product is a length-`total_len` vector."""

    factors: tuple[PhaseVector, ...]
    total_len: int

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        prod = math.prod(len(f) for f in self.factors)
        if prod != self.total_len:
            raise ValueError(
                f"factor lengths multiply to {prod}, expected total_len={self.total_len}"
            )

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.factors)


@dataclass(frozen=True)
class FactorPermutation:
    """Permutation stored as an index map; apply(v) == dense(P) @ v."""

    index_map: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.index_map, dtype=np.intp)
        n = self.n if self.n else m.size
        if m.size != n or np.any(np.sort(m) != np.arange(n)):
            raise ValueError("index_map must be a permutation of 0..n-1")
        m.setflags(write=False)
        object.__setattr__(self, "index_map", m)
        object.__setattr__(self, "n", n)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.index_map]

    def materialize(self) -> np.ndarray:
        """Dense 0/1 matrix P with (P @ v)[r] == v[index_map[r]].  Tests only."""
        P = np.zeros((self.n, self.n))
        P[np.arange(self.n), self.index_map] = 1.0
        return P

    def compose(self, inner: "FactorPermutation") -> "FactorPermutation":
        """Permutation equivalent to applying `inner` first, then self."""
        return FactorPermutation(self.index_map[inner.index_map], self.n)

    @classmethod
    def identity(cls, n: int) -> "FactorPermutation":
        return cls(np.arange(n), n)


def primitive_decompose_ramp(theta: float, n: int) -> KroneckerChain:
    """Factor the length-n phase ramp into prime-length ramps.

    Factor d (prime length n_d, primes ascending) is the ramp with phase
    step theta times the product of all factor lengths to its right, so
    the left-to-right Kronecker product reproduces the original ramp.
    """
    lengths = prime_factors(n) or [1]
    factors = []
    stride = n
    for n_d in lengths:
        stride //= n_d
        factors.append(PhaseVector(phase_ramp(theta * stride, n_d)))
    return KroneckerChain(tuple(factors), n)


def materialize(chain: KroneckerChain) -> np.ndarray:
    """Dense vector of the chain (left fold of kron over the factors)."""
    return kron_all([f.entries for f in chain.factors])


@lru_cache(maxsize=4096)
def _swap_index_map(lengths: tuple[int, ...], p: int, q: int) -> np.ndarray:
    dims = list(lengths)
    n = math.prod(dims)
    multi = list(np.unravel_index(np.arange(n), dims))
    multi[p], multi[q] = multi[q], multi[p]
    swapped_dims = list(dims)
    swapped_dims[p], swapped_dims[q] = swapped_dims[q], swapped_dims[p]
    imap = np.ravel_multi_index(multi, swapped_dims)
    imap.setflags(write=False)
    return imap


def swap_permutation(lengths, p: int, q: int) -> FactorPermutation:
    """Permutation P with  s_0 x..x s_p x..x s_q x..  ==  P @ (chain with p,q swapped).

    Holds for arbitrary vectors of the given lengths.
    """
    lengths = tuple(int(x) for x in lengths)
    if p == q:
        raise ValueError("swap_permutation requires p != q")
    if not (0 <= p < len(lengths) and 0 <= q < len(lengths)):
        raise ValueError(f"factor indices ({p},{q}) out of range for {len(lengths)} factors")
    return FactorPermutation(_swap_index_map(lengths, p, q), math.prod(lengths))
