"""Seeded randomness: counter-based generators and random operator factories.

All stochastic code in the package draws from a ``numpy.random.Generator``
backed by the counter-based Philox bit generator, seeded explicitly. Child
seeds (one per trajectory / trial) are derived from the master seed with a
splitmix64 step so that parallel or reordered execution cannot change the
stream any trajectory sees.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 output step (finalizer included)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for trajectory ``index``."""
    return splitmix64((master_seed & _MASK64) ^ splitmix64(index & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Complex matrix with i.i.d. standard complex normal entries."""
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random unitary via QR of a Ginibre matrix (phase-fixed)."""
    q, r = np.linalg.qr(ginibre(dim, rng))
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized random state vector (uniform on the sphere)."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random mixed state G G^dag / tr."""
    g = ginibre(dim, rng)
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_full_rank_kraus_matrix(
    dim: int,
    rng: np.random.Generator,
    min_singular_value: float = 0.05,
    max_singular_value: float = 1.0,
) -> np.ndarray:
    """Random contraction U diag(s) V^dag with s in the given range."""
    s = rng.uniform(min_singular_value, max_singular_value, size=dim)
    u = random_unitary(dim, rng)
    v = random_unitary(dim, rng)
    return (u * np.sort(s)[::-1]) @ v.conj().T


def random_contraction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Ginibre matrix rescaled so the largest singular value is below one."""
    g = ginibre(dim, rng)
    top = np.linalg.svd(g, compute_uv=False)[0]
    return g * (rng.uniform(0.1, 0.999) / top)
