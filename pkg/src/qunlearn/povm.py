"""Kraus/POVM data model: validation, Born probabilities, sampling.

A measurement is a set of Kraus operators ``{K_j}`` whose Gram forms
``M_j = K_j^dag K_j`` sum to the identity. Outcome ``j`` occurs on state
``rho`` with probability ``tr[M_j rho]`` and leaves the (renormalized)
state ``K_j rho K_j^dag / tr[M_j rho]``. A branch whose operator is
proportional to a unitary, ``K = q U``, has state-independent probability
``q**2`` and induces purely unitary evolution; such branches are the
"ideal" ones the recovery machinery tries to restore.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .errors import (
    CompletenessError,
    NotContractionError,
    ShapeError,
    ZeroProbabilityBranchError,
)

__all__ = [
    "DensityOperator",
    "KrausOperator",
    "Povm",
    "PovmValidationReport",
    "UnitaryWitness",
    "complement_kraus",
    "outcome_probability",
    "post_measurement_state",
    "sample_outcome",
    "unitary_witness",
    "validate_povm",
]

COMPLETENESS_TOL = 1e-9
CONTRACTION_SLACK = 1e-9
ZERO_PROBABILITY_THRESHOLD = 1e-12


def _freeze(m: np.ndarray) -> np.ndarray:
    m = m.copy()
    m.flags.writeable = False
    return m


@dataclass(frozen=True)
class KrausOperator:
    """A single square measurement-branch operator with a text label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = linalg.require_square(self.matrix)
        top = np.linalg.svd(m, compute_uv=False)[0] if m.shape[0] else 0.0
        if top > 1.0 + CONTRACTION_SLACK:
            raise NotContractionError(
                f"Kraus operator {self.label!r} has singular value {top:.12g} > 1"
            )
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def povm_element(self) -> np.ndarray:
        """Gram form M = K^dag K."""
        return self.matrix.conj().T @ self.matrix


@dataclass(frozen=True)
class Povm:
    """Ordered set of same-dimension Kraus operators (one per outcome).

    Completeness is *not* enforced at construction so that incomplete sets
    can be represented and reported on; use :func:`validate_povm`.
    """

    kraus_ops: tuple[KrausOperator, ...]

    def __init__(self, kraus_ops: Sequence[KrausOperator]):
        ops = tuple(kraus_ops)
        if not ops:
            raise ShapeError("a POVM needs at least one outcome")
        dims = {k.dim for k in ops}
        if len(dims) != 1:
            raise ShapeError(f"mixed operator dimensions in POVM: {sorted(dims)}")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].dim

    def __len__(self) -> int:
        return len(self.kraus_ops)

    def __getitem__(self, j: int) -> KrausOperator:
        return self.kraus_ops[j]

    def completeness_residual(self) -> float:
        """Frobenius norm of sum_j K_j^dag K_j - I."""
        total = sum(k.povm_element() for k in self.kraus_ops)
        return float(np.linalg.norm(total - np.eye(self.dim)))


@dataclass(frozen=True)
class DensityOperator:
    """System state rho: Hermitian, PSD, unit trace (checked at construction)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.require_square(self.matrix)
        if linalg.hermitian_deviation(m) > 1e-9:
            raise ValueError("density operator is not Hermitian within 1e-9")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"density operator trace {tr!r} is not 1 within 1e-9")
        w = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if w.min() < -1e-9:
            raise ValueError(f"density operator has negative eigenvalue {w.min():.3g}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, amplitudes) -> "DensityOperator":
        v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        n = np.linalg.norm(v)
        if n < 1e-12:
            raise ValueError("cannot normalize a (near-)zero vector")
        v = v / n
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True)
class UnitaryWitness:
    """Certificate that K = scale * unitary (within tolerance)."""

    scale: float
    unitary: np.ndarray


@dataclass(frozen=True)
class PovmValidationReport:
    completeness_residual: float
    element_psd: tuple[bool, ...]
    tolerance: float
    passed: bool
    messages: tuple[str, ...] = field(default_factory=tuple)


def validate_povm(p: Povm, tol: float = COMPLETENESS_TOL) -> PovmValidationReport:
    """Check completeness and per-element positivity of a Kraus set."""
    residual = p.completeness_residual()
    psd_flags = tuple(linalg.is_psd(k.povm_element(), tol) for k in p.kraus_ops)
    messages = []
    if residual > tol:
        messages.append(f"completeness residual {residual:.6g} exceeds tol {tol:.3g}")
    for j, ok in enumerate(psd_flags):
        if not ok:
            messages.append(f"element {j} ({p[j].label!r}) is not PSD within tol")
    passed = residual <= tol and all(psd_flags)
    return PovmValidationReport(residual, psd_flags, tol, passed, tuple(messages))


def outcome_probability(p: Povm, j: int, rho: DensityOperator) -> float:
    """Born probability tr[K_j^dag K_j rho], clamped to [0, 1]."""
    if not 0 <= j < len(p):
        raise IndexError(f"outcome index {j} out of range for {len(p)}-outcome POVM")
    if p.dim != rho.dim:
        raise ShapeError(f"POVM dim {p.dim} != state dim {rho.dim}")
    prob = float(np.trace(p[j].povm_element() @ rho.matrix).real)
    return min(1.0, max(0.0, prob))


def post_measurement_state(k: KrausOperator, rho: DensityOperator) -> DensityOperator:
    """Renormalized conditional state K rho K^dag / tr[K^dag K rho]."""
    if k.dim != rho.dim:
        raise ShapeError(f"operator dim {k.dim} != state dim {rho.dim}")
    prob = float(np.trace(k.povm_element() @ rho.matrix).real)
    if prob <= ZERO_PROBABILITY_THRESHOLD:
        raise ZeroProbabilityBranchError(
            f"branch {k.label!r} has probability {prob:.3g} below threshold"
        )
    out = k.matrix @ rho.matrix @ k.matrix.conj().T / prob
    # enforce exact Hermiticity against roundoff before revalidation
    return DensityOperator((out + out.conj().T) / 2)


def unitary_witness(k: KrausOperator, tol: float = 1e-9) -> Optional[UnitaryWitness]:
    """Return (q, U) with K = q U if all singular values agree within tol.

    Returns None when the spread of singular values exceeds ``tol`` (i.e.
    the branch genuinely gains information about the state).
    """
    res = linalg.svd(k.matrix)
    s = res.singular_values
    if s[0] - s[-1] > tol:
        return None
    u = res.left_unitary @ res.right_unitary_dagger
    return UnitaryWitness(scale=float(s[0]), unitary=_freeze(u))


def complement_kraus(k: KrausOperator, label: Optional[str] = None) -> KrausOperator:
    """Principal square root sqrt(I - K^dag K), completing {K, .} to a POVM.

    The polar freedom (any W sqrt(I - K^dag K) also completes the set) is
    deliberately fixed to the Hermitian PSD root; it does not affect any
    outcome probability.
    """
    m = k.povm_element()
    gap = np.eye(k.dim) - m
    w = np.linalg.eigvalsh((gap + gap.conj().T) / 2)
    if w.min() < -1e-10:
        raise NotContractionError(
            f"operator {k.label!r} has K^dag K eigenvalue {1 - w.min():.12g} > 1"
        )
    root = linalg.hermitian_sqrt((gap + gap.conj().T) / 2, tol=1e-9)
    return KrausOperator(root, label if label is not None else f"{k.label}~")


def sample_outcome(
    p: Povm, rho: DensityOperator, rng: np.random.Generator
) -> tuple[int, DensityOperator]:
    """Draw one outcome by the Born rule; return (index, conditional state)."""
    probs = np.array([outcome_probability(p, j, rho) for j in range(len(p))])
    total = probs.sum()
    if not np.isclose(total, 1.0, atol=1e-6):
        raise CompletenessError(f"outcome probabilities sum to {total:.6g}, not 1")
    u = rng.random() * total
    cum = np.cumsum(probs)
    j = int(np.searchsorted(cum, u, side="right"))
    j = min(j, len(p) - 1)
    return j, post_measurement_state(p[j], rho)


# ---------------------------------------------------------------------------
# JSON interchange (operator-set format, shared repo-wide)
#   {"dim": d, "kraus": [{"label": str, "matrix": [[[re, im], ...], ...]}, ...]}
# ---------------------------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array(
            [[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix entry: {exc}") from exc


def povm_to_json(p: Povm) -> dict:
    return {
        "dim": p.dim,
        "kraus": [
            {"label": k.label, "matrix": matrix_to_json(k.matrix)} for k in p.kraus_ops
        ],
    }


def povm_from_json(obj: dict) -> Povm:
    if not isinstance(obj, dict) or "kraus" not in obj:
        raise ValueError("operator-set JSON must be an object with a 'kraus' array")
    ops = []
    for i, rec in enumerate(obj["kraus"]):
        label = rec.get("label", f"K{i}")
        ops.append(KrausOperator(matrix_from_json(rec["matrix"]), label))
    p = Povm(ops)
    dim = obj.get("dim")
    if dim is not None and dim != p.dim:
        raise ShapeError(f"declared dim {dim} != matrix dim {p.dim}")
    return p


def load_operator_set(path) -> Povm:
    with open(path, encoding="utf-8") as fh:
        return povm_from_json(json.load(fh))


def save_operator_set(p: Povm, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(povm_to_json(p), fh, indent=2, sort_keys=True)
        fh.write("\n")
