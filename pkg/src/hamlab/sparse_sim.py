"""Row-sparse operators, Hamiltonian evolution, phase estimation and the
energy-measuring verifiers built from them.

Evolution and phase estimation are exact at desk scale: the unitary is formed
by dense spectral exponentiation and the phase-estimation register
distribution is computed in closed form, then sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .qstate import PureState

HERMITIAN_TOL = 1e-10
SPECTRUM_TOL = 1e-9
DENSE_LIMIT = 2 ** 12


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class RowSparseOperator:
    """Operator given by a row oracle ``i -> [(j, A_ij), ...]`` over nonzero entries."""

    dimension: int
    row_oracle: Callable[[int], list[tuple[int, complex]]]
    declared_sparsity: int

    def row(self, i: int) -> list[tuple[int, complex]]:
        if not 0 <= i < self.dimension:
            raise IndexError(f"row {i} outside 0..{self.dimension - 1}")
        entries = self.row_oracle(i)
        if len(entries) > self.declared_sparsity:
            raise ValueError(f"row {i} has {len(entries)} entries, declared sparsity {self.declared_sparsity}")
        return entries

    def to_sparse(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i in range(self.dimension):
            for j, v in self.row(i):
                rows.append(i)
                cols.append(j)
                vals.append(v)
        return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(self.dimension,) * 2)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dimension, dtype=complex)
        for i in range(self.dimension):
            out[i] = sum(v * vec[j] for j, v in self.row(i))
        return out


def row_oracle_for_term(term) -> RowSparseOperator:
    """Row oracle over the exact nonzero entries of a Hermitian term."""
    mat = sp.csr_matrix(term, dtype=complex)
    mat.eliminate_zeros()
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"term must be square, got {mat.shape}")
    if mat.nnz and abs(mat - mat.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("term is not Hermitian")
    indptr, indices, data = mat.indptr, mat.indices, mat.data

    def oracle(i: int):
        lo, hi = indptr[i], indptr[i + 1]
        return [(int(j), complex(v)) for j, v in zip(indices[lo:hi], data[lo:hi])]

    sparsity = int(np.diff(indptr).max()) if mat.shape[0] else 0
    return RowSparseOperator(mat.shape[0], oracle, sparsity)


def row_counts(term) -> np.ndarray:
    """Nonzeros per row of a (sparse or dense) operator, exact zeros excluded."""
    mat = sp.csr_matrix(term)
    mat.eliminate_zeros()
    return np.diff(mat.indptr)


def _as_dense(h) -> np.ndarray:
    if isinstance(h, RowSparseOperator):
        return h.to_dense()
    if sp.issparse(h):
        return h.toarray()
    return np.asarray(h, dtype=complex)


def evolve(h, time: float, alpha: float) -> np.ndarray:
    """Unitary exp(-i H time), accurate to within ``alpha`` in operator norm.

    Exact spectral exponentiation is used up to dimension 2^12, which meets
    any positive accuracy.
    """
    if alpha <= 0:
        raise ValueError("accuracy alpha must be positive")
    mat = _as_dense(h)
    if mat.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dimension {mat.shape[0]} above the dense evolution limit {DENSE_LIMIT}")
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return (evecs * np.exp(-1j * time * evals)) @ evecs.conj().T


def evolve_state(h, time: float, alpha: float, state: PureState) -> PureState:
    return PureState.from_vector(evolve(h, time, alpha) @ state.amplitudes, state.layout)


@dataclass(frozen=True)
class PhaseEstimateConfig:
    epsilon: float
    delta: float
    t: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "t", ancilla_count(self.epsilon, self.delta))


def ancilla_count(epsilon: float, delta: float) -> int:
    """ceil(log2(1/delta)) + ceil(log2(2 + 1/(2 epsilon)))."""
    return math.ceil(math.log2(1.0 / delta)) + math.ceil(math.log2(2.0 + 1.0 / (2.0 * epsilon)))


def circular_distance(x, y):
    d = np.mod(np.asarray(x) - np.asarray(y), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def register_distribution(phase: float, t: int) -> np.ndarray:
    """Outcome distribution of a t-qubit phase-estimation register for eigenphase ``phase``."""
    size = 2 ** t
    offsets = phase - 2 * np.pi * np.arange(size) / size
    # |(1/M) sum_j exp(i j x)|^2 = sin^2(M x / 2) / (M^2 sin^2(x / 2))
    half = 0.5 * offsets
    num = np.sin(size * half) ** 2
    den = (size * np.sin(half)) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(np.abs(np.sin(half)) < 1e-12, 1.0, num / den)
    return probs / probs.sum()


@dataclass(frozen=True, eq=False)
class PhaseSpectrum:
    """Eigenphases in [0, 2pi) of a unitary and the weights of a state on them."""

    phases: np.ndarray
    weights: np.ndarray


def phase_spectrum(unitary: np.ndarray, state: PureState | np.ndarray) -> PhaseSpectrum:
    vec = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (vec.size, vec.size):
        raise ValueError(f"unitary shape {u.shape} does not match state dimension {vec.size}")
    # Schur form of a normal matrix is diagonal with an orthonormal basis
    from scipy.linalg import schur

    tri, z = schur(u, output="complex")
    phases = np.mod(np.angle(np.diag(tri)), 2 * np.pi)
    weights = np.abs(z.conj().T @ vec) ** 2
    return PhaseSpectrum(phases, weights / weights.sum())


def outcome_distribution(spectrum: PhaseSpectrum, t: int) -> np.ndarray:
    probs = np.zeros(2 ** t)
    for phase, w in zip(spectrum.phases, spectrum.weights):
        if w > 0:
            probs += w * register_distribution(phase, t)
    return probs / probs.sum()


def phase_estimate(unitary: np.ndarray, state: PureState | np.ndarray, cfg: PhaseEstimateConfig,
                   rng_seed=None, shots: int | None = None):
    """Sample the phase-estimation output 2 pi k / 2^t.

    Returns a float, or an array of ``shots`` samples when ``shots`` is given.
    """
    spectrum = phase_spectrum(unitary, state)
    probs = outcome_distribution(spectrum, cfg.t)
    rng = _rng(rng_seed)
    k = rng.choice(probs.size, size=shots, p=probs)
    return 2 * np.pi * k / probs.size


def _phase_to_reject_probability(phase):
    """Read an estimated phase of exp(iH_j) as a probability in [0, 1]."""
    centred = np.where(phase > np.pi, phase - 2 * np.pi, phase)
    return np.clip(centred, 0.0, 1.0)


def _check_unit_interval(h: np.ndarray):
    evals = np.linalg.eigvalsh(h)
    if evals.min() < -SPECTRUM_TOL or evals.max() > 1 + SPECTRUM_TOL:
        raise ValueError(f"H_j spectrum [{evals.min():.3g}, {evals.max():.3g}] is outside [0, 1]")


@dataclass(frozen=True, eq=False)
class QjVerifier:
    """Measures one term: phase-estimate exp(iH_j), reject with probability equal to the estimate."""

    h: np.ndarray
    a: float
    b: float
    cfg: PhaseEstimateConfig = field(init=False)
    unitary: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("need b > a")
        h = _as_dense(self.h)
        _check_unit_interval(h)
        object.__setattr__(self, "h", h)
        precision = (self.b - self.a) / 6
        object.__setattr__(self, "cfg", PhaseEstimateConfig(precision, precision))
        object.__setattr__(self, "unitary", evolve(h, -1.0, alpha=1e-12))  # exp(+i H_j)

    @property
    def bound(self) -> float:
        return (self.b - self.a) / 3

    def reject_probability(self, state) -> float:
        """Exact rejection probability over phase-estimation randomness."""
        probs = outcome_distribution(phase_spectrum(self.unitary, state), self.cfg.t)
        phases = 2 * np.pi * np.arange(probs.size) / probs.size
        return float(np.dot(probs, _phase_to_reject_probability(phases)))

    def sample(self, state, rng_seed=None, trials: int | None = None):
        """True (accept) / False (reject); an array when ``trials`` is given."""
        rng = _rng(rng_seed)
        phase = phase_estimate(self.unitary, state, self.cfg, rng, shots=trials)
        return rng.random(size=trials) >= _phase_to_reject_probability(phase)


def qj_verifier(h_j, state, a: float, b: float, rng_seed=None) -> bool:
    return bool(QjVerifier(h_j, a, b).sample(state, rng_seed))


@dataclass(frozen=True, eq=False)
class QVerifier:
    """Pick a term uniformly at random and run its term verifier."""

    terms: tuple
    a: float
    b: float
    parts: tuple = field(init=False)

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("need at least one term")
        object.__setattr__(self, "parts", tuple(QjVerifier(h, self.a, self.b) for h in self.terms))

    def accept_probability(self, state) -> float:
        return 1.0 - float(np.mean([q.reject_probability(state) for q in self.parts]))

    def sample(self, state, rng_seed=None, trials: int | None = None):
        rng = _rng(rng_seed)
        n = 1 if trials is None else trials
        picks = rng.integers(len(self.parts), size=n)
        out = np.empty(n, dtype=bool)
        for j, q in enumerate(self.parts):
            sel = picks == j
            if sel.any():
                out[sel] = q.sample(state, rng, trials=int(sel.sum()))
        return bool(out[0]) if trials is None else out


def q_verifier(terms: Sequence, state, a: float, b: float, rng_seed=None) -> bool:
    return bool(QVerifier(tuple(terms), a, b).sample(state, rng_seed))


def completeness_soundness(a: float, b: float, m: int) -> tuple[float, float]:
    """Acceptance bounds c = 1 - a/m - eps and s = 1 - b/m + eps with eps = (b - a)/3."""
    eps = (b - a) / 3
    return 1 - a / m - eps, 1 - b / m + eps
