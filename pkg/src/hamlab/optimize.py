"""Ground-state and product-state energy minimization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .qstate import (Bipartition, PureState, QubitLayout, embed_operator, permute_operator,
                     product_state)

TERM_TOL = 1e-9


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _dense(h) -> np.ndarray:
    return h.toarray() if sp.issparse(h) else np.asarray(h, dtype=complex)


@dataclass(frozen=True, eq=False)
class Term:
    support: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2 ** len(support),) * 2:
            raise ValueError(f"term matrix {mat.shape} does not fit support {support}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True, eq=False)
class SLHInstance:
    terms: tuple[Term, ...]
    n: int
    bipartition: Bipartition
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")
        if self.bipartition.num_qubits != self.n:
            raise ValueError("bipartition does not cover the instance's qubits")
        for i, term in enumerate(self.terms):
            if any(q < 0 or q >= self.n for q in term.support):
                raise ValueError(f"term {i} support {term.support} out of range")
            h = term.matrix
            if np.max(np.abs(h - h.conj().T), initial=0.0) > TERM_TOL:
                raise ValueError(f"term {i} is not Hermitian")
            evals = np.linalg.eigvalsh(h)
            if evals.min() < -TERM_TOL or evals.max() > 1 + TERM_TOL:
                raise ValueError(f"term {i} spectrum [{evals.min():.3g}, {evals.max():.3g}] not within [0, 1]")

    @property
    def m(self) -> int:
        return len(self.terms)

    def hamiltonian(self) -> np.ndarray:
        out = np.zeros((2 ** self.n,) * 2, dtype=complex)
        for term in self.terms:
            out += embed_operator(term.matrix, term.support, self.n)
        return out


@dataclass
class ProductMinResult:
    value: float
    left_state: PureState
    right_state: PureState
    iterations: int
    restarts_used: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def ground_energy(h) -> tuple[float, PureState]:
    mat = _dense(h)
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > 1e-10:
        raise ValueError("H is not Hermitian")
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return float(evals[0]), PureState.from_vector(evecs[:, 0])


def _split(h, cut: Bipartition) -> np.ndarray:
    """H as a (dA, dB, dA, dB) tensor with side A qubits first."""
    mat = _dense(h)
    if mat.shape[0] != 2 ** cut.num_qubits:
        raise ValueError(f"H of dimension {mat.shape[0]} does not match a {cut.num_qubits}-qubit cut")
    order = list(cut.side_a) + list(cut.side_b)
    da, db = 2 ** len(cut.side_a), 2 ** len(cut.side_b)
    return permute_operator(mat, order).reshape(da, db, da, db)


def _lowest(mat: np.ndarray) -> tuple[float, np.ndarray]:
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return float(evals[0]), evecs[:, 0]


def _haar(dim: int, rng) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def min_product_energy(h, cut: Bipartition, restarts: int = 50, tol: float = 1e-12, rng_seed=None,
                       max_iter: int = 2000) -> ProductMinResult:
    """Alternating minimization over |chi_A> x |chi_B>.

    With one side fixed the best other side is the lowest eigenvector of the
    effective Hamiltonian, so every half-step is exact and the energy never
    increases. The best of ``restarts`` Haar-random starts is returned.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h4 = _split(h, cut)
    da, db = h4.shape[0], h4.shape[1]
    rng = _rng(rng_seed)
    best = None
    for _ in range(restarts):
        right = _haar(db, rng)
        energy = np.inf
        history = []
        converged = False
        for it in range(1, max_iter + 1):
            h_a = np.einsum("b,abcd,d->ac", right.conj(), h4, right)
            _, left = _lowest(h_a)
            h_b = np.einsum("a,abcd,c->bd", left.conj(), h4, left)
            new, right = _lowest(h_b)
            history.append(new)
            if energy - new < tol:
                converged = True
                energy = min(energy, new)
                break
            energy = new
        if best is None or energy < best[0]:
            best = (energy, left, right, it, converged, history)
    energy, left, right, it, converged, history = best
    n = cut.num_qubits
    layout = QubitLayout.flat(n)
    return ProductMinResult(
        value=float(energy),
        left_state=PureState.from_vector(left, layout.restrict(cut.side_a)),
        right_state=PureState.from_vector(right, layout.restrict(cut.side_b)),
        iterations=it,
        restarts_used=restarts,
        converged=converged,
        history=history,
    )


def product_energy(h, left: PureState, right: PureState, cut: Bipartition) -> float:
    vec = product_state(left, right, cut)
    return float(np.vdot(vec, _dense(h) @ vec).real)


# ---------------------------------------------------------------------------
# grid oracle


def _angles_to_state(params: np.ndarray, k: int) -> np.ndarray:
    """Hyperspherical parametrization of a k-qubit state (k in {1, 2}), batched.

    k = 1: (theta, phi); k = 2: (t1, t2, t3, p1, p2, p3).
    """
    params = np.atleast_2d(params)
    if k == 1:
        th, ph = params[:, 0], params[:, 1]
        return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=1)
    t1, t2, t3, p1, p2, p3 = params.T
    c0 = np.cos(t1)
    c1 = np.sin(t1) * np.cos(t2)
    c2 = np.sin(t1) * np.sin(t2) * np.cos(t3)
    c3 = np.sin(t1) * np.sin(t2) * np.sin(t3)
    return np.stack([c0 + 0j, c1 * np.exp(1j * p1), c2 * np.exp(1j * p2), c3 * np.exp(1j * p3)], axis=1)


def _grid(k: int, resolution: int) -> tuple[np.ndarray, list[tuple[float, float]]]:
    if k == 1:
        bounds = [(0.0, np.pi), (0.0, 2 * np.pi)]
        axes = [np.linspace(0, np.pi, resolution + 1), np.linspace(0, 2 * np.pi, 2 * resolution, endpoint=False)]
    else:
        bounds = [(0.0, np.pi / 2)] * 3 + [(0.0, 2 * np.pi)] * 3
        axes = [np.linspace(0, np.pi / 2, resolution + 1)] * 3 + \
               [np.linspace(0, 2 * np.pi, 2 * resolution, endpoint=False)] * 3
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    return pts, bounds


def brute_force_product_min(h, cut: Bipartition, grid_resolution: int | None = None, refine: int = 8) -> float:
    """Grid search over one side, exact minimization over the other.

    Side A is swept over a hyperspherical angle grid (``grid_resolution``
    points per polar range); for each grid state the best side-B state is the
    lowest eigenvector of the reduced operator. The ``refine`` best grid points
    are then polished by a local derivative-free search on the same objective.
    """
    if len(cut.side_a) > 2 or len(cut.side_b) > 2:
        raise ValueError("grid oracle supports at most 2 qubits per side")
    h4 = _split(h, cut)
    k = len(cut.side_a)
    if grid_resolution is None:
        grid_resolution = 180 if k == 1 else 5  # 1 degree on the Bloch sphere
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    pts, bounds = _grid(k, grid_resolution)

    def objective(batch: np.ndarray) -> np.ndarray:
        states = _angles_to_state(batch, k)
        da, db = h4.shape[0], h4.shape[1]
        partial = (states.conj() @ h4.reshape(da, -1)).reshape(-1, db, da, db)
        reduced = np.matmul(partial.transpose(0, 1, 3, 2), states[:, None, :, None])[..., 0]
        reduced = 0.5 * (reduced + reduced.conj().transpose(0, 2, 1))
        return np.linalg.eigvalsh(reduced)[:, 0]

    values = np.concatenate([objective(chunk) for chunk in np.array_split(pts, max(1, len(pts) // 200_000))])
    best = float(values.min())
    for idx in _distinct_seeds(pts, values, k, refine):
        res = minimize(lambda x: float(objective(x[None, :])[0]), pts[idx], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def _distinct_seeds(pts: np.ndarray, values: np.ndarray, k: int, count: int, max_fidelity: float = 0.8) -> list[int]:
    """Indices of the lowest grid points whose states are pairwise far apart."""
    chosen, states = [], []
    for idx in np.argsort(values)[:50 * count]:
        s = _angles_to_state(pts[idx], k)[0]
        if all(abs(np.vdot(s, o)) ** 2 < max_fidelity for o in states):
            chosen.append(int(idx))
            states.append(s)
            if len(chosen) == count:
                break
    return chosen


def decide_slh(inst: SLHInstance, restarts: int = 50, rng_seed=None, tol: float = 1e-9,
               grid_resolution: int | None = None) -> str:
    """'yes', 'no' or 'indeterminate' for a separable local Hamiltonian instance."""
    h = inst.hamiltonian()
    result = min_product_energy(h, inst.bipartition, restarts=restarts, rng_seed=rng_seed)
    if result.value <= inst.a + tol:
        return "yes"
    lam, _ = ground_energy(h)
    if lam >= inst.b - tol:
        return "no"
    cut = inst.bipartition
    if len(cut.side_a) <= 2 and len(cut.side_b) <= 2:
        if brute_force_product_min(h, cut, grid_resolution) >= inst.b - tol:
            return "no"
    return "indeterminate"


def local_term(matrix, support: Sequence[int]) -> Term:
    return Term(tuple(support), np.asarray(matrix, dtype=complex))
