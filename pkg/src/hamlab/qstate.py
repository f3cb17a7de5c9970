"""Qubit registers, pure states and density matrices.

Conventions used everywhere in the package:

* qubit 0 is the most significant bit of a basis index;
* a :class:`QubitLayout` is an ordered list of named subsystems, and the
  qubits of subsystem ``k`` occupy a contiguous index range following the
  subsystems before it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

# Canonical subsystem labels. Other labels are accepted (tests and ad-hoc
# states use them), but the Kitaev machinery only ever produces these.
CANONICAL_LABELS = ("C", "A", "P1", "P2", "free")

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class QubitLayout:
    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(size)) for label, size in self.subsystems)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels in {labels}")
        if any(size < 0 for _, size in subs):
            raise LayoutError("subsystem sizes must be non-negative")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def flat(cls, n: int, label: str = "free") -> "QubitLayout":
        return cls(((label, n),))

    @classmethod
    def of(cls, **sizes: int) -> "QubitLayout":
        return cls(tuple(sizes.items()))

    @property
    def total_qubits(self) -> int:
        return sum(size for _, size in self.subsystems)

    @property
    def dim(self) -> int:
        return 2 ** self.total_qubits

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    def size(self, label: str) -> int:
        for name, size in self.subsystems:
            if name == label:
                return size
        return 0

    def qubits(self, label: str) -> list[int]:
        """Global qubit indices of a subsystem (empty if absent)."""
        start = 0
        for name, size in self.subsystems:
            if name == label:
                return list(range(start, start + size))
            start += size
        return []

    def concat(self, other: "QubitLayout") -> "QubitLayout":
        """Append ``other``; a shared label at the seam is merged into one subsystem."""
        left, right = list(self.subsystems), list(other.subsystems)
        if left and right and left[-1][0] == right[0][0]:
            label = left[-1][0]
            left[-1] = (label, left[-1][1] + right.pop(0)[1])
        clash = {label for label, _ in left} & {label for label, _ in right}
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return QubitLayout(tuple(left + right))

    def restrict(self, keep: Iterable[int]) -> "QubitLayout":
        """Layout of the kept qubits, in ascending index order."""
        keep = set(keep)
        subs = []
        start = 0
        for name, size in self.subsystems:
            count = sum(1 for q in range(start, start + size) if q in keep)
            if count:
                subs.append((name, count))
            start += size
        return QubitLayout(tuple(subs))


def _check_dim(dim: int, layout: QubitLayout):
    if dim != layout.dim:
        raise LayoutError(f"dimension {dim} does not match layout with {layout.total_qubits} qubits")


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    layout: QubitLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        _check_dim(amps.size, self.layout)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi| = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, layout: QubitLayout | None = None, normalize: bool = True) -> "PureState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / norm
        if layout is None:
            layout = QubitLayout.flat(_num_qubits(vec.size))
        return cls(vec, layout)

    @classmethod
    def basis(cls, index: int, layout: QubitLayout | int) -> "PureState":
        if isinstance(layout, int):
            layout = QubitLayout.flat(layout)
        vec = np.zeros(layout.dim, dtype=complex)
        vec[index] = 1.0
        return cls(vec, layout)

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    layout: QubitLayout

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        _check_dim(mat.shape[0], self.layout)
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        if np.linalg.eigvalsh(mat).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, mat, layout: QubitLayout | None = None, symmetrize: bool = True) -> "DensityMatrix":
        """Build from a raw array, optionally removing rounding-level asymmetry."""
        mat = np.asarray(mat, dtype=complex)
        if symmetrize:
            mat = 0.5 * (mat + mat.conj().T)
        if layout is None:
            layout = QubitLayout.flat(_num_qubits(mat.shape[0]))
        return cls(mat, layout)

    @classmethod
    def maximally_mixed(cls, layout: QubitLayout | int) -> "DensityMatrix":
        if isinstance(layout, int):
            layout = QubitLayout.flat(layout)
        return cls(np.eye(layout.dim, dtype=complex) / layout.dim, layout)

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Bipartition:
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]
    num_qubits: int = field(default=-1)

    def __post_init__(self):
        a = tuple(sorted(int(q) for q in self.side_a))
        b = tuple(sorted(int(q) for q in self.side_b))
        if set(a) & set(b):
            raise ValueError("bipartition sides overlap")
        n = len(a) + len(b) if self.num_qubits < 0 else self.num_qubits
        if sorted(a + b) != list(range(n)):
            raise ValueError(f"bipartition {a}|{b} does not cover qubits 0..{n - 1}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)
        object.__setattr__(self, "num_qubits", n)

    @classmethod
    def split(cls, n: int, n_a: int) -> "Bipartition":
        """First ``n_a`` qubits versus the rest."""
        return cls(tuple(range(n_a)), tuple(range(n_a, n)))


def _num_qubits(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2 ** n != dim:
        raise LayoutError(f"dimension {dim} is not a power of two")
    return n


# ---------------------------------------------------------------------------
# qubit permutations and embeddings


def permute_vector(vec: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder qubits so that new qubit ``k`` is old qubit ``order[k]``."""
    n = len(order)
    return np.asarray(vec).reshape((2,) * n).transpose(order).reshape(-1)


def permute_operator(op: np.ndarray, order: Sequence[int]) -> np.ndarray:
    n = len(order)
    order = list(order)
    t = np.asarray(op).reshape((2,) * (2 * n))
    return t.transpose(order + [n + q for q in order]).reshape(2 ** n, 2 ** n)


def basis_permutation(order: Sequence[int]) -> np.ndarray:
    """Index map ``perm`` with ``permute_vector(v, order) == v[perm]``."""
    n = len(order)
    return permute_vector(np.arange(2 ** n), order)


def embed_operator(op, support: Sequence[int], n: int, sparse: bool = False):
    """Extend an operator on ``support`` (in the given order) by identity to n qubits."""
    support = [int(q) for q in support]
    if len(set(support)) != len(support) or any(q < 0 or q >= n for q in support):
        raise ValueError(f"invalid support {support} for {n} qubits")
    k = len(support)
    op = sp.csr_matrix(op) if sparse else np.asarray(op, dtype=complex)
    if op.shape != (2 ** k, 2 ** k):
        raise ValueError(f"operator shape {op.shape} does not match support of size {k}")
    rest = [q for q in range(n) if q not in support]
    order = support + rest  # position -> global qubit
    if sparse:
        full = sp.kron(op, sp.identity(2 ** (n - k), dtype=complex, format="csr"), format="csr")
        inv = np.argsort(order)
        perm = basis_permutation(list(inv))
        return full[perm][:, perm].tocsr()
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    return permute_operator(full, list(np.argsort(order)))


# ---------------------------------------------------------------------------
# operations


def tensor(x, y):
    """Tensor product of two states of the same kind; layouts are concatenated."""
    if isinstance(x, PureState) and isinstance(y, PureState):
        return PureState(np.kron(x.amplitudes, y.amplitudes), x.layout.concat(y.layout))
    if isinstance(x, DensityMatrix) and isinstance(y, DensityMatrix):
        return DensityMatrix.from_matrix(np.kron(x.matrix, y.matrix), x.layout.concat(y.layout))
    raise TypeError("tensor expects two PureState or two DensityMatrix values")


def partial_trace_matrix(mat: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced matrix on ``keep`` (ascending order) of a raw 2^n x 2^n array."""
    keep = sorted(set(int(q) for q in keep))
    drop = [q for q in range(n) if q not in keep]
    k = len(keep)
    t = np.asarray(mat).reshape((2,) * (2 * n)).transpose(keep + drop + [n + q for q in keep] + [n + q for q in drop])
    t = t.reshape(2 ** k, 2 ** (n - k), 2 ** k, 2 ** (n - k))
    return np.einsum("arbr->ab", t)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    keep = sorted(set(int(q) for q in keep))
    n = rho.num_qubits
    if not keep:
        raise ValueError("partial trace over every qubit leaves a scalar; keep at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep set {keep} out of range for {n} qubits")
    return DensityMatrix.from_matrix(partial_trace_matrix(rho.matrix, keep, n), rho.layout.restrict(keep))


def trace_norm(mat: np.ndarray) -> float:
    """Trace norm of a Hermitian matrix via its eigenvalues."""
    return float(np.abs(np.linalg.eigvalsh(mat)).sum())


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray) -> float:
    a = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return min(1.0, 0.5 * trace_norm(0.5 * (diff + diff.conj().T)))


def overlap(psi: PureState, phi: PureState) -> float:
    """Squared overlap |<psi|phi>|^2."""
    if psi.dim != phi.dim:
        raise ValueError(f"dimension mismatch: {psi.dim} vs {phi.dim}")
    return min(1.0, float(abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2))


def schmidt_matrix(amplitudes: np.ndarray, cut: Bipartition) -> np.ndarray:
    """Amplitudes reshaped to a (2^|A|, 2^|B|) matrix along the cut."""
    order = list(cut.side_a) + list(cut.side_b)
    vec = permute_vector(amplitudes, order)
    return vec.reshape(2 ** len(cut.side_a), 2 ** len(cut.side_b))


def max_product_overlap(psi: PureState, cut: Bipartition) -> tuple[float, PureState, PureState]:
    """Best product approximation of ``psi`` across ``cut``.

    Returns the squared largest Schmidt coefficient together with the left and
    right factors achieving it.
    """
    if cut.num_qubits != psi.num_qubits:
        raise ValueError(f"cut over {cut.num_qubits} qubits, state has {psi.num_qubits}")
    u, s, vh = np.linalg.svd(schmidt_matrix(psi.amplitudes, cut))
    left = PureState.from_vector(u[:, 0], psi.layout.restrict(cut.side_a))
    right = PureState.from_vector(vh[0], psi.layout.restrict(cut.side_b))
    return min(1.0, float(s[0] ** 2)), left, right


def product_state(left: PureState, right: PureState, cut: Bipartition) -> np.ndarray:
    """Amplitudes of left (on cut.side_a) times right (on cut.side_b) in global qubit order."""
    vec = np.kron(left.amplitudes, right.amplitudes)
    order = list(cut.side_a) + list(cut.side_b)
    return permute_vector(vec, list(np.argsort(order)))


# ---------------------------------------------------------------------------
# random objects


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_state(n: int, seed=None, layout: QubitLayout | None = None) -> PureState:
    """Haar-random pure state on n qubits."""
    rng = _rng(seed)
    vec = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return PureState.from_vector(vec, layout or QubitLayout.flat(n))


def random_density(n: int, seed=None, rank: int | None = None, layout: QubitLayout | None = None) -> DensityMatrix:
    """Random density matrix from a Ginibre matrix (full rank unless ``rank`` given)."""
    rng = _rng(seed)
    d = 2 ** n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return DensityMatrix.from_matrix(rho / np.trace(rho).real, layout or QubitLayout.flat(n))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    rng = _rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def random_effect(dim: int, seed=None) -> np.ndarray:
    """Random Hermitian operator with spectrum in [0, 1]."""
    rng = _rng(seed)
    u = random_unitary(dim, rng)
    return (u * rng.uniform(0, 1, size=dim)) @ u.conj().T
