"""JSON documents for circuits, Hamiltonians and proofs.

Serialization is canonical: sorted keys, no insignificant whitespace, floats
written with 17 significant digits and complex numbers as ``[re, im]``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .circuit import CircuitError, Gate, VerificationCircuit
from .cldm import SLHProof
from .kitaev import KitaevHamiltonian
from .optimize import SLHInstance, Term
from .qstate import Bipartition

FILE_UNITARY_TOL = 1e-8


class ParseError(ValueError):
    """Malformed document (exit code 2)."""


class InvariantError(ValueError):
    """Well-formed document describing an invalid object (exit code 3)."""


# ---------------------------------------------------------------------------
# canonical text


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    if x == 0:
        return "0.0"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj: Any) -> str:
    """Canonical JSON text."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + dumps(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


def digest(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\0")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# matrices


def encode_matrix(mat) -> list:
    """Row-major flat list of [re, im] pairs."""
    mat = np.asarray(mat, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]


def encode_sparse(mat) -> dict:
    mat = sp.coo_matrix(mat)
    order = np.lexsort((mat.col, mat.row))
    entries = [[int(mat.row[k]), int(mat.col[k]), float(mat.data[k].real), float(mat.data[k].imag)]
               for k in order if mat.data[k] != 0]
    return {"dim": int(mat.shape[0]), "entries": entries}


def _pair(x, where: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ParseError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def decode_matrix(data, where: str = "matrix", dim: int | None = None) -> np.ndarray:
    """Accepts a flat pair list, a list of rows, or ``{"dim", "entries"}``."""
    if isinstance(data, dict):
        if "dim" not in data or "entries" not in data:
            raise ParseError(f"{where}: sparse matrix needs 'dim' and 'entries'")
        d = data["dim"]
        if not isinstance(d, int) or d < 1:
            raise ParseError(f"{where}: bad dimension {d!r}")
        out = np.zeros((d, d), dtype=complex)
        for e in data["entries"]:
            if not (isinstance(e, list) and len(e) == 4):
                raise ParseError(f"{where}: sparse entry must be [i, j, re, im], got {e!r}")
            i, j = e[0], e[1]
            if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < d and 0 <= j < d):
                raise ParseError(f"{where}: entry index ({i!r}, {j!r}) out of range")
            out[i, j] = _pair(e[2:], where)
        mat = out
    elif isinstance(data, list):
        if data and isinstance(data[0], list) and data[0] and isinstance(data[0][0], list):
            flat = [z for row in data for z in row]
        else:
            flat = data
        vals = [_pair(z, where) for z in flat]
        d = math.isqrt(len(vals))
        if d * d != len(vals) or d == 0:
            raise ParseError(f"{where}: {len(vals)} entries do not form a square matrix")
        mat = np.array(vals, dtype=complex).reshape(d, d)
    else:
        raise ParseError(f"{where}: expected a matrix, got {type(data).__name__}")
    if dim is not None and mat.shape[0] != dim:
        raise ParseError(f"{where}: expected dimension {dim}, got {mat.shape[0]}")
    return mat


def _int_list(x, where: str) -> list[int]:
    if not isinstance(x, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in x):
        raise ParseError(f"{where}: expected a list of integers, got {x!r}")
    return list(x)


def _get(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in doc:
        raise ParseError(f"{where}: missing field '{key}'")
    return doc[key]


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {x!r}")
    return float(x)


# ---------------------------------------------------------------------------
# circuits


def circuit_to_json(circuit: VerificationCircuit) -> dict:
    gates = []
    for g in circuit.gates:
        if g.kind == "unitary":
            gates.append({"kind": "unitary", "targets": list(g.targets), "matrix": encode_matrix(g.matrix)})
        else:
            gates.append({"kind": "cswap", "control": g.control, "r1": list(g.swap_pair[0]),
                          "r2": list(g.swap_pair[1])})
    doc = {"qubits": {"ancilla": circuit.num_ancilla, "proof1": circuit.proof1, "proof2": circuit.proof2},
           "accept_qubit": circuit.accept_qubit, "gates": gates}
    if circuit.registers is not None:
        doc["registers"] = list(circuit.registers)
    if circuit.product_test_steps:
        doc["product_test_steps"] = circuit.product_test_steps
    return doc


def _nearest_unitary(mat: np.ndarray, where: str) -> np.ndarray:
    dev = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
    if dev > FILE_UNITARY_TOL:
        raise InvariantError(f"{where}: matrix is not unitary (deviation {dev:.3g})")
    if dev > 1e-12:
        u, _, vh = np.linalg.svd(mat)
        mat = u @ vh
    return mat


def circuit_from_json(doc) -> VerificationCircuit:
    qubits = _get(doc, "qubits", "circuit")
    sizes = []
    for key in ("ancilla", "proof1", "proof2"):
        v = _get(qubits, key, "qubits")
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ParseError(f"qubits.{key}: expected a non-negative integer, got {v!r}")
        sizes.append(v)
    accept = _get(doc, "accept_qubit", "circuit")
    if isinstance(accept, bool) or not isinstance(accept, int):
        raise ParseError(f"accept_qubit: expected an integer, got {accept!r}")
    raw_gates = _get(doc, "gates", "circuit")
    if not isinstance(raw_gates, list):
        raise ParseError("gates: expected a list")
    registers = doc.get("registers")
    if registers is not None:
        registers = tuple(_int_list(registers, "registers"))
    steps = doc.get("product_test_steps", 0)
    gates = []
    try:
        for i, g in enumerate(raw_gates):
            where = f"gates[{i}]"
            kind = _get(g, "kind", where)
            if kind == "unitary":
                targets = _int_list(_get(g, "targets", where), where + ".targets")
                mat = decode_matrix(_get(g, "matrix", where), where + ".matrix", 2 ** len(targets))
                gates.append(Gate("unitary", tuple(targets), matrix=_nearest_unitary(mat, where)))
            elif kind == "cswap":
                control = _get(g, "control", where)
                if isinstance(control, bool) or not isinstance(control, int):
                    raise ParseError(f"{where}.control: expected an integer")
                r1 = _int_list(_get(g, "r1", where), where + ".r1")
                r2 = _int_list(_get(g, "r2", where), where + ".r2")
                gates.append(Gate("cswap", (control, *r1, *r2), control=control, swap_pair=(tuple(r1), tuple(r2))))
            else:
                raise ParseError(f"{where}: unknown gate kind {kind!r}")
        return VerificationCircuit(tuple(gates), sizes[0], sizes[1], sizes[2], accept_qubit=accept,
                                   registers=registers, product_test_steps=int(steps))
    except CircuitError as exc:
        raise InvariantError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass
class HamiltonianDoc:
    """A Hamiltonian file: terms with supports plus free-form metadata per term."""

    n: int
    side_a: list[int]
    side_b: list[int]
    a: float
    b: float
    terms: list[dict]  # {"support": [...], "matrix": ndarray, "sparse": bool, **meta}
    extra: dict = field(default_factory=dict)

    def instance(self) -> SLHInstance:
        try:
            cut = Bipartition(tuple(self.side_a), tuple(self.side_b), self.n)
            terms = tuple(Term(tuple(t["support"]), t["matrix"]) for t in self.terms)
            return SLHInstance(terms, self.n, cut, self.a, self.b)
        except ValueError as exc:
            raise InvariantError(str(exc)) from exc

    def to_json(self) -> dict:
        terms = []
        for t in self.terms:
            rec = {k: v for k, v in t.items() if k not in ("matrix", "sparse")}
            rec["support"] = list(t["support"])
            rec["matrix"] = encode_sparse(t["matrix"]) if t.get("sparse") else encode_matrix(t["matrix"])
            terms.append(rec)
        doc = {"qubits": self.n, "partition": {"A": list(self.side_a), "B": list(self.side_b)},
               "a": self.a, "b": self.b, "terms": terms}
        doc.update(self.extra)
        return doc

    @classmethod
    def from_json(cls, doc) -> "HamiltonianDoc":
        n = _get(doc, "qubits", "hamiltonian")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ParseError(f"qubits: expected a positive integer, got {n!r}")
        part = _get(doc, "partition", "hamiltonian")
        side_a = _int_list(_get(part, "A", "partition"), "partition.A")
        side_b = _int_list(_get(part, "B", "partition"), "partition.B")
        a = _number(_get(doc, "a", "hamiltonian"), "a")
        b = _number(_get(doc, "b", "hamiltonian"), "b")
        raw = _get(doc, "terms", "hamiltonian")
        if not isinstance(raw, list):
            raise ParseError("terms: expected a list")
        terms = []
        for i, t in enumerate(raw):
            where = f"terms[{i}]"
            support = _int_list(_get(t, "support", where), where + ".support")
            data = _get(t, "matrix", where)
            mat = decode_matrix(data, where + ".matrix", 2 ** len(support))
            rec = {k: v for k, v in t.items() if k not in ("support", "matrix")}
            rec.update(support=support, matrix=mat, sparse=isinstance(data, dict))
            terms.append(rec)
        extra = {k: v for k, v in doc.items() if k not in ("qubits", "partition", "a", "b", "terms")}
        return cls(n, side_a, side_b, a, b, terms, extra)


def local_restriction(op, support: list[int], n: int) -> np.ndarray:
    """L with op = L (on ``support``) x identity, read off at the rest-zero block."""
    support = sorted(support)
    k = len(support)
    local = np.arange(2 ** k)
    bits = (local[:, None] >> (k - 1 - np.arange(k))) & 1
    idx = bits @ (1 << (n - 1 - np.asarray(support)))
    mat = sp.csr_matrix(op)
    return mat[idx][:, idx].toarray()


def compiled_doc(ham: KitaevHamiltonian, a: float = 0.0, b: float | None = None) -> HamiltonianDoc:
    """Term list of a compiled circuit, each term restricted to its support.

    Supports always include the clock register. Groups: 'in' (one per
    ancilla), 'clock' (invalid encodings), 'prop' (one per step), 'out'.
    """
    from .sparse_sim import row_counts

    c = ham.circuit
    nc = ham.clock.num_qubits
    n = ham.num_qubits
    clock = list(range(nc))
    b = 1.0 / (8 * (ham.T + 1)) if b is None else b
    terms = []

    def add(op, support, group, **meta):
        support = sorted(set(support))
        local = local_restriction(op, support, n)
        counts = row_counts(local)
        terms.append(dict(group=group, support=support, matrix=local, sparse=True,
                          sparsity=int(counts.max()) if counts.size else 0, **meta))

    for j, term in enumerate(ham.input_terms):
        add(term, clock + [nc + j], "in", ancilla=j)
    if ham.clock_penalty is not None:
        add(ham.clock_penalty, clock, "clock")
    for t, (term, gate) in enumerate(zip(ham.terms, c.gates), start=1):
        add(term, clock + [nc + q for q in gate.targets], "prop", step=t, gate=gate.kind)
    add(ham.h_out, clock + [nc + c.accept_qubit], "out")
    cut = ham.workspace_cut()
    extra = {"clock": {"qubits": nc, "T": ham.T},
             "layout": [[label, size] for label, size in ham.layout.subsystems]}
    return HamiltonianDoc(n, list(cut.side_a), list(cut.side_b), float(a), float(b), terms, extra)


# ---------------------------------------------------------------------------
# proofs


def proof_to_json(proof: SLHProof) -> list:
    return [{"rho_a": encode_matrix(ra), "rho_b": encode_matrix(rb)} for ra, rb in proof.parts]


def proof_from_json(doc) -> SLHProof:
    if not isinstance(doc, list):
        raise ParseError("proof: expected a list of {rho_a, rho_b} objects")
    parts = []
    for i, p in enumerate(doc):
        ra = decode_matrix(_get(p, "rho_a", f"proof[{i}]"), f"proof[{i}].rho_a")
        rb = decode_matrix(_get(p, "rho_b", f"proof[{i}]"), f"proof[{i}].rho_b")
        parts.append((ra, rb))
    try:
        return SLHProof(tuple(parts))
    except ValueError as exc:
        raise InvariantError(str(exc)) from exc
