"""Command-line front end.

    hamlab compile CIRCUIT [--out PATH] [--a A] [--b B]
    hamlab report KIND [--circuit F] [--hamiltonian F] [--proof F] [flags]
    hamlab selftest [--filter NAME]

Exit codes: 0 success, 1 failed check, 2 parse error, 3 invariant
violation, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .cldm import default_oracle, slh_verifier
from .io import (HamiltonianDoc, InvariantError, ParseError, circuit_from_json, compiled_doc, digest, dumps,
                 loads, proof_from_json)
from .kitaev import DimensionBudgetError, compile_circuit, history_vector
from .optimize import brute_force_product_min, ground_energy, min_product_energy
from .qstate import PureState, max_product_overlap
from .sparse_sim import PhaseEstimateConfig, QjVerifier, circular_distance, evolve, phase_estimate, phase_spectrum
from .spectral import kernel_gap, kitaev_pair, verify_clock_angle, verify_geometric_bound

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2, 3, 64
REPORT_KINDS = ("spectrum", "gap", "clock-angle", "history", "min-product", "slh-verify", "phase-estimate", "qj")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive finite number: {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="random seed (unsigned 64-bit)")
    common.add_argument("--tol", type=_positive_float, default=None, help="numerical tolerance override")
    common.add_argument("--restarts", type=_positive_int, default=50, help="restarts for product search")
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    common.add_argument("--filter", default=None, help="restrict selftest to matching criteria")

    parser = _Parser(prog="hamlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", parents=[common], help="compile a circuit file into a Hamiltonian file")
    p.add_argument("circuit", type=Path)
    p.add_argument("--a", type=float, default=0.0, help="lower threshold written to the file")
    p.add_argument("--b", type=float, default=None, help="upper threshold (default 1/(8(T+1)))")

    p = sub.add_parser("report", parents=[common], help="print a JSON report")
    p.add_argument("kind", choices=REPORT_KINDS)
    p.add_argument("--circuit", type=Path)
    p.add_argument("--hamiltonian", type=Path)
    p.add_argument("--proof", type=Path)
    p.add_argument("--term", type=int, default=0, help="term index for the qj report")
    p.add_argument("--shots", type=_positive_int, default=10_000)
    p.add_argument("--epsilon", type=_positive_float, default=0.1)
    p.add_argument("--delta", type=_positive_float, default=0.1)

    sub.add_parser("selftest", parents=[common], help="run the acceptance criteria")
    return parser


def _read(path: Path | None, what: str) -> tuple[object, str]:
    if path is None:
        raise UsageError(f"this report needs --{what}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    return loads(text), text


def _emit(doc, out: Path | None):
    text = dumps(doc)
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        out.write_text(text + "\n")


# ---------------------------------------------------------------------------
# reports


def _report_spectrum(args):
    if args.circuit is not None:
        doc, text = _read(args.circuit, "circuit")
        ham = compile_circuit(circuit_from_json(doc))
        h = ham.total.toarray()
        extra = {"T": ham.T, "kernel_gap": kernel_gap(ham)}
    else:
        doc, text = _read(args.hamiltonian, "hamiltonian")
        h = HamiltonianDoc.from_json(doc).instance().hamiltonian()
        extra = {}
    evals = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    out = {"dimension": int(h.shape[0]), "lowest": [float(x) for x in evals[:16]], "lambda_min": float(evals[0]),
           "hermitian": bool(np.allclose(h, h.conj().T, atol=1e-10)), **extra}
    return out, [text], {"hermitian": 1e-10}, out["hermitian"]


def _report_gap(args):
    doc, text = _read(args.circuit, "circuit")
    ham = compile_circuit(circuit_from_json(doc))
    zero_tol = args.tol or 1e-8
    a1, a2 = kitaev_pair(ham)
    rep = verify_geometric_bound(a1, a2, zero_tol)
    out = {"T": ham.T, "delta_sum": rep.delta_sum, "v": rep.v, "cos_theta": rep.cos_theta, "bound": rep.bound,
           "holds": rep.holds, "vacuous": rep.vacuous}
    return out, [text], {"zero_tol": zero_tol, "slack": 1e-9}, rep.holds


def _report_clock_angle(args):
    doc, text = _read(args.circuit, "circuit")
    rep = verify_clock_angle(circuit_from_json(doc))
    out = {"T": rep.T, "ancillas": rep.num_ancilla, "cos_sq_theta": rep.cos_sq_theta, "bound": rep.bound,
           "holds": rep.holds, "vacuous": rep.vacuous}
    return out, [text], {"zero_tol": 1e-8, "slack": 1e-9}, rep.holds


def _report_history(args):
    from .circuit import acceptance_probability

    doc, text = _read(args.circuit, "circuit")
    c = circuit_from_json(doc)
    ham = compile_circuit(c)
    rng = np.random.default_rng(args.seed)
    d = 2 ** (c.proof1 + c.proof2)
    w = rng.normal(size=d) + 1j * rng.normal(size=d)
    w /= np.linalg.norm(w)
    eta = history_vector(c, w)
    residual = float(np.linalg.norm((ham.h_in + ham.h_prop) @ eta))
    e = float(np.vdot(eta, ham.total @ eta).real)
    p = acceptance_probability(c, w)
    overlap = max_product_overlap(PureState.from_vector(eta, normalize=False), ham.workspace_cut())[0]
    tol = args.tol or 1e-9
    holds = residual <= tol and abs(e - (1 - p) / (c.T + 1)) <= tol
    out = {"T": c.T, "kernel_residual": residual, "energy": e, "accept_probability": p,
           "predicted_energy": (1 - p) / (c.T + 1), "product_overlap": overlap, "holds": holds}
    return out, [text], {"identity": tol}, holds


def _report_min_product(args):
    doc, text = _read(args.hamiltonian, "hamiltonian")
    inst = HamiltonianDoc.from_json(doc).instance()
    h = inst.hamiltonian()
    res = min_product_energy(h, inst.bipartition, restarts=args.restarts, rng_seed=args.seed)
    lam, _ = ground_energy(h)
    out = {"value": res.value, "global_min": lam, "restarts": res.restarts_used, "iterations": res.iterations,
           "converged": res.converged, "a": inst.a, "b": inst.b}
    cut = inst.bipartition
    if len(cut.side_a) <= 2 and len(cut.side_b) <= 2:
        out["grid_min"] = brute_force_product_min(h, cut)
    holds = res.value >= lam - 1e-9
    out["holds"] = holds
    return out, [text], {"alternating": 1e-12}, holds


def _report_slh_verify(args):
    doc, text = _read(args.hamiltonian, "hamiltonian")
    pdoc, ptext = _read(args.proof, "proof")
    inst = HamiltonianDoc.from_json(doc).instance()
    proof = proof_from_json(pdoc)
    try:
        proof.check_shape(inst)
    except ValueError as exc:
        raise InvariantError(str(exc))
    verdict = slh_verifier(inst, proof, default_oracle(rng_seed=args.seed, tol=args.tol))
    sides = {}
    for name, v in (("A", verdict.side_a), ("B", verdict.side_b)):
        sides[name] = None if v is None else {"outcome": v.outcome, "max_violation": v.max_violation,
                                              "lower_bound": v.lower_bound, "method": v.method}
    out = {"accept": verdict.accept, "E": verdict.energy, "threshold": verdict.threshold, "beta": verdict.beta,
           "sides": sides}
    tols = {"consistency": args.tol if args.tol else (verdict.beta / 2 if np.isfinite(verdict.beta) else None)}
    return out, [text, ptext], tols, True


def _hamiltonian_for_phase(args):
    doc, text = _read(args.hamiltonian, "hamiltonian")
    inst = HamiltonianDoc.from_json(doc).instance()
    return inst, text


def _report_phase_estimate(args):
    inst, text = _hamiltonian_for_phase(args)
    cfg = PhaseEstimateConfig(args.epsilon, args.delta)
    rng = np.random.default_rng(args.seed)
    u = evolve(inst.hamiltonian(), -1.0, alpha=1e-12)
    d = u.shape[0]
    state = rng.normal(size=d) + 1j * rng.normal(size=d)
    state /= np.linalg.norm(state)
    spectrum = phase_spectrum(u, state)
    samples = phase_estimate(u, state, cfg, rng, shots=args.shots)
    rows, ok = [], True
    for phase, weight in zip(spectrum.phases, spectrum.weights):
        target = weight * (1 - cfg.epsilon)
        sigma = float(np.sqrt(target * (1 - target) / args.shots))
        hit = float(np.mean(circular_distance(samples, phase) <= cfg.delta))
        ok = ok and hit >= target - 3 * sigma
        rows.append({"phase": float(phase), "weight": float(weight), "hit_rate": hit, "floor": target - 3 * sigma})
    out = {"t": cfg.t, "shots": args.shots, "components": rows, "holds": ok}
    return out, [text], {"epsilon": cfg.epsilon, "delta": cfg.delta, "sigmas": 3}, ok


def _report_qj(args):
    inst, text = _hamiltonian_for_phase(args)
    if not 0 <= args.term < inst.m:
        raise UsageError(f"--term {args.term} outside 0..{inst.m - 1}")
    from .qstate import embed_operator

    term = inst.terms[args.term]
    h = embed_operator(term.matrix, term.support, inst.n)
    q = QjVerifier(h, inst.a, inst.b)
    rng = np.random.default_rng(args.seed)
    d = h.shape[0]
    state = rng.normal(size=d) + 1j * rng.normal(size=d)
    state /= np.linalg.norm(state)
    accepts = q.sample(state, rng, trials=args.shots)
    reject = 1 - float(np.mean(accepts))
    value = float(np.vdot(state, h @ state).real)
    sigma = float(np.sqrt(max(reject * (1 - reject), 1e-12) / args.shots))
    holds = abs(reject - value) <= q.bound + 3 * sigma
    out = {"term": args.term, "energy": value, "reject_rate": reject, "exact_reject": q.reject_probability(state),
           "bound": q.bound, "sigma": sigma, "t": q.cfg.t, "holds": holds}
    return out, [text], {"epsilon": q.cfg.epsilon, "delta": q.cfg.delta, "sigmas": 3}, holds


REPORTS = {
    "spectrum": _report_spectrum, "gap": _report_gap, "clock-angle": _report_clock_angle,
    "history": _report_history, "min-product": _report_min_product, "slh-verify": _report_slh_verify,
    "phase-estimate": _report_phase_estimate, "qj": _report_qj,
}


# ---------------------------------------------------------------------------
# commands


def cmd_compile(args) -> int:
    doc, text = _read(args.circuit, "circuit")
    circuit = circuit_from_json(doc)
    ham = compile_circuit(circuit)
    _emit(compiled_doc(ham, a=args.a, b=args.b).to_json(), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    out, texts, tols, holds = REPORTS[args.kind](args)
    report = {"kind": args.kind, "seed": args.seed, "inputs_sha256": digest(*texts), "tolerances": tols,
              "result": out, "pass": bool(holds)}
    _emit(report, args.out)
    return EXIT_OK if holds else EXIT_CHECK


def cmd_selftest(args) -> int:
    try:
        acceptance.select(args.filter)
    except KeyError as exc:
        raise UsageError(str(exc.args[0]))
    lines = []

    def show(res):
        line = dumps({"criterion": res.number, "name": res.name, "pass": res.passed,
                      "seconds": round(res.seconds, 3), "details": _jsonable(res.details)})
        lines.append(line)
        if args.out is None:
            print(line, flush=True)

    results = acceptance.run(args.filter, seed=args.seed, on_result=show)
    if args.out is not None:
        args.out.write_text("\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


COMMANDS = {"compile": cmd_compile, "report": cmd_report, "selftest": cmd_selftest}


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except ParseError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    except (InvariantError, DimensionBudgetError) as exc:
        return _fail(EXIT_INVARIANT, "invariant", str(exc))
    except ValueError as exc:
        return _fail(EXIT_INVARIANT, "invariant", str(exc))


if __name__ == "__main__":
    sys.exit(main())
