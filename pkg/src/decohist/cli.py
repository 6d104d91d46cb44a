"""Command-line interface: model ingestion, dispatch, deterministic reports.

Commands: ``check``, ``probs``, ``abl``, ``records``, ``reverse``,
``recohere``, ``page``, ``scenario list``, ``scenario emit``.  Reports are
JSON on standard output (or ``--out``); apart from the ``timing_s`` field
they are deterministic for identical inputs and seeds.

Exit codes: 0 decoherent / check passed, 1 not decoherent / check failed,
2 marginal, 64 model-file parse errors, 65 model invariant violations,
70 unexpected errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import linalg, scenarios
from .exceptions import (
    ConditionNotSatisfiedError,
    DegenerateNormalizationError,
    MixedStateError,
    ModelFileError,
    ModelValidationError,
)
from .histories import (
    DecoherenceReport,
    TolerancePolicy,
    both_conditions_theorem_check,
    check_decoherence,
    page_symmetric_cosmology_check,
)
from .model import QuantumModel, evolve_state
from .modelfile import dump_model, load_model, model_to_dict
from .records import construct_records
from .scenarios import (
    recoherence_scenario,
    reverse_collapse_chain,
    spin_model,
    spin_post_selection,
    spin_recoherence_base,
)

EXIT_DECOHERENT = 0
EXIT_NOT_DECOHERENT = 1
EXIT_MARGINAL = 2
EXIT_USAGE = 64
EXIT_INVARIANT = 65
EXIT_SOFTWARE = 70

SCENARIO_NAMES = ("spin", "spin-post", "spin-symmetric", "recoherence", "random")


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_params(tokens: list[str]) -> dict:
    params = {}
    for tok in tokens:
        if "=" not in tok:
            raise _CliError(f"scenario parameter {tok!r} is not key=value", EXIT_USAGE)
        key, value = tok.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _param_complex(params: dict, *names, default=None):
    for name in names:
        if name in params:
            try:
                return complex(params[name])
            except ValueError:
                raise _CliError(f"cannot parse {name}={params[name]!r} as a number", EXIT_USAGE)
    return default


def _param_int(params: dict, name: str, default: int) -> int:
    if name not in params:
        return default
    try:
        return int(params[name])
    except ValueError:
        raise _CliError(f"cannot parse {name}={params[name]!r} as an integer", EXIT_USAGE)


def _build_scenario(name: str, params: dict, seed: int):
    """Resolve a scenario name into (model, extras) for the commands."""
    extras: dict = {}
    if name == "spin":
        alpha = _param_complex(params, "a", "alpha", default=0.6)
        beta = _param_complex(params, "b", "beta", default=None)
        model = spin_model(alpha, beta)
    elif name == "spin-post":
        model, psi_i, psi_f = spin_post_selection()
        extras["psi_initial"] = psi_i
        extras["psi_final"] = psi_f
    elif name in ("spin-symmetric", "recoherence"):
        default = 1.0 / np.sqrt(2.0) if name == "spin-symmetric" else 0.6
        alpha = _param_complex(params, "a", "alpha", default=default)
        if abs(alpha.imag) > 0:
            raise _CliError("mirror scenarios need real amplitudes", EXIT_USAGE)
        base = spin_recoherence_base(alpha.real)
        extras["recoherence_base"] = base
        analysis = recoherence_scenario(base)
        extras["analysis"] = analysis
        model = analysis.extended_model
    elif name == "random":
        model = scenarios.random_model(
            seed=_param_int(params, "seed", seed),
            dim=_param_int(params, "dim", 4),
            n_families=_param_int(params, "n", 2),
            pure=bool(_param_int(params, "pure", 1)),
        )
    else:
        raise _CliError(
            f"unknown scenario {name!r}; available: {', '.join(SCENARIO_NAMES)}", EXIT_USAGE
        )
    return model, extras


def _resolve_model(args, seed: int):
    if bool(args.model) == bool(args.scenario):
        raise _CliError("exactly one of --model or --scenario is required", EXIT_USAGE)
    if args.model:
        model, rho_final = load_model(args.model)
        return model, {"rho_final": rho_final} if rho_final is not None else {}
    name, *tokens = args.scenario
    return _build_scenario(name, _parse_params(tokens), seed)


def _tolerance(args) -> TolerancePolicy:
    return TolerancePolicy(rel=args.tol_rel, abs=args.tol_abs)


def _history_key(history) -> list[str]:
    return list(history)


def _sorted_table(table: dict) -> list[dict]:
    return [
        {"history": _history_key(h), "probability": float(p)}
        for h, p in sorted(table.items())
    ]


def _report_decoherence(rep: DecoherenceReport) -> dict:
    return {
        "direction": rep.direction,
        "strength": rep.strength,
        "classification": rep.classification,
        "normalization": rep.normalization,
        "pair_table": [
            {
                "left": _history_key(p.left),
                "right": _history_key(p.right),
                "re": p.value.real,
                "im": p.value.imag,
                "measure": p.measure,
                "threshold": p.threshold,
                "ratio": p.ratio,
                "passed": p.passed,
            }
            for p in rep.worst_pairs()
        ],
        "probabilities": None if rep.probabilities is None else _sorted_table(rep.probabilities),
    }


def _classification_exit(classification: str) -> int:
    return {
        "decoherent": EXIT_DECOHERENT,
        "marginal": EXIT_MARGINAL,
        "not_decoherent": EXIT_NOT_DECOHERENT,
    }[classification]


def _cmd_check(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    if args.both:
        rep = both_conditions_theorem_check(model, tol)
        body = {
            "mode": "both",
            "applicable": rep.applicable,
            "reason": rep.reason,
            "forwards": _report_decoherence(rep.forwards),
            "backwards": _report_decoherence(rep.backwards),
            "max_table_difference": rep.max_table_difference,
            "max_chain_difference": rep.max_chain_difference,
            "passed": rep.passed,
        }
        code = EXIT_DECOHERENT if (rep.applicable and rep.passed) else EXIT_NOT_DECOHERENT
        return body, code
    direction = "backwards" if args.backwards else "forwards"
    rep = check_decoherence(model, direction, args.strength, tol)
    return _report_decoherence(rep), _classification_exit(rep.classification)


def _cmd_probs(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    body = {}
    for direction in ("forwards", "backwards"):
        rep = check_decoherence(model, direction, args.strength, tol)
        body[direction] = {
            "classification": rep.classification,
            "candidate_table": _sorted_table(
                {h: rep.diagonals[h] for h in rep.histories}
            ),
        }
    return body, EXIT_DECOHERENT


def _cmd_abl(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    psi_i = extras.get("psi_initial")
    psi_f = extras.get("psi_final")
    if psi_i is None:
        if not model.initial_state.is_pure():
            raise _CliError("abl needs a pure initial state", EXIT_INVARIANT)
        psi_i = model.initial_state.state_vector()
    if psi_f is None:
        rho_final = extras.get("rho_final")
        if rho_final is None:
            raise _CliError(
                "abl needs a final state: use --scenario spin-post or a model file "
                "with a rank-one rho_final", EXIT_USAGE,
            )
        w, v = np.linalg.eigh(rho_final)
        if np.sum(w > 1e-10) != 1:
            raise _CliError("abl needs rho_final of rank one", EXIT_INVARIANT)
        psi_f = v[:, -1]
    table = scenarios.abl_table(psi_i, psi_f, model)
    body = {
        "table": _sorted_table(table),
        "sum": float(sum(table.values())),
    }
    return body, EXIT_DECOHERENT


def _pure_state_vector(model: QuantumModel) -> np.ndarray:
    if not model.initial_state.is_pure():
        raise _CliError("this command needs a pure initial state", EXIT_INVARIANT)
    return model.initial_state.state_vector()


def _cmd_records(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    psi = _pure_state_vector(model)
    try:
        recs = construct_records(model, psi, args.tf, tol)
    except ConditionNotSatisfiedError as exc:
        return {"error": str(exc), "records": None}, EXIT_NOT_DECOHERENT
    body = {
        "time": recs.time,
        "probabilities": _sorted_table(recs.probabilities),
        "correlation": [[float(x) for x in row] for row in recs.correlation],
        "extension_classification": recs.extension_report.classification,
        "projections": {
            ",".join(h): [[ [z.real, z.imag] for z in row] for row in recs.projections[h]]
            for h in sorted(recs.projections)
        },
    }
    return body, EXIT_DECOHERENT


def _cmd_reverse(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    rho_final = extras.get("rho_final")
    if rho_final is not None:
        w, v = np.linalg.eigh(rho_final)
        if np.sum(w > 1e-10) != 1:
            raise _CliError("reverse needs rho_final of rank one", EXIT_INVARIANT)
        final = v[:, -1]
    else:
        psi = _pure_state_vector(model)
        final = model.grid.cumulative(model.grid.n_times - 1) @ psi
    trajectories = reverse_collapse_chain(model, final)
    psi0 = _pure_state_vector(model)
    body = {"trajectories": []}
    for t in sorted(trajectories, key=lambda t: t.labels):
        reconstructed = t.states[-1]
        fidelity = float(abs(np.vdot(psi0, reconstructed)) ** 2) if t.probability > 0 else 0.0
        body["trajectories"].append({
            "history": _history_key(t.labels),
            "probability": t.probability,
            "reconstruction_fidelity": fidelity,
        })
    return body, EXIT_DECOHERENT


def _cmd_recohere(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    analysis = extras.get("analysis")
    if analysis is None:
        analysis = recoherence_scenario(model, tolerance=tol)
    body = {
        "first_half_classification": analysis.first_half_forwards.classification,
        "purity_curve": [[t, p] for t, p in (analysis.purity_curve or [])],
        "purity_dip": analysis.purity_dip,
        "reinterference": [[t, v] for t, v in analysis.reinterference],
        "reversed_set_backwards": analysis.reversed_backwards.classification,
        "original_set_backwards": analysis.original_backwards.classification,
        "recoherence_witness": analysis.recoherence_witness,
        "equivalence_holds": analysis.equivalence_holds,
    }
    ok = bool(analysis.recoherence_witness) and bool(analysis.equivalence_holds)
    return body, EXIT_DECOHERENT if ok else EXIT_NOT_DECOHERENT


def _cmd_page(args, model: QuantumModel, extras: dict, tol: TolerancePolicy):
    rho_f = extras.get("rho_final")
    if rho_f is None:
        rho_f = np.eye(model.dim, dtype=complex)
    rep = page_symmetric_cosmology_check(model.initial_state, rho_f, model, tol)
    body = {
        "preconditions": {
            name: {"ok": ok, "defect": defect}
            for name, (ok, defect) in rep.preconditions.items()
        },
        "applicable": rep.applicable,
        "reason": rep.reason,
        "original": None if rep.original is None else _report_decoherence(rep.original),
        "time_reversed": None if rep.time_reversed is None else _report_decoherence(rep.time_reversed),
        "max_table_difference": rep.max_table_difference,
        "passed": rep.passed,
    }
    ok = bool(rep.applicable) and bool(rep.passed)
    return body, EXIT_DECOHERENT if ok else EXIT_NOT_DECOHERENT


def _cmd_scenario(args):
    if args.action == "list":
        return {"scenarios": list(SCENARIO_NAMES)}, EXIT_DECOHERENT
    model, extras = _build_scenario(args.name, _parse_params(args.params or []), seed=0)
    rho_final = extras.get("rho_final")
    data = model_to_dict(model, rho_final)
    if args.out:
        dump_model(model, args.out, rho_final)
        return {"written": args.out}, EXIT_DECOHERENT
    return data, EXIT_DECOHERENT


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="path to a JSON model file")
    parser.add_argument("--scenario", nargs="+", metavar="NAME [k=v ...]",
                        help=f"built-in scenario ({', '.join(SCENARIO_NAMES)})")
    parser.add_argument("--tol-rel", type=float, default=1e-9, dest="tol_rel")
    parser.add_argument("--tol-abs", type=float, default=1e-12, dest="tol_abs")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="write the report to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decohist",
        description="Decoherent-histories engine: consistency checks, probabilities, "
                    "records, recoherence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="classify a history set as decoherent or not")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--forwards", action="store_true")
    group.add_argument("--backwards", action="store_true")
    group.add_argument("--both", action="store_true",
                       help="require both conditions and compare the probability tables")
    p.add_argument("--strength", choices=("weak", "strong"), default="weak")
    _add_common(p)

    p = sub.add_parser("probs", help="candidate probability tables, both directions")
    p.add_argument("--strength", choices=("weak", "strong"), default="weak")
    _add_common(p)

    p = sub.add_parser("abl", help="pre- and post-selected outcome probabilities")
    _add_common(p)

    p = sub.add_parser("records", help="construct record projectors at a late time")
    p.add_argument("--tf", type=int, default=None, help="grid index for the records")
    _add_common(p)

    p = sub.add_parser("reverse", help="run the collapse chain backwards from the final state")
    _add_common(p)

    p = sub.add_parser("recohere", help="mirror-extend a pre-zero model and analyze recoherence")
    _add_common(p)

    p = sub.add_parser("page", help="time-symmetric cosmology audit for (rho_i, rho_f)")
    _add_common(p)

    p = sub.add_parser("scenario", help="list built-in scenarios or emit one as a model file")
    p.add_argument("action", choices=("list", "emit"))
    p.add_argument("name", nargs="?", help="scenario name (for emit)")
    p.add_argument("params", nargs="*", help="scenario parameters k=v (for emit)")
    p.add_argument("--out", help="write the model file here")
    return parser


_DISPATCH = {
    "check": _cmd_check,
    "probs": _cmd_probs,
    "abl": _cmd_abl,
    "records": _cmd_records,
    "reverse": _cmd_reverse,
    "recohere": _cmd_recohere,
    "page": _cmd_page,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "scenario":
            if args.action == "emit" and not args.name:
                raise _CliError("scenario emit needs a scenario name", EXIT_USAGE)
            body, code = _cmd_scenario(args)
            _emit(body, args.out if args.action == "list" else None)
            return code
        model, extras = _resolve_model(args, args.seed)
        tol = _tolerance(args)
        body, code = _DISPATCH[args.command](args, model, extras, tol)
        report = {
            "command": args.command,
            "input": args.model if args.model else " ".join(args.scenario),
            "seed": args.seed,
            "tolerances": {"rel": tol.rel, "abs": tol.abs},
            "result": body,
            "exit_code": code,
            "timing_s": round(time.perf_counter() - started, 6),
        }
        _emit(report, args.out)
        return code
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ModelFileError as exc:
        print(f"model file error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelValidationError, MixedStateError, DegenerateNormalizationError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConditionNotSatisfiedError as exc:
        print(f"condition not satisfied: {exc}", file=sys.stderr)
        return EXIT_NOT_DECOHERENT
    except Exception as exc:  # pragma: no cover
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


if __name__ == "__main__":
    raise SystemExit(main())
