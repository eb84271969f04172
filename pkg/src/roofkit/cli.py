"""Command-line front end.

Each subcommand resolves its full configuration, runs the computation, and
emits one JSON report (stdout, or report.json under --out) embedding the
tool version, the resolved config, the seed and the wall time; tabular
results additionally land as CSV files when --out is given.  All stored
values are nats; --bits adds converted display fields only.

Exit codes: 0 clean, 1 error, 2 when any verdict is flagged.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .additivity import (
    FLAGGED,
    channel_from_family,
    chi_subadditivity_margin,
    complementary_transfer_probe,
    corollary_bound_check,
    scan_random,
    superadditivity_margin,
    truncation_experiment,
)
from .channels import (
    Channel,
    RandomPhaseSpec,
    output_entropy,
    phase_complement_gram_deviation,
    random_phase_channel,
    schur_matrix,
    tail_entropy_bound,
    tail_quantities,
)
from .core import (
    DensityMatrix,
    SubsystemShape,
    basis_state,
    random_density,
    random_pure,
    rng_for,
)
from .entropy import EnergyConstraint, gibbs_state, von_neumann_entropy
from .errors import ParameterError, RoofkitError
from .roof import RoofOptions, ccooe, chi_direct, chi_from_roof, eof
from .serialize import (
    ADDITIVITY_CSV_FIELDS,
    TRUNCATION_CSV_FIELDS,
    VERSION,
    additivity_csv_rows,
    decode_channel,
    decode_matrix,
    decode_phase_spec,
    decode_state,
    dumps,
    encode_roof_result,
    read_json,
    truncation_csv_rows,
    write_csv,
    write_json,
)

LN2 = math.log(2.0)


def _named_state(text: str) -> DensityMatrix:
    parts = text.split(":")
    kind = parts[0]
    if kind == "mixed":
        d = int(parts[1])
        return DensityMatrix(np.eye(d) / d)
    if kind == "pure":
        return random_pure(int(parts[1]), int(parts[2]) if len(parts) > 2 else 0).density()
    if kind == "random":
        d = int(parts[1])
        rank = int(parts[2]) if len(parts) > 2 else d
        seed = int(parts[3]) if len(parts) > 3 else 0
        return random_density(d, rank, seed)
    if kind == "bell":
        v = (np.kron(basis_state(2, 0).amplitudes, basis_state(2, 0).amplitudes)
             + np.kron(basis_state(2, 1).amplitudes, basis_state(2, 1).amplitudes)) / math.sqrt(2)
        return DensityMatrix(np.outer(v, v.conj()))
    if kind == "plus":
        v = np.array([1.0, 1.0]) / math.sqrt(2)
        return DensityMatrix(np.outer(v, v))
    if kind == "diag":
        probs = np.array([float(p) for p in parts[1].split(",")])
        return DensityMatrix(np.diag(probs))
    raise ParameterError(f"unknown named state {text!r}")


def _load_state(args) -> DensityMatrix:
    if getattr(args, "state", None):
        return decode_state(read_json(args.state))
    if getattr(args, "named", None):
        return _named_state(args.named)
    raise ParameterError("provide --state FILE or --named NAME")


def _family_dict(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    if os.path.isfile(text):
        return read_json(text)
    parts = text.split(":")
    kind = parts[0]
    if kind == "noiseless":
        return {"family": "noiseless", "dim": int(parts[1])}
    if kind == "dephasing":
        return {"family": "dephasing", "q": float(parts[1]) if len(parts) > 1 else 0.25}
    if kind == "depolarizing":
        return {"family": "depolarizing", "dim": int(parts[1])}
    if kind == "random":
        spec = {"family": "random", "dim": int(parts[1])}
        if len(parts) > 2:
            spec["out"] = int(parts[2])
        if len(parts) > 3:
            spec["env"] = int(parts[3])
        return spec
    if kind == "measure_prepare":
        spec = {"family": "measure_prepare", "dim": int(parts[1])}
        if len(parts) > 2:
            spec["outcomes"] = int(parts[2])
        return spec
    raise ParameterError(f"unknown channel family {text!r}")


def _load_channel(text: str, seed: int, stream: int) -> Channel:
    if os.path.isfile(text):
        data = read_json(text)
        if "kraus" in data:
            return decode_channel(data)
        return channel_from_family(data, rng_for(seed, stream))
    return channel_from_family(_family_dict(text), rng_for(seed, stream))


def _dims(text: str) -> SubsystemShape:
    return SubsystemShape(tuple(int(d) for d in text.lower().split("x")))


def _options(args) -> RoofOptions:
    return RoofOptions(restarts=args.restarts, seed=args.seed)


def _emit(args, command: str, payload: dict, started: float, csv_files=None) -> None:
    config = {
        k: v
        for k, v in vars(args).items()
        if k != "func" and not callable(v)
    }
    report = {
        "tool": "roofkit",
        "version": VERSION,
        "command": command,
        "config": config,
        "seed": getattr(args, "seed", 0),
        "walltime_s": time.perf_counter() - started,
        "result": payload,
    }
    out = getattr(args, "out", None)
    if out:
        os.makedirs(out, exist_ok=True)
        fmt = getattr(args, "format", "json")
        if fmt in ("json", "both"):
            write_json(os.path.join(out, "report.json"), report)
        if fmt in ("csv", "both") and csv_files:
            for name, fields, rows in csv_files:
                write_csv(os.path.join(out, name), fields, rows)
    else:
        sys.stdout.write(dumps(report))


def _with_bits(payload: dict, args, keys: tuple[str, ...]) -> dict:
    if getattr(args, "bits", False):
        for key in keys:
            if key in payload and isinstance(payload[key], float):
                payload[key.replace("_nats", "") + "_bits"] = payload[key] / LN2
    return payload


# --- subcommand handlers ------------------------------------------------------


def cmd_entropy(args) -> int:
    started = time.perf_counter()
    rho = _load_state(args)
    payload = {"dim": rho.dim, "entropy_nats": von_neumann_entropy(rho)}
    _emit(args, "entropy", _with_bits(payload, args, ("entropy_nats",)), started)
    return 0


def cmd_ccooe(args) -> int:
    started = time.perf_counter()
    channel = _load_channel(args.channel, args.seed, 0)
    rho = _load_state(args)
    result = ccooe(channel, rho, _options(args))
    payload = encode_roof_result(result)
    payload["channel"] = channel.label
    _emit(args, "ccooe", _with_bits(payload, args, ("value_nats",)), started)
    return 0


def cmd_eof(args) -> int:
    started = time.perf_counter()
    rho = _load_state(args)
    result = eof(rho, _dims(args.dims), _options(args))
    payload = encode_roof_result(result)
    _emit(args, "eof", _with_bits(payload, args, ("value_nats",)), started)
    return 0


def cmd_chi(args) -> int:
    started = time.perf_counter()
    channel = _load_channel(args.channel, args.seed, 0)
    rho = _load_state(args)
    if args.method == "direct":
        value = chi_direct(channel, rho, _options(args))
    else:
        value = chi_from_roof(channel, rho, _options(args))
    payload = {
        "chi_nats": value,
        "lower_bound": True,
        "method": args.method,
        "channel": channel.label,
    }
    _emit(args, "chi", _with_bits(payload, args, ("chi_nats",)), started)
    return 0


_MARGIN_CMDS = {
    "margin": superadditivity_margin,
    "chi": chi_subadditivity_margin,
    "corollary": corollary_bound_check,
}


def cmd_additivity(args) -> int:
    started = time.perf_counter()
    if args.mode in _MARGIN_CMDS:
        left = _load_channel(args.left, args.seed, 0)
        right = _load_channel(args.right, args.seed, 1)
        rho = _load_state(args)
        report = _MARGIN_CMDS[args.mode](
            left, right, rho, _options(args), args.tolerance
        )
        payload = report.to_dict()
        csvs = [("margins.csv", ADDITIVITY_CSV_FIELDS, additivity_csv_rows([report]))]
        _emit(args, f"additivity-{args.mode}", payload, started, csvs)
        return 2 if report.verdict == FLAGGED else 0

    if args.mode == "truncate":
        rho = _load_state(args)
        trace = truncation_experiment(
            rho,
            _dims(args.dims),
            tuple(int(n) for n in args.ranks.split(",")),
            _options(args),
        )
        payload = {
            "factor_dims": list(trace.factor_dims),
            "full_output_entropy": trace.full_output_entropy,
            "residual_ok": trace.residual_ok,
            "entropy_bound_ok": trace.entropy_bound_ok,
            "weights_monotone": trace.weights_monotone,
            "final_weight": trace.final_weight,
            "final_entropy_gap": trace.final_entropy_gap,
            "steps": trace.rows(),
        }
        csvs = [("truncation.csv", TRUNCATION_CSV_FIELDS, truncation_csv_rows(trace))]
        _emit(args, "additivity-truncate", payload, started, csvs)
        return 0

    if args.mode == "scan":
        result = scan_random(
            _family_dict(args.left),
            _family_dict(args.right),
            args.samples,
            seed=args.seed,
            options=_options(args),
            tolerance=args.tolerance,
            check=args.check,
        )
        payload = {
            "samples": args.samples,
            "check": args.check,
            "min_margin": result.min_margin,
            "mean_margin": result.mean_margin,
            "flagged": result.flagged,
            "reports": [r.to_dict() for r in result.reports],
            "replay": result.replay,
        }
        csvs = [("margins.csv", ADDITIVITY_CSV_FIELDS, additivity_csv_rows(result.reports))]
        _emit(args, "additivity-scan", payload, started, csvs)
        return 2 if result.flagged else 0

    if args.mode == "complement":
        left = _load_channel(args.left, args.seed, 0)
        right = _load_channel(args.right, args.seed, 1)
        probe = complementary_transfer_probe(
            left, right, args.samples, args.seed, _options(args), args.tolerance
        )
        rows = [
            {
                "item": r.index,
                "margin": r.margin,
                "margin_complement": r.margin_complement,
                "roof_left": r.roof_left,
                "roof_left_complement": r.roof_left_complement,
                "agreement_dev": r.agreement_dev,
            }
            for r in probe.rows
        ]
        payload = {
            "max_agreement_dev": probe.max_agreement_dev,
            "flagged": probe.flagged,
            "rows": rows,
        }
        fields = ("item", "margin", "margin_complement", "roof_left",
                  "roof_left_complement", "agreement_dev")
        csvs = [("complement.csv", fields, rows)]
        _emit(args, "additivity-complement", payload, started, csvs)
        return 2 if probe.flagged else 0

    raise ParameterError(f"unknown additivity mode {args.mode!r}")


def cmd_phase_channel(args) -> int:
    started = time.perf_counter()
    text = args.spec.strip()
    data = json.loads(text) if text.startswith("{") else read_json(text)
    spec = decode_phase_spec(data)
    channel = random_phase_channel(spec)
    b = schur_matrix(spec)
    bvals = np.linalg.eigvalsh(b)
    mixed = DensityMatrix(np.eye(spec.grid_size) / spec.grid_size)
    entropies = [
        output_entropy(channel, random_pure(spec.grid_size, (args.seed, i)).density())
        for i in range(args.samples)
    ]
    payload = {
        "a": spec.half_width,
        "d": spec.grid_size,
        "schur_min_eigenvalue": float(bvals[0]),
        "schur_diag_dev": float(np.max(np.abs(np.diag(b) - 1.0))),
        "output_entropy_mixed": output_entropy(channel, mixed),
        "empirical_entropy_bound": max(entropies),
        "mean_pure_entropy": float(sum(entropies) / len(entropies)),
    }
    csvs = []
    if args.sweep:
        lo, hi = (int(x) for x in args.sweep.split(":")[:2])
        rows = []
        for d in range(lo, hi + 1):
            sub = RandomPhaseSpec(spec.half_width, d, spec.density)
            ch = random_phase_channel(sub)
            vals = [
                output_entropy(ch, random_pure(d, (args.seed, d, i)).density())
                for i in range(args.samples)
            ]
            rows.append({
                "d": d,
                "max_entropy": max(vals),
                "mean_entropy": float(sum(vals) / len(vals)),
            })
        payload["sweep"] = rows
        csvs.append(("phase_sweep.csv", ("d", "max_entropy", "mean_entropy"), rows))
    if args.tails:
        cap = payload["empirical_entropy_bound"]
        rows = []
        for d in (float(x) for x in args.tails.split(",")):
            alpha, beta, gamma = tail_quantities(spec.density, d)
            row = {"d": d, "alpha": alpha, "beta": beta, "gamma": gamma}
            if d >= 1.0 and alpha < 1.0:
                row["entropy_bound"] = tail_entropy_bound(
                    spec.density, d, cap, payload["output_entropy_mixed"]
                )
            rows.append(row)
        payload["tails"] = rows
        csvs.append(("phase_tails.csv", ("d", "alpha", "beta", "gamma", "entropy_bound"), rows))
    if args.cross_check:
        payload["complement_gram_dev"] = phase_complement_gram_deviation(
            spec, t_points=args.t_points
        )
    _emit(args, "phase-channel", payload, started, csvs)
    return 0


def cmd_gibbs(args) -> int:
    started = time.perf_counter()
    ham = decode_matrix(read_json(args.hamiltonian))
    state, beta, entropy = gibbs_state(EnergyConstraint(ham, args.level))
    payload = {
        "beta": beta,
        "level": args.level,
        "energy": float(np.trace(state.entries @ ham).real),
        "entropy_nats": entropy,
    }
    _emit(args, "gibbs", _with_bits(payload, args, ("entropy_nats",)), started)
    return 0


# --- parser -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=24)
    p.add_argument("--out", default=None, help="output directory for report files")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    p.add_argument("--bits", action="store_true", help="add bit-valued display fields")
    p.add_argument("--tolerance", type=float, default=1e-3)


def _add_state(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", default=None, help="state JSON file")
    p.add_argument("--named", default=None, help="named state, e.g. mixed:4 or bell")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roofkit",
        description="Output-entropy convex roofs, Holevo quantities and additivity probes.",
    )
    parser.add_argument("--version", action="version", version=f"roofkit {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="von Neumann entropy of a state")
    _add_state(p)
    _add_common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("ccooe", help="convex-roof upper bound of the output entropy")
    p.add_argument("--channel", required=True)
    _add_state(p)
    _add_common(p)
    p.set_defaults(func=cmd_ccooe)

    p = sub.add_parser("eof", help="entanglement of formation across a bipartite cut")
    p.add_argument("--dims", required=True, help="factor dims, e.g. 2x2")
    _add_state(p)
    _add_common(p)
    p.set_defaults(func=cmd_eof)

    p = sub.add_parser("chi", help="constrained Holevo quantity at a state")
    p.add_argument("--channel", required=True)
    p.add_argument("--method", choices=("roof", "direct"), default="roof")
    _add_state(p)
    _add_common(p)
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("additivity", help="margin checks, truncation traces and scans")
    p.add_argument("mode", choices=("margin", "chi", "corollary", "truncate", "scan", "complement"))
    p.add_argument("--left", default=None, help="channel file or family")
    p.add_argument("--right", default=None, help="channel file or family")
    p.add_argument("--dims", default=None, help="four factors for truncate, e.g. 2x2x2x2")
    p.add_argument("--ranks", default="1,2", help="ascending ranks for truncate")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument(
        "--check",
        choices=("superadditivity", "chi-subadditivity", "corollary-max"),
        default="superadditivity",
    )
    _add_state(p)
    _add_common(p)
    p.set_defaults(func=cmd_additivity)

    p = sub.add_parser("phase-channel", help="discretized random-phase channel probes")
    p.add_argument("--spec", required=True, help="spec JSON file or inline JSON")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--sweep", default=None, help="grid-size range lo:hi")
    p.add_argument("--tails", default=None, help="comma list of cutoffs")
    p.add_argument("--cross-check", action="store_true", dest="cross_check")
    p.add_argument("--t-points", type=int, default=64, dest="t_points")
    _add_common(p)
    p.set_defaults(func=cmd_phase_channel)

    p = sub.add_parser("gibbs", help="maximum-entropy state at fixed mean energy")
    p.add_argument("--hamiltonian", required=True, help="Hermitian matrix JSON file")
    p.add_argument("--level", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_gibbs)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RoofkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
