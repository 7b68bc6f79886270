"""Command-line entry point.

Verbs: run, calibrate, allan, btca, attack, export.  All outputs are pure
functions of the inputs and flags, so repeated invocations are
byte-identical.  Exit codes: 0 ok, 2 missing input, 3 invalid or
insufficient input, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import sim
from .btca import ClockDataset, best_clock, clk_addr_str, coordinate
from .clock import allan_curve, write_allan_csv
from .errors import ConfigError, ParamError, TapsimError
from .ue import calibrate_t0, l1_objective
from .units import NS, SEC

EXIT_OK = 0
EXIT_MISSING = 2
EXIT_INVALID = 3
EXIT_INTERNAL = 4

SCENARIO_DIR = Path(__file__).parent / "scenarios"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_json(path: str):
    p = Path(path)
    if not p.exists():
        bundled = SCENARIO_DIR / p.name
        if p.suffix == ".json" and bundled.exists():
            p = bundled
        else:
            raise CliError(EXIT_MISSING, f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INVALID, f"bad JSON in {path}: {exc}")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, dotted: str, value) -> None:
    """Set a dot-path key ('bs.sib9_period_ms', 'ues.0.config.mode')."""
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if isinstance(node, list):
            node = node[int(key)]
        else:
            node = node.setdefault(key, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _apply_sets(data: dict, sets: list[str]) -> None:
    for item in sets:
        if "=" not in item:
            raise CliError(EXIT_INVALID, f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            apply_override(data, key, _parse_value(raw))
        except (KeyError, IndexError, ValueError) as exc:
            raise CliError(EXIT_INVALID, f"bad override {item!r}: {exc}")


def _run_one(data: dict, outdir: Path) -> dict:
    try:
        scenario = sim.scenario_from_dict(data)
    except ConfigError as exc:
        raise CliError(EXIT_INVALID, str(exc))
    trace = sim.run(scenario)
    sim.write_trace(trace, outdir)
    return sim.summarize(trace)


def cmd_run(args, require_attack: bool = False) -> int:
    data = _load_json(args.scenario)
    _apply_sets(data, args.set or [])
    if args.seed is not None:
        data["seed"] = args.seed
    if require_attack and not data.get("attack"):
        raise CliError(EXIT_INVALID, "scenario has no attack block")
    outdir = Path(args.out)
    if args.batch and args.batch > 1:
        base = int(data.get("seed", 1))
        for i in range(args.batch):
            batch_data = json.loads(json.dumps(data))
            batch_data["seed"] = base + i
            _run_one(batch_data, outdir / f"seed_{base + i}")
        print(f"wrote {args.batch} runs under {outdir}")
    else:
        summary = _run_one(data, outdir)
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _read_error_column(path: str) -> list[int]:
    p = Path(path)
    if not p.exists():
        raise CliError(EXIT_MISSING, f"file not found: {path}")
    errors: list[int] = []
    with open(p, newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        if any(c.isalpha() for c in sample.splitlines()[0] if c not in "+-eE"):
            reader = csv.DictReader(fh)
            col = next(
                (c for c in ("error_ps", "e_total_ps", "output_error_ps", "offset_ps")
                 if c in (reader.fieldnames or [])),
                None,
            )
            if col is None:
                raise CliError(EXIT_INVALID, "no error column found in log")
            for rec in reader:
                if rec[col]:
                    errors.append(int(rec[col]))
        else:
            for line in fh:
                line = line.strip().split(",")[0]
                if line:
                    errors.append(int(line))
    return errors


def cmd_calibrate(args) -> int:
    errors = _read_error_column(args.log)
    if not errors:
        raise CliError(EXIT_INVALID, "error log is empty")
    t0 = calibrate_t0(errors)
    residuals = sorted(e - t0 for e in errors)
    median_resid = residuals[(len(residuals) - 1) // 2]
    print(f"t0_ns={t0 / NS:.1f}")
    print(f"residual_median_ns={median_resid / NS:.1f}")
    print(f"residual_range_ns=[{residuals[0] / NS:.1f}, {residuals[-1] / NS:.1f}]")
    return EXIT_OK


def _read_offset_series(path: str) -> list[tuple[int, int]]:
    p = Path(path)
    if not p.exists():
        raise CliError(EXIT_MISSING, f"file not found: {path}")
    series: list[tuple[int, int]] = []
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        col = next((c for c in ("offset_ps", "t_offset_ps") if c in fields), None)
        if "t_master_ps" not in fields or col is None:
            raise CliError(EXIT_INVALID, "offset log needs t_master_ps and offset_ps")
        reason = "reject_reason" if "reject_reason" in fields else None
        for rec in reader:
            if reason and rec[reason] not in ("none", "threshold_exceeded"):
                continue
            series.append((int(rec["t_master_ps"]), int(rec[col])))
    return series


def cmd_allan(args) -> int:
    series = _read_offset_series(args.log)
    if len(series) < 3:
        raise CliError(EXIT_INVALID, "offset log too short")
    spacing = series[1][0] - series[0][0]
    if spacing <= 0 or any(b[0] - a[0] != spacing for a, b in zip(series, series[1:])):
        raise CliError(EXIT_INVALID, "offset log is not uniformly sampled")
    if args.taus:
        grid = [round(float(t) * SEC) for t in args.taus.split(",")]
    else:
        grid = sim.default_tau_grid(spacing, len(series))
    curve = allan_curve(series, grid)
    if not curve:
        raise CliError(EXIT_INVALID, "no feasible tau for this log")
    out = Path(args.out) if args.out else Path(args.log).with_suffix(".allan.csv")
    write_allan_csv(out, curve)
    argmin = min(curve, key=lambda pt: pt.variance)
    print(f"wrote {out}")
    print(f"argmin tau_s={argmin.tau / SEC} variance={argmin.variance:.6e} n={argmin.sample_count}")
    return EXIT_OK


def cmd_btca(args) -> int:
    if args.addr:
        ue_id_hex, segment = args.addr
        try:
            print(clk_addr_str(ue_id_hex, segment))
        except (ValueError, ParamError) as exc:
            raise CliError(EXIT_INVALID, str(exc))
        return EXIT_OK
    if not args.datasets:
        raise CliError(EXIT_INVALID, "need a datasets JSON or --addr")
    data = _load_json(args.datasets)
    if not isinstance(data, list) or not data:
        raise CliError(EXIT_INVALID, "datasets file must be a non-empty JSON list")
    try:
        candidates = [ClockDataset.from_dict(d) for d in data]
        selection = best_clock(candidates)
    except (TypeError, ParamError) as exc:
        raise CliError(EXIT_INVALID, str(exc))
    result = selection.to_dict()
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_export(args) -> int:
    tracedir = Path(args.tracedir)
    if not tracedir.is_dir():
        raise CliError(EXIT_MISSING, f"trace directory not found: {args.tracedir}")
    ue_files = sorted(tracedir.glob("ue_*.csv"))
    if not ue_files:
        raise CliError(EXIT_INVALID, "no ue_*.csv traces in directory")
    outdir = Path(args.out) if args.out else tracedir / "export"
    outdir.mkdir(parents=True, exist_ok=True)
    for path in ue_files:
        name = path.stem
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        with open(outdir / f"{name}_errors.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_s", "output_error_ns"])
            for rec in rows:
                if rec["output_error_ps"]:
                    writer.writerow(
                        [int(rec["t_master_ps"]) / SEC,
                         int(rec["output_error_ps"]) / NS]
                    )
        series = [
            (int(r["t_master_ps"]), int(r["t_offset_ps"]))
            for r in rows
            if r["reject_reason"] in ("none", "threshold_exceeded")
        ]
        if len(series) >= 3:
            spacing = series[1][0] - series[0][0]
            if spacing > 0 and all(
                b[0] - a[0] == spacing for a, b in zip(series, series[1:])
            ):
                curve = allan_curve(series, sim.default_tau_grid(spacing, len(series)))
                if curve:
                    write_allan_csv(outdir / f"{name}_allan.csv", curve)
    print(f"wrote exports under {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tapsim",
        description="Air-interface absolute time synchronization simulator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("scenario", help="scenario JSON (bundled preset names work)")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dot-path override into the scenario JSON")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--batch", type=int, default=0,
                       help="run N consecutive seeds")

    p_cal = sub.add_parser("calibrate", help="derive t0 from an error log")
    p_cal.add_argument("log", help="CSV of error samples (ps)")

    p_allan = sub.add_parser("allan", help="Allan curve from an offset log")
    p_allan.add_argument("log", help="CSV with t_master_ps and offset column")
    p_allan.add_argument("--taus", default=None, help="comma list of taus in seconds")
    p_allan.add_argument("--out", default=None, help="output CSV path")

    p_btca = sub.add_parser("btca", help="clock selection / address derivation")
    p_btca.add_argument("datasets", nargs="?", default=None,
                        help="JSON list of clock datasets")
    p_btca.add_argument("--addr", nargs=2, metavar=("UEID_HEX", "SEGMENT"),
                        help="derive the clock interface address")
    p_btca.add_argument("--out", default=None)

    p_attack = sub.add_parser("attack", help="run an attack scenario")
    p_attack.add_argument("scenario")
    p_attack.add_argument("--out", default="out")
    p_attack.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_attack.add_argument("--seed", type=int, default=None)
    p_attack.add_argument("--batch", type=int, default=0)

    p_exp = sub.add_parser("export", help="figure-ready CSVs from a trace dir")
    p_exp.add_argument("tracedir")
    p_exp.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return cmd_run(args)
        if args.verb == "attack":
            return cmd_run(args, require_attack=True)
        if args.verb == "calibrate":
            return cmd_calibrate(args)
        if args.verb == "allan":
            return cmd_allan(args)
        if args.verb == "btca":
            return cmd_btca(args)
        if args.verb == "export":
            return cmd_export(args)
        parser.error(f"unknown verb {args.verb}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except TapsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
