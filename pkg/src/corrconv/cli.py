from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .async_log import log_fields, start_log_worker, stop_log_worker
from .claims import ClaimRecord, print_claim_report
from .channels import output_params
from .config import FORMATS, RunConfig, SweepConfig, load_config, resolve_output
from .errors import ConfigError, StateError
from .measures import correlation_report
from .protocol import batch_repeater, decompose_output, verify_claims
from .qudit import QuditConfig, qudit_report
from .states import BellDiagonalParams, InputSpec, bell_diagonal_state

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3

SWEEP_COLUMNS = ("p", "e_closed", "e_oracle", "mutual_info", "classical", "discord", "coherent_info", "p0")
CLAIM_COLUMNS = ("claim_id", "statement", "claimed_value", "computed_value", "verdict", "detail")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt_number(x: float) -> str:
    """12 significant digits, lowercase exponent, no negative zero."""
    text = f"{x:.12g}"
    return "0" if text == "-0" else text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat TOML file with default values")
    common.add_argument("--delta-in", type=float, dest="delta_in", help="Input gap in (0, 1/3]")
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="Output file (relative to $CORRCONV_OUTPUT_DIR when set)")
    common.add_argument("--workers", type=int, help="Concurrent workers for independent evaluations")

    p = _Parser(prog="corrconv", description="Correlation conversion through zero-capacity channels")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sweep = sub.add_parser("sweep", parents=[common], help="Correlation measures over a p grid")
    sweep.add_argument("--p-min", type=float, dest="p_min")
    sweep.add_argument("--p-max", type=float, dest="p_max")
    sweep.add_argument("--p-step", type=float, dest="p_step")
    for name in ("c1", "c2", "c3"):
        sweep.add_argument(f"--{name}", type=float)

    verify = sub.add_parser("verify", parents=[common], help="Check the tracked numeric claims")
    verify.add_argument("--p", type=float)

    protocol = sub.add_parser("protocol", parents=[common], help="Monte Carlo of the flag readout")
    protocol.add_argument("--n", type=int)
    protocol.add_argument("--p", type=float)
    protocol.add_argument("--json", help="Also write the summary as JSON")

    qudit = sub.add_parser("qudit", parents=[common], help="Qudit entanglement threshold")
    qudit.add_argument("--d", type=int)
    qudit.add_argument("--schmidt", type=float, nargs="+", help="Descending Schmidt coefficients b_i")
    qudit.add_argument("--m", type=float, help="M = max(b1 b2, c1 c2); defaults to b1 b2")
    qudit.add_argument("--a", type=float, nargs=2, metavar=("A1", "A2"), help="Two largest output Schmidt coefficients")
    qudit.add_argument("--p", type=float)
    return p


_OVERRIDE_KEYS = (
    "delta_in", "seed", "format", "out", "workers", "p_min", "p_max", "p_step",
    "c1", "c2", "c3", "p", "n", "json", "d", "schmidt", "m", "a",
)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}


def _prepare_dir(cfg: RunConfig) -> None:
    if cfg.output_dir is not None:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _sweep_row(params: BellDiagonalParams, delta_in: Optional[float], p: float) -> dict[str, str]:
    report = correlation_report(params, p, delta_in)
    try:
        p0 = decompose_output(bell_diagonal_state(output_params(params, p))).p0
    except StateError as exc:
        log_fields("warn", f"no flag decomposition ({exc})", p=p)
        p0 = float("nan")
    values = (p, report.e_closed, report.e_oracle, report.mutual_info, report.classical,
              report.discord, report.coherent_info, p0)
    return dict(zip(SWEEP_COLUMNS, (fmt_number(v) for v in values)))


async def _sweep_rows(cfg: SweepConfig) -> list[dict[str, str]]:
    params = cfg.c_params
    # Explicit coefficients set their own input gap; correlation_report derives it.
    delta_in = None if cfg.has_c_override else cfg.delta_in
    gate = asyncio.Semaphore(cfg.workers)

    async def one(p: float) -> dict[str, str]:
        async with gate:
            return await asyncio.to_thread(_sweep_row, params, delta_in, p)

    # gather keeps grid order whatever the completion order.
    return list(await asyncio.gather(*(one(p) for p in cfg.grid())))


def render_csv(columns: Sequence[str], rows: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render_json(metadata: dict[str, Any], rows: Sequence[dict[str, Any]]) -> str:
    return json.dumps({"metadata": metadata, "rows": list(rows)}, indent=2, allow_nan=False) + "\n"


def _numeric(row: dict[str, str]) -> dict[str, Optional[float]]:
    # A missing flag decomposition is "nan" in CSV and null in JSON.
    values = {k: float(v) for k, v in row.items()}
    return {k: None if math.isnan(v) else v for k, v in values.items()}


async def cmd_sweep(cfg: RunConfig) -> int:
    sweep = cfg.sweep
    sweep.validate()
    params = sweep.c_params
    log_fields("sweep", rows=len(sweep.grid()), delta_in=sweep.delta_in, c1=params.c1, c2=params.c2, c3=params.c3)
    rows = await _sweep_rows(sweep)

    if sweep.format == "json":
        meta = {
            "version": __version__,
            "inputs": {
                "p_min": sweep.p_min, "p_max": sweep.p_max, "p_step": sweep.p_step,
                "delta_in": sweep.delta_in, "c1": params.c1, "c2": params.c2, "c3": params.c3,
            },
            "columns": list(SWEEP_COLUMNS),
        }
        text = render_json(meta, [_numeric(r) for r in rows])
    else:
        text = render_csv(SWEEP_COLUMNS, rows)

    path = resolve_output(sweep.output_path, f"sweep.{sweep.format}", cfg.output_dir)
    _prepare_dir(cfg)
    _write_text(path, text)
    log_fields("sweep", "wrote", path=path)
    return EXIT_OK


def _claims_text(records: list[ClaimRecord], fmt: str, spec: InputSpec, p: float) -> str:
    rows = [r.to_dict() for r in records]
    if fmt == "json":
        meta = {"version": __version__, "inputs": {"delta_in": spec.delta_in, "p": p}}
        return render_json(meta, rows)
    return render_csv(CLAIM_COLUMNS, rows)


async def cmd_verify(cfg: RunConfig) -> int:
    p = cfg.protocol.p
    spec = InputSpec(delta_in=cfg.protocol.delta_in)
    records = await asyncio.to_thread(verify_claims, spec, p)
    print_claim_report(records)
    path = resolve_output(cfg.out, f"verify.{cfg.format}", cfg.output_dir)
    _prepare_dir(cfg)
    _write_text(path, _claims_text(records, cfg.format, spec, p))
    log_fields("verify", "wrote", path=path)
    return EXIT_OK


async def cmd_protocol(cfg: RunConfig) -> int:
    pc = cfg.protocol
    pc.validate()
    spec = InputSpec(delta_in=pc.delta_in)
    batch = await asyncio.to_thread(batch_repeater, pc.n, spec, pc.p, pc.seed, workers=pc.workers)
    summary = {
        "n": batch.n,
        "p": pc.p,
        "delta_in": pc.delta_in,
        "seed": pc.seed,
        "flag0_count": int(batch.entangled_indices.size),
        "empirical_rate": batch.empirical_rate,
        "p0": batch.p0,
        "flag_p0": batch.flag_p0,
        "yield_predicted": batch.yield_predicted,
        "model_predicted": batch.model_predicted,
    }
    for key, value in summary.items():
        print(f"{key}={fmt_number(value) if isinstance(value, float) else value}")
    if pc.json_path is not None:
        path = resolve_output(pc.json_path, "protocol.json", cfg.output_dir)
        _prepare_dir(cfg)
        _write_text(path, json.dumps({"version": __version__, **summary}, indent=2) + "\n")
        log_fields("protocol", "wrote", path=path)
    return EXIT_OK


async def cmd_qudit(cfg: RunConfig) -> int:
    qc = cfg.qudit
    config = QuditConfig(d=qc.d, schmidt_b=qc.schmidt, schmidt_a=qc.a, m=qc.m, p=qc.p)
    verdict = qudit_report(config)
    print(verdict.line())
    return EXIT_OK


def _validate(command: str, cfg: RunConfig) -> None:
    if command == "sweep":
        cfg.sweep.validate()
    elif command == "qudit":
        q = cfg.qudit
        QuditConfig(d=q.d, schmidt_b=q.schmidt, schmidt_a=q.a, m=q.m, p=q.p)
    else:
        cfg.protocol.validate()
        if cfg.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {cfg.format!r}")


_COMMANDS = {"sweep": cmd_sweep, "verify": cmd_verify, "protocol": cmd_protocol, "qudit": cmd_qudit}


async def _main(args: argparse.Namespace) -> int:
    await start_log_worker()
    try:
        try:
            cfg = load_config(args.config, _overrides(args))
            _validate(args.command, cfg)
        except (ConfigError, ValueError) as exc:
            log_fields("config", str(exc))
            return EXIT_USAGE

        try:
            return await _COMMANDS[args.command](cfg)
        except ConfigError as exc:
            log_fields("config", str(exc))
            return EXIT_USAGE
        except OSError as exc:
            log_fields("error", f"cannot write output: {exc}")
            return EXIT_IO
        except Exception as exc:
            log_fields("error", str(exc), kind=type(exc).__name__)
            return EXIT_INTERNAL
    finally:
        await stop_log_worker()


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return asyncio.run(_main(args))
