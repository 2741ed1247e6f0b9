"""
Command-line entry point.

    python -m knowbal enumerate --systems 2
    python -m knowbal check "(1,1)|(2,2)|(3,3)|(4,4)"
    python -m knowbal protocol all --seed 7
    python -m knowbal run scripts/teleportation.toy --mode monte-carlo
    python -m knowbal table diff
"""

import argparse
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import pandas as pd

from . import __version__
from .core.config import KnowbalSettings, get_settings
from .core.errors import KnowbalError, UnsupportedShapeError
from .core.logging import configure_logging, get_logger
from .dsl import execute, parse, parse_state_literal
from .measurements import classify, enumerate_maximal, find_mup_sets, max_mup_size, save_measurements
from .ontic import SystemShape
from .ontic_sim import RunConfig
from .protocols import PROTOCOLS, ProtocolContext, run_suite, toy_correlation_rows
from .quantum_ref import bell_table
from .transforms import allowed_group, closure, from_cycles, standard_generators
from .validity import CatalogStore, correlation_type, explain

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2

FORM_ORDER = ("product", "perfectly-correlated", "pair-correlated", "triplet-correlated")


@dataclass
class CliConfig:
    """Parsed invocation."""

    command: str
    systems: int = 1
    seed: int = 0
    trials: int = 10000
    output_format: str = "text"
    cache_dir: str = "./.knowbal-cache"
    offline: bool = False
    update_rule: str = "max-fidelity"
    exhaustive: bool = False
    mixed: bool = False
    header: bool = True
    mode: str = "epistemic"
    size: Optional[int] = None
    target: Optional[str] = None
    output: Optional[str] = None
    verbose: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        return cls(
            command=args.command,
            systems=getattr(args, "systems", 1),
            seed=args.seed,
            trials=args.trials,
            output_format=args.format,
            cache_dir=args.cache_dir,
            offline=args.offline,
            update_rule=args.update_rule,
            exhaustive=getattr(args, "exhaustive", False),
            mixed=getattr(args, "mixed", False),
            header=not args.no_header,
            mode=getattr(args, "mode", "epistemic"),
            size=getattr(args, "size", None),
            target=getattr(args, "target", None),
            output=getattr(args, "output", None),
            verbose=args.verbose,
        )

    def store(self) -> CatalogStore:
        return CatalogStore(self.cache_dir, offline=self.offline)

    def run_config(self) -> RunConfig:
        return RunConfig(self.seed, self.trials, self.update_rule)


#######################################
# OUTPUT
#######################################


def render(cfg: CliConfig, lines: Sequence[str], payload: Any, frame: Optional[pd.DataFrame] = None) -> str:
    """Text lines, a JSON document or a CSV table depending on the output format."""
    if cfg.output_format == "json":
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, default=str)
    if cfg.output_format == "csv":
        if frame is None:
            frame = pd.DataFrame([payload] if isinstance(payload, dict) else payload)
        return frame.to_csv(index=False).rstrip("\n")
    return "\n".join(lines)


def header_line() -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# knowbal {__version__} {stamp}"


#######################################
# SUBCOMMANDS
#######################################


def cmd_enumerate(cfg: CliConfig) -> Tuple[int, str]:
    shape = SystemShape(cfg.systems)
    catalog = cfg.store().load_or_build(shape, include_mixed=cfg.mixed)
    counts = catalog.counts()
    pure = catalog.pure_states()
    kinds = [correlation_type(s) for s in pure]
    forms = {k: kinds.count(k) for k in FORM_ORDER if k in kinds}
    breakdown = " + ".join(f"{n} {k.replace('perfectly-', '')}" for k, n in forms.items())
    lines = [f"systems: {cfg.systems}", f"pure: {len(pure)}" + (f" ({breakdown})" if len(forms) > 1 else "")]
    lines += [f"size {size}: {n}" for size, n in counts.items() if size != shape.pure_size]
    lines.append(f"total: {len(catalog)}")
    payload = {"n_systems": cfg.systems, "counts": counts, "pure_forms": forms, "total": len(catalog)}
    frame = pd.DataFrame({"size": list(counts), "count": list(counts.values())})
    return EXIT_OK, render(cfg, lines, payload, frame)


def cmd_check(cfg: CliConfig) -> Tuple[int, str]:
    state = parse_state_literal(cfg.target)
    verdict = explain(state)
    if verdict.valid:
        text = f"valid: {state}"
    else:
        text = f"invalid ({verdict.rule}): {verdict.detail}"
    payload = {"state": str(state), "valid": verdict.valid, "rule": verdict.rule, "detail": verdict.detail}
    return (EXIT_OK if verdict.valid else EXIT_FAILED), render(cfg, [text], payload)


def cmd_group(cfg: CliConfig) -> Tuple[int, str]:
    shape = SystemShape(cfg.systems)
    if shape.n_systems > 2:
        raise UnsupportedShapeError("group enumeration supports at most 2 systems")
    store = cfg.store()
    catalog = store.load_or_build(shape)
    if shape.n_systems == 1:
        names = ("(12)", "(1234)")
        gens = (from_cycles("(12)"), from_cycles("(1234)"))
    else:
        names, gens = zip(*standard_generators(shape))
    generated = closure(gens, catalog, names)
    full = allowed_group(store, shape, catalog) if shape.n_systems == 2 else generated
    lines = [
        f"systems: {cfg.systems}",
        f"generators: {', '.join(names)}",
        f"closure order: {generated.order}",
        f"allowed order: {full.order}",
        f"closure index: {full.order // generated.order}",
    ]
    payload = {"n_systems": cfg.systems, "generators": list(names), "closure_order": generated.order,
               "allowed_order": full.order}
    return EXIT_OK, render(cfg, lines, payload)


def cmd_measurements(cfg: CliConfig) -> Tuple[int, str]:
    shape = SystemShape(cfg.systems)
    catalog = cfg.store().load_or_build(shape)
    maximal = enumerate_maximal(shape, catalog)
    if cfg.output:
        save_measurements(maximal, cfg.output, shape)
    rows = [{"name": m.name, "kind": classify(m), "outcomes": " | ".join(str(o) for o in m.outcomes)}
            for m in maximal]
    lines = [f"maximal measurements: {len(maximal)}"] + [f"{r['name']} [{r['kind']}] {r['outcomes']}" for r in rows]
    return EXIT_OK, render(cfg, lines, rows, pd.DataFrame(rows))


def cmd_mups(cfg: CliConfig) -> Tuple[int, str]:
    shape = SystemShape(cfg.systems)
    catalog = cfg.store().load_or_build(shape)
    maximal = enumerate_maximal(shape, catalog)
    size = cfg.size or max_mup_size(shape, catalog, maximal)
    sets = find_mup_sets(shape, size, catalog, exhaustive=cfg.exhaustive, measurements=maximal)
    rows = [{"measurements": ",".join(m.name for m in s.measurements),
             "fidelity_squared": str(s.common_fidelity_squared)} for s in sets]
    lines = [f"size {size}: {len(sets)} set(s)" + ("" if cfg.exhaustive else " (first match only)")]
    lines += [f"{r['measurements']} F²={r['fidelity_squared']}" for r in rows]
    payload = {"n_systems": cfg.systems, "size": size, "sets": rows}
    return EXIT_OK, render(cfg, lines, payload, pd.DataFrame(rows, columns=["measurements", "fidelity_squared"]))


def cmd_protocol(cfg: CliConfig) -> Tuple[int, str]:
    names = None if cfg.target == "all" else [cfg.target]
    ctx = ProtocolContext(cfg.store(), cfg.run_config())
    reports = run_suite(ctx, names)
    passed = all(r.passed for r in reports)
    lines = [r.to_text() for r in reports]
    lines.append(f"{sum(r.passed for r in reports)}/{len(reports)} protocols passed")
    payload = [r.model_dump() for r in reports]
    frame = pd.DataFrame(
        [{"protocol": r.name, **c.model_dump()} for r in reports for c in r.checks],
        columns=["protocol", "description", "expected", "observed", "passed"],
    )
    return (EXIT_OK if passed else EXIT_FAILED), render(cfg, lines, payload, frame)


def cmd_run(cfg: CliConfig) -> Tuple[int, str]:
    program = parse(Path(cfg.target).read_text(encoding="utf-8"))
    store = cfg.store()
    catalogs = {n: store.load_or_build(SystemShape(n)) for n in range(1, min(program.n_systems, 2) + 1)}
    report = execute(program, cfg.mode, cfg.run_config(), catalogs)
    lines = [f"mode: {report.mode}, systems: {report.n_systems}"]
    for c in report.checks:
        mark = "ok " if c.passed else "BAD"
        lines.append(f"  [{mark}] {c.description}: expected {c.expected}, observed {c.observed}")
    lines.append("PASS" if report.passed else "FAIL")
    frame = pd.DataFrame([c.model_dump() for c in report.checks],
                         columns=["description", "expected", "observed", "passed"])
    return (EXIT_OK if report.passed else EXIT_FAILED), render(cfg, lines, report.model_dump(), frame)


def correlation_frame(kind: str) -> pd.DataFrame:
    """Same-measurement correlation table: toy relations, Bell states, or both side by side."""
    toy = pd.DataFrame(toy_correlation_rows())
    toy["parity"] = toy["parity"].map({0: "even", 1: "odd"})
    quantum = bell_table().reset_index()
    quantum["parity"] = quantum["parity"].map({0: "even", 1: "odd"})
    if kind == "toy":
        return toy
    if kind == "quantum":
        return quantum
    left = quantum.add_prefix("quantum_")
    right = toy.add_prefix("toy_")
    return pd.concat([left, right], axis=1)


def cmd_table(cfg: CliConfig) -> Tuple[int, str]:
    frame = correlation_frame(cfg.target)
    return EXIT_OK, render(cfg, [frame.to_string(index=False)], frame.to_dict(orient="records"), frame)


COMMANDS = {
    "enumerate": cmd_enumerate,
    "check": cmd_check,
    "group": cmd_group,
    "measurements": cmd_measurements,
    "mups": cmd_mups,
    "protocol": cmd_protocol,
    "run": cmd_run,
    "table": cmd_table,
}


#######################################
# PARSER
#######################################


def build_parser(settings: Optional[KnowbalSettings] = None) -> argparse.ArgumentParser:
    settings = settings or get_settings()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.SEED, help="Monte Carlo seed")
    common.add_argument("--trials", type=int, default=settings.TRIALS, help="Monte Carlo trials")
    common.add_argument("--format", choices=["text", "json", "csv"], default=settings.OUTPUT_FORMAT)
    common.add_argument("--cache-dir", default=settings.CACHE_DIR, help="Catalog and group cache")
    common.add_argument("--offline", action="store_true", default=settings.OFFLINE,
                        help="Fail instead of building missing cache entries")
    common.add_argument("--no-header", action="store_true", help="Omit the timestamped header line")
    common.add_argument("--update-rule", choices=["max-fidelity", "outcome-base"], default=settings.UPDATE_RULE)
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")

    systems = argparse.ArgumentParser(add_help=False)
    systems.add_argument("--systems", type=int, default=1, help="Number of elementary systems")

    parser = argparse.ArgumentParser(prog="knowbal", description="Knowledge-balance toy theory toolkit")
    parser.add_argument("--version", action="version", version=f"knowbal {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sp = subparsers.add_parser("enumerate", parents=[common, systems], help="Build and count valid states")
    sp.add_argument("--mixed", action="store_true", help="Include three-system mixed sizes")

    sp = subparsers.add_parser("check", parents=[common], help="Validity verdict for a state literal")
    sp.add_argument("target", metavar="STATE", help='e.g. "(1,1)|(2,2)|(3,3)|(4,4)"')

    subparsers.add_parser("group", parents=[common, systems], help="Allowed transformation group")

    sp = subparsers.add_parser("measurements", parents=[common, systems], help="Maximal measurements")
    sp.add_argument("--output", help="Write the measurements as line records")

    sp = subparsers.add_parser("mups", parents=[common, systems], help="Mutually unbiased partitionings")
    sp.add_argument("--size", type=int, help="Set size (defaults to the largest that exists)")
    sp.add_argument("--exhaustive", action="store_true", help="List every set instead of the first")

    sp = subparsers.add_parser("protocol", parents=[common], help="Run self-checking protocols")
    sp.add_argument("target", metavar="NAME", choices=sorted(PROTOCOLS) + ["all"])

    sp = subparsers.add_parser("run", parents=[common], help="Execute a toy program")
    sp.add_argument("target", metavar="SCRIPT")
    sp.add_argument("--mode", choices=["epistemic", "monte-carlo"], default="epistemic")

    sp = subparsers.add_parser("table", parents=[common], help="Same-measurement correlation tables")
    sp.add_argument("target", metavar="KIND", choices=["toy", "quantum", "diff"])
    return parser


def dispatch(cfg: CliConfig) -> Tuple[int, str]:
    """Run one subcommand; returns the exit status and the rendered output."""
    handler = COMMANDS.get(cfg.command)
    if handler is None:
        raise KnowbalError(f"unknown subcommand {cfg.command!r}")
    return handler(cfg)


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)
    cfg = CliConfig.from_args(args)
    configure_logging("DEBUG" if cfg.verbose else settings.LOG_LEVEL, json=settings.LOG_JSON)
    logger.debug("cli_invoked", command=cfg.command, systems=cfg.systems, seed=cfg.seed)

    try:
        status, output = dispatch(cfg)
    except (KnowbalError, ValueError, OSError) as e:
        logger.error("command_failed", command=cfg.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    if cfg.header and cfg.output_format != "json":
        print(header_line())
    print(output)
    return status


if __name__ == "__main__":
    sys.exit(main())
