"""Command-line pipeline: analyze, backtest, simulate, report.

Exit status is 0 on success, 1 on configuration errors and 2 on data errors.
Every output is computed in memory first and then written atomically, so a
failing run leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from . import evaluation as ev
from .errors import ConfigError, DataError, DomainError
from .gvar import as_alpha, parse_trace_csv, run_alm_gvar, trace_to_csv
from .market_data import ABNORMAL_THRESHOLD, label_events, log_returns, read_price_csv
from .signals import (
    Indicator,
    ThresholdConfig,
    corroborate,
    get_preset,
    gvar_signals,
    mean_signals,
    signals_to_csv,
    signals_to_json,
    volatility_signals,
    with_overrides,
)
from .synthetic import RegimeModel, convergence_experiment, prop41_experiment
from .uncertainty import BlockConfig, rolling_uncertainty

log = logging.getLogger("almgvar")


@dataclass
class SeriesConfig:
    name: str
    path: Path | None = None
    trace: Path | None = None
    preset: str | None = None
    date_column: str = "date"
    close_column: str = "close"
    delimiter: str = ","
    date_format: str | None = None
    block: BlockConfig | None = None
    thresholds: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    series: list
    alpha: Fraction = Fraction(1, 20)
    horizon: int = 2
    stride: int = 2
    steps: tuple = (1, 1)
    n0_bounds: tuple | None = None
    eval_horizon: int = 1
    event_threshold: float = ABNORMAL_THRESHOLD
    corroboration_window: int = 3
    output: Path = Path("output")
    simulate: dict = field(default_factory=dict)


def _get(d: dict, key, default, kind):
    val = d.get(key, default)
    if val is None:
        return None
    try:
        return kind(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r}: expected {kind.__name__}, got {val!r}") from None


def load_config(path, overrides: argparse.Namespace | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    base = path.parent

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    cli_preset = getattr(overrides, "preset", None)
    series = []
    for i, entry in enumerate(raw.get("series") or []):
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"series[{i}] needs at least a 'name'")
        preset = entry.get("preset") or cli_preset
        if preset is not None:
            get_preset(preset)
        block = None
        if "block" in entry:
            b = entry["block"] or {}
            try:
                block = BlockConfig(int(b["n0"]), int(b["n1"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"series[{i}].block: {exc}") from None
        if entry.get("path") is None and entry.get("trace") is None:
            raise ConfigError(f"series[{i}] needs 'path' or 'trace'")
        series.append(SeriesConfig(
            name=str(entry["name"]),
            path=resolve(entry.get("path")),
            trace=resolve(entry.get("trace")),
            preset=preset,
            date_column=entry.get("date_column", "date"),
            close_column=entry.get("close_column", "close"),
            delimiter=entry.get("delimiter", ","),
            date_format=entry.get("date_format"),
            block=block,
            thresholds=dict(entry.get("thresholds") or {}),
        ))

    sampling = raw.get("sampling") or {}
    alm = raw.get("alm") or {}
    evaluation = raw.get("evaluation") or {}
    alpha = raw.get("alpha", "1/20")
    if overrides is not None and getattr(overrides, "alpha", None) is not None:
        alpha = overrides.alpha
    try:
        alpha = as_alpha(str(alpha) if not isinstance(alpha, float) else alpha)
    except (ValueError, ZeroDivisionError, DomainError) as exc:
        raise ConfigError(f"alpha: {exc}") from None

    n0_bounds = None
    if "n0_min" in alm or "n0_max" in alm:
        n0_bounds = (_get(alm, "n0_min", 4, int), _get(alm, "n0_max", 250, int))
    cfg = RunConfig(
        series=series,
        alpha=alpha,
        horizon=_get(sampling, "horizon", 2, int),
        stride=_get(sampling, "stride", 2, int),
        steps=(_get(alm, "w0", 1, int), _get(alm, "w1", 1, int)),
        n0_bounds=n0_bounds,
        eval_horizon=_get(evaluation, "horizon", 1, int),
        event_threshold=_get(evaluation, "event_threshold", ABNORMAL_THRESHOLD, float),
        corroboration_window=_get(evaluation, "corroboration_window", 3, int),
        output=resolve(raw.get("output", "output")),
        simulate=dict(raw.get("simulate") or {}),
    )
    if overrides is not None and getattr(overrides, "output", None):
        cfg.output = Path(overrides.output)
    if overrides is not None and getattr(overrides, "seed", None) is not None:
        cfg.simulate["seed"] = overrides.seed
    if cfg.horizon < 1 or cfg.stride < 1 or min(cfg.steps) < 1 or cfg.eval_horizon < 0:
        raise ConfigError("sampling/alm/evaluation values must be positive")
    return cfg


def write_outputs(outdir: Path, files: dict) -> list:
    """Write ``{name: text}`` into ``outdir``, each file via temp-then-rename."""
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        target = outdir / name
        fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        written.append(target)
    return written


def _dump(obj) -> str:
    return ev.reports_to_json(obj) + "\n"


def _resolve_series(sc: SeriesConfig):
    preset = get_preset(sc.preset) if sc.preset else None
    block = sc.block or (preset.block if preset else None)
    if block is None:
        raise ConfigError(f"series {sc.name!r}: no preset, so 'block' (n0, n1) is required")
    if preset is None and not sc.thresholds:
        raise ConfigError(f"series {sc.name!r}: unknown index needs explicit thresholds or a preset")
    try:
        # YAML 1.1 reads "1.0e9" as a string, so coerce explicitly
        values = {k: float(v) for k, v in sc.thresholds.items()}
        if preset is not None:
            thresholds = with_overrides(preset.thresholds, **values)
        else:
            thresholds = ThresholdConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"series {sc.name!r} thresholds: {exc}") from None
    return block, thresholds


def analyze_series(sc: SeriesConfig, cfg: RunConfig) -> dict:
    """Full pipeline for one price file; returns the in-memory results."""
    block, thresholds = _resolve_series(sc)
    if sc.path is None:
        raise ConfigError(f"series {sc.name!r} has no price 'path'")
    try:
        prices = read_price_csv(
            sc.path, date_column=sc.date_column, close_column=sc.close_column,
            delimiter=sc.delimiter, date_format=sc.date_format,
        )
    except FileNotFoundError:
        raise DataError(f"input file not found: {sc.path}") from None
    returns = log_returns(prices, cfg.horizon, cfg.stride)
    unc = rolling_uncertainty(returns, block)
    gseries, state = run_alm_gvar(returns, cfg.alpha, block, cfg.steps, cfg.n0_bounds)
    msig = mean_signals(unc, thresholds)
    vsig = volatility_signals(unc, thresholds)
    gsig = gvar_signals(gseries, thresholds)
    merged = corroborate(msig, vsig, gsig, window=cfg.corroboration_window)
    all_signals = sorted(msig + vsig + gsig, key=lambda s: (s.index, list(Indicator).index(s.indicator)))
    labels = label_events(returns, cfg.event_threshold)
    return {
        "name": sc.name, "block": block, "thresholds": thresholds, "returns": returns,
        "uncertainty": unc, "gvar": gseries, "state": state, "signals": all_signals,
        "corroborated": merged, "labels": labels,
    }


def _run_all(cfg: RunConfig, fn):
    if not cfg.series:
        raise ConfigError("config lists no series")
    with ThreadPoolExecutor() as pool:
        return list(pool.map(lambda sc: fn(sc, cfg), cfg.series))


def cmd_analyze(cfg: RunConfig) -> list:
    results = _run_all(cfg, analyze_series)
    files = {}
    summary = {}
    for r in results:
        n = r["name"]
        files[f"{n}_returns.csv"] = r["returns"].to_csv()
        files[f"{n}_uncertainty.csv"] = r["uncertainty"].to_csv()
        files[f"{n}_gvar.csv"] = trace_to_csv(r["state"].trace)
        files[f"{n}_signals.csv"] = signals_to_csv(r["signals"], r["corroborated"])
        files[f"{n}_signals.json"] = signals_to_json(r["signals"], r["corroborated"]) + "\n"
        state = r["state"]
        summary[n] = {
            "n_returns": len(r["returns"]),
            "abnormal_events": r["labels"].count,
            "block": {"n0": r["block"].n0, "n1": r["block"].n1},
            "final_block": {"n0": state.cfg.n0, "n1": state.cfg.n1},
            "violations": state.violations,
            "scored": state.t,
            "signals": {ind.value: sum(s.indicator is ind for s in r["signals"]) for ind in Indicator},
            "crisis_dates": [str(c.date) for c in r["corroborated"] if c.crisis_flag],
        }
    files["analyze_summary.json"] = _dump(summary)
    return write_outputs(cfg.output, files)


def _evaluate_families(r: dict, horizon: int) -> dict:
    out = {}
    groups = {ind.value: [s for s in r["signals"] if s.indicator is ind] for ind in Indicator}
    for fam in ("mean", "volatility", "gvar"):
        groups[fam] = [s for s in r["signals"] if s.indicator.family == fam]
    for key, sigs in groups.items():
        out[key] = ev.evaluate_signals(sigs, r["labels"], horizon)
    return out


def backtest_series(sc: SeriesConfig, cfg: RunConfig) -> dict:
    if sc.trace is not None:
        try:
            rows = parse_trace_csv(sc.trace.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"trace file not found: {sc.trace}") from None
        except (KeyError, ValueError) as exc:
            raise DataError(f"malformed trace {sc.trace}: {exc}") from None
        flags = [row["violated"] for row in rows]
        return {"name": sc.name, "backtest": ev.backtest(flags, cfg.alpha), "evaluation": {}}
    r = analyze_series(sc, cfg)
    flags = [rec.violated for rec in r["state"].trace]
    return {
        "name": sc.name,
        "backtest": ev.backtest(flags, cfg.alpha),
        "evaluation": _evaluate_families(r, cfg.eval_horizon),
    }


def cmd_backtest(cfg: RunConfig) -> list:
    results = _run_all(cfg, backtest_series)
    files = {}
    table = {}
    for r in results:
        table[r["name"]] = r["backtest"]
        files[f"{r['name']}_backtest.json"] = _dump({
            "backtest": r["backtest"], "evaluation": r["evaluation"],
            "matching_horizon": cfg.eval_horizon,
        })
    files["backtest_table.csv"] = ev.backtest_table(table)
    return write_outputs(cfg.output, files)


def cmd_simulate(cfg: RunConfig) -> list:
    sim = cfg.simulate
    try:
        seed = int(sim.get("seed", 0))
        n_seeds = int(sim.get("seeds", 1))
        sigmas = tuple(float(s) for s in sim.get("sigmas", (0.01, 0.03)))
        regime_len = int(sim.get("regime_len", 50))
        length = int(sim.get("length", 5000))
        mu = float(sim.get("mu", 0.0))
        block = BlockConfig(int(sim.get("n0", 20)), int(sim.get("n1", 8)))
        reps = int(sim.get("replications", 10_000))
        burn = int(sim.get("burn", 2000))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulate: {exc}") from None

    files = {}
    base = RegimeModel.alternating(sigmas, regime_len, length, mu=mu, seed=seed)
    # window straddling the first regime boundary
    end = min(regime_len + block.n0 // 2, base.length - 1)
    prop = prop41_experiment(base, block, cfg.steps, reps, end=end)
    files["prop41.json"] = _dump(prop.as_dict())

    runs = []
    for k in range(n_seeds):
        model = RegimeModel.alternating(sigmas, regime_len, length, mu=mu, seed=seed + k)
        report, trace = convergence_experiment(model, cfg.alpha, block, cfg.steps, burn)
        files[f"convergence_seed{model.seed}.csv"] = trace_to_csv(trace)
        runs.append(report.summary())
    within = [r["max_deviation_after_burn"] <= 0.01 for r in runs]
    files["convergence.json"] = _dump({
        "runs": runs,
        "fraction_within_0.01": sum(within) / len(within),
        "alpha": float(cfg.alpha),
    })
    return write_outputs(cfg.output, files)


def cmd_report(cfg: RunConfig) -> list:
    reports = {}
    for sc in cfg.series:
        p = cfg.output / f"{sc.name}_backtest.json"
        if not p.exists():
            raise DataError(f"{p} missing; run 'backtest' first")
        d = json.loads(p.read_text(encoding="utf-8"))["backtest"]
        reports[sc.name] = ev.BacktestReport(**d)
    table = ev.backtest_table(reports)
    sys.stdout.write(table)
    return write_outputs(cfg.output, {"report.csv": table})


COMMANDS = {"analyze": cmd_analyze, "backtest": cmd_backtest, "simulate": cmd_simulate, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="almgvar", description=__doc__.splitlines()[0])
    p.add_argument("--print-preset", metavar="NAME", help="print a built-in index preset and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--output", type=Path)
        sp.add_argument("--preset")
        sp.add_argument("--alpha", help="risk level as a rational, e.g. 1/20")
        sp.add_argument("--seed", type=int)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.print_preset:
        try:
            print(json.dumps(get_preset(args.print_preset).as_dict(), indent=2))
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config, args)
        written = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
