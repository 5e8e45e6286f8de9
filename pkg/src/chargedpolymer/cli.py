"""Command-line surface: configure, run, persist, summarize experiments.

Subcommands
-----------
run <config.ini> [--seed S] [--workers W] [--out DIR]
    Execute one experiment; write results.json (reports, values,
    provenance), optionally samples.csv, a gnuplot script, and charge
    environment exports.  Exit 0 when all gated checks pass, 2 on a gated
    failure, 1 on a configuration error.

summarize <dir>
    One line per results.json found under <dir>; exit 1 only when no file
    parses.

oracle <walk-spec> --max-m M [--out DIR]
    Tabulate return probabilities and variance formulas for a walk such
    as ``srw:d=3`` or ``lazy_srw:d=2:lazy=0.5``.

Config files are flat INI: an [experiment] section (keys below), an
optional [tolerances] section of numeric overrides, and an optional
[output] section (directory, samples_csv, export_environment).  The
worker count is a runtime flag and never enters results or hashes.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .charges import ChargeEnvironment
from .experiments import (ConfigError, ExperimentConfig, ExperimentResult,
                          run_experiment, validate_config)
from .oracles import return_probabilities, cached_table
from .walks import make_step_law

_EXPERIMENT_KEYS = {
    "kind": ("experiment", str),
    "d": ("d", int),
    "walk": ("walk_kind", str),
    "lazy_weight": ("lazy_weight", float),
    "n": ("n", int),
    "replicas": ("replicas", int),
    "t_grid": ("t_grid", "floats"),
    "charge": ("charge_kind", str),
    "gamma": ("gamma", float),
    "beta": ("beta", float),
    "alpha": ("alpha", float),
    "master_seed": ("master_seed", int),
    "env_seeds": ("env_seeds", "ints"),
    "n_grid": ("n_grid", "ints"),
    "max_m": ("max_m", int),
}


def _parse_list(raw: str, conv):
    items = [s.strip() for s in raw.replace(";", ",").split(",")]
    return tuple(conv(s) for s in items if s)


def load_config(path) -> tuple:
    """Parse an INI config; returns (ExperimentConfig, output options)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!s} is unreadable or missing")
    if "experiment" not in parser:
        raise ConfigError("config must contain an [experiment] section")
    kwargs = {}
    for key, raw in parser["experiment"].items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(
                f"unknown key {key!r} in [experiment]; known keys: "
                f"{sorted(_EXPERIMENT_KEYS)}")
        field, conv = _EXPERIMENT_KEYS[key]
        try:
            if conv == "floats":
                kwargs[field] = _parse_list(raw, float)
            elif conv == "ints":
                kwargs[field] = _parse_list(raw, int)
            else:
                kwargs[field] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key}={raw!r}: {exc}") from exc
    if "kind" not in parser["experiment"]:
        raise ConfigError("missing required key 'kind' in [experiment]")
    tolerances = {}
    if "tolerances" in parser:
        for key, raw in parser["tolerances"].items():
            try:
                tolerances[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"tolerance {key}={raw!r} is not numeric") from exc
    kwargs["tolerances"] = tolerances
    output = {"directory": "results", "samples_csv": False,
              "export_environment": False}
    if "output" in parser:
        sec = parser["output"]
        output["directory"] = sec.get("directory", output["directory"])
        for flag in ("samples_csv", "export_environment"):
            if flag in sec:
                try:
                    output[flag] = sec.getboolean(flag)
                except ValueError as exc:
                    raise ConfigError(
                        f"output.{flag}={sec[flag]!r} is not boolean") from exc
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, output


def config_fingerprint(cfg: ExperimentConfig) -> tuple:
    """(canonical dict, sha256 hex); the worker count never participates."""
    record = {
        "experiment": cfg.experiment, "d": cfg.d,
        "walk": cfg.walk_kind, "lazy_weight": cfg.lazy_weight,
        "n": cfg.n, "replicas": cfg.replicas,
        "t_grid": list(cfg.t_grid), "charge": cfg.charge_kind,
        "gamma": cfg.gamma, "beta": cfg.beta, "alpha": cfg.alpha,
        "master_seed": cfg.master_seed, "env_seeds": list(cfg.env_seeds),
        "n_grid": list(cfg.n_grid), "max_m": cfg.max_m,
        "tolerances": dict(sorted(cfg.tolerances.items())),
    }
    canonical = json.dumps(record, sort_keys=True)
    return record, hashlib.sha256(canonical.encode()).hexdigest()


_PLOT_TEMPLATE = """\
# gnuplot script; run as: gnuplot plot.gp
set datafile separator ','
set key autotitle columnhead
set xlabel 'checkpoint time'
set ylabel 'normalized energy'
plot 'samples.csv' using 2:3 with points pointtype 7 pointsize 0.2
"""


def _write_artifacts(result: ExperimentResult, cfg: ExperimentConfig,
                     output: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    record, digest = config_fingerprint(cfg)
    payload = {
        "artifact_version": __version__,
        "config": record,
        "config_hash": digest,
        "master_seed": cfg.master_seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "verdict": "PASS" if result.gated_pass else "FAIL",
    }
    payload.update(result.to_dict())
    results_path = out_dir / "results.json"
    with open(results_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if output.get("samples_csv") and result.sample_rows:
        with open(out_dir / "samples.csv", "w") as fh:
            fh.write("replica,checkpoint_time,value\n")
            for replica, t, value in result.sample_rows:
                fh.write(f"{replica},{t},{value!r}\n")
        with open(out_dir / "plot.gp", "w") as fh:
            fh.write(_PLOT_TEMPLATE)
    if output.get("export_environment"):
        for seed in cfg.env_seeds:
            env = ChargeEnvironment(law=cfg.charge_law(), seed=seed)
            env.charges(cfg.n)
            env.export_csv(out_dir / f"environment_{seed}.csv")
    return results_path


def cmd_run(args) -> int:
    try:
        cfg, output = load_config(args.config)
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        validate_config(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    result = run_experiment(cfg)
    out_dir = Path(args.out) if args.out else Path(output["directory"])
    results_path = _write_artifacts(result, cfg, output, out_dir)
    for rep in result.reports:
        verdict = {True: "PASS", False: "FAIL", None: "REPORT"}[rep.passed]
        extra = f" p={rep.p_value:.4g}" if rep.p_value is not None else ""
        print(f"[{verdict}] {rep.name}: {rep.statistic:.6g}{extra} "
              f"({rep.tolerance})")
    print(f"results written to {results_path}")
    print(f"verdict: {'PASS' if result.gated_pass else 'FAIL'}")
    return 0 if result.gated_pass else 2


def cmd_summarize(args) -> int:
    root = Path(args.directory)
    paths = sorted(set(root.glob("*.json")) | set(root.glob("**/results.json")))
    rows = []
    warnings = []
    for path in paths:
        try:
            with open(path) as fh:
                data = json.load(fh)
            cfgrec = data.get("config", {})
            key_stat = ""
            for rep in data.get("reports", []):
                if rep.get("passed") is not None:
                    key_stat = f"{rep['name']}={rep['statistic']:.5g}"
                    break
            rows.append((data.get("experiment", "?"),
                         str(cfgrec.get("n", "?")),
                         str(cfgrec.get("replicas", "?")),
                         key_stat, data.get("verdict", "?")))
        except (json.JSONDecodeError, OSError, KeyError, TypeError) as exc:
            warnings.append(f"warning: skipping {path}: {exc}")
    for msg in warnings:
        print(msg, file=sys.stderr)
    rows.sort()
    if rows:
        header = ("experiment", "n", "replicas", "key statistic", "verdict")
        widths = [max(len(header[i]), *(len(r[i]) for r in rows))
                  for i in range(5)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        print(fmt.format(*header))
        for row in rows:
            print(fmt.format(*row))
    return 0 if rows else 1


def parse_walk_spec(spec: str):
    parts = spec.split(":")
    kind = parts[0]
    d = 2
    lazy = 0.5
    for part in parts[1:]:
        key, _, val = part.partition("=")
        if key == "d":
            d = int(val)
        elif key == "lazy":
            lazy = float(val)
        else:
            raise ConfigError(f"unknown walk-spec field {key!r} in {spec!r}")
    return make_step_law(kind, d, lazy if kind == "lazy_srw" else 0.0)


def cmd_oracle(args) -> int:
    try:
        law = parse_walk_spec(args.walk_spec)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    table = cached_table(law, args.max_m) if law.kind != "custom" \
        else return_probabilities(law, args.max_m)
    summary = table.summary()
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table.to_csv(out / "return_probabilities.csv")
        table.to_json(out / "oracle_summary.json")
        print(f"oracle files written to {out}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chargedpolymer",
        description="Monte Carlo experiments and exact oracles for "
                    "charged-walk pair energies")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one configured experiment")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override master_seed")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker processes (never affects results)")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(fn=cmd_run)
    p_sum = sub.add_parser("summarize", help="tabulate a results directory")
    p_sum.add_argument("directory")
    p_sum.set_defaults(fn=cmd_summarize)
    p_or = sub.add_parser("oracle", help="print oracle values for a walk")
    p_or.add_argument("walk_spec")
    p_or.add_argument("--max-m", type=int, default=1000, dest="max_m")
    p_or.add_argument("--out", default=None)
    p_or.set_defaults(fn=cmd_oracle)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
