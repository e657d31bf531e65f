"""Command-line front end.

Exit status: 0 success, 1 inequality violation, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, CutoffLabError
from .experiments import (FAMILIES, SIMULATED, Scenario, initial_law, resolve_steps,
                          run_scenario, write_reports)
from .measures import IsotropicGaussian
from .potentials import logcosh, quadratic
from .samplers import OracleStats, ProxSamplerConfig, lmc_run, prox_sampler_run, sample_ensemble
from .suites import SUITE_DEFAULTS, run_suites, summarize

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("cutofflab")

# scenario used when a subcommand runs without --scenario
PRESETS = {
    "mixing": ("mean-shift", "ou-mean-shift", {"a": 1.0, "d": 1_000_000}, (0.25, 0.75)),
    "cutoff": ("mean-shift-sweep", "ou-mean-shift",
               {"d_list": " ".join(f"1e{k}" for k in range(2, 13))}, (0.25,)),
    "sample": ("prox-gaussian", "prox-gaussian", {"k_steps": 10}, (0.25,)),
    "check-inequalities": ("default-suite", None, {}, (0.25,)),
}


@dataclass
class CliConfig:
    subcommand: str
    scenario_path: Optional[Path]
    overrides: list = field(default_factory=list)
    seed: Optional[int] = None
    out_dir: Path = Path("cutofflab-out")
    threads: int = 1
    verbosity: int = 0


def _parse_overrides(items: Sequence[str]) -> list[tuple[str, str]]:
    out = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out.append((key.strip(), value.strip()))
    return out


def load_config(cfg: CliConfig):
    """Resolve the scenario (or suite settings) from the preset, file and overrides.

    Returns ``(Scenario or None, suite settings dict)``.
    """
    name, family, params, eps = PRESETS[cfg.subcommand]
    params, seed, suite = dict(params), 0, dict(SUITE_DEFAULTS)
    eps = ", ".join(map(str, eps))
    if cfg.scenario_path is not None:
        if not cfg.scenario_path.is_file():
            raise ConfigError(f"scenario file not found: {cfg.scenario_path}")
        ini = configparser.ConfigParser(interpolation=None)
        try:
            ini.read(cfg.scenario_path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {cfg.scenario_path}: {exc}") from None
        extra = set(ini.sections()) - {"scenario", "parameters", "suite"}
        if extra:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
        if ini.has_section("scenario"):
            sc = dict(ini["scenario"])
            bad = set(sc) - {"name", "family", "seed", "eps"}
            if bad:
                raise ConfigError(f"unknown [scenario] key(s): {', '.join(sorted(bad))}")
            if "family" in sc and sc["family"] != family:
                family, params = sc["family"], {}
            name = sc.get("name", name)
            seed = sc.get("seed", seed)
            eps = sc.get("eps", eps)
        if ini.has_section("parameters"):
            params.update(ini["parameters"])
        if ini.has_section("suite"):
            suite.update(ini["suite"])

    for key, value in cfg.overrides:
        if key == "family":
            family, params = value, {}
        elif key == "name":
            name = value
        elif key == "seed":
            seed = value
        elif key == "eps":
            eps = value
        elif family is None and key in suite:
            suite[key] = value
        elif family is not None and key in FAMILIES.get(family, {}):
            params[key] = value
        else:
            raise ConfigError(f"unknown key {key!r}")
    if cfg.seed is not None:
        seed = cfg.seed
    try:
        seed = int(seed)
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None

    suite = _coerce_suite(suite)
    if family is None:
        return None, {**suite, "seed": seed}
    return Scenario(name, family, params, seed=seed, eps=eps), suite


def _coerce_suite(raw: dict) -> dict:
    unknown = set(raw) - set(SUITE_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown [suite] key(s): {', '.join(sorted(unknown))}")
    out = {}
    for k, default in SUITE_DEFAULTS.items():
        v = raw[k]
        try:
            out[k] = type(default)(float(v) if isinstance(default, int) else v)
        except ValueError:
            raise ConfigError(f"suite key {k!r}: cannot parse {v!r}") from None
    return out


def _table(header: Sequence[str], rows) -> str:
    cells = [list(map(str, header))] + [[_cell(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}" if math.isfinite(v) else str(v)
    return str(v)


# --------------------------------------------------------------------------- #
# subcommands


def cmd_check_inequalities(cfg: CliConfig) -> int:
    _, suite = load_config(cfg)
    seed = suite.pop("seed")
    try:
        results = run_suites(seed=seed, threads=cfg.threads, **suite)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    rows = summarize(results)
    print(_table(("suite", "instances", "min_slack", "vacuous", "violations"), rows))
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir) / "check-inequalities"
        out.mkdir(parents=True, exist_ok=True)
        write_reports(out / "inequalities.csv", [r for reps in results.values() for r in reps])
    bad = sum(r.violations for r in rows)
    if bad:
        print(f"{bad} violation(s)")
        return EXIT_VIOLATION
    return EXIT_OK


def _run(cfg: CliConfig, sc: Scenario):
    out = Path(cfg.out_dir) / sc.name
    man = run_scenario(sc, out, threads=cfg.threads)
    log.info("artifacts written to %s", out)
    return man


def _finish(man) -> int:
    for r in man.violations:
        print(f"VIOLATED {r.name}: lhs={r.lhs!r} rhs={r.rhs!r}")
    return EXIT_OK if man.ok else EXIT_VIOLATION


def cmd_mixing(cfg: CliConfig) -> int:
    sc, _ = load_config(cfg)
    if sc.family == "ou-mean-shift" and sc.d_list:
        raise ConfigError("d_list is a sweep setting; use the cutoff subcommand")
    man = _run(cfg, sc)
    tmix = dict(zip(sc.thresholds, man.table))
    rows = []
    for e in sc.thresholds:
        window = tmix[e] - tmix[round(1 - e, 15)] if e < 0.5 else ""
        rows.append((e, tmix[e], window))
    print(_table(("eps", "t_mix", "window"), rows))
    return _finish(man)


def cmd_cutoff(cfg: CliConfig) -> int:
    sc, _ = load_config(cfg)
    if sc.family != "ou-mean-shift" or not sc.d_list:
        raise ConfigError("cutoff needs the ou-mean-shift family with a nonempty d_list")
    man = _run(cfg, sc)
    print(_table(("d", "t_mix(eps)", "t_mix(1-eps)", "ratio", "window", "window_bound",
                  "product_ratio"), man.table))
    return _finish(man)


def cmd_sample(cfg: CliConfig) -> int:
    """Run chains and stream per-step ensemble statistics."""
    sc, _ = load_config(cfg)
    if sc.family not in SIMULATED:
        raise ConfigError(f"sample needs one of {', '.join(SIMULATED)}")
    p = sc.params
    k_steps = resolve_steps(sc)
    ens = sample_ensemble(initial_law(p), p["chains"], sc.seed)
    stats = OracleStats()
    print("step,mean,variance,acceptance_rate")

    def emit(step, pts):
        rate = stats.acceptance_rate if stats.proposals else math.nan
        print(f"{step},{float(np.mean(pts))!r},{float(np.var(pts, axis=0, ddof=1).mean())!r},"
              f"{rate!r}")

    emit(0, ens.points)
    if sc.family == "lmc-gaussian":
        lmc_run(ens, quadratic(p["sigma2"], p["d"]), p["h"], k_steps, threads=cfg.threads,
                callback=emit)
    else:
        if sc.family == "prox-gaussian":
            pc = ProxSamplerConfig(p["h"], IsotropicGaussian.standard(p["d"], p["sigma2"]),
                                   oracle=p["oracle"])
        else:
            pc = ProxSamplerConfig(p["h"], logcosh(p["d"]), oracle="rejection")
        prox_sampler_run(ens, pc, k_steps, threads=cfg.threads, stats=stats, callback=emit)
    return EXIT_OK


COMMANDS = {
    "check-inequalities": cmd_check_inequalities,
    "mixing": cmd_mixing,
    "cutoff": cmd_cutoff,
    "sample": cmd_sample,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="INI file with [scenario], [parameters], "
                        "[suite] sections")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a scenario key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output root (default $CUTOFFLAB_OUT or "
                        "./cutofflab-out)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    verb = common.add_mutually_exclusive_group()
    verb.add_argument("--quiet", action="store_true")
    verb.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="cutofflab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "check-inequalities": "run the randomized inequality suites",
        "mixing": "TV profile, mixing times and window of one scenario",
        "cutoff": "cutoff-ratio sweep over dimensions",
        "sample": "run chains and stream ensemble statistics",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = CliConfig(args.subcommand, args.scenario, _parse_overrides(args.overrides),
                        args.seed, args.out or Path(os.environ.get("CUTOFFLAB_OUT",
                                                                   "cutofflab-out")),
                        args.threads, -1 if args.quiet else 1 if args.verbose else 0)
        return COMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"cutofflab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CutoffLabError as exc:
        print(f"cutofflab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
