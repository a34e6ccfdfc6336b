"""Configuration, experiment orchestration, report files and the command line."""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import systems as S
from .estimators import (SCHEMA_VERSION, _finite, _map, cover_dimension_bound, grid_targets,
                         inequality_report, measure_buffer, dimension_estimate, slope_estimate,
                         slopes_to_csv, auto_grid_level)
from .hitting import (CENSORED, HittingProfile, RadiusSchedule, batch_hitting, profiles_to_csv)
from .numerics import InsufficientDataError
from .orbit import build_grid_index, generate_orbit, load_orbit, save_orbit

__all__ = [
    "ConfigError",
    "ExperimentError",
    "ExperimentConfig",
    "RunManifest",
    "load_config",
    "bundled_configs",
    "run_experiment",
    "parse_point",
    "main",
]

log = logging.getLogger("waitdim")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """An experiment configuration is malformed or violates a precondition."""


class ExperimentError(RuntimeError):
    """A module error raised while running a configuration, tagged with its path."""


_SYSTEM_KEYS = ("system", "angle", "exponent", "terms", "y0", "holder")
_KNOWN = set(_SYSTEM_KEYS) | {
    "n", "burn_in", "k_min", "k_max", "sources", "targets", "seed", "tolerance",
    "tail_fraction", "output", "measure_n", "workers", "cover_h", "cover_epsilon",
    "cover_d", "cover_k0", "cover_level", "name",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment; see ``configs/schema.txt`` for the file format."""

    system: dict
    n: int
    k_min: int
    k_max: int
    sources: int = 10
    targets: int = 10
    seed: int = 0
    tolerance: float = 0.15
    tail_fraction: float = 0.5
    burn_in: int | None = None
    measure_n: int | None = None
    output: str = "out"
    workers: int = 1
    cover_h: float = 0.5
    cover_epsilon: float = 0.1
    cover_d: float = 0.8
    cover_k0: int = 20
    cover_level: int | None = None
    name: str = ""
    path: str = field(default="", compare=False)

    def validate(self) -> "ExperimentConfig":
        where = self.path or "<config>"
        try:
            self.system_spec()
            RadiusSchedule(self.k_min, self.k_max)
        except (ValueError, KeyError) as e:
            raise ConfigError(f"{where}: {e}") from None
        checks = [
            (self.n >= 2, "n must be at least 2"),
            (self.sources >= 1 and self.targets >= 1, "sources and targets must be positive"),
            (0 < self.tail_fraction <= 1, "tail_fraction must lie in (0, 1]"),
            (self.tolerance >= 0, "tolerance must be nonnegative"),
            (self.burn_in is None or self.burn_in >= 0, "burn_in must be nonnegative"),
            (self.workers >= 1, "workers must be positive"),
            (self.cover_d > self.cover_h + self.cover_epsilon, "cover_d must exceed cover_h + cover_epsilon"),
            (self.cover_level is None or 1 <= self.cover_level <= 16, "cover_level must lie in 1..16"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(f"{where}: {msg}")
        return self

    def system_spec(self) -> S.SystemSpec:
        spec = dict(self.system)
        kind = spec.get("system")
        if kind is None:
            raise ConfigError("missing key 'system'")
        if kind != "rotation":
            return S.system_from_config({"kind": kind, **{k: v for k, v in spec.items() if k != "system"}})
        angle = spec.get("angle", "golden")
        out = {"kind": "rotation", "name": spec.get("name", "rotation")}
        if angle in ("golden", "silver", "power", "explicit"):
            out["rule"] = angle
            if "exponent" in spec:
                out["exponent"] = float(spec["exponent"])
            if "terms" in spec:
                out["terms"] = [int(t) for t in str(spec["terms"]).split(",") if t.strip()]
        else:
            out["value"] = angle
        return S.system_from_config(out)

    def schedule(self) -> RadiusSchedule:
        return RadiusSchedule(self.k_min, self.k_max)

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("path")
        d.pop("workers")
        d.pop("output")
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.canonical(), sort_keys=True).encode()).hexdigest()


def _parse_value(key: str, raw: str):
    ints = {"n", "burn_in", "k_min", "k_max", "sources", "targets", "seed", "measure_n",
            "workers", "cover_k0", "cover_level"}
    floats = {"tolerance", "tail_fraction", "cover_h", "cover_epsilon", "cover_d"}
    raw = raw.strip()
    try:
        if key in ints:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if key in floats:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw


def parse_config_text(text: str, path: str = "") -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as e:
        raise ConfigError(f"{path or '<config>'}: {e}") from None
    raw = dict(cp["experiment"])
    unknown = sorted(set(raw) - _KNOWN)
    if unknown:
        raise ConfigError(f"{path or '<config>'}: unknown keys {unknown}")
    vals = {k: _parse_value(k, v) for k, v in raw.items()}
    system = {k: vals.pop(k) for k in _SYSTEM_KEYS if k in vals}
    if "name" in vals:
        system["name"] = vals["name"]
    for key in ("n", "k_min", "k_max"):
        if key not in vals:
            raise ConfigError(f"{path or '<config>'}: missing key {key!r}")
    try:
        cfg = ExperimentConfig(system=system, path=path, **vals)
    except TypeError as e:
        raise ConfigError(f"{path or '<config>'}: {e}") from None
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        bundled = bundled_configs()
        if path.name in bundled:
            path = bundled[path.name]
        else:
            raise ConfigError(f"{path}: no such config")
    return parse_config_text(path.read_text(), str(path))


def bundled_configs() -> dict[str, Path]:
    root = resources.files("waitdim") / "configs"
    return {p.name: Path(str(p)) for p in root.iterdir() if p.name.endswith(".cfg")}


@dataclass
class RunManifest:
    config_hash: str
    version: str
    started: str
    finished: str
    files: dict
    config_path: str = ""
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run_experiment(cfg: ExperimentConfig, output: str | Path | None = None,
                   workers: int | None = None) -> RunManifest:
    """Run the inequality, slope and cover computations of ``cfg`` and write
    ``hitting.csv``, ``slopes.csv``, ``inequality.json``, ``cover.json`` and
    ``manifest.json`` into the output directory.
    """
    cfg.validate()
    out = Path(output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    w = workers or cfg.workers
    try:
        sys_ = cfg.system_spec()
        sched = cfg.schedule()
        rep = inequality_report(sys_, cfg.sources, cfg.targets, sched, cfg.n, cfg.tolerance,
                                seed=cfg.seed, tail_fraction=cfg.tail_fraction,
                                burn_in=cfg.burn_in, measure_n=cfg.measure_n, workers=w)
        cover = _cover(cfg, sys_, sched)
    except (ValueError, ArithmeticError, MemoryError) as e:
        raise ExperimentError(f"{cfg.path or '<config>'}: {type(e).__name__}: {e}") from e

    label = cfg.name or sys_.name or sys_.kind
    buf = io.StringIO()
    first = True
    for profs in rep.profiles:
        text = profiles_to_csv(profs, label)
        buf.write(text if first else text.split("\n", 1)[1])
        first = False
    files = {
        "hitting.csv": buf.getvalue(),
        "slopes.csv": slopes_to_csv(rep.estimates),
        "inequality.json": rep.to_json() + "\n",
        "cover.json": json.dumps(cover, indent=2, sort_keys=True) + "\n",
    }
    sums = {}
    for name, text in files.items():
        _write(out / name, text)
        sums[name] = _sha256(out / name)
    man = RunManifest(cfg.digest(), __version__, started,
                      datetime.now(timezone.utc).isoformat(), sums, cfg.path)
    _write(out / "manifest.json", man.to_json() + "\n")
    return man


def _cover(cfg: ExperimentConfig, sys_: S.SystemSpec, sched: RadiusSchedule) -> dict:
    if sys_.dim != 1:
        return {"schema_version": SCHEMA_VERSION, "skipped": "cover grids are one-dimensional"}
    level = cfg.cover_level or min(sched.k_max, 12)
    csched = RadiusSchedule(sched.k_min, max(level, sched.k_min + 1))
    b = sys_.burn_in if cfg.burn_in is None else cfg.burn_in
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[3])
    depth = (cfg.n + b + 64) if sys_.digit_base else None
    x = S.sample_measure(sys_, 1, rng, depth=depth)[0]
    orb = generate_orbit(sys_, x, b, cfg.n)
    grid = [t for t in grid_targets(sys_.space, level)]
    est = cover_dimension_bound(batch_hitting(orb, grid, csched), cfg.cover_h,
                                cfg.cover_epsilon, cfg.cover_d, cfg.cover_k0, cfg.tail_fraction)
    return json.loads(est.to_json())


# ------------------------------------------------------------------ points

def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse coordinate {text!r}") from None


def _binary_digits(v: Fraction, n: int) -> bytes:
    v = v % 1
    num, den = v.numerator, v.denominator
    out = bytearray(n)
    for i in range(n):
        num *= 2
        if num >= den:
            out[i] = 1
            num -= den
    return bytes(out)


def _ternary_digits(v: Fraction, n: int) -> bytes:
    num, den = v.numerator, v.denominator
    out = bytearray(n)
    for i in range(n):
        num *= 3
        out[i] = num // den
        num -= out[i] * den
    return bytes(out)


def parse_point(sys_: S.SystemSpec, text: str, n_digits: int = 128) -> S.Point:
    """Point from text such as ``0.3``, ``1/3`` or ``0.1,0.7`` (torus).

    Decimal and rational inputs are exact: a digit-coded system receives as
    many digits of the exact expansion as the orbit needs.
    """
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != sys_.dim:
        raise ConfigError(f"{sys_.kind} points need {sys_.dim} coordinate(s), got {text!r}")
    vals = [_fraction(p) for p in parts]
    if sys_.kind == "doubling":
        return S.Point.binary(_binary_digits(vals[0], n_digits))
    if sys_.kind == "cantor_shift":
        if not 0 <= vals[0] < 1:
            raise S.DomainError(f"{text} is outside [0, 1)")
        digits = _ternary_digits(vals[0], n_digits)
        return S.Point.cantor(digits)
    if sys_.kind == "logistic":
        if not 0 <= vals[0] <= 1:
            raise S.DomainError(f"{text} is outside [0, 1]")
        theta = 2.0 / math.pi * math.asin(math.sqrt(float(vals[0])))
        return S.logistic_point(_binary_digits(Fraction(theta), n_digits))
    if sys_.space == "torus":
        return S.Point.torus(*vals)
    if sys_.space == "interval":
        return S.Point.interval(vals[0])
    return S.Point.circle(vals[0])


def _read_targets(path: str) -> list[str]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                float(Fraction(row[0].strip()))
            except (ValueError, ZeroDivisionError):
                continue  # header line
            rows.append(",".join(c.strip() for c in row if c.strip()))
    if not rows:
        raise ConfigError(f"{path}: no target points")
    return rows


# ---------------------------------------------------------------------- CLI

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_system_args(p):
    p.add_argument("--system", help="rotation, doubling, logistic, cat_map, cantor_shift, constant, square")
    p.add_argument("--angle", default="golden", help="rotation angle: golden, silver, power, p/q or decimal")
    p.add_argument("--exponent", type=float, help="type exponent for --angle power")
    p.add_argument("--config", help="experiment config; its system and schedule are used")


def _system_from_args(a) -> tuple[S.SystemSpec, ExperimentConfig | None]:
    if a.config:
        cfg = load_config(a.config)
        return cfg.system_spec(), cfg
    if not a.system:
        raise ConfigError("give --system or --config")
    spec = {"system": a.system, "angle": a.angle}
    if a.exponent is not None:
        spec["exponent"] = a.exponent
    return ExperimentConfig(system=spec, n=2, k_min=1, k_max=2).system_spec(), None


def _schedule(a, cfg) -> RadiusSchedule:
    kmin = a.kmin if a.kmin is not None else (cfg.k_min if cfg else None)
    kmax = a.kmax if a.kmax is not None else (cfg.k_max if cfg else None)
    if kmin is None or kmax is None:
        raise ConfigError("give --kmin and --kmax")
    try:
        return RadiusSchedule(kmin, kmax)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _orbit_for(sys_, a, cfg):
    n = a.n if a.n is not None else (cfg.n if cfg else None)
    if n is None:
        raise ConfigError("give --n")
    burn = a.burn_in if a.burn_in is not None else sys_.burn_in
    x = parse_point(sys_, a.x, n + burn + 64) if a.x else S.sample_measure(
        sys_, 1, a.seed, depth=(n + burn + 64) if sys_.digit_base else None)[0]
    if getattr(a, "cache", None):
        orb = load_orbit(a.cache, sys_, x, burn, n)
        if orb is not None:
            return orb
    orb = generate_orbit(sys_, x, burn, n)
    if orb.precision_loss:
        log.warning("start point has fewer digits than the orbit consumes; tail is truncated")
    return orb


def _emit(text: str, out: str | None):
    if out:
        _write(Path(out), text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(a) -> int:
    sys_, cfg = _system_from_args(a)
    orb = _orbit_for(sys_, a, cfg)
    save_orbit(orb, a.out)
    print(f"wrote {orb.length} points of {sys_.name or sys_.kind} to {a.out}")
    return EXIT_OK


def _cmd_hit(a) -> int:
    sys_, cfg = _system_from_args(a)
    sched = _schedule(a, cfg)
    orb = _orbit_for(sys_, a, cfg)
    texts = _read_targets(a.targets) if a.targets else [a.y]
    if texts == [None]:
        raise ConfigError("give --targets or --y")
    targets = [parse_point(sys_, t) for t in texts]
    profs = batch_hitting(orb, targets, sched, mode=a.mode)
    _emit(profiles_to_csv(profs, sys_.name or sys_.kind), a.out)
    return EXIT_OK


def _read_hitting_csv(path: str):
    groups: dict[tuple[str, str, str], list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["system"], row["x"], row["y"])
            t = row["tau_or_censored"]
            groups.setdefault(key, []).append((int(row["k"]), math.inf if t == "CENSORED" else float(t)))
    return groups


def _cmd_estimate(a) -> int:
    rows = []
    if a.hitting:
        for i, ((system, x, y), vals) in enumerate(_read_hitting_csv(a.hitting).items()):
            ks, tau = zip(*sorted(vals))
            try:
                est = slope_estimate((np.array(ks), np.array(tau)), "R_sup", a.tail)
            except InsufficientDataError as e:
                log.warning("skipping x=%s y=%s: %s", x, y, e)
                continue
            rows.append((f"R {system} x={x} y={y}", est))
    else:
        sys_, cfg = _system_from_args(a)
        sched = _schedule(a, cfg)
        n = a.n if a.n is not None else (cfg.n if cfg else 10**6)
        meas = measure_buffer(sys_, n, a.seed)
        idx = build_grid_index(meas, auto_grid_level(meas, sched.k_max))
        texts = _read_targets(a.targets) if a.targets else [a.y]
        if texts == [None]:
            raise ConfigError("give --hitting, --targets or --y")
        for t in texts:
            est = dimension_estimate(meas, idx, parse_point(sys_, t), sched, a.tail)
            rows.append((f"d y={t}", est))
    _emit(slopes_to_csv(rows), a.out)
    if a.summary:
        for label, est in rows:
            sys.stderr.write(f"{label}: sup {est.sup_proxy:.4f} inf {est.inf_proxy:.4f} "
                             f"loglog {est.loglog_slope:.4f}\n")
    return EXIT_OK


def _cmd_report(a) -> int:
    cfg = load_config(a.config)
    man = run_experiment(cfg, a.out or cfg.output, a.workers)
    out = Path(a.out or cfg.output)
    rep = json.loads((out / "inequality.json").read_text())
    print(f"{cfg.path}: wrote {', '.join(sorted(man.files))} to {out}")
    for key in ("frac_inf", "frac_sup", "frac_diagonal", "n_censored_pairs"):
        print(f"  {key:<18} {rep[key]}")
    return EXIT_OK


def _cmd_suite(a) -> int:
    from .acceptance import CRITERIA, c10_determinism, format_table, run_criterion

    only = [int(s) for s in a.only.split(",")] if a.only else list(CRITERIA)
    results = {}
    for n in only:
        if n == 10:
            continue
        results[n] = run_criterion(n, a.workers)
        print(results[n].line(), flush=True)
    if 10 in only and not a.no_determinism:
        first = {n: results.get(n) or run_criterion(n) for n in CRITERIA}
        r = c10_determinism(first, workers=a.determinism_workers)
        results[10] = r
        print(r.line(), flush=True)
    print()
    print(format_table(results.values()))
    return EXIT_OK if all(r.passed for r in results.values()) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="waitdim", description="Waiting-time estimates of local dimension.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def orbit_args(q):
        q.add_argument("--x", help="start point, e.g. 0.3, 1/3 or 0.1,0.7")
        q.add_argument("--n", type=int, help="orbit length")
        q.add_argument("--burn-in", type=int, dest="burn_in")
        q.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("simulate", help="generate an orbit and store it as a binary cache")
    _add_system_args(q)
    orbit_args(q)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_simulate)

    q = sub.add_parser("hit", help="waiting times to target points as CSV")
    _add_system_args(q)
    orbit_args(q)
    q.add_argument("--targets", help="CSV file with one target point per row")
    q.add_argument("--y", help="a single target point")
    q.add_argument("--kmin", type=int)
    q.add_argument("--kmax", type=int)
    q.add_argument("--mode", choices=("dynamical", "sequence"), default="dynamical")
    q.add_argument("--cache", help="orbit cache written by simulate")
    q.add_argument("--out")
    q.set_defaults(func=_cmd_hit)

    q = sub.add_parser("estimate", help="slope tables from a hitting CSV or occupation counts")
    _add_system_args(q)
    q.add_argument("--hitting", help="hitting CSV written by hit")
    q.add_argument("--targets")
    q.add_argument("--y")
    q.add_argument("--n", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--kmin", type=int)
    q.add_argument("--kmax", type=int)
    q.add_argument("--tail", type=float, default=0.5)
    q.add_argument("--summary", action="store_true", help="print proxies to stderr")
    q.add_argument("--out")
    q.set_defaults(func=_cmd_estimate)

    q = sub.add_parser("report", help="run a config: inequality, slope, hitting and cover outputs")
    q.add_argument("config")
    q.add_argument("--out")
    q.add_argument("--workers", type=int)
    q.set_defaults(func=_cmd_report)

    q = sub.add_parser("suite", help="run the acceptance criteria and print a pass/fail table")
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--only", help="comma-separated criterion numbers")
    q.add_argument("--no-determinism", action="store_true")
    q.add_argument("--determinism-workers", type=int, default=8)
    q.set_defaults(func=_cmd_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if a.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return a.func(a)
    except ConfigError as e:
        sys.stderr.write(f"waitdim: {e}\n")
        return EXIT_USAGE
    except (ExperimentError, InsufficientDataError, S.DomainError, ValueError,
            ArithmeticError, MemoryError) as e:
        sys.stderr.write(f"waitdim: {e}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
