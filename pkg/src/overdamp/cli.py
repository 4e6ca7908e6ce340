"""Command-line entry point.

Config files are flat ``key=value`` lines (``#`` starts a comment)::

    gamma=4
    n=1000
    dim=1
    t_final=1.0
    dt=0.01
    seed=7
    potential=harmonic:1.0
    kernel=smooth
    integrator=exp

A ``gamma_grid=2,4,8`` line turns the file into a rate-study spec.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ConfigParseError, OverdampError
from .integrate import simulate_coupled, uniform_record_steps
from .metrics import gap_record, w1_empirical_1d, w2_empirical_1d, wp_assignment_exact
from .model import (
    ExternalPotential,
    Integrator,
    InteractionKernel,
    SimConfig,
    validate_assumption_phi,
    validate_kernel,
)
from .study import RateStudySpec, emit_records, emit_summary, run_rate_study

log = logging.getLogger("overdamp")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


# ---------------------------------------------------------------------------
# config text <-> objects
# ---------------------------------------------------------------------------

def parse_potential(text: str) -> ExternalPotential:
    parts = text.split(":")
    kind = parts[0]
    if kind == "zero" and len(parts) == 1:
        return ExternalPotential.zero()
    if kind == "harmonic" and len(parts) <= 2:
        return ExternalPotential.harmonic(float(parts[1]) if len(parts) == 2 else 1.0)
    if kind == "custom" and len(parts) in (2, 3):
        return ExternalPotential.custom(parts[1], float(parts[2]) if len(parts) == 3 else None)
    raise ValueError(f"cannot parse potential {text!r}")


def _parse_sign(s: str) -> float:
    if s in ("+", "+1", "1", "attractive"):
        return 1.0
    if s in ("-", "-1", "repulsive"):
        return -1.0
    raise ValueError(f"bad sign {s!r}")


def parse_kernel(text: str) -> InteractionKernel:
    parts = text.split(":")
    kind = parts[0]
    if kind == "zero" and len(parts) == 1:
        return InteractionKernel.zero()
    if kind == "smooth" and len(parts) <= 3:
        rest = parts[1:]
        name = "gauss"
        if rest and rest[0] in ("gauss", "linear"):
            name = rest.pop(0)
        if len(rest) > 1:
            raise ValueError(f"cannot parse kernel {text!r}")
        return InteractionKernel.smooth(float(rest[0]) if rest else 1.0, name=name)
    if kind == "newtonian" and len(parts) == 3:
        return InteractionKernel.newtonian(_parse_sign(parts[1]), float(parts[2]))
    if kind == "powerlaw" and len(parts) == 3:
        return InteractionKernel.powerlaw(float(parts[1]), float(parts[2]))
    raise ValueError(f"cannot parse kernel {text!r}")


def _int(s: str) -> int:
    if not s.strip().lstrip("+-").isdigit():
        raise ValueError(f"not an integer: {s!r}")
    return int(s)


def _float(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ValueError(f"not a finite number: {s!r}")
    return x


def _grid(s: str) -> tuple[float, ...]:
    return tuple(_float(p) for p in s.split(",") if p.strip())


# key -> (field name, converter, per-field check or None)
_SIM_KEYS = {
    "gamma": ("gamma", _float, lambda v: v >= 1, "must be >= 1"),
    "n": ("n_particles", _int, lambda v: v >= 1, "must be >= 1"),
    "dim": ("dim", _int, lambda v: v >= 1, "must be >= 1"),
    "t_final": ("t_final", _float, lambda v: v > 0, "must be > 0"),
    "dt": ("dt", _float, lambda v: v > 0, "must be > 0"),
    "seed": ("seed", _int, lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
    "replicas": ("replicas", _int, lambda v: v >= 1, "must be >= 1"),
    "potential": ("potential", parse_potential, None, ""),
    "kernel": ("kernel", parse_kernel, None, ""),
    "integrator": ("integrator", Integrator, None, ""),
    "x0_mean": ("x0_mean", _float, None, ""),
    "x0_var": ("x0_var", _float, lambda v: v >= 0, "must be >= 0"),
    "v0_mean": ("v0_mean", _float, None, ""),
    "v0_var": ("v0_var", _float, lambda v: v >= 0, "must be >= 0"),
}
_STUDY_KEYS = {
    "gamma_grid": ("gamma_grid", _grid, None, ""),
    "record_count": ("record_count", _int, lambda v: v >= 1, "must be >= 1"),
}


def _entries(text: str, overrides=()) -> dict[str, tuple[str, object]]:
    entries: dict[str, tuple[str, object]] = {}

    def take(raw, line, allow_dup):
        if "=" not in raw:
            raise ConfigParseError("expected key=value", line=line)
        key, value = (s.strip() for s in raw.split("=", 1))
        if key not in _SIM_KEYS and key not in _STUDY_KEYS:
            raise ConfigParseError("unknown key", key=key, line=line)
        if key in entries and not allow_dup:
            raise ConfigParseError("duplicate key", key=key, line=line)
        entries[key] = (value, line)

    for n, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0].strip()
        if raw:
            take(raw, n, False)
    for k, raw in enumerate(overrides, start=1):
        take(raw, f"--set #{k}", True)
    return entries


def parse_config(text: str, overrides=()) -> SimConfig | RateStudySpec:
    """Parse config text; ``overrides`` are extra ``key=value`` strings applied last."""
    entries = _entries(text, overrides)
    values = {}
    for key, (raw, line) in entries.items():
        field, conv, check, why = {**_SIM_KEYS, **_STUDY_KEYS}[key]
        try:
            val = conv(raw)
        except (ValueError, ConfigError) as e:
            raise ConfigParseError(f"invalid value {raw!r}: {e}", key=key, line=line) from None
        if check is not None and not check(val):
            raise ConfigParseError(f"{raw!r} {why}", key=key, line=line)
        values[field] = val

    study = {k: values.pop(k) for k in ("gamma_grid", "record_count") if k in values}
    if "record_count" in study and "gamma_grid" not in study:
        key = "record_count"
        raise ConfigParseError("only valid together with gamma_grid", key=key, line=entries[key][1])
    if "gamma_grid" in study and "gamma" not in values and study["gamma_grid"]:
        values["gamma"] = study["gamma_grid"][0]
    try:
        cfg = SimConfig(**values)
    except ConfigError as e:
        # per-field checks already ran, so what remains couples dt to gamma/t_final
        key = "dt" if "dt" in entries else next(iter(entries), None)
        line = entries[key][1] if key else None
        raise ConfigParseError(str(e), key=key, line=line) from None
    if "gamma_grid" not in study:
        return cfg
    try:
        return RateStudySpec(cfg, study["gamma_grid"], replicas=cfg.replicas,
                             record_count=study.get("record_count", 64))
    except ConfigError as e:
        raise ConfigParseError(str(e), key="gamma_grid", line=entries["gamma_grid"][1]) from None


def render_config(config: SimConfig | RateStudySpec) -> str:
    spec = config if isinstance(config, RateStudySpec) else None
    cfg = spec.base if spec else config
    lines = [
        f"gamma={cfg.gamma!r}",
        f"n={cfg.n_particles}",
        f"dim={cfg.dim}",
        f"t_final={cfg.t_final!r}",
        f"dt={cfg.dt!r}",
        f"seed={cfg.seed}",
        f"replicas={spec.replicas if spec else cfg.replicas}",
        f"potential={cfg.potential.render()}",
        f"kernel={cfg.kernel.render()}",
        f"integrator={cfg.integrator.value}",
        f"x0_mean={cfg.x0_mean!r}",
        f"x0_var={cfg.x0_var!r}",
        f"v0_mean={cfg.v0_mean!r}",
        f"v0_var={cfg.v0_var!r}",
    ]
    if spec:
        lines.append("gamma_grid=" + ",".join(repr(g) for g in spec.gamma_grid))
        lines.append(f"record_count={spec.record_count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _write_manifest(out: Path, subcommand: str, rendered: str | None, seed, extra=None):
    doc = {
        "tool": "overdamp",
        "version": __version__,
        "subcommand": subcommand,
        "config_sha256": hashlib.sha256(rendered.encode()).hexdigest() if rendered else None,
        "seed": seed,
        "config": rendered,
    }
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _load(args):
    if not args.config:
        raise ConfigError("--config is required")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {args.config}: {e.strerror}") from None
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(text, overrides)


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_simulate(args, out: Path) -> int:
    config = _load(args)
    cfg = config.base if isinstance(config, RateStudySpec) else config
    steps = uniform_record_steps(cfg, args.records)
    snaps = simulate_coupled(cfg, record_steps=steps, replica=args.replica)
    rows = [gap_record(s) for s in snaps]
    with open(out / "gap.csv", "w", encoding="utf-8") as fh:
        fh.write("t,msd,moment2_kinetic,moment2_overdamped\n")
        for r in rows:
            fh.write(f"{_fmt(r.t)},{_fmt(r.msd)},{_fmt(r.moment2_kinetic)},{_fmt(r.moment2_overdamped)}\n")
    with open(out / "gap_msd.dat", "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(f"{_fmt(r.t)} {_fmt(r.msd)}\n")
    if args.dump:
        traj = out / "trajectory"
        traj.mkdir(exist_ok=True)
        np.save(traj / "times.npy", np.array([s.t for s in snaps]))
        np.save(traj / "kinetic_x.npy", np.array([s.kinetic.x for s in snaps]))
        np.save(traj / "kinetic_v.npy", np.array([s.kinetic.v for s in snaps]))
        np.save(traj / "overdamped_x.npy", np.array([s.overdamped.x for s in snaps]))
    _write_manifest(out, "simulate", render_config(cfg), cfg.seed, {"replica": args.replica})
    print(f"sup_t msd = {_fmt(max(r.msd for r in rows))}")
    return EXIT_OK


def cmd_rate_study(args, out: Path) -> int:
    spec = _load(args)
    if not isinstance(spec, RateStudySpec):
        raise ConfigError("rate-study needs a gamma_grid entry")
    result = run_rate_study(spec, progress=lambda g, r: log.info("gamma=%g replica=%d done", g, r))
    emit_records(result, out / "rate_study.csv")
    emit_summary(result, out / "rate_summary.json")
    with open(out / "rate_plot.dat", "w", encoding="utf-8") as fh:
        for p in result.per_gamma:
            fh.write(f"{_fmt(p.gamma)} {_fmt(p.sup_msd)} {_fmt(p.mc_stderr)}\n")
    _write_manifest(out, "rate-study", render_config(spec), spec.base.seed)
    print(f"slope = {_fmt(result.slope)}  r^2 = {_fmt(result.r_squared)}")
    return EXIT_OK


def cmd_validate(args, out: Path) -> int:
    config = _load(args)
    cfg = config.base if isinstance(config, RateStudySpec) else config
    reports = [
        validate_assumption_phi(cfg.potential, r, args.radius, args.probes, cfg.dim).as_dict()
        for r in args.r
    ]
    kern = validate_kernel(cfg.kernel, cfg.dim, seed=cfg.seed & 0xFFFFFFFF)
    doc = {"potential": cfg.potential.render(), "c_phi": cfg.potential.c_phi,
           "assumption_phi": reports, "kernel": kern}
    (out / "validate_report.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    _write_manifest(out, "validate", render_config(cfg), cfg.seed)
    for rep in reports:
        status = "pass" if rep["passed"] else "FAIL"
        print(f"C_phi,r (r={rep['r']:g}) ~ {rep['sup_weighted_grad']:.6g}  [{status}]")
    print(f"kernel {kern['kernel']}: {'pass' if kern['passed'] else 'FAIL'}")
    return EXIT_OK


def _read_samples(path: str) -> np.ndarray:
    try:
        a = np.loadtxt(path, ndmin=2)
    except OSError as e:
        raise ConfigError(f"cannot read samples {path}: {e.strerror}") from None
    except ValueError as e:
        raise ConfigError(f"malformed sample file {path}: {e}") from None
    return a


def cmd_w2(args, out: Path | None) -> int:
    a, b = _read_samples(args.a), _read_samples(args.b)
    if a.shape[1] == 1 and b.shape[1] == 1:
        value = w2_empirical_1d(a, b) if args.p == 2 else w1_empirical_1d(a, b)
    else:
        value = wp_assignment_exact(a, b, args.p)
    print(_fmt(value))
    if out is not None:
        (out / "w2.txt").write_text(_fmt(value) + "\n", encoding="utf-8")
        _write_manifest(out, "w2", None, None, {"p": args.p, "inputs": [args.a, args.b]})
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="overdamp", description="Overdamped-limit simulator and rate harness.")
    p.add_argument("--version", action="version", version=f"overdamp {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, needs_config=True):
        if needs_config:
            sp.add_argument("--config", metavar="PATH")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE", default=[])
            sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("simulate", help="one coupled run; writes the gap time series")
    common(sp)
    sp.add_argument("--records", type=int, default=64)
    sp.add_argument("--replica", type=int, default=0)
    sp.add_argument("--dump", action="store_true", help="also write raw snapshots (.npy)")

    sp = sub.add_parser("rate-study", help="sweep gamma and fit the log-log slope")
    common(sp)

    sp = sub.add_parser("validate", help="probe the potential and kernel hypotheses")
    common(sp)
    sp.add_argument("--r", type=lambda s: [float(x) for x in s.split(",")], default=[0.0, 1.0, 2.0, 4.0])
    sp.add_argument("--radius", type=float, default=10.0)
    sp.add_argument("--probes", type=int, default=100_000)

    sp = sub.add_parser("w2", help="empirical Wasserstein distance between two sample files")
    common(sp, needs_config=False)
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--p", type=int, choices=(1, 2), default=2)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"overdamp: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    out = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    elif args.subcommand != "w2":
        out = Path(".")
    handler = {
        "simulate": cmd_simulate,
        "rate-study": cmd_rate_study,
        "validate": cmd_validate,
        "w2": cmd_w2,
    }[args.subcommand]
    try:
        return handler(args, out)
    except ConfigError as e:
        print(f"overdamp: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OverdampError, OSError) as e:
        print(f"overdamp: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
