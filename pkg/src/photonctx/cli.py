"""Command-line driver.

Exit codes: 0 success, 2 invalid configuration or usage, 3 insufficient
data (a context recorded no clicks), 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .experiment import ImperfectionModel, run_inequality_test, sweep, write_csv
from .hilbert import KET_P, psi1
from .nchv import ASSIGNMENTS, AssignmentDistribution, assignment_to_detector, c_value, check_constraints, contradiction_proof
from .observables import (
    CONTEXT_B_OUTCOMES,
    context_b_measure,
    detector_values,
    observable_bounds,
    verify_eigenstate_relations,
)
from .optics import DETECTORS, build_fig1_network, propagate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NO_DATA = 3

COMMANDS = ("ideal", "bounds", "nchv-enumerate", "run", "sweep")
ENSEMBLES = ("constrained", "uniform")


@dataclass
class RunConfig:
    command: str = "run"
    theory: str = "QM"
    trials: int = 100_000
    seed: int | None = None
    workers: int = 1
    fair_sampling: bool = True
    imperfection: ImperfectionModel = field(default_factory=ImperfectionModel)
    nchv_ensemble: str = "constrained"
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    output_path: str | None = None
    format: str = "table"

    def distribution(self) -> AssignmentDistribution:
        if self.nchv_ensemble == "uniform":
            return AssignmentDistribution.uniform()
        return AssignmentDistribution.constrained()


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_values(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_choice(choices):
    def parse(text):
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text

    return parse


_TOP_KEYS = {
    "theory": ("theory", _parse_choice(("QM", "NCHV"))),
    "trials": ("trials", _parse_int),
    "seed": ("seed", _parse_int),
    "workers": ("workers", _parse_int),
    "fair_sampling": ("fair_sampling", _parse_bool),
    "format": ("format", _parse_choice(("table", "csv"))),
    "output": ("output_path", str),
    "nchv.ensemble": ("nchv_ensemble", _parse_choice(ENSEMBLES)),
    "sweep.param": ("sweep_param", str),
    "sweep.values": ("sweep_values", _parse_values),
}


def _split_lines(file_text: str):
    for lineno, raw in enumerate(file_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield f"line {lineno}", line


def _split_overrides(overrides):
    for item in overrides:
        if isinstance(item, tuple):
            yield f"--set {item[0]}", f"{item[0]}={item[1]}"
        else:
            yield f"--set {item.split('=', 1)[0].strip()}", item


def parse_config(file_text: str = "", cli_overrides=(), command: str = "run") -> RunConfig:
    """Build a :class:`RunConfig` from ``key = value`` text plus overrides.

    Overrides win over the file, the file over defaults.  Every problem is
    collected and raised together in one :class:`ConfigError`.
    """
    problems: list[str] = []
    values: dict[str, object] = {}
    imp_fields = {f.name: getattr(ImperfectionModel(), f.name) for f in dataclasses.fields(ImperfectionModel)}
    imp_fields = {k: list(v) if isinstance(v, tuple) else v for k, v in imp_fields.items()}

    if command not in COMMANDS:
        problems.append(f"unknown command {command!r}")

    entries = list(_split_lines(file_text)) + list(_split_overrides(cli_overrides))
    for where, line in entries:
        key, eq, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not eq or not key:
            problems.append(f"{where}: malformed entry {line!r} (expected key = value)")
            continue
        try:
            if key in _TOP_KEYS:
                attr, parse = _TOP_KEYS[key]
                values[attr] = parse(raw)
            elif key.startswith("imperfection."):
                head, idx = ImperfectionModel.resolve_param(key)
                val = float(raw)
                if head in ImperfectionModel._SCALARS:
                    imp_fields[head] = val
                else:
                    labels = ImperfectionModel._VECTORS[head]
                    if idx:
                        imp_fields[head][labels.index(idx)] = val
                    else:
                        imp_fields[head] = [val] * len(labels)
            else:
                problems.append(f"{where}: unknown key {key!r}")
        except ConfigError as exc:
            problems.extend(f"{where}: {p}" for p in exc.problems)
        except ValueError as exc:
            problems.append(f"{where}: bad value for {key!r}: {exc}")

    imp = None
    try:
        imp = ImperfectionModel(**imp_fields)
    except ConfigError as exc:
        problems.extend(f"imperfection.{p}" for p in exc.problems)

    cfg = RunConfig(command=command, **values)
    if cfg.trials < 1:
        problems.append(f"trials = {cfg.trials} must be >= 1")
    if cfg.seed is not None and cfg.seed < 0:
        problems.append(f"seed = {cfg.seed} must be >= 0")
    if cfg.workers < 1:
        problems.append(f"workers = {cfg.workers} must be >= 1")
    if cfg.sweep_param is not None:
        try:
            ImperfectionModel.resolve_param(cfg.sweep_param)
        except ConfigError as exc:
            problems.extend(f"sweep.param: {p}" for p in exc.problems)
    if problems:
        raise ConfigError(problems)
    cfg.imperfection = imp
    return cfg


def _f12(x: float) -> str:
    return f"{x:.12f}"


def cmd_ideal(cfg: RunConfig | None = None) -> str:
    net = build_fig1_network()
    probs = propagate(net, KET_P).probabilities
    out = ["Detector probabilities for a +45 degree photon entering at the source:"]
    for d, p in zip(DETECTORS, probs):
        out.append(f"  {d}  P = {_f12(p)}   (Z1X2, X1Z2, product) = {detector_values(d)}")
    out.append("")
    out.append("Eigenstate relations for the post-PS0 state (|uH> + |dV>)/sqrt2:")
    for chk in verify_eigenstate_relations(psi1()):
        out.append(f"  {chk.label:<22} residual = {chk.residual:.3e}  {'PASS' if chk.passed else 'FAIL'}")
    prod = float(np.dot(probs, [detector_values(d)[2] for d in DETECTORS]))
    pb = context_b_measure(psi1())
    zz = sum(p * o[0] for o, p in pb.items())
    xx = sum(p * o[1] for o, p in pb.items())
    lhs = abs(1 + zz + xx - prod)
    out.append("")
    out.append(f"<Z1Z2> = {_f12(zz)}  <X1X2> = {_f12(xx)}  <Z1X2*X1Z2> = {_f12(prod)}")
    out.append(f"lhs = |1 + <Z1Z2> + <X1X2> - <Z1X2*X1Z2>| = {_f12(lhs)}  (noncontextual bound 2)")
    return "\n".join(out) + "\n"


def _bounds_summary() -> list[str]:
    b = observable_bounds()
    proof = contradiction_proof()
    return [
        f"NCHV max = {b.nchv_max:g}",
        f"QM max = {b.qm_max:.12g}",
        f"QM maximizer equals (|uH> + |dV>)/sqrt2 up to phase: {b.eigenvector_is_psi1}",
        f"assignments satisfying all constraints = {len(proof.satisfying)}",
        proof.explain(),
    ]


def cmd_bounds(cfg: RunConfig | None = None) -> str:
    return "\n".join(_bounds_summary()) + "\n"


def _enumeration_rows():
    for a in ASSIGNMENTS:
        flags = check_constraints(a)
        yield a, c_value(a), flags, assignment_to_detector(a)


def cmd_nchv_enumerate(cfg: RunConfig | None = None) -> str:
    if cfg is not None and cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["vZ1", "vX1", "vZ2", "vX2", "c_value", "eq2a", "eq2b", "eq2c", "detector"])
        for a, c, flags, det in _enumeration_rows():
            w.writerow([a.vZ1, a.vX1, a.vZ2, a.vX2, c, *(int(f) for f in flags), det])
        return buf.getvalue()
    out = [" vZ1 vX1 vZ2 vX2 |  C | 2a 2b 2c | detector"]
    for a, c, flags, det in _enumeration_rows():
        marks = " ".join(" Y" if f else " n" for f in flags)
        out.append(f"  {a.vZ1:+d}  {a.vX1:+d}  {a.vZ2:+d}  {a.vX2:+d} | {c:+d} | {marks} | {det}")
    out.append("")
    out.extend(_bounds_summary())
    return "\n".join(out) + "\n"


def _require_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("seed is required for run and sweep (no implicit entropy)")
    return cfg.seed


def _table(results) -> str:
    out = []
    for res in results:
        r = res.report
        head = f"{res.theory}  trials={res.trials}  seed={res.seed}"
        if res.param:
            head += f"  {res.param}={res.value:.12g}"
        out.append(head)
        out.append("  clicks " + " ".join(f"{d}={n}" for d, n in zip(DETECTORS, res.counts_A.clicks)))
        out.append(
            "  context B " + " ".join(f"{o}={n}" for o, n in zip(CONTEXT_B_OUTCOMES, res.counts_B.clicks))
        )
        out.append(f"  <Z1Z2>      = {r.avg_z1z2:.6f} +/- {r.se_z1z2:.6f}")
        out.append(f"  <X1X2>      = {r.avg_x1x2:.6f} +/- {r.se_x1x2:.6f}")
        out.append(f"  <Z1X2*X1Z2> = {r.avg_product:.6f} +/- {r.se_product:.6f}")
        sig = "inf" if math.isinf(r.violation_sigma) else f"{r.violation_sigma:.2f}"
        out.append(f"  lhs = {r.lhs:.6f} +/- {r.lhs_se:.6f}  (exact {res.analytic.lhs:.6f}; bound 2, {sig} sigma)")
    return "\n".join(out) + "\n"


def _emit(results, cfg: RunConfig) -> str:
    if cfg.format == "csv":
        buf = io.StringIO()
        write_csv(results, buf)
        return buf.getvalue()
    return _table(results)


def cmd_run(cfg: RunConfig) -> str:
    seed = _require_seed(cfg)
    res = run_inequality_test(
        cfg.theory, cfg.imperfection, cfg.trials, seed, cfg.distribution(), cfg.fair_sampling, cfg.workers
    )
    return _emit([res], cfg)


def cmd_sweep(cfg: RunConfig) -> str:
    seed = _require_seed(cfg)
    if cfg.sweep_param is None:
        raise ConfigError("sweep.param is required for sweep")
    results = sweep(
        cfg.theory,
        cfg.imperfection,
        cfg.sweep_param,
        cfg.sweep_values,
        cfg.trials,
        seed,
        cfg.distribution(),
        cfg.fair_sampling,
        cfg.workers,
    )
    return _emit(results, cfg)


HANDLERS = {
    "ideal": cmd_ideal,
    "bounds": cmd_bounds,
    "nchv-enumerate": cmd_nchv_enumerate,
    "run": cmd_run,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="photonctx",
        description="Single-photon noncontextuality interferometer: exact predictions and Monte Carlo tests.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration key (repeatable)")
    p.add_argument("--format", choices=("table", "csv"), help="output format")
    p.add_argument("--out", help="write output to this file instead of stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = list(args.overrides)
    if args.format:
        overrides.append(f"format={args.format}")
    if args.out:
        overrides.append(f"output={args.out}")
    try:
        cfg = parse_config(text, overrides, args.command)
        output = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  {prob}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    if cfg.output_path:
        Path(cfg.output_path).write_text(output, newline="")
    else:
        sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
