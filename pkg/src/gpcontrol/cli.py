"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 failed check.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ConfigError, RunConfig
from .control import weak_family
from .dynamics import NumericalError, evolve
from .spectral import write_state_csv
from .verify import SUITES, run_suite, transform_checks


EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    vals = _float_list(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError("n values must be positive integers")
    return [int(v) for v in vals]


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="run configuration JSON")
    common.add_argument("--output-dir", metavar="PATH", default=argparse.SUPPRESS, help="overrides output_dir")
    common.add_argument("--threads", type=_nonneg_int, metavar="N", default=argparse.SUPPRESS,
                        help="worker threads for independent runs (0 = auto)")
    common.add_argument("--seed", type=_u64, metavar="U64", default=argparse.SUPPRESS, help="overrides seed")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="gpcontrol", parents=[common],
                description="Spectral simulator for the bilinear-controlled Gross-Pitaevskii equation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("simulate", parents=[common], help="evolve the configured initial state")

    v = sub.add_parser("verify", parents=[common], help="run a property suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES))
    v.add_argument("--inject-fault", choices=["sign"], default=None, help=argparse.SUPPRESS)

    w = sub.add_parser("weak-limit", parents=[common], help="z_n versus epsilon_n for u_n = u + sin(2 pi n t)")
    w.add_argument("--n-list", type=_int_list, default=[4, 8, 16, 32, 64], metavar="N1,N2,...")

    r = sub.add_parser("reach", parents=[common], help="sample terminal states and covering numbers")
    r.add_argument("--n-samples", type=int, default=200)
    r.add_argument("--r", type=float, default=2.0, help="Lebesgue exponent of the control bound")
    r.add_argument("--radius", type=float, default=1.0, help="bound on ||u||_{L^r}")
    r.add_argument("--eps-list", type=_float_list, default=None,
                   help="absolute radii; default is the median terminal H^1 norm times 0.05,0.1,0.2,0.4,0.8")

    sub.add_parser("transform-check", parents=[common], help="transform round trip and free-flow unitarity")
    return p


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, files, started: float, extra=None) -> Path:
    data = {
        "command": command,
        "config": cfg.to_dict(),
        "files": {str(Path(f).relative_to(out)): sha256_file(Path(f)) for f in sorted(files)},
        "wall_time_s": time.perf_counter() - started,
    }
    if extra:
        data.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if "config" in args else RunConfig()
    d = cfg.to_dict()
    if "seed" in args:
        d["seed"] = args.seed
    if "output_dir" in args:
        d["output_dir"] = args.output_dir
    return RunConfig.from_dict(d)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig, args) -> int:
    started = time.perf_counter()
    psi0, u, ecfg = cfg.initial(), cfg.build_control(), cfg.evolution()
    traj = evolve(psi0, u, ecfg)
    out = _out_dir(cfg)
    files = [out / "record.csv", out / "times.csv"]
    traj.record.write_csv(files[0])
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    with open(files[1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t", "file"])
        for j in range(0, len(traj), cfg.snapshot_every):
            name = f"snapshots/state_{j:06d}.csv"
            write_state_csv(traj.state(j), out / name)
            files.append(out / name)
            w.writerow([j, f"{traj.times[j]:.17g}", name])
    m = traj.record.mass
    write_manifest(out, "simulate", cfg, files, started)
    print(f"simulate: {len(traj)} samples, final time {traj.times[-1]:.6g}, "
          f"mass drift {float(np.max(np.abs(m - m[0]))):.3g}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = run_suite(args.suite, cfg, fault=args.inject_fault)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'} ({sum(c.passed for c in checks)}/{len(checks)})")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_transform_check(cfg: RunConfig, args) -> int:
    checks = transform_checks(cfg)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def _threads(args) -> int:
    t = getattr(args, "threads", 1)
    return t if t > 0 else (os.cpu_count() or 1)


def cmd_weak_limit(cfg: RunConfig, args) -> int:
    started = time.perf_counter()
    n_list = list(dict.fromkeys(args.n_list))
    if len(n_list) < len(args.n_list):
        print(f"warning: duplicate n values removed, using {n_list}", file=sys.stderr)
    rows = an.weak_limit_experiment(cfg.initial(), cfg.build_control(), n_list, cfg.evolution(),
                                    family=weak_family, threads=_threads(args))
    out = _out_dir(cfg)
    path = out / "weak_limit.csv"
    an.write_weak_limit_csv(rows, path)
    write_manifest(out, "weak-limit", cfg, [path], started, {"n_list": n_list})
    if rows:
        eps = [r.eps_n for r in rows]
        mono = all(a > b for a, b in zip(eps, eps[1:]))
        print(f"weak-limit: {len(rows)} rows, eps_n monotone decreasing: {'yes' if mono else 'no'}, "
              f"max ratio {max(r.ratio for r in rows):.6g}")
    else:
        print("weak-limit: empty n list, empty table")
    return EXIT_OK


def cmd_reach(cfg: RunConfig, args) -> int:
    if args.n_samples < 1:
        raise ConfigError("n_samples: must be >= 1")
    if args.r < 1:
        raise ConfigError("r: must be >= 1")
    if args.radius < 0:
        raise ConfigError("radius: must be >= 0")
    if args.eps_list is not None and any(e <= 0 for e in args.eps_list):
        raise ConfigError("eps_list: radii must be positive")
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    psi0 = cfg.initial()
    controls, horizons = an.sample_controls(rng, args.n_samples, args.r, args.radius, cfg.T)
    samples = an.reach_sample(psi0, controls, horizons, cfg.evolution(), r=args.r, threads=_threads(args))
    good = [s for s in samples if s.terminal is not None]
    for i, s in enumerate(samples):
        if s.error:
            print(f"warning: sample {i} failed: {s.error}", file=sys.stderr)
    if not good:
        raise NumericalError("every reach sample failed")
    terminals = [s.terminal for s in good]
    radius = float(np.median([s.h1 for s in good]))
    eps_list = args.eps_list or [radius * f for f in (0.05, 0.1, 0.2, 0.4, 0.8)]
    sphere = an.random_sphere_states(psi0.basis, len(terminals), radius, rng)
    d_reach, d_sphere = an.h1_distance_matrix(terminals), an.h1_distance_matrix(sphere)
    nets = [an.covering_number(terminals, e, d_reach) for e in eps_list]
    nets_sphere = [an.covering_number(sphere, e, d_sphere) for e in eps_list]

    out = _out_dir(cfg)
    files = [out / "reach.csv", out / "covering.csv", out / "covering_sphere.csv"]
    an.write_reach_csv(samples, files[0])
    an.write_covering_csv(eps_list, nets, files[1])
    an.write_covering_csv(eps_list, nets_sphere, files[2])
    (out / "terminals").mkdir(exist_ok=True)
    for i, s in enumerate(samples):
        if s.terminal is not None:
            files.append(out / f"terminals/sample_{i:05d}.csv")
            write_state_csv(s.terminal, files[-1])
    wins = sum(a < b for a, b in zip(nets, nets_sphere))
    write_manifest(out, "reach", cfg, files, started,
                   {"n_samples": args.n_samples, "r": args.r, "radius": args.radius, "sphere_radius": radius})
    print(f"reach: {len(good)}/{len(samples)} samples, reach net smaller than sphere net at "
          f"{wins}/{len(eps_list)} radii (heuristic evidence only)")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "weak-limit": cmd_weak_limit,
    "reach": cmd_reach,
    "transform-check": cmd_transform_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _load_config(args)
        cfg.initial()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
