"""Configuration-driven experiment runner: scan, verify, reproduce."""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .config import (
    REPRODUCE_CONFIGS,
    ExperimentConfig,
    RunManifest,
    load_config,
    parse_config,
    serialize_config,
    sha256_file,
)
from .errors import ConfigError, NhcorrError


def build_state(cfg: ExperimentConfig):
    from .states import make_state, minus_sum_sx

    n = cfg.model.n
    hprime = None
    if cfg.state.kind == "gibbs":
        if cfg.state.hprime == "minus_sum_sx":
            hprime = minus_sum_sx(n)
        else:
            raise ConfigError(f"state.hprime {cfg.state.hprime!r} unsupported")
    return make_state(cfg.state.kind, (2,) * n, beta=cfg.state.beta,
                      hprime=hprime, seed=cfg.state.seed)


def run_experiment(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> list[str]:
    """Run one scan per gamma; write CSVs plus a JSON manifest. Deterministic
    for a fixed config and seed: byte-identical CSVs on rerun."""
    import os

    from .lightcone import scan_cc, scan_commutator, scan_mi, write_grid_csv
    from .model import TfimParams, build_quasi_hermitian

    t0 = time.perf_counter()
    state = build_state(cfg)
    files: list[str] = []
    errors: dict[str, list] = {}
    for gamma in cfg.model.gamma:
        params = TfimParams(n=cfg.model.n, J=cfg.model.J, g=cfg.model.g,
                            h=cfg.model.h, gamma=gamma)
        model = build_quasi_hermitian(params)
        scan = cfg.scan
        if scan.kind == "cc":
            grid = scan_cc(model, state, scan.correlator, scan.site_a, scan.sites_b,
                           scan.times, aggregate=scan.aggregate, workers=workers)
            name = f"cc_{scan.correlator}_gamma{gamma:g}.csv"
        elif scan.kind == "mi":
            grid = scan_mi(model, state, scan.site_a, scan.sites_b, scan.times,
                           workers=workers)
            name = f"mi_gamma{gamma:g}.csv"
        elif scan.kind == "commutator":
            grid = scan_commutator(model, scan.site_a, scan.sites_b, scan.times,
                                   normalize=scan.normalize, picture=scan.picture,
                                   workers=workers)
            tag = "norm" if scan.normalize else "raw"
            name = f"commutator_{scan.picture}_{tag}_gamma{gamma:g}.csv"
        else:  # pragma: no cover - parse_config rejects other kinds
            raise ConfigError(f"scan.kind {scan.kind!r} unsupported")
        path = os.path.join(out_dir, name)
        write_grid_csv(grid, path)
        files.append(path)
        errors[name] = grid.meta.get("cell_errors", [])

    manifest = RunManifest(
        config=_echo(cfg),
        version=__version__,
        wall_time_s=time.perf_counter() - t0,
        cell_errors=errors,
        checksums={f: sha256_file(f) for f in files},
    )
    manifest_path = os.path.join(out_dir, "run_manifest.json")
    manifest.write(manifest_path)
    files.append(manifest_path)
    return files


def _echo(cfg: ExperimentConfig) -> dict:
    from .config import _canonical_dict

    return _canonical_dict(cfg)


def _cmd_scan(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = ExperimentConfig(model=cfg.model, state=replace(cfg.state, seed=args.seed),
                               scan=cfg.scan, output=cfg.output)
    out_dir = args.out or cfg.output.directory
    files = run_experiment(cfg, out_dir, workers=args.workers)
    for f in files:
        print(f)
    return 0


def _cmd_reproduce(args) -> int:
    cfg = parse_config(REPRODUCE_CONFIGS[args.figure])
    out_dir = args.out or f"out/{args.figure}"
    files = run_experiment(cfg, out_dir, workers=args.workers)
    for f in files:
        print(f)
    return 0


def _cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.level, out_dir=args.out, workers=args.workers)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _cmd_dump_config(args) -> int:
    cfg = parse_config(REPRODUCE_CONFIGS[args.figure])
    print(serialize_config(cfg), end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nhcorr",
        description="Lightcone scans and verification for non-Hermitian spin chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="run the scan described by a YAML config")
    p_scan.add_argument("--config", required=True)
    p_scan.add_argument("--out", default=None)
    p_scan.add_argument("--workers", type=int, default=1)
    p_scan.add_argument("--seed", type=int, default=None)
    p_scan.set_defaults(func=_cmd_scan)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    p_ver.add_argument("--level", choices=("fast", "full"), default="fast")
    p_ver.add_argument("--out", default="out/verify")
    p_ver.add_argument("--workers", type=int, default=1)
    p_ver.set_defaults(func=_cmd_verify)

    p_rep = sub.add_parser("reproduce", help="run a pinned figure config")
    p_rep.add_argument("figure", choices=sorted(REPRODUCE_CONFIGS))
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--workers", type=int, default=1)
    p_rep.set_defaults(func=_cmd_reproduce)

    p_dump = sub.add_parser("dump-config", help="print a pinned figure config")
    p_dump.add_argument("figure", choices=sorted(REPRODUCE_CONFIGS))
    p_dump.set_defaults(func=_cmd_dump_config)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NhcorrError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
