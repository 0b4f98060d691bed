"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 degenerate field (xi_bar F xi^c vanishes identically for the chosen xi).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .clifford import (
    BUILTIN_NAMES,
    BasisError,
    RepresentationError,
    builtin_representation,
    validate_representation,
)
from .emfield import CATALOG, FieldConfigError, describe
from .evolver import EvolutionError, discrete_norms
from .experiment import (
    ConfigError,
    ExperimentConfig,
    Report,
    export_report,
    load_config,
    manufacture,
    run_equivalence,
)
from .gridops import (
    DegenerateFieldError,
    MarginError,
    ScalarGridField,
    SpinorGridField,
    dirac_residual,
    dump_field,
    load_field,
)
from .reduction import CoverageError, extract_component, one_component_residual, reconstruct

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3

log = logging.getLogger("diracone")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    cfg = cfg.with_env()
    data = cfg.to_dict()
    for key in ("seed", "refine", "out", "format", "eta_sweep"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_dict(data)


def _emit(report: Report, cfg_out: str | None, fmt: str, stem: str) -> int:
    for line in report.lines():
        print(line)
    if cfg_out:
        print(f"wrote {export_report(report, cfg_out, fmt, stem)}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    rep = builtin_representation(args.representation)
    vr = validate_representation(rep)
    report = Report(f"validate {rep.name}", seed=args.seed or 0)
    for name, dev in vr.deviations.items():
        report.bound(name, dev, vr.tol)
    if args.dump:
        with open(args.dump, "w") as fh:
            fh.write(rep.dumps())
    return _emit(report, args.out, args.format or "json", f"validate-{rep.name}")


def cmd_fields(args) -> int:
    if args.action == "list":
        for name in CATALOG:
            print(name)
        return EXIT_OK
    if not args.name:
        raise ConfigError("fields describe needs a field name")
    print(describe(args.name))
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _config(args)
    out = cfg.out or "."
    os.makedirs(out, exist_ok=True)
    report = Report("evolve", seed=cfg.seed)
    ctx = cfg.context()
    for k in range(cfg.refine):
        block = manufacture(cfg, k)
        path = os.path.join(out, f"block_level{k}.grid")
        dump_field(block, path)
        norms = discrete_norms(block)
        drift = float(abs(norms - norms[0]).max() / norms[0]) if norms[0] > 0 else 0.0
        report.bound(f"level {k} norm drift", drift, 1e-10 * block.grid.extents[0])
        report.data[f"level{k}"] = {"path": path, "dirac_residual": dirac_residual(block, ctx.field, ctx.rep).max_norm()}
        print(f"wrote {path}")
    return _emit(report, out, cfg.format, "evolve")


def cmd_reduce(args) -> int:
    cfg = _config(args)
    ctx = cfg.context()
    block = load_field(args.block)
    if not isinstance(block, SpinorGridField):
        raise ConfigError("reduce expects a spinor block dump")
    phi = extract_component(block, ctx)
    res, norm = one_component_residual(phi, ctx)
    report = Report("reduce", seed=cfg.seed)
    report.data.update({"residual_max": norm, "coverage": res.coverage})
    report.add("coverage", res.coverage, cfg.tolerances.coverage, res.coverage >= cfg.tolerances.coverage,
               coverage=res.coverage)
    out = cfg.out or "."
    os.makedirs(out, exist_ok=True)
    dump_field(phi, os.path.join(out, "component.grid"))
    dump_field(res, os.path.join(out, "residual.grid"))
    print(f"one-component residual max {norm:.6e} (coverage {res.coverage:.3f})")
    return _emit(report, out, cfg.format, "reduce")


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    ctx = cfg.context()
    phi = load_field(args.component)
    if not isinstance(phi, ScalarGridField):
        raise ConfigError("reconstruct expects a scalar component dump")
    psi = reconstruct(phi, ctx)
    out = cfg.out or "."
    os.makedirs(out, exist_ok=True)
    dump_field(psi, os.path.join(out, "reconstructed.grid"))
    res = dirac_residual(psi, ctx.field, ctx.rep)
    report = Report("reconstruct", seed=cfg.seed)
    report.data.update({"dirac_residual_max": res.max_norm(), "coverage": psi.coverage})
    report.add("coverage", psi.coverage, cfg.tolerances.coverage, psi.coverage >= cfg.tolerances.coverage,
               coverage=psi.coverage)
    print(f"reconstructed Dirac residual max {res.max_norm():.6e}")
    return _emit(report, out, cfg.format, "reconstruct")


def cmd_equivalence(args) -> int:
    cfg = _config(args)
    report = run_equivalence(cfg)
    return _emit(report, cfg.out, cfg.format, "equivalence")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diracone", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--refine", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a built-in gamma representation")
    s.add_argument("representation", help=f"one of {', '.join(BUILTIN_NAMES)}")
    s.add_argument("--dump", help="write the representation as JSON")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("fields", help="list or describe cataloged potentials")
    s.add_argument("action", choices=("list", "describe"))
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_fields)

    s = sub.add_parser("evolve", parents=[common], help="manufacture Dirac solutions (grid dumps)")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("reduce", parents=[common], help="one-component residual of a spinor block")
    s.add_argument("block")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("reconstruct", parents=[common], help="rebuild the spinor from a component dump")
    s.add_argument("component")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("equivalence", parents=[common], help="full round trip with convergence orders")
    s.add_argument("--eta-sweep", dest="eta_sweep", type=int, help="number of random (sigma, tau) draws")
    s.set_defaults(func=cmd_equivalence)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except DegenerateFieldError as exc:
        print(f"degenerate field: {exc} (requires xi_bar F xi^c not identically zero)", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, FieldConfigError, RepresentationError, BasisError, json.JSONDecodeError,
            FileNotFoundError, PermissionError, IsADirectoryError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CoverageError, MarginError, EvolutionError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
