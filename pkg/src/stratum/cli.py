"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 certificate
failure.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import fem
from ._env import thread_cap
from .diagnostics import gamma_sweep, internal_ball_check, internal_ball_sweep
from .energy import equilibrium, evaluate
from .io import (RunManifest, build_manifest, emit_report, format_profile, load_config,
                 load_profile, sha256_file, write_csv)
from .minimizer import MinimizeSpec, certify, minimize
from .relaxation import recovery_sequence, step_energies, surface_gap

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CERT = 0, 2, 3, 4

log = logging.getLogger("stratum")


class CertificateFailure(Exception):
    pass


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _mode_for(tag, cfg):
    tag = tag.replace("-", "_")
    if tag in ("F", "F0"):
        return fem.SHARP
    if cfg.transition is None:
        raise ValueError(f"{tag} needs transition parameters: set 'delta' in the config")
    mismatch = "Edelta" if tag == "Fdelta" else cfg["relaxed_mismatch"]
    return fem.ElasticMode.delta(cfg.transition, mismatch)


def _displacement(p, cfg, mode):
    # e0 = 0 makes u = 0 the equilibrium; skip the solve
    if cfg.materials.e0 == 0.0:
        return None
    return equilibrium(p, cfg.materials, mode, cfg.depth, cfg.resolution, cfg.bc, cfg.tol_solve)


# ----------------------------------------------------------------------
# subcommands


def cmd_evaluate(a) -> int:
    p, cfg = load_profile(a.profile), load_config(a.config)
    mode = _mode_for(a.functional, cfg)
    u = _displacement(p, cfg, mode)
    kw = {}
    if a.functional.replace("-", "_") == "Fdelta_relaxed":
        kw["mismatch"] = cfg["relaxed_mismatch"]
    rep = evaluate(a.functional, u, p, cfg.materials, cfg.transition, **kw)
    with _output(a.out) as fh:
        emit_report(rep, fh)
    return EXIT_OK


def cmd_minimize(a) -> int:
    p, cfg = load_profile(a.profile), load_config(a.config)
    target = cfg["min.target_area"]
    spec = MinimizeSpec(
        initial=p, target_area=p.film_area() if target is None else target, mu=cfg["min.mu"],
        lambda_schedule=cfg["min.lambda_schedule"], knot_count=cfg["min.knot_count"],
        max_outer_iters=cfg["min.max_iters"], step_tol=cfg["min.step_tol"],
        grad_tol=cfg["min.grad_tol"], area_tol=cfg["min.area_tol"],
        fd_rel_step=cfg["min.fd_rel_step"], depth=cfg.depth, resolution=cfg.resolution,
        seed=cfg.seed, perimeter_tol=cfg["min.perimeter_tol"])
    res = minimize(spec, cfg.materials)
    with _output(a.out) as fh:
        emit_report(res.report, fh)
    if a.history:
        cols = ("lambda", "iter", "penalized", "F", "area_error", "step", "locality", "H1")
        with open(a.history, "w", newline="\n") as fh:
            write_csv(fh, cols, ([row[c] for c in cols] for row in res.history))
    if a.profile_out:
        Path(a.profile_out).write_text(format_profile(res.profile))
    print(f"lambda_used = {res.lambda_used:.17g}", file=sys.stderr)
    print(f"area_error = {res.area_error:.17g}", file=sys.stderr)
    print(f"converged = {res.converged}", file=sys.stderr)
    if a.certify:
        cert = certify(res, cfg.materials, spec, cfg["min.certify_samples"], cfg.seed,
                       cfg["min.certify_tol"])
        print(f"certificate min_change = {cert.min_change:.17g} passed = {cert.passed}",
              file=sys.stderr)
        if not cert.passed:
            raise CertificateFailure("sampled local-minimality certificate failed")
    return EXIT_OK


def cmd_gamma_sweep(a) -> int:
    p, cfg = load_profile(a.profile), load_config(a.config)
    try:
        deltas = [float(s) for s in a.deltas.split(",") if s.strip()]
    except ValueError as exc:
        raise ValueError(f"--deltas: {exc}") from None
    if not deltas:
        raise ValueError("--deltas: empty list")
    lift = a.lift or cfg["sweep.lift"]
    u = _displacement(p, cfg, fem.SHARP)
    f = cfg.transition.f if cfg.transition is not None else cfg["f"]
    sw = gamma_sweep(u, p, cfg.materials, deltas, f, lift, cfg["sweep.lift_scale"])
    with _output(a.out) as fh:
        write_csv(fh, ("delta", "F_delta", "F", "gap", "lift_eps"), sw.table())
    return EXIT_OK


def cmd_relax_sequence(a) -> int:
    p, cfg = load_profile(a.profile), load_config(a.config)
    m = cfg.materials
    steps = a.steps if a.steps is not None else cfg["relax.steps"]
    seq = recovery_sequence(p, steps, cfg["relax.r"], cfg["relax.mode"], m, cfg["relax.L0"],
                            cfg["relax.lift_scale"])
    u = _displacement(p, cfg, fem.SHARP)
    area = p.film_area()
    rows = []
    for st in seq.steps:
        lhs, rhs = surface_gap(st, m)
        F0, F = step_energies(seq, st, m, u)
        rows.append((st.n, st.L, st.eps_n, st.lambda_n, st.mu_n, st.lift_eps, st.t_n,
                     st.h_n.film_area() - area, st.sigma, lhs, rhs, F0.total, F.total,
                     abs(F0.total - F.total) / abs(F.total)))
    cols = ("n", "L", "eps_n", "lambda_n", "mu_n", "lift_eps", "t_n", "area_error", "sigma",
            "surface_gap", "surface_bound", "F0", "F", "rel_error")
    with _output(a.out) as fh:
        write_csv(fh, cols, rows)
    return EXIT_OK


def cmd_check_ball(a) -> int:
    p = load_profile(a.profile)
    cfg = load_config(a.config) if a.config else None
    n_dirs = cfg["ball.n_dirs"] if cfg else 32
    circle = cfg["ball.circle_dirs"] if cfg else 720
    if a.sweep:
        cert = internal_ball_sweep(p, a.spacing, n_dirs)
    else:
        if a.rho is None:
            raise ValueError("--rho is required unless --sweep is given")
        cert = internal_ball_check(p, a.rho, a.spacing, n_dirs, circle_dirs=circle)
    with _output(a.out) as fh:
        fh.write(cert.summary() + "\n")
    if not cert.passed:
        raise CertificateFailure("internal-ball condition fails at some samples")
    return EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "minimize": cmd_minimize,
    "gamma-sweep": cmd_gamma_sweep,
    "relax-sequence": cmd_relax_sequence,
    "check-ball": cmd_check_ball,
}

# arguments that name input files (hashed into the manifest)
_INPUT_ARGS = ("profile", "config")
# arguments that are run plumbing, not part of the computation
_PLUMBING = ("manifest", "command", "func", "verbose")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stratum", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--profile", required=True)
        sp.add_argument("--config", required=config_required)
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--manifest", default=None, help="write a run manifest here")

    sp = sub.add_parser("evaluate", help="energy report of a profile")
    common(sp)
    sp.add_argument("--functional", default="F", choices=("F", "F0", "Fdelta", "Fdelta-relaxed"))

    sp = sub.add_parser("minimize", help="penalized volume-constrained minimization")
    common(sp)
    sp.add_argument("--history", default=None)
    sp.add_argument("--profile-out", default=None)
    sp.add_argument("--certify", action="store_true")

    sp = sub.add_parser("gamma-sweep", help="transition-layer energy gap along deltas")
    common(sp)
    sp.add_argument("--deltas", required=True)
    sp.add_argument("--lift", choices=("auto", "on", "off"), default=None)

    sp = sub.add_parser("relax-sequence", help="recovery sequence diagnostics")
    common(sp)
    sp.add_argument("--steps", type=int, default=None)

    sp = sub.add_parser("check-ball", help="internal-ball certificate")
    common(sp, config_required=False)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--spacing", type=float, required=True)
    sp.add_argument("--sweep", action="store_true")

    sp = sub.add_parser("replay", help="re-run a manifest")
    sp.add_argument("manifest_file")
    sp.add_argument("--out", default=None)
    return ap


def _replay_args(a, parser):
    man = RunManifest.load(a.manifest_file)
    for key, info in man.inputs.items():
        if sha256_file(info["path"]) != info["sha256"]:
            raise ValueError(f"input {key} ({info['path']}) changed since the manifest was written")
    argv = [man.command]
    for k, v in man.arguments.items():
        if v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        argv += [flag] if v is True else [flag, str(v)]
    if a.out is not None:
        argv += ["--out", a.out]
    return parser.parse_args(argv)


def _run(a, parser) -> int:
    if a.command == "replay":
        a = _replay_args(a, parser)
    code = COMMANDS[a.command](a)
    if getattr(a, "manifest", None):
        args = {k: v for k, v in vars(a).items() if k not in _PLUMBING and k != "out"}
        inputs = {k: getattr(a, k) for k in _INPUT_ARGS if getattr(a, k, None)}
        cfg = load_config(a.config) if getattr(a, "config", None) else None
        build_manifest(a.command, args, cfg, inputs).save(a.manifest)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        thread_cap()
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(a, parser)
    except CertificateFailure as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
