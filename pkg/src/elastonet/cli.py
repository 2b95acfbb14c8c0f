"""Command line front end.

Exit codes: 0 success, 1 validation or synthesis failure, 2 usage or parse
error (including unsupported dimensions).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io as fileio
from .errors import NotSupported, ParseError, ResonanceProximity, RetryExhausted, UnfixableFloppy, ValidationFailed
from .model import DEFAULT_TOL, ModalResponse, StaticResponse
from .realizability import validate_modal, validate_static
from .reduce import PINV_RCOND, dynamic_response_at, extract_modal, floppy_modes, static_response
from .robust import Perturbation, drift_grid, eliminate_floppy, stability_experiment
from .synth2d import PlacementPolicy, synth_static

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ELASTONET_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ELASTONET_SEED must be an integer, got {env!r}")


def parse_sweep(text: str) -> np.ndarray:
    """``min:max:count`` to ``count`` evenly spaced frequencies."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"--sweep expects min:max:count, got {text!r}")
    if count < 1 or lo < 0 or hi < lo:
        raise UsageError(f"--sweep needs 0 <= min <= max and count >= 1, got {text!r}")
    return np.linspace(lo, hi, count)


def parse_floats(text: str, flag: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}")


def sweep_rows(net, omegas) -> tuple:
    """Response matrix per frequency; ``None`` where a resonance is too close."""
    mats = []
    for w in omegas:
        try:
            mats.append(dynamic_response_at(net, float(w)))
        except ResonanceProximity:
            mats.append(None)
    return mats


def write_csv(out, omegas, mats, nd: int) -> None:
    header = ["omega"] + [f"w_{i + 1}_{j + 1}" for i in range(nd) for j in range(nd)]
    out.write(",".join(header) + "\n")
    for w, m in zip(omegas, mats):
        vals = [float("nan")] * (nd * nd) if m is None else m.ravel()
        out.write(",".join(repr(float(v)) for v in [w, *vals]) + "\n")


def _print_modal(modal: ModalResponse, out) -> None:
    print(f"terminals: {len(modal.terminal_positions)}  dimension: {modal.dimension}", file=out)
    print(f"terminal masses: {' '.join(f'{m:.6g}' for m in modal.masses)}", file=out)
    if not modal.terms:
        print("resonances: none", file=out)
    for w2, C in modal.terms:
        s = np.linalg.svd(C, compute_uv=False)
        rank = int(np.sum(s > 1e-9 * max(s[0], 1e-300))) if s.size else 0
        print(f"resonance omega^2={w2:.12g} omega={np.sqrt(w2):.12g} residue_rank={rank}", file=out)


def cmd_analyze(args, out) -> int:
    net = fileio.read_network(args.network)
    modal = extract_modal(net)
    print(f"nodes: {len(net.nodes)}  springs: {len(net.springs)}", file=out)
    _print_modal(modal, out)
    if args.export_spec:
        spec = modal if (modal.terms or np.any(modal.M)) else static_response(net)
        fileio.write_response(spec, args.export_spec)
        print(f"wrote spec {args.export_spec}", file=out)
    if args.sweep is not None and args.omega is not None:
        raise UsageError("use either --omega or --sweep, not both")
    if args.sweep is not None:
        omegas = parse_sweep(args.sweep)
    elif args.omega is not None:
        omegas = np.asarray(parse_floats(args.omega, "--omega"))
    else:
        return EXIT_OK
    mats = sweep_rows(net, omegas)
    flagged = sum(m is None for m in mats)
    if flagged:
        print(f"{flagged} frequencies too close to a resonance (rows are nan)", file=out)
    nd = modal.A.shape[0]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, omegas, mats, nd)
        print(f"wrote csv {args.csv}", file=out)
    else:
        write_csv(out, omegas, mats, nd)
    if args.plot:
        from .plotting import plot_sweep

        plot_sweep(omegas, mats, modal.resonances, args.plot, title=Path(args.network).name)
        print(f"wrote plot {args.plot}", file=out)
    return EXIT_OK


def _validate(spec, tol):
    if isinstance(spec, StaticResponse):
        return validate_static(spec, tol)
    return validate_modal(spec, tol)


def cmd_validate(args, out) -> int:
    spec = fileio.read_response(args.spec)
    report = _validate(spec, args.tol)
    for line in report.lines():
        print(line, file=out)
    print("PASS" if report.ok else "FAIL", file=out)
    return EXIT_OK if report.ok else EXIT_FAIL


def _synthesize(spec, policy):
    from .dynsynth import synth_dynamic

    if isinstance(spec, StaticResponse):
        if spec.dimension != 2:
            raise NotSupported("synthesis is implemented for planar (d=2) networks only")
        return synth_static(spec, policy)
    return synth_dynamic(spec, policy)


def _print_summary(report, out) -> None:
    s = report.summary()
    print(f"roundtrip relative error: {s['roundtrip_error']:.3e}", file=out)
    print(f"nodes: {s['nodes']} (interior {s['interior_nodes']})  springs: {s['springs']}", file=out)
    print(f"spring crossings: {s['crossings']}", file=out)
    print(f"placement eps: {s['eps_hull']:.6g}", file=out)


def cmd_synthesize(args, out) -> int:
    spec = fileio.read_response(args.spec)
    _validate(spec, args.tol).raise_if_failed()
    policy = PlacementPolicy(eps_hull=args.eps, rng_seed=_seed(args))
    report = _synthesize(spec, policy)
    _print_summary(report, out)
    if args.output:
        fileio.write_network(report.network, args.output)
        print(f"wrote network {args.output}", file=out)
    if args.plot:
        from .plotting import plot_network

        plot_network(report.network, args.plot)
        print(f"wrote plot {args.plot}", file=out)
    return EXIT_OK


def cmd_roundtrip(args, out) -> int:
    from .dynsynth import compare_modal, resynthesize

    net = fileio.read_network(args.network)
    modal = extract_modal(net)
    report = validate_modal(modal, args.tol)
    _print_modal(modal, out)
    print(f"necessity check: {'PASS' if report.ok else 'FAIL'}", file=out)
    if not report.ok:
        for line in report.lines():
            print(line, file=out)
        return EXIT_FAIL
    if net.dimension != 2:
        print("synthesis skipped: only planar (d=2) networks can be synthesized", file=out)
        return EXIT_OK
    policy = PlacementPolicy(eps_hull=args.eps, rng_seed=_seed(args))
    modal, synth = resynthesize(net, policy)
    again = extract_modal(synth.network)
    diff = compare_modal(modal, again)
    _print_summary(synth, out)
    print(f"max relative error over frequency grid: {synth.roundtrip_error:.3e}", file=out)
    print(f"resonance mismatch: {diff['resonance']:.3e}", file=out)
    if args.output:
        fileio.write_network(synth.network, args.output)
        print(f"wrote network {args.output}", file=out)
    return EXIT_OK


def cmd_floppy(args, out) -> int:
    net = fileio.read_network(args.network)
    modes = floppy_modes(net, args.tol if args.tol is not None else PINV_RCOND)
    if modes.empty:
        print("no floppy modes", file=out)
    else:
        print(f"{modes.count} floppy mode(s) on interior nodes {', '.join(modes.interior)}", file=out)
        for k in range(modes.count):
            print(f"mode {k + 1}: " + " ".join(f"{v:+.6f}" for v in modes.basis[:, k]), file=out)
    if args.fix is None:
        return EXIT_OK
    policy = PlacementPolicy(rng_seed=_seed(args))
    try:
        fix = eliminate_floppy(net, args.fix, policy)
    except UnfixableFloppy as exc:
        print(f"cannot fix: {exc}", file=out)
        return EXIT_FAIL
    print(f"added springs of stiffness {args.fix:.3g}; anchors: {', '.join(fix.anchor_nodes) or 'none'}", file=out)
    print(f"remaining floppy modes: {fix.remaining_modes.count}", file=out)
    print(f"response drift: {fix.residual_drift:.6e}", file=out)
    if args.output:
        fileio.write_network(fix.fixed_network, args.output)
        print(f"wrote network {args.output}", file=out)
    return EXIT_OK if fix.success else EXIT_FAIL


def cmd_perturb(args, out) -> int:
    net = fileio.read_network(args.network)
    eps = sorted(parse_floats(args.eps, "--eps"))
    if not eps or min(eps) <= 0:
        raise UsageError("--eps needs positive values")
    rng = np.random.default_rng(_seed(args))
    pert = Perturbation({s.endpoints: float(rng.uniform(0.5, 1.5)) for s in net.springs})
    omegas = np.concatenate([[0.0], drift_grid(net, count=8)])
    rep = stability_experiment(net, pert, eps, omegas)
    for line in rep.lines():
        print(line, file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elastonet", description="Spring-mass network response analysis and synthesis.")
    p.add_argument("--tol", type=float, default=None, help="override the default numerical tolerance")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="modal form and frequency sweep of a network")
    a.add_argument("network")
    a.add_argument("--omega", help="comma-separated frequencies")
    a.add_argument("--sweep", help="min:max:count")
    a.add_argument("--csv", help="write the sweep to this file instead of stdout")
    a.add_argument("--plot", help="write a PNG of the sweep")
    a.add_argument("--export-spec", help="write the response as a spec file")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="check a response spec for realizability")
    v.add_argument("spec")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("synthesize", help="build a planar network from a response spec")
    s.add_argument("spec")
    s.add_argument("--eps", type=float, default=0.5, help="hull neighbourhood size")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("-o", "--output")
    s.add_argument("--plot", help="write a PNG of the synthesized network")
    s.set_defaults(func=cmd_synthesize)

    r = sub.add_parser("roundtrip", help="analyze then resynthesize a network")
    r.add_argument("network")
    r.add_argument("--eps", type=float, default=0.5)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_roundtrip)

    f = sub.add_parser("floppy", help="list floppy modes, optionally remove them")
    f.add_argument("network")
    f.add_argument("--fix", type=float, help="stiffness of the added weak springs")
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("-o", "--output")
    f.set_defaults(func=cmd_floppy)

    q = sub.add_parser("perturb", help="response drift under stiffness perturbations")
    q.add_argument("network")
    q.add_argument("--eps", required=True, help="comma-separated perturbation sizes")
    q.add_argument("--seed", type=int, default=None)
    q.set_defaults(func=cmd_perturb)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.tol is None and args.command in ("validate", "synthesize", "roundtrip"):
        args.tol = DEFAULT_TOL
    try:
        return args.func(args, out)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotSupported as exc:
        print(f"not supported: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except RetryExhausted as exc:
        print(f"synthesis failed: {exc}; try a different --seed", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
