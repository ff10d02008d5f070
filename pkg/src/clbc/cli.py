"""Command line: run scenarios, sweep damping levels, self-check.

    clbc run --scenario case1 --controller clbc --out out/
    clbc sweep --scenario case3 --kd-list 0.01:0.03:0.19 --out sweep/
    clbc check
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .numerics import SimulationDiverged
from .plant import DisturbanceSpec
from .runner import run_scenario
from .scenarios import builtin_case3, load_scenario


def _parse_disturbance(text: str) -> DisturbanceSpec:
    """Parse 'none', 'const:<bound>[:axis]', 'sin:<bound>[:freq[:axis]]',
    'random:<bound>'."""
    parts = text.split(":")
    kind = parts[0]
    if kind == "none":
        return DisturbanceSpec()
    if kind in ("const", "constant"):
        return DisturbanceSpec(kind="constant", bound=float(parts[1]),
                               axis=int(parts[2]) if len(parts) > 2 else 0)
    if kind in ("sin", "sinusoid"):
        return DisturbanceSpec(kind="sinusoid", bound=float(parts[1]),
                               frequency=float(parts[2]) if len(parts) > 2 else 1.0,
                               axis=int(parts[3]) if len(parts) > 3 else 0)
    if kind == "random":
        return DisturbanceSpec(kind="random", bound=float(parts[1]))
    raise ValueError(f"unknown disturbance spec {text!r}")


def _parse_kd_list(text: str) -> list[float]:
    """'start:step:stop' inclusive, or a comma list."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        out, v = [], start
        while v <= stop + 1e-12:
            out.append(round(v, 10))
            v += step
        return out
    return [float(v) for v in text.split(",")]


def _apply_overrides(spec, args):
    kind = args.controller.replace("-", "_") if args.controller else spec.controller
    updates = {"controller": kind}
    if args.kd is not None:
        updates["k_d"] = (args.kd,) * spec.order
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.dt is not None:
        updates["dt"] = args.dt
    if args.duration is not None:
        updates["duration"] = args.duration
    if args.noise_std is not None:
        updates["noise_std"] = args.noise_std
    if args.disturbance is not None:
        updates["disturbance"] = _parse_disturbance(args.disturbance)
    return replace(spec, **updates)


def _cmd_run(args) -> int:
    from .report import write_run_report

    spec = _apply_overrides(load_scenario(args.scenario), args)
    trace, metrics = run_scenario(spec)
    paths = write_run_report(trace, metrics, args.out, stem=args.stem,
                             figures=not args.no_figures)
    for key, path in sorted(paths.items()):
        print(f"{key}: {path}")
    print(f"peak |e1| = {metrics.peak_e1:.4g}, tail RMS e1 = {metrics.tail_rms_e1:.4g}, "
          f"final sigma_c = {metrics.final_sigma_c:.4g}")
    return 0


def _cmd_sweep(args) -> int:
    from .report import render_sweep_figures, write_run_report

    if args.scenario != "case3":
        raise SystemExit("sweep currently targets the case3 damping study")
    os.makedirs(args.out, exist_ok=True)
    kds = _parse_kd_list(args.kd_list)
    labelled = []

    def configure(spec):
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        if args.duration is not None:
            spec = replace(spec, duration=args.duration)
        return spec

    spec = configure(builtin_case3(0.0))
    trace, metrics = run_scenario(spec)
    write_run_report(trace, metrics, args.out, stem="clbc", figures=False)
    labelled.append(("clbc", trace))
    print(f"clbc: time to threshold {metrics.time_to_threshold:.3g} s")

    for kind in ("eps_only", "xi_only"):
        for kd in kds:
            run_spec = configure(replace(builtin_case3(kd), controller=kind))
            stem = f"{kind}_kd{kd:g}"
            try:
                trace, metrics = run_scenario(run_spec)
            except SimulationDiverged as exc:
                # weakly damped ablations can escape in finite time; keep
                # the partial trace in the comparison and move on
                if exc.trace is not None and exc.trace.data.size:
                    exc.trace.to_csv(os.path.join(args.out, f"{stem}_trace.csv"))
                    labelled.append((f"{kind} kd={kd:g} (diverged)", exc.trace))
                print(f"{stem}: diverged at t = {exc.time:.2f} s")
                continue
            write_run_report(trace, metrics, args.out, stem=stem, figures=False)
            labelled.append((f"{kind} kd={kd:g}", trace))
            print(f"{stem}: time to threshold {metrics.time_to_threshold:.3g} s")

    if not args.no_figures:
        for path in render_sweep_figures(labelled, args.out):
            print(f"figure: {path}")
    return 0


def _cmd_check(args) -> int:
    from .selfcheck import run_checks

    return 1 if run_checks(duration=args.duration) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clbc",
                                     description="composite-learning backstepping lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario")
    run_p.add_argument("--scenario", required=True,
                       help="case1 | case2 | case3 | file:<path>")
    run_p.add_argument("--controller", choices=["clbc", "eps-only", "xi-only"])
    run_p.add_argument("--kd", type=float, help="damping gain for all stages")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--dt", type=float)
    run_p.add_argument("--duration", type=float)
    run_p.add_argument("--noise-std", type=float)
    run_p.add_argument("--disturbance",
                       help="none | const:<b>[:axis] | sin:<b>[:freq[:axis]] | random:<b>")
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--stem", default="run")
    run_p.add_argument("--no-figures", action="store_true")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="damping sweep against the ablations")
    sweep_p.add_argument("--scenario", default="case3")
    sweep_p.add_argument("--kd-list", default="0.01:0.03:0.19")
    sweep_p.add_argument("--seed", type=int)
    sweep_p.add_argument("--duration", type=float)
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--no-figures", action="store_true")
    sweep_p.set_defaults(func=_cmd_sweep)

    check_p = sub.add_parser("check", help="run the built-in property checks")
    check_p.add_argument("--duration", type=float, default=10.0)
    check_p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
