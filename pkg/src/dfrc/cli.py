"""Command-line entry point: ``dfrc {design,compare,ambiguity,sweep,validate}``.

Exit codes: 0 success, 2 design infeasible, 1 any other error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import design_guarantee as dg
from . import design_priority as dp
from . import prior_baselines as pb
from . import waveform_lab as wl
from .array_model import DomainError, steering
from .link_metrics import Precoder, comm_sinrs, db, gamma_c_max, gamma_r_max, radar_sinr_over
from .scenario_io import (METHODS, ScenarioError, apply_overrides, build_scenario, export_report,
                          read_config, resolve_path)

log = logging.getLogger("dfrc")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def run_method(scenario, method: str):
    """Run one design method by its scenario-file name."""
    if method == "radar_guarantee":
        return dg.radar_guarantee(scenario)
    if method == "comm_guarantee":
        return dg.comm_guarantee(scenario)
    if method in ("priority_comb", "priority_greedy"):
        variant = dp.Variant.GREEDY if method == "priority_greedy" else dp.Variant.COMBINATORIAL
        return dp.radar_priority(scenario, dp.PrioritySpec.for_scenario(scenario, variant))
    if method == "mse":
        return pb.mse_design(scenario)
    if method == "zf":
        return pb.zf_design(scenario)
    raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _load(args, extra_overrides=()):
    raw = read_config(resolve_path(args.scenario))
    overrides = list(args.override or []) + list(extra_overrides)
    if args.seed is not None:
        overrides.append(f"signaling.seed={args.seed}")
    if getattr(args, "trials", None) is not None:
        overrides.append(f"waveform.trials={args.trials}")
    try:
        raw = apply_overrides(raw, overrides)
    except (KeyError, IndexError, TypeError, ValueError) as err:
        if isinstance(err, ScenarioError):
            raise
        raise ScenarioError(f"bad override: {err}") from None
    return build_scenario(raw)


def _out_dir(args, scenario) -> Path:
    return Path(args.out) if args.out else Path("out") / scenario.name


def _fmt_db(x) -> str:
    v = float(db(float(x)))
    return f"{v:.2f} dB" if np.isfinite(v) else "-inf dB"


def _print_report(report):
    if not report.feasible:
        print(f"{report.method}: infeasible ({report.diagnostics.get('reason', '')})")
        return
    comm = ", ".join(_fmt_db(s) for s in report.achieved_comm_sinr)
    print(f"{report.method}: radar {report.radar_fraction:.2%} / comm {report.comm_fraction:.2%}; "
          f"comm SINR [{comm}]; min radar SINR {_fmt_db(report.achieved_radar_sinr_min)}")


def cmd_design(args) -> int:
    scenario = _load(args)
    method = args.method or scenario.design.method
    report = run_method(scenario, method)
    export_report(report, scenario, _out_dir(args, scenario))
    _print_report(report)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _waveform_setup(scenario):
    w = scenario.waveform
    chirp = wl.lfm_chirp(w.chirp_duration_s, w.chirp_start_hz, w.chirp_end_hz, w.sample_rate_hz)
    ref = wl.ambiguity(chirp, w.delays, w.dopplers_hz) ** 2
    return chirp, ref


def _method_ambiguity(scenario, report, chirp):
    w = scenario.waveform
    return wl.monte_carlo_ambiguity(report.precoder, w.target_angle, chirp, scenario.signaling,
                                    w.trials, w.delays, w.dopplers_hz, scenario.geometry)


def _methods(args, scenario):
    if args.methods:
        return [m.strip() for m in args.methods.split(",") if m.strip()]
    return list(scenario.design.compare_methods) or [scenario.design.method]


def cmd_compare(args) -> int:
    scenario = _load(args)
    methods = _methods(args, scenario)
    out = _out_dir(args, scenario)
    chirp, ref = _waveform_setup(scenario) if args.ambiguity else (None, None)
    rows, failed, feasible = [], False, 0
    for m in methods:
        try:
            report = run_method(scenario, m)
        except (DomainError, ArithmeticError, ValueError) as err:
            print(f"{m}: error: {err}", file=sys.stderr)
            rows.append([m, "error", "", "", "", "", ""])
            failed = True
            continue
        export_report(report, scenario, out / m)
        _print_report(report)
        if not report.feasible:
            rows.append([m, "infeasible", "", "", "", "", ""])
            continue
        feasible += 1
        sim = ""
        if args.ambiguity:
            avg = _method_ambiguity(scenario, report, chirp)
            sim = repr(wl.chirp_similarity(avg, ref))
        comm = report.achieved_comm_sinr
        rows.append([m, "ok", repr(report.radar_fraction), repr(report.comm_fraction),
                     repr(float(db(comm.min()))) if comm.size and comm.min() > 0 else "",
                     repr(float(db(report.achieved_radar_sinr_min))), sim])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "methods_summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["method", "status", "radar_fraction", "comm_fraction", "min_comm_sinr_db",
                     "min_radar_sinr_db", "chirp_similarity"])
        wr.writerows(rows)
    if failed:
        return EXIT_ERROR
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_ambiguity(args) -> int:
    scenario = _load(args)
    out = _out_dir(args, scenario)
    out.mkdir(parents=True, exist_ok=True)
    w = scenario.waveform
    chirp, ref = _waveform_setup(scenario)
    wl.write_ambiguity_csv(out / "ambiguity_chirp.csv", ref, w.delays, w.dopplers_hz)
    scores = []
    status = EXIT_OK
    for m in _methods(args, scenario):
        report = run_method(scenario, m)
        if not report.feasible:
            print(f"{m}: infeasible, no ambiguity computed")
            scores.append([m, ""])
            status = EXIT_INFEASIBLE
            continue
        avg = _method_ambiguity(scenario, report, chirp)
        wl.write_ambiguity_csv(out / f"ambiguity_{m}.csv", avg, w.delays, w.dopplers_hz)
        score = wl.chirp_similarity(avg, ref)
        scores.append([m, repr(score)])
        print(f"{m}: distance to chirp ambiguity {score:.4f}")
    with open(out / "chirp_similarity.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["method", "chirp_similarity"])
        wr.writerows(scores)
    return status


def cmd_sweep(args) -> int:
    base = _load(args)
    method = args.method or base.design.method
    out = _out_dir(args, base)
    out.mkdir(parents=True, exist_ok=True)
    rows, any_ok = [], False
    for value in args.values:
        scenario = _load(args, [f"{args.param}={value}"])
        report = run_method(scenario, method)
        export_report(report, scenario, out / f"{args.param}={value}")
        if report.feasible:
            any_ok = True
            comm = report.achieved_comm_sinr
            rows.append([value, "ok", repr(report.radar_fraction), repr(report.comm_fraction),
                         repr(float(db(comm.min()))) if comm.size and comm.min() > 0 else "",
                         repr(float(db(report.achieved_radar_sinr_min)))])
        else:
            rows.append([value, "infeasible", "", "", "", ""])
        print(f"{args.param}={value}: ", end="")
        _print_report(report)
    with open(out / "sweep.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([args.param, "status", "radar_fraction", "comm_fraction", "min_comm_sinr_db",
                     "min_radar_sinr_db"])
        wr.writerows(rows)
    return EXIT_OK if any_ok else EXIT_INFEASIBLE


def validation_checks(scenario, report) -> list:
    """Structural checks on a finished design: ``[(name, passed, detail)]``."""
    checks = []
    W = report.precoder
    p = W.antenna_powers()
    checks.append(("per-antenna power", bool(np.allclose(p, 1.0, atol=1e-6)),
                   f"max deviation {np.max(np.abs(p - 1)):.2e}"))
    if report.pre_reduction is None and scenario.nodes:
        cov = report.covariances
        W_full = dg.recover_precoders(cov, scenario.nodes)
        ok = True
        for k, node in enumerate(scenario.nodes):
            g = node.channel
            lhs = abs(np.vdot(g, W_full.W_c[:, k])) ** 2
            rhs = float(np.real(np.vdot(g, cov.R_k[k] @ g)))
            ok &= abs(lhs - rhs) <= 1e-8 * max(rhs, 1e-12) + 1e-12
        checks.append(("rank-one recovery keeps comm gains", bool(ok), ""))
    M = scenario.geometry.num_elements
    # all power on one radar beam steered at a sector angle, with no comm
    aim = steering(scenario.geometry, scenario.radar.sector.as_array()[0])
    beam = Precoder(np.zeros((M, len(scenario.nodes))), aim[:, None])
    got = float(radar_sinr_over(beam, scenario.radar, scenario.geometry)[0])
    want = gamma_r_max(scenario.radar, scenario.geometry)
    checks.append(("radar bound saturation", abs(got - want) <= 1e-10 * want,
                   f"{got:.6g} vs {want:.6g}"))
    if scenario.nodes:
        k = int(np.argmin([np.vdot(n.channel, n.channel).real for n in scenario.nodes]))
        g = scenario.nodes[k].channel
        Wc = np.zeros((M, len(scenario.nodes)), dtype=complex)
        Wc[:, k] = np.exp(1j * np.angle(g))
        got = float(comm_sinrs(Precoder(Wc, np.zeros((M, 0))), scenario.nodes)[k])
        want = gamma_c_max(scenario.nodes, scenario.geometry)
        checks.append(("comm bound saturation", abs(got - want) <= 1e-10 * want,
                       f"{got:.6g} vs {want:.6g}"))
    return checks


def cmd_validate(args) -> int:
    scenario = _load(args)
    report = run_method(scenario, args.method or scenario.design.method)
    if not report.feasible:
        print(f"{report.method}: infeasible, nothing to validate")
        return EXIT_INFEASIBLE
    ok = True
    for name, passed, detail in validation_checks(scenario, report):
        print(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip())
        ok &= passed
    return EXIT_OK if ok else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfrc", description="DFRC precoder design tools")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario_pos", nargs="?", metavar="SCENARIO",
                       help="scenario file or bundled name (e.g. fig2)")
        p.add_argument("--scenario", dest="scenario_opt")
        p.add_argument("--out", help="output directory (default out/<scenario name>)")
        p.add_argument("--seed", type=int)
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="dotted config override, repeatable")
        p.add_argument("--trials", type=int)
        p.add_argument("--method", choices=METHODS)
        return p

    common(sub.add_parser("design", help="run one design method and export it"))
    p = common(sub.add_parser("compare", help="run several methods on one scenario"))
    p.add_argument("--methods", help="comma-separated methods (default from scenario)")
    p.add_argument("--no-ambiguity", dest="ambiguity", action="store_false")
    p = common(sub.add_parser("ambiguity", help="averaged ambiguity functions per method"))
    p.add_argument("--methods")
    p = common(sub.add_parser("sweep", help="repeat a design over values of one parameter"))
    p.add_argument("--param", required=True, help="dotted config key")
    p.add_argument("--values", required=True, nargs="+")
    common(sub.add_parser("validate", help="structural checks on a scenario's design"))
    return parser


COMMANDS = {"design": cmd_design, "compare": cmd_compare, "ambiguity": cmd_ambiguity,
            "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.scenario = args.scenario_opt or args.scenario_pos
    if not args.scenario:
        parser.error("a scenario is required (positional or --scenario)")
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, DomainError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
