"""Command-line entry point: ``aerolattice <subcommand> [options]``.

Every subcommand reads an optional flat config file (``--config``) plus
``--set key=value`` overrides and writes into ``--out``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 planner exhausted on
every input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .costs import load_routing_field, load_separation, save_routing_field, save_separation
from .data import (SceneTemplate, TraceError, desk_template, free_field, ground_truth_separation,
                   group_scenes, ingest, read_demonstrations, read_scenarios, read_traces,
                   synth_expert, synth_scenes, write_demonstrations, write_scenarios)
from .irl import TrainingTrace, margin, train_routing, train_separation
from .metrics import avg_min_path_diff, separation_audit, timeout_fraction, windowed_mean
from .planner import PLAN_COLUMNS, Plan, ara_star, plan_records, plan_sequence, plan_summary

log = logging.getLogger("aerolattice")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_EXHAUSTED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _settings(args):
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    try:
        return cfgmod.load_config(args.config, overrides)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path, obj):
    # non-finite values become null so the file stays valid JSON
    Path(path).write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _load_field(path, st):
    if path in (None, "free"):
        return free_field() if path == "free" else st.empty_field()
    return load_routing_field(path)


# -- subcommands -------------------------------------------------------------

def cmd_ingest(args, st):
    demos = ingest(read_traces(args.traces), st.origin, st.dt_s, st.nominal_speed_mps)
    out = _out(args)
    write_demonstrations(demos, out / "demos.csv")
    _write_json(out / "ingest_diagnostics.json", {d.id: d.diagnostics for d in demos})
    print(f"ingested {len(demos)} demonstrations")
    return EXIT_OK


def cmd_synth(args, st):
    out = _out(args)
    pcfg = st.planner(st.synth_expansions)
    if args.kind == "corridor":
        tpl = desk_template()
        gt = tpl.corridor(outside=st.default_weight)
        n = st.synth_demos
        scen, demos = synth_expert(gt, tpl, n + st.heldout_demos, st.seed, pcfg)
        write_demonstrations(demos[:n], out / "demos.csv")
        write_demonstrations(demos[n:], out / "heldout.csv")
        _write_json(out / "ground_truth.json", {"routing": gt.to_dict()})
    else:
        tpl = SceneTemplate(n_arrivals=args.arrivals)
        gt_sep = ground_truth_separation()
        scen, demos = synth_scenes((free_field(), gt_sep), tpl, st.synth_scenes, st.seed, pcfg)
        write_demonstrations(demos, out / "demos.csv")
        save_separation(gt_sep, out / "ground_truth_separation.csv")
    write_scenarios(scen, out / "scenarios.json")
    print(f"synthesized {len(demos)} demonstrations in {len(scen)} scenarios")
    return EXIT_OK


def _write_plans(path, named):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("plan_id",) + PLAN_COLUMNS)
        for pid, plan in named:
            if isinstance(plan, Plan):
                for row in plan_records(plan):
                    w.writerow([pid] + [repr(float(v)) for v in row])


def cmd_plan(args, st):
    field = _load_field(args.field, st)
    sep = load_separation(args.sep) if args.sep else None
    pcfg = st.planner()
    named = []
    if args.scenarios:
        for sc in read_scenarios(args.scenarios):
            for n, o in enumerate(plan_sequence(sc.arrivals, field, sep, pcfg)):
                named.append((f"{sc.id}_{n}", o))
    else:
        for d in read_demonstrations(args.demos):
            named.append((d.id, ara_star(d.s0, d.sg, field, sep, (), pcfg, t_start=d.t_start)))
    out = _out(args)
    _write_plans(out / "plans.csv", named)
    _write_json(out / "plans_summary.json", {pid: plan_summary(o) for pid, o in named})
    ok = sum(isinstance(o, Plan) for _, o in named)
    print(f"planned {ok}/{len(named)}")
    return EXIT_OK if ok or not named else EXIT_EXHAUSTED


def cmd_train_routing(args, st):
    demos = read_demonstrations(args.demos)
    if not demos:
        raise TraceError("no demonstrations in input")
    field = _load_field(args.field, st)
    out = _out(args)
    tcfg = st.training(checkpoint_dir=str(out / "checkpoints") if args.checkpoints else None)
    field, trace = train_routing(demos, field, tcfg)
    save_routing_field(field, out / "routing_field.csv")
    trace.save(out / "training_trace.csv")
    t = trace.timeouts
    print(f"trained on {len(demos)} demos: {len(field)} cells, timeout fraction {t.mean():.3f}")
    return EXIT_EXHAUSTED if len(t) and t.all() else EXIT_OK


def cmd_train_separation(args, st):
    scenes = group_scenes(read_demonstrations(args.demos))
    if not scenes:
        raise TraceError("no scene-tagged demonstrations in input")
    field = _load_field(args.field or "free", st)
    sep0 = load_separation(args.sep) if args.sep else st.initial_separation()
    sep, trace = train_separation(scenes, field, sep0, st.training())
    out = _out(args)
    save_separation(sep, out / "separation.csv")
    trace.save(out / "separation_trace.csv")
    print(f"separation thresholds v_xy={sep.v_xy:.3f} v_z={sep.v_z:.3f} cells")
    return EXIT_OK


def cmd_eval(args, st):
    out = _out(args)
    report = {}
    pcfg = st.planner()
    if args.demos:
        demos = read_demonstrations(args.demos)
        if not demos:
            raise TraceError("no demonstrations in input")
        fields = {"learned": _load_field(args.field, st)}
        if args.baseline:
            fields["path_length_only"] = free_field()
        for name, field in fields.items():
            pairs = [(ara_star(d.s0, d.sg, field, None, (), pcfg, t_start=d.t_start), d) for d in demos]
            rep = avg_min_path_diff(pairs, st.resolution)
            # margins are always scored under the learned cost
            margins = [margin(fields["learned"], d, o) for o, d in pairs]
            rep.margin_series = margins
            report[name] = rep.as_dict()
            with open(out / f"eval_{name}.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["demo_id", "status", "expansions", "margin"])
                for (o, d), m in zip(pairs, margins):
                    w.writerow([d.id, "ok" if isinstance(o, Plan) else "timeout", o.expansions, repr(m)])
        if all(report[n]["n_pairs"] == 0 for n in report):
            _write_json(out / "metrics.json", report)
            return EXIT_EXHAUSTED
    if args.scenarios:
        field = _load_field(args.field, st)
        sep = load_separation(args.sep) if args.sep else st.initial_separation()
        audits = []
        for sc in read_scenarios(args.scenarios):
            plans = [o for o in plan_sequence(sc.arrivals, field, sep, pcfg) if isinstance(o, Plan)]
            if len(plans) < 2:
                continue
            a = separation_audit(plans, sep, st.resolution, pcfg.goal_half_widths)
            audits.append({"scenario": sc.id, "violation_mass": a.violation_mass,
                           "pairs": [{"pair": list(k), "mass": a.pair_mass[k],
                                      "min_planar_m": a.pair_min_planar_m[k],
                                      "min_vertical_m": a.pair_min_vertical_m[k],
                                      "aligned_samples": a.n_aligned[k]} for k in a.pair_mass]})
        report["separation_audit"] = audits
    if args.trace:
        tr = TrainingTrace.load(args.trace)
        report["training"] = {"margin_windows": windowed_mean(tr.margins, st.window_steps).tolist(),
                              "timeout_windows": timeout_fraction(tr, st.window_steps).tolist()}
    if not report:
        raise UsageError("eval needs --demos, --scenarios or --trace")
    _write_json(out / "metrics.json", report)
    for name in ("learned", "path_length_only"):
        if name in report:
            r = report[name]
            print(f"{name}: avg min path diff {r['avg_min_path_diff']:.3f} cells "
                  f"({r['avg_min_path_diff_m']:.1f} m), timeouts {r['n_timeouts']}")
    return EXIT_OK


def cmd_export(args, st):
    from . import plotting

    out = _out(args)
    written = []
    if args.trace:
        tr = TrainingTrace.load(args.trace)
        w = st.window_steps
        m = windowed_mean(tr.margins, w)
        to = timeout_fraction(tr, w)
        steps = np.arange(len(m)) * w + w
        with open(out / "training_series.csv", "w", newline="", encoding="utf-8") as fh:
            cw = csv.writer(fh)
            cw.writerow(["window_end_step", "mean_margin", "timeout_fraction"])
            cw.writerows(zip(steps.tolist(), m.tolist(), to.tolist()))
        written.append(plotting.plot_series(steps, m, out / "margin.png", "mean margin"))
        written.append(plotting.plot_series(steps, to, out / "timeout_fraction.png",
                                            "fraction of timeouts", ylim=(-0.05, 1.05)))
    if args.demos or args.plans:
        tracks = {}
        for src, tag in ((args.demos, "expert"), (args.plans, "plan")):
            if not src:
                continue
            with open(src, newline="", encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
            key = "demo_id" if tag == "expert" else "plan_id"
            for r in rows:
                tracks.setdefault(f"{tag}:{r[key]}", []).append(
                    (float(r["x_m"]), float(r["y_m"]), float(r["z_m"])))
        if args.limit:
            tracks = dict(list(tracks.items())[:args.limit])
        with open(out / "trajectories.csv", "w", newline="", encoding="utf-8") as fh:
            cw = csv.writer(fh)
            cw.writerow(["track", "x_m", "y_m", "z_m"])
            for name, pts in tracks.items():
                cw.writerows([name, *p] for p in pts)
        if tracks:
            written.append(plotting.plot_trajectories(tracks, out / "trajectories.png"))
    if not written and not (args.demos or args.plans):
        raise UsageError("export needs --trace, --demos or --plans")
    for p in written:
        print(p)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="aerolattice",
                description="Plan arrival trajectories and learn their costs from demonstrations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", parents=[common], help="geodetic traces -> demonstrations")
    s.add_argument("traces")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", parents=[common], help="synthesize expert demonstrations")
    s.add_argument("--kind", choices=("corridor", "scenes"), default="corridor")
    s.add_argument("--arrivals", type=int, default=2, help="arrivals per scene (scenes only)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("plan", parents=[common], help="plan demonstrations' endpoints or scenarios")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--demos")
    g.add_argument("--scenarios")
    s.add_argument("--field", help="routing field file, or 'free' (default: untrained field)")
    s.add_argument("--sep", help="separation file")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("train-routing", parents=[common], help="learn the routing field")
    s.add_argument("--demos", required=True)
    s.add_argument("--field", help="initial routing field")
    s.add_argument("--checkpoints", action="store_true", help="write field checkpoints")
    s.set_defaults(func=cmd_train_routing)

    s = sub.add_parser("train-separation", parents=[common], help="learn separation thresholds")
    s.add_argument("--demos", required=True, help="scene-tagged demonstrations")
    s.add_argument("--field", help="fixed routing field (default: free)")
    s.add_argument("--sep", help="initial separation file")
    s.set_defaults(func=cmd_train_separation)

    s = sub.add_parser("eval", parents=[common], help="metrics on held-out data")
    s.add_argument("--demos")
    s.add_argument("--field")
    s.add_argument("--baseline", action="store_true", help="also evaluate the path-length-only planner")
    s.add_argument("--scenarios")
    s.add_argument("--sep")
    s.add_argument("--trace", help="training trace for windowed margin and timeout series")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("export", parents=[common], help="plot-ready series and figures")
    s.add_argument("--trace")
    s.add_argument("--demos")
    s.add_argument("--plans")
    s.add_argument("--limit", type=int, default=20, help="max trajectories to draw")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        st = _settings(args)
        return args.func(args, st)
    except UsageError as exc:
        print(f"aerolattice: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"aerolattice: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
