"""Command-line front end.

    flapsim run <preset|config.yaml> [--seed N] [--precision P] [--out DIR]
    flapsim replay <log.csv> [--gains FILE]
    flapsim compare-precision <preset|config.yaml> [--seed N]
    flapsim report <log.csv>
    flapsim serve <preset|config.yaml> [--host H] [--port P] [--rtf F]
                  [--headless] [--autostart] [--session-out FILE]

Exit code is 0 only when every acceptance threshold configured for the
run passes (runs with no thresholds just need to finish).
"""

import argparse
import sys
import time

import yaml

from . import metrics
from .config import PRESETS, resolve_config
from .estimator import EstimatorConfig
from .harness import (compare_precision, replay_estimation_rms,
                      replay_estimator, replay_matches_log, run_experiment)
from .logbook import FlightLog


def _print_report(rep):
    d = rep.to_dict()
    width = max(len(k) for k in d)
    for k, v in d.items():
        if isinstance(v, float):
            print(f"  {k:<{width}}  {v:.4f}")
        else:
            print(f"  {k:<{width}}  {v}")


def _print_acceptance(rows):
    ok_all = True
    for r in rows:
        status = "PASS" if r["ok"] else "FAIL"
        ok_all &= r["ok"]
        print(f"  [{status}] {r['name']}: {r['value']:.4g} "
              f"(limit {r['limit']:.4g})")
    return ok_all


def cmd_run(args):
    cfg = resolve_config(args.config, seed=args.seed,
                         precision=args.precision)
    t0 = time.perf_counter()
    log, rep = run_experiment(cfg, out_dir=args.out)
    wall = time.perf_counter() - t0
    print(f"{cfg.name}: seed {cfg.seed}, {cfg.precision} precision, "
          f"{len(log)} ticks in {wall:.2f} s wall")
    _print_report(rep)
    print(f"  log sha256: {log.sha256()}")
    if args.out:
        print(f"  written to {args.out}/")
    if not cfg.acceptance:
        return 0
    print("acceptance:")
    rows = metrics.evaluate_acceptance(cfg.acceptance, log, rep)
    return 0 if _print_acceptance(rows) else 1


def cmd_replay(args):
    log = FlightLog.load(args.log)
    gains = None
    if args.gains:
        with open(args.gains) as f:
            data = yaml.safe_load(f) or {}
        if "estimator" in data:
            data = data["estimator"]
        gains = EstimatorConfig(**data)
    estimates = replay_estimator(log, gains=gains)
    rms = replay_estimation_rms(log, estimates)
    print(f"replayed {len(estimates)} ticks of {args.log}")
    for k, v in rms.items():
        print(f"  est {k}: {v:.4f}")
    if gains is None:
        exact = replay_matches_log(log, estimates)
        print(f"  bit-identical to logged estimates: {exact}")
        return 0 if exact else 1
    return 0


def cmd_compare_precision(args):
    cfg = resolve_config(args.config, seed=args.seed)
    div = compare_precision(cfg)
    print(f"{cfg.name}: double vs single over {div['ticks']} ticks")
    for k, v in div.items():
        if k != "ticks":
            print(f"  {k}: {v:.6g}")
    ok = (div["max_position_cm"] < 0.1 and div["max_attitude_deg"] < 0.1)
    print("acceptance:")
    print(f"  [{'PASS' if ok else 'FAIL'}] divergence < 0.1 cm / 0.1 deg")
    return 0 if ok else 1


def cmd_report(args):
    log = FlightLog.load(args.log)
    rep = metrics.report(log)
    name = log.meta.get("preset", "run")
    print(f"{name}: {len(log)} ticks, seed {log.meta.get('seed')}")
    _print_report(rep)
    acceptance = log.meta.get("config", {}).get("acceptance", {})
    if not acceptance:
        return 0
    print("acceptance:")
    rows = metrics.evaluate_acceptance(acceptance, log, rep)
    return 0 if _print_acceptance(rows) else 1


def cmd_serve(args):
    from .bridge import serve
    cfg = resolve_config(args.config, seed=args.seed,
                         precision=args.precision)
    if cfg.mission.get("kind") != "interactive":
        print(f"note: mission kind {cfg.mission.get('kind')!r} rejects "
              "operator commands (telemetry only)", file=sys.stderr)
    server = serve(cfg, host=args.host, port=args.port,
                   rtf=None if args.headless else args.rtf,
                   autostart=args.autostart)
    print(f"telemetry bridge on {server.host}:{server.port} "
          f"(rtf={'max' if args.headless else args.rtf}, "
          f"decimation {cfg.rates.control / server.decim:.0f} Hz)")
    print("native framing: 4-byte big-endian length + JSON; "
          "WebSocket upgrade on the same port")
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        if args.session_out:
            path = server.save_session(args.session_out)
            print(f"session persisted to {path}")
        server.stop()
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="flapsim",
        description="flapping-wing MAV flight simulator and autonomy stack")
    sub = p.add_subparsers(dest="command", required=True)

    presets = ", ".join(sorted(PRESETS))

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("config", help=f"preset ({presets}) or YAML config path")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--precision", choices=("single", "double"), default=None)
    r.add_argument("--out", default=None, help="directory for log + sidecar")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-run the estimator over a log")
    rp.add_argument("log", help="flight log CSV")
    rp.add_argument("--gains", default=None,
                    help="YAML estimator gains (else the logged ones)")
    rp.set_defaults(func=cmd_replay)

    cp = sub.add_parser("compare-precision",
                        help="dual single/double run divergence")
    cp.add_argument("config", help=f"preset ({presets}) or YAML config path")
    cp.add_argument("--seed", type=int, default=None)
    cp.set_defaults(func=cmd_compare_precision)

    rt = sub.add_parser("report", help="metrics from a saved log")
    rt.add_argument("log", help="flight log CSV")
    rt.set_defaults(func=cmd_report)

    sv = sub.add_parser("serve", help="live telemetry bridge for operators")
    sv.add_argument("config", help=f"preset ({presets}) or YAML config path")
    sv.add_argument("--seed", type=int, default=None)
    sv.add_argument("--precision", choices=("single", "double"),
                    default=None)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8750)
    sv.add_argument("--rtf", type=float, default=1.0,
                    help="real-time factor (wall-clock pacing)")
    sv.add_argument("--headless", action="store_true",
                    help="no pacing: run as fast as possible")
    sv.add_argument("--autostart", action="store_true",
                    help="tick immediately instead of waiting for start")
    sv.add_argument("--session-out", default=None,
                    help="persist the flown commands as a config on exit")
    sv.set_defaults(func=cmd_serve)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
