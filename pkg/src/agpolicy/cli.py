"""Command-line entry point: ``agpolicy <command> [options]``.

Exit status is 0 on success, 1 for usage errors and 2 for runtime errors.
Flags override values from ``--config``; outputs go to ``--out-dir``,
which defaults to ``$AGPL_OUT_DIR`` or ``./out``.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from importlib import resources
from pathlib import Path

from . import config as run_config
from . import dqn, harness, imitation, neuralnet, seeding
from .errors import FormatError, InvalidArgument, ParseError, StateError
from .policies import BaselinePolicy, random_policy, zero_policy
from .reward import PRESET_NAMES, preset
from .weather import generate_synthetic, load_weather_csv, write_weather_csv

POLICY_CHOICES = ("baseline", "zero", "random", "scripted", "dqn", "bc")
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def published_totals_path():
    return resources.files("agpolicy") / "data" / "published_totals.csv"


def _pick(flag, default):
    return default if flag is None else flag


def _out_dir(args, cfg):
    d = Path(_pick(args.out_dir, cfg.out_dir))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _factory(args, cfg):
    path = getattr(args, "weather", None) or cfg.weather_path
    fixed = load_weather_csv(path) if path else None
    return harness.EnvFactory(cfg.sim, cfg.climate, fixed_weather=fixed)


def _make_policy(args, cfg):
    kind = args.policy
    if kind == "baseline":
        return BaselinePolicy(cfg.baseline)
    if kind == "zero":
        return zero_policy()
    if kind == "random":
        return random_policy(_pick(args.seed, cfg.seed))
    if kind == "scripted":
        return imitation.scripted_expert()
    if not args.checkpoint:
        raise UsageError(f"--policy {kind} needs --checkpoint")
    if kind == "dqn":
        return dqn.load_greedy_policy(args.checkpoint)
    return imitation.load_bc_policy(args.checkpoint, rounded=not args.continuous)


def _rf_list(text):
    names = tuple(s.strip().upper() for s in text.split(",") if s.strip())
    for n in names:
        preset(n)
    return names


def cmd_gen_weather(args, cfg):
    series = generate_synthetic(_pick(args.seed, cfg.seed), args.days, cfg.climate, args.start_doy)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / "weather.csv"
    write_weather_csv(series, out)
    print(f"wrote {len(series)} days to {out}")


def cmd_simulate(args, cfg):
    policy = _make_policy(args, cfg)
    factory = _factory(args, cfg)
    env = factory(seeding.derive_seed(_pick(args.seed, cfg.seed), seeding.WEATHER, 0))
    rcfg = preset(args.reward) if args.reward else cfg.reward
    log = harness.run_episode(env.config, env.weather, policy, rcfg, env=env)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / f"episode_{policy.name}.csv"
    harness.export_application_history(log, out)
    t = log.totals
    print(f"policy={policy.name} days={len(log)} end={log.done_reason} "
          f"N={t.n_input:.1f} water={t.water_input:.1f} leach={t.n_leach:.2f} "
          f"yield={t.yield_kg:.1f} return[{rcfg.name}]={log.total_reward:.2f}")
    print(f"wrote {out}")


def cmd_train_dqn(args, cfg):
    d = cfg.dqn
    overrides = {
        "episodes": args.episodes, "seed": args.seed, "reward": args.reward,
        "batch_size": args.batch_size, "learning_rate": args.lr, "dtype": args.dtype,
        "normalizer_episodes": args.normalizer_episodes,
    }
    dcfg = dataclasses.replace(d, **{k: v for k, v in overrides.items() if v is not None})
    out = _out_dir(args, cfg)

    def progress(ep, ret, eps):
        if args.verbose:
            print(f"episode {ep} return {ret:.2f} epsilon {eps:.3f}", flush=True)

    result = dqn.train(_factory(args, cfg), dcfg, progress)
    harness.export_training_curve(result.curve, out / "training_curve.csv", result.epsilons)
    dqn.save_result(result, out / "q_network.agpl")
    print(f"trained {len(result.curve)} episodes, {result.gradient_steps} gradient steps "
          f"in {result.seconds:.1f} s; wrote {out / 'training_curve.csv'} and {out / 'q_network.agpl'}")


def cmd_collect_demos(args, cfg):
    args.policy = args.expert
    expert = _make_policy(args, cfg)
    n = _pick(args.episodes, cfg.demo_episodes)
    ds = imitation.collect_demos(expert, _factory(args, cfg), n, _pick(args.seed, cfg.seed))
    if args.checkpoint:
        ds.metadata["expert_checkpoint"] = str(args.checkpoint)
        ds.metadata["expert_checkpoint_sha256"] = _sha256(args.checkpoint)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / "demos.csv"
    imitation.write_demos_csv(ds, out)
    print(f"collected {len(ds)} pairs from {n} episodes; wrote {out}")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_train_bc(args, cfg):
    ds = imitation.load_demos_csv(args.demos)
    overrides = {"epochs": args.epochs, "batch_size": args.batch_size,
                 "learning_rate": args.lr, "seed": args.seed}
    bcfg = dataclasses.replace(cfg.bc, **{k: v for k, v in overrides.items() if v is not None})
    result = imitation.train_bc(ds, bcfg)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / "bc_policy.agpl"
    imitation.save_result(result, out)
    print(f"trained on {len(ds)} pairs, final loss {result.losses[-1]:.6f}; wrote {out}")


def cmd_evaluate(args, cfg):
    policy = _make_policy(args, cfg)
    rfs = _rf_list(args.rf) if args.rf else PRESET_NAMES
    summary = harness.evaluate(policy, rfs, _pick(args.seeds, cfg.eval_seeds),
                               _pick(args.base_seed, cfg.eval_base_seed), _factory(args, cfg))
    for rf in rfs:
        print(f"{summary.policy},{rf},{summary.mean(rf):.4f},{summary.std(rf):.4f}")
    t = summary.mean_totals
    print(f"mean totals: N={t.n_input:.2f} water={t.water_input:.2f} "
          f"leach={t.n_leach:.3f} yield={t.yield_kg:.1f}")
    if args.out:
        harness.export_eval(summary, args.out)
        print(f"wrote {args.out}")


def cmd_eval_matrix(args, cfg):
    path = args.totals or published_totals_path()
    rows = harness.load_totals_csv(path)
    rfs = _rf_list(args.rf) if args.rf else PRESET_NAMES
    matrix = harness.eval_matrix_from_totals(rows, rfs)
    width = max(len(name) for name, _ in rows)
    print(" " * width + "".join(f"{rf:>11}" for rf in rfs))
    for name, cells in matrix.items():
        print(f"{name:<{width}}" + "".join(f"{cells[rf]:>11.1f}" for rf in rfs))
    if args.out:
        harness.export_eval(matrix, args.out)
        print(f"wrote {args.out}")


def cmd_gradcheck(args, cfg):
    worst = neuralnet.gradcheck_random_nets(args.nets, _pick(args.seed, cfg.seed))
    ok = worst <= args.tol
    print(f"max relative error over {args.nets} networks: {worst:.3e} ({'ok' if ok else 'FAIL'})")
    if not ok:
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser():
    p = _Parser(prog="agpolicy", description="Crop-management policy workbench.")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out-dir", help="output directory (default $AGPL_OUT_DIR or ./out)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
        sp.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")
        sp.add_argument("--seed", type=int)

    def policy_args(sp, flag="--policy"):
        sp.add_argument(flag, choices=POLICY_CHOICES, required=True)
        sp.add_argument("--checkpoint", help="checkpoint for dqn/bc policies")
        sp.add_argument("--continuous", action="store_true", help="bc: do not round to the grid")

    sp = sub.add_parser("gen-weather", help="write a synthetic weather CSV")
    common(sp)
    sp.add_argument("--days", type=int, default=365)
    sp.add_argument("--start-doy", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_weather)

    sp = sub.add_parser("simulate", help="run one season and export the daily log")
    common(sp)
    policy_args(sp)
    sp.add_argument("--weather", help="weather CSV (default: synthetic from --seed)")
    sp.add_argument("--reward", choices=PRESET_NAMES)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("train-dqn", help="train a Q-network on the full observation")
    common(sp)
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--reward", choices=PRESET_NAMES)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--dtype", choices=("float32", "float64"))
    sp.add_argument("--normalizer-episodes", type=int)
    sp.add_argument("--weather", help="train on one fixed weather CSV")
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_train_dqn)

    sp = sub.add_parser("collect-demos", help="record expert state-action pairs")
    common(sp)
    policy_args(sp, "--expert")
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--weather")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_collect_demos)

    sp = sub.add_parser("train-bc", help="behavior cloning on a demonstration CSV")
    common(sp)
    sp.add_argument("--demos", required=True)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_train_bc)

    sp = sub.add_parser("evaluate", help="mean/std season return over held-out weather")
    common(sp)
    policy_args(sp)
    sp.add_argument("--seeds", type=int)
    sp.add_argument("--base-seed", type=int)
    sp.add_argument("--rf", help="comma-separated presets (default all)")
    sp.add_argument("--weather")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("eval-matrix", help="returns of season totals under each preset")
    common(sp)
    sp.add_argument("--totals", help="CSV name,n_input,water_input,n_leach,yield (default: bundled)")
    sp.add_argument("--rf")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval_matrix)

    sp = sub.add_parser("gradcheck", help="backprop vs finite differences on random nets")
    common(sp)
    sp.add_argument("--nets", type=int, default=50)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cfg = run_config.load(args.config) if args.config else run_config.RunConfig(
            out_dir=run_config.default_out_dir())
        status = args.func(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (InvalidArgument, ParseError, FormatError, StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
