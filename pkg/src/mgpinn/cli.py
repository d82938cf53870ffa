"""Command-line experiment runner.

Subcommands::

    mgpinn run <config> [--desk-scale] [--out DIR] [--threads N] [--deterministic]
    mgpinn check <suite>            gradients | jets | hammersley | exact-residual | quadrature | all
    mgpinn sample <config> [--out DIR]
    mgpinn eval <checkpoint> <config> [--out DIR]

``<config>`` is a JSON file path or the name of a shipped preset
(``burgers1d_tsmgdl``, ``burgers2d_sgl3`` ...).

Files written by ``run`` under ``--out``:

    config.json         resolved configuration (after --desk-scale)
    loss_<phase>.csv    epoch,pde,initial,boundary,total,lr per phase
    checkpoint.mgst     grade stack after the latest finished phase
    prediction.csv      test grid with predicted and exact u
    slice_t<t>.csv      absolute errors on one time level (per ``slice_t``)
    summary.json        config hash, seeds, best losses, relative L2 per phase

Exit codes: 0 success, 1 training fault or failed check, 2 bad input.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .config import desk_scale, load_config, preset, preset_names
from .errors import ConfigurationError, NumericalFault, TrainingFault
from .gradestack import GradeStack, evaluate_cumulative, stack_predictor
from .metrics import slice_errors, summarize, write_slice_csv
from .network import NetworkSpec
from .sampling import build_samples, test_grid
from .trainer import grade_seed, run_ts_mgdl, train_single_grade_baseline

log = logging.getLogger("mgpinn")


def resolve_config(ref):
    if os.path.exists(ref):
        return load_config(ref)
    if ref in preset_names():
        return preset(ref)
    raise ConfigurationError(f"{ref!r} is neither a config file nor a shipped preset "
                             f"({', '.join(preset_names())})")


def thread_count(arg, deterministic):
    if arg is not None:
        return arg
    env = os.environ.get("MGPINN_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"MGPINN_THREADS must be an integer, got {env!r}") from None
    # multi-threaded BLAS may reorder sums between runs
    return 1 if deterministic else None


def _limit_threads(n):
    if n is None:
        return None
    if n < 1:
        raise ConfigurationError(f"thread count must be positive, got {n}")
    # the jet kernels are serial; only BLAS needs capping
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def write_prediction(path, grid, predicted, exact):
    names = ["t", "x", "y", "z"][:grid.shape[1]]
    rows = np.column_stack([grid, predicted, exact])
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(names + ["u_pred", "u_exact"]),
               comments="", newline="\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_run(args):
    cfg = resolve_config(args.config)
    if args.desk_scale:
        cfg = desk_scale(cfg)
    if args.deterministic:
        cfg.deterministic = True
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out or cfg.output_dir or "runs/" + cfg.hash()[:12])
    out.mkdir(parents=True, exist_ok=True)
    cfg.output_dir = str(out)
    (out / "config.json").write_text(cfg.to_json())

    limiter = _limit_threads(thread_count(args.threads, cfg.deterministic))
    problem = cfg.problem.build()
    sc = cfg.samples
    samples = build_samples(problem, sc.n_f, sc.n_0, sc.n_b, sc.seed)
    grid, shape = test_grid(problem, cfg.test_grid)
    exact = problem.exact(grid)
    log.info("%s: %s on %s, %d collocation points, kernels=%s", out, cfg.method, problem.name,
             sc.n_f, _kernels.BACKEND)

    summary = {
        "config_hash": cfg.hash(),
        "method": cfg.method,
        "problem": problem.name,
        "seeds": {"run": cfg.seed, "samples": sc.seed},
        "kernels": _kernels.BACKEND,
        "phases": [],
        "status": "running",
    }

    def on_phase(stack, rep):
        rep.write_csv(out / f"loss_{rep.label}.csv")
        stack.save(out / "checkpoint.mgst")
        summary["phases"].append(rep.summary())
        log.info("%s done: best loss %.6e at epoch %d, relative L2 %.4e (%.1fs)", rep.label,
                 rep.best_loss, rep.best_epoch, rep.relative_l2, rep.duration)

    status = 0
    stack = None
    try:
        if cfg.method == "sgl":
            summary["seeds"]["init"] = [grade_seed(cfg.seed, 1)]
            stack, rep = train_single_grade_baseline(NetworkSpec(cfg.sgl.widths), cfg.sgl, samples, problem,
                                                     cfg.seed, grid, exact, args.log_every)
            on_phase(stack, rep)
        else:
            summary["seeds"]["init"] = [grade_seed(cfg.seed, g + 1) for g in range(len(cfg.grades))]
            stack, _ = run_ts_mgdl(problem, samples, cfg.grades, cfg.stage2, cfg.seed, grid, exact,
                                   args.log_every, on_phase)
        summary["status"] = "ok"
    except TrainingFault as exc:
        log.error("training fault: %s", exc)
        status = 1
        summary["status"] = "fault"
        summary["error"] = str(exc)
        summary["fault_epoch"] = exc.epoch
        rep = getattr(exc, "report", None)
        stack = getattr(exc, "stack", None)
        if rep is not None:
            rep.write_csv(out / f"loss_{rep.label}.csv")
            summary["phases"].append(rep.summary())
        if stack is not None and stack.grades:
            stack.save(out / "checkpoint.mgst")
    finally:
        if limiter is not None:
            limiter.restore_original_limits()

    if stack is not None and stack.grades:
        pred = evaluate_cumulative(stack, grid).value
        write_prediction(out / "prediction.csv", grid, pred, exact)
        summary["error_summary"] = summarize(exact, pred, shape).as_dict()
        predictor = stack_predictor(stack)
        for t in cfg.slice_t:
            pts, err = slice_errors(predictor, problem, grid, t)
            write_slice_csv(out / f"slice_t{t:g}.csv", pts, err)
    _write_json(out / "summary.json", summary)
    if status == 0:
        print(f"relative L2 {summary['error_summary']['relative_l2']:.6e}  ->  {out}")
    return status


def cmd_check(args):
    from .checks import SUITES, run_suites

    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names)
    width = max(len(r[0]) for r in results)
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} passed")
    return 1 if failed else 0


def cmd_sample(args):
    cfg = resolve_config(args.config)
    if args.desk_scale:
        cfg = desk_scale(cfg)
    problem = cfg.problem.build()
    sc = cfg.samples
    samples = build_samples(problem, sc.n_f, sc.n_0, sc.n_b, sc.seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    samples.to_csv(out / "samples.csv")
    print(f"{sc.n_f} collocation, {sc.n_0} initial, {sc.n_b} boundary points -> {out / 'samples.csv'}")
    return 0


def cmd_eval(args):
    cfg = resolve_config(args.config)
    if args.desk_scale:
        cfg = desk_scale(cfg)
    problem = cfg.problem.build()
    stack = GradeStack.load(args.checkpoint)
    if stack.input_dim != problem.input_dim:
        raise ConfigurationError(f"checkpoint takes {stack.input_dim} inputs, {problem.name} needs "
                                 f"{problem.input_dim}")
    grid, shape = test_grid(problem, cfg.test_grid)
    exact = problem.exact(grid)
    pred = evaluate_cumulative(stack, grid).value
    result = summarize(exact, pred, shape).as_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_prediction(out / "prediction.csv", grid, pred, exact)
        _write_json(out / "eval.json", result)
    print(json.dumps(result))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mgpinn", description="Multi-grade PINN solver for Burgers problems")
    p.add_argument("--log-level", default="INFO")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train from a config")
    r.add_argument("config", help="JSON file or shipped preset name")
    r.add_argument("--desk-scale", action="store_true", help="substitute the small CPU preset")
    r.add_argument("--out", help="output directory")
    r.add_argument("--threads", type=int, help="thread cap (overrides MGPINN_THREADS)")
    r.add_argument("--deterministic", action="store_true", help="force the deterministic flag on")
    r.add_argument("--seed", type=int, help="override the initialization seed")
    r.add_argument("--log-every", type=int, default=1000, help="log every N epochs (0 = quiet)")
    r.set_defaults(func=cmd_run)

    from .checks import SUITES
    c = sub.add_parser("check", help="run oracle self-checks")
    c.add_argument("suite", choices=sorted(SUITES) + ["all"])
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sample", help="dump the sample set to CSV")
    s.add_argument("config")
    s.add_argument("--desk-scale", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("eval", help="evaluate a checkpoint on the test grid")
    e.add_argument("checkpoint")
    e.add_argument("config")
    e.add_argument("--desk-scale", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, NumericalFault, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
