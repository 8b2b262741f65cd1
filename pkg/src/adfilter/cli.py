"""Command-line front end.

Every subcommand resolves an experiment configuration (defaults, then the
``--config`` JSON file, then flags, then ``ADFILTER_SEED``) and writes its
outputs below ``--output-dir``. Exit codes: 0 success, 1 failed gradient
check, 2 validation error, 3 diverged run, 4 I/O error.
"""
import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .config import ExperimentConfig, load_config, resolve, validate
from .datagen import build_dataset, load_dataset, save_dataset, stream
from .dynamics.systems import DEFAULTS
from .exceptions import (ConfigError, DimError, DivergedRun, EmptyObservation, LinearOnly,
                         StaticObservationRequired)
from .filters import GainSpec, gaspari_cohn, kalman_filter, run_filter
from .learning import ParameterSet, make_setup, split_params, train, window_loss
from .learning.gradcheck import gradcheck_table
from .metrics import (attractor_states, evaluate, filter_rmse, forecast_rmse, parameter_errors, write_analysis,
                      write_trace)
from .metrics.report import _KEY_EVAL, _jsonable

log = logging.getLogger("adfilter")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4
VALIDATION_ERRORS = (ConfigError, EmptyObservation, StaticObservationRequired, LinearOnly, DimError)

_KEY_STATES = 40
_CURVE_COLUMNS = ("epoch", "train_loss", "val_loss", "lr_theta", "lr_phi", "lr_q", "updates", "diverged")


# -- argument parsing ---------------------------------------------------------------------

def _none_or(kind):
    def parse(text):
        return None if text.lower() == "none" else kind(text)
    parse.__name__ = kind.__name__
    return parse


_FLAG_TYPES = {"taper_radius": _none_or(float), "lowrank_p": _none_or(int), "lr_q": _none_or(float)}


def _config_flags(parser):
    group = parser.add_argument_group("experiment configuration (override --config)")
    group.add_argument("--config", help="JSON file with flat ExperimentConfig keys")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "output_dir":
            continue
        kind = _FLAG_TYPES.get(f.name, f.type)
        group.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=argparse.SUPPRESS)


def _common(parser):
    parser.add_argument("--output-dir", default=argparse.SUPPRESS, help="root for every input and output path")
    parser.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="parallel workers for seeds/grid cells")
    parser.add_argument("--print-config", action="store_true", default=argparse.SUPPRESS,
                        help="print the resolved configuration and exit")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="adfilter", description=__doc__.split("\n")[0])
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate truth and observations")
    p.add_argument("--dataset", default="data", help="dataset directory (relative to --output-dir)")

    p = sub.add_parser("train", help="learn parameters by differentiating the filter")
    p.add_argument("--dataset", default="data",
                   help="dataset directory; '{seed}' is replaced per seed")
    p.add_argument("--seeds", help="comma-separated seeds; each writes to seed_<s>/")

    p = sub.add_parser("evaluate", help="filter test trajectories with a checkpoint")
    p.add_argument("--checkpoint", default="checkpoint.json")
    p.add_argument("--dataset", default="data")

    p = sub.add_parser("oracle", help="exact Kalman filter reference (linear system only)")
    p.add_argument("--dataset", default="data")

    p = sub.add_parser("gradcheck", help="compare tape gradients with finite differences")

    p = sub.add_parser("tapergrid", help="filter quality over tapering radius x inflation")
    p.add_argument("--dataset", default="data")
    p.add_argument("--radii", default="1,2,3,4,5,6,8,10", help="comma-separated radii ('none' disables)")
    p.add_argument("--inflations", default="0,0.05,0.1,0.2,0.3,0.5")
    p.add_argument("--checkpoint", help="take dynamics and noise parameters from this checkpoint")
    p.add_argument("--q", type=float, default=0.01, help="forecast-noise variance without a checkpoint")
    p.add_argument("--split", choices=("val", "test"), default="val")

    for name, sp in sub.choices.items():
        _common(sp)
        if name != "evaluate":
            _config_flags(sp)
    return parser


def _resolve_config(args):
    raw = load_config(args.config) if getattr(args, "config", None) else {}
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    raw.update({k: v for k, v in vars(args).items() if k in names and k != "output_dir"})
    raw["output_dir"] = args.output_dir
    return resolve(raw)


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_checked(path, cfg=None):
    ds = load_dataset(path)
    if cfg is not None and (ds.meta["system"] != cfg.system or int(ds.meta["dim"]) != cfg.dim):
        raise ConfigError(f"system/dim: dataset is {ds.meta['system']} with dim {ds.meta['dim']}, "
                          f"config asks for {cfg.system} with dim {cfg.dim}")
    return ds


# -- subcommands -----------------------------------------------------------------------------

def cmd_generate(cfg, out, dataset="data"):
    ds = build_dataset(cfg)
    save_dataset(ds, out / dataset)
    log.info("wrote %s", out / dataset)
    return out / dataset


def _snapshot_row(epoch, setup, ds, params, states):
    theta1, _ = split_params(params.constrained())
    row = {"epoch": epoch}
    row.update({f"mae_{k}": v for k, v in parameter_errors(setup.system, ds.system, params.values()).items()})
    row["forecast_rmse"] = forecast_rmse(setup.system.build_model(theta1), ds.system.true_model(), states)
    return row


def _write_rows(path, rows, columns=None):
    if columns is None:
        columns = list(rows[0]) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def write_checkpoint(path, cfg, params, epochs_done):
    _write_json(path, {"config": cfg.to_dict(), "epochs_completed": epochs_done, **params.to_dict()})


def read_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        cfg = ExperimentConfig(**data["config"])  # no env override: the checkpoint fixes the seed
        params = ParameterSet.from_dict(data)
    except (KeyError, TypeError) as err:
        raise ConfigError(f"checkpoint {path} is malformed: {err}") from None
    validate(cfg)
    return cfg, params


def cmd_train(cfg, out, dataset="data"):
    """Train one configuration; returns the output directory."""
    ds = _load_checked(out / dataset.format(seed=cfg.seed), cfg)
    setup, params = make_setup(cfg, ds.system, ds.train[0].indices[0])
    states = attractor_states(ds.system, 100, stream(cfg.seed, _KEY_STATES), steps=2000, burn_in=200)
    out.mkdir(parents=True, exist_ok=True)
    snaps = [_snapshot_row(0, setup, ds, params, states)]

    def on_epoch(epoch, result):
        snaps.append(_snapshot_row(epoch, setup, ds, result.params, states))

    try:
        result = train(setup, params, ds.train, ds.val, cfg.epochs, cfg.lr_theta, cfg.lr_phi, cfg.patience,
                       on_epoch, lr_q=cfg.lr_q)
        status = None
    except DivergedRun as err:
        result, status = err.partial, err
    _write_rows(out / "curves.csv", result.curves, list(_CURVE_COLUMNS))
    _write_rows(out / "snapshots.csv", snaps)
    write_checkpoint(out / "checkpoint.json", cfg, result.params, len(result.curves))
    if result.events:
        _write_json(out / "diverged_windows.json", result.events)
    if status is not None:
        raise status
    return out


def _train_job(args):
    cfg_dict, out, dataset = args
    cfg = resolve(cfg_dict)
    try:
        cmd_train(cfg, Path(out), dataset)
        return cfg.seed, None
    except DivergedRun as err:
        return cfg.seed, str(err)


def cmd_train_seeds(cfg, out, dataset, seeds, jobs):
    tasks = []
    for s in seeds:
        d = cfg.to_dict()
        d["seed"] = s
        # an absolute dataset path is left untouched by the per-seed join in cmd_train
        tasks.append((d, str(out / f"seed_{s}"), str((out / dataset).absolute())))
    results = _map(_train_job, tasks, jobs)
    failed = [(s, msg) for s, msg in results if msg]
    for s, msg in failed:
        log.error("seed %s diverged: %s", s, msg)
    if failed:
        raise DivergedRun(f"{len(failed)} of {len(seeds)} seeds diverged")


def _map(fn, tasks, jobs):
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def cmd_evaluate(out, checkpoint="checkpoint.json", dataset="data"):
    cfg, params = read_checkpoint(out / checkpoint)
    ds = _load_checked(out / dataset, cfg)
    if cfg.family == "3dvar-k" and not ds.test[0].plan.static:
        raise StaticObservationRequired("method/obs_mode: a direct gain needs a static observation plan")
    setup, _ = make_setup(cfg, ds.system, ds.test[0].indices[0])
    states = attractor_states(ds.system, 500, stream(cfg.seed, _KEY_STATES))
    report = evaluate(setup, params, ds.test, ds.system, states, cfg.to_dict())
    report.write(out)
    for i, run in enumerate(getattr(report, "runs", [])):
        write_analysis(out / f"analysis_{i:03d}.csv", run.analysis_means)
    return report


def cmd_oracle(cfg, out, dataset="data"):
    ds = _load_checked(out / dataset, cfg)
    system = ds.system
    if not hasattr(system, "transition_matrix"):
        raise LinearOnly(f"system: the Kalman oracle needs a linear system, got {cfg.system}")
    m = system.transition_matrix()
    p0 = DEFAULTS[system.name]["ens_var"] * np.eye(system.dim)  # matches the ensemble spread at t=0
    means, truth, traces = [], [], []
    for traj in ds.test:
        kf = kalman_filter(system.x0, p0, m, traj.indices, traj.R_list, traj.obs)
        means.append(kf.means)
        truth.append(traj.truth[1:])
        traces.append(kf)
    first = traces[0]
    write_trace(out / "oracle_trace.csv", first.loglik, first.logdet_term, first.residual_term)
    summary = {"filter_rmse": filter_rmse(np.concatenate(means), np.concatenate(truth)),
               "mean_loglik": float(np.mean(np.concatenate([k.loglik for k in traces]))),
               "total_loglik": [k.total_loglik for k in traces], "T": ds.test[0].T, "p0_scale": float(p0[0, 0])}
    _write_json(out / "oracle.json", summary)
    return summary


def cmd_gradcheck(cfg):
    rows = gradcheck_table(cfg.system, seed=cfg.seed)
    print(f"{'method':<12} {'max_rel_err':>12}  result")
    for method, err, ok in rows:
        print(f"{method:<12} {err:>12.3e}  {'pass' if ok else 'FAIL'}")
    return all(ok for _, _, ok in rows), rows


def _parse_list(text, kind):
    return [_none_or(kind)(x.strip()) for x in text.split(",") if x.strip()]


def _grid_cell(args):
    """Filter quality for one (radius, inflation) pair."""
    cfg_dict, ckpt, dataset, split, radius, inflation, q = args
    cfg = resolve(cfg_dict)
    ds = load_dataset(dataset)
    trajs = getattr(ds, split)
    setup, params = make_setup(cfg, ds.system, trajs[0].indices[0])
    if ckpt is not None:
        params = ParameterSet.from_dict(ckpt)
        theta1, filt = split_params(params.constrained(), params.fixed)
        model = setup.system.build_model(theta1)
    else:
        _, filt = split_params(params.constrained(), params.fixed)
        filt["q"] = ad.constant(np.full((ds.system.dim, 1), q))
        model = ds.system.true_model()
    taper = gaspari_cohn(ds.system.dim, radius) if radius is not None else None
    if cfg.family == "enkf":
        filt["inflation"] = ad.constant(inflation)
        spec = GainSpec("enkf", setup.spec.n_members, taper, 0.0, setup.spec.positive)
    else:
        spec = GainSpec("ens3dvar", setup.spec.n_members, taper, inflation, setup.spec.positive)
    losses, means, truth = [], [], []
    try:
        for i, traj in enumerate(trajs):
            with np.errstate(over="ignore", invalid="ignore"):
                run = run_filter(setup.x0, traj.obs, traj.indices, traj.R_list, spec, model, filt,
                                 stream(cfg.seed, _KEY_EVAL, i))
            losses.append(float(window_loss(spec.family, run.stats, traj.obs, traj.indices).value[0, 0]) / traj.T)
            means.append(run.analysis_means)
            truth.append(traj.truth[1:])
        rmse = filter_rmse(np.concatenate(means), np.concatenate(truth))
        val = float(np.mean(losses))
    except ArithmeticError:
        rmse = val = math.inf
    if not math.isfinite(rmse):
        rmse = val = math.inf
    return {"radius": "none" if radius is None else radius, "inflation": inflation, "val_loss": val,
            "filter_rmse": rmse}


def cmd_tapergrid(cfg, out, dataset, radii, inflations, checkpoint=None, q=0.01, split="val", jobs=1):
    if cfg.family not in ("enkf", "ens3dvar"):
        raise ConfigError(f"method: tapering applies to ensemble methods, got {cfg.method}")
    ckpt = None
    if checkpoint is not None:
        ckpt_cfg, _ = read_checkpoint(out / checkpoint)
        with open(out / checkpoint, encoding="utf-8") as fh:
            ckpt = json.load(fh)
        cfg = ckpt_cfg
    path = out / dataset
    _load_checked(path, cfg)
    tasks = [(cfg.to_dict(), ckpt, str(path), split, r, float(a), q) for r in radii for a in inflations]
    rows = _map(_grid_cell, tasks, jobs)
    best = min(range(len(rows)), key=lambda k: (rows[k]["filter_rmse"], k))
    for k, r in enumerate(rows):
        r["best"] = int(k == best)
    _write_rows(out / "heatmap.csv", rows, ["radius", "inflation", "val_loss", "filter_rmse", "best"])
    return rows


# -- entry point -------------------------------------------------------------------------------

def run(argv=None):
    args = build_parser().parse_args(argv)
    defaults = {"output_dir": ".", "jobs": 1, "print_config": False, "verbose": False}
    for k, v in defaults.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    out = Path(args.output_dir)

    if args.command == "evaluate":
        cfg, _ = read_checkpoint(out / args.checkpoint)
        if args.print_config:
            print(cfg.to_json())
            return EXIT_OK
        report = cmd_evaluate(out, args.checkpoint, args.dataset)
        print(f"forecast_rmse {report.forecast_rmse:.6g} filter_rmse {report.filter_rmse:.6g} "
              f"mean_loglik {report.mean_loglik:.6g}")
        return EXIT_OK

    cfg = _resolve_config(args)
    if args.print_config:
        print(cfg.to_json())
        return EXIT_OK
    if args.command == "generate":
        cmd_generate(cfg, out, args.dataset)
    elif args.command == "train":
        if args.seeds:
            cmd_train_seeds(cfg, out, args.dataset, _parse_list(args.seeds, int), args.jobs)
        else:
            cmd_train(cfg, out, args.dataset)
    elif args.command == "oracle":
        s = cmd_oracle(cfg, out, args.dataset)
        print(f"filter_rmse {s['filter_rmse']:.6g} mean_loglik {s['mean_loglik']:.6g}")
    elif args.command == "gradcheck":
        ok, _ = cmd_gradcheck(cfg)
        if not ok:
            return EXIT_CHECK
    elif args.command == "tapergrid":
        rows = cmd_tapergrid(cfg, out, args.dataset, _parse_list(args.radii, float),
                             _parse_list(args.inflations, float), args.checkpoint, args.q, args.split, args.jobs)
        best = next(r for r in rows if r["best"])
        print(f"best radius {best['radius']} inflation {best['inflation']} filter_rmse {best['filter_rmse']:.6g}")
    return EXIT_OK


def main(argv=None):
    try:
        return run(argv)
    except VALIDATION_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergedRun as err:
        print(f"diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, json.JSONDecodeError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
