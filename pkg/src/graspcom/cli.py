"""Command-line entry point.

Subcommands cover the full workflow: simulate a dataset, train the Bayesian
regressor, train the action scorer, benchmark the four methods, and run the
fixed-offset weight study. Every artifact embeds the producing config and
seed; re-running a command with the same inputs reproduces it byte for byte.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import actions, bnn, config, fileio, modelio, pipeline, report, seeding, sim
from .errors import ConfigError, NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

DATASET_NAME = "dataset.jsonl"
BNN_MODEL_NAME = "bnn_model.json"
ACTION_MODEL_NAME = "action_model.json"
EVAL_CSV_NAME = "eval_report.csv"
EVAL_SUMMARY_NAME = "eval_summary.txt"
OOD_CSV_NAME = "ood_report.csv"
OOD_SUMMARY_NAME = "ood_summary.txt"


def _load_config(args) -> config.RunConfig:
    if getattr(args, "config", None):
        cfg = config.load(args.config)
    else:
        cfg = config.preset_config(getattr(args, "preset", None) or "desk")
    if getattr(args, "seed", None) is not None:
        cfg.seed = int(args.seed)
    config.validate(cfg)
    return cfg


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "runs")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_provenance(cfg: config.RunConfig) -> None:
    print(f"config hash {fileio.config_hash(config.to_dict(cfg))}, seed {cfg.seed}")


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    path = Path(args.dataset) if args.dataset else out / DATASET_NAME
    count = sim.generate_dataset(
        cfg.sim, cfg.seed, path, header_config=config.to_dict(cfg))
    print(f"wrote {count} records to {path}")
    _print_provenance(cfg)
    return EXIT_OK


def _load_records(args, cfg, out: Path):
    path = Path(args.dataset) if args.dataset else out / DATASET_NAME
    header, records = sim.load_dataset(path)
    if not records:
        raise ConfigError(f"{path}: dataset has no records")
    return path, header, records


def cmd_train_bnn(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    dataset_path, _, records = _load_records(args, cfg, out)
    x, y = sim.records_to_arrays(records)
    rng = seeding.derive_rng("train-bnn", cfg.seed)
    ps = bnn.train_bnn(x, y, cfg.bnn, rng)
    path = Path(args.model) if args.model else out / BNN_MODEL_NAME
    modelio.save_bnn_model(path, ps, train_config=config.to_dict(cfg), seed=cfg.seed)
    d = ps.diagnostics
    print(f"trained on {len(records)} records from {dataset_path}")
    print(
        f"map loss {d['map_final_loss']:.5f}, mean accept {d['mean_accept']:.3f}, "
        f"divergences {d['divergences']}/{cfg.bnn.samples}, "
        f"step size {d['step_size']:.2e}, mean tree depth {d['mean_tree_depth']:.1f}"
    )
    print(f"wrote model to {path}")
    _print_provenance(cfg)
    return EXIT_OK


def cmd_train_active(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    _, _, records = _load_records(args, cfg, out)
    bnn_path = Path(args.bnn) if args.bnn else out / BNN_MODEL_NAME
    ps, _ = modelio.load_bnn_model(bnn_path)
    examples = actions.make_training_labels(
        ps, records, label_on_fused=cfg.action.label_on_fused)
    rng = seeding.derive_rng("train-active", cfg.seed)
    model, result = actions.train_action_scorer(examples, cfg.action, rng)
    scores = np.array([e.score for e in examples])
    label_stats = {
        "count": len(examples),
        "score_mean": float(scores.mean()),
        "score_min": float(scores.min()),
        "score_max": float(scores.max()),
        "train_mse": result.final_loss,
    }
    path = Path(args.model) if args.model else out / ACTION_MODEL_NAME
    modelio.save_action_model(
        path, model, train_config=config.to_dict(cfg), seed=cfg.seed,
        label_stats=label_stats)
    print(f"trained scorer on {len(examples)} examples "
          f"(mean label {label_stats['score_mean'] * 1000:.1f} mm, "
          f"train mse {result.final_loss:.4f})")
    print(f"wrote model to {path}")
    _print_provenance(cfg)
    return EXIT_OK


def _load_models(args, out: Path):
    bnn_path = Path(args.bnn) if args.bnn else out / BNN_MODEL_NAME
    action_path = Path(args.active) if args.active else out / ACTION_MODEL_NAME
    ps, _ = modelio.load_bnn_model(bnn_path)
    scorer, _ = modelio.load_action_model(action_path)
    return ps, scorer


def _method_table(cfg, ps, scorer) -> dict:
    ev = cfg.evaluation
    return {
        "active": lambda src, rng: pipeline.run_active(
            src, ps, scorer, grid_resolution=ev.grid_resolution,
            theta_max=cfg.sim.theta_max),
        "random-rotate": lambda src, rng: pipeline.run_random_rotate(
            src, ps, rng, theta_max=cfg.sim.theta_max),
        "one-grasp": lambda src, rng: pipeline.run_one_grasp(src, ps),
        "analytical": lambda src, rng: pipeline.run_analytical(
            src, force_floor=ev.force_floor),
    }


def eval_scenes(cfg: config.RunConfig) -> list:
    """Test scenes from a seed namespace disjoint from training grasps."""
    return [
        sim.sample_scene(cfg.sim, seeding.derive_rng("eval-scene", cfg.seed, i))
        for i in range(cfg.evaluation.scenes)
    ]


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    ps, scorer = _load_models(args, out)
    scenes = eval_scenes(cfg)
    rep = pipeline.evaluate(
        _method_table(cfg, ps, scorer),
        scenes,
        cfg.evaluation.episodes_per_scene,
        base_seed=cfg.seed,
        noise=sim.noise_from_settings(cfg.sim),
        theta_max=cfg.sim.theta_max,
        metadata={
            "config_hash": fileio.config_hash(config.to_dict(cfg)),
            "seed": cfg.seed,
        },
    )
    csv_path = out / EVAL_CSV_NAME
    summary_path = out / EVAL_SUMMARY_NAME
    rep.write_csv(csv_path)
    rep.write_summary(summary_path)
    print(rep.summary_text(include_timestamp=False))
    print(f"wrote {csv_path} and {summary_path}")
    return EXIT_OK


def cmd_ood_study(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    ps, scorer = _load_models(args, out)
    offset = np.asarray(cfg.ood.offset, dtype=float)
    scenes = [
        sim.RigidGraspScene(mass=m, com_offset_gripper=offset, gravity=cfg.sim.gravity)
        for m in cfg.ood.masses
    ]
    methods = {"active": _method_table(cfg, ps, scorer)["active"]}
    rep = pipeline.evaluate(
        methods,
        scenes,
        cfg.ood.episodes_per_mass,
        base_seed=cfg.seed,
        noise=sim.noise_from_settings(cfg.sim),
        theta_max=cfg.sim.theta_max,
        metadata={
            "config_hash": fileio.config_hash(config.to_dict(cfg)),
            "seed": cfg.seed,
            "study": "fixed-offset mass sweep",
        },
    )
    scene_masses = {i: float(m) for i, m in enumerate(cfg.ood.masses)}
    text = report.ood_summary_text(rep, scene_masses, tuple(cfg.sim.mass_range))
    csv_path = out / OOD_CSV_NAME
    summary_path = out / OOD_SUMMARY_NAME
    rep.write_csv(csv_path)
    fileio.atomic_write_text(summary_path, text)
    print(report.ood_summary_text(
        rep, scene_masses, tuple(cfg.sim.mass_range), include_timestamp=False))
    print(f"wrote {csv_path} and {summary_path}")
    return EXIT_OK


def cmd_config_print_default(args) -> int:
    cfg = config.preset_config(getattr(args, "preset", None) or "desk")
    sys.stdout.write(config.to_yaml(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspcom",
        description="Center-of-mass estimation benchmark for grasped objects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False, bnn_model=False, active_model=False, model_out=False):
        p.add_argument("--config", help="YAML config file (default: desk preset)")
        p.add_argument("--preset", choices=["desk", "large"],
                       help="built-in preset when no --config is given")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="artifact directory (default: runs/)")
        if dataset:
            p.add_argument("--dataset", help=f"dataset path (default: OUT/{DATASET_NAME})")
        if bnn_model:
            p.add_argument("--bnn", help=f"regressor model path (default: OUT/{BNN_MODEL_NAME})")
        if active_model:
            p.add_argument("--active",
                           help=f"action scorer path (default: OUT/{ACTION_MODEL_NAME})")
        if model_out:
            p.add_argument("--model", help="output model path override")

    p = sub.add_parser("simulate", help="generate a labeled wrench dataset")
    common(p, dataset=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("train-bnn", help="pretrain and sample the Bayesian regressor")
    common(p, dataset=True, model_out=True)
    p.set_defaults(fn=cmd_train_bnn)

    p = sub.add_parser("train-active", help="label and train the action scorer")
    common(p, dataset=True, bnn_model=True, model_out=True)
    p.set_defaults(fn=cmd_train_active)

    p = sub.add_parser("eval", help="benchmark all four methods on fresh scenes")
    common(p, bnn_model=True, active_model=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ood-study", help="fixed-offset error sweep over object masses")
    common(p, bnn_model=True, active_model=True)
    p.set_defaults(fn=cmd_ood_study)

    p = sub.add_parser("config", help="config utilities")
    config_sub = p.add_subparsers(dest="config_command", required=True)
    pd = config_sub.add_parser("print-default", help="print a preset config as YAML")
    pd.add_argument("--preset", choices=["desk", "large"], default="desk")
    pd.set_defaults(fn=cmd_config_print_default)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
