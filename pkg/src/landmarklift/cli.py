"""Command-line front end: generate / train / reconstruct / evaluate /
ablate / plot.

Every subcommand reads one flat config file (defaults apply when absent),
honors --seed and --out-dir overrides, and fails with a single
``ERROR:<code>: message`` line on stderr and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config, override_config
from .dissim import (
    BatchScheme,
    DissimTrainConfig,
    default_dissim_model,
    train_dissimilarity,
)
from .errors import ConfigError, DatasetFormatError, LandmarkLiftError
from .landmarks import LandmarkSet3D
from .metrics import format_method_table, subsample_protocol
from .modelio import load_model, save_model
from .pipeline import ReconstructionResult, mean_shape_baseline, reconstruct_dataset
from .svgplot import curves_svg, scatter_svg
from .synthdata import (
    DatasetManifest,
    build_default_model,
    read_dataset,
    sample_faces,
    write_dataset,
)
from .viewnorm import ViewnormTrainConfig, default_viewnorm_model, train_viewnorm

TRAIN_BASE = "train"
TEST_BASE = "test"


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return override_config(
        cfg,
        seed=args.seed,
        out_dir=args.out_dir,
        skip_viewnorm=True if getattr(args, "skip_viewnorm", False) else None,
    )


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_samples(base: Path):
    samples, manifest = read_dataset(base)
    return samples, manifest


def cmd_generate(cfg: PipelineConfig) -> int:
    out = _out_dir(cfg)
    model = build_default_model(cfg.landmarks, cfg.basis_size, cfg.seed)
    from .synthdata import ViewDistribution

    dist = ViewDistribution(perspective_fraction=cfg.perspective_fraction)
    splits = (
        (TRAIN_BASE, "train", cfg.train_count, 0),
        (TEST_BASE, "test", cfg.test_count, cfg.train_count),
    )
    for base, split, count, start in splits:
        samples = sample_faces(model, count, dist, seed=cfg.seed, start_id=start)
        manifest = DatasetManifest(
            seed=cfg.seed,
            count=count,
            start_id=start,
            split=split,
            train_fraction=cfg.train_count / max(cfg.train_count + cfg.test_count, 1),
            landmarks=cfg.landmarks,
            basis_size=cfg.basis_size,
            model_seed=cfg.seed,
            model_hash=model.model_hash(),
            view=dist,
        )
        write_dataset(samples, manifest, out / base)
    print(
        f"generated {cfg.train_count} train + {cfg.test_count} test records "
        f"(seed {cfg.seed}) in {out}"
    )
    return 0


def cmd_train(cfg: PipelineConfig, which: str) -> int:
    out = _out_dir(cfg)
    samples, _ = _load_samples(out / TRAIN_BASE)
    if which == "dissim":
        train_cfg = DissimTrainConfig(
            epochs=cfg.dissim_epochs,
            learning_rate=cfg.dissim_lr,
            seed=cfg.seed,
            val_fraction=cfg.val_fraction,
            hidden_width=cfg.dissim_width,
        )
        model, log = train_dissimilarity(samples, cfg.dissim_scheme, train_cfg)
    elif which == "viewnorm":
        train_cfg = ViewnormTrainConfig(
            epochs=cfg.viewnorm_epochs,
            learning_rate=cfg.viewnorm_lr,
            seed=cfg.seed,
            val_fraction=cfg.val_fraction,
            batch_size=cfg.viewnorm_batch,
        )
        net = default_viewnorm_model(
            cfg.landmarks, seed=cfg.seed, hidden=cfg.hidden_widths()
        )
        model, log = train_viewnorm(samples, train_cfg, model=net)
    else:
        raise ConfigError(f"unknown training target {which!r}")
    save_model(model, out / f"{which}.llmw")
    log.write_csv(out / f"{which}_loss.csv")
    print(f"{which}: parameters: {model.parameter_count()}")
    print(
        f"{which}: final train loss {log.final_train_loss:.6g}, "
        f"final val loss {log.final_val_loss:.6g}"
    )
    print(f"{which}: saved model to {out / (which + '.llmw')}")
    return 0


def _load_pipeline_models(cfg: PipelineConfig, out: Path):
    dissim_model = load_model(out / "dissim.llmw")
    viewnorm_model = None
    if not cfg.skip_viewnorm:
        viewnorm_model = load_model(out / "viewnorm.llmw")
    return dissim_model, viewnorm_model


def _result_record(r: ReconstructionResult) -> dict:
    return {
        "face_id": r.face_id,
        "points": r.points_3d.points.tolist(),
        "matrix_hash": r.matrix_hash,
        "stress": r.stress,
        "converged": r.converged,
    }


def write_results(results: list[ReconstructionResult], path: Path) -> None:
    with open(path, "w") as fh:
        for r in results:
            fh.write(json.dumps(_result_record(r), sort_keys=True) + "\n")


def read_results(path: Path) -> list[dict]:
    records = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: malformed result record: {exc}"
                ) from exc
    return records


def cmd_reconstruct(cfg: PipelineConfig, face_id: int | None, dataset: str) -> int:
    out = _out_dir(cfg)
    dissim_model, viewnorm_model = _load_pipeline_models(cfg, out)
    samples, _ = _load_samples(out / dataset)
    if face_id is not None:
        samples = [s for s in samples if s.face_id == face_id]
        if not samples:
            raise DatasetFormatError(f"face id {face_id} not present in {dataset}")
    results = reconstruct_dataset(
        samples,
        dissim_model,
        viewnorm_model,
        mds_mode=cfg.mds_mode,
        mds_max_iter=cfg.mds_max_iter,
        mds_tol=cfg.mds_tol,
    )
    path = out / "reconstructions.jsonl"
    write_results(results, path)
    stages = np.array([[r.viewnorm_us, r.dissim_us, r.mds_us] for r in results])
    totals = stages.sum(axis=0)
    print(f"reconstructed {len(results)} face(s) -> {path}")
    print(
        f"timing (us, mean/face): viewnorm {totals[0] // len(results)}, "
        f"dissim {totals[1] // len(results)}, mds {totals[2] // len(results)}"
    )
    print(f"mean stress: {np.mean([r.stress for r in results]):.6g}")
    return 0


def cmd_evaluate(cfg: PipelineConfig) -> int:
    out = _out_dir(cfg)
    dissim_model, viewnorm_model = _load_pipeline_models(cfg, out)
    test_samples, _ = _load_samples(out / TEST_BASE)
    train_samples, _ = _load_samples(out / TRAIN_BASE)
    results = reconstruct_dataset(
        test_samples,
        dissim_model,
        viewnorm_model,
        mds_mode=cfg.mds_mode,
        mds_max_iter=cfg.mds_max_iter,
        mds_tol=cfg.mds_tol,
    )
    preds = [r.points_3d for r in results]
    baseline_shape = mean_shape_baseline(train_samples)
    baseline_preds = [baseline_shape] * len(test_samples)
    size = min(cfg.eval_size, len(test_samples))
    pipeline_report = subsample_protocol(
        test_samples, preds, size=size, reps=cfg.eval_reps, seed=cfg.seed
    )
    baseline_report = subsample_protocol(
        test_samples, baseline_preds, size=size, reps=cfg.eval_reps, seed=cfg.seed
    )
    ratio = pipeline_report.mse_mean / baseline_report.mse_mean
    table = format_method_table(
        {"pipeline": pipeline_report, "mean-shape": baseline_report}
    )
    print(table, end="")
    print(f"MSE ratio (pipeline / mean-shape): {ratio:.4f}")
    payload = json.dumps(
        {
            "pipeline": json.loads(pipeline_report.to_json()),
            "baseline": json.loads(baseline_report.to_json()),
            "mse_ratio": ratio,
        },
        sort_keys=True,
        indent=2,
    )
    (out / "eval_report.json").write_text(payload + "\n")
    (out / "eval_report.csv").write_text(pipeline_report.to_csv())
    return 0


def cmd_ablate(cfg: PipelineConfig) -> int:
    out = _out_dir(cfg)
    samples, _ = _load_samples(out / TRAIN_BASE)
    train_cfg = DissimTrainConfig(
        epochs=cfg.dissim_epochs,
        learning_rate=cfg.dissim_lr,
        seed=cfg.seed,
        val_fraction=cfg.val_fraction,
        hidden_width=cfg.dissim_width,
    )
    logs = {}
    for scheme in (BatchScheme.SAME_FACE, BatchScheme.SHUFFLED_ACROSS_FACES):
        _, logs[scheme.value] = train_dissimilarity(samples, scheme, train_cfg)
    same, shuf = logs["same-face"], logs["shuffled"]
    lines = ["epoch,same_face_train,same_face_val,shuffled_train,shuffled_val"]
    for (e, tr1, va1), (_, tr2, va2) in zip(same.rows, shuf.rows):
        lines.append(f"{e},{tr1:.17g},{va1:.17g},{tr2:.17g},{va2:.17g}")
    (out / "ablation.csv").write_text("\n".join(lines) + "\n")
    svg = curves_svg(
        {
            "same-face val": np.array([r[2] for r in same.rows]),
            "shuffled val": np.array([r[2] for r in shuf.rows]),
        },
        title="batch scheme ablation",
    )
    (out / "ablation.svg").write_text(svg)
    print(
        f"final val loss: same-face {same.final_val_loss:.6g}, "
        f"shuffled {shuf.final_val_loss:.6g}"
    )
    better = "same-face" if same.final_val_loss <= shuf.final_val_loss else "shuffled"
    print(f"lower final validation loss: {better}")
    print(f"wrote {out / 'ablation.csv'} and {out / 'ablation.svg'}")
    return 0


def cmd_plot(cfg: PipelineConfig, dataset: str, face_id: int | None, limit: int) -> int:
    from .geometry import procrustes_align

    out = _out_dir(cfg)
    records = read_results(out / "reconstructions.jsonl")
    samples, _ = _load_samples(out / dataset)
    gt_by_id = {s.face_id: s.gt_3d for s in samples}
    if face_id is not None:
        records = [r for r in records if r["face_id"] == face_id]
        if not records:
            raise DatasetFormatError(f"face id {face_id} not in reconstructions")
    records = records[:limit]
    if not records:
        raise DatasetFormatError("no reconstruction records to plot")
    axes = (("xy", 0, 1), ("xz", 0, 2), ("yz", 1, 2))
    count = 0
    for rec in records:
        fid = rec["face_id"]
        if fid not in gt_by_id:
            raise DatasetFormatError(f"face id {fid} missing from {dataset}")
        gt = gt_by_id[fid]
        pred = LandmarkSet3D(np.array(rec["points"]), gt.topology_id)
        aligned = procrustes_align(pred, gt)[0]
        for name, i, j in axes:
            svg = scatter_svg(
                [
                    ("ground truth", gt.points[:, (i, j)]),
                    ("predicted", aligned.points[:, (i, j)]),
                ],
                title=f"face {fid} ({name})",
                xlabel="xyz"[i],
                ylabel="xyz"[j],
            )
            (out / f"face{fid:05d}_{name}.svg").write_text(svg)
            count += 1
    print(f"wrote {count} plot file(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out-dir", help="working directory for all artifacts")

    parser = argparse.ArgumentParser(
        prog="landmarklift",
        description="3D landmark recovery from single-view 2D landmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="write synthetic datasets")

    p_train = sub.add_parser("train", parents=[common], help="train one network")
    p_train.add_argument(
        "--which", choices=("viewnorm", "dissim"), required=True,
        help="which network to train",
    )

    p_rec = sub.add_parser(
        "reconstruct", parents=[common], help="recover 3D landmarks"
    )
    p_rec.add_argument("--face-id", type=int, help="reconstruct a single face")
    p_rec.add_argument(
        "--dataset", default=TEST_BASE, help="dataset base name inside out-dir"
    )
    p_rec.add_argument(
        "--skip-viewnorm", action="store_true",
        help="feed raw normalized input to the distance network",
    )

    p_eval = sub.add_parser(
        "evaluate", parents=[common], help="score pipeline vs mean-shape baseline"
    )
    p_eval.add_argument("--skip-viewnorm", action="store_true")

    sub.add_parser("ablate", parents=[common], help="compare batch schemes")

    p_plot = sub.add_parser(
        "plot", parents=[common], help="emit SVG scatter comparisons"
    )
    p_plot.add_argument("--face-id", type=int, help="plot a single face")
    p_plot.add_argument(
        "--dataset", default=TEST_BASE, help="dataset holding the ground truth"
    )
    p_plot.add_argument(
        "--limit", type=int, default=4, help="max faces to plot in batch mode"
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.which)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, args.face_id, args.dataset)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "ablate":
            return cmd_ablate(cfg)
        if args.command == "plot":
            return cmd_plot(cfg, args.dataset, args.face_id, args.limit)
        raise ConfigError(f"unknown command {args.command!r}")
    except LandmarkLiftError as exc:
        print(f"ERROR:{exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR:E_IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
