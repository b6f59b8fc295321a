"""Command-line entry point.

Subcommands: anonymize, augment, score, eval, train-weights, pipeline.
Exit codes: 0 success, 1 partial (some records errored), 2 invalid
invocation or config. Flags always override the config file.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .anonymize import BlurParams, anonymize_image
from .augment import augment_dataset
from .awareness import (
    GazeConfig,
    TrainingParams,
    awareness_score,
    classify_awareness,
    features_from_observation,
    load_weights,
    save_weights,
    train_weights_with_history,
)
from .config import ConfigError, PipelineConfig, load_config
from .evaluate import (
    ConfusionCounts,
    classification_metrics,
    evaluate_detections,
    evaluation_report,
    write_pr_csv,
    write_pr_svg,
    write_report_json,
)
from .image import load_image, save_png
from .pipeline import emit_annotated, run_pipeline, write_decisions
from .providers import FileDetectionProvider, FileLandmarkProvider, _read_jsonl
from .records import face_from_dict, load_manifest, save_manifest


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="TOML", help="config file")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--out-dir", metavar="DIR", help="output directory")
    parser.add_argument("--workers", type=int, help="concurrent images")
    parser.add_argument(
        "--emit-annotated",
        action="store_true",
        default=None,
        help="also write annotated PNGs",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lenscue",
        description="Detect mobility aids, assess camera awareness, cue or blur.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="detect, crop, read faces, emit cue decisions")
    _common_flags(p)
    p.add_argument("images", nargs="*", help="image files to process")
    p.add_argument("--manifest", metavar="JSON", help="take images from a manifest")

    p = sub.add_parser("anonymize", help="blur enlarged face regions in images")
    _common_flags(p)
    p.add_argument("images", nargs="+", help="image files to anonymize")
    p.add_argument(
        "--faces", required=True, metavar="JSONL", help="face boxes per image"
    )
    p.add_argument("--kernel-size", type=int, help="blur kernel size (odd)")
    p.add_argument("--sigma", type=float, help="blur kernel spread")

    p = sub.add_parser("augment", help="expand a dataset with random transforms")
    _common_flags(p)
    p.add_argument("--manifest", required=True, metavar="JSON", help="input manifest")
    p.add_argument(
        "--out-manifest", metavar="JSON", help="where to write the expanded manifest"
    )
    p.add_argument("--per-image", type=int, help="augmented copies per image")

    p = sub.add_parser("score", help="score camera awareness from landmark readings")
    _common_flags(p)
    p.add_argument("--landmarks", required=True, metavar="JSONL", help="face readings")
    p.add_argument("--weights", metavar="FILE", help="trained weights file")
    p.add_argument("--out", metavar="JSONL", help="also write results here")

    p = sub.add_parser("eval", help="detection metrics, or a direct confusion tally")
    _common_flags(p)
    p.add_argument("--detections", metavar="JSONL", help="predicted detections")
    p.add_argument("--manifest", metavar="JSON", help="ground-truth manifest")
    p.add_argument("--iou", type=float, default=0.5, help="match threshold")
    p.add_argument(
        "--ap-method",
        choices=("all_point", "eleven_point"),
        default="all_point",
        help="average-precision interpolation",
    )
    p.add_argument("--tp", type=int, help="true positives (direct tally mode)")
    p.add_argument("--fp", type=int, help="false positives (direct tally mode)")
    p.add_argument("--fn", type=int, help="false negatives (direct tally mode)")
    p.add_argument("--tn", type=int, default=0, help="true negatives (direct tally mode)")

    p = sub.add_parser("train-weights", help="fit score weights from labeled readings")
    _common_flags(p)
    p.add_argument("--data", required=True, metavar="JSONL", help="labeled face rows")
    p.add_argument("--out", required=True, metavar="FILE", help="weights file to write")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--iterations", type=int, default=5000, help="descent steps")
    p.add_argument("--l2", type=float, default=0.0, help="ridge penalty")
    p.add_argument("--tau", type=float, help="head-yaw tolerance in degrees")

    return parser


def _effective_config(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = Path(args.out_dir)
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.emit_annotated is not None:
        overrides["emit_annotated"] = args.emit_annotated
    return replace(config, **overrides) if overrides else config


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    images = list(args.images)
    if args.manifest:
        images.extend(record.image for record in load_manifest(args.manifest))
    if not images:
        raise ConfigError("pipeline needs image arguments or --manifest")
    if config.detections_path is None or config.landmarks_path is None:
        raise ConfigError(
            "pipeline needs [providers] detections and landmarks in the config"
        )
    detector = FileDetectionProvider(config.detections_path)
    landmarks = FileLandmarkProvider(config.landmarks_path)
    decisions = run_pipeline(images, detector, landmarks, config)
    out_path = config.out_dir / "decisions.jsonl"
    write_decisions(decisions, out_path)
    if config.emit_annotated:
        emit_annotated(decisions, config.out_dir)
    n_errors = sum(1 for d in decisions if d.status == "error")
    n_cues = sum(1 for d in decisions if d.cue)
    print(
        f"{len(decisions)} image(s), {n_cues} cue(s), {n_errors} error(s) "
        f"-> {out_path}"
    )
    return 1 if n_errors else 0


def cmd_anonymize(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    blur = config.blur
    if args.kernel_size is not None or args.sigma is not None:
        blur = BlurParams(
            kernel_size=args.kernel_size if args.kernel_size is not None else blur.kernel_size,
            sigma=args.sigma if args.sigma is not None else blur.sigma,
        )
    faces = FileLandmarkProvider(args.faces)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    log_lines = []
    for image_path in args.images:
        image = load_image(image_path)
        boxes = [f.face_box for f in faces.faces_for(image_path) if f.face_box is not None]
        result = anonymize_image(image, boxes, blur)
        target = config.out_dir / f"{Path(image_path).stem}__anon.png"
        save_png(result, target)
        log_lines.append(
            json.dumps(
                {
                    "image": target.as_posix(),
                    "source": str(image_path),
                    "n_faces": len(boxes),
                    "kernel_size": blur.kernel_size,
                    "sigma": blur.sigma,
                },
                sort_keys=True,
            )
        )
        print(f"{image_path} -> {target} ({len(boxes)} face(s))")
    log_path = config.out_dir / "anonymize_log.jsonl"
    log_path.write_text("\n".join(log_lines) + "\n", encoding="utf-8")
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    per_image = args.per_image if args.per_image is not None else config.per_image
    manifest = load_manifest(args.manifest)
    skipped: list[str] = []

    def on_skip(path: str, exc: Exception) -> None:
        skipped.append(path)
        print(f"skipping {path}: {exc}", file=sys.stderr)

    expanded = augment_dataset(
        manifest,
        ranges=config.ranges,
        per_image=per_image,
        seed=config.seed,
        out_dir=config.out_dir,
        on_skip=on_skip,
    )
    out_manifest = (
        Path(args.out_manifest) if args.out_manifest else config.out_dir / "manifest.json"
    )
    save_manifest(expanded, out_manifest)
    print(f"{len(manifest)} -> {len(expanded)} records -> {out_manifest}")
    return 1 if skipped else 0


def cmd_score(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    weights, gaze = config.weights, config.gaze
    if args.weights:
        weights, gaze = load_weights(args.weights)
    source = FileLandmarkProvider(args.landmarks)
    lines = []
    for image in source.images():
        entries = []
        for face in source.faces_for(image):
            score = awareness_score(face, weights, gaze)
            entries.append(
                {
                    "score": round(score, 8),
                    "awareness": classify_awareness(score).value,
                }
            )
        lines.append(json.dumps({"image": image, "faces": entries}, sort_keys=True))
    text = "\n".join(lines) + ("\n" if lines else "")
    sys.stdout.write(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def _format_metric(value) -> str:
    return "undefined" if value is None else f"{value:.3f}"


def cmd_eval(args: argparse.Namespace) -> int:
    tally_flags = [args.tp, args.fp, args.fn]
    if any(v is not None for v in tally_flags):
        if any(v is None for v in tally_flags):
            raise ConfigError("direct tally mode needs --tp, --fp, and --fn together")
        metrics = classification_metrics(
            ConfusionCounts(tp=args.tp, fp=args.fp, fn=args.fn, tn=args.tn)
        )
        print(
            f"precision={_format_metric(metrics.precision)} "
            f"recall={_format_metric(metrics.recall)} "
            f"f1={_format_metric(metrics.f1)}"
        )
        return 0
    if not args.detections or not args.manifest:
        raise ConfigError("eval needs either --tp/--fp/--fn or --detections with --manifest")
    config = _effective_config(args)
    provider = FileDetectionProvider(args.detections)
    samples = [
        (provider.detect(record.image), record.annotations)
        for record in load_manifest(args.manifest)
    ]
    evaluation = evaluate_detections(samples, iou_threshold=args.iou, ap_method=args.ap_method)
    report = evaluation_report(evaluation)
    metrics = evaluation.metrics
    print(
        f"mAP={evaluation.mean_ap:.4f} "
        f"precision={_format_metric(metrics.precision)} "
        f"recall={_format_metric(metrics.recall)} "
        f"f1={_format_metric(metrics.f1)}"
    )
    for name, entry in sorted(report["classes"].items()):
        print(f"  {name}: AP={entry['ap']:.4f} over {entry['n_truth']} truth box(es)")
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_report_json(evaluation, config.out_dir / "report.json")
    curves = {m.value: ce.curve for m, ce in evaluation.per_class.items()}
    for name, curve in curves.items():
        write_pr_csv(curve, config.out_dir / f"pr_{name}.csv")
    write_pr_svg(curves, config.out_dir / "pr.svg")
    return 0


def cmd_train_weights(args: argparse.Namespace) -> int:
    gaze = GazeConfig(tau_r_deg=args.tau) if args.tau is not None else GazeConfig()
    dataset = []
    for lineno, entry in _read_jsonl(args.data):
        try:
            face = face_from_dict(entry)
            aware = entry["aware"]
            if not isinstance(aware, bool):
                raise ValueError(f"aware must be true or false, got {aware!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{args.data}:{lineno}: {exc}") from exc
        dataset.append((features_from_observation(face, gaze), aware))
    params = TrainingParams(learning_rate=args.lr, iterations=args.iterations, l2=args.l2)
    weights, history = train_weights_with_history(dataset, params)
    correct = sum(
        1
        for features, aware in dataset
        if (
            weights.w_r * features.one_minus_rotation_factor
            + weights.w_e * features.mean_eye_open
            + weights.w_s * features.p_smile
            + weights.bias_c
            > 0.0
        )
        == aware
    )
    save_weights(args.out, weights, gaze)
    print(
        f"trained on {len(dataset)} rows: loss {history[0]:.6f} -> {history[-1]:.6f}, "
        f"train accuracy {correct / len(dataset):.3f} -> {args.out}"
    )
    return 0


_COMMANDS = {
    "pipeline": cmd_pipeline,
    "anonymize": cmd_anonymize,
    "augment": cmd_augment,
    "score": cmd_score,
    "eval": cmd_eval,
    "train-weights": cmd_train_weights,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
