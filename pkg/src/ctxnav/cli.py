"""Command-line entry point: ``ctxnav run|train|classify|gen-data|plot|eval``.

Exit status is 0 on success, 1 on a domain or file error and 2 on a usage
error (argparse's own convention).
"""

from __future__ import annotations

import argparse
import importlib.resources
import sys
import time
from pathlib import Path

from .context import (
    FORMATIONS,
    ContextLabel,
    LinearSvmModel,
    SvmConfig,
    accuracy,
    evaluate_classifier,
    extract_features,
    generate_formation_samples,
    predict_svm,
    read_samples,
    split_dataset,
    synthetic_dataset,
    train_svm,
    write_samples,
)
from .errors import CtxnavError, InvalidInputError
from .geom import Point2D
from .sim import MODES, default_model, format_trace, run_simulation
from .svg import render_svg
from .world import Scenario, load_scenario


def builtin_scenarios() -> list[str]:
    root = importlib.resources.files("ctxnav") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_scenario(ref: str) -> Scenario:
    """Load a scenario file, or a bundled fixture by bare name (``hallway``)."""
    path = Path(ref)
    if not path.exists() and ref in builtin_scenarios():
        return load_scenario((importlib.resources.files("ctxnav") / "scenarios" / f"{ref}.json").read_text())
    return load_scenario(path.read_text())


def parse_points(text: str) -> list[Point2D]:
    pts = []
    for i, item in enumerate(filter(None, (s.strip() for s in text.split(";")))):
        parts = item.split(",")
        try:
            if len(parts) != 2:
                raise ValueError("expected x,y")
            pts.append(Point2D(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InvalidInputError(f"point {i + 1} ({item!r}): {exc}") from exc
    return pts


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _simulate(args):
    if args.max_ticks < 1:
        raise InvalidInputError("--max-ticks must be at least 1")
    scenario = read_scenario(args.scenario)
    records, metrics = run_simulation(scenario, mode=args.mode, seed=args.seed, max_ticks=args.max_ticks)
    return scenario, records, metrics


def cmd_run(args) -> int:
    scenario, records, metrics = _simulate(args)
    _write(args.out, format_trace(records))
    _write(args.metrics, metrics.to_json())
    if args.svg:
        _write(args.svg, render_svg(scenario, records))
    print(f"{len(records)} ticks, success={metrics.success}, path_length={metrics.path_length:.3f} m")
    return 0


def cmd_plot(args) -> int:
    scenario, records, _ = _simulate(args)
    _write(args.out, render_svg(scenario, records))
    return 0


def _load_samples(path: str):
    samples = read_samples(Path(path).read_text())
    if not samples:
        raise InvalidInputError(f"{path}: no samples")
    return samples


def cmd_train(args) -> int:
    start = time.perf_counter()
    data = synthetic_dataset(args.per_class, args.noise, seed=args.seed) if args.synthetic else _load_samples(args.data)
    train, test = split_dataset(data, 0.2, seed=args.seed)
    model = train_svm([s for s, _ in train], [lab for _, lab in train], SvmConfig(seed=args.seed))
    train_acc = accuracy(model, [s for s, _ in train], [lab for _, lab in train])
    test_acc = accuracy(model, [s for s, _ in test], [lab for _, lab in test])
    _write(args.out, model.to_text())
    print(f"samples: {len(data)} (train {len(train)}, test {len(test)})")
    print(f"train accuracy: {train_acc:.4f}")
    print(f"test accuracy: {test_acc:.4f}")
    print(f"elapsed: {time.perf_counter() - start:.3f} s")
    return 0


def _model(path: str | None) -> LinearSvmModel:
    return default_model() if path is None else LinearSvmModel.from_text(Path(path).read_text())


def cmd_eval(args) -> int:
    model = _model(args.model)
    samples = _load_samples(args.data)
    preds = [predict_svm(model, s).label for s, _ in samples]
    print(evaluate_classifier(preds, [lab for _, lab in samples], list(FORMATIONS)).format())
    return 0


def cmd_classify(args) -> int:
    model = _model(args.model)
    est = predict_svm(model, extract_features(parse_points(args.points)))
    print(f"{est.label.value} {est.confidence:.4f}")
    return 0


def cmd_gen_data(args) -> int:
    if args.count < 1:
        raise InvalidInputError("--count must be at least 1")
    kinds = list(FORMATIONS) if args.kind == "both" else [ContextLabel(args.kind)]
    rows = [s for k in kinds for s in generate_formation_samples(k, args.count, noise_sigma=args.noise, seed=args.seed)]
    _write(args.out, write_samples(rows))
    print(f"{len(rows)} samples written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxnav", description="Context-aware social navigation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("scenario", help="scenario JSON file, or a bundled name: " + ", ".join(builtin_scenarios()))
        p.add_argument("--mode", choices=MODES, default="social")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-ticks", type=int, default=600)

    p = sub.add_parser("run", help="simulate a scenario and write trace, metrics and optional SVG")
    sim_flags(p)
    p.add_argument("--out", default="trace.csv")
    p.add_argument("--metrics", default="metrics.json")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="simulate a scenario and write only the SVG plot")
    sim_flags(p)
    p.add_argument("--out", default="plot.svg")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("train", help="train the formation classifier")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="samples CSV (circularity,linearity,label)")
    src.add_argument("--synthetic", action="store_true", help="generate the training set")
    p.add_argument("--per-class", type=int, default=170, help="synthetic samples per class")
    p.add_argument("--noise", type=float, default=0.05, help="synthetic position noise sigma (m)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="model.txt")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a samples CSV")
    p.add_argument("--model", help="model file (default: built-in synthetic model)")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("classify", help="classify one formation of points")
    p.add_argument("--model", help="model file (default: built-in synthetic model)")
    p.add_argument("--points", required=True, help='"x1,y1;x2,y2;..."')
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen-data", help="write synthetic formation samples")
    p.add_argument("--kind", choices=["queue", "oformation", "both"], default="both")
    p.add_argument("--count", type=int, default=170, help="samples per kind")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="samples.csv")
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CtxnavError, OSError) as exc:
        print(f"ctxnav {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
