"""Command line entry points.

Subcommands: ``solve`` a configured problem, ``diagnose-erm`` to expose the
negative masses of the plug-in inverse, ``experiment`` to run the canned
studies, and ``inspect scheme`` to describe a scheme config.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from ..classify import posterior_rule, write_weights_csv
from ..objective import NormChoice, resolve_statistic
from ..schemes import scheme_from_config
from ..solver import GrrmProblem, erm_backprojection, solve
from .config import ExperimentConfig, config_from_dict
from .experiments import run_benchmark, run_learning_curve, run_noise_sweep
from .ingest import write_synthetic_dataset
from .report import write_result


def _parse_lambda_grid(text):
    if text is None:
        return None
    return tuple(float(part) for part in text.split(",") if part)


def _load_json(path):
    with Path(path).open() as handle:
        return json.load(handle)


def _write_distribution_csv(path, distribution, fingerprint):
    with Path(path).open("w", newline="") as handle:
        handle.write(f"# config {fingerprint}\n")
        writer = csv.writer(handle)
        writer.writerow(["element", "mass"])
        for element, mass in zip(distribution.space.elements, distribution.mass):
            writer.writerow([str(element), f"{float(mass):.12g}"])


def _cmd_solve(args) -> int:
    config = _load_json(args.config)
    scheme = scheme_from_config(config["scheme"], base_dir=Path(args.config).parent)
    lam = args.lam if args.lam is not None else float(config.get("lambda", 0.01))
    norm_name = args.norm or config.get("norm", "max-abs")
    stat_name = args.statistic or config.get("statistic", "indicator")
    stats = tuple(resolve_statistic(stat_name, t.bridge_space) for t in scheme.triples)
    problem = GrrmProblem(scheme, lam, stats, NormChoice.from_name(norm_name))
    solution = solve(problem)
    print(f"status: {solution.status.value}")
    if solution.q_star is None:
        if solution.note:
            print(f"note: {solution.note}")
        return 1
    print(f"objective: {solution.objective:.9g}")
    print(f"entropy: {solution.entropy:.9g}")
    for triple, term in zip(scheme.triples, solution.discrepancy_terms):
        print(f"discrepancy[{triple.name}]: {term:.9g}")
    print(f"bridge residual: {solution.feasibility_residual:.3g}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    import hashlib

    fingerprint = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()
    ).hexdigest()
    _write_distribution_csv(out_dir / "solution.csv", solution.q_star, fingerprint)
    rule = posterior_rule(solution.q_star, scheme.loss)
    with (out_dir / "rule.csv").open("w", newline="") as handle:
        handle.write(f"# config {fingerprint}\n")
        writer = csv.writer(handle)
        writer.writerow(["feature", "label"])
        for x in rule.feature_space.elements:
            writer.writerow([str(x), str(rule.decision[x])])
    summary = {
        "status": solution.status.value,
        "objective": solution.objective,
        "entropy": solution.entropy,
        "discrepancy_terms": list(solution.discrepancy_terms),
        "bridge_residual": solution.feasibility_residual,
        "gap": solution.certificate.gap,
        "lambda": lam,
        "norm": norm_name,
        "statistic": stat_name,
        "fingerprint": fingerprint,
    }
    with (out_dir / "summary.json").open("w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"wrote {out_dir / 'solution.csv'}")
    return 0


def _cmd_diagnose(args) -> int:
    config = _load_json(args.config)
    scheme = scheme_from_config(config["scheme"], base_dir=Path(args.config).parent)
    measure, report = erm_backprojection(scheme.triples[0])
    print(f"minimum entry: {report.minimum_entry:.9g} at {report.minimum_element!r}")
    if report.is_distribution:
        print("back-projection is a proper distribution")
    else:
        print(f"negative entries: {len(report.negative_entries)}")
        for element, value in report.negative_entries:
            print(f"  {element!r}: {value:.9g}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "backprojection.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["element", "mass"])
        for element, mass in zip(measure.space.elements, measure.mass):
            writer.writerow([str(element), f"{float(mass):.12g}"])
    print(f"wrote {out_dir / 'backprojection.csv'}")
    return 0


def _experiment_config(args, kind: str) -> ExperimentConfig:
    if args.config:
        data = _load_json(args.config)
        data.setdefault("kind", kind)
        if data["kind"] != kind:
            raise ValueError(
                f"config is for {data['kind']!r} but the {kind!r} command was used"
            )
        config = config_from_dict(data)
    else:
        config = ExperimentConfig(kind=kind)
    return config.override(
        seed=args.seed,
        repetitions=args.reps,
        lambda_grid=_parse_lambda_grid(args.lam),
        norm=args.norm,
    )


def _cmd_experiment(args) -> int:
    kind = args.experiment
    config = _experiment_config(args, kind)
    out_dir = Path(args.out)
    if kind == "noise-sweep":
        result = run_noise_sweep(config)
    elif kind == "learning-curve":
        result = run_learning_curve(config)
    else:
        out_dir.mkdir(parents=True, exist_ok=True)
        if config.dataset is not None:
            dataset = Path(config.dataset)
        else:
            dataset = write_synthetic_dataset(
                out_dir / "synthetic.csv", n=config.dataset_rows
            )
        result = run_benchmark(config, dataset)
    paths = write_result(result, out_dir)
    for row in result.aggregate:
        parts = [f"{k}={_short(v)}" for k, v in row.items()]
        print("  ".join(parts))
    for key, value in result.summary.items():
        print(f"{key}: {json.dumps(value, sort_keys=True)}")
    print(f"wrote {paths['aggregate']}")
    print(f"wrote {paths['figure']}")
    return 0


def _short(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _cmd_inspect(args) -> int:
    config = _load_json(args.config)
    scheme = scheme_from_config(config["scheme"], base_dir=Path(args.config).parent)
    print(f"test space: {len(scheme.test_space)} outcomes")
    print(f"triples: {len(scheme.triples)}")
    for triple in scheme.triples:
        print(
            f"  {triple.name}: training {len(triple.training_space)}"
            f" -> bridge {len(triple.bridge_space)}"
            f", samples {triple.sample_count}, weight {triple.weight:.6g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grrm",
        description="Robust risk minimization over finite domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_p = sub.add_parser("solve", help="solve a configured problem")
    solve_p.add_argument("--config", required=True, help="problem config JSON")
    solve_p.add_argument("--lambda", dest="lam", type=float, default=None)
    solve_p.add_argument("--norm", default=None)
    solve_p.add_argument("--statistic", default=None)
    solve_p.add_argument("--out", default="grrm-solve")
    solve_p.set_defaults(func=_cmd_solve)

    diag_p = sub.add_parser(
        "diagnose-erm", help="show the negative masses of the plug-in inverse"
    )
    diag_p.add_argument("--config", required=True)
    diag_p.add_argument("--out", default="grrm-diagnose")
    diag_p.set_defaults(func=_cmd_diagnose)

    exp_p = sub.add_parser("experiment", help="run a canned experiment")
    exp_sub = exp_p.add_subparsers(dest="experiment", required=True)
    for kind in ("noise-sweep", "learning-curve", "benchmark"):
        p = exp_sub.add_parser(kind)
        p.add_argument("--config", default=None, help="experiment config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--lambda", dest="lam", default=None, help="comma-separated grid")
        p.add_argument("--norm", default=None)
        p.add_argument("--out", default=None)
        p.set_defaults(func=_cmd_experiment)

    inspect_p = sub.add_parser("inspect", help="describe configured objects")
    inspect_sub = inspect_p.add_subparsers(dest="target", required=True)
    scheme_p = inspect_sub.add_parser("scheme")
    scheme_p.add_argument("--config", required=True)
    scheme_p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out", None) is None and getattr(args, "experiment", None):
        args.out = f"grrm-{args.experiment}"
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
