"""Command-line front end.

Four subcommands driven by JSON experiment files (validated strictly,
unknown keys rejected):

* ``gen-data``   writes a synthetic dataset plus its provenance sidecar
* ``simulate``   runs the selection loop per repeat, writes run logs and
                 learning-curve CSVs plus their mean
* ``probe-mrr``  runs the two-seed consistency probe, writes windowed MRR
* ``report``     turns policy curves plus a baseline curve into a
                 relative-improvement CSV

Exit codes are stable contracts: 0 ok, 1 runtime failure, 2 schema
violation, 3 refusing to overwrite without --force, 4 curve misalignment.
All CSVs use LF line endings and 9 significant digits.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import datagen, engine, probe
from .errors import AlignmentError, AlolError, MissingScoresError
from .learners import spec_from_json
from .metrics import MetricKind
from .policies import TrainingMode
from .pool import load_dataset, save_dataset
from .rng import repeat_seed

SEED_OVERRIDE_ENV = "ALOL_SEED_OVERRIDE"

_POLICY_KEYS = {"name"}, {"epsilon", "switch_after", "training_mode"}
_LEARNER_KEYS = (
    {"family", "input_dim", "class_count"},
    {"hidden_dim", "learning_rate", "max_epochs", "patience", "stop_epsilon", "init_scale"},
)
_SIMULATE_KEYS = (
    {
        "command",
        "dataset",
        "iterations",
        "candidate_count",
        "set_size",
        "policy",
        "learner",
        "selection_metric",
        "report_metric",
        "master_seed",
        "partition_sizes",
    },
    {"repeats", "checkpoint_every", "log_oracle_scores"},
)
_PROBE_KEYS = (
    {
        "command",
        "dataset",
        "iterations",
        "candidate_count",
        "set_size",
        "learner",
        "selection_metric",
        "seed_pair",
        "partition_sizes",
    },
    {"window", "training_mode"},
)
_GEN_KEYS = (
    {
        "command",
        "kind",
        "n",
        "input_dim",
        "class_count",
        "cluster_separation",
        "noise_fraction",
        "seed",
    },
    {"seq_len_range"},
)


class _CliFailure(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _check_keys(obj: dict, keys: tuple[set, set], where: str) -> None:
    required, optional = keys
    if not isinstance(obj, dict):
        raise _CliFailure(2, f"{where}: expected a JSON object")
    unknown = sorted(set(obj) - required - optional)
    if unknown:
        raise _CliFailure(2, f"{where}: unknown keys {unknown}")
    missing = sorted(required - set(obj))
    if missing:
        raise _CliFailure(2, f"{where}: missing keys {missing}")


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise _CliFailure(2, f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise _CliFailure(2, f"{path}: top level must be a JSON object")
    if data.get("command") != command:
        raise _CliFailure(
            2, f"{path}: command {data.get('command')!r} does not match '{command}'"
        )
    return data


def _refuse_overwrite(paths: list[Path], force: bool) -> None:
    if force:
        return
    existing = [str(p) for p in paths if p.exists()]
    if existing:
        raise _CliFailure(3, f"refusing to overwrite {existing}; pass --force")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _write_json(path: Path, data: dict) -> None:
    _write_text(path, json.dumps(data, indent=2) + "\n")


def _curve_csv(curve, policy_label: str, seed: int) -> str:
    lines = ["labeled_size,metric,policy,seed"]
    for size, value in curve:
        lines.append(f"{size},{_fmt(value)},{policy_label},{seed}")
    return "\n".join(lines) + "\n"


def _read_curve_csv(path: str) -> tuple[str, list[tuple[int, float]]]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "labeled_size,metric,policy,seed":
        raise _CliFailure(2, f"{path}: expected header 'labeled_size,metric,policy,seed'")
    label = Path(path).stem
    curve: list[tuple[int, float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise _CliFailure(2, f"{path}:{lineno}: expected 4 columns")
        curve.append((int(cells[0]), float(cells[1])))
        label = cells[2]
    if not curve:
        raise _CliFailure(2, f"{path}: no data rows")
    return label, curve


def _seed_override() -> int | None:
    raw = os.environ.get(SEED_OVERRIDE_ENV)
    if raw is None:
        return None
    try:
        return int(raw, 0)
    except ValueError:
        raise _CliFailure(2, f"{SEED_OVERRIDE_ENV}={raw!r} is not an integer") from None


def _parse_simulation_config(data: dict, config_path: str) -> tuple[engine.SimulationConfig, int, Path]:
    _check_keys(data, _SIMULATE_KEYS, config_path)
    _check_keys(data["policy"], _POLICY_KEYS, f"{config_path}: policy")
    _check_keys(data["learner"], _LEARNER_KEYS, f"{config_path}: learner")
    repeats = int(data.get("repeats", 1))
    if repeats < 1:
        raise _CliFailure(2, f"{config_path}: repeats={repeats} must be >= 1")
    payload = {k: v for k, v in data.items() if k not in {"command", "dataset", "repeats"}}
    try:
        config = engine.config_from_json(payload)
    except (AlolError, ValueError, KeyError, TypeError) as exc:
        raise _CliFailure(2, f"{config_path}: {exc}") from None
    override = _seed_override()
    if override is not None:
        config = dataclasses.replace(config, master_seed=override)
    dataset_path = Path(config_path).parent / data["dataset"]
    return config, repeats, dataset_path


def cmd_gen_data(args) -> int:
    data = _load_config(args.config, "gen-data")
    _check_keys(data, _GEN_KEYS, args.config)
    payload = {k: v for k, v in data.items() if k != "command"}
    try:
        spec = datagen.gen_spec_from_json(payload)
    except (AlolError, ValueError, KeyError, TypeError) as exc:
        raise _CliFailure(2, f"{args.config}: {exc}") from None
    out = Path(args.out)
    sidecar = Path(str(out).removesuffix(".jsonl") + ".provenance.jsonl")
    _refuse_overwrite([out, sidecar], args.force)
    dataset, informative = datagen.generate(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out)
    datagen.save_provenance(informative, sidecar)
    return 0


def cmd_simulate(args) -> int:
    data = _load_config(args.config, "simulate")
    config, repeats, dataset_path = _parse_simulation_config(data, args.config)
    if args.log_oracle_scores:
        config = dataclasses.replace(config, log_oracle_scores=True)
    out_dir = Path(args.out)
    outputs = [out_dir / "mean_curve.csv", out_dir / "summary.json"]
    dump_policy = config.policy.name in engine.ORACLE_FAMILY
    for r in range(repeats):
        outputs += [out_dir / f"run_{r}.json", out_dir / f"curve_{r}.csv"]
        if dump_policy:
            outputs.append(out_dir / f"policy_examples_{r}.jsonl")
    _refuse_overwrite(outputs, args.force)
    dataset = load_dataset(dataset_path)
    curves = []
    truncated_flags = []
    seeds = []
    for r in range(repeats):
        seed_r = repeat_seed(config.master_seed, r)
        seeds.append(seed_r)
        config_r = dataclasses.replace(config, master_seed=seed_r)
        log = engine.run_simulation(config_r, dataset, jobs=args.jobs)
        truncated_flags.append(log.truncated)
        curve = engine.learning_curve(log)
        curves.append(curve)
        _write_json(out_dir / f"run_{r}.json", engine.run_log_to_json(log))
        _write_text(
            out_dir / f"curve_{r}.csv",
            _curve_csv(curve, config.policy.name.value, seed_r),
        )
        if dump_policy:
            try:
                engine.emit_policy_training_examples(
                    log, out_dir / f"policy_examples_{r}.jsonl"
                )
            except MissingScoresError:
                pass

    common = min(len(c) for c in curves)
    mean_curve = []
    for k in range(common):
        sizes = {c[k][0] for c in curves}
        if len(sizes) != 1:
            raise AlignmentError(f"repeat curves disagree on checkpoint {k}: {sorted(sizes)}")
        mean_curve.append((curves[0][k][0], sum(c[k][1] for c in curves) / len(curves)))
    _write_text(
        out_dir / "mean_curve.csv",
        _curve_csv(mean_curve, config.policy.name.value, config.master_seed),
    )
    _write_json(
        out_dir / "summary.json",
        {
            "config": engine.config_to_json(config),
            "repeats": repeats,
            "seeds": seeds,
            "truncated": truncated_flags,
            "checkpoints_in_mean_curve": common,
        },
    )
    return 0


def cmd_probe_mrr(args) -> int:
    data = _load_config(args.config, "probe-mrr")
    _check_keys(data, _PROBE_KEYS, args.config)
    _check_keys(data["learner"], _LEARNER_KEYS, f"{args.config}: learner")
    try:
        config = probe.MrrConfig(
            iterations=int(data["iterations"]),
            candidate_count=int(data["candidate_count"]),
            set_size=int(data["set_size"]),
            learner=spec_from_json(data["learner"]),
            selection_metric=MetricKind(data["selection_metric"]),
            seed_pair=tuple(int(s) for s in data["seed_pair"]),
            partition_sizes=tuple(int(s) for s in data["partition_sizes"]),
            window=int(data.get("window", 10)),
            training_mode=TrainingMode(data.get("training_mode", "fine_tune_union")),
        )
    except (AlolError, ValueError, KeyError, TypeError) as exc:
        raise _CliFailure(2, f"{args.config}: {exc}") from None
    out_dir = Path(args.out)
    _refuse_overwrite([out_dir / "mrr.csv", out_dir / "mrr_summary.json"], args.force)
    dataset = load_dataset(Path(args.config).parent / data["dataset"])
    report = probe.run_mrr_probe(config, dataset, jobs=args.jobs)
    lines = ["window_start,window_end,mrr,baseline"]
    for w in report.windows:
        lines.append(f"{w.start},{w.end},{_fmt(w.mrr)},{_fmt(report.baseline)}")
    _write_text(out_dir / "mrr.csv", "\n".join(lines) + "\n")
    _write_json(
        out_dir / "mrr_summary.json",
        {
            "config": probe.mrr_config_to_json(config),
            "overall_mrr": report.overall_mrr,
            "baseline": report.baseline,
            "ranks": list(report.ranks),
            "truncated": report.truncated,
        },
    )
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    _refuse_overwrite([out], args.force)
    _, baseline_curve = _read_curve_csv(args.baseline)
    labels: list[str] = []
    columns: list[list[tuple[int, float]]] = []
    seen: dict[str, int] = {}
    for path in args.curves:
        label, curve = _read_curve_csv(path)
        count = seen.get(label, 0)
        seen[label] = count + 1
        labels.append(label if count == 0 else f"{label}_{count + 1}")
        columns.append(engine.relative_improvement(curve, baseline_curve))
    lines = ["labeled_size," + ",".join(labels)]
    for k, (size, _) in enumerate(baseline_curve):
        cells = [str(size)] + [_fmt(col[k][1]) for col in columns]
        lines.append(",".join(cells))
    _write_text(out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alol",
        description="Deterministic active-learning simulation lab",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("gen-data", help="write a synthetic dataset plus sidecar")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--force", action="store_true")
    gen.set_defaults(func=cmd_gen_data)

    sim = sub.add_parser("simulate", help="run the selection loop")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--force", action="store_true")
    sim.add_argument("--log-oracle-scores", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    prb = sub.add_parser("probe-mrr", help="run the two-seed consistency probe")
    prb.add_argument("--config", required=True)
    prb.add_argument("--out", required=True)
    prb.add_argument("--jobs", type=int, default=1)
    prb.add_argument("--force", action="store_true")
    prb.set_defaults(func=cmd_probe_mrr)

    rep = sub.add_parser("report", help="relative improvement of curves over a baseline")
    rep.add_argument("curves", nargs="+")
    rep.add_argument("--baseline", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--force", action="store_true")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except AlignmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except AlolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
