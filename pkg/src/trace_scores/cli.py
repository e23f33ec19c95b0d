"""Command-line surface: build-index, score, compare, demo.

Exit codes: 0 success, 1 runtime failure, 2 input/usage error.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from . import analytics, demo, pipeline, scoring, targets
from .errors import (AggregateError, ConfigError, CorpusError, DimensionError,
                     StatsError, TargetError, TraceError, TrajectoryError)
from .geometry import FeatureVector
from .pipeline import NormStats, build_trajectory, fit_normalizer, load_trajectory_csv
from .scoring import Polarity
from .targets import (TargetSeries, build_index, knn_provider, load_corpus,
                      save_corpus, series_provider)

_USAGE_ERRORS = (ConfigError, CorpusError, TargetError, TrajectoryError)


def _parse_polarity(value) -> Polarity:
    if isinstance(value, str):
        try:
            return Polarity[value.upper()]
        except KeyError:
            raise ConfigError(f"unknown polarity {value!r}") from None
    try:
        return Polarity(int(value))
    except ValueError:
        raise ConfigError(f"unknown polarity {value!r}") from None


@dataclass
class RunConfig:
    """Validated run parameters; JSON file values overridden by flags."""

    lam: float = 0.9
    k_neighbors: int = 3
    epsilon: float = 1e-9
    polarity_map: Dict[str, Polarity] = field(default_factory=dict)
    feature_weights: Optional[List[float]] = None
    mode: Optional[str] = None

    _KEYS = {"lambda", "k_neighbors", "epsilon", "polarity_map",
             "feature_weights", "mode"}

    def validate(self) -> "RunConfig":
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.feature_weights is not None:
            if any(w <= 0 for w in self.feature_weights):
                raise ConfigError("feature_weights must all be positive")
        if self.mode not in (None, "corpus_knn", "fixed_series"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        return self

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            doc = json.load(fh)
        unknown = set(doc) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        if "lambda" in doc:
            cfg.lam = float(doc["lambda"])
        if "k_neighbors" in doc:
            cfg.k_neighbors = int(doc["k_neighbors"])
        if "epsilon" in doc:
            cfg.epsilon = float(doc["epsilon"])
        if "polarity_map" in doc:
            cfg.polarity_map = {k: _parse_polarity(v)
                                for k, v in doc["polarity_map"].items()}
        if "feature_weights" in doc and doc["feature_weights"] is not None:
            cfg.feature_weights = [float(w) for w in doc["feature_weights"]]
        if "mode" in doc:
            cfg.mode = doc["mode"]
        return cfg.validate()


def _load_config(config_path, lam, k, epsilon) -> RunConfig:
    cfg = RunConfig.from_json_file(config_path) if config_path else RunConfig()
    overrides = []
    if lam is not None:
        cfg.lam = lam
        overrides.append(f"lambda={lam}")
    if k is not None:
        cfg.k_neighbors = k
        overrides.append(f"k={k}")
    if epsilon is not None:
        cfg.epsilon = epsilon
        overrides.append(f"epsilon={epsilon}")
    cfg.validate()
    click.echo(f"config: lambda={cfg.lam} k={cfg.k_neighbors} "
               f"epsilon={cfg.epsilon}"
               + (f" (flag overrides: {', '.join(overrides)})" if overrides else ""),
               err=True)
    return cfg


def read_corpus_csv(path):
    """CSV with feature columns and a final `label` column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CorpusError(f"{path}: empty file")
        if header[-1] != "label":
            raise CorpusError("missing column: label")
        names = header[:-1]
        if not names:
            raise CorpusError(f"{path}: no feature columns")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CorpusError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                values = [float(v) for v in row[:-1]]
            except ValueError as e:
                raise CorpusError(f"{path}:{lineno}: {e}") from None
            rows.append((values, row[-1]))
        if not rows:
            raise CorpusError(f"{path}: no data rows")
    return names, rows


def run_build_index(corpus_csv, out_path, norm_path=None) -> Dict[str, int]:
    names, rows = read_corpus_csv(corpus_csv)
    raw = np.array([v for v, _ in rows], dtype=float)
    stats = fit_normalizer(raw, names)
    normalized = [(stats.apply(v).values, label) for v, label in rows]
    corpus = build_index(normalized, norm_stats=stats)
    # imputation fallbacks operate on raw values, so store raw class means
    labels = [label for _, label in rows]
    corpus.class_means = {
        label: raw[[i for i, l in enumerate(labels) if l == label]].mean(axis=0).tolist()
        for label in dict.fromkeys(labels)}
    save_corpus(corpus, names, out_path)
    if norm_path is None:
        norm_path = str(out_path) + ".normalizer.json"
    stats.save(norm_path)
    return {label: corpus.class_size(label) for label in corpus.classes()}


def _polarity_averages(scored_steps, polarity_by_class):
    des, undes = [], []
    for step in scored_steps:
        d = [v for c, v in step.per_class.items()
             if polarity_by_class.get(c) == Polarity.DESIRABLE]
        u = [v for c, v in step.per_class.items()
             if polarity_by_class.get(c) == Polarity.UNDESIRABLE]
        if d:
            des.append(float(np.mean(d)))
        if u:
            undes.append(float(np.mean(u)))
    return (float(np.mean(des)) if des else None,
            float(np.mean(undes)) if undes else None)


def run_score_corpus(traj_csv, index_path, cfg: RunConfig, out_dir) -> dict:
    corpus, index_names = load_corpus(index_path)
    by_subject, labels, names = load_trajectory_csv(traj_csv)
    if len(names) != corpus.dim:
        raise DimensionError(
            f"trajectory dimension {len(names)} does not match index dimension {corpus.dim}")
    if not cfg.polarity_map:
        raise ConfigError("corpus mode requires a polarity_map in the config")
    provider = knn_provider(corpus, cfg.k_neighbors, cfg.polarity_map)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    step_lines: List[dict] = []
    summary_rows: List[dict] = []
    errors: List[Tuple[str, str]] = []
    for subject in sorted(by_subject):
        try:
            traj = build_trajectory(by_subject[subject], label=labels.get(subject),
                                    class_means=corpus.class_means,
                                    normalizer=corpus.norm_stats)
            ts = scoring.score_trajectory(traj, provider, cfg.lam,
                                          epsilon=cfg.epsilon,
                                          feature_weights=cfg.feature_weights)
            series = analytics.aggregate(ts, subject)
        except TraceError as e:
            errors.append((subject, str(e)))
            continue
        for step in ts.scored_steps():
            step_lines.append({"subject": subject, "t": step.t_index,
                               "combined": step.combined,
                               "per_class": step.per_class})
        avg_des, avg_undes = _polarity_averages(ts.scored_steps(), cfg.polarity_map)
        summary_rows.append({
            "subject_id": subject,
            "label": labels.get(subject, ""),
            "n_steps": len(series.values),
            "n_skipped": ts.skipped_count,
            "average": series.average,
            "final_cumulative": series.cumulative[-1],
            "average_desirable": avg_des,
            "average_undesirable": avg_undes,
        })
    if not summary_rows:
        raise TraceError("no subject could be scored")
    _write_jsonl(out_dir / "steps.jsonl", step_lines)
    _write_wide(out_dir / "scores_wide.csv", step_lines, ["subject"])
    _write_summary(out_dir / "summary.csv", summary_rows,
                   ["subject_id", "label", "n_steps", "n_skipped", "average",
                    "final_cumulative", "average_desirable", "average_undesirable"])
    if errors:
        _write_summary(out_dir / "errors.csv",
                       [{"subject_id": s, "error": e} for s, e in errors],
                       ["subject_id", "error"])
        for subject, message in errors:
            click.echo(f"subject {subject}: {message}", err=True)
    return {"subjects": len(summary_rows), "errors": len(errors)}


def read_series_csv(path, feature_names) -> Dict[int, FeatureVector]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "t":
            raise TargetError(f"{path}: header must start with t")
        if header[1:] != list(feature_names):
            raise DimensionError(
                f"{path}: series features {header[1:]} do not match "
                f"trajectory features {list(feature_names)}")
        points = {}
        for row in reader:
            if not row:
                continue
            points[int(row[0])] = FeatureVector([float(v) for v in row[1:]])
        if not points:
            raise TargetError(f"{path}: no target points")
    return points


def run_score_series(traj_csv, targets_dir, cfg: RunConfig, out_dir) -> dict:
    by_subject, labels, names = load_trajectory_csv(traj_csv)
    files = sorted(Path(targets_dir).glob("*.csv"))
    if not files:
        raise TargetError(f"no target series found in {targets_dir}")
    series = []
    for f in files:
        polarity = cfg.polarity_map.get(f.stem, Polarity.DESIRABLE)
        series.append(TargetSeries(class_label=f.stem, polarity=polarity,
                                   points=read_series_csv(f, names)))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    step_lines: List[dict] = []
    summary_rows: List[dict] = []
    errors: List[Tuple[str, str]] = []
    rankings: Dict[str, List[str]] = {}
    for subject in sorted(by_subject):
        averages: Dict[str, float] = {}
        for s in series:
            try:
                traj = build_trajectory(by_subject[subject],
                                        label=labels.get(subject))
                ts = scoring.score_trajectory(traj, series_provider([s]), cfg.lam,
                                              epsilon=cfg.epsilon,
                                              feature_weights=cfg.feature_weights)
                agg = analytics.aggregate(ts, subject)
            except TraceError as e:
                errors.append((subject, f"{s.class_label}: {e}"))
                continue
            for step in ts.scored_steps():
                step_lines.append({"subject": subject, "series": s.class_label,
                                   "t": step.t_index, "combined": step.combined,
                                   "per_class": step.per_class})
            averages[s.class_label] = agg.average
            summary_rows.append({
                "subject_id": subject,
                "series": s.class_label,
                "n_steps": len(agg.values),
                "n_skipped": ts.skipped_count,
                "average": agg.average,
                "final_cumulative": agg.cumulative[-1],
            })
        if averages:
            rankings[subject] = analytics.rank_targets(averages)
    if not summary_rows:
        raise TraceError("no subject could be scored")
    _write_jsonl(out_dir / "steps.jsonl", step_lines)
    _write_wide(out_dir / "scores_wide.csv", step_lines, ["subject", "series"])
    _write_summary(out_dir / "summary.csv", summary_rows,
                   ["subject_id", "series", "n_steps", "n_skipped",
                    "average", "final_cumulative"])
    with open(out_dir / "ranking.json", "w") as fh:
        json.dump(rankings, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if errors:
        for subject, message in errors:
            click.echo(f"subject {subject}: {message}", err=True)
    return {"subjects": len(rankings), "errors": len(errors)}


def _write_jsonl(path, lines: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True))
            fh.write("\n")


def _write_wide(path, step_lines: Sequence[dict], key_fields: Sequence[str]) -> None:
    """One row per key, one column per time index; blanks for skipped steps."""
    times = sorted({line["t"] for line in step_lines})
    rows: Dict[Tuple[str, ...], Dict[int, float]] = {}
    for line in step_lines:
        key = tuple(line[f] for f in key_fields)
        rows.setdefault(key, {})[line["t"]] = line["combined"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(key_fields) + [f"t{t}" for t in times])
        for key in sorted(rows):
            w.writerow(list(key) + ["" if t not in rows[key] else repr(rows[key][t])
                                    for t in times])


def _write_summary(path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if row.get(c) is None else
                        (repr(row[c]) if isinstance(row[c], float) else row[c])
                        for c in columns])


def read_averages_csv(path) -> List[float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "average" not in reader.fieldnames:
            raise ConfigError(f"{path}: missing column: average")
        try:
            return [float(row["average"]) for row in reader]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}: malformed average column: {e}") from None


# -- click wiring -----------------------------------------------------------

@click.group()
def main():
    """TraCE trajectory scoring toolkit."""


def _exit_on_error(fn):
    try:
        return fn()
    except _USAGE_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except TraceError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


@main.command("build-index")
@click.argument("corpus_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--normalizer", "norm_path", default=None, type=click.Path())
def cmd_build_index(corpus_csv, out_path, norm_path):
    """Build per-class nearest-neighbor indices from a labeled corpus CSV."""
    def run():
        counts = _exit_on_error(lambda: run_build_index(corpus_csv, out_path, norm_path))
        for label in sorted(counts):
            click.echo(f"{label}: {counts[label]}")
    run()


@main.command("score")
@click.argument("trajectories_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=None, type=click.Path(exists=True))
@click.option("--targets-dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--lambda", "lam", default=None, type=float)
@click.option("--k", default=None, type=int)
@click.option("--epsilon", default=None, type=float)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_score(trajectories_csv, index_path, targets_dir, config_path, lam, k,
              epsilon, out_dir):
    """Score trajectories against a corpus index or fixed target series."""
    if (index_path is None) == (targets_dir is None):
        click.echo("error: exactly one of --index or --targets-dir is required",
                   err=True)
        sys.exit(2)
    cfg = _exit_on_error(lambda: _load_config(config_path, lam, k, epsilon))
    if index_path is not None:
        info = _exit_on_error(
            lambda: run_score_corpus(trajectories_csv, index_path, cfg, out_dir))
    else:
        info = _exit_on_error(
            lambda: run_score_series(trajectories_csv, targets_dir, cfg, out_dir))
    click.echo(json.dumps(info, sort_keys=True))


@main.command("compare")
@click.argument("scores_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("scores_b", type=click.Path(exists=True, dir_okay=False))
def cmd_compare(scores_a, scores_b):
    """Welch's t-test between the `average` columns of two summary CSVs."""
    def run():
        a = read_averages_csv(scores_a)
        b = read_averages_csv(scores_b)
        cmp = analytics.welch_t_test(a, b)
        click.echo(json.dumps({
            "mean_a": cmp.mean_a, "sd_a": cmp.sd_a, "n_a": cmp.n_a,
            "mean_b": cmp.mean_b, "sd_b": cmp.sd_b, "n_b": cmp.n_b,
            "t": cmp.t_stat, "dof": cmp.dof, "p": cmp.p_value,
        }, sort_keys=True))
    _exit_on_error(run)


@main.command("demo")
@click.option("--scenario", type=click.Choice(["toy", "icu", "ssp"]), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--lambda", "lam", default=None, type=float)
@click.option("--k", default=None, type=int)
def cmd_demo(scenario, seed, out_dir, lam, k):
    """Generate a seeded synthetic dataset and run the full pipeline on it."""
    _exit_on_error(lambda: run_demo(scenario, seed, out_dir, lam=lam, k=k))


def run_demo(scenario, seed, out_dir, lam=None, k=None) -> None:
    out = Path(out_dir)
    fixtures = out / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    cfg = RunConfig()
    if lam is not None:
        cfg.lam = lam
    if k is not None:
        cfg.k_neighbors = k
    cfg.validate()
    if scenario in ("toy", "icu"):
        if scenario == "toy":
            names, corpus, traj, pmap = demo.gen_toy(seed)
        else:
            names, corpus, traj, pmap = demo.gen_icu(seed)
        cfg.polarity_map = {c: _parse_polarity(p) for c, p in pmap.items()}
        demo.write_corpus_csv(fixtures / "corpus.csv", names, corpus)
        demo.write_trajectory_csv(fixtures / "trajectories.csv", names, traj)
        with open(fixtures / "config.json", "w") as fh:
            json.dump({"lambda": cfg.lam, "k_neighbors": cfg.k_neighbors,
                       "polarity_map": pmap}, fh, sort_keys=True)
            fh.write("\n")
        counts = run_build_index(fixtures / "corpus.csv", out / "index.json")
        for label in sorted(counts):
            click.echo(f"corpus {label}: {counts[label]}")
        run_score_corpus(fixtures / "trajectories.csv", out / "index.json",
                         cfg, out)
        if scenario == "icu":
            _demo_icu_compare(out)
    else:
        names, traj, series = demo.gen_ssp(seed)
        demo.write_trajectory_csv(fixtures / "trajectories.csv", names, traj)
        targets_path = fixtures / "targets"
        targets_path.mkdir(exist_ok=True)
        for name, pts in series.items():
            demo.write_series_csv(targets_path / f"{name}.csv", names, pts)
        run_score_series(fixtures / "trajectories.csv", targets_path, cfg, out)
    click.echo(f"demo {scenario} written to {out}")


def _demo_icu_compare(out: Path) -> None:
    """Split the summary by outcome label and compare the groups."""
    with open(out / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    groups: Dict[str, List[dict]] = {}
    for row in rows:
        groups.setdefault(row["label"], []).append(row)
    columns = list(rows[0].keys())
    for label in sorted(groups):
        with open(out / f"summary_{label}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in groups[label]:
                w.writerow([row[c] for c in columns])
        click.echo(f"cohort {label}: {len(groups[label])}")
    if len(groups) == 2:
        (la, ra), (lb, rb) = sorted(groups.items())
        cmp = analytics.welch_t_test([float(r["average"]) for r in ra],
                                     [float(r["average"]) for r in rb])
        with open(out / "comparison.json", "w") as fh:
            json.dump({"group_a": la, "group_b": lb,
                       "mean_a": cmp.mean_a, "sd_a": cmp.sd_a, "n_a": cmp.n_a,
                       "mean_b": cmp.mean_b, "sd_b": cmp.sd_b, "n_b": cmp.n_b,
                       "t": cmp.t_stat, "dof": cmp.dof, "p": cmp.p_value},
                      fh, sort_keys=True)
            fh.write("\n")


if __name__ == "__main__":
    main()
