"""Batch analysis of session logs: completion times, scores, normality, t tests.

Reads envelope logs (one canonical JSON envelope per line), extracts the
``start`` -> ``task_complete`` interval per session, scores the pool with the
min-max performance formula, gates each condition with the Anderson-Darling
normality test, and runs a t test across the two conditions when sessions
pair up.  Extra per-session metrics (questionnaire scores and the like) can
be supplied as a CSV of ``session_id,condition,metric,value`` rows and get
the same treatment.

The whole pipeline is a pure function of its input bytes: identical logs
yield byte-identical reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .bus import DecodeError, decode_envelope
from .stats import (
    DegenerateVariance,
    ScoreReport,
    StatsError,
    TestResult,
    TooFewSamples,
    ZeroVariance,
    ad_normality,
    paired_t,
    performance_scores,
    welch_t,
)

__all__ = [
    "AnalysisError",
    "MissingEvent",
    "Report",
    "SessionRecord",
    "analyze_logs",
    "read_metrics_csv",
    "read_session_record",
    "write_report",
]

MIN_AD_SAMPLES = 8


class AnalysisError(Exception):
    pass


class MissingEvent(AnalysisError):
    """A log lacks the start or task_complete marker."""


@dataclass(frozen=True)
class SessionRecord:
    session_id: str
    condition: str
    completion_s: float
    pair: str


def read_session_record(path: str | Path) -> SessionRecord:
    """Extract the session identity and completion interval from one log."""
    session_id = None
    condition = "assistant"
    pair = None
    start_ms = None
    complete_ms = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                envelope = decode_envelope(line)
            except DecodeError as exc:
                raise AnalysisError(f"{path}:{line_no}: {exc}") from exc
            if envelope.topic != "session/event":
                continue
            payload = envelope.payload if isinstance(envelope.payload, dict) else {}
            event = payload.get("event")
            if event == "start":
                start_ms = envelope.ts_ms
                session_id = payload.get("session_id", Path(path).stem)
                condition = payload.get("condition", condition)
                pair = payload.get("pair")
            elif event == "task_complete" and complete_ms is None:
                complete_ms = envelope.ts_ms
    if start_ms is None:
        raise MissingEvent(f"{path}: no session start event")
    if complete_ms is None:
        raise MissingEvent(
            f"{path}: session {session_id!r} has no task_complete event"
        )
    completion_s = (complete_ms - start_ms) / 1000.0
    if completion_s <= 0:
        raise AnalysisError(
            f"{path}: non-positive completion time {completion_s}s"
        )
    return SessionRecord(
        session_id=str(session_id),
        condition=str(condition),
        completion_s=completion_s,
        pair=str(pair) if pair is not None else str(session_id),
    )


def read_metrics_csv(path: str | Path) -> list[tuple[str, str, str, float]]:
    """Rows of (session_id, condition, metric, value); header optional."""
    rows: list[tuple[str, str, str, float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise AnalysisError(f"{path}: row {i + 1} needs 4 columns, got {len(row)}")
            if i == 0 and row[3].strip().lower() == "value":
                continue  # header
            try:
                value = float(row[3])
            except ValueError as exc:
                raise AnalysisError(f"{path}: row {i + 1}: bad value {row[3]!r}") from exc
            rows.append((row[0].strip(), row[1].strip(), row[2].strip(), value))
    return rows


@dataclass
class MetricAnalysis:
    metric: str
    per_condition: dict[str, list[tuple[str, float]]]  # condition -> (session, value)
    normality: dict[str, TestResult | str] = field(default_factory=dict)
    t_test: TestResult | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class Report:
    records: list[SessionRecord]
    scores: ScoreReport | None
    metrics: list[MetricAnalysis]
    warnings: list[str]

    def to_payload(self) -> dict:
        """Structured mirror of every number in the text report."""
        payload: dict = {
            "sessions": [
                {
                    "session_id": r.session_id,
                    "condition": r.condition,
                    "completion_s": r.completion_s,
                    "pair": r.pair,
                }
                for r in self.records
            ],
            "warnings": list(self.warnings),
            "metrics": [],
        }
        if self.scores is not None:
            payload["scores"] = {
                "t_min": self.scores.t_min,
                "t_max": self.scores.t_max,
                "values": [
                    {"session_id": sid, "score": score}
                    for sid, score in self.scores.scores
                ],
            }
        for metric in self.metrics:
            entry: dict = {"metric": metric.metric, "conditions": {}, "warnings": metric.warnings}
            for condition, values in sorted(metric.per_condition.items()):
                result = metric.normality.get(condition)
                entry["conditions"][condition] = {
                    "n": len(values),
                    "values": [
                        {"session_id": sid, "value": value} for sid, value in values
                    ],
                    "normality": (
                        {
                            "statistic": result.statistic,
                            "threshold": result.threshold_or_p,
                            "reject": result.reject,
                        }
                        if isinstance(result, TestResult)
                        else result
                    ),
                }
            if metric.t_test is not None:
                entry["t_test"] = {
                    "kind": metric.t_test.kind,
                    "statistic": metric.t_test.statistic,
                    "df": metric.t_test.df,
                    "p": metric.t_test.threshold_or_p,
                    "reject_at_5pct": metric.t_test.reject,
                }
            payload["metrics"].append(entry)
        return payload

    def to_text(self) -> str:
        lines: list[str] = ["session analysis", "================"]
        for r in self.records:
            lines.append(
                f"  {r.session_id}  condition={r.condition}  "
                f"completion={r.completion_s:.3f}s  pair={r.pair}"
            )
        if self.scores is not None:
            lines.append("")
            lines.append(
                f"performance scores (t_min={self.scores.t_min:.3f}s, "
                f"t_max={self.scores.t_max:.3f}s)"
            )
            for sid, score in self.scores.scores:
                lines.append(f"  {sid}: {score:.4f}")
        for metric in self.metrics:
            lines.append("")
            lines.append(f"metric: {metric.metric}")
            for condition, values in sorted(metric.per_condition.items()):
                result = metric.normality.get(condition)
                if isinstance(result, TestResult):
                    verdict = "reject" if result.reject else "pass"
                    normality = (
                        f"AD*^2={result.statistic:.4f} vs {result.threshold_or_p} -> "
                        f"{verdict} normality"
                    )
                else:
                    normality = str(result)
                lines.append(f"  {condition}: n={len(values)}  {normality}")
            if metric.t_test is not None:
                t = metric.t_test
                lines.append(
                    f"  {t.kind}: t={t.statistic:.4f} df={t.df:g} "
                    f"p={t.threshold_or_p:.3g} "
                    f"({'significant' if t.reject else 'not significant'} at 5%)"
                )
            for warning in metric.warnings:
                lines.append(f"  warning: {warning}")
        for warning in self.warnings:
            lines.append("")
            lines.append(f"warning: {warning}")
        lines.append("")
        return "\n".join(lines)


def _analyze_metric(
    name: str,
    rows: Iterable[tuple[str, str, float]],  # (session_id, condition, value)
    pair_of: dict[str, str],
    use_welch: bool,
) -> MetricAnalysis:
    per_condition: dict[str, list[tuple[str, float]]] = {}
    for session_id, condition, value in rows:
        per_condition.setdefault(condition, []).append((session_id, value))
    for values in per_condition.values():
        values.sort(key=lambda pair: pair[0])
    analysis = MetricAnalysis(metric=name, per_condition=per_condition)

    for condition, values in sorted(per_condition.items()):
        sample = [v for _, v in values]
        if len(sample) < MIN_AD_SAMPLES:
            analysis.normality[condition] = (
                f"normality skipped (n={len(sample)} < {MIN_AD_SAMPLES})"
            )
            continue
        try:
            analysis.normality[condition] = ad_normality(sample)
        except (ZeroVariance, StatsError) as exc:
            analysis.normality[condition] = f"normality failed: {exc}"

    conditions = sorted(per_condition)
    if len(conditions) != 2:
        analysis.warnings.append(
            f"t test skipped: need exactly 2 conditions, have {len(conditions)}"
        )
        return analysis

    lhs, rhs = conditions
    if use_welch:
        try:
            analysis.t_test = welch_t(
                [v for _, v in per_condition[lhs]],
                [v for _, v in per_condition[rhs]],
            )
        except (StatsError, DegenerateVariance) as exc:
            analysis.warnings.append(f"welch t failed: {exc}")
        return analysis

    by_pair: dict[str, dict[str, float]] = {}
    for condition in conditions:
        for session_id, value in per_condition[condition]:
            pair = pair_of.get(session_id, session_id)
            by_pair.setdefault(pair, {})[condition] = value
    paired = [
        (entry[lhs], entry[rhs])
        for _, entry in sorted(by_pair.items())
        if lhs in entry and rhs in entry
    ]
    unpaired = sum(1 for entry in by_pair.values() if len(entry) < 2)
    if len(paired) < 2:
        analysis.warnings.append(
            "t test skipped: sessions do not pair across conditions "
            f"({len(paired)} complete pairs)"
        )
        return analysis
    if unpaired:
        analysis.warnings.append(
            f"{unpaired} session(s) had no partner and were left out of the t test"
        )
    try:
        analysis.t_test = paired_t(
            [a for a, _ in paired], [b for _, b in paired]
        )
    except (DegenerateVariance, TooFewSamples) as exc:
        analysis.warnings.append(f"paired t failed: {exc}")
    return analysis


def analyze_logs(
    log_paths: Sequence[str | Path],
    metrics_csv: str | Path | None = None,
    use_welch: bool = False,
) -> Report:
    """Full analysis over a set of session logs plus optional metric CSV."""
    if not log_paths:
        raise AnalysisError("no log files given")
    records = sorted(
        (read_session_record(p) for p in log_paths),
        key=lambda r: r.session_id,
    )
    seen: dict[str, SessionRecord] = {}
    for record in records:
        if record.session_id in seen:
            raise AnalysisError(f"duplicate session id {record.session_id!r}")
        seen[record.session_id] = record

    warnings: list[str] = []
    scores: ScoreReport | None = None
    if len(records) >= 2:
        try:
            scores = performance_scores(
                [r.completion_s for r in records],
                [r.session_id for r in records],
            )
        except StatsError as exc:
            warnings.append(f"scores unavailable: {exc}")
    else:
        warnings.append("scores unavailable: need at least 2 sessions")

    pair_of = {r.session_id: r.pair for r in records}
    metrics = [
        _analyze_metric(
            "completion_s",
            [(r.session_id, r.condition, r.completion_s) for r in records],
            pair_of,
            use_welch,
        )
    ]

    if metrics_csv is not None:
        csv_rows = read_metrics_csv(metrics_csv)
        by_metric: dict[str, list[tuple[str, str, float]]] = {}
        for session_id, condition, metric, value in csv_rows:
            known = seen.get(session_id)
            effective_condition = known.condition if known else condition
            by_metric.setdefault(metric, []).append(
                (session_id, effective_condition, value)
            )
        for metric_name in sorted(by_metric):
            metrics.append(
                _analyze_metric(metric_name, by_metric[metric_name], pair_of, use_welch)
            )

    return Report(records=records, scores=scores, metrics=metrics, warnings=warnings)


def write_report(report: Report, json_path: str | Path) -> None:
    """Persist the structured mirror next to whatever printed the text."""
    Path(json_path).parent.mkdir(parents=True, exist_ok=True)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_payload(), fh, indent=2, sort_keys=True)
        fh.write("\n")
