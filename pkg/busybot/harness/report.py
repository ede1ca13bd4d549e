"""Metric cells, their recomputation from raw files, and the report writers."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
import plotly.graph_objects as go
from django.db import transaction

from busybot.exceptions import ContractError
from busybot.harness.splits import SPLIT_NAMES, SPLIT_TITLES
from busybot.models import ExperimentRun, MetricCell

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["section", "split", "variant", "metric", "value"]
SECTIONS = ("interaction", "reasoning", "planning")
REPORT_FORMATS = ("csv", "text", "svg")

INTERACTION_EVAL_COLUMNS = ["board_seed", "actions", "effective", "actuated", "interactable"]
REASON_EVAL_COLUMNS = ["board_seed", "edge_predicted", "edge_truth", "edge_correct",
                       "pred_correct", "pred_total", "rollout_correct", "rollout_total"]
PLANNING_COLUMNS = ["split", "kind", "agent", "task_id", "board_seed", "steps", "terminated_by",
                    "success"]

SECTION_TITLES = {
    "interaction": "Interaction (precision / recall, %)",
    "reasoning": "Reasoning (Edge-P / Edge-R / Pred-A, %)",
    "planning": "Planning (success rate, %)",
}
METRIC_LABELS = {
    "precision": "Precision",
    "recall": "Recall",
    "edge_p": "Edge-P",
    "edge_r": "Edge-R",
    "pred_a": "Pred-A",
    "pred_a_rollout": "Pred-A (rollout)",
}


@dataclass
class MetricsReport:
    frame: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=METRIC_COLUMNS))
    failures: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    @property
    def complete(self):
        return not self.failures

    def value(self, section, split, variant, metric):
        cells = self.frame
        match = cells[(cells.section == section) & (cells.split == split)
                      & (cells.variant == variant) & (cells.metric == metric)]
        if match.empty:
            raise KeyError((section, split, variant, metric))
        return float(match.value.iloc[0])


def _ratio(numerator, denominator, empty):
    return float(numerator) / float(denominator) if denominator else empty


def interaction_metrics(frame):
    """Micro-averaged precision and recall from per-board evaluation rows."""
    return {
        "precision": _ratio(frame.effective.sum(), frame.actions.sum(), 0.0),
        "recall": _ratio(frame.actuated.sum(), frame.interactable.sum(), 0.0),
    }


def reasoning_metrics(frame):
    metrics = {}
    if frame.edge_predicted.ge(0).all():
        metrics["edge_p"] = _ratio(frame.edge_correct.sum(), frame.edge_predicted.sum(), 1.0)
        metrics["edge_r"] = _ratio(frame.edge_correct.sum(), frame.edge_truth.sum(), 1.0)
    metrics["pred_a"] = _ratio(frame.pred_correct.sum(), frame.pred_total.sum(), 0.0)
    metrics["pred_a_rollout"] = _ratio(frame.rollout_correct.sum(), frame.rollout_total.sum(), 0.0)
    return metrics


def planning_metrics(frame):
    """Mean object-level success per (split, kind, agent)."""
    grouped = frame.groupby(["split", "kind", "agent"], sort=False)["success"].mean()
    return {key: float(value) for key, value in grouped.items()}


def _cells(section, split, variant, metrics):
    return [[section, split, variant, metric, value] for metric, value in metrics.items()]


def metrics_from_raw(layout, variant="full"):
    """Rebuild every metric cell from the raw evaluation files of a run."""
    rows = []
    for split in SPLIT_NAMES:
        path = layout.interaction_eval(split)
        if path.exists():
            rows += _cells("interaction", split, variant, interaction_metrics(pd.read_csv(path)))
    for split in SPLIT_NAMES:
        path = layout.reason_eval(split)
        if path.exists():
            rows += _cells("reasoning", split, variant, reasoning_metrics(pd.read_csv(path)))
    if layout.planning_results.exists():
        success = planning_metrics(pd.read_csv(layout.planning_results))
        for split in SPLIT_NAMES:
            for (s, kind, agent), value in success.items():
                if s == split:
                    rows.append(["planning", split, agent, kind, value])
    report = MetricsReport(pd.DataFrame(rows, columns=METRIC_COLUMNS))
    if layout.runtime.exists():
        with open(layout.runtime) as handle:
            runtime = json.load(handle)
        report.failures = runtime.get("failures", {})
        report.runtime = runtime.get("seconds", {})
    if layout.interaction_log.exists():
        report.curves["interaction"] = pd.read_csv(layout.interaction_log)
    if layout.reason_curve.exists():
        report.curves["reasoning"] = pd.read_csv(layout.reason_curve)
    return report


def text_table(frame, section):
    """One section laid out with a column per split, values in percent."""
    cells = frame[frame.section == section]
    if cells.empty:
        return None
    table = cells.pivot_table(index=["variant", "metric"], columns="split", values="value",
                              aggfunc="first", sort=False)
    table = table.reindex(columns=list(SPLIT_NAMES)).rename(columns=SPLIT_TITLES)
    table.columns.name = None
    table = table.rename(index=METRIC_LABELS, level="metric") * 100.0
    return table


def render_text(report):
    parts = []
    for section in SECTIONS:
        table = text_table(report.frame, section)
        if table is None:
            continue
        parts.append(SECTION_TITLES[section])
        parts.append(table.to_string(float_format="{:.1f}".format, na_rep="-"))
        parts.append("")
    if report.failures:
        parts.append("FAILED STAGES")
        parts += [f"  {stage}: {message}" for stage, message in sorted(report.failures.items())]
        parts.append("")
    return "\n".join(parts)


def _curve_figure(curve, columns, title):
    fig = go.Figure()
    for column in columns:
        if column in curve:
            fig.add_trace(go.Scatter(x=curve["epoch"], y=curve[column], mode="lines", name=column))
    fig.update_layout(title=title, xaxis_title="epoch", template="plotly_white")
    return fig


def _success_figure(frame, kind):
    cells = frame[(frame.section == "planning") & (frame.metric == kind)]
    fig = go.Figure()
    for split in SPLIT_NAMES:
        subset = cells[cells.split == split]
        if not subset.empty:
            fig.add_trace(go.Bar(x=subset.variant, y=subset.value, name=SPLIT_TITLES[split]))
    fig.update_layout(title=f"Planning success ({kind})", barmode="group",
                      yaxis=dict(range=[0, 1]), template="plotly_white")
    return fig


def figures(report):
    figs = {}
    if "interaction" in report.curves:
        figs["interaction_curve"] = _curve_figure(
            report.curves["interaction"], ["rolling_precision", "position_loss", "direction_loss"],
            "Interaction training",
        )
    if "reasoning" in report.curves:
        figs["reasoning_curve"] = _curve_figure(report.curves["reasoning"], ["loss"],
                                                "Reasoning training loss")
    kinds = report.frame[report.frame.section == "planning"].metric.unique()
    for kind in kinds:
        figs[f"planning_success_{kind}"] = _success_figure(report.frame, kind)
    return figs


def write_report(report, directory, formats=REPORT_FORMATS):
    """Write the requested report formats; returns the written paths."""
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ContractError(f"unknown report formats {sorted(unknown)}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = directory / "metrics.csv"
        report.frame.to_csv(path, index=False)
        written.append(path)
    if "text" in formats:
        path = directory / "tables.txt"
        path.write_text(render_text(report))
        written.append(path)
    if "svg" in formats:
        for name, fig in figures(report).items():
            path = directory / f"{name}.svg"
            fig.write_image(str(path), format="svg")
            written.append(path)
    logger.info("report: wrote %d files to %s", len(written), directory)
    return written


def store_report(frame, seed, preset, output_dir, status="complete"):
    """Mirror metric cells into the database, replacing the cells of that run."""
    with transaction.atomic():
        run, _ = ExperimentRun.objects.update_or_create(
            output_dir=str(output_dir), defaults={"seed": seed, "preset": preset, "status": status}
        )
        deleted = run.cells.all().delete()[0]
        cells = [
            MetricCell(run=run, section=row.section, split=row.split, variant=row.variant,
                       metric=row.metric, value=None if pd.isna(row.value) else float(row.value),
                       position=k)
            for k, row in enumerate(frame.itertuples(index=False))
        ]
        MetricCell.objects.bulk_create(cells, batch_size=1000)
    logger.info("run %d: replaced %d cells with %d", run.pk, deleted, len(cells))
    return run


def report_from_db(run):
    rows = run.cells.order_by("position").values_list(*METRIC_COLUMNS)
    return MetricsReport(pd.DataFrame(list(rows), columns=METRIC_COLUMNS))
