"""Structured result files and the plan / results tables (Markdown, CSV, HTML)."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field, replace
from html import escape
from pathlib import Path

import numpy as np

from . import metrics as M
from . import svg
from .errors import EmptyReport, MissingResults, SnapshotIOError
from .learners import TrainingTrace
from .selection import RowStatus, SelectionResult, highlight_for, select_best, SelectionCandidate

FORMATS = ("markdown", "csv", "html")

METRIC_LABELS = {
    "mae": "MAE",
    "mse": "MSE",
    "rmse": "RMSE",
    "r2": "R²",
    "accuracy": "Accuracy",
    "f1": "F1",
    "confusion_matrix": "Confusion matrix",
}
_PREPROC_LABELS = {"linear_detrend": "Baseline removed"}
_NORMAL_LABELS = {"max_normalize": "max = 1", "min_max": "min-max", "z_score": "z-score"}

FOLD_COLUMNS = ["exp_id", "fold_index", "partition", "metric", "value"]
PREDICTION_COLUMNS = ["exp_id", "fold_index", "row_index", "y_true", "y_pred"]

HTML_STYLE = """<style>
table.results, table.plan { border-collapse: collapse; font-family: sans-serif; font-size: 13px; }
table.results th, table.results td, table.plan th, table.plan td { border: 1px solid #999; padding: 3px 8px; }
tr.status-red { background: #f4c7c3; }
tr.status-yellow { background: #fce8b2; }
tr.status-green { background: #b7e1cd; }
tr.degenerate td { color: #666; text-decoration: line-through; }
</style>"""


# ---------------------------------------------------------------------------
# rows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricCell:
    name: str
    train_mean: float | None
    train_std: float | None
    test_mean: float | None
    test_std: float | None


@dataclass(frozen=True)
class ReportRow:
    experiment_id: str
    model: str
    preproc: str
    normalization: str
    metrics: tuple = ()
    lor: float | None = None
    cos: float | None = None
    r2_test: float | None = None
    status: RowStatus = field(default_factory=lambda: RowStatus("not_applicable"))
    highlight: str = "none"


def preproc_label(steps) -> str:
    parts = [_PREPROC_LABELS[s.kind] + _scope_suffix(s) for s in steps if s.kind in _PREPROC_LABELS]
    return ", ".join(parts) if parts else "Raw"


def normalization_label(steps) -> str:
    parts = [_NORMAL_LABELS[s.kind] + _scope_suffix(s) for s in steps if s.kind in _NORMAL_LABELS]
    return ", ".join(parts) if parts else "None"


def _scope_suffix(step) -> str:
    # global scope is the plain snapshot-level workflow; per-fold fitting is called out
    return " (per fold)" if step.scope == "per_fold" else ""


def build_rows(results) -> tuple[list[ReportRow], SelectionResult]:
    """Report rows for ``results`` (ExperimentResult list) with selection highlights applied."""
    candidates = [
        SelectionCandidate(r.experiment_id, r.diagnostics, r.status, r.error_test_mean())
        for r in results
    ]
    selection = select_best(candidates)
    rows = []
    for r in results:
        cells = tuple(
            MetricCell(name, s.train_mean, s.train_std, s.test_mean, s.test_std)
            for name, s in r.summaries.items()
        )
        rows.append(ReportRow(
            experiment_id=r.experiment_id,
            model=r.spec.learner.label(),
            preproc=preproc_label(r.spec.preprocessing),
            normalization=normalization_label(r.spec.preprocessing),
            metrics=cells,
            lor=r.diagnostics.lor,
            cos=r.diagnostics.cos,
            r2_test=r.r2_test,
            status=r.status,
            highlight=highlight_for(r.experiment_id, selection),
        ))
    return rows, selection


# ---------------------------------------------------------------------------
# number formatting
# ---------------------------------------------------------------------------

def _undefined(x) -> bool:
    return x is None or (isinstance(x, float) and math.isnan(x))


def fmt_sig(x, digits: int = 3) -> str:
    """``digits`` significant digits, trailing zeros kept (3.4 -> '3.40')."""
    if _undefined(x):
        return "n/a"
    s = format(float(x), f"#.{digits}g")
    if "e" not in s and s.endswith("."):
        s = s[:-1]
    return s


def fmt_dec(x, decimals: int = 3) -> str:
    return "n/a" if _undefined(x) else f"{float(x):.{decimals}f}"


def fmt_pm(mean, std, glyph="±") -> str:
    if _undefined(mean):
        return "n/a"
    return f"{fmt_sig(mean)} {glyph} {fmt_sig(std)}"


def _full(x) -> str:
    """Full-precision field for machine-readable files (empty when undefined)."""
    return "" if _undefined(x) else repr(float(x))


def _parse_full(s: str):
    return None if s == "" else float(s)


# ---------------------------------------------------------------------------
# results table
# ---------------------------------------------------------------------------

def _metric_order(rows) -> list[str]:
    names = []
    for r in rows:
        for c in r.metrics:
            if c.name not in names:
                names.append(c.name)
    return sorted(names, key=M.METRIC_NAMES.index)


def _cell(row: ReportRow, name: str):
    for c in row.metrics:
        if c.name == name:
            return c
    return None


_DEGENERATE_TEXT = {
    "single_class_prediction": "degenerate (single-class prediction)",
    "constant_regression": "degenerate (constant prediction)",
}


def _status_text(status: RowStatus) -> str:
    text = "" if status.color == "not_applicable" else status.color
    if status.degenerate:
        text = (text + ", " if text else "") + _DEGENERATE_TEXT.get(status.degenerate_kind, "degenerate")
    return text or "n/a"


def _table_layout(rows, glyph):
    names = _metric_order(rows)
    show_r2 = any(not _undefined(r.r2_test) for r in rows)
    show_status = any(r.status.color != "not_applicable" or r.status.degenerate for r in rows)
    header = ["Exp. ID", "Model", "Preproc.", "Normal."]
    for n in names:
        label = METRIC_LABELS[n]
        header += [f"{label} {glyph} σ (train)", f"{label} {glyph} σ (test)"]
    if show_r2:
        header.append("R² (test)")
    header += ["LOR", "COS"]
    if show_status:
        header.append("Status")
    body = []
    for r in rows:
        cells = [r.experiment_id, r.model, r.preproc, r.normalization]
        for n in names:
            c = _cell(r, n)
            if c is None:
                cells += ["", ""]
            else:
                cells += [fmt_pm(c.train_mean, c.train_std, glyph), fmt_pm(c.test_mean, c.test_std, glyph)]
        if show_r2:
            cells.append(fmt_sig(r.r2_test))
        cells += [fmt_dec(r.lor), fmt_dec(r.cos)]
        if show_status:
            cells.append(_status_text(r.status))
        body.append(cells)
    return header, body


def _md_escape(s: str) -> str:
    return s.replace("|", "\\|")


def _md_emphasis(text: str, highlight: str) -> str:
    if not text:
        return text
    if highlight in ("best_cos", "both"):
        return f"***{text}***"
    if highlight == "best_lor":
        return f"**{text}**"
    return text


def _markdown_table(header, body, highlights=None) -> str:
    lines = ["| " + " | ".join(_md_escape(h) for h in header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    for i, cells in enumerate(body):
        hl = highlights[i] if highlights else "none"
        lines.append("| " + " | ".join(_md_emphasis(_md_escape(c), hl) for c in cells) + " |")
    return "\n".join(lines) + "\n"


def _csv_text(header, body) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(body)
    return buf.getvalue()


def _html_emphasis(text: str, highlight: str) -> str:
    text = escape(text)
    if not text:
        return text
    if highlight in ("best_cos", "both"):
        return f"<strong><em>{text}</em></strong>"
    if highlight == "best_lor":
        return f"<strong>{text}</strong>"
    return text


def _html_table(css_class, header, body, row_classes) -> str:
    lines = [f'<table class="{css_class}">', "<thead>",
             "<tr>" + "".join(f"<th>{escape(h)}</th>" for h in header) + "</tr>",
             "</thead>", "<tbody>"]
    for cells, (classes, hl) in zip(body, row_classes):
        attr = f' class="{classes}"' if classes else ""
        lines.append(f"<tr{attr}>" + "".join(f"<td>{_html_emphasis(c, hl)}</td>" for c in cells) + "</tr>")
    lines += ["</tbody>", "</table>"]
    return "\n".join(lines) + "\n"


def render_results_table(rows, fmt: str = "markdown") -> str:
    """Results table: best-LOR rows bold, best-COS rows bold italic, HTML rows coloured."""
    rows = list(rows)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "csv":
        names = _metric_order(rows)
        header = ["exp_id", "model", "preproc", "normalization"]
        for n in names:
            header += [f"{n}_train", f"{n}_test"]
        header += ["r2_test", "lor", "cos", "color", "degenerate", "highlight"]
        body = []
        for r in rows:
            cells = [r.experiment_id, r.model, r.preproc, r.normalization]
            for n in names:
                c = _cell(r, n)
                cells += ["", ""] if c is None else [
                    fmt_pm(c.train_mean, c.train_std, "+/-"), fmt_pm(c.test_mean, c.test_std, "+/-")
                ]
            cells += [fmt_sig(r.r2_test), fmt_dec(r.lor), fmt_dec(r.cos), r.status.color,
                      "true" if r.status.degenerate else "false", r.highlight]
            body.append(cells)
        return _csv_text(header, body)
    if not rows:
        raise EmptyReport("no result rows to render")
    header, body = _table_layout(rows, "±")
    if fmt == "markdown":
        return _markdown_table(header, body, [r.highlight for r in rows])
    row_classes = []
    for r in rows:
        classes = []
        if r.status.color != "not_applicable":
            classes.append(f"status-{r.status.color}")
        if r.status.degenerate:
            classes.append("degenerate")
        if r.highlight != "none":
            classes.append(f"highlight-{r.highlight.replace('_', '-')}")
        row_classes.append((" ".join(classes), r.highlight))
    return _html_table("results", header, body, row_classes)


# ---------------------------------------------------------------------------
# plan table
# ---------------------------------------------------------------------------

PLAN_HEADER = ["Exp. ID", "Task", "Preproc.", "Normal.", "Instance", "Metrics", "Dataset", "Notes"]


def plan_cells(spec) -> list[str]:
    return [
        spec.experiment_id,
        spec.task.capitalize(),
        preproc_label(spec.preprocessing),
        normalization_label(spec.preprocessing),
        spec.learner.label(),
        ", ".join(METRIC_LABELS.get(m, m) for m in spec.metric_names),
        spec.dataset_ref,
        spec.notes or "",
    ]


def render_plan_table(specs, fmt: str = "markdown") -> str:
    specs = list(specs)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if not specs:
        raise EmptyReport("no experiments to render")
    body = [plan_cells(s) for s in specs]
    if fmt == "markdown":
        return _markdown_table(PLAN_HEADER, body)
    if fmt == "csv":
        return _csv_text(PLAN_HEADER, body)
    return _html_table("plan", PLAN_HEADER, body, [("", "none")] * len(body))


# ---------------------------------------------------------------------------
# persisted results
# ---------------------------------------------------------------------------

def summary_header(metric_names) -> list[str]:
    header = ["exp_id", "model", "preproc", "normalization"]
    for m in metric_names:
        header += [f"{m}_train_mean", f"{m}_train_std", f"{m}_test_mean", f"{m}_test_std"]
    return header + ["lor", "cos", "r2_test_mean", "color", "degenerate", "highlight"]


def summary_csv_text(rows) -> str:
    names = _metric_order(rows)
    body = []
    for r in rows:
        cells = [r.experiment_id, r.model, r.preproc, r.normalization]
        for n in names:
            c = _cell(r, n)
            cells += ["", "", "", ""] if c is None else [
                _full(c.train_mean), _full(c.train_std), _full(c.test_mean), _full(c.test_std)
            ]
        cells += [_full(r.lor), _full(r.cos), _full(r.r2_test), r.status.color,
                  "true" if r.status.degenerate else "false", r.highlight]
        body.append(cells)
    return _csv_text(summary_header(names), body)


def fold_csv_text(results) -> str:
    body = []
    for res in results:
        names = [m for m in res.spec.metric_names if m != "confusion_matrix"]
        for rec in res.records:
            for part, values in (("train", rec.train_metrics), ("test", rec.test_metrics)):
                for m in names:
                    body.append([res.experiment_id, rec.fold_index, part, m, _full(values[m])])
    return _csv_text(FOLD_COLUMNS, body)


def _label_text(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def predictions_csv_text(results) -> str:
    body = []
    for res in results:
        for rec in res.records:
            for i, t, p in zip(rec.test_indices, rec.test_true, rec.test_pred):
                body.append([res.experiment_id, rec.fold_index, int(i), _label_text(t), _label_text(p)])
    return _csv_text(PREDICTION_COLUMNS, body)


def traces_dict(results) -> dict:
    out = {}
    for res in results:
        folds = {str(r.fold_index): r.training_trace.to_dict() for r in res.records if r.training_trace}
        if folds:
            out[res.experiment_id] = folds
    return out


def persist_results(results, out_dir, metadata: dict) -> dict:
    """Write fold CSV, summary CSV, run metadata JSON, test predictions and training traces."""
    out_dir = Path(out_dir)
    rows, _ = build_rows(results)
    files = {
        "folds": (out_dir / "folds.csv", fold_csv_text(results)),
        "summary": (out_dir / "summary.csv", summary_csv_text(rows)),
        "predictions": (out_dir / "predictions.csv", predictions_csv_text(results)),
        "traces": (out_dir / "traces.json", json.dumps(traces_dict(results), indent=2) + "\n"),
        "metadata": (out_dir / "run_metadata.json", json.dumps(metadata, indent=2) + "\n"),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for path, text in files.values():
            path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise SnapshotIOError(f"cannot write results to {out_dir}: {exc}") from exc
    return {k: p for k, (p, _) in files.items()}


def read_summary_csv(path) -> list[ReportRow]:
    """Rebuild report rows from ``summary.csv`` at full stored precision."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        names = [h[: -len("_train_mean")] for h in header if h.endswith("_train_mean")]
        rows = []
        for rec in reader:
            cells = tuple(
                MetricCell(n, _parse_full(rec[f"{n}_train_mean"]), _parse_full(rec[f"{n}_train_std"]),
                           _parse_full(rec[f"{n}_test_mean"]), _parse_full(rec[f"{n}_test_std"]))
                for n in names
                if rec[f"{n}_train_mean"] != ""
            )
            degenerate = rec["degenerate"] == "true"
            rows.append(ReportRow(
                experiment_id=rec["exp_id"],
                model=rec["model"],
                preproc=rec["preproc"],
                normalization=rec["normalization"],
                metrics=cells,
                lor=_parse_full(rec["lor"]),
                cos=_parse_full(rec["cos"]),
                r2_test=_parse_full(rec["r2_test_mean"]),
                status=RowStatus(rec["color"], degenerate, None, degenerate),
                highlight=rec["highlight"],
            ))
    return rows


def with_degenerate_kind(row: ReportRow, task: str | None) -> ReportRow:
    """The summary CSV stores only a degenerate flag; the kind follows from the task."""
    if not row.status.degenerate or task is None:
        return row
    kind = "single_class_prediction" if task == "classification" else "constant_regression"
    return replace(row, status=replace(row.status, degenerate_kind=kind))


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlotData:
    experiment_id: str
    task: str
    model_type: str
    test_true: np.ndarray
    test_pred: np.ndarray
    traces: tuple = ()  # (fold_index, TrainingTrace) pairs
    n_classes: int | None = None
    class_labels: tuple | None = None


def plot_data_from_results(results, class_labels=None) -> list[PlotData]:
    out = []
    for res in results:
        y_true = np.concatenate([r.test_true for r in res.records])
        y_pred = np.concatenate([r.test_pred for r in res.records])
        n_classes = None
        if res.spec.task == "classification" and res.records[0].test_confusion is not None:
            n_classes = res.records[0].test_confusion.shape[0]
        out.append(PlotData(
            res.experiment_id, res.spec.task, res.spec.learner.model_type, y_true, y_pred,
            tuple((r.fold_index, r.training_trace) for r in res.records if r.training_trace),
            n_classes, class_labels,
        ))
    return out


def safe_name(experiment_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", experiment_id) or "experiment"


def summed_confusion(p: PlotData) -> np.ndarray:
    k = p.n_classes or int(max(p.test_true.max(), p.test_pred.max())) + 1
    return M.confusion_matrix(p.test_true, p.test_pred, k)


def emit_plots(plot_data, out_dir) -> list[Path]:
    """Scatter (regression), confusion table (classification) and loss curves (traced models)."""
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for p in plot_data:
            stem = safe_name(p.experiment_id)
            if p.task == "regression":
                path = out_dir / f"{stem}_pred_vs_true.svg"
                path.write_text(
                    svg.scatter_vs_true(p.test_true, p.test_pred, f"{p.experiment_id}: predicted vs true (test)"),
                    encoding="utf-8",
                )
            else:
                path = out_dir / f"{stem}_confusion.svg"
                path.write_text(
                    svg.confusion_table(summed_confusion(p), p.class_labels,
                                        f"{p.experiment_id}: confusion matrix (test, all folds)"),
                    encoding="utf-8",
                )
            written.append(path)
            for fold_index, trace in p.traces:
                path = out_dir / f"{stem}_loss_fold{fold_index}.svg"
                path.write_text(
                    svg.loss_curves(trace.train_loss, trace.val_loss,
                                    f"{p.experiment_id} fold {fold_index}: loss vs epoch "
                                    f"({trace.stop_reason})"),
                    encoding="utf-8",
                )
                written.append(path)
    except OSError as exc:
        raise SnapshotIOError(f"cannot write plots to {out_dir}: {exc}") from exc
    return written


def read_plot_data(results_dir, specs) -> list[PlotData]:
    """Rebuild plot inputs from ``predictions.csv`` and ``traces.json``."""
    results_dir = Path(results_dir)
    preds: dict[str, list] = {}
    with (results_dir / "predictions.csv").open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            preds.setdefault(rec["exp_id"], []).append(rec)
    traces_path = results_dir / "traces.json"
    traces = json.loads(traces_path.read_text(encoding="utf-8")) if traces_path.exists() else {}
    out = []
    for spec in specs:
        recs = preds.get(spec.experiment_id)
        if not recs:
            continue
        cast = int if spec.task == "classification" else float
        y_true = np.array([cast(float(r["y_true"])) for r in recs])
        y_pred = np.array([cast(float(r["y_pred"])) for r in recs])
        tr = tuple(
            (int(k), TrainingTrace.from_dict(v))
            for k, v in sorted(traces.get(spec.experiment_id, {}).items(), key=lambda kv: int(kv[0]))
        )
        out.append(PlotData(spec.experiment_id, spec.task, spec.learner.model_type, y_true, y_pred, tr))
    return out


# ---------------------------------------------------------------------------
# full report document
# ---------------------------------------------------------------------------

def confusion_markdown(cm, labels=None) -> str:
    k = cm.shape[0]
    labels = [str(i) for i in range(k)] if labels is None else [str(l) for l in labels]
    header = ["true \\ predicted"] + labels
    body = [[labels[i]] + [str(int(v)) for v in cm[i]] for i in range(k)]
    return _markdown_table(header, body)


@dataclass
class ReportDocument:
    plan_specs: list
    rows: list
    settings: dict                      # run metadata without timestamps
    failures: list = field(default_factory=list)   # (experiment_id, message)
    notes: list = field(default_factory=list)
    appendix: list = field(default_factory=list)   # (title, markdown/text, link or None)

    def check_consistency(self):
        planned = {s.experiment_id for s in self.plan_specs}
        reported = [r.experiment_id for r in self.rows] + [f for f, _ in self.failures]
        if sorted(reported) != sorted(planned):
            raise ValueError("every planned experiment must appear once in results or failures")

    def _settings_lines(self):
        keys = ["root_seed", "log_base", "alpha", "beta", "epsilon_ideal", "std_convention",
                "degenerate_tolerance", "tool_version", "kernel_backend"]
        lines = [f"- {k}: {self.settings[k]}" for k in keys if k in self.settings]
        for exp_id, sid in sorted(self.settings.get("snapshot_ids", {}).items()):
            lines.append(f"- snapshot {exp_id}: {sid}")
        return lines

    def to_markdown(self) -> str:
        self.check_consistency()
        out = ["# Experiment report", "", "## Settings", "", *self._settings_lines(), "",
               "## Plan", "", render_plan_table(self.plan_specs, "markdown"), "## Results", ""]
        if self.rows:
            out.append(render_results_table(self.rows, "markdown"))
        else:
            out.append("No experiment completed.\n")
        out += [
            "Bold: LOR closest to 0. Bold italic: COS closest to 1. Colour bands use test R²: "
            "red < 0, yellow 0 to 0.85, green > 0.85. Degenerate (non-learning) rows are kept "
            "but excluded from selection.",
            "",
        ]
        if self.notes:
            out += ["## Notes", ""] + [f"- {n}" for n in self.notes] + [""]
        if self.failures:
            out += ["## Failed experiments", ""] + [f"- {e}: {m}" for e, m in self.failures] + [""]
        if self.appendix:
            out += ["## Appendix", ""]
            for title, text, link in self.appendix:
                out.append(f"### {title}")
                out.append("")
                if text:
                    out.append(text)
                if link:
                    out.append(f"[{link}]({link})")
                    out.append("")
        return "\n".join(out).rstrip("\n") + "\n"

    def to_html(self) -> str:
        self.check_consistency()
        parts = ["<!DOCTYPE html>", "<html>", "<head>", '<meta charset="utf-8">',
                 "<title>Experiment report</title>", HTML_STYLE, "</head>", "<body>",
                 "<h1>Experiment report</h1>", "<h2>Settings</h2>", "<ul>"]
        parts += [f"<li>{escape(line[2:])}</li>" for line in self._settings_lines()]
        parts += ["</ul>", "<h2>Plan</h2>", render_plan_table(self.plan_specs, "html").rstrip("\n"),
                  "<h2>Results</h2>"]
        parts.append(render_results_table(self.rows, "html").rstrip("\n") if self.rows
                     else "<p>No experiment completed.</p>")
        if self.notes:
            parts += ["<h2>Notes</h2>", "<ul>"] + [f"<li>{escape(n)}</li>" for n in self.notes] + ["</ul>"]
        if self.failures:
            parts += ["<h2>Failed experiments</h2>", "<ul>"]
            parts += [f"<li>{escape(e)}: {escape(m)}</li>" for e, m in self.failures] + ["</ul>"]
        parts += ["</body>", "</html>"]
        return "\n".join(parts) + "\n"
