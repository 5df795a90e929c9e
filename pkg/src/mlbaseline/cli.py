"""Command-line pipeline: validate a plan, snapshot data, run experiments, render reports.

Exit codes: 0 success, 1 validation or run failure, 2 input/output failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import kernels
from . import metrics as M
from . import reporting as R
from .dataset import TRANSFORM_KINDS, apply_transform, fit_transform, load_csv, load_snapshot, save_snapshot
from .errors import BaselineError, MissingResults, SnapshotIOError
from .plan import load_plan, parse_plan
from .validation import run_experiment, summarize_experiment

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


def _err(msg: str):
    print(msg, file=sys.stderr)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _read_plan(path, seed=None):
    """(plan, problems) or raises OSError for an unreadable file."""
    try:
        return load_plan(path, seed)
    except json.JSONDecodeError as exc:
        return None, [f"<plan>: not valid JSON: {exc}"]


# ---------------------------------------------------------------------------
# plan validate
# ---------------------------------------------------------------------------

def cmd_plan_validate(args) -> int:
    try:
        plan, problems = _read_plan(args.plan)
    except OSError as exc:
        _err(f"cannot read plan {args.plan}: {exc}")
        return EXIT_IO
    if problems:
        for p in problems:
            print(p)
        print(f"{len(problems)} problem(s) found")
        return EXIT_FAIL
    print(f"{len(plan.experiments)} experiments, OK")
    return EXIT_OK


# ---------------------------------------------------------------------------
# data snapshot
# ---------------------------------------------------------------------------

def cmd_data_snapshot(args) -> int:
    scope = args.scope.replace("-", "_")
    if scope == "per_fold" and args.transform:
        _err("per-fold transforms are fitted inside cross-validation; "
             "list them in the plan's preprocessing instead")
        return EXIT_FAIL
    try:
        snap = load_csv(args.input, args.target, args.task)
        save_snapshot(snap, args.out)
        for kind in args.transform or []:
            snap = apply_transform(snap, fit_transform(snap, kind, scope="global"))
            manifest = save_snapshot(snap, args.out)
    except (SnapshotIOError, FileNotFoundError, PermissionError) as exc:
        _err(str(exc))
        return EXIT_IO
    except BaselineError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    if args.transform:
        _err(f"manifest: {manifest}")
    print(snap.snapshot_id)
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _execute(spec, manifest, settings):
    """Run one experiment; returns (result, snapshot_id, class_labels) or (None, None, message)."""
    try:
        snap = load_snapshot(manifest)
        records = run_experiment(spec, snap, degenerate_tolerance=settings.degenerate_tolerance)
        result = summarize_experiment(spec, records, settings)
    except (BaselineError, OSError) as exc:
        return None, None, f"{type(exc).__name__}: {exc}"
    return result, snap.snapshot_id, snap.class_labels


def _status_line(res) -> str:
    parts = [f"{len(res.records)} folds"]
    err = res.diagnostics.metric_name
    if err:
        s = res.summaries[err]
        parts.append(f"{err} test {R.fmt_pm(s.test_mean, s.test_std)}")
        parts.append(f"LOR {R.fmt_dec(res.diagnostics.lor)}")
        parts.append(f"COS {R.fmt_dec(res.diagnostics.cos)}")
    else:
        first = next(iter(res.summaries.values()))
        parts.append(f"{first.metric_name} test {R.fmt_pm(first.test_mean, first.test_std)}")
    if res.status.color != "not_applicable":
        parts.append(res.status.color)
    if res.status.degenerate:
        parts.append(f"degenerate ({res.status.degenerate_kind})")
    return f"{res.experiment_id}: ok ({', '.join(parts)})"


def _experiment_notes(res) -> list[str]:
    notes = []
    eid = res.experiment_id
    d = res.diagnostics
    if d.undefined_reason and d.undefined_reason != "no_error_metric":
        which = " and ".join(n for n, v in (("LOR", d.lor), ("COS", d.cos)) if v is None)
        notes.append(f"{eid}: {which} undefined ({d.undefined_reason})")
    if res.r2_pooled:
        notes.append(f"{eid}: test R² computed on pooled test predictions")
    if res.unequal_folds:
        notes.append(f"{eid}: folds have unequal test sizes; fold means are unweighted")
    if any(s.single_fold for s in res.summaries.values()):
        notes.append(f"{eid}: a single fold was run, so σ is reported as 0")
    counts: dict[str, int] = {}
    for rec in res.records:
        for w in rec.warnings:
            counts[w] = counts.get(w, 0) + 1
    for w, c in sorted(counts.items()):
        notes.append(f"{eid}: {w} in {c} fold(s)")
    return notes


def cmd_run(args) -> int:
    started = _now()
    try:
        plan, problems = _read_plan(args.plan, args.seed)
    except OSError as exc:
        _err(f"cannot read plan {args.plan}: {exc}")
        return EXIT_IO
    if problems:
        for p in problems:
            _err(p)
        return EXIT_FAIL
    settings = plan.settings()
    out = Path(args.out)

    failures, jobs = [], []
    for spec in plan.experiments:
        try:
            jobs.append((spec, plan.resolve_dataset(spec.dataset_ref)))
        except FileNotFoundError as exc:
            failures.append((spec.experiment_id, f"missing dataset_ref {spec.dataset_ref!r}: {exc}"))

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_execute, *zip(*[(s, m, settings) for s, m in jobs])))
    else:
        outcomes = [_execute(s, m, settings) for s, m in jobs]

    results, snapshot_ids, class_labels = [], {}, {}
    for (spec, _), (res, sid, extra) in zip(jobs, outcomes):
        if res is None:
            failures.append((spec.experiment_id, extra))
            continue
        results.append(res)
        snapshot_ids[spec.experiment_id] = sid
        if extra:
            class_labels[spec.experiment_id] = list(extra)

    order = {s.experiment_id: i for i, s in enumerate(plan.experiments)}
    failures.sort(key=lambda f: order[f[0]])
    for spec in plan.experiments:
        res = next((r for r in results if r.experiment_id == spec.experiment_id), None)
        if res is not None:
            print(_status_line(res))
        else:
            print(f"{spec.experiment_id}: FAILED: {dict(failures)[spec.experiment_id]}")

    notes = [n for r in results for n in _experiment_notes(r)]
    if results:
        _, selection = R.build_rows(results)
        if selection.tie_note:
            notes.append(selection.tie_note)
    metadata = {
        "root_seed": plan.root_seed,
        "log_base": settings.log_base,
        "alpha": settings.alpha,
        "beta": settings.beta,
        "epsilon_ideal": settings.epsilon_ideal,
        "std_convention": M.STD_CONVENTION,
        "degenerate_tolerance": settings.degenerate_tolerance,
        "tool_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "snapshot_ids": snapshot_ids,
        "class_labels": class_labels,
        "failures": [{"exp_id": e, "message": m} for e, m in failures],
        "notes": notes,
        "started_at": started,
        "finished_at": _now(),
    }
    try:
        R.persist_results(results, out, metadata)
        (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    done = len(plan.experiments) - len(failures)
    _err(f"{done}/{len(plan.experiments)} experiments completed; results in {out}")
    return EXIT_OK if not failures else EXIT_FAIL


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _load_results(results_dir: Path):
    for name in ("summary.csv", "plan.json", "run_metadata.json"):
        if not (results_dir / name).is_file():
            raise MissingResults(f"{results_dir} has no {name}; run `mlbaseline run` first")
    raw = json.loads((results_dir / "plan.json").read_text(encoding="utf-8"))
    plan, problems = parse_plan(raw, results_dir)
    if problems:
        raise MissingResults(f"stored plan.json is not a valid plan: {'; '.join(problems)}")
    metadata = json.loads((results_dir / "run_metadata.json").read_text(encoding="utf-8"))
    tasks = {s.experiment_id: s.task for s in plan.experiments}
    rows = [R.with_degenerate_kind(r, tasks.get(r.experiment_id)) for r in
            R.read_summary_csv(results_dir / "summary.csv")]
    return plan, metadata, rows


def mixed_metric_warning(specs) -> str | None:
    """Warn when experiments are not compared on one common metric."""
    sets = {tuple(s.metric_names) for s in specs}
    diag = {M.diagnostic_metric(s.metric_names) for s in specs if s.task == "regression"}
    if len(sets) > 1 or len(diag) > 1:
        listed = "; ".join(f"{s.experiment_id}: {', '.join(s.metric_names)}" for s in specs)
        return f"experiments use different metrics, comparisons across them are not uniform ({listed})"
    return None


def build_report(results_dir: Path, plan, metadata, rows, plots):
    done = {r.experiment_id for r in rows}
    specs = plan.experiments
    labels = metadata.get("class_labels", {})
    appendix = []
    by_id = {p.experiment_id: p for p in plots}
    for spec in specs:
        if spec.experiment_id not in done:
            continue
        stem = R.safe_name(spec.experiment_id)
        p = by_id.get(spec.experiment_id)
        if spec.task == "classification" and p is not None:
            cm = R.summed_confusion(p)
            appendix.append((f"{spec.experiment_id}: confusion matrix (test, all folds)",
                             R.confusion_markdown(cm, labels.get(spec.experiment_id)),
                             f"plots/{stem}_confusion.svg"))
        elif spec.task == "regression":
            appendix.append((f"{spec.experiment_id}: predicted vs true", "",
                             f"plots/{stem}_pred_vs_true.svg"))
        if p is not None:
            for fold_index, _ in p.traces:
                appendix.append((f"{spec.experiment_id}: loss vs epoch, fold {fold_index}", "",
                                 f"plots/{stem}_loss_fold{fold_index}.svg"))
    appendix.append(("Fold-level results", "", "../folds.csv"))
    settings = {k: v for k, v in metadata.items() if k not in ("started_at", "finished_at")}
    notes = list(metadata.get("notes", []))
    warning = mixed_metric_warning([s for s in specs if s.experiment_id in done])
    if warning:
        notes.append(warning)
    failures = [(f["exp_id"], f["message"]) for f in metadata.get("failures", [])]
    return R.ReportDocument(specs, rows, settings, failures, notes, appendix), warning


def cmd_report(args) -> int:
    results_dir = Path(args.out)
    try:
        plan, metadata, rows = _load_results(results_dir)
    except MissingResults as exc:
        _err(f"MissingResults: {exc}")
        return EXIT_FAIL
    except (OSError, json.JSONDecodeError) as exc:
        _err(f"cannot read results in {results_dir}: {exc}")
        return EXIT_IO

    report_dir = results_dir / "report"
    labels = metadata.get("class_labels", {})
    try:
        plots = R.read_plot_data(results_dir, plan.experiments)
        plots = [
            R.PlotData(p.experiment_id, p.task, p.model_type, p.test_true, p.test_pred, p.traces,
                       len(labels[p.experiment_id]) if p.experiment_id in labels else None,
                       tuple(labels[p.experiment_id]) if p.experiment_id in labels else None)
            for p in plots
        ]
        R.emit_plots(plots, report_dir / "plots")
        doc, warning = build_report(results_dir, plan, metadata, rows, plots)
        if warning:
            _err(f"warning: {warning}")
        formats = R.FORMATS if args.format == "all" else (args.format,)
        written = []
        for fmt in formats:
            if fmt == "markdown":
                path = report_dir / "report.md"
                path.write_text(doc.to_markdown(), encoding="utf-8")
                written.append(path)
            elif fmt == "html":
                path = report_dir / "report.html"
                path.write_text(doc.to_html(), encoding="utf-8")
                written.append(path)
            else:
                for name, text in (("results.csv", R.render_results_table(rows, "csv")),
                                   ("plan.csv", R.render_plan_table(plan.experiments, "csv"))):
                    (report_dir / name).write_text(text, encoding="utf-8")
                    written.append(report_dir / name)
    except (OSError, SnapshotIOError) as exc:
        _err(f"cannot write report: {exc}")
        return EXIT_IO
    except (BaselineError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    for path in written:
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlbaseline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    plan_p = sub.add_parser("plan", help="plan file utilities")
    plan_sub = plan_p.add_subparsers(dest="plan_command", required=True)
    val = plan_sub.add_parser("validate", help="check a plan file and report every problem")
    val.add_argument("--plan", required=True)
    val.set_defaults(func=cmd_plan_validate)

    data_p = sub.add_parser("data", help="dataset utilities")
    data_sub = data_p.add_subparsers(dest="data_command", required=True)
    snap = data_sub.add_parser("snapshot", help="store a CSV as a content-addressed snapshot")
    snap.add_argument("--input", required=True, help="CSV file with a header row")
    snap.add_argument("--target", required=True, help="name of the target column")
    snap.add_argument("--task", required=True, choices=["regression", "classification"])
    snap.add_argument("--transform", action="append", choices=list(TRANSFORM_KINDS),
                      help="transform to apply (repeatable, applied in order)")
    snap.add_argument("--scope", choices=["global", "per-fold"], default="global")
    snap.add_argument("--out", required=True, help="snapshot directory")
    snap.set_defaults(func=cmd_data_snapshot)

    run = sub.add_parser("run", help="run every experiment in a plan")
    run.add_argument("--plan", required=True)
    run.add_argument("--out", required=True, help="results directory")
    run.add_argument("--seed", type=int, default=None, help="root seed, overrides the plan")
    run.add_argument("--jobs", type=int, default=1, help="experiments run in parallel")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="render tables and plots from a results directory")
    rep.add_argument("--out", required=True, help="results directory written by `run`")
    rep.add_argument("--format", choices=["markdown", "csv", "html", "all"], default="all")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for IO failures here
        return EXIT_OK if exc.code in (0, None) else EXIT_FAIL
    if getattr(args, "jobs", 1) < 1:
        _err("--jobs must be at least 1")
        return EXIT_FAIL
    if getattr(args, "seed", None) is not None and args.seed < 0:
        _err("--seed must be non-negative")
        return EXIT_FAIL
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
