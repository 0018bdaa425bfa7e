"""Data ingestion, analysis orchestration and report emission.

Input format is long (tidy) CSV with header ``group,subject,<factor...>,value``:
one row per measurement, at least one within-subject factor column, UTF-8,
comma-delimited, period decimal separator. Group labels, subject labels and
factor levels are sorted numerically when every label parses as a number and
lexicographically otherwise, so assembly does not depend on row order; within
a subject's vector the last factor column varies fastest, matching the
Kronecker convention of the hypothesis builders.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .design import (
    FactorialLayout,
    HypothesisMatrix,
    THREE_FACTOR_EFFECTS,
    TWO_FACTOR_EFFECTS,
    custom_hypothesis,
    hyp_three_factor,
    hyp_two_factor,
)
from .distributions import RngStream
from .errors import ConfigError, DesignError, SchemaError
from .inference import Dataset, ats_f_test, wts
from .resampling import ResamplePlan, npbs, pbs, wtps
from .simulate import METHOD_TAGS, normalize_methods

__all__ = [
    "AnalysisRequest",
    "LongRecord",
    "ReportRow",
    "ReportTable",
    "assemble",
    "format_report_text",
    "infer_layout",
    "long_csv_factor_names",
    "parse_long_csv",
    "run_analyze",
    "write_long_csv",
    "write_report_csv",
]


@dataclass(frozen=True)
class LongRecord:
    """One measurement: group and subject labels, factor levels, value."""

    group: str
    subject: str
    factor_levels: tuple[str, ...]
    value: float


def _open_csv(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read data file {path}: {exc}") from None


def _read_header(path):
    with _open_csv(path) as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
    return [c.strip() for c in header]


def long_csv_factor_names(path) -> tuple[str, ...]:
    """Names of the within-subject factor columns of a long CSV file."""
    header = _read_header(path)
    _validate_header(path, header)
    return tuple(header[2:-1])


def _validate_header(path, header):
    if len(header) < 4 or header[0] != "group" or header[1] != "subject" or header[-1] != "value":
        raise SchemaError(
            f"{path}: header must be 'group,subject,<factor...>,value' with at least "
            f"one factor column, got {header!r}"
        )


def parse_long_csv(path) -> list[LongRecord]:
    """Parse and validate a long CSV file into records.

    Rejects missing columns, non-numeric or non-finite values (with the row
    number) and duplicate (group, subject, factor-levels) keys.
    """
    records: list[LongRecord] = []
    seen: set[tuple] = set()
    with _open_csv(path) as fh:
        rows = csv.reader(fh)
        try:
            header = [c.strip() for c in next(rows)]
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        _validate_header(path, header)
        width = len(header)
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise SchemaError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            cells = [c.strip() for c in row]
            try:
                value = float(cells[-1])
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno}: value {cells[-1]!r} is not numeric"
                ) from None
            if not np.isfinite(value):
                raise SchemaError(f"{path}:{lineno}: value must be finite, got {cells[-1]!r}")
            rec = LongRecord(
                group=cells[0],
                subject=cells[1],
                factor_levels=tuple(cells[2:-1]),
                value=value,
            )
            key = (rec.group, rec.subject, rec.factor_levels)
            if key in seen:
                raise SchemaError(
                    f"{path}:{lineno}: duplicate measurement for group={rec.group!r} "
                    f"subject={rec.subject!r} levels={rec.factor_levels!r}"
                )
            seen.add(key)
            records.append(rec)
    if not records:
        raise SchemaError(f"{path}: no data rows")
    return records


def _natural_order(labels) -> list[str]:
    labels = list(labels)
    try:
        return sorted(labels, key=lambda s: (float(s), s))
    except ValueError:
        return sorted(labels)


def _level_orders(records) -> list[list[str]]:
    k = len(records[0].factor_levels)
    if any(len(r.factor_levels) != k for r in records):
        raise SchemaError("records disagree on the number of factor columns")
    return [_natural_order({r.factor_levels[j] for r in records}) for j in range(k)]


def infer_layout(records) -> FactorialLayout:
    """Derive the factorial layout (group count, factor level counts)."""
    groups = {r.group for r in records}
    orders = _level_orders(records)
    return FactorialLayout(
        whole_plot_levels=len(groups),
        sub_plot_levels=tuple(len(o) for o in orders),
    )


def assemble(records, layout: FactorialLayout | None = None) -> Dataset:
    """Build a Dataset from long records (order-insensitive).

    Every subject must have exactly one value per within-factor cell. Groups,
    subjects and factor levels are placed in their natural (numeric-aware)
    sort order; the last factor varies fastest along the occasion axis.
    """
    if not records:
        raise SchemaError("no records to assemble")
    inferred = infer_layout(records)
    if layout is not None and (
        layout.whole_plot_levels != inferred.whole_plot_levels
        or tuple(layout.sub_plot_levels) != tuple(inferred.sub_plot_levels)
    ):
        raise SchemaError(
            f"data implies layout {inferred} but the request declares {layout}"
        )
    orders = _level_orders(records)
    cell_index = {cell: i for i, cell in enumerate(itertools.product(*orders))}
    t = len(cell_index)
    group_order = _natural_order({r.group for r in records})
    by_group: dict[str, dict[str, dict[tuple, float]]] = {
        g: {} for g in group_order
    }
    for r in records:
        by_group[r.group].setdefault(r.subject, {})[r.factor_levels] = r.value
    matrices = []
    for g in group_order:
        subjects = _natural_order(by_group[g].keys())
        mat = np.empty((len(subjects), t))
        for i, s in enumerate(subjects):
            cells = by_group[g][s]
            if len(cells) != t:
                missing = sorted(set(cell_index) - set(cells))[:1]
                raise SchemaError(
                    f"subject {s!r} in group {g!r} has {len(cells)} of {t} cells; "
                    f"first missing cell: {missing[0] if missing else '?'}"
                )
            for levels, v in cells.items():
                mat[i, cell_index[levels]] = v
        matrices.append(mat)
    return Dataset(groups=tuple(matrices))


def write_long_csv(
    data: Dataset,
    path,
    factor_names=("occasion",),
    sub_plot_levels=None,
    group_labels=None,
):
    """Emit a Dataset as canonical long CSV (inverse of parse + assemble).

    ``sub_plot_levels`` factorizes the occasion axis (product must equal t);
    level labels are 1..k per factor, subjects are numbered within group.
    """
    t = data.t_vec[0]
    if any(ti != t for ti in data.t_vec):
        raise DesignError("long CSV emission needs equal occasion counts across groups")
    sub_plot_levels = tuple(sub_plot_levels) if sub_plot_levels else (t,)
    if int(np.prod(sub_plot_levels)) != t:
        raise DesignError(f"factor levels {sub_plot_levels} do not multiply to t={t}")
    if len(factor_names) != len(sub_plot_levels):
        raise DesignError("one factor name per factor is required")
    group_labels = (
        list(group_labels)
        if group_labels
        else [f"g{i + 1}" for i in range(data.n_groups)]
    )
    cells = list(itertools.product(*[range(1, k + 1) for k in sub_plot_levels]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "subject", *factor_names, "value"])
        for gi, mat in enumerate(data.groups):
            for si in range(mat.shape[0]):
                for ci, cell in enumerate(cells):
                    writer.writerow(
                        [group_labels[gi], f"s{si + 1}", *cell, repr(float(mat[si, ci]))]
                    )


@dataclass(frozen=True)
class AnalysisRequest:
    """A complete analysis: data file, effects, methods and reproducibility."""

    data_path: str
    effects: tuple[str, ...]
    methods: tuple[str, ...]
    n_resample: int = 1000
    alpha: float = 0.05
    seed: int = 0
    layout: FactorialLayout | None = None
    custom_h: np.ndarray | None = None

    def __post_init__(self):
        if not self.effects:
            raise ConfigError("at least one effect is required")
        object.__setattr__(self, "methods", normalize_methods(self.methods))
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_resample < 1:
            raise ConfigError(f"n_resample must be >= 1, got {self.n_resample}")


@dataclass(frozen=True)
class ReportRow:
    effect: str
    method: str
    statistic: float
    df: float
    p_value: float
    n_degenerate: int = 0


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ReportRow, ...]
    metadata: dict = field(default_factory=dict)


def _resolve_effect(effect, layout: FactorialLayout, custom_h) -> HypothesisMatrix:
    a = layout.whole_plot_levels
    k = len(layout.sub_plot_levels)
    if effect == "custom":
        if custom_h is None:
            raise ConfigError("effect 'custom' requires a hypothesis matrix")
        return custom_hypothesis(custom_h, layout.total_dim)
    if k == 1:
        t = layout.sub_plot_levels[0]
        if effect not in TWO_FACTOR_EFFECTS:
            raise DesignError(
                f"effect {effect!r} is not available with one within-subject factor; "
                f"expected one of {TWO_FACTOR_EFFECTS} or 'custom'"
            )
        return hyp_two_factor(effect, a, t)
    if k == 2:
        b, t = layout.sub_plot_levels
        if effect not in THREE_FACTOR_EFFECTS:
            raise DesignError(
                f"effect {effect!r} is not available with two within-subject factors; "
                f"expected one of {THREE_FACTOR_EFFECTS} or 'custom'"
            )
        return hyp_three_factor(effect, a, b, t)
    raise DesignError(
        f"designs with {k} within-subject factors are supported only through "
        f"effect 'custom'"
    )


def _analyze_one(method, data, h, plan_seed, b, ats_df):
    if method == "WTS-asym":
        out = wts(data, h)
        return ReportRow(h.label, method, out.statistic, out.df, out.p_value)
    if method == "ATS-F":
        out = ats_f_test(data, h)
        return ReportRow(h.label, method, out.statistic, out.df, out.p_value)
    if method == "WTPS":
        res = wtps(data, h, ResamplePlan("permutation", b, plan_seed))
    elif method.startswith("NPBS"):
        res = npbs(data, h, ResamplePlan("npbs", b, plan_seed),
                   statistic="ats" if method.endswith("ATS") else "wts")
    else:
        res = pbs(data, h, ResamplePlan("pbs", b, plan_seed),
                  statistic="ats" if method.endswith("ATS") else "wts")
    df = ats_df if method.endswith("ATS") else float(h.rank)
    return ReportRow(h.label, method, res.observed, df, res.p_value, res.n_degenerate)


def run_analyze(req: AnalysisRequest) -> ReportTable:
    """Run every requested effect x method on the data file."""
    records = parse_long_csv(req.data_path)
    layout = req.layout or infer_layout(records)
    data = assemble(records, layout)
    stream = RngStream(req.seed)
    rows = []
    for ei, effect in enumerate(req.effects):
        h = _resolve_effect(effect, layout, req.custom_h)
        ats_df = ats_f_test(data, h).df
        for method in req.methods:
            plan_seed = stream.child(ei, METHOD_TAGS.index(method))
            rows.append(_analyze_one(method, data, h, plan_seed, req.n_resample, ats_df))
    metadata = {
        "data_path": str(req.data_path),
        "alpha": req.alpha,
        "seed": req.seed,
        "n_resample": req.n_resample,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return ReportTable(rows=tuple(rows), metadata=metadata)


def write_report_csv(report: ReportTable, path):
    """Machine-readable report: full precision plus reproducibility columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["effect", "method", "statistic", "df", "p_value", "n_degenerate",
             "seed", "n_resample"]
        )
        for r in report.rows:
            writer.writerow(
                [r.effect, r.method, repr(r.statistic), repr(r.df), repr(r.p_value),
                 r.n_degenerate, report.metadata.get("seed"),
                 report.metadata.get("n_resample")]
            )


def _sig4(x: float) -> str:
    return f"{float(x):.4g}"


def format_report_text(report: ReportTable) -> str:
    """Aligned human-readable table, 4 significant digits."""
    header = ["effect", "method", "statistic", "df", "p_value"]
    body = [
        [r.effect, r.method, _sig4(r.statistic), _sig4(r.df), _sig4(r.p_value)]
        for r in report.rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) for i, h in enumerate(header)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(row[i].ljust(widths[i]) for i in range(len(header))) for row in body]
    meta = report.metadata
    lines.append("")
    lines.append(
        f"seed={meta.get('seed')}  n_resample={meta.get('n_resample')}  "
        f"alpha={meta.get('alpha')}"
    )
    return "\n".join(lines)
