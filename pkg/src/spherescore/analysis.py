"""File ingestion, analysis orchestration and report formatting."""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .design import Design
from .errors import ConfigError, DesignError, ParseError
from .linalg import DataMatrix
from .model_choice import run_sequential, select_scores
from .scoretests import ScoreVector, TargetVector, regression_score, score_test

DESIGNS = ("one-group", "two-group", "correlation", "general")
METHODS = ("pca", "gene-sets", "column-order", "diagonal-order", "regression")
PROCEDURES = ("simple", "hommel-kropf")

# decimal point only, optional exponent; no thousands separators, nan or inf
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def fmt(x: float) -> str:
    """12 significant digits."""
    return f"{x:.12g}"


def fmt_p(p: float) -> str:
    """Compact scientific form, e.g. ``2.5E-05``."""
    return f"{p:.1E}"


@dataclass(frozen=True, eq=False)
class Ingested:
    data: DataMatrix
    labels: tuple | None = None
    target: TargetVector | None = None


def _delimiter(path: Path, header: str) -> str:
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    if path.suffix.lower() == ".csv":
        return ","
    return "\t" if "\t" in header and "," not in header else ","


def read_table(path) -> tuple[list[str], list[list[str]], str]:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8-sig")
    except FileNotFoundError:
        raise ParseError(f"no such file: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path} is empty")
    delim = _delimiter(path, lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    return [h.strip() for h in rows[0]], rows[1:], delim


def parse_number(cell: str, row: int, column: str) -> float:
    s = cell.strip()
    if not _NUMBER.match(s):
        raise ParseError(f"non-numeric cell {cell!r}", row=row, column=column)
    return float(s)


def ingest(path, labels: str | None = None, target: str | None = None) -> Ingested:
    """Read a CSV/TSV data file.

    Header row holds the variable IDs, the first column the individual
    IDs.  ``labels`` names a two-group label column and ``target`` a
    numeric correlation target; both are removed from the data matrix.
    """
    header, rows, _ = read_table(path)
    if len(header) < 2:
        raise ParseError("need an ID column and at least one variable column", row=1)
    width = len(header)
    for name, col in (("label", labels), ("target", target)):
        if col is not None and col not in header[1:]:
            raise ParseError(f"{name} column {col!r} not found", row=1, column=col)
    special = {c for c in (labels, target) if c is not None}
    var_cols = [j for j in range(1, width) if header[j] not in special]
    if not var_cols:
        raise ParseError("no variable columns left", row=1)

    row_ids, values, label_vals, target_vals = [], [], [], []
    for i, cells in enumerate(rows, start=2):
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", row=i)
        row_ids.append(cells[0].strip())
        values.append([parse_number(cells[j], i, header[j]) for j in var_cols])
        if labels is not None:
            label_vals.append(cells[header.index(labels)].strip())
        if target is not None:
            target_vals.append(parse_number(cells[header.index(target)], i, target))
    if len(values) < 2:
        raise ParseError(f"need at least 2 individuals, found {len(values)}")
    if len(set(row_ids)) != len(row_ids):
        dup = next(r for r in row_ids if row_ids.count(r) > 1)
        raise ParseError(f"duplicate individual id {dup!r}", column=header[0])
    col_ids = [header[j] for j in var_cols]
    if len(set(col_ids)) != len(col_ids):
        raise ParseError("duplicate variable ids in header", row=1)

    lab = None
    if labels is not None:
        distinct = list(dict.fromkeys(label_vals))
        if len(distinct) != 2:
            raise DesignError(f"label column {labels!r} must hold exactly 2 distinct values, found {distinct}")
        lab = tuple(label_vals)
    tgt = TargetVector.from_raw(target_vals) if target is not None else None
    data = DataMatrix(np.array(values), row_ids=tuple(row_ids), col_ids=tuple(col_ids))
    return Ingested(data=data, labels=lab, target=tgt)


def read_matrix(path) -> np.ndarray:
    """Headerless numeric matrix (CSV, TSV or whitespace separated)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise ParseError(f"no such file: {path}") from None
    out = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = re.split(r"[,\t ]+", line.strip())
        out.append([parse_number(c, i, str(j + 1)) for j, c in enumerate(cells)])
    if not out or len({len(r) for r in out}) != 1:
        raise ParseError(f"{path} is not a rectangular matrix")
    return np.array(out)


@dataclass
class AnalysisConfig:
    input: str
    design: str = "one-group"
    labels: str | None = None
    target: str | None = None
    q_matrix: str | None = None
    qh_matrix: str | None = None
    method: str = "pca"
    response: str | None = None
    alpha: float = 0.05
    procedure: str = "simple"
    k: int = 1
    max_scores: int | None = None
    seed: int = 0
    format: str = "csv"

    def validate(self):
        if self.design not in DESIGNS:
            raise ConfigError(f"design must be one of {DESIGNS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.procedure not in PROCEDURES:
            raise ConfigError(f"procedure must be one of {PROCEDURES}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.procedure == "hommel-kropf" and self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.design == "two-group" and not self.labels:
            raise ConfigError("two-group design needs --labels")
        if self.design == "correlation" and not self.target:
            raise ConfigError("correlation design needs --target")
        if self.design == "general" and not (self.q_matrix and self.qh_matrix):
            raise ConfigError("general design needs --q-matrix and --qh-matrix")
        if self.design != "two-group" and self.labels:
            raise ConfigError("--labels only applies to the two-group design")
        if self.design != "correlation" and self.target:
            raise ConfigError("--target only applies to the correlation design")
        if self.method == "regression" and not self.response:
            raise ConfigError("regression method needs --response")
        return self


@dataclass
class ResultRow:
    score: int
    label: str
    size: int
    B: float
    p_value: float
    significant: bool


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    COLUMNS = ("score", "label", "size", "B", "p_value", "p_sci", "significant")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.score, r.label, r.size, fmt(r.B), fmt(r.p_value), fmt_p(r.p_value), int(r.significant)])
        return buf.getvalue()

    def records(self) -> list[dict]:
        return [
            {
                "score": r.score,
                "label": r.label,
                "size": r.size,
                "B": float(fmt(r.B)),
                "p_value": float(fmt(r.p_value)),
                "p_sci": fmt_p(r.p_value),
                "significant": r.significant,
            }
            for r in self.rows
        ]


@dataclass
class AnalysisResult:
    table: ResultTable
    report: dict

    def render(self, format: str = "csv") -> str:
        if format == "json":
            return json.dumps(self.report, indent=2) + "\n"
        return self.table.to_csv()


def _build_design(cfg: AnalysisConfig, ing: Ingested) -> Design:
    if cfg.design == "one-group":
        return Design.one_group()
    if cfg.design == "two-group":
        return Design.two_group(np.array(ing.labels, dtype=object))
    if cfg.design == "correlation":
        return Design.correlation(ing.target.values)
    return Design.general(read_matrix(cfg.q_matrix), read_matrix(cfg.qh_matrix))


def run_analysis(cfg: AnalysisConfig) -> AnalysisResult:
    """Ingest, build weights and scores, run the sequential procedure."""
    cfg.validate()
    ing = ingest(cfg.input, labels=cfg.labels, target=cfg.target)
    X = ing.data
    design = _build_design(cfg, ing)
    n, p = X.shape
    col_ids = list(X.col_ids)
    k = cfg.k if cfg.procedure == "hommel-kropf" else 1
    report = {
        "input": Path(cfg.input).name,
        "n": n,
        "p": p,
        "design": cfg.design,
        "method": cfg.method,
        "alpha": cfg.alpha,
        "procedure": cfg.procedure,
        "k": k,
    }
    if design.kind == "two-group":
        report["groups"] = {"first": ing.labels[0], "sizes": list(design.sizes)}

    if cfg.method == "regression":
        if cfg.response not in col_ids:
            raise ConfigError(f"response column {cfg.response!r} not among the variables")
        M = design.data_for_scores(X)
        j = col_ids.index(cfg.response)
        others = [i for i in range(p) if i != j]
        z = regression_score(M[:, j], M[:, others], weight_id=cfg.response)
        res = score_test(ScoreVector(z.values, weight_id=cfg.response), design, cfg.alpha / k)
        table = ResultTable([ResultRow(1, cfg.response, p, res.statistic, res.p_value, res.significant)])
        report.update(
            provenance={"weights": "regression", "response": cfg.response, "seed": cfg.seed},
            n_scores=1,
            stop_index=1,
            significant=[1] if res.significant else [],
            rows=table.records(),
        )
        return AnalysisResult(table, report)

    sel = select_scores(X, design, cfg.method, q=cfg.max_scores, col_ids=col_ids)
    W = sel.weights
    if W.q == 0:
        raise ConfigError("the selected method produced no scores")
    outcome = run_sequential(sel.scores, design, cfg.alpha, cfg.procedure, k)

    rows = []
    for h, res in enumerate(outcome.results):
        size = int(np.count_nonzero(W.columns[:, h]))
        rows.append(ResultRow(h + 1, str(W.labels[h]), size, res.statistic, res.p_value, res.significant))
    table = ResultTable(rows)

    report["provenance"] = {
        "weights": W.source,
        "sums_of_products_fingerprint": W.derived_from,
        "ordering": {
            "pca": "decreasing eigenvalue",
            "gene-sets": "decreasing covariance measure O_m",
            "column-order": "decreasing absolute column sums",
            "diagonal-order": "decreasing diagonal",
        }[cfg.method],
        "seed": cfg.seed,
    }
    if W.eigenvalues is not None:
        report["eigenvalues"] = [float(fmt(v)) for v in W.eigenvalues]
    if sel.gene_sets:
        report["gene_sets"] = [
            {
                "score": h + 1,
                "center": col_ids[gs.center],
                "size": gs.size,
                "measure": float(fmt(gs.measure)),
                "members": [col_ids[i] for i in gs.members],
            }
            for h, gs in enumerate(sel.gene_sets)
        ]
    report["n_scores"] = W.q
    report["level_used"] = outcome.level_used
    report["stop_index"] = outcome.stop_index
    report["significant"] = [i + 1 for i in outcome.significant_indices]
    report["rows"] = table.records()
    return AnalysisResult(table, report)


def config_dict(cfg: AnalysisConfig) -> dict:
    return asdict(cfg)
