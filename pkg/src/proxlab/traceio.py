"""Trace CSV emission and parsing.

The CSV is the figure-level contract of the package: one row per iterate,
full-precision scientific notation, LF newlines, empty fields where a column
does not apply to the run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ppm import IterationTrace

CSV_HEADER = "k,c_k,f,cost_gap,dist_S,residual_norm,eps_k,delta_k,criterion_ok"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    return f"{value:.17e}"


def emit_trace_csv(trace: IterationTrace, path) -> None:
    """Write one row per iterate k = 0..K (transition fields live on row k)."""
    gaps = trace.gaps()
    dists = trace.dists()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for k in range(len(trace)):
            row = [
                str(k),
                _fmt(trace.steps[k]),
                _fmt(trace.values[k]),
                _fmt(gaps[k]),
                _fmt(dists[k]),
                _fmt(trace.residuals[k]),
                _fmt(trace.eps[k]),
                _fmt(trace.deltas[k]),
                _fmt(trace.criterion_ok[k]),
            ]
            fh.write(",".join(row) + "\n")


@dataclass
class ParsedTrace:
    """Column-wise numeric view of an emitted trace CSV."""

    k: list[int]
    c: list[float]
    f: list[float]
    cost_gap: list[float | None]
    dist: list[float | None]
    residual_norm: list[float | None]
    eps: list[float | None]
    delta: list[float | None]
    criterion_ok: list[bool | None]

    def __len__(self) -> int:
        return len(self.k)


def read_trace_csv(path) -> ParsedTrace:
    cols: list[list] = [[] for _ in range(9)]
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 9:
                raise ValueError(f"bad row {line!r}")
            cols[0].append(int(parts[0]))
            for i in range(1, 8):
                cols[i].append(float(parts[i]) if parts[i] else None)
            cols[8].append(None if not parts[8] else parts[8] == "1")
    return ParsedTrace(*cols)
