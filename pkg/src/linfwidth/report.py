"""Check records and byte-stable report files.

A record stores the measured value, its standard error or tolerance, the
bound and the comparison, so its status can be recomputed from the stored
fields alone. Timing is kept outside the report text, which therefore depends
only on the configuration and the seeds.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

OPS = ("<=", "<", ">=", ">", "==", "abs<")


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return repr(float(v))
    if hasattr(v, "item") and not hasattr(v, "__len__"):
        return fmt(v.item())
    if isinstance(v, str):
        return v if v and not any(c.isspace() or c in "\"=" for c in v) else json.dumps(v)
    if v is None:
        return "none"
    return json.dumps(_plain(v), sort_keys=True, separators=(",", ":"))


def _plain(v):
    if hasattr(v, "tolist"):
        return v.tolist()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


@dataclass
class Record:
    family: str
    name: str
    value: object
    bound: object = None
    op: str = "<="
    se: float = 0.0
    sigmas: float = 0.0
    tol: float = 0.0
    report_only: bool = False
    fail_code: int = 3
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown comparison {self.op!r}")

    @property
    def holds(self) -> bool:
        if self.bound is None:
            return True
        v, b = self.value, self.bound
        if self.op == "==":
            return v == b
        slack = self.tol + self.sigmas * self.se
        if isinstance(v, float) and math.isnan(v):
            return False
        if self.op == "<=":
            return v <= b + slack
        if self.op == "<":
            return v < b + slack
        if self.op == ">=":
            return v >= b - slack
        if self.op == ">":
            return v > b - slack
        return abs(v - b) < slack

    @property
    def status(self) -> str:
        if self.report_only or self.bound is None:
            return "report"
        return "pass" if self.holds else "fail"

    def fields(self) -> dict:
        d = {"family": self.family, "name": self.name, "value": self.value, "status": self.status}
        if self.bound is not None:
            d.update(bound=self.bound, op=self.op, holds=self.holds)
            if self.se:
                d.update(se=self.se, sigmas=self.sigmas)
            if self.tol:
                d["tol"] = self.tol
        d.update({f"tag.{k}": v for k, v in self.tags.items()})
        return d

    def line(self) -> str:
        d = self.fields()
        return "record " + " ".join(f"{k}={fmt(d[k])}" for k in sorted(d))


@dataclass
class Report:
    command: str
    config: dict
    records: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def add(self, *args, **kw) -> Record:
        r = Record(*args, **kw)
        self.records.append(r)
        return r

    def extend(self, other: Report):
        self.records.extend(other.records)

    @property
    def failures(self) -> list:
        return [r for r in self.records if r.status == "fail"]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return max((r.fail_code for r in self.failures), default=0)

    def text(self) -> str:
        out = [f"report command={fmt(self.command)}"]
        out.append("config " + " ".join(f"{k}={fmt(self.config[k])}" for k in sorted(self.config)))
        if self.provenance:
            out.append("provenance " + " ".join(f"{k}={fmt(self.provenance[k])}" for k in sorted(self.provenance)))
        out += [r.line() for r in self.records]
        n_fail = len(self.failures)
        out.append(f"summary records={len(self.records)} failures={n_fail} status={'pass' if not n_fail else 'fail'}")
        return "\n".join(out) + "\n"

    def csv_tables(self) -> dict:
        """One CSV text per record family, columns sorted."""
        fams: dict[str, list] = {}
        for r in self.records:
            fams.setdefault(r.family, []).append(r.fields())
        out = {}
        for fam, rows in sorted(fams.items()):
            cols = sorted({k for row in rows for k in row})
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([fmt(row[c]) if c in row else "" for c in cols])
            out[fam] = buf.getvalue()
        return out

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "report.txt"
        path.write_text(self.text())
        for fam, text in self.csv_tables().items():
            (outdir / f"{fam}.csv").write_text(text)
        if self.timing:
            (outdir / "timing.txt").write_text(
                "".join(f"{k} {v:.3f}\n" for k, v in sorted(self.timing.items())))
        return path
