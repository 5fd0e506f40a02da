"""Deterministic report emission.

Every floating-point number is rendered through one fixed format
(%.12e) and keys are written in a fixed order, so rerunning a scenario
with an identical config produces byte-identical files regardless of
worker count or cache temperature.  Wall-clock time is deliberately
kept out of the report files for the same reason; the CLI prints it to
stderr instead.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

FLOAT_FMT = "%.12e"


def fmt(value) -> str:
    return FLOAT_FMT % float(value)


@dataclass
class Assertion:
    """One checked claim with its tolerance and the achieved value."""

    name: str
    claim: str
    passed: bool
    tolerance: float
    achieved: float
    comparison: str = "<="  # how achieved relates to tolerance when passing

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "claim": self.claim,
            "passed": bool(self.passed),
            "comparison": self.comparison,
            "tolerance": fmt(self.tolerance),
            "achieved": fmt(self.achieved),
        }


@dataclass
class ScenarioReport:
    scenario: str
    config: dict
    assertions: List[Assertion] = field(default_factory=list)
    # name -> (column names, rows of floats)
    tables: Dict[str, Tuple[Sequence[str], List[Sequence[float]]]] = field(default_factory=dict)
    # name -> 2D float array
    fields: Dict[str, np.ndarray] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(
        self, name: str, claim: str, achieved: float, tolerance: float,
        comparison: str = "<=",
    ) -> Assertion:
        if comparison == "<=":
            ok = achieved <= tolerance
        elif comparison == ">":
            ok = achieved > tolerance
        else:
            raise ValueError(f"unknown comparison {comparison!r}")
        a = Assertion(name, claim, ok, tolerance, achieved, comparison)
        self.assertions.append(a)
        return a


def emit_report(report: ScenarioReport, out_dir: str) -> List[str]:
    """Write report.json, report.txt and the CSV tables/fields; returns
    the list of paths written (fixed order)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    doc = {
        "scenario": report.scenario,
        "passed": report.passed,
        "config": report.config,
        "assertions": [a.to_dict() for a in report.assertions],
        "notes": list(report.notes),
        "tables": sorted(report.tables),
        "fields": sorted(report.fields),
    }
    p = os.path.join(out_dir, "report.json")
    with open(p, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    paths.append(p)

    p = os.path.join(out_dir, "report.txt")
    with open(p, "w") as fh:
        fh.write(f"scenario: {report.scenario}\n")
        for a in report.assertions:
            status = "PASS" if a.passed else "FAIL"
            fh.write(
                f"{status} {a.name}: achieved {fmt(a.achieved)} "
                f"{a.comparison} tolerance {fmt(a.tolerance)} ({a.claim})\n"
            )
        for note in report.notes:
            fh.write(f"note: {note}\n")
        fh.write("overall: " + ("PASS" if report.passed else "FAIL") + "\n")
    paths.append(p)

    for name in sorted(report.tables):
        columns, rows = report.tables[name]
        p = os.path.join(out_dir, f"table_{name}.csv")
        with open(p, "w") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        paths.append(p)

    for name in sorted(report.fields):
        grid = np.asarray(report.fields[name])
        p = os.path.join(out_dir, f"field_{name}.csv")
        with open(p, "w") as fh:
            for row in grid:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        paths.append(p)

    return paths
