"""Check reports: named residuals, hypothesis flags, pass/fail status, JSON I/O."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

SCHEMA_VERSION = 1


@dataclass
class CheckReport:
    """Outcome of one named check.

    ``residuals`` maps residual names to nonnegative values, each compared
    against ``tolerances`` (same keys; missing keys fall back to ``tol``).
    A skipped check records the violated hypothesis and never counts as a
    failure.
    """

    name: str
    tol: float = 1e-10
    residuals: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    hypothesis_flags: dict[str, bool] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    status: str | None = None
    skip_reason: str | None = None
    notes: list[str] = field(default_factory=list)

    def tolerance_for(self, key: str) -> float:
        return self.tolerances.get(key, self.tol)

    def failures(self) -> dict[str, float]:
        return {
            k: v
            for k, v in self.residuals.items()
            if not (v < self.tolerance_for(k)) or not _isfinite(v)
        }

    def finalize(self) -> "CheckReport":
        """Derive status from residuals unless already skipped or forced."""
        if self.status is None:
            self.status = SKIPPED if self.skip_reason else (FAIL if self.failures() else PASS)
        return self

    def skip(self, reason: str) -> "CheckReport":
        self.skip_reason = reason
        self.status = SKIPPED
        return self

    @property
    def passed(self) -> bool:
        return self.finalize().status == PASS

    def as_dict(self) -> dict[str, Any]:
        self.finalize()
        out: dict[str, Any] = {
            "name": self.name,
            "status": self.status,
            "tolerance": self.tol,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
        }
        if self.tolerances:
            out["tolerances"] = {k: float(v) for k, v in sorted(self.tolerances.items())}
        if self.hypothesis_flags:
            out["hypothesis_flags"] = {k: bool(v) for k, v in sorted(self.hypothesis_flags.items())}
        if self.scalars:
            out["scalars"] = {k: float(v) for k, v in sorted(self.scalars.items())}
        if self.skip_reason:
            out["skip_reason"] = self.skip_reason
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _isfinite(x: float) -> bool:
    return x == x and abs(x) != float("inf")


def report_timestamp() -> str:
    """ISO timestamp; honours SOURCE_DATE_EPOCH so report bytes can be pinned."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def emit_report(reports: list[CheckReport], path: str, scenario: str = "",
                timestamp: str | None = None) -> dict[str, Any]:
    """Write the JSON report document for a list of checks and return it."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "timestamp": timestamp if timestamp is not None else report_timestamp(),
        "checks": [r.as_dict() for r in reports],
        "summary": summarize(reports),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def load_report(path: str) -> dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)


def summarize(reports: list[CheckReport]) -> dict[str, int]:
    counts = {PASS: 0, FAIL: 0, SKIPPED: 0}
    for r in reports:
        counts[r.finalize().status] += 1
    return {"passed": counts[PASS], "failed": counts[FAIL], "skipped": counts[SKIPPED]}


def exit_code(reports: list[CheckReport]) -> int:
    """0 iff every non-skipped check passes."""
    return 0 if summarize(reports)["failed"] == 0 else 1
