"""Scenario files: JSON schema, validation with field paths, bundled set."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .checks import CHECKS, ScenarioContext, run_checks
from .exprs import ParseError
from .germs import (
    ChartGerm,
    ConnectionParams,
    conformal_flat_product_germ,
    flat_product_germ,
)
from .report import CheckReport


class ScenarioError(ValueError):
    """Schema violation; the message carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Scenario:
    name: str
    germ: ChartGerm
    base_point: np.ndarray
    connections: list[ConnectionParams]
    checks: list[str]
    expect_class: str | None = None
    tolerances: dict = field(default_factory=dict)
    fd_step: float = 1e-4
    seed: int = 0

    def context(self, tol_scale: float = 1.0, seed: int | None = None) -> ScenarioContext:
        return ScenarioContext(
            germ=self.germ,
            point=self.base_point,
            connections=self.connections,
            seed=self.seed if seed is None else seed,
            fd_step=self.fd_step,
            expect_class=self.expect_class,
            tolerances=self.tolerances,
            tol_scale=tol_scale,
        )


def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ScenarioError(f"{path}.{key}", "missing required field")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError(f"{path}.{key}", f"expected a number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioError(f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _expr_grid(rows, dim: int, path: str) -> list[list[str]]:
    if not isinstance(rows, list) or len(rows) != dim:
        raise ScenarioError(path, f"expected {dim} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ScenarioError(f"{path}[{i}]", f"expected {dim} entries")
    return [[str(v) for v in row] for row in rows]


def germ_from_spec(spec: dict, path: str = "germ", name: str = "germ") -> ChartGerm:
    if not isinstance(spec, dict):
        raise ScenarioError(path, "expected an object")
    generator = spec.get("generator")
    try:
        if generator == "flat_product":
            n = int(_require(spec, "n", int, path))
            germ = flat_product_germ(n, name=name)
        elif generator == "conformal_flat_product":
            n = int(_require(spec, "n", int, path))
            u = _require(spec, "u", str, path)
            germ = conformal_flat_product_germ(n, u, name=name)
        elif generator is None:
            dim = int(_require(spec, "dim", int, path))
            metric = _expr_grid(_require(spec, "metric", list, path), dim, f"{path}.metric")
            structure = _expr_grid(
                _require(spec, "structure", list, path), dim, f"{path}.structure"
            )
            germ = ChartGerm.from_strings(dim, metric, structure, name=name)
        else:
            raise ScenarioError(f"{path}.generator", f"unknown generator {generator!r}")
    except ParseError as exc:
        raise ScenarioError(f"{path}", f"expression error: {exc}") from exc
    base = spec.get("base_point")
    if base is not None:
        if not isinstance(base, list) or len(base) != germ.dim:
            raise ScenarioError(f"{path}.base_point", f"expected {germ.dim} coordinates")
        germ = ChartGerm(germ.dim, germ.metric, germ.structure,
                         tuple(float(v) for v in base), germ.name)
    return germ


def _connection(entry, n: int, path: str) -> ConnectionParams:
    if entry == "D":
        return ConnectionParams.d()
    if entry in ("D_tilde", "Dtilde"):
        return ConnectionParams.d_tilde(n)
    if isinstance(entry, dict):
        lam = _require(entry, "lambda", float, path)
        mu = _require(entry, "mu", float, path)
        return ConnectionParams(lam, mu)
    raise ScenarioError(path, f"expected 'D', 'D_tilde' or an object, got {entry!r}")


def load_scenario(doc: dict, name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario document must be an object")
    name = doc.get("name", name)
    germ = germ_from_spec(_require(doc, "germ", dict, "$"), "$.germ", name=name)
    base_point = np.asarray(germ.base_point, dtype=float)

    raw_connections = doc.get("connections", ["D", "D_tilde", {"lambda": 1.0, "mu": 0.0}])
    connections = [
        _connection(entry, germ.n, f"$.connections[{i}]")
        for i, entry in enumerate(raw_connections)
    ]

    checks = doc.get("checks")
    if checks is None:
        checks = list(CHECKS)
    else:
        if not isinstance(checks, list):
            raise ScenarioError("$.checks", "expected a list of check names")
        for i, check in enumerate(checks):
            if check not in CHECKS:
                raise ScenarioError(f"$.checks[{i}]", f"unknown check {check!r}")

    tolerances = doc.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ScenarioError("$.tolerances", "expected an object")
    for check_name, overrides in tolerances.items():
        if check_name not in CHECKS:
            raise ScenarioError(f"$.tolerances.{check_name}", "unknown check")
        if not isinstance(overrides, dict):
            raise ScenarioError(f"$.tolerances.{check_name}", "expected an object of residual: tol")

    expect_class = doc.get("expect_class")
    if expect_class is not None and expect_class not in (
        "W0", "W1", "W3bar", "W6bar", "outside_W1"
    ):
        raise ScenarioError("$.expect_class", f"unknown class label {expect_class!r}")

    fd_step = float(doc.get("fd_step", 1e-4))
    if not 0 < fd_step < 0.1:
        raise ScenarioError("$.fd_step", "step must lie in (0, 0.1)")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("$.seed", "expected an integer")

    return Scenario(
        name=name,
        germ=germ,
        base_point=base_point,
        connections=connections,
        checks=checks,
        expect_class=expect_class,
        tolerances=tolerances,
        fd_step=fd_step,
        seed=seed,
    )


def load_scenario_file(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("$", f"invalid JSON: {exc}") from exc
    return load_scenario(doc, name=path)


def bundled_scenario_names() -> list[str]:
    root = resources.files("apmlab").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled_scenario(name: str) -> Scenario:
    path = resources.files("apmlab").joinpath("scenarios", f"{name}.json")
    if not path.is_file():
        known = ", ".join(bundled_scenario_names())
        raise ScenarioError("$", f"unknown bundled scenario {name!r} (known: {known})")
    return load_scenario(json.loads(path.read_text()), name=name)


def resolve_scenario(ref: str) -> Scenario:
    """Treat ``ref`` as a file path if one exists, else as a bundled name."""
    import os

    if os.path.exists(ref):
        return load_scenario_file(ref)
    return load_bundled_scenario(ref)


def run_scenario(scenario: Scenario, tol_scale: float = 1.0,
                 seed: int | None = None) -> list[CheckReport]:
    ctx = scenario.context(tol_scale=tol_scale, seed=seed)
    return run_checks(ctx, scenario.checks)
