"""Declarative system definitions (JSON, schema version 1).

Coefficients are expressions in the base coordinates ``x_0 .. x_{n-1}``:
either a plain number or a list of terms

    {"coef": c, "powers": [p_0, ..., p_{n-1}], "trig": [{"fn": "sin", "var": j, "freq": w}]}

meaning ``c * prod_j x_j**p_j * prod sin(w x_j)``.  Omitted ``powers`` and
``trig`` mean 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .algebroid import LieAlgebroid, PrincipalBundleData, Subbundle, build_atiyah
from .dynamics import ConstrainedState, LagrangianSystem
from .errors import InvalidInputError
from .optimal_control import MechanicalLagrangian
from .smooth import MatrixField, ScalarField, cos, sin

_TRIG = {"sin": sin, "cos": cos}

_EXPR = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {
            "type": "object",
            "additionalProperties": False,
            "required": ["coef"],
            "properties": {
                "coef": {"type": "number"},
                "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "trig": {"type": "array", "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["fn", "var"],
                    "properties": {
                        "fn": {"enum": ["sin", "cos"]},
                        "var": {"type": "integer", "minimum": 0},
                        "freq": {"type": "number"},
                    },
                }},
            },
        }},
    ]
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"$ref": "#/$defs/expr"}}}
_NUMS = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"expr": _EXPR, "matrix": _MATRIX},
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "n", "m", "k"],
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 0},
        "m": {"type": "integer", "minimum": 0},
        "k": {"type": "integer", "minimum": 0},
        "anchor": {"$ref": "#/$defs/matrix"},
        "structure": {"type": "array", "items": {"$ref": "#/$defs/matrix"}},
        "atiyah": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lie_constants", "connection"],
            "properties": {
                "lie_constants": {"type": "array", "items": {"type": "array", "items": _NUMS}},
                "connection": {"$ref": "#/$defs/matrix"},
            },
        },
        "injection": {"$ref": "#/$defs/matrix"},
        "mass_matrix": {"$ref": "#/$defs/matrix"},
        "potential": {"$ref": "#/$defs/expr"},
        "box": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x": _NUMS, "w": _NUMS},
        },
    },
}


def _expr(spec, n: int):
    """Jet-transparent closure ``x -> value`` for one expression."""
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda x: c
    terms = []
    for t in spec:
        powers = list(t.get("powers", []))
        if len(powers) > n:
            raise InvalidInputError(f"term has {len(powers)} powers but n={n}")
        trig = []
        for tr in t.get("trig", []):
            if tr["var"] >= n:
                raise InvalidInputError(f"trig variable {tr['var']} out of range for n={n}")
            trig.append((_TRIG[tr["fn"]], tr["var"], float(tr.get("freq", 1.0))))
        terms.append((float(t["coef"]), powers, trig))

    def f(x):
        total = 0.0
        for coef, powers, trig in terms:
            term = coef
            for j, p in enumerate(powers):
                if p:
                    term = term * x[j] ** p
            for fn, j, w in trig:
                term = term * fn(w * x[j])
            total = total + term
        return total

    return f


def _matrix(spec, shape, n: int, what: str) -> MatrixField:
    rows, cols = shape
    if len(spec) != rows or any(len(r) != cols for r in spec):
        raise InvalidInputError(f"{what} must have shape {shape}")
    cells = [[_expr(e, n) for e in row] for row in spec]
    return MatrixField(shape, n, func=lambda x: [[c(x) for c in row] for row in cells], name=what)


@dataclass(frozen=True)
class Definition:
    name: str
    algebroid: LieAlgebroid
    k: int
    injection: MatrixField
    mechanical: MechanicalLagrangian | None
    box: tuple[float, float]
    initial: ConstrainedState | None

    def system(self) -> LagrangianSystem:
        if self.mechanical is None:
            raise InvalidInputError("definition has no mass_matrix; it only describes an algebroid")
        return LagrangianSystem(Subbundle(self.algebroid, self.k, self.injection),
                                self.mechanical.lagrangian(self.algebroid.n), name=self.name,
                                box=self.box, initial=self.initial)


def parse_definition(doc: dict) -> Definition:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InvalidInputError(f"invalid definition at '{path}': {exc.message}") from None
    n, m, k = doc["n"], doc["m"], doc["k"]
    name = doc.get("name", "custom")
    if "atiyah" in doc:
        if "anchor" in doc or "structure" in doc:
            raise InvalidInputError("atiyah definitions derive anchor and structure; do not give both")
        C = np.asarray(doc["atiyah"]["lie_constants"], dtype=float)
        r = C.shape[0] if C.size else 0
        if m != n + r:
            raise InvalidInputError(f"atiyah algebroid has rank n + r = {n + r}, but m = {m}")
        conn = _matrix(doc["atiyah"]["connection"], (r, n), n, "connection")
        A = build_atiyah(PrincipalBundleData(n, r, C.reshape(r, r, r), conn), name=name)
    else:
        if "anchor" not in doc:
            raise InvalidInputError("either anchor or atiyah is required")
        anchor = _matrix(doc["anchor"], (n, m), n, "anchor")
        if "structure" in doc:
            if len(doc["structure"]) != m:
                raise InvalidInputError(f"structure needs {m} slices")
            slices = tuple(_matrix(s, (m, m), n, f"structure[{c}]") for c, s in enumerate(doc["structure"]))
        else:
            zero = MatrixField.constant(np.zeros((m, m)), n)
            slices = tuple(zero for _ in range(m))
        A = LieAlgebroid(n, m, anchor, slices, name=name)
    if "injection" in doc:
        inj = _matrix(doc["injection"], (m, k), n, "injection")
    elif k == m:
        inj = MatrixField.constant(np.eye(m), n, name="identity")
    else:
        raise InvalidInputError("injection is required when k != m")
    mech = None
    if "mass_matrix" in doc:
        pot = ScalarField(n, _expr(doc["potential"], n), name="potential") if "potential" in doc else None
        mech = MechanicalLagrangian(_matrix(doc["mass_matrix"], (m, m), n, "mass_matrix"), pot)
    elif "potential" in doc:
        raise InvalidInputError("potential requires mass_matrix")
    box = tuple(doc.get("box", (-1.0, 1.0)))
    init = None
    if "initial" in doc:
        x = doc["initial"].get("x", [0.0] * n)
        w = doc["initial"].get("w", [0.0] * k)
        if len(x) != n or len(w) != k:
            raise InvalidInputError(f"initial state needs {n} x entries and {k} w entries")
        init = ConstrainedState(np.array(x, dtype=float), np.array(w, dtype=float))
    return Definition(name, A, k, inj, mech, box, init)


def load_definition(path) -> Definition:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from None
    return parse_definition(doc)
