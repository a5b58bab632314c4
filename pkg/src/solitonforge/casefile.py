"""JSON case files (schema version ``"v": 1``)."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .exprlang import ExprError, ExprSyntaxError, parse, to_text
from .group import GroupError, LieGroupSpec, make_group
from .metric import MetricError, make_metric
from .sampling import Box, check_box
from .soliton import SolitonCase, SolitonError, Tolerances, classify_value, make_case

VERSION = 1


class CaseFileError(ValueError):
    pass


def _schema(name: str) -> dict:
    text = resources.files("solitonforge").joinpath(f"schemas/{name}").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def case_schema() -> dict:
    return _schema("case.schema.json")


@lru_cache(maxsize=None)
def report_schema() -> dict:
    """Schema for the JSON the CLI writes; documents the report format."""
    return _schema("report.schema.json")


def validate_dict(data: dict) -> None:
    e = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(case_schema()).iter_errors(data))
    if e is not None:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise CaseFileError(f"schema violation at {where}: {e.message}")


def _group_to_dict(g: LieGroupSpec) -> str | dict:
    from .catalog import GROUPS, catalog_entries

    if g.name in GROUPS:
        for e in catalog_entries():
            if e.group == g:
                return e.id
    alpha = [[int(i) + 1, int(j) + 1, int(k) + 1, float(g.alpha[i, j, k])] for i, j, k in zip(*np.nonzero(g.alpha))]
    out = {
        "name": g.name,
        "dim": g.dim,
        "coords": list(g.coords),
        "domain": [g.coords[k] for k in g.positive],
        "identity": list(g.identity),
        "frame": g.frame_text(),
        "alpha": alpha,
    }
    if g.mul is not None:
        out["mul"] = [to_text(e) for e in g.mul]
    return out


def case_to_dict(case: SolitonCase) -> dict:
    out: dict = {"v": VERSION, "id": case.id}
    if case.title:
        out["title"] = case.title
    out["group"] = _group_to_dict(case.group)
    out["f"] = to_text(case.metric.f)
    out["X"] = [to_text(e) for e in case.X]
    out["X_kind"] = case.x_kind
    out["lambda"] = to_text(case.lam)
    if case.phi is not None:
        out["phi"] = to_text(case.phi)
    out["expected_class"] = case.expected_class
    out["expected_gradient"] = case.expected_gradient
    out["expected_kappa"] = [{"plane": [p + 1, q + 1], "value": to_text(e)} for (p, q), e in case.expected_kappa]
    if case.box is not None:
        out["grid"] = {"lo": list(case.box.lo), "hi": list(case.box.hi), "counts": list(case.box.counts)}
    t = case.tolerances
    out["tolerances"] = {"residual": t.residual, "oracle": t.oracle, "fd": t.fd}
    out["seed"] = case.seed
    if case.notes:
        out["notes"] = case.notes
    return out


def dumps(case: SolitonCase) -> str:
    return json.dumps(case_to_dict(case), indent=2, ensure_ascii=False) + "\n"


def _group_from(spec) -> LieGroupSpec:
    if isinstance(spec, str):
        from .catalog import CatalogEntry, NotFoundError, lookup

        try:
            entry = lookup(spec)
        except NotFoundError as exc:
            raise CaseFileError(f"group: {exc}") from None
        if not isinstance(entry, CatalogEntry):
            raise CaseFileError(f"group: '{spec}' names a case, not a group")
        return entry.group
    if len(spec["coords"]) != spec["dim"]:
        raise CaseFileError("group: 'coords' length does not match 'dim'")
    alpha = {}
    for i, j, k, v in spec["alpha"]:
        alpha[(i, j, k)] = v
    return make_group(
        spec.get("name", "inline"), spec["coords"], spec.get("domain", []), spec["identity"],
        spec["frame"], alpha, spec.get("mul"),
    )


def case_from_dict(data: dict) -> SolitonCase:
    """Build a case; any schema, parse or domain problem raises :class:`CaseFileError`."""
    validate_dict(data)
    field = "group"
    try:
        g = _group_from(data["group"])
        field = "f"
        m = make_metric(g, data["f"])
        coords = g.coords
        X = []
        for i, text in enumerate(data["X"]):
            field = f"X[{i}]"
            X.append(parse(text, coords))
        field = "lambda"
        lam = parse(data["lambda"], coords)
        field = "phi"
        phi = parse(data["phi"], coords) if "phi" in data else None
        kappa = {}
        for i, item in enumerate(data.get("expected_kappa", [])):
            field = f"expected_kappa[{i}]"
            kappa[tuple(item["plane"])] = parse(item["value"], coords)
        field = "grid"
        box = None
        if "grid" in data:
            gr = data["grid"]
            if not (len(gr["lo"]) == len(gr["hi"]) == len(gr["counts"]) == g.dim):
                raise CaseFileError(f"grid: ranges must have {g.dim} entries")
            box = Box(tuple(map(float, gr["lo"])), tuple(map(float, gr["hi"])), tuple(gr["counts"]))
            check_box(box, g.positive)
        field = "expected_class"
        cls = data.get("expected_class")
        tol = Tolerances(**data.get("tolerances", {}))
        kw = dict(
            title=data.get("title", ""), x_kind=data.get("X_kind", "frame"), box=box,
            tolerances=tol, seed=int(data.get("seed", 0)), notes=data.get("notes", ""),
        )
        case = make_case(
            data.get("id", "case"), m, X, lam, cls or "almost", data.get("expected_gradient"), phi, kappa,
            check_class=False, **kw,
        )
        if cls is None:
            from .soliton import _constancy_probe, lambda_is_constant, lambda_values

            probe = _constancy_probe(case)
            if lambda_is_constant(case, probe):
                cls = classify_value(float(lambda_values(case, probe[0])))
                case = make_case(case.id, m, X, lam, cls, case.expected_gradient, phi, kappa, check_class=False, **kw)
        return case
    except CaseFileError:
        raise
    except ExprSyntaxError as exc:
        raise CaseFileError(f"{field}: {exc}\n  {exc.text}\n  {' ' * exc.offset}^") from None
    except (ExprError, GroupError, MetricError, SolitonError, ValueError, ZeroDivisionError) as exc:
        raise CaseFileError(f"{field}: {exc}") from None


def loads(text: str) -> SolitonCase:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFileError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise CaseFileError("a case file must hold a JSON object")
    return case_from_dict(data)


def load(path: str | Path) -> SolitonCase:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFileError(f"cannot read case file '{p}': {exc.strerror}") from None
    return loads(text)


def dump(case: SolitonCase, path: str | Path) -> None:
    Path(path).write_text(dumps(case), encoding="utf-8")
