"""``solitonforge`` command line.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on input errors
(unknown ids, unreadable or invalid case files, bad grids, invalid flow windows).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog as K
from . import soliton as S
from .casefile import CaseFileError, dump, load
from .checks import (
    curvature_table,
    distinct_metrics,
    flow_summary,
    invariance_check,
    run_case,
)
from .exprlang import ExprError, to_text
from .group import GroupError
from .metric import MetricError, make_metric
from .sampling import Box, check_box

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
CURVATURE_COUNTS = {2: 20, 3: 8, 4: 5}


class InputError(Exception):
    pass


# -- target resolution -----------------------------------------------------------


def _looks_like_file(name: str) -> bool:
    return name.endswith(".json") or "/" in name or Path(name).is_file()


def resolve(args, allow_group: bool = False):
    """Return a case or, with ``allow_group``, a catalog group entry."""
    if args.case and args.target:
        raise InputError("give either a target id or --case FILE, not both")
    if args.case or (args.target and _looks_like_file(args.target)):
        path = args.case or args.target
        try:
            return load(path)
        except CaseFileError as exc:
            raise InputError(f"{path}: {exc}") from None
    if not args.target:
        raise InputError("missing target: give a catalog id, --case FILE or --all")
    try:
        found = K.lookup(args.target)
    except K.NotFoundError as exc:
        raise InputError(str(exc)) from None
    if isinstance(found, K.CatalogEntry) and not allow_group:
        ids = ", ".join(c.id for c in found.cases)
        raise InputError(f"'{args.target}' is a group; pick one of its cases: {ids}")
    return found


def parse_grid(spec: str | None, base: Box) -> Box:
    """``N`` (points per axis over the default box) or ``lo:hi:n,...`` per axis."""
    if spec is None:
        return base
    spec = spec.strip()
    try:
        if ":" not in spec:
            n = int(spec)
            return Box(base.lo, base.hi, (n,) * base.dim)
        axes = [a.split(":") for a in spec.split(",")]
        if any(len(a) != 3 for a in axes):
            raise ValueError
        lo = tuple(float(a[0]) for a in axes)
        hi = tuple(float(a[1]) for a in axes)
        counts = tuple(int(a[2]) for a in axes)
    except ValueError:
        raise InputError(f"bad --grid '{spec}': use N or lo:hi:n per axis, comma separated") from None
    if len(lo) != base.dim:
        raise InputError(f"--grid has {len(lo)} axes, the group has {base.dim}")
    return Box(lo, hi, counts)


def _checked_box(box: Box, positive) -> Box:
    try:
        check_box(box, positive)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return box


# -- output helpers -------------------------------------------------------------------


def emit(doc, args) -> None:
    text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _plane_names(n: int) -> list[str]:
    return [f"K{p}{q}" for p in range(1, n + 1) for q in range(p + 1, n + 1)]


# -- commands ------------------------------------------------------------------------


def cmd_list(args) -> int:
    for e in K.catalog_entries():
        print(f"{e.id}  (dim {e.group.dim}, coords {', '.join(e.group.coords)})")
        for c in e.cases:
            print(f"    {c.id:<28} {c.title}")
    return EXIT_OK


def _describe_case(c: S.SolitonCase) -> list[str]:
    lines = [
        f"case {c.id}: {c.title}" if c.title else f"case {c.id}",
        f"  f = {to_text(c.metric.f)}",
        f"  X ({c.x_kind} components) = ({', '.join(to_text(e) for e in c.X)})",
        f"  lambda = {to_text(c.lam)}",
        f"  class: {c.expected_class}",
        "  gradient: " + {True: "yes", False: "no", None: "not stated"}[c.expected_gradient],
    ]
    if c.phi is not None:
        lines.append(f"  Phi = {to_text(c.phi)}")
    for (p, q), e in c.expected_kappa:
        lines.append(f"  K(E{p + 1}, E{q + 1}) = {to_text(e)}")
    if c.notes:
        lines.append(f"  notes: {c.notes}")
    return lines


def _describe_group(e: K.CatalogEntry) -> list[str]:
    g = e.group
    lines = [f"group {e.id}", f"  {e.description}" if e.description else None]
    lines.append(f"  coordinates: {', '.join(g.coords)}; identity ({', '.join(f'{v:g}' for v in g.identity)})")
    if g.positive:
        lines.append("  domain: " + ", ".join(f"{g.coords[k]} > 0" for k in g.positive))
    for i, row in enumerate(g.frame_text()):
        terms = [f"{t} d{c}" for t, c in zip(row, g.coords) if t != "0"]
        lines.append(f"  E{i + 1} = " + (" + ".join(terms) or "0"))
    for i, j, k in zip(*np.nonzero(g.alpha)):
        if i < j:
            lines.append(f"  [E{i + 1}, E{j + 1}] has E{k + 1} coefficient {g.alpha[i, j, k]:g}")
    if not np.any(g.alpha):
        lines.append("  abelian: all brackets vanish")
    if g.mul is not None:
        lines.append("  multiplication: (" + ", ".join(to_text(m) for m in g.mul) + ")")
    for (p, q), k in e.curvature_expectations:
        lines.append(f"  f = 1: K(E{p + 1}, E{q + 1}) = {to_text(k)}")
    return [ln for ln in lines if ln is not None]


def cmd_describe(args) -> int:
    target = resolve(args, allow_group=True)
    if args.export and isinstance(target, K.CatalogEntry):
        raise InputError("--export needs a case id, not a group")
    if isinstance(target, K.CatalogEntry):
        lines = _describe_group(target)
        for c in target.cases:
            lines.append("")
            lines.extend(_describe_case(c))
    else:
        lines = _describe_group(K.entry_for(target)) if target.group.name in K.GROUPS else [f"group {target.group.name}"]
        lines.append("")
        lines.extend(_describe_case(target))
        if args.export:
            dump(target, args.export)
            note(f"wrote case file {args.export}")
    print("\n".join(lines))
    return EXIT_OK


def _check_one(case: S.SolitonCase, args):
    box = _checked_box(parse_grid(args.grid, case.sample_box()), case.group.positive)
    want_rows = bool(args.csv or args.figure)
    return run_case(case, box=box, tol=args.tol, seed=args.seed, rows=want_rows)


def _report_rows(rep, with_case: bool):
    rows = rep.rows
    for i in range(len(rows["point"])):
        row = ([rep.case_id] if with_case else []) + list(rows["point"][i])
        row += [rows["residual"][i], rows["certificate"][i], *rows["sectional"][i], rows["scalar"][i]]
        yield row


def cmd_check(args) -> int:
    t0 = time.perf_counter()
    if args.all:
        if args.target or args.case:
            raise InputError("--all takes no target")
        reports = [_check_one(c, args) for c in K.all_cases()]
    else:
        target = resolve(args)
        reports = [_check_one(target, args)]
    failed = [r for r in reports if not r.passed]
    if args.all:
        doc = {
            "reports": [r.to_json() for r in reports],
            "summary": {"cases": len(reports), "passed": len(reports) - len(failed),
                        "failed": [r.case_id for r in failed]},
        }
    else:
        doc = reports[0].to_json()
    emit(doc, args)
    if args.csv:
        if args.all:
            # groups differ in dimension; pad points and planes to the widest one
            width = max(r.case.group.dim for r in reports)
            header = ["case"] + [f"u{k + 1}" for k in range(width)] + ["residual", "certificate"]
            header += _plane_names(width) + ["scalar"]
            rows = []
            for r in reports:
                n = r.case.group.dim
                names = _plane_names(n)
                for row in _report_rows(r, True):
                    pt, rest = row[1 : 1 + n], row[1 + n :]
                    res, cert, ks, sc = rest[0], rest[1], rest[2 : 2 + len(names)], rest[-1]
                    kmap = dict(zip(names, ks))
                    rows.append([row[0], *pt, *([""] * (width - n)), res, cert,
                                 *[kmap.get(p, "") for p in _plane_names(width)], sc])
            write_csv(args.csv, header, rows)
        else:
            r = reports[0]
            g = r.case.group
            header = list(g.coords) + ["residual", "certificate"] + _plane_names(g.dim) + ["scalar"]
            write_csv(args.csv, header, _report_rows(r, False))
    if args.figure:
        from . import plotting

        if args.all:
            plotting.bar_chart([r.case_id for r in reports],
                               [r.checks[0].value for r in reports], reports[0].case.tolerances.residual
                               if args.tol is None else args.tol, args.figure,
                               "max soliton residual per case", "max |residual|")
        else:
            r = reports[0]
            plotting.heatmap(r.rows["point"], r.rows["residual"], args.figure, r.case.group.coords,
                             f"{r.case_id}: max |residual| per point", "|residual|")
    for r in failed:
        for c in r.failures():
            where = " at (" + ", ".join(f"{v:.6g}" for v in c.point) + ")" if c.point is not None else ""
            entry = f" entry {c.entry}" if c.entry is not None else ""
            value = "" if c.value is None else f" {c.value:.6g}"
            note(f"FAIL {r.case_id} {c.name}:{value}{entry}{where} {c.detail}".rstrip())
    note(f"{len(reports) - len(failed)}/{len(reports)} cases passed in {time.perf_counter() - t0:.2f} s")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_curvature(args) -> int:
    target = resolve(args, allow_group=True)
    if isinstance(target, K.CatalogEntry):
        m = make_metric(target.group, "1")
        label = target.id
        base = target.group.box(CURVATURE_COUNTS.get(target.group.dim, 4))
        tol = S.Tolerances().oracle
    else:
        m = target.metric
        label = target.id
        box = target.sample_box()
        base = box if target.box is not None else target.group.box(CURVATURE_COUNTS.get(target.group.dim, 4))
        tol = target.tolerances.oracle
    box = _checked_box(parse_grid(args.grid, base), m.group.positive)
    table = curvature_table(m, box.grid())
    n = m.group.dim
    doc = {"target": label, "group": m.group.name, "f": to_text(m.f),
           "grid": {"lo": list(box.lo), "hi": list(box.hi), "counts": list(box.counts)},
           "oracle_tol": tol, **table.to_json(n)}
    ok = doc["max_oracle_deviation"] < tol
    doc["status"] = "pass" if ok else "fail"
    emit(doc, args)
    iu = np.triu_indices(n, 1)
    ju = np.triu_indices(n)
    if args.csv:
        header = list(m.group.coords) + _plane_names(n)
        header += [f"Ric{p + 1}{q + 1}" for p, q in zip(*ju)] + ["scalar", "oracle_deviation"]
        rows = (
            [*table.points[i], *table.sectional[i][iu], *table.ricci[i][ju], table.scalar[i], table.oracle_deviation[i]]
            for i in range(len(table.points))
        )
        write_csv(args.csv, header, rows)
    if args.figure:
        from . import plotting

        cols = {name: table.sectional[:, a, b] for name, a, b in zip(_plane_names(n), *iu)}
        cols["scalar"] = table.scalar
        plotting.panel_heatmaps(table.points, cols, args.figure, m.group.coords, f"{label}: f = {to_text(m.f)}")
    return EXIT_OK if ok else EXIT_FAIL


def _flow_one(case: S.SolitonCase, args) -> dict:
    try:
        return flow_summary(case, args.t_max, args.steps)
    except S.FlowDomainError as exc:
        raise InputError(f"{case.id}: {exc}") from None
    except S.SolitonError as exc:
        raise InputError(f"{case.id}: {exc}") from None


def cmd_flow(args) -> int:
    if args.all:
        docs = []
        for c in K.all_cases():
            if c.is_almost:
                docs.append({"case": c.id, "status": "skipped", "detail": "lambda is not constant"})
                continue
            try:
                docs.append(_flow_one(c, args))
            except InputError as exc:
                docs.append({"case": c.id, "status": "skipped", "detail": str(exc)})
        doc = {"reports": docs}
        failed = [d for d in docs if d["status"] == "fail"]
    else:
        doc = _flow_one(resolve(args), args)
        docs = [doc]
        failed = [doc] if doc["status"] == "fail" else []
    emit(doc, args)
    ran = [d for d in docs if "samples" in d]
    if args.csv:
        write_csv(args.csv, ["case", "t", "deviation"],
                  ([d["case"], s["t"], s["deviation"]] for d in ran for s in d["samples"]))
    if args.figure and ran:
        from . import plotting

        if len(ran) == 1:
            d = ran[0]
            plotting.line_plot([s["t"] for s in d["samples"]], [s["deviation"] for s in d["samples"]], args.figure,
                               d["tol"], f"{d['case']}: |d/dt g_t + 2 Ric|", "t", "max deviation")
        else:
            plotting.bar_chart([d["case"] for d in ran], [d["max_deviation"] for d in ran], ran[0]["tol"],
                               args.figure, "flow identity deviation", "max deviation")
    for d in failed:
        note(f"FAIL {d['case']} flow: max deviation {d['max_deviation']:.3g} (tol {d['tol']:g})")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_invariance(args) -> int:
    if args.all:
        metrics = distinct_metrics(K.all_cases())
    else:
        target = resolve(args, allow_group=True)
        metrics = [make_metric(target.group, "1")] if isinstance(target, K.CatalogEntry) else [target.metric]
    seed = 0 if args.seed is None else args.seed
    docs = [invariance_check(m, seed) for m in metrics]
    emit({"seed": seed, "reports": docs} if args.all else docs[0], args)
    if args.csv:
        keys = ["group", "f", "pairs", "f_left_invariance", "commutator_defect", "frame_left_invariance_defect",
                "status"]
        write_csv(args.csv, keys, ([d[k] for k in keys] for d in docs))
    if args.figure:
        from . import plotting

        plotting.bar_chart([f"{d['group']} | f={d['f']}" for d in docs], [d["f_left_invariance"] for d in docs],
                           1e-9, args.figure, "f-left invariance residual", "residual")
    failed = [d for d in docs if d["status"] != "pass"]
    for d in failed:
        note(f"FAIL {d['group']} f={d['f']}: residual {d['f_left_invariance']:.3g}")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "list": cmd_list,
    "describe": cmd_describe,
    "check": cmd_check,
    "curvature": cmd_curvature,
    "flow": cmd_flow,
    "invariance": cmd_invariance,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solitonforge", description="Curvature and Ricci soliton checks.")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("target", nargs="?", help="catalog id or case file")
    p.add_argument("--all", action="store_true", help="run over the whole catalog")
    p.add_argument("--case", metavar="FILE", help="JSON case file")
    p.add_argument("--grid", metavar="SPEC", help="N, or lo:hi:n per axis separated by commas")
    p.add_argument("--tol", type=float, help="override the residual tolerance")
    p.add_argument("--seed", type=int, help="seed for the random oracle points")
    p.add_argument("--csv", metavar="PATH", help="write per-point rows")
    p.add_argument("--json", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--figure", metavar="PATH", help="render a figure (PNG, PDF or SVG by extension)")
    p.add_argument("--t-max", type=float, default=0.2, help="flow: final time")
    p.add_argument("--steps", type=int, default=64, help="flow: RK4 steps")
    p.add_argument("--export", metavar="PATH", help="describe: write the case as a case file")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        note(f"error: {exc}")
        return EXIT_INPUT
    except (CaseFileError, ExprError, GroupError, MetricError, S.SolitonError, ValueError, OSError) as exc:
        note(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
