"""Command-line batch runner.

::

    colombeau run scenario.yaml [--out DIR]
    colombeau validate scenario.yaml
    colombeau explain DIR/report.json TASK_ID

Exit codes: 0 success (tasks may be FAIL or DEGRADED), 1 internal error,
2 scenario syntax error (with line and column), 3 validation error.
Nothing is written unless every task has run.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import classify_net
from .dual import regularization_report
from .errors import ColombeauError, ScenarioParseError, ScenarioValidationError
from .genfun import CellGrid, classify, net_from_expression, seminorm_fits
from .microlocal import Cone, default_cones, project_singsupp, singsupp_direct, wavefront
from .mollifier import Mollifier
from .parallel import thread_count
from .psido import (
    _default_chi,
    apply_to_functional,
    check_hypoelliptic,
    check_micro_ellipticity,
    class_estimates,
    micro_support,
    quantize_apply,
    theorem_harness,
)
from .scenario import FUNCTIONAL, NET, Scenario, load_scenario

__all__ = ["main", "run_scenario", "canonical_json", "EXIT_OK", "EXIT_INTERNAL", "EXIT_PARSE", "EXIT_VALIDATION"]

EXIT_OK, EXIT_INTERNAL, EXIT_PARSE, EXIT_VALIDATION = 0, 1, 2, 3
SIGNIFICANT = 12
FITS_HEADER = ("task", "object", "quantity", "location", "cone", "l", "exponent", "residual")


# ----------------------------------------------------------------- formats

def _fmt(x: float) -> str:
    return f"{x:.{SIGNIFICANT}g}"


def _plain(obj):
    """JSON-ready copy: floats rounded to 12 significant digits, inf/nan as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((_plain(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        x = float(_fmt(x))
        return 0.0 if x == 0 else x
    if isinstance(obj, complex):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return _plain(obj.as_dict())
    return str(obj)


def canonical_json(obj) -> str:
    """Sorted keys, two-space indent, UTF-8 safe, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _fmt(x)
    if isinstance(v, (tuple, list)):
        return " ".join(_csv_cell(t) for t in v)
    return str(v)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FITS_HEADER)
    for r in rows:
        w.writerow([_csv_cell(r.get(k)) for k in FITS_HEADER])
    return buf.getvalue()


def _cells(cells) -> list:
    return sorted(list(c) for c in cells)


def _box_text(box) -> str:
    return " x ".join(f"[{_fmt(a)},{_fmt(b)}]" for a, b in box)


# ------------------------------------------------------------------- tasks

class _Runner:
    def __init__(self, scen: Scenario):
        self.s = scen
        self.objects = dict(scen.objects)
        self.fits = []
        self.wf_files = {}

    def _fit_rows(self, task, obj, quantity, fits, location="", cone=""):
        for l, f in fits.items():
            self.fits.append({
                "task": task, "object": obj, "quantity": quantity, "location": location,
                "cone": cone, "l": l, "exponent": f.exponent, "residual": f.residual,
            })

    def run(self, t: dict) -> dict:
        handler = getattr(self, "_t_" + t["type"].replace("-", "_"))
        entry = {"id": t["id"], "type": t["type"]}
        mark = len(self.fits)
        try:
            status, result = handler(t)
        except (ScenarioValidationError, ScenarioParseError):
            raise
        except (ColombeauError, FloatingPointError) as exc:
            del self.fits[mark:]
            entry.update(status="DEGRADED", reason=f"{type(exc).__name__}: {exc}", result={})
            return entry
        entry.update(status=status, result=result)
        if status == "DEGRADED":
            entry["reason"] = "; ".join(result.get("notes", [])) or "numerical guard"
        return entry

    def _obj(self, name):
        return self.objects[name][1]

    def _t_classify(self, t):
        u = self._obj(t["object"])
        K = t["K"] or self.s.grid.box
        fits = seminorm_fits(u, K, t["max_order"])
        mc = classify_net(fits, t["q_max"], self.s.tolerances)
        self._fit_rows(t["id"], t["object"], "seminorm", fits, location=_box_text(K))
        return "OK", {
            "object": t["object"],
            "K": K,
            "class": mc.as_dict(),
            "fits": {str(i): f.as_dict() for i, f in fits.items()},
        }

    def _cones(self, t):
        n = self.s.grid.dimension
        if t.get("cones") is None:
            return default_cones(n)
        c = t["cones"]
        return [Cone(2 * math.pi * k / c, math.pi / c, 2) for k in range(c)]

    def _t_wavefront(self, t):
        T = self._obj(t["object"])
        w = wavefront(T, t["cells"], self._cones(t), t["mode"], t["radii"], t["l_grid"], self.s.tolerances)
        for row in w.fit_rows():
            self.fits.append({
                "task": t["id"], "object": t["object"], "quantity": "cone",
                "location": row["x_center"], "cone": row["cone"], "l": row["l"],
                "exponent": row["exponent"], "residual": row["residual"],
            })
        fname = f"wf_{t['name']}.json"
        self.wf_files[fname] = {"object": t["object"], "task": t["id"], "wavefront": w.as_dict()}
        result = {"object": t["object"], "file": fname, "mode": t["mode"], "degraded": w.degraded, "notes": list(w.notes)}
        if t["mode"] in ("G", "joint"):
            result["singsupp_G"] = _cells(project_singsupp(w, "G"))
        if t["mode"] in ("Ginf", "joint"):
            result["singsupp_Ginf"] = _cells(project_singsupp(w, "Ginf"))
        return ("DEGRADED" if w.degraded else "OK"), result

    def _t_singsupp(self, t):
        T = self._obj(t["object"])
        modes = ("G", "Ginf") if t["mode"] == "both" else (t["mode"],)
        result = {"object": t["object"], "cells": {"box": t["cells"].box, "counts": t["cells"].counts}}
        status = "OK"
        for m in modes:
            result[f"direct_{m}"] = _cells(singsupp_direct(T, t["cells"], m, tol=self.s.tolerances))
        if t["compare_projection"]:
            w = wavefront(T, t["cells"], None, "joint", tol=self.s.tolerances)
            agree = True
            for m in modes:
                proj = _cells(project_singsupp(w, m))
                result[f"projected_{m}"] = proj
                agree &= proj == result[f"direct_{m}"]
            result["projection_agrees"] = agree
            status = "PASS" if agree else "FAIL"
            if w.degraded:
                status = "DEGRADED"
                result["notes"] = list(w.notes)
        return status, result

    def _t_regularize(self, t):
        T = self._obj(t["object"])
        g = self.s.grid
        probes = [net_from_expression(p, g, self.s.ladder) for p in t["probes"]]
        rep = regularization_report(T, Mollifier(g.dimension, t["radius"]), t["q"], probes)
        for p, expr in zip(rep["probes"], t["probes"]):
            p["probe"] = expr
            for q, v in zip(t["q"], p["valuations"]):
                self.fits.append({
                    "task": t["id"], "object": t["object"], "quantity": "regularization",
                    "location": expr, "cone": "", "l": q, "exponent": v, "residual": None,
                })
        rep["monotone"] = all(p["monotone"] for p in rep["probes"])
        return "OK", rep

    def _t_psido_apply(self, t):
        a = self.s.symbols[t["symbol"]]
        kind, obj = self.objects[t["object"]]
        g = self.s.grid
        if kind == NET:
            v = quantize_apply(a, obj)
            K = t["K"] or g.box
            fits = seminorm_fits(v, K)
            mc = classify_net(fits, None, self.s.tolerances)
            self._fit_rows(t["id"], t["define"] or f"{t['symbol']}({t['object']})", "seminorm", fits, location=_box_text(K))
            result = {"kind": NET, "K": K, "class": mc.as_dict()}
            out = v
        else:
            chi = t["chi"] or _default_chi(t.get("cells") or CellGrid(g.box, (1,) * g.dimension))
            out = apply_to_functional(a, obj, chi, grid=g)
            result = {"kind": FUNCTIONAL, "name": out.name, "certificate": out.certificate}
            if t.get("cells") is not None:
                for m in ("G", "Ginf"):
                    result[f"singsupp_{m}"] = _cells(singsupp_direct(out, t["cells"], m, tol=self.s.tolerances))
        if t["define"]:
            self.objects[t["define"]] = (kind, out)
            result["defined"] = t["define"]
        result.update(symbol=t["symbol"], object=t["object"])
        return "OK", result

    def _t_certify_symbol(self, t):
        a = self.s.symbols[t["symbol"]]
        lad, tol = self.s.ladder, self.s.tolerances
        result = {"symbol": a.as_dict()}
        verdicts = []
        for check in t["checks"]:
            if check == "class":
                rep = class_estimates(a, t["K"], lad, tol)
                self._fit_rows(t["id"], t["symbol"], "symbol_class", rep.fits, location=_box_text(t["K"]))
            elif check == "micro_ellipticity":
                rep = check_micro_ellipticity(a, t["region"], t["cone"], lad, xi_top=t["xi_top"], steps=t["steps"], tol=tol)
                verdicts.append(rep.passed)
            elif check == "hypoelliptic":
                l = a.order if t["l"] is None else t["l"]
                rep = check_hypoelliptic(a, t["K"], l, lad, xi_top=t["xi_top"], steps=t["steps"], tol=tol)
                verdicts.append(rep.passed)
            else:
                rep = micro_support(a, t["cells"], lad, mode=t["mode"], xi_factor=t["xi_factor"], tol=tol)
            result[check] = rep.as_dict()
        status = "OK" if not verdicts else ("PASS" if all(verdicts) else "FAIL")
        return status, result

    def _t_theorem_check(self, t):
        g = self.s.grid
        if t["case"] == "parametrix_identity":
            inputs = {"A": self.s.symbols[t["A"]], "P": self.s.symbols[t["P"]], "u": self._obj(t["u"])}
            if t["K"] is not None:
                inputs["K"] = t["K"]
        else:
            inputs = {"T": self._obj(t["object"]), "cells": t["cells"], "grid": g, "modes": t["modes"]}
            if "symbol" in t:
                inputs["a"] = inputs["p"] = self.s.symbols[t["symbol"]]
            if t["chi"] is not None:
                inputs["chi"] = t["chi"]
        rep = theorem_harness(t["case"], inputs, self.s.tolerances)
        return ("PASS" if rep.passed else "FAIL"), rep.as_dict()


def _default_out(path: Path, scen: Scenario) -> Path:
    if scen.output:
        out = Path(scen.output)
        return out if out.is_absolute() else path.parent / out
    return Path.cwd() / f"{path.stem}.out"


def run_scenario(path, out_dir=None, now=None) -> tuple:
    """Run a scenario and write its outputs.

    Returns
    -------
    (exit code, output directory or None, report dict or None)
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    scen = load_scenario(path)
    thread_count()
    runner = _Runner(scen)
    tasks = [runner.run(t) for t in scen.tasks]
    counts = {}
    for e in tasks:
        counts[e["status"]] = counts.get(e["status"], 0) + 1
    stamp = now or _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    meta = scen.metadata()
    meta.update(
        version=__version__,
        scenario=path.name,
        scenario_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        timestamp=stamp,
        significant_digits=SIGNIFICANT,
        outputs=["report.json", "fits.csv", *sorted(runner.wf_files)],
    )
    report = {"meta": meta, "tasks": tasks, "summary": {"tasks": len(tasks), "status": counts}}
    files = {"report.json": canonical_json(report), "fits.csv": _csv_text(runner.fits)}
    files.update({k: canonical_json(v) for k, v in runner.wf_files.items()})
    out = Path(out_dir) if out_dir is not None else _default_out(path, scen)
    out.mkdir(parents=True, exist_ok=True)
    for name, body in files.items():
        tmp = out / (name + ".tmp")
        tmp.write_text(body, encoding="utf-8")
        os.replace(tmp, out / name)
    return EXIT_OK, out, json.loads(files["report.json"])


# ----------------------------------------------------------------- explain

def explain(report: dict, task_id: str) -> str:
    """Human-readable summary of one task entry."""
    entry = next((e for e in report.get("tasks", []) if e["id"] == task_id), None)
    if entry is None:
        raise KeyError(task_id)
    r = entry.get("result", {})
    lines = [f"task {entry['id']} ({entry['type']}): {entry['status']}"]
    if entry.get("reason"):
        lines.append(f"  reason: {entry['reason']}")
    kind = entry["type"]
    if kind == "classify" and "class" in r:
        c = r["class"]
        lines.append(f"  object {r['object']} on K = {r['K']}: {c['tag']}")
        if c.get("uniform_exponent") is not None:
            lines.append(f"  uniform exponent N = {c['uniform_exponent']}")
        for i, f in sorted(r["fits"].items()):
            lines.append(f"  order {i}: exponent {f['exponent']}, residual {f['residual']}")
    elif kind == "wavefront" and "file" in r:
        lines.append(f"  object {r['object']}, mode {r['mode']}, details in {r['file']}")
        for m in ("G", "Ginf"):
            if f"singsupp_{m}" in r:
                lines.append(f"  cells with {m}-singular directions: {r[f'singsupp_{m}'] or 'none'}")
    elif kind == "singsupp":
        for k in sorted(r):
            if k.startswith(("direct_", "projected_")):
                lines.append(f"  {k}: {r[k] or 'none'}")
        if "projection_agrees" in r:
            lines.append(f"  projection agrees with direct estimate: {r['projection_agrees']}")
    elif kind == "regularize" and "probes" in r:
        lines.append(f"  q grid {r['q']}")
        for p in r["probes"]:
            lines.append(f"  probe {p['probe']}: valuations {p['valuations']}, N_u {p['N_u']}, increasing {p['monotone']}")
    elif kind == "psido-apply" and "kind" in r:
        lines.append(f"  symbol {r['symbol']} applied to {r['object']} ({r['kind']})")
        if "class" in r:
            lines.append(f"  result class: {r['class']['tag']}")
        for m in ("G", "Ginf"):
            if f"singsupp_{m}" in r:
                lines.append(f"  sing supp {m}: {r[f'singsupp_{m}'] or 'none'}")
        if r.get("defined"):
            lines.append(f"  defined as {r['defined']}")
    elif kind == "certify-symbol":
        for check in ("class", "micro_ellipticity", "hypoelliptic", "micro_support"):
            if check not in r:
                continue
            c = r[check]
            if "pass" in c:
                lines.append(f"  {check}: {'pass' if c['pass'] else 'fail'}" + (f" ({c['note']})" if c.get("note") else ""))
                if c.get("witness"):
                    lines.append(f"    witness {c['witness']}")
            elif check == "class":
                lines.append(f"  class estimates: bounded {c['bounded']}, N {c['N']}")
            else:
                smooth = sum(1 for e in c["entries"] if e[c["mode"]])
                lines.append(f"  micro_support: {c['mode']}-smoothing on {smooth} of {len(c['entries'])} (cell, cone) pairs")
    elif kind == "theorem-check" and "case" in r:
        lines.append(f"  case {r['case']}")
        for c in r.get("checks", []):
            ok = "holds" if c.get("holds", c.get("pass")) else "violated"
            lines.append(f"  {c.get('name', '?')}: {ok}")
            for w in c.get("witnesses", [])[:5]:
                lines.append(f"    witness {w}")
    return "\n".join(lines)


# -------------------------------------------------------------------- main

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="colombeau", description="Generalized-function and microlocal analysis batch runner.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write report.json, fits.csv and wf_<name>.json")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (default: scenario 'output' or <stem>.out)")
    v = sub.add_parser("validate", help="parse and validate a scenario without running it")
    v.add_argument("scenario")
    e = sub.add_parser("explain", help="summarize one task of a report")
    e.add_argument("report")
    e.add_argument("task_id")
    return p


def _scenario_errors(fn, path):
    try:
        return fn()
    except ScenarioParseError as exc:
        print(f"{path}:{exc.line}:{exc.column}: error: {str(exc).split(': ', 1)[-1]}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioValidationError as exc:
        print(f"{path}: invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        if "COLOMBEAU_THREADS" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        raise


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "explain":
        try:
            report = json.loads(Path(args.report).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read report: {exc}", file=sys.stderr)
            return EXIT_PARSE
        try:
            print(explain(report, args.task_id))
        except KeyError:
            print(f"error: no task {args.task_id!r} in {args.report}", file=sys.stderr)
            return EXIT_VALIDATION
        return EXIT_OK
    path = Path(args.scenario)
    if not path.is_file():
        print(f"error: no such scenario file: {path}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command == "validate":
        def go():
            s = load_scenario(path)
            thread_count()
            print(f"{path}: ok ({len(s.tasks)} tasks, {len(s.objects)} objects, {len(s.symbols)} symbols)")
            return EXIT_OK
        return _scenario_errors(go, path)

    def go():
        code, out, report = run_scenario(path, args.out)
        summary = ", ".join(f"{k} {v}" for k, v in sorted(report["summary"]["status"].items())) or "no tasks"
        print(f"{len(report['tasks'])} tasks ({summary}); wrote {out}")
        return code

    try:
        return _scenario_errors(go, path)
    except Exception as exc:  # noqa: BLE001 - report and exit 1, nothing written
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
