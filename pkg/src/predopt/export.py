"""MPS / LP text export of a :class:`Milp`, readers for round-trip checks, and
the solution document.

MPS output is free format: one coefficient per line, integer columns wrapped
in ``MARKER`` lines, explicit bounds for every column, and an ``OBJSENSE``
section.  Names are mangled to ``[A-Za-z0-9_]`` with numeric suffixes on
collision.  Numbers are written with ``repr`` so they round-trip exactly.
The readers only cover what the writers produce.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import milp as M
from .milp import Milp

__all__ = [
    "ExportError",
    "mangle_names",
    "export_mps",
    "read_mps",
    "export_lp_format",
    "read_lp_format",
    "write_solution",
    "read_solution",
    "SolutionRecord",
]

OBJ_ROW = "OBJ"
_LP_KEYWORDS = {"max", "maximize", "min", "minimize", "st", "subject", "bounds", "bound", "free", "inf",
                "infinity", "end", "binary", "binaries", "general", "generals", "obj"}


class ExportError(ValueError):
    pass


def _num(v: float) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0
    return repr(v)


def mangle_names(names, reserved=()) -> list[str]:
    """Map names to unique ``[A-Za-z0-9_]`` identifiers not starting with a digit."""
    taken = {r.lower() for r in reserved}
    out = []
    for name in names:
        base = re.sub(r"[^A-Za-z0-9_]", "_", str(name)) or "_"
        if base[0].isdigit():
            base = "_" + base
        cand, k = base, 1
        while cand.lower() in taken:
            k += 1
            cand = f"{base}_{k}"
        taken.add(cand.lower())
        out.append(cand)
    return out


def _names(milp: Milp):
    cols = mangle_names([c.name for c in milp.columns], reserved=_LP_KEYWORDS | {OBJ_ROW})
    rows = mangle_names([r.name for r in milp.rows], reserved=_LP_KEYWORDS | {OBJ_ROW})
    return cols, rows


# -- MPS ---------------------------------------------------------------------


def export_mps(milp: Milp) -> str:
    cnames, rnames = _names(milp)
    out = [f"NAME {mangle_names([milp.name])[0]}", "OBJSENSE", "    MAX" if milp.sense == "maximize" else "    MIN",
           "ROWS", f" N  {OBJ_ROW}"]
    code = {"<=": "L", ">=": "G", "==": "E"}
    for r, name in zip(milp.rows, rnames):
        out.append(f" {code[r.sense]}  {name}")

    # column-major coefficient lists
    by_col: list[list] = [[] for _ in milp.columns]
    for j, a in milp.objective.items():
        by_col[j].append((OBJ_ROW, a))
    for r, rname in zip(milp.rows, rnames):
        for j, a in r.terms:
            by_col[j].append((rname, a))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for c, cname, entries in zip(milp.columns, cnames, by_col):
        if c.is_discrete and not in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not c.is_discrete and in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            in_int = False
            marker += 1
        if not entries:
            entries = [(OBJ_ROW, 0.0)]
        for rname, a in entries:
            out.append(f"    {cname} {rname} {_num(a)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")

    out.append("RHS")
    for r, rname in zip(milp.rows, rnames):
        if r.rhs != 0.0:
            out.append(f"    RHS {rname} {_num(r.rhs)}")
    out.append("RANGES")
    for r, rname in zip(milp.rows, rnames):
        if r.range is not None:
            out.append(f"    RNG {rname} {_num(r.range)}")
    out.append("BOUNDS")
    for c, cname in zip(milp.columns, cnames):
        lo, hi = c.lower, c.upper
        if c.kind == "binary" and lo == 0.0 and hi == 1.0:
            out.append(f" BV BND {cname}")
        elif lo == hi:
            out.append(f" FX BND {cname} {_num(lo)}")
        elif lo == -math.inf and hi == math.inf:
            out.append(f" FR BND {cname}")
        else:
            out.append(f" MI BND {cname}" if lo == -math.inf else f" LO BND {cname} {_num(lo)}")
            out.append(f" PL BND {cname}" if hi == math.inf else f" UP BND {cname} {_num(hi)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> Milp:
    """Parse free-format MPS as written by :func:`export_mps`."""
    name = "milp"
    sense = "minimize"
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    coefs: dict[str, list] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds: dict[str, dict] = {}
    in_int = False
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        parts = raw.split()
        head = raw[0] != " "
        if head:
            key = parts[0].upper()
            if key == "NAME":
                name = parts[1] if len(parts) > 1 else name
                continue
            if key == "ENDATA":
                break
            section = key
            if key == "OBJSENSE" and len(parts) > 1:
                sense = "maximize" if parts[1].upper().startswith("MAX") else "minimize"
            continue
        if section == "OBJSENSE":
            sense = "maximize" if parts[0].upper().startswith("MAX") else "minimize"
        elif section == "ROWS":
            kind, rname = parts[0].upper(), parts[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            row_sense[rname] = {"L": "<=", "G": ">=", "E": "=="}[kind]
            row_order.append(rname)
            coefs[rname] = []
        elif section == "COLUMNS":
            if len(parts) >= 3 and parts[1].strip("'\"") == "MARKER":
                tag = parts[2].strip("'\"")
                in_int = tag == "INTORG"
                continue
            cname = parts[0]
            if cname not in col_int:
                col_order.append(cname)
                col_int[cname] = in_int
            for rname, val in zip(parts[1::2], parts[2::2]):
                if rname == obj_row:
                    coefs.setdefault(OBJ_ROW + "\0", []).append((cname, float(val)))
                else:
                    coefs[rname].append((cname, float(val)))
        elif section in ("RHS", "RANGES"):
            target = rhs if section == "RHS" else ranges
            items = parts[1:] if len(parts) % 2 == 1 else parts
            for rname, val in zip(items[0::2], items[1::2]):
                if rname != obj_row:
                    target[rname] = float(val)
        elif section == "BOUNDS":
            kind, cname = parts[0].upper(), parts[2]
            val = float(parts[3]) if len(parts) > 3 else None
            bounds.setdefault(cname, {})[kind] = val
    milp = Milp(name)
    milp.sense = sense
    idx = {}
    for cname in col_order:
        b = bounds.get(cname, {})
        is_int = col_int[cname]
        lo, hi = 0.0, math.inf
        kind = "integer" if is_int else "continuous"
        if "BV" in b:
            lo, hi, kind = 0.0, 1.0, "binary"
        if "FX" in b:
            lo = hi = b["FX"]
        if "FR" in b:
            lo, hi = -math.inf, math.inf
        if "MI" in b:
            lo = -math.inf
        if "PL" in b:
            hi = math.inf
        if "LO" in b:
            lo = b["LO"]
        if "UP" in b:
            hi = b["UP"]
        idx[cname] = milp.add_column(cname, lo, hi, kind)
    for rname in row_order:
        milp.add_row([(idx[c], a) for c, a in coefs[rname]], row_sense[rname], rhs.get(rname, 0.0), rname,
                     range=ranges.get(rname))
    milp.set_objective([(idx[c], a) for c, a in coefs.get(OBJ_ROW + "\0", [])], sense)
    return milp


# -- LP format -------------------------------------------------------------------

_TERMS_PER_LINE = 8


def _expr(terms, cnames) -> list[str]:
    if not terms:
        return ["0"]
    chunks, cur = [], []
    for j, a in terms:
        sign = "-" if a < 0 else "+"
        cur.append(f"{sign} {_num(abs(a))} {cnames[j]}")
        if len(cur) == _TERMS_PER_LINE:
            chunks.append(" ".join(cur))
            cur = []
    if cur:
        chunks.append(" ".join(cur))
    return chunks


def _emit(out, head, chunks, tail=""):
    lines = [f" {head} {chunks[0]}"] + [f"   {c}" for c in chunks[1:]]
    lines[-1] += tail
    out.extend(lines)


def _lpnum(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return _num(v)


def export_lp_format(milp: Milp) -> str:
    cnames, rnames = _names(milp)
    out = [f"\\ Problem: {milp.name}", "Maximize" if milp.sense == "maximize" else "Minimize"]
    obj = sorted(milp.objective.items())
    _emit(out, "obj:", _expr(obj, cnames))
    out.append("Subject To")
    op = {"<=": "<=", ">=": ">=", "==": "="}
    for r, rname in zip(milp.rows, rnames):
        chunks = _expr(r.terms, cnames)
        if r.range is None:
            _emit(out, f"{rname}:", chunks, f" {op[r.sense]} {_num(r.rhs)}")
        else:
            lo, hi = r.activity_bounds()
            _emit(out, f"{rname}: {_num(lo)} <=", chunks, f" <= {_num(hi)}")
    out.append("Bounds")
    for c, cname in zip(milp.columns, cnames):
        if c.lower == c.upper:
            out.append(f" {cname} = {_num(c.lower)}")
        elif c.lower == -math.inf and c.upper == math.inf:
            out.append(f" {cname} free")
        else:
            out.append(f" {_lpnum(c.lower)} <= {cname} <= {_lpnum(c.upper)}")
    ints = [n for c, n in zip(milp.columns, cnames) if c.kind == "integer"]
    bins = [n for c, n in zip(milp.columns, cnames) if c.kind == "binary"]
    if ints:
        out.append("Generals")
        out.extend(f" {n}" for n in ints)
    if bins:
        out.append("Binaries")
        out.extend(f" {n}" for n in bins)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTION = re.compile(r"^(maximize|maximum|max|minimize|minimum|min|subject to|such that|st|s\.t\.|bounds|"
                      r"generals?|binar(?:y|ies)|end)$", re.I)
_LABEL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$")
_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+([A-Za-z_][A-Za-z0-9_]*)")


def _parse_expr(s: str):
    s = s.strip()
    if s in ("", "0"):
        return []
    terms = [(name, float(val) * (-1 if sign == "-" else 1)) for sign, val, name in _TERM.findall(s)]
    return terms


def _parse_float(s: str) -> float:
    s = s.strip().lower()
    if s in ("+inf", "inf", "+infinity", "infinity"):
        return math.inf
    if s in ("-inf", "-infinity"):
        return -math.inf
    return float(s)


def read_lp_format(text: str) -> Milp:
    """Parse LP text as written by :func:`export_lp_format`."""
    name = "milp"
    sense = "minimize"
    section = None
    stmts: dict[str, list] = {"obj": [], "st": [], "bounds": [], "gen": [], "bin": []}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            m = re.match(r"\\\s*Problem:\s*(\S+)", line)
            if m:
                name = m.group(1)
            continue
        sec = _SECTION.match(line)
        if sec:
            word = sec.group(1).lower()
            if word.startswith("max"):
                sense, section = "maximize", "obj"
            elif word.startswith("min"):
                sense, section = "minimize", "obj"
            elif word.startswith("bound"):
                section = "bounds"
            elif word.startswith("gen"):
                section = "gen"
            elif word.startswith("bin"):
                section = "bin"
            elif word == "end":
                break
            else:
                section = "st"
            continue
        if section in ("obj", "st"):
            if _LABEL.match(raw) or not stmts[section]:
                stmts[section].append(line)
            else:
                stmts[section][-1] += " " + line
        else:
            stmts[section].append(line)

    # declare columns in order of first appearance across bounds and sections
    milp = Milp(name)
    kinds = {n: "integer" for line in stmts["gen"] for n in line.split()}
    kinds.update({n: "binary" for line in stmts["bin"] for n in line.split()})
    col_bounds: dict[str, tuple] = {}
    order: list[str] = []
    for line in stmts["bounds"]:
        m = re.match(r"^(\S+)\s*=\s*(\S+)$", line)
        if m:
            n, v = m.group(1), _parse_float(m.group(2))
            col_bounds[n] = (v, v)
        elif line.endswith(" free"):
            n = line.split()[0]
            col_bounds[n] = (-math.inf, math.inf)
        else:
            lo, n, hi = re.match(r"^(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)$", line).groups()
            col_bounds[n] = (_parse_float(lo), _parse_float(hi))
        order.append(n)
    seen = set(order)
    parsed_rows = []
    for stmt in stmts["st"]:
        rname, body = _LABEL.match(stmt).groups()
        m = re.match(r"^\s*(\S+)\s*<=(.*)<=\s*(\S+)\s*$", body)
        if m and not _TERM.match(m.group(1).strip()):
            lo, expr, hi = _parse_float(m.group(1)), m.group(2), _parse_float(m.group(3))
            parsed_rows.append((rname, _parse_expr(expr), "<=", hi, hi - lo))
        else:
            m = re.match(r"^(.*?)(<=|>=|=)\s*(\S+)\s*$", body)
            expr, op, rhs = m.groups()
            parsed_rows.append((rname, _parse_expr(expr), {"<=": "<=", ">=": ">=", "=": "=="}[op],
                                _parse_float(rhs), None))
    obj_terms = []
    for stmt in stmts["obj"]:
        obj_terms = _parse_expr(_LABEL.match(stmt).group(2) if _LABEL.match(stmt) else stmt)
    for terms in [obj_terms] + [r[1] for r in parsed_rows]:
        for n, _ in terms:
            if n not in seen:
                seen.add(n)
                order.append(n)
    for n in list(kinds):
        if n not in seen:
            seen.add(n)
            order.append(n)
    idx = {}
    for n in order:
        kind = kinds.get(n, "continuous")
        lo, hi = col_bounds.get(n, (0.0, 1.0) if kind == "binary" else (0.0, math.inf))
        idx[n] = milp.add_column(n, lo, hi, kind)
    for rname, terms, op, rhs, rng in parsed_rows:
        milp.add_row([(idx[n], a) for n, a in terms], op, rhs, rname, range=rng)
    milp.set_objective([(idx[n], a) for n, a in obj_terms], sense)
    return milp


# -- solutions ------------------------------------------------------------------------


@dataclass
class SolutionRecord:
    status: str
    objective: float | None
    bound: float | None
    gap: float | None
    values: dict = field(default_factory=dict)
    nodes: int | None = None


def _json_num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def write_solution(solution, include_aux: bool = False) -> dict:
    """Solution document: status, objective, bound, gap and variable values.

    Only user columns and predicted outputs are included unless
    ``include_aux``; infeasible or limit-without-incumbent results carry no
    ``values`` section.
    """
    doc = {
        "status": solution.status,
        "objective": _json_num(solution.objective),
        "bound": _json_num(solution.bound),
        "gap": _json_num(solution.gap),
        "nodes": int(solution.nodes),
    }
    if solution.x is not None:
        milp = solution.milp
        keep = (M.USER, M.PREDICTED_OUTPUT)
        doc["values"] = {
            c.name: float(v) for c, v in zip(milp.columns, solution.x) if include_aux or c.tag in keep
        }
    return doc


def read_solution(doc: dict) -> SolutionRecord:
    return SolutionRecord(
        status=doc["status"],
        objective=doc.get("objective"),
        bound=doc.get("bound"),
        gap=doc.get("gap"),
        values={k: float(v) for k, v in doc.get("values", {}).items()},
        nodes=doc.get("nodes"),
    )


def milp_values(milp: Milp, values: dict) -> np.ndarray:
    """Dense column vector from a name -> value mapping (missing names raise)."""
    return np.array([values[c.name] for c in milp.columns], dtype=float)
