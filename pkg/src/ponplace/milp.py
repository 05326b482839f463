"""Solver-independent MILP of the placement problem, with LP/MPS writers and readers.

Variables (ids are the instance's vm/server ids, racks and channel indices):

    x_v{V}_s{S}          VM V hosted on server S                 binary
    a_s{S}               server S active                         binary
    o_s{S}               ONU of server S active                  binary
    w_u{U}_v{V}_s{S}     both ends of demand (U, V) on server S   binary
    z_u{U}_v{V}_r{I}_r{J}  demand (U, V) runs from rack I to rack J binary
    f_r{I}_r{J}_c{C}     flow on channel C of rack pair (I, J)     continuous >= 0

Constraint families, emitted in this order (indices ascending inside each):

    C1  assignment         sum_s x[v,s] = 1
    C2  capacity/activity  sum_v req_v x[v,s] - cap_s a[s] <= 0;  x[v,s] - a[s] <= 0
    C3  co-location        w <= x[u,s];  w <= x[v,s];  w - x[u,s] - x[v,s] >= -1
    C4  ONU egress/ingress sum t (x - w) - C_onu o[s] <= 0
    C5  rack incidence     z - xr[u,i] - xr[v,j] >= -1;  z - xr[u,i] <= 0;  z - xr[v,j] <= 0
    C6  channel flows      sum_c f - sum t z = 0;  f <= capacity
    C7  server limit       sum_s a[s] <= max_active_servers  (when set)

``xr[v,i]`` is expanded inline as the sum of x over the servers of rack i.
Terms inside every row and the objective are kept in variable declaration
order, which is also the MPS column order, so both formats round-trip exactly.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .model import Instance, Placement
from .network import RoutingMap, build_routing_map, derive_loads
from .solve._data import Objective

log = logging.getLogger(__name__)

BINARY, CONTINUOUS = "binary", "continuous"
LE, EQ, GE = "<=", "=", ">="


class ModelError(ValueError):
    pass


class MpsNameError(ModelError):
    """A name does not fit the 8-character fields of fixed MPS."""


class MissingValues(ModelError):
    pass


class ExtractionError(ModelError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float = 0.0
    upper: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[str, float], ...]
    objective_offset: float = 0.0
    sense: str = "minimize"
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        idx = {v.name: i for i, v in enumerate(self.variables)}
        if len(idx) != len(self.variables):
            raise ModelError("duplicate variable names")
        rows = {c.name for c in self.constraints}
        if len(rows) != len(self.constraints):
            raise ModelError("duplicate constraint names")
        for c in self.constraints:
            for v, _ in c.terms:
                if v not in idx:
                    raise ModelError(f"constraint {c.name} references undeclared {v}")
        for v, _ in self.objective:
            if v not in idx:
                raise ModelError(f"objective references undeclared {v}")
        if self.sense != "minimize":
            raise ModelError("only minimization models are supported")
        object.__setattr__(self, "_index", idx)

    def var_index(self, name: str) -> int:
        return self._index[name]

    def count(self, prefix: str) -> int:
        return sum(1 for v in self.variables if v.name.startswith(prefix + "_"))


class _Builder:
    def __init__(self):
        self.vars: list[Variable] = []
        self.index: dict[str, int] = {}
        self.rows: list[Constraint] = []

    def var(self, name, kind=BINARY, lower=0.0, upper=1.0):
        self.index[name] = len(self.vars)
        self.vars.append(Variable(name, kind, lower, upper))
        return name

    def terms(self, pairs):
        """Merge duplicate variables and sort by declaration order."""
        acc: dict[str, float] = {}
        for v, c in pairs:
            acc[v] = acc[v] + c if v in acc else c
        return tuple(sorted(((v, c) for v, c in acc.items() if c != 0.0),
                            key=lambda t: self.index[t[0]]))

    def row(self, name, pairs, sense, rhs):
        self.rows.append(Constraint(name, self.terms(pairs), sense, float(rhs)))


def build_model(inst: Instance, objective, routing: RoutingMap | None = None) -> MilpModel:
    objective = Objective.parse(objective)
    routing = routing or build_routing_map(inst.topology, inst.power)
    cap_max = inst.max_capacity_ghz
    for v in inst.vms:
        if v.requirement_ghz > cap_max + 1e-9:
            raise ModelError(f"VM {v.vm_id} exceeds every server capacity; "
                             "the instance is structurally infeasible")
    p = inst.power
    b = _Builder()
    V = [v.vm_id for v in inst.vms]
    req = {v.vm_id: v.requirement_ghz for v in inst.vms}
    S = [s.server_id for s in inst.servers]
    cap = {s.server_id: s.capacity_ghz for s in inst.servers}
    racks = sorted({s.rack_id for s in inst.servers} | set(range(inst.topology.num_racks)))
    in_rack = {i: [s.server_id for s in inst.servers if s.rack_id == i] for i in racks}
    T = list(inst.traffic.items())
    rack_pairs = [(i, j) for i in racks for j in racks if i != j]

    x = {(v, s): b.var(f"x_v{v}_s{s}") for v in V for s in S}
    a = {s: b.var(f"a_s{s}") for s in S}
    o = {s: b.var(f"o_s{s}") for s in S} if T else {}
    w = {(u, v, s): b.var(f"w_u{u}_v{v}_s{s}") for (u, v), _ in T for s in S}
    z = {(u, v, i, j): b.var(f"z_u{u}_v{v}_r{i}_r{j}")
         for (u, v), _ in T for (i, j) in rack_pairs}
    f = {}
    if T:
        for (i, j) in rack_pairs:
            for c, _ in enumerate(routing.channels.get((i, j), ())):
                f[(i, j, c)] = b.var(f"f_r{i}_r{j}_c{c}", CONTINUOUS, 0.0, math.inf)

    # C1
    for v in V:
        b.row(f"c1_assign_v{v}", [(x[v, s], 1.0) for s in S], EQ, 1.0)
    # C2
    for s in S:
        b.row(f"c2_cap_s{s}", [(x[v, s], req[v]) for v in V] + [(a[s], -cap[s])], LE, 0.0)
    for v in V:
        for s in S:
            b.row(f"c2_act_v{v}_s{s}", [(x[v, s], 1.0), (a[s], -1.0)], LE, 0.0)
    # C3
    for (u, v), _ in T:
        for s in S:
            ws = w[u, v, s]
            b.row(f"c3_lu_u{u}_v{v}_s{s}", [(ws, 1.0), (x[u, s], -1.0)], LE, 0.0)
            b.row(f"c3_lv_u{u}_v{v}_s{s}", [(ws, 1.0), (x[v, s], -1.0)], LE, 0.0)
            b.row(f"c3_and_u{u}_v{v}_s{s}",
                  [(ws, 1.0), (x[u, s], -1.0), (x[v, s], -1.0)], GE, -1.0)
    # C4
    if T:
        for s in S:
            eg = [(x[u, s], t) for (u, v), t in T] + [(w[u, v, s], -t) for (u, v), t in T]
            b.row(f"c4_egress_s{s}", eg + [(o[s], -p.onu_capacity_gbps)], LE, 0.0)
            ing = [(x[v, s], t) for (u, v), t in T] + [(w[u, v, s], -t) for (u, v), t in T]
            b.row(f"c4_ingress_s{s}", ing + [(o[s], -p.onu_capacity_gbps)], LE, 0.0)
    # C5
    for (u, v), _ in T:
        for (i, j) in rack_pairs:
            zz = z[u, v, i, j]
            xu = [(x[u, s], -1.0) for s in in_rack[i]]
            xv = [(x[v, s], -1.0) for s in in_rack[j]]
            b.row(f"c5_and_u{u}_v{v}_r{i}_r{j}", [(zz, 1.0)] + xu + xv, GE, -1.0)
            b.row(f"c5_lu_u{u}_v{v}_r{i}_r{j}", [(zz, 1.0)] + xu, LE, 0.0)
            b.row(f"c5_lv_u{u}_v{v}_r{i}_r{j}", [(zz, 1.0)] + xv, LE, 0.0)
    # C6
    if T:
        for (i, j) in rack_pairs:
            chans = routing.channels.get((i, j), ())
            flow = [(f[i, j, c], 1.0) for c in range(len(chans))]
            dem = [(z[u, v, i, j], -t) for (u, v), t in T]
            b.row(f"c6_flow_r{i}_r{j}", flow + dem, EQ, 0.0)
            for c, ch in enumerate(chans):
                b.row(f"c6_chan_r{i}_r{j}_c{c}", [(f[i, j, c], 1.0)], LE, ch.capacity_gbps)
    # C7
    if inst.max_active_servers is not None:
        b.row("c7_max_active", [(a[s], 1.0) for s in S], LE, inst.max_active_servers)

    obj = []
    offset = 0.0
    for s in S:
        if p.idle_when_unused:
            offset += p.server_idle_w
        else:
            obj.append((a[s], p.server_idle_w))
        obj += [(x[v, s], p.dynamic_w * req[v] / cap[s]) for v in V]
    if objective is Objective.PC_PLUS_PN:
        obj += [(o[s], p.onu_power_w) for s in o]
    return MilpModel(f"ponplace_{objective.name.lower()}", tuple(b.vars), tuple(b.rows),
                     b.terms(obj), offset)


def expected_counts(n_vms: int, n_servers: int, n_racks: int, n_demands: int,
                    channels_per_pair: int, capped: bool = False) -> dict:
    """Variable and row counts implied by the formulation (closed form)."""
    pairs = n_racks * (n_racks - 1)
    has_t = n_demands > 0
    vars_ = {
        "x": n_vms * n_servers,
        "a": n_servers,
        "o": n_servers if has_t else 0,
        "w": n_demands * n_servers,
        "z": n_demands * pairs,
        "f": pairs * channels_per_pair if has_t else 0,
    }
    rows = {
        "c1": n_vms,
        "c2": n_servers + n_vms * n_servers,
        "c3": 3 * n_demands * n_servers,
        "c4": 2 * n_servers if has_t else 0,
        "c5": 3 * n_demands * pairs,
        "c6": (pairs + pairs * channels_per_pair) if has_t else 0,
        "c7": 1 if capped else 0,
    }
    return {"vars": vars_, "rows": rows}


# ---------------------------------------------------------------- solutions

def solution_from_placement(model: MilpModel, inst: Instance, placement: Placement,
                            routing: RoutingMap | None = None) -> dict[str, float]:
    """Variable values implied by a placement (flows split proportionally)."""
    routing = routing or build_routing_map(inst.topology, inst.power)
    rack = {s.server_id: s.rack_id for s in inst.servers}
    load = derive_loads(inst, placement, routing)
    onu = set(load.active_onus())
    used = set(placement.host.values())
    vals = {}
    for var in model.variables:
        n = var.name
        k, *parts = n.split("_")
        ids = [int(p[1:]) if not p.startswith("r") else int(p[1:]) for p in parts]
        if k == "x":
            vals[n] = 1.0 if placement[ids[0]] == ids[1] else 0.0
        elif k == "a":
            vals[n] = 1.0 if ids[0] in used else 0.0
        elif k == "o":
            vals[n] = 1.0 if ids[0] in onu else 0.0
        elif k == "w":
            u, v, s = ids
            vals[n] = 1.0 if placement[u] == s and placement[v] == s else 0.0
        elif k == "z":
            u, v, i, j = ids
            vals[n] = 1.0 if rack[placement[u]] == i and rack[placement[v]] == j else 0.0
        elif k == "f":
            i, j, c = ids
            vals[n] = load.channel_flow_gbps[(i, j, c)]
        else:
            raise ModelError(f"unrecognized variable {n}")
    return vals


@dataclass(frozen=True)
class SolutionReport:
    violations: tuple[tuple[str, float], ...]
    objective: float

    @property
    def feasible(self) -> bool:
        return not self.violations


def check_solution(m: MilpModel, values: dict, tol: float = 1e-6) -> SolutionReport:
    """Check bounds, integrality and every row within ``tol``; recompute the objective.

    Violations are ``(name, excess)`` pairs where name is a row or variable.
    """
    missing = [v.name for v in m.variables if v.name not in values]
    if missing:
        raise MissingValues(f"{len(missing)} variables have no value, e.g. {missing[:3]}")
    bad = []
    for var in m.variables:
        x = values[var.name]
        if x < var.lower - tol:
            bad.append((var.name, var.lower - x))
        elif x > var.upper + tol:
            bad.append((var.name, x - var.upper))
        elif var.kind == BINARY and min(abs(x), abs(x - 1.0)) > tol:
            bad.append((var.name, min(abs(x), abs(x - 1.0))))
    for c in m.constraints:
        lhs = math.fsum(coef * values[v] for v, coef in c.terms)
        if c.sense == LE:
            excess = lhs - c.rhs
        elif c.sense == GE:
            excess = c.rhs - lhs
        else:
            excess = abs(lhs - c.rhs)
        if excess > tol:
            bad.append((c.name, excess))
    obj = m.objective_offset + math.fsum(coef * values[v] for v, coef in m.objective)
    return SolutionReport(tuple(bad), obj)


_X = re.compile(r"^x_v(\d+)_s(\d+)$")


def extract_placement(m: MilpModel, values: dict, tol: float = 1e-4) -> Placement:
    chosen: dict[int, list[int]] = {}
    for var in m.variables:
        mt = _X.match(var.name)
        if not mt:
            continue
        v, s = int(mt.group(1)), int(mt.group(2))
        chosen.setdefault(v, [])
        if var.name not in values:
            raise MissingValues(f"no value for {var.name}")
        x = values[var.name]
        if abs(x - 1.0) <= tol:
            chosen[v].append(s)
        elif abs(x) > tol:
            raise ExtractionError(f"{var.name} = {x} is not integral")
    host = {}
    for v, ss in chosen.items():
        if len(ss) != 1:
            raise ExtractionError(f"VM {v} is assigned to {len(ss)} servers")
        host[v] = ss[0]
    return Placement(host)


def to_matrices(m: MilpModel):
    """Dense arrays for external solvers: ``(c, A, row_lo, row_hi, lb, ub, integral)``."""
    n = len(m.variables)
    c = np.zeros(n)
    for v, coef in m.objective:
        c[m.var_index(v)] += coef
    A = np.zeros((len(m.constraints), n))
    lo = np.full(len(m.constraints), -np.inf)
    hi = np.full(len(m.constraints), np.inf)
    for r, con in enumerate(m.constraints):
        for v, coef in con.terms:
            A[r, m.var_index(v)] = coef
        if con.sense in (LE, EQ):
            hi[r] = con.rhs
        if con.sense in (GE, EQ):
            lo[r] = con.rhs
    lb = np.array([v.lower for v in m.variables])
    ub = np.array([v.upper for v in m.variables])
    integral = np.array([v.kind == BINARY for v in m.variables], dtype=int)
    return c, A, lo, hi, lb, ub, integral


# ---------------------------------------------------------------- LP format

def _num(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


def _expr(head, terms, tail="", width=78):
    """CPLEX-LP row ``head terms tail`` split over lines of bounded width."""
    toks = []
    for i, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        toks.append(f"{_num(c)} {v}" if i == 0 and sign == "+" else f"{sign} {_num(abs(c))} {v}")
    if tail:
        toks.append(tail)
    lines, cur = [], head
    for tok in toks:
        if cur.strip() and len(cur) + len(tok) + 1 > width:
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}"
    lines.append(cur)
    return lines


def export_lp(m: MilpModel) -> str:
    out = [f"\\ Problem: {m.name}"]
    if m.objective_offset:
        out.append(f"\\ objective_offset: {_num(m.objective_offset)}")
    out.append("Minimize")
    out += _expr(" obj:", m.objective)
    out.append("Subject To")
    for c in m.constraints:
        terms = c.terms or ((m.variables[0].name, 0.0),)
        out += _expr(f" {c.name}:", terms, f"{c.sense} {_num(c.rhs)}")
    out.append("Bounds")
    for v in m.variables:
        if v.kind == BINARY:
            continue
        if v.upper == math.inf:
            out.append(f" {v.name} >= {_num(v.lower)}")
        else:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    bins = [v.name for v in m.variables if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        line = ""
        for name in bins:
            if len(line) + len(name) + 1 > 78:
                out.append(line)
                line = ""
            line += " " + name
        if line:
            out.append(line)
    out.append("End")
    return "\n".join(out) + "\n"


_LP_SECTIONS = {"minimize": "obj", "min": "obj", "subject to": "st", "st": "st",
                "s.t.": "st", "such that": "st", "bounds": "bounds",
                "binaries": "bin", "binary": "bin", "bin": "bin", "end": "end"}


def _parse_terms(tokens, where):
    terms = []
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms.append((tok, sign * (1.0 if coef is None else coef)))
        sign, coef = 1.0, None
    if coef is not None:
        raise ModelError(f"{where}: dangling constant {coef}")
    return tuple(terms)


def read_lp(text: str) -> MilpModel:
    """Read the CPLEX-LP subset written by :func:`export_lp`."""
    name, offset = "model", 0.0
    section = None
    chunks: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": []}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            body = line[1:].strip()
            if body.startswith("Problem:"):
                name = body.split(":", 1)[1].strip()
            elif body.startswith("objective_offset:"):
                offset = float(body.split(":", 1)[1])
            continue
        if not line:
            continue
        key = line.lower()
        if key in _LP_SECTIONS:
            section = _LP_SECTIONS[key]
            continue
        if section is None or section == "end":
            raise ModelError(f"unexpected line outside a section: {raw!r}")
        if section in ("obj", "st") and raw.startswith("   ") and chunks[section]:
            chunks[section][-1] += " " + line
        else:
            chunks[section].append(line)

    obj_line = " ".join(chunks["obj"])
    if ":" in obj_line:
        obj_line = obj_line.split(":", 1)[1]
    objective = _parse_terms(obj_line.split(), "objective")

    cons = []
    for line in chunks["st"]:
        label, expr = line.split(":", 1)
        toks = expr.split()
        for k, tok in enumerate(toks):
            if tok in ("<=", ">=", "=", "=<", "=>"):
                sense = {"=<": LE, "=>": GE}.get(tok, tok)
                terms = _parse_terms(toks[:k], label)
                rhs = float(toks[k + 1])
                break
        else:
            raise ModelError(f"row {label}: no comparison operator")
        cons.append(Constraint(label.strip(), terms, sense, rhs))

    bounds = {}
    for line in chunks["bounds"]:
        toks = line.split()
        if len(toks) == 3 and toks[1] == ">=":
            bounds[toks[0]] = (float(toks[2]), math.inf)
        elif len(toks) == 5 and toks[1] == toks[3] == "<=":
            bounds[toks[2]] = (float(toks[0]), float(toks[4]))
        else:
            raise ModelError(f"unsupported bound line {line!r}")
    binaries = [t for line in chunks["bin"] for t in line.split()]

    # declaration order: the order in which names first appear
    order: list[str] = []
    seen = set()

    def see(n):
        if n not in seen:
            seen.add(n)
            order.append(n)
    for n, _ in objective:
        see(n)
    for c in cons:
        for n, _ in c.terms:
            see(n)
    for n in list(bounds) + binaries:
        see(n)
    binset = set(binaries)
    variables = []
    for n in order:
        if n in binset:
            variables.append(Variable(n, BINARY, 0.0, 1.0))
        else:
            lo, hi = bounds.get(n, (0.0, math.inf))
            variables.append(Variable(n, CONTINUOUS, lo, hi))
    return _canonical(MilpModel(name, tuple(variables), tuple(cons), objective, offset))


def _canonical(m: MilpModel) -> MilpModel:
    """Restore declaration order from the variable-name scheme."""
    rank = {"x": 0, "a": 1, "o": 2, "w": 3, "z": 4, "f": 5}

    def key(v):
        k = v.name.split("_")[0]
        return rank.get(k, 9)
    # stable sort keeps the per-family order of first appearance
    variables = tuple(sorted(m.variables, key=key))
    pos = {v.name: i for i, v in enumerate(variables)}
    cons = tuple(Constraint(c.name, tuple(sorted(c.terms, key=lambda t: pos[t[0]])),
                            c.sense, c.rhs) for c in m.constraints)
    obj = tuple(sorted(m.objective, key=lambda t: pos[t[0]]))
    return MilpModel(m.name, variables, cons, obj, m.objective_offset)


# ---------------------------------------------------------------- MPS format

def _field_num(x: float, precision: int | None) -> str:
    if precision is None:
        return repr(float(x))
    return f"{x:.{precision}g}"


def _mps_line(f1="", f2="", f3="", f4="", f5="", f6=""):
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def export_mps(m: MilpModel, names: str = "auto", precision: int | None = None) -> str:
    """Fixed-format MPS.

    ``names``: ``"strict"`` raises :class:`MpsNameError` when any name is
    longer than 8 characters; ``"auto"`` then replaces every column name by
    ``C0000001``-style and every row name by ``R0000001``-style labels and
    records the original names in ``*`` comment lines, which the reader uses
    to restore them. Numbers are written in shortest round-trip form and may
    overflow the 12-character numeric field (whitespace-delimited readers
    accept this); pass ``precision=6`` for strictly column-aligned output at
    reduced precision.
    """
    long_names = [n for n in [v.name for v in m.variables] + [c.name for c in m.constraints]
                  if len(n) > 8]
    if long_names and names == "strict":
        raise MpsNameError(f"{len(long_names)} names exceed 8 characters, "
                           f"e.g. {long_names[0]!r}")
    mangle = bool(long_names)
    if mangle:
        log.info("MPS export: %d long names, using mangled labels", len(long_names))
    col = {v.name: (f"C{i:07d}" if mangle else v.name) for i, v in enumerate(m.variables)}
    row = {c.name: (f"R{i:07d}" if mangle else c.name) for i, c in enumerate(m.constraints)}
    out = [f"* Problem: {m.name}"]
    if m.objective_offset:
        out.append(f"* objective_offset: {repr(m.objective_offset)}")
    if mangle:
        for v in m.variables:
            out.append(f"* COL {col[v.name]} {v.name}")
        for c in m.constraints:
            out.append(f"* ROW {row[c.name]} {c.name}")
    out.append(f"NAME          {m.name[:8] if mangle else m.name}")
    out.append("ROWS")
    out.append(" N  OBJ")
    code = {LE: "L", GE: "G", EQ: "E"}
    for c in m.constraints:
        out.append(f" {code[c.sense]}  {row[c.name]}")
    out.append("COLUMNS")
    entries: dict[str, list[tuple[str, float]]] = {v.name: [] for v in m.variables}
    for v, coef in m.objective:
        entries[v].append(("OBJ", coef))
    for c in m.constraints:
        for v, coef in c.terms:
            entries[v].append((row[c.name], coef))
    in_int = False
    for v in m.variables:
        is_int = v.kind == BINARY
        if is_int and not in_int:
            out.append("    MARKER                 'MARKER'                 'INTORG'")
        elif in_int and not is_int:
            out.append("    MARKER                 'MARKER'                 'INTEND'")
        in_int = is_int
        es = entries[v.name]
        if not es:
            # keep the column declared
            es = [("OBJ", 0.0)]
        for k in range(0, len(es), 2):
            pair = es[k:k + 2]
            f5 = f6 = ""
            if len(pair) == 2:
                f5, f6 = pair[1][0], _field_num(pair[1][1], precision)
            out.append(_mps_line("", col[v.name], pair[0][0],
                                 _field_num(pair[0][1], precision), f5, f6))
    if in_int:
        out.append("    MARKER                 'MARKER'                 'INTEND'")
    rhs = [(row[c.name], c.rhs) for c in m.constraints if c.rhs != 0.0]
    out.append("RHS")
    for k in range(0, len(rhs), 2):
        pair = rhs[k:k + 2]
        f5 = f6 = ""
        if len(pair) == 2:
            f5, f6 = pair[1][0], _field_num(pair[1][1], precision)
        out.append(_mps_line("", "RHS", pair[0][0], _field_num(pair[0][1], precision), f5, f6))
    out.append("BOUNDS")
    for v in m.variables:
        if v.kind == BINARY:
            out.append(_mps_line("UP", "BND", col[v.name], "1"))
        else:
            if v.lower != 0.0:
                out.append(_mps_line("LO", "BND", col[v.name], _field_num(v.lower, precision)))
            if v.upper != math.inf:
                out.append(_mps_line("UP", "BND", col[v.name], _field_num(v.upper, precision)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> MilpModel:
    """Read fixed or free MPS (whitespace-delimited fields)."""
    col_names: dict[str, str] = {}
    row_names: dict[str, str] = {}
    name, offset = "model", 0.0
    section = None
    senses: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    cols: list[str] = []
    kinds: dict[str, str] = {}
    entries: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    in_int = False
    for raw in text.splitlines():
        if raw.startswith("*"):
            toks = raw[1:].split()
            if toks[:1] == ["Problem:"]:
                name = toks[1]
            elif toks[:1] == ["objective_offset:"]:
                offset = float(toks[1])
            elif toks[:1] == ["COL"]:
                col_names[toks[1]] = toks[2]
            elif toks[:1] == ["ROW"]:
                row_names[toks[1]] = toks[2]
            continue
        if not raw.strip():
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME" and len(head) > 1 and name == "model":
                name = head[1]
            continue
        toks = raw.split()
        if section == "ROWS":
            kind, r = toks
            if kind == "N":
                obj_row = obj_row or r
            else:
                senses[r] = {"L": LE, "G": GE, "E": EQ}[kind]
                row_order.append(r)
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1] == "'MARKER'":
                in_int = toks[2] == "'INTORG'"
                continue
            c = toks[0]
            if c not in entries:
                cols.append(c)
                entries[c] = []
                kinds[c] = BINARY if in_int else CONTINUOUS
            for k in range(1, len(toks), 2):
                entries[c].append((toks[k], float(toks[k + 1])))
        elif section == "RHS":
            for k in range(1, len(toks), 2):
                rhs[toks[k]] = float(toks[k + 1])
        elif section == "BOUNDS":
            bt, _, c = toks[0], toks[1], toks[2]
            val = float(toks[3]) if len(toks) > 3 else 0.0
            if bt == "UP":
                hi[c] = val
            elif bt == "LO":
                lo[c] = val
            elif bt == "FX":
                lo[c] = hi[c] = val
            elif bt == "FR":
                lo[c], hi[c] = -math.inf, math.inf
            elif bt == "MI":
                lo[c] = -math.inf
            elif bt == "PL":
                hi[c] = math.inf
            elif bt == "BV":
                lo[c], hi[c] = 0.0, 1.0
                kinds[c] = BINARY
            else:
                raise ModelError(f"unsupported bound type {bt}")
        elif section in ("ENDATA", "OBJSENSE", "RANGES"):
            if section == "RANGES":
                raise ModelError("RANGES are not supported")
    cn = lambda c: col_names.get(c, c)  # noqa: E731
    rn = lambda r: row_names.get(r, r)  # noqa: E731
    variables = []
    for c in cols:
        if kinds[c] == BINARY:
            variables.append(Variable(cn(c), BINARY, lo.get(c, 0.0), hi.get(c, 1.0)))
        else:
            variables.append(Variable(cn(c), CONTINUOUS, lo.get(c, 0.0), hi.get(c, math.inf)))
    row_terms: dict[str, list[tuple[str, float]]] = {r: [] for r in row_order}
    objective = []
    for c in cols:
        for r, coef in entries[c]:
            if r == obj_row:
                if coef != 0.0:
                    objective.append((cn(c), coef))
            else:
                row_terms[r].append((cn(c), coef))
    cons = tuple(Constraint(rn(r), tuple(row_terms[r]), senses[r], rhs.get(r, 0.0))
                 for r in row_order)
    return MilpModel(name, tuple(variables), cons, tuple(objective), offset)
