"""Time-indexed integer programs for the four planning variants.

Variables are ``q`` (MCC cost), ``y<i>`` (subsidy indicator) and ``x<i>_<t>``
(node ``i`` Green at step ``t``).  For ``t >= 1`` a node may only be Green if
it is subsidized during that step or at least ``b_i`` neighbours were Green
at ``t-1``::

    x_it <= y_i + (1/b_i) * sum_j x_j,t-1      (subsidy rows)
    x_it <= (1/b_i) * sum_j x_j,t-1            (unforced rows)

Feasible assignments may lag the true adoption vector but never run ahead
of it, so the simulated outcome of ``{i : y_i = 1}`` is at least the
objective value.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .dynamics import SubsidySchedule, intransigence_closure, run
from .graph_core import Graph, ThresholdProfile, format_fraction, to_fraction

LE, GE, EQ = "<=", ">=", "="
BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
MIN, MAX = "min", "max"


class ConstraintViolationError(ValueError):
    def __init__(self, row: str, detail: str = ""):
        super().__init__(f"constraint {row} violated" + (f": {detail}" if detail else ""))
        self.row = row


class LpFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} at line {line}")
        self.line = line


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: Fraction = Fraction(0)
    upper: Fraction | None = None


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[Fraction, str], ...]
    sense: str
    rhs: Fraction

    def activity(self, values) -> Fraction:
        return sum((c * values[v] for c, v in self.terms), Fraction(0))

    def satisfied(self, values) -> bool:
        lhs = self.activity(values)
        if self.sense == LE:
            return lhs <= self.rhs
        if self.sense == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: tuple[tuple[Fraction, str], ...]

    def value(self, values) -> Fraction:
        return sum((c * values[v] for c, v in self.terms), Fraction(0))


@dataclass
class IpModel:
    variables: list[Variable]
    constraints: list[Constraint]
    objective: Objective
    variant: str | None = None
    node_count: int = 0
    horizon: int = 0
    d: int | None = None

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        declared = set(names)
        for con in self.constraints:
            for _, v in con.terms:
                if v not in declared:
                    raise ValueError(f"constraint {con.name} uses undeclared variable {v}")
        for _, v in self.objective.terms:
            if v not in declared:
                raise ValueError(f"objective uses undeclared variable {v}")

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def first_violation(self, values) -> str | None:
        for con in self.constraints:
            if not con.satisfied(values):
                return con.name
        return None

    def is_feasible(self, values) -> bool:
        return self.first_violation(values) is None


@dataclass(frozen=True)
class IpSolution:
    values: dict[str, Fraction]
    objective: Fraction | None = None


def _x(i: int, t: int) -> str:
    return f"x{i}_{t}"


def _costs(n: int, costs) -> tuple[Fraction, ...]:
    if costs is None:
        return (Fraction(1),) * n
    costs = tuple(to_fraction(c) for c in costs)
    if len(costs) != n or any(c <= 0 for c in costs):
        raise ValueError("costs must be positive, one per node")
    return costs


def _build(graph: Graph, th: ThresholdProfile, variant: str, d: int | None,
           k: int | None, costs) -> IpModel:
    n = graph.node_count
    if len(th.b) != n:
        raise ValueError("threshold profile does not match the graph")
    mcc = variant.endswith("MCC")
    if variant.startswith("temp"):
        last_forced, horizon = n, 2 * n
    else:
        if d is None or d < 1:
            raise ValueError("fixed-duration models need d >= 1")
        last_forced, horizon = d - 1, d + 2 * graph.edge_count + n
    one = Fraction(1)

    variables: list[Variable] = []
    constraints: list[Constraint] = []
    if mcc:
        c = _costs(n, costs)
        q_kind = INTEGER if all(x.denominator == 1 for x in c) else CONTINUOUS
        variables.append(Variable("q", q_kind))
        constraints.append(Constraint(
            "budget", tuple((c[i], f"y{i}") for i in range(n)) + ((-one, "q"),), LE, Fraction(0)))
    else:
        if k is None or k < 0:
            raise ValueError("budgeted models need k >= 0")
        constraints.append(Constraint(
            "budget", tuple((one, f"y{i}") for i in range(n)), LE, Fraction(k)))
    variables += [Variable(f"y{i}", BINARY, Fraction(0), one) for i in range(n)]
    variables += [Variable(_x(i, t), BINARY, Fraction(0), one)
                  for i in range(n) for t in range(horizon + 1)]

    target = set(range(n)) - intransigence_closure(graph, th)
    finals = [horizon] if variant.startswith("temp") else [horizon - 1, horizon]
    for i in range(n):
        b = th.b[i]
        for t in range(horizon + 1):
            forced = t <= last_forced
            name = f"{'sub' if forced else 'free'}_{i}_{t}"
            if b == 0:
                constraints.append(Constraint(name, ((one, _x(i, t)),), LE, one))
                continue
            terms = [(one, _x(i, t))]
            if t > 0:
                terms += [(-Fraction(1, b), _x(j, t - 1)) for j in graph.neighbors(i)]
            if forced:
                terms.append((-one, f"y{i}"))
            constraints.append(Constraint(name, tuple(terms), LE, Fraction(0)))
        if mcc and i in target:
            for t in finals:
                constraints.append(Constraint(f"final_{i}_{t}", ((one, _x(i, t)),), GE, one))

    if mcc:
        objective = Objective(MIN, ((one, "q"),))
    elif variant.startswith("temp"):
        objective = Objective(MAX, tuple((one, _x(i, horizon)) for i in range(n)))
    else:
        half = Fraction(1, 2)
        objective = Objective(MAX, tuple(
            (half, _x(i, t)) for i in range(n) for t in (horizon - 1, horizon)))
    return IpModel(variables, constraints, objective, variant, n, horizon, d)


def build_temp_mcc(graph: Graph, thresholds: ThresholdProfile, costs=None) -> IpModel:
    return _build(graph, thresholds, "tempMCC", None, None, costs)


def build_temp_bmc(graph: Graph, thresholds: ThresholdProfile, k: int) -> IpModel:
    return _build(graph, thresholds, "tempBMC", None, k, None)


def build_fd_mcc(graph: Graph, thresholds: ThresholdProfile, d: int, costs=None) -> IpModel:
    return _build(graph, thresholds, "fdMCC", d, None, costs)


def build_fd_bmc(graph: Graph, thresholds: ThresholdProfile, d: int, k: int) -> IpModel:
    return _build(graph, thresholds, "fdBMC", d, k, None)


def build_model(variant: str, graph: Graph, thresholds: ThresholdProfile,
                d: int | None = None, k: int | None = None, costs=None) -> IpModel:
    builders = {
        "tempMCC": lambda: build_temp_mcc(graph, thresholds, costs),
        "tempBMC": lambda: build_temp_bmc(graph, thresholds, k),
        "fdMCC": lambda: build_fd_mcc(graph, thresholds, d, costs),
        "fdBMC": lambda: build_fd_bmc(graph, thresholds, d, k),
    }
    if variant not in builders:
        raise ValueError(f"unknown variant {variant!r}")
    return builders[variant]()


# -- LP text -----------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_WRAP = 78


def _decimal(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{float(c):.15g}"


def _expr(terms, fmt) -> list[str]:
    parts = []
    for idx, (c, v) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = v if mag == 1 else f"{fmt(mag)} {v}"
        if idx == 0:
            parts.append(body if sign == "+" else f"- {body}")
        else:
            parts.append(f"{sign} {body}")
    return parts or ["0"]


def _wrapped(head: str, parts: list[str]) -> list[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + 1 + len(p) > _WRAP and cur.strip():
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur.strip() else cur + p
    lines.append(cur)
    return lines


def _scaled(con: Constraint) -> tuple[list[tuple[Fraction, str]], Fraction]:
    m = math.lcm(*(c.denominator for c, _ in con.terms), con.rhs.denominator)
    return [(c * m, v) for c, v in con.terms], con.rhs * m


def lp_text(model: IpModel, scaled: bool = True) -> str:
    """LP file contents; ``scaled`` multiplies rows through to integer coefficients."""
    out = ["Maximize" if model.objective.sense == MAX else "Minimize"]
    out += _wrapped(" obj:", _expr(model.objective.terms, _decimal))
    out.append("Subject To")
    for con in model.constraints:
        terms, rhs = _scaled(con) if scaled else (list(con.terms), con.rhs)
        out += _wrapped(f" {con.name}:", _expr(terms, _decimal) + [con.sense, _decimal(rhs)])
    bounds = []
    for v in model.variables:
        if v.kind == BINARY:
            continue
        if v.upper is None:
            bounds.append(f" {v.name} >= {_decimal(v.lower)}")
        else:
            bounds.append(f" {_decimal(v.lower)} <= {v.name} <= {_decimal(v.upper)}")
    if bounds:
        out.append("Bounds")
        out += bounds
    for title, kind in (("Generals", INTEGER), ("Binaries", BINARY)):
        names = [v.name for v in model.variables if v.kind == kind]
        if names:
            out.append(title)
            out += _wrapped(" ", names)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: IpModel, path, scaled: bool = True) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(lp_text(model, scaled))


_SECTIONS = {
    "minimize": "obj", "maximize": "obj", "subject to": "rows", "bounds": "bounds",
    "generals": "generals", "binaries": "binaries", "end": "end",
}
_ORDER = ["obj", "rows", "bounds", "generals", "binaries", "end"]
_NUM = re.compile(r"[0-9]+(\.[0-9]*)?([eE][-+]?[0-9]+)?\Z|\.[0-9]+([eE][-+]?[0-9]+)?\Z")


def _number(tok: str, line: int) -> Fraction:
    if not _NUM.match(tok):
        raise LpFormatError(f"bad number {tok!r}", line)
    value = Fraction(tok)
    return value if value.denominator == 1 else value.limit_denominator(10**6)


def _parse_linear(tokens: list[tuple[str, int]]) -> list[tuple[Fraction, str]]:
    terms: list[tuple[Fraction, str]] = []
    sign, coef, need_op, signed = 1, None, False, False
    for tok, line in tokens:
        if tok in ("+", "-"):
            if coef is not None or signed:
                raise LpFormatError(f"misplaced {tok!r}", line)
            sign, need_op, signed = (-1 if tok == "-" else 1), False, True
        elif need_op:
            raise LpFormatError(f"missing operator before {tok!r}", line)
        elif _NUM.match(tok):
            if coef is not None:
                raise LpFormatError("two coefficients in a row", line)
            coef = _number(tok, line)
        elif _NAME.match(tok):
            terms.append((sign * (Fraction(1) if coef is None else coef), tok))
            sign, coef, need_op, signed = 1, None, True, False
        else:
            raise LpFormatError(f"unexpected token {tok!r}", line)
    if signed:
        raise LpFormatError("dangling sign", tokens[-1][1])
    if coef is not None and (coef != 0 or terms):
        raise LpFormatError("dangling coefficient", tokens[-1][1])
    return terms


def _tokens(text: str, line: int) -> list[tuple[str, int]]:
    return [(t, line) for t in re.findall(r"<=|>=|=<|=>|[-+:=<>]|[^\s:+\-<>=]+", text)]


def parse_lp(text: str) -> IpModel:
    """Strict reader for the subset of LP syntax produced by :func:`export_lp`."""
    section = None
    seen: list[str] = []
    buffers: dict[str, list[tuple[str, int]]] = {s: [] for s in _ORDER}
    obj_sense = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if not raw[:1].isspace() and key in _SECTIONS:
            sec = _SECTIONS[key]
            if sec in seen or (seen and _ORDER.index(sec) < _ORDER.index(seen[-1])):
                raise LpFormatError(f"section {line.strip()!r} out of order", lineno)
            if not seen and sec != "obj":
                raise LpFormatError("file must start with Minimize or Maximize", lineno)
            if sec == "obj":
                obj_sense = MAX if key == "maximize" else MIN
            seen.append(sec)
            section = sec
            continue
        if section is None or section == "end":
            raise LpFormatError("content outside a section", lineno)
        if not raw[:1].isspace():
            raise LpFormatError("section body lines must be indented", lineno)
        buffers[section] += _tokens(line, lineno)
    if "end" not in seen:
        raise LpFormatError("missing End")
    if "rows" not in seen:
        raise LpFormatError("missing Subject To")

    obj_toks = buffers["obj"]
    if len(obj_toks) >= 2 and obj_toks[1][0] == ":":
        obj_toks = obj_toks[2:]
    obj_terms = _parse_linear(obj_toks)

    constraints = []
    toks, i = buffers["rows"], 0
    while i < len(toks):
        if i + 1 >= len(toks) or toks[i + 1][0] != ":" or not _NAME.match(toks[i][0]):
            raise LpFormatError("constraint must start with 'name:'", toks[i][1])
        name, i = toks[i][0], i + 2
        j = i
        while j < len(toks) and toks[j][0] not in ("<=", ">=", "=", "=<", "=>", "<", ">"):
            j += 1
        if j + 1 >= len(toks):
            raise LpFormatError(f"constraint {name} has no sense and right-hand side", toks[i - 1][1])
        sense = {"<": LE, "=<": LE, ">": GE, "=>": GE}.get(toks[j][0], toks[j][0])
        k = j + 1
        neg = False
        if toks[k][0] == "-" and k + 1 < len(toks):
            neg, k = True, k + 1
        rhs = _number(toks[k][0], toks[k][1])
        constraints.append(Constraint(name, tuple(_parse_linear(toks[i:j])), sense, -rhs if neg else rhs))
        i = k + 1

    bounds: dict[str, tuple[Fraction, Fraction | None]] = {}
    btoks = buffers["bounds"]
    lines: dict[int, list[str]] = {}
    for tok, ln in btoks:
        lines.setdefault(ln, []).append(tok)
    for ln, parts in lines.items():
        if len(parts) == 3 and _NAME.match(parts[0]) and parts[1] == ">=":
            bounds[parts[0]] = (_number(parts[2], ln), None)
        elif len(parts) == 5 and parts[1] == parts[3] == "<=" and _NAME.match(parts[2]):
            bounds[parts[2]] = (_number(parts[0], ln), _number(parts[4], ln))
        else:
            raise LpFormatError("unsupported bound", ln)

    kinds: dict[str, str] = {}
    for sec, kind in (("generals", INTEGER), ("binaries", BINARY)):
        for tok, ln in buffers[sec]:
            if not _NAME.match(tok):
                raise LpFormatError(f"bad variable name {tok!r}", ln)
            if tok in kinds:
                raise LpFormatError(f"variable {tok} declared twice", ln)
            kinds[tok] = kind

    used = [v for _, v in obj_terms] + [v for con in constraints for _, v in con.terms]
    for v in used:
        if v not in kinds and v not in bounds:
            raise LpFormatError(f"variable {v} is never declared")
    variables, seen_names = [], set()
    for v in list(bounds) + list(kinds):
        if v in seen_names:
            continue
        seen_names.add(v)
        kind = kinds.get(v, CONTINUOUS)
        if kind == BINARY:
            variables.append(Variable(v, BINARY, Fraction(0), Fraction(1)))
        else:
            lo, hi = bounds.get(v, (Fraction(0), None))
            variables.append(Variable(v, kind, lo, hi))
    return IpModel(variables, constraints, Objective(obj_sense, tuple(obj_terms)))


def read_lp(path) -> IpModel:
    with open(path, encoding="ascii") as fh:
        return parse_lp(fh.read())


# -- exhaustive oracle -------------------------------------------------------

_XNAME = re.compile(r"x(\d+)_(\d+)\Z")


def _compile(con: Constraint, index: dict[str, int]):
    m = math.lcm(*(c.denominator for c, _ in con.terms), con.rhs.denominator)
    return ([(int(c * m), index[v]) for c, v in con.terms], con.sense, int(con.rhs * m))


def _holds(row, vals: list) -> bool:
    terms, sense, rhs = row
    lhs = sum(c * vals[j] for c, j in terms)
    if sense == LE:
        return lhs <= rhs
    if sense == GE:
        return lhs >= rhs
    return lhs == rhs


def ip_oracle(model: IpModel) -> tuple[Fraction, dict[str, Fraction]] | None:
    """Optimum by enumerating ``y`` and filling each ``x`` as large as the rows allow.

    Works from the compiled constraint rows only.  Rows are monotone in the
    earlier-time variables, so the maximal fill is the best completion for
    every fixed ``y``.  Returns ``None`` when no assignment is feasible.
    """
    names = model.variable_names
    index = {v: j for j, v in enumerate(names)}
    ys = sorted((v for v in names if v.startswith("y")), key=lambda s: int(s[1:]))
    xs = sorted((int(m.group(2)), int(m.group(1)), v)
                for v in names if (m := _XNAME.match(v)))
    xpos = {v: pos for pos, (_, _, v) in enumerate(xs)}
    q_var = next((v for v in model.variables if v.name == "q"), None)

    # each <= row gates the x variable with the latest time in it
    gating: dict[str, list] = {v: [] for _, _, v in xs}
    checks, budget = [], None
    for con in model.constraints:
        if q_var is not None and any(v == "q" for _, v in con.terms):
            budget = con
            continue
        xvars = [v for _, v in con.terms if v in xpos]
        if con.sense == LE and xvars:
            gating[max(xvars, key=xpos.__getitem__)].append(_compile(con, index))
        else:
            checks.append(_compile(con, index))
    order = [(index[v], gating[v]) for _, _, v in xs]
    obj = [(c, index[v]) for c, v in model.objective.terms if v != "q"]

    best = None
    for bits in itertools.product((0, 1), repeat=len(ys)):
        vals = [0] * len(names)
        for y, bit in zip(ys, bits):
            vals[index[y]] = bit
        for j, rows in order:
            vals[j] = 1
            if not all(_holds(r, vals) for r in rows):
                vals[j] = 0
        if not all(_holds(r, vals) for r in checks):
            continue
        if not all(_holds(r, vals) for _, rows in order for r in rows):
            continue
        values = {v: Fraction(vals[j]) for j, v in enumerate(names)}
        if q_var is not None:
            coef_q = next(c for c, v in budget.terms if v == "q")
            rest = sum((c * values[v] for c, v in budget.terms if v != "q"), Fraction(0))
            q = (budget.rhs - rest) / coef_q
            if q_var.kind == INTEGER:
                q = Fraction(math.ceil(q))
            values["q"] = max(q, q_var.lower)
            if not budget.satisfied(values):
                continue
        val = model.objective.value(values) if q_var is not None else sum(
            (c * vals[j] for c, j in obj), Fraction(0))
        better = best is None or (val > best[0] if model.objective.sense == MAX else val < best[0])
        if better:
            best = (val, values)
    return best


# -- solution checking -------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    feasible: bool
    objective: Fraction
    subsidy_set: tuple[int, ...]
    simulated_adoption: Fraction
    lag_audit: bool
    notes: tuple[str, ...] = field(default=())

    def text(self) -> str:
        lines = [
            f"feasible: {'yes' if self.feasible else 'no'}",
            f"objective: {format_fraction(self.objective)}",
            f"simulated_adoption: {self.simulated_adoption.numerator}/{self.simulated_adoption.denominator}",
            f"lag_audit: {'pass' if self.lag_audit else 'fail'}",
        ]
        return "\n".join(lines + list(self.notes)) + "\n"


def parse_solution(text: str) -> IpSolution:
    """Read ``name value`` lines; ``#`` starts a comment."""
    values: dict[str, Fraction] = {}
    objective = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LpFormatError("expected 'name value'", lineno)
        try:
            val = Fraction(parts[1])
        except (ValueError, ZeroDivisionError):
            raise LpFormatError(f"bad value {parts[1]!r}", lineno) from None
        if parts[0] in ("objective", "obj"):
            objective = val
        elif parts[0] in values:
            raise LpFormatError(f"duplicate variable {parts[0]}", lineno)
        else:
            values[parts[0]] = val
    return IpSolution(values, objective)


def _round(model: IpModel, solution: IpSolution) -> dict[str, Fraction]:
    values = {}
    for v in model.variables:
        raw = solution.values.get(v.name, Fraction(0))
        if v.kind == BINARY:
            r = round(raw)
            if abs(raw - r) > Fraction(1, 10**6) or r not in (0, 1):
                raise ConstraintViolationError(v.name, f"value {raw} is not binary")
            raw = Fraction(r)
        values[v.name] = raw
    unknown = set(solution.values) - set(values)
    if unknown:
        raise ConstraintViolationError(sorted(unknown)[0], "unknown variable")
    return values


def decode_and_verify(model: IpModel, solution: IpSolution, graph: Graph,
                      thresholds: ThresholdProfile, reference=None) -> VerificationReport:
    """Check an assignment row by row, then replay its subsidy set in the simulator.

    ``reference`` is an optional known optimum objective (e.g. from
    ``solve_exact``); when given, equality is noted in the report.
    """
    values = _round(model, solution)
    for v in model.variables:
        if values[v.name] < v.lower or (v.upper is not None and values[v.name] > v.upper):
            raise ConstraintViolationError(v.name, "bound violated")
    bad = model.first_violation(values)
    if bad is not None:
        raise ConstraintViolationError(bad)

    n = graph.node_count
    subsidy = tuple(i for i in range(n) if values.get(f"y{i}") == 1)
    if model.variant.startswith("fd"):
        sched = SubsidySchedule.fixed_duration(subsidy, model.d)
    else:
        sched = SubsidySchedule.temporary(subsidy)
    _, report = run(graph, thresholds, sched)
    objective = model.objective.value(values)
    notes = []
    if model.variant.endswith("MCC"):
        target = set(range(n)) - intransigence_closure(graph, thresholds)
        ok = all(target <= s for s in report.longterm_sets())
        if not ok:
            notes.append("note: subsidy set does not convert every convertible node")
    else:
        ok = report.longterm_adoption * n >= objective
        if not ok:
            notes.append("note: objective exceeds simulated adoption")
    if reference is not None:
        ref = to_fraction(reference)
        notes.append(f"reference_match: {'yes' if ref == objective else 'no'}")
    return VerificationReport(True, objective, subsidy, report.longterm_adoption, ok, tuple(notes))


def solution_from_subsidy(model: IpModel, graph: Graph, thresholds: ThresholdProfile,
                          subsidy: Iterable[int]) -> IpSolution:
    """Exact assignment induced by simulating a subsidy set over the model horizon."""
    from .dynamics import step_mask, unconditional_mask

    n = graph.node_count
    s = sum(1 << i for i in subsidy)
    last_forced = n if model.variant.startswith("temp") else model.d - 1
    nbr, b = graph.neighbor_masks, thresholds.b
    state = s | unconditional_mask(thresholds)
    values: dict[str, Fraction] = {f"y{i}": Fraction((s >> i) & 1) for i in range(n)}
    for t in range(model.horizon + 1):
        if t > 0:
            state = step_mask(nbr, b, state, s if t <= last_forced else 0)
        for i in range(n):
            values[_x(i, t)] = Fraction((state >> i) & 1)
    if any(v.name == "q" for v in model.variables):
        budget = model.constraints[0]
        cost = sum((c * values[v] for c, v in budget.terms if v != "q"), Fraction(0))
        kind = next(v.kind for v in model.variables if v.name == "q")
        values["q"] = Fraction(math.ceil(cost)) if kind == INTEGER else cost
    return IpSolution(values, model.objective.value(values))
