"""Exact and baseline subsidy planning, using the simulator as evaluation oracle.

Four planning variants are supported: ``tempMCC`` / ``fdMCC`` (cheapest set that
permanently converts every node outside the intransigence closure) and
``tempBMC`` / ``fdBMC`` (best long-term adoption with at most ``k`` subsidized
nodes).

Pruning relies on subsidy-set monotonicity: the long-term adopters of ``S`` are
contained in those of any superset of ``S``.  Tie-breaking is deterministic:
MCC returns the lexicographically smallest minimum-cost set, BMC the smallest
optimal set, lexicographically first among those.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable

from .dynamics import (
    BoundViolationError,
    ConvergenceReport,
    SubsidySchedule,
    intransigence_closure,
    run,
    simulate_masks,
    unconditional_mask,
)
from .graph_core import Graph, ThresholdProfile, to_fraction

VARIANTS = ("tempMCC", "tempBMC", "fdMCC", "fdBMC")


class InfeasibleError(ValueError):
    """No subsidy set within the allowed cost converts the target."""


class SolveTimeout(RuntimeError):
    """The time budget ran out; ``incumbent`` is the best set known so far (may be None)."""

    def __init__(self, message: str, incumbent: tuple[int, ...] | None = None):
        super().__init__(message)
        self.incumbent = incumbent


@dataclass(frozen=True)
class PlanningProblem:
    variant: str
    graph: Graph
    thresholds: ThresholdProfile
    d: int | None = None
    k: int | None = None
    node_costs: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if len(self.thresholds.b) != self.graph.node_count:
            raise ValueError("threshold profile does not match the graph")
        if self.is_fd and (self.d is None or self.d < 1):
            raise ValueError("fixed-duration variants need d >= 1")
        if not self.is_mcc and (self.k is None or self.k < 0):
            raise ValueError("budgeted variants need k >= 0")
        if self.node_costs is not None:
            costs = tuple(to_fraction(c) for c in self.node_costs)
            if len(costs) != self.graph.node_count or any(c <= 0 for c in costs):
                raise ValueError("node costs must be positive, one per node")
            object.__setattr__(self, "node_costs", costs)

    @property
    def is_mcc(self) -> bool:
        return self.variant.endswith("MCC")

    @property
    def is_fd(self) -> bool:
        return self.variant.startswith("fd")

    @property
    def n(self) -> int:
        return self.graph.node_count

    @cached_property
    def costs(self) -> tuple[Fraction, ...]:
        return self.node_costs or (Fraction(1),) * self.n

    @cached_property
    def target(self) -> frozenset[int]:
        """Nodes that complete conversion must reach (everything outside the closure)."""
        return frozenset(range(self.n)) - intransigence_closure(self.graph, self.thresholds)

    def schedule(self, nodes: Iterable[int]) -> SubsidySchedule:
        if self.is_fd:
            return SubsidySchedule.fixed_duration(nodes, self.d)
        return SubsidySchedule.temporary(nodes)

    def cost(self, nodes: Iterable[int]) -> Fraction:
        return sum((self.costs[i] for i in nodes), Fraction(0))


@dataclass(frozen=True)
class PlanResult:
    subsidy_set: tuple[int, ...]
    objective: Fraction
    certificate: ConvergenceReport
    optimal: bool
    nodes_explored: int = 0
    audit_log: tuple = field(default=(), repr=False, compare=False)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _tuple(mask: int) -> tuple[int, ...]:
    return tuple(_bits(mask))


class _Evaluator:
    """Cached long-term behaviour keyed by subsidy bitmask."""

    def __init__(self, problem: PlanningProblem):
        self.p = problem
        self.n = problem.n
        self.target = sum(1 << i for i in problem.target)
        self._cycles: dict[int, tuple[int, ...]] = {}
        self.starts: dict[int, int] = {}
        self.evaluations = 0

    def cycle(self, mask: int) -> tuple[int, ...]:
        hit = self._cycles.get(mask)
        if hit is None:
            sched = self.p.schedule(_bits(mask))
            states, start, _, _ = simulate_masks(self.p.graph, self.p.thresholds, sched)
            if states[start] == states[start + 1]:
                hit = (states[start],)
            else:
                hit = (states[start], states[start + 1])
            self._cycles[mask] = hit
            self.starts[mask] = start
            self.evaluations += 1
        return hit

    def adoption(self, mask: int) -> Fraction:
        c = self.cycle(mask)
        return Fraction(sum(s.bit_count() for s in c), len(c) * self.n)

    def complete(self, mask: int) -> bool:
        return all(self.target & ~s == 0 for s in self.cycle(mask))


class _Clock:
    def __init__(self, budget: float | None):
        self.deadline = None if budget is None else time.monotonic() + budget

    def check(self, incumbent=None):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolveTimeout("time budget exhausted", incumbent)


def _integer_costs(costs: tuple[Fraction, ...]) -> tuple[list[int], int]:
    """Scale rational costs to integers; returns (scaled costs, common denominator)."""
    den = reduce(lambda a, c: a * c.denominator // math.gcd(a, c.denominator), costs, 1)
    return [int(c * den) for c in costs], den


def _result(problem: PlanningProblem, mask: int, optimal: bool, explored: int, audit=()) -> PlanResult:
    nodes = _tuple(mask)
    _, report = run(problem.graph, problem.thresholds, problem.schedule(nodes))
    objective = problem.cost(nodes) if problem.is_mcc else report.longterm_adoption
    return PlanResult(nodes, objective, report, optimal, explored, tuple(audit))


# -- tempMCC: implicit hitting sets over blocking sets -----------------------


class _TempCoverSearch:
    """Minimum-cost temporary complete conversion.

    Under a temporary subsidy the long-term adopters are the self-sustaining
    part of the bootstrap closure of ``S``.  Complete conversion therefore fails
    exactly when some *blocking set* ``B`` (every member has fewer than ``b_i``
    neighbours outside ``B``) contains a target and avoids ``S``.  Feasible sets
    are the hitting sets of all such ``B``; they are generated lazily from
    failed candidates and every candidate is confirmed by simulation.
    """

    def __init__(self, problem: PlanningProblem, ev: _Evaluator, clock: _Clock):
        self.p, self.ev, self.clock = problem, ev, clock
        self.n = problem.n
        self.full = (1 << self.n) - 1
        self.nbr = problem.graph.neighbor_masks
        self.b = problem.thresholds.b
        self.base = unconditional_mask(problem.thresholds)
        self.cost, self.den = _integer_costs(problem.costs)
        self.cores: list[int] = []
        self.core_set: set[int] = set()
        self.explored = 0
        self.incumbent: int | None = None

    def closure(self, seeds: int) -> int:
        active = seeds | self.base
        while True:
            new = 0
            for i in _bits(self.full & ~active):
                if (self.nbr[i] & active).bit_count() >= self.b[i]:
                    new |= 1 << i
            if not new:
                return active
            active |= new

    def largest_blocking(self, cand: int) -> int:
        while True:
            drop = 0
            for u in _bits(cand):
                if (self.nbr[u] & ~cand & self.full).bit_count() >= self.b[u]:
                    drop |= 1 << u
            if not drop:
                return cand
            cand &= ~drop

    def shrink(self, block: int) -> int:
        for v in _bits(block):
            if not (block >> v) & 1:
                continue
            smaller = self.largest_blocking(block & ~(1 << v))
            if smaller & self.ev.target:
                block = smaller
        return block

    def mask_cost(self, mask: int) -> int:
        return sum(self.cost[i] for i in _bits(mask))

    def learn(self, seeds: int, allowed: int) -> None:
        """Collect blocking sets from ``seeds``, greedily patching until complete."""
        cur = seeds
        while not self.ev.complete(cur):
            self.clock.check(_tuple(self.incumbent) if self.incumbent is not None else None)
            block = self.full & ~self.closure(cur)
            if not block & self.ev.target:
                raise BoundViolationError("simulation and closure disagree on complete conversion")
            core = self.shrink(block)
            if core not in self.core_set:
                self.core_set.add(core)
                self.cores.append(core)
            pick = core & allowed
            if not pick:
                return
            # cheapest member, lowest index on ties
            v = min(_bits(pick), key=lambda i: (self.cost[i], i))
            cur |= 1 << v
        c = self.mask_cost(cur)
        if self.incumbent is None or c < self.mask_cost(self.incumbent):
            self.incumbent = cur

    def hitting_set(self, must_in: int, allowed: int, limit: int, strict: bool) -> int | None:
        """Cheapest ``S`` with ``must_in <= S <= must_in|allowed`` hitting every core.

        Only sets with cost ``<= limit`` (``< limit`` when ``strict``) qualify.
        """
        cost = self.cost
        best: list = [math.inf if limit is None else limit, None, strict]

        def lower_bound(unhit: list[int], free: int) -> int:
            used = total = 0
            for c in sorted(unhit, key=lambda c: (c & free).bit_count()):
                cf = c & free
                if cf & used:
                    continue
                used |= cf
                total += min(cost[i] for i in _bits(cf))
            return total

        def ok(value: int) -> bool:
            return value < best[0] if best[2] else value <= best[0]

        def rec(chosen: int, cur: int, free: int, unhit: list[int]) -> None:
            self.explored += 1
            if self.explored % 256 == 0:
                self.clock.check()
            if not unhit:
                if ok(cur):
                    best[0], best[1], best[2] = cur, chosen, True
                return
            if any(not (c & free) for c in unhit):
                return
            if not ok(cur + lower_bound(unhit, free)):
                return
            core = min(unhit, key=lambda c: ((c & free).bit_count(), c))
            for e in sorted(_bits(core & free), key=lambda i: (cost[i], i)):
                bit = 1 << e
                rec(chosen | bit, cur + cost[e], free & ~bit, [c for c in unhit if not c & bit])
                free &= ~bit

        start = [c for c in self.cores if not c & must_in]
        rec(must_in, self.mask_cost(must_in), allowed & ~must_in, start)
        return best[1]

    def feasible_within(self, must_in: int, allowed: int, limit: int) -> int | None:
        """Some complete-converting ``S`` in the box with cost ``<= limit``, or None."""
        while True:
            cand = self.hitting_set(must_in, allowed, limit, strict=False)
            if cand is None:
                return None
            if self.ev.complete(cand):
                return cand
            self.learn(cand, allowed | must_in)

    def optimum(self, max_cost: int | None) -> int:
        self.learn(0, self.full)
        while True:
            inc = None if self.incumbent is None else self.mask_cost(self.incumbent)
            if inc is not None and (max_cost is None or inc <= max_cost):
                cand = self.hitting_set(0, self.full, inc, strict=True)
            else:
                inc = None
                cand = self.hitting_set(0, self.full, max_cost, strict=False)
            if cand is None:
                if inc is None:
                    raise InfeasibleError("no subsidy set within the cost limit converts the target")
                return inc
            if self.ev.complete(cand):
                return self.mask_cost(cand)
            self.learn(cand, self.full)

    def lexicographic(self, opt: int) -> int:
        chosen, excluded = 0, 0
        for v in range(self.n):
            if self.mask_cost(chosen) <= opt and self.ev.complete(chosen):
                return chosen
            bit = 1 << v
            if self.mask_cost(chosen | bit) <= opt:
                allowed = self.full & ~excluded & ~((1 << (v + 1)) - 1)
                if self.feasible_within(chosen | bit, allowed, opt) is not None:
                    chosen |= bit
                    continue
            excluded |= bit
        if not self.ev.complete(chosen):
            raise BoundViolationError("lexicographic reconstruction lost feasibility")
        return chosen


# -- generic searches --------------------------------------------------------


def _mcc_deepening(problem, ev, clock, max_cost, audit):
    n = problem.n
    cost, den = _integer_costs(problem.costs)
    grid = reduce(math.gcd, cost)
    explored = 0
    log = []

    def dfs(start, chosen, spent, level):
        nonlocal explored
        explored += 1
        if explored % 256 == 0:
            clock.check()
        if ev.complete(chosen):
            return chosen
        rest = ((1 << n) - 1) & ~((1 << start) - 1)
        if not ev.complete(chosen | rest):
            if audit:
                log.append((chosen, chosen | rest))
            return None
        for v in range(start, n):
            if spent + cost[v] <= level:
                found = dfs(v + 1, chosen | (1 << v), spent + cost[v], level)
                if found is not None:
                    return found
        return None

    top = sum(cost) if max_cost is None else min(sum(cost), max_cost)
    level = 0
    while level <= top:
        found = dfs(0, 0, 0, level)
        if found is not None:
            return found, explored, log
        level += grid
    raise InfeasibleError("no subsidy set within the cost limit converts the target")


def _bmc_search(problem, ev, clock, audit):
    n = problem.n
    k = min(problem.k, n)
    explored = 0
    log = []
    best = {"val": ev.adoption(0), "key": (0, ())}

    def dfs(start, chosen, size, tup):
        nonlocal explored
        explored += 1
        if explored % 256 == 0:
            clock.check(best["key"][1])
        val = ev.adoption(chosen)
        if val > best["val"] or (val == best["val"] and (size, tup) < best["key"]):
            best["val"], best["key"] = val, (size, tup)
        if size == k or start == n:
            return
        rest = ((1 << n) - 1) & ~((1 << start) - 1)
        padded = chosen | rest
        ub = ev.adoption(padded)
        if ub < best["val"] or (ub == best["val"] and size + 1 >= best["key"][0]):
            if audit:
                log.append((chosen, padded))
            return
        for v in range(start, n):
            dfs(v + 1, chosen | (1 << v), size + 1, tup + (v,))

    dfs(0, 0, 0, ())
    mask = sum(1 << i for i in best["key"][1])
    return mask, explored, log


def _check_cap(problem: PlanningProblem, node_cap: int | None) -> None:
    if node_cap is not None and problem.n > node_cap:
        raise ValueError(f"{problem.n} nodes exceeds the exact-search cap of {node_cap}")


def solve_exact(
    problem: PlanningProblem,
    node_cap: int | None = 32,
    time_budget: float | None = None,
    max_cost=None,
    audit: bool = False,
) -> PlanResult:
    """Provably optimal subsidy set for ``problem``.

    ``max_cost`` bounds MCC searches (``InfeasibleError`` if nothing fits).
    ``audit=True`` replays every pruned branch and checks the superset bound
    at the level of adoption sets; violations raise ``BoundViolationError``.
    """
    _check_cap(problem, node_cap)
    ev = _Evaluator(problem)
    clock = _Clock(time_budget)
    scaled_max = None
    if max_cost is not None:
        _, den = _integer_costs(problem.costs)
        scaled_max = math.floor(to_fraction(max_cost) * den)

    if problem.variant == "tempMCC":
        search = _TempCoverSearch(problem, ev, clock)
        opt = search.optimum(scaled_max)
        mask = search.lexicographic(opt)
        explored, log = search.explored + ev.evaluations, []
    elif problem.is_mcc:
        mask, explored, log = _mcc_deepening(problem, ev, clock, scaled_max, audit)
    else:
        mask, explored, log = _bmc_search(problem, ev, clock, audit)

    if audit:
        _replay_audit(problem, ev, log)
    return _result(problem, mask, True, explored, log)


def _replay_audit(problem, ev, log) -> None:
    for partial, padded in log:
        small, big = ev.cycle(partial), ev.cycle(padded)
        # containment holds at equal times, so align the two cycles
        t0 = max(ev.starts[partial], ev.starts[padded])
        for t in (t0, t0 + 1):
            a = small[(t - ev.starts[partial]) % len(small)]
            b = big[(t - ev.starts[padded]) % len(big)]
            if a & ~b:
                raise BoundViolationError(
                    f"superset bound failed for {_tuple(partial)} vs {_tuple(padded)}"
                )


def solve_enumeration(problem: PlanningProblem) -> PlanResult:
    """Unpruned exhaustive search with the same tie-breaking as :func:`solve_exact`."""
    ev = _Evaluator(problem)
    n = problem.n
    best_key, best_mask = None, None
    for mask in range(1 << n):
        nodes = _tuple(mask)
        if problem.is_mcc:
            if not ev.complete(mask):
                continue
            key = (problem.cost(nodes), nodes)
        else:
            if len(nodes) > problem.k:
                continue
            key = (-ev.adoption(mask), len(nodes), nodes)
        if best_key is None or key < best_key:
            best_key, best_mask = key, mask
    if best_mask is None:
        raise InfeasibleError("no subsidy set converts the target")
    return _result(problem, best_mask, True, 1 << n)


# -- baselines ---------------------------------------------------------------


def greedy(problem: PlanningProblem) -> PlanResult:
    """Add, ``k`` times, the node with the best simulated long-term adoption."""
    if problem.is_mcc:
        raise ValueError("greedy applies to budgeted (BMC) variants only")
    ev = _Evaluator(problem)
    chosen = 0
    for _ in range(min(problem.k, problem.n)):
        options = [v for v in range(problem.n) if not (chosen >> v) & 1]
        # max() keeps the first maximal element, i.e. the lowest index
        v = max(options, key=lambda v: ev.adoption(chosen | (1 << v)))
        chosen |= 1 << v
    return _result(problem, chosen, False, ev.evaluations)


@dataclass(frozen=True)
class BaselineSummary:
    mean: Fraction
    min: Fraction
    max: Fraction
    values: tuple[Fraction, ...]
    sets: tuple[tuple[int, ...], ...] = ()


def _summary(values, sets=()) -> BaselineSummary:
    values = tuple(values)
    return BaselineSummary(
        mean=sum(values, Fraction(0)) / len(values),
        min=min(values),
        max=max(values),
        values=values,
        sets=tuple(sets),
    )


def random_baseline(problem: PlanningProblem, set_size: int, trials: int, seed) -> BaselineSummary:
    """Long-term adoption of uniformly random ``set_size`` subsidy sets.

    Draws use ``random.Random(seed).sample`` (MT19937).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= set_size <= problem.n:
        raise ValueError("set_size must be between 0 and the node count")
    rng = random.Random(seed)
    ev = _Evaluator(problem)
    sets = [tuple(sorted(rng.sample(range(problem.n), set_size))) for _ in range(trials)]
    values = [ev.adoption(sum(1 << i for i in s)) for s in sets]
    return _summary(values, sets)


def all_sets_baseline(problem: PlanningProblem, set_size: int) -> BaselineSummary:
    """Adoption of every subsidy set of size ``set_size`` (exact expectation)."""
    from itertools import combinations

    ev = _Evaluator(problem)
    sets = list(combinations(range(problem.n), set_size))
    return _summary((ev.adoption(sum(1 << i for i in s)) for s in sets), sets)
