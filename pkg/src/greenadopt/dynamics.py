"""Synchronous threshold dynamics under temporary and fixed-duration subsidies.

A node is Green at ``t + 1`` iff it is subsidized at that step or at least
``b_i`` of its neighbours are Green at ``t``.  States are stored as integer
bitmasks internally; :class:`AdoptionState` is the public wrapper.

Convergence is checked against the proved horizons: a temporary subsidy
reaches a fixed point within ``2|V|`` steps, a fixed-duration subsidy reaches a
cycle of length at most two within ``d + 2|E| + |V|`` steps.  Exceeding either
is reported as :class:`BoundViolationError` (an engine bug, never a truncation).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .graph_core import Graph, ThresholdProfile

HALF = Fraction(1, 2)


class BoundViolationError(RuntimeError):
    """A trajectory outran a proved convergence bound."""


@dataclass(frozen=True)
class AdoptionState:
    n: int
    mask: int

    @classmethod
    def from_nodes(cls, n: int, nodes: Iterable[int]) -> "AdoptionState":
        m = 0
        for i in nodes:
            if not 0 <= i < n:
                raise ValueError(f"node {i} out of range")
            m |= 1 << i
        return cls(n, m)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "AdoptionState":
        bits = list(bits)
        return cls.from_nodes(len(bits), (i for i, x in enumerate(bits) if x))

    @classmethod
    def from_bitstring(cls, s: str) -> "AdoptionState":
        return cls.from_bits(int(c) for c in s)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> i) & 1 for i in range(self.n))

    @property
    def adopters(self) -> frozenset[int]:
        return frozenset(i for i in range(self.n) if (self.mask >> i) & 1)

    def count(self) -> int:
        return self.mask.bit_count()

    def fraction(self) -> Fraction:
        return Fraction(self.count(), self.n)

    def issubset(self, other: "AdoptionState") -> bool:
        return self.mask & ~other.mask == 0

    __le__ = issubset

    def bitstring(self) -> str:
        return "".join(str(x) for x in self.bits)

    def __str__(self) -> str:
        return self.bitstring()


TEMPORARY = "temporary"
FIXED_DURATION = "fixed_duration"
INDEFINITE = "indefinite"


@dataclass(frozen=True)
class SubsidySchedule:
    subsidized: frozenset[int]
    mode: str
    duration: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "subsidized", frozenset(self.subsidized))
        if self.mode not in (TEMPORARY, FIXED_DURATION, INDEFINITE):
            raise ValueError(f"unknown subsidy mode {self.mode!r}")
        if self.mode == FIXED_DURATION:
            if self.duration is None or self.duration < 1:
                raise ValueError("fixed-duration subsidy needs d >= 1")
        elif self.duration is not None:
            raise ValueError("duration only applies to fixed-duration subsidies")

    @classmethod
    def temporary(cls, nodes: Iterable[int]) -> "SubsidySchedule":
        return cls(frozenset(nodes), TEMPORARY)

    @classmethod
    def fixed_duration(cls, nodes: Iterable[int], d: int) -> "SubsidySchedule":
        return cls(frozenset(nodes), FIXED_DURATION, d)

    @classmethod
    def indefinite(cls, nodes: Iterable[int]) -> "SubsidySchedule":
        return cls(frozenset(nodes), INDEFINITE)


@dataclass(frozen=True)
class ConvergenceReport:
    transient: int
    cycle: tuple[AdoptionState, ...]
    longterm_adoption: Fraction
    energy_trace: tuple[Fraction, ...]
    growth_stop: int | None = None  # temporary mode: first step with no new adopters

    @property
    def cycle_length(self) -> int:
        return len(self.cycle)

    def longterm_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(s.adopters for s in self.cycle)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[AdoptionState, ...]
    subsidy_end: int  # index of the last state produced while forcing was active

    def dump(self, report: ConvergenceReport) -> str:
        lines = [f"t={t} {s.bitstring()}" for t, s in enumerate(self.states)]
        a = report.longterm_adoption
        lines.append(
            f"transient={report.transient} cycle={report.cycle_length} "
            f"adoption={a.numerator}/{a.denominator}"
        )
        return "\n".join(lines)


# -- core update -------------------------------------------------------------


def _full(n: int) -> int:
    return (1 << n) - 1


def unconditional_mask(thresholds: ThresholdProfile) -> int:
    m = 0
    for i, bi in enumerate(thresholds.b):
        if bi <= 0:
            m |= 1 << i
    return m


def step_mask(nbr: tuple[int, ...], b: tuple[int, ...], mask: int, forced: int = 0) -> int:
    out = forced
    for i, nm in enumerate(nbr):
        if (nm & mask).bit_count() >= b[i]:
            out |= 1 << i
    return out


def _check(graph: Graph, thresholds: ThresholdProfile) -> None:
    if len(thresholds.b) != graph.node_count:
        raise ValueError("threshold profile does not match the graph")


def step(
    graph: Graph,
    thresholds: ThresholdProfile,
    state: AdoptionState,
    forced: Iterable[int] = (),
) -> AdoptionState:
    """One concurrent update; ``forced`` nodes are Green regardless."""
    _check(graph, thresholds)
    if state.n != graph.node_count:
        raise ValueError("state length does not match the graph")
    fm = AdoptionState.from_nodes(graph.node_count, forced).mask
    return AdoptionState(state.n, step_mask(graph.neighbor_masks, thresholds.b, state.mask, fm))


def _energy_mask(nbr, b, x: int, nxt: int) -> Fraction:
    # <b - 1/2, x> - <A x - (b - 1/2), nxt>, computed on the half-integer grid
    twice = 0
    for i, nm in enumerate(nbr):
        bb = 2 * b[i] - 1
        if (x >> i) & 1:
            twice += bb
        if (nxt >> i) & 1:
            twice -= 2 * (nm & x).bit_count() - bb
    return Fraction(twice, 2)


def energy(
    graph: Graph,
    thresholds: ThresholdProfile,
    state: AdoptionState,
    next_state: AdoptionState,
) -> Fraction:
    """Necessary sightings minus wasted sightings, thresholds shifted to ``b - 1/2``.

    Only defined for an unforced step: ``next_state`` must equal ``step(state)``.
    """
    _check(graph, thresholds)
    nbr, b = graph.neighbor_masks, thresholds.b
    if step_mask(nbr, b, state.mask) != next_state.mask:
        raise ValueError("energy is defined only for unforced updates (next != step(state))")
    return _energy_mask(nbr, b, state.mask, next_state.mask)


def _transient(states: list[int], cycle_len: int) -> int:
    t = len(states) - 1
    while t - cycle_len >= 0 and states[t - cycle_len] == states[t]:
        t -= 1
    # states[t:] are periodic with period cycle_len; smallest such t
    return max(t - cycle_len + 1, 0)


def simulate_masks(
    graph: Graph,
    thresholds: ThresholdProfile,
    schedule: SubsidySchedule,
    initial: int | None = None,
) -> tuple[list[int], int, int, int | None]:
    """Run to convergence on bitmasks.

    Returns ``(states, cycle_start, subsidy_end, growth_stop)`` where the last
    state(s) of ``states`` close the cycle starting at ``cycle_start``.
    """
    n, m_edges = graph.node_count, graph.edge_count
    nbr, b = graph.neighbor_masks, thresholds.b
    forced = AdoptionState.from_nodes(n, schedule.subsidized).mask
    x0 = forced | unconditional_mask(thresholds) if initial is None else initial
    states = [x0]

    if schedule.mode in (TEMPORARY, INDEFINITE):
        t = 0
        while True:
            nxt = step_mask(nbr, b, states[t], forced)
            if states[t] & ~nxt:
                raise BoundViolationError("back-migration while subsidy is active")
            states.append(nxt)
            t += 1
            if nxt == states[t - 1]:
                break
            if t > max(n, 1):
                raise BoundViolationError(f"growth phase exceeded |V|={n} steps")
        growth_stop = t
        if schedule.mode == INDEFINITE:
            return states, t - 1, len(states) - 1, None
        subsidy_end = t
        while True:
            nxt = step_mask(nbr, b, states[t])
            if nxt & ~states[t]:
                raise BoundViolationError("new adoption after the subsidy was removed")
            states.append(nxt)
            if nxt == states[t]:
                break
            t += 1
            if t - growth_stop > n:
                raise BoundViolationError(f"erosion phase exceeded |V|={n} steps")
        if t > 2 * n:
            raise BoundViolationError(f"temporary subsidy exceeded 2|V|={2 * n} steps")
        return states, t, subsidy_end, growth_stop

    d = schedule.duration
    for t in range(1, d):
        states.append(step_mask(nbr, b, states[t - 1], forced))
    subsidy_end = d - 1
    limit = d - 1 + 2 * m_edges + n
    t = d - 1
    states.append(step_mask(nbr, b, states[t]))
    while True:
        states.append(step_mask(nbr, b, states[t + 1]))
        if states[t + 2] == states[t]:
            break
        t += 1
        if t > limit:
            raise BoundViolationError(
                f"fixed-duration subsidy did not reach a <=2-cycle by t={limit}"
            )
    return states, t, subsidy_end, None


def run(
    graph: Graph,
    thresholds: ThresholdProfile,
    schedule: SubsidySchedule,
    audit: bool = False,
) -> tuple[Trajectory, ConvergenceReport]:
    """Simulate ``schedule`` until the long-term behaviour is certain.

    Temporary mode forces the subsidy until the first step without new
    adopters, then lets the system erode to a fixed point.  Fixed-duration mode
    forces states ``0..d-1`` and iterates until ``x(t) == x(t+2)``.

    With ``audit=True`` the temporary-mode result is cross-checked against a
    flat ``|V|``-step subsidy, which must give the same final state.
    """
    _check(graph, thresholds)
    for i in schedule.subsidized:
        if not 0 <= i < graph.node_count:
            raise ValueError(f"subsidized node {i} out of range")
    n = graph.node_count
    nbr, b = graph.neighbor_masks, thresholds.b
    states, start, subsidy_end, growth_stop = simulate_masks(graph, thresholds, schedule)

    if states[start + 1] == states[start]:
        cycle = (states[start],)
    else:
        cycle = (states[start], states[start + 1])
    transient = _transient(states, len(cycle))

    first_free = subsidy_end if schedule.mode != INDEFINITE else None
    trace: list[Fraction] = []
    if first_free is not None:
        for t in range(first_free, len(states) - 1):
            trace.append(_energy_mask(nbr, b, states[t], states[t + 1]))

    total = sum(c.bit_count() for c in cycle)
    report = ConvergenceReport(
        transient=transient,
        cycle=tuple(AdoptionState(n, c) for c in cycle),
        longterm_adoption=Fraction(total, len(cycle) * n),
        energy_trace=tuple(trace),
        growth_stop=growth_stop,
    )
    if audit and schedule.mode == TEMPORARY:
        flat = longterm_flat_subsidy(graph, thresholds, schedule.subsidized, n + 1)
        if flat != cycle[0]:
            raise BoundViolationError("temporary subsidy differs from the flat |V|-step subsidy")
    return Trajectory(tuple(AdoptionState(n, s) for s in states), subsidy_end), report


def longterm_flat_subsidy(graph, thresholds, subsidized, forced_steps: int) -> int:
    """Final state after forcing for ``forced_steps`` states and |V| free steps."""
    sched = SubsidySchedule.fixed_duration(subsidized, forced_steps)
    states, start, _, _ = simulate_masks(graph, thresholds, sched)
    if states[start] != states[start + 1]:
        raise BoundViolationError("flat subsidy ended in a 2-cycle")
    return states[start]


def is_stable(graph: Graph, thresholds: ThresholdProfile, state: AdoptionState) -> bool:
    _check(graph, thresholds)
    return step_mask(graph.neighbor_masks, thresholds.b, state.mask) == state.mask


@dataclass(frozen=True)
class EquilibriumSet:
    stable_states: tuple[AdoptionState, ...]

    def __contains__(self, state: AdoptionState) -> bool:
        return state in self.stable_states

    def __len__(self) -> int:
        return len(self.stable_states)


def enumerate_equilibria(
    graph: Graph, thresholds: ThresholdProfile, max_nodes: int = 20
) -> EquilibriumSet:
    """All fixed points of the unforced update, by exhaustive scan."""
    _check(graph, thresholds)
    n = graph.node_count
    if n > max_nodes:
        raise ValueError(f"graph has {n} nodes; exhaustive scan capped at {max_nodes}")
    nbr, b = graph.neighbor_masks, thresholds.b
    found = [AdoptionState(n, m) for m in range(1 << n) if step_mask(nbr, b, m) == m]
    return EquilibriumSet(tuple(found))


def _forcing_steps(schedule: SubsidySchedule, n: int) -> int | None:
    if schedule.mode == INDEFINITE:
        return None
    if schedule.mode == TEMPORARY:
        return n + 1
    return schedule.duration


def check_monotonicity(
    graph: Graph,
    thresholds: ThresholdProfile,
    state_a: AdoptionState,
    state_b: AdoptionState,
    schedule: SubsidySchedule,
) -> bool:
    """Co-evolve two nested states under the same forcing; True iff nesting persists.

    Both trajectories are forced with ``schedule.subsidized`` for the same
    number of steps (temporary mode uses the equivalent flat ``|V|+1`` states)
    and then iterated until each has entered its limit cycle.
    """
    _check(graph, thresholds)
    if not state_a.issubset(state_b):
        raise ValueError("precondition violated: state_a must be contained in state_b")
    n = graph.node_count
    nbr, b = graph.neighbor_masks, thresholds.b
    forced = AdoptionState.from_nodes(n, schedule.subsidized).mask
    steps = _forcing_steps(schedule, n)
    horizon = (steps or 0) + 2 * graph.edge_count + 2 * n + 4
    xa, xb = [state_a.mask], [state_b.mask]
    for t in range(1, horizon + 1):
        f = forced if steps is None or t < steps else 0
        xa.append(step_mask(nbr, b, xa[-1], f))
        xb.append(step_mask(nbr, b, xb[-1], f))
        if xa[-1] & ~xb[-1]:
            return False
        free_from = 0 if steps is None else steps - 1
        if t - 2 >= free_from and xa[-1] == xa[-3] and xb[-1] == xb[-3]:
            return True
    raise BoundViolationError("co-simulation did not converge within the proved horizon")


def intransigence_closure(graph: Graph, thresholds: ThresholdProfile) -> frozenset[int]:
    """Nodes that can never adopt without direct subsidy.

    Least fixed point: start from ``{i : b_i > deg(i)}`` and keep adding any node
    whose neighbours outside the current set number fewer than ``b_i``.
    """
    _check(graph, thresholds)
    n = graph.node_count
    closed = [thresholds.b[i] > graph.degree(i) for i in range(n)]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if closed[i]:
                continue
            outside = sum(1 for j in graph.adjacency[i] if not closed[j])
            if thresholds.b[i] > outside:
                closed[i] = True
                changed = True
    return frozenset(i for i in range(n) if closed[i])
