"""Data-capacity computation: exact oracle, LP relaxation, fallback, and
the real-time quantities built from stored per-slot allocations.

An allocation assigns ``phi_j`` per-dimension bits to be launched inside
each slot of a window; transmissions start as early as possible and run
back to back, so feasibility of an allocation reduces to a single
forward replay of busy times.  The exact capacity maximises the total
over integer allocations (exponential, guarded by size limits); the LP
route solves the relaxation valid when no slot's spillover can outlast
its successor slot, then floors; the fallback keeps every slot's bits
inside the slot itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .channel import ChannelSchedule, compute_J
from .errors import DomainError, NumericalError, ScaleGuardError

_FLOOR_NUDGE = 1e-9
_SCALE_SLOTS = 8
_SCALE_BITS = 20


def floor_nudged(x: float) -> int:
    """Floor with a small upward nudge so exact integers survive roundoff."""
    return int(np.floor(x + _FLOOR_NUDGE))


@dataclass(frozen=True)
class AllocationProblem:
    """A window of consecutive slots over which bits are allocated."""

    theta: np.ndarray       # breakpoints, length m+1
    rates: np.ndarray       # per-slot rate, length m
    caps: np.ndarray        # per-slot packet cap, length m
    n: int                  # state dimension

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.size < 2 or np.any(np.diff(theta) <= 0):
            raise DomainError("allocation window needs strictly increasing breakpoints")
        rates = np.asarray(self.rates, dtype=float)
        caps = np.asarray(self.caps, dtype=int)
        if rates.shape != (theta.size - 1,) or caps.shape != (theta.size - 1,):
            raise DomainError("need one rate and one cap per slot")
        if np.any((caps > 0) & (rates <= 0)):
            raise DomainError("a slot with a positive cap needs a positive rate")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "caps", caps)

    @classmethod
    def from_schedule(cls, schedule: ChannelSchedule, j0: int, jf: int) -> "AllocationProblem":
        if not 0 <= j0 < jf <= schedule.num_slots:
            raise DomainError(f"invalid slot range [{j0}, {jf})")
        return cls(theta=schedule.theta[j0:jf + 1].copy(),
                   rates=schedule.rates[j0:jf].copy(),
                   caps=schedule.caps[j0:jf].copy(),
                   n=schedule.n)

    @property
    def num_slots(self) -> int:
        return int(self.caps.size)

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.theta)

    @property
    def horizon_end(self) -> float:
        return float(self.theta[-1])

    def sliced_at(self, t: float) -> "AllocationProblem":
        """The same window re-anchored at a time inside its first slot."""
        if not self.theta[0] <= t < self.theta[1]:
            raise DomainError("re-anchor time must lie in the first slot")
        theta = self.theta.copy()
        theta[0] = t
        return AllocationProblem(theta=theta, rates=self.rates.copy(),
                                 caps=self.caps.copy(), n=self.n)


@dataclass
class CapacityPlan:
    """Per-slot integer allocation plus the capacity value it certifies."""

    phi: np.ndarray
    value_bits: int
    kind: str                       # "exact" | "lp_floor" | "fallback"
    lp_phi: np.ndarray | None = None
    problem: AllocationProblem | None = field(default=None, repr=False)

    @property
    def stored_bits(self) -> np.ndarray:
        """Per-slot values retained for the real-time queries."""
        return self.phi


# ---------------------------------------------------------------------------
# replay feasibility


def replay_allocation(problem: AllocationProblem, phi) -> float | None:
    """Busy-until time after replaying an allocation earliest-first.

    Returns the time the last bit is received, or None when the
    allocation is infeasible (cap exceeded, slot fully occupied, or a
    bit not received by the window end).
    """
    phi = np.asarray(phi)
    busy = float(problem.theta[0])
    slack = _FLOOR_NUDGE / max(float(problem.rates.max(initial=0.0)), 1.0)
    for j in range(problem.num_slots):
        bits = int(phi[j])
        if bits < 0:
            return None
        if bits == 0:
            continue
        if problem.caps[j] == 0:
            return None
        start = max(busy, float(problem.theta[j]))
        avail = float(problem.theta[j + 1]) - start
        if avail <= 0.0:
            return None
        if bits > problem.rates[j] * avail + problem.caps[j] + _FLOOR_NUDGE:
            return None
        busy = start + bits / problem.rates[j]
    if busy > problem.horizon_end + slack:
        return None
    return busy


def available_time(problem: AllocationProblem, phi, j: int) -> float:
    """Transmission time left in slot j once prior slots hold allocation phi.

    ``max(0, min over j1 <= j of theta_{j+1} - theta_{j1} - sum_{i=j1}^{j-1} phi_i/R_i)``.
    """
    if not 0 <= j < problem.num_slots:
        raise DomainError("slot index outside the window")
    phi = np.asarray(phi, dtype=float)
    best = float(problem.durations[j])
    for j1 in range(j):
        occupied = 0.0
        for i in range(j1, j):
            if phi[i] > 0:
                occupied += phi[i] / problem.rates[i]
        cand = float(problem.theta[j + 1] - problem.theta[j1]) - occupied
        best = min(best, cand)
    return max(0.0, best)


# ---------------------------------------------------------------------------
# exact capacity (exhaustive oracle)


def _slot_static_caps(problem: AllocationProblem) -> np.ndarray:
    caps = np.zeros(problem.num_slots, dtype=int)
    for j in range(problem.num_slots):
        if problem.caps[j] > 0:
            caps[j] = floor_nudged(problem.rates[j] * problem.durations[j] + problem.caps[j])
    return caps


def capacity_exact(problem: AllocationProblem) -> CapacityPlan:
    """Globally optimal integer allocation by guarded exhaustive search.

    Refuses windows larger than 8 slots or with more than 20 allocatable
    bits in any slot; this path exists to certify the cheaper routes.
    """
    m = problem.num_slots
    static = _slot_static_caps(problem)
    if m > _SCALE_SLOTS or np.any(static > _SCALE_BITS):
        raise ScaleGuardError(
            f"exact capacity limited to {_SCALE_SLOTS} slots and {_SCALE_BITS} bits per slot")

    end = problem.horizon_end
    theta = problem.theta
    rates = problem.rates
    caps = problem.caps
    tail_static = np.concatenate([np.cumsum(static[::-1])[::-1], [0]])
    rate_from = np.zeros(m)
    rmax = 0.0
    for j in range(m - 1, -1, -1):
        if caps[j] > 0:
            rmax = max(rmax, rates[j])
        rate_from[j] = rmax

    best_val = 0
    best_vec = np.zeros(m, dtype=int)

    def dfs(j: int, busy: float, total: int, phi: list[int]):
        nonlocal best_val, best_vec
        if j == m:
            if total > best_val:
                best_val = total
                best_vec = np.array(phi, dtype=int)
            return
        start = max(busy, float(theta[j]))
        optimistic = total + int(tail_static[j])
        if rate_from[j] > 0.0 and start < end:
            optimistic = min(optimistic, total + floor_nudged((end - start) * rate_from[j]))
        elif rate_from[j] == 0.0:
            optimistic = total
        if optimistic <= best_val:
            return
        if caps[j] == 0 or start >= float(theta[j + 1]) - 1e-15:
            dfs(j + 1, busy, total, phi + [0])
            return
        avail = float(theta[j + 1]) - start
        ub = floor_nudged(rates[j] * avail + caps[j])
        ub = min(ub, floor_nudged(rates[j] * (end - start)))
        for bits in range(ub, -1, -1):
            nxt = busy if bits == 0 else start + bits / rates[j]
            dfs(j + 1, nxt, total + bits, phi + [bits])

    dfs(0, float(theta[0]), 0, [])
    return CapacityPlan(phi=best_vec, value_bits=problem.n * int(best_vec.sum()),
                        kind="exact", problem=problem)


# ---------------------------------------------------------------------------
# LP relaxation with floor rounding (valid when spillover is one-slot bounded)


def _no_spillover_chains(problem: AllocationProblem) -> bool:
    """Spillover from each non-final slot dies inside its successor slot."""
    for j in range(problem.num_slots - 1):
        if problem.caps[j] == 0:
            continue
        if problem.caps[j] / problem.rates[j] >= problem.durations[j + 1]:
            return False
    return True


def _lp_constraints(problem: AllocationProblem) -> tuple[np.ndarray, np.ndarray]:
    """Constraint matrix for the relaxed allocation problem (A phi <= b)."""
    m = problem.num_slots
    theta, rates, caps = problem.theta, problem.rates, problem.caps
    inv_rate = np.array([1.0 / rates[i] if caps[i] > 0 else 0.0 for i in range(m)])
    rows, rhs = [], []
    for j in range(m):
        row = np.zeros(m)
        row[j] = 1.0
        rows.append(row)
        rhs.append(rates[j] * problem.durations[j] + caps[j] if caps[j] > 0 else 0.0)
    for j in range(m):
        for j1 in range(j):
            row = np.zeros(m)
            row[j] = 1.0
            row[j1:j] = rates[j] * inv_rate[j1:j]
            rows.append(row)
            rhs.append(rates[j] * (theta[j + 1] - theta[j1]) + caps[j])
    for j1 in range(m):
        row = np.zeros(m)
        row[j1:] = inv_rate[j1:]
        rows.append(row)
        rhs.append(theta[m] - theta[j1])
    return np.array(rows), np.array(rhs)


def _solve_lp(A_ub, b_ub, c, A_eq=None, b_eq=None) -> np.ndarray:
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    if not res.success:
        raise NumericalError(f"allocation LP failed: {res.message}")
    return res.x


def capacity_lp_floor(problem: AllocationProblem) -> CapacityPlan:
    """Floor of the relaxed optimal allocation.

    Requires the no-chained-spillover condition on the window (the
    relaxed constraint set is only equivalent there).  Ties among
    relaxed optima are broken toward the lexicographically smallest
    allocation so stored plans are reproducible.
    """
    if not _no_spillover_chains(problem):
        raise DomainError("window has chained spillover; use capacity_fallback")
    m = problem.num_slots
    A_ub, b_ub = _lp_constraints(problem)
    x = _solve_lp(A_ub, b_ub, -np.ones(m))
    total = float(np.sum(x))
    # Lexicographic refinement: fix the total, then minimise each phi_j in turn.
    A_eq = [np.ones(m)]
    b_eq = [total]
    for j in range(m - 1):
        c = np.zeros(m)
        c[j] = 1.0
        x = _solve_lp(A_ub, b_ub, c, np.array(A_eq), np.array(b_eq))
        row = np.zeros(m)
        row[j] = 1.0
        A_eq.append(row)
        b_eq.append(float(x[j]))
    phi = np.array([floor_nudged(v) for v in x], dtype=int)
    return CapacityPlan(phi=phi, value_bits=problem.n * int(phi.sum()),
                        kind="lp_floor", lp_phi=x, problem=problem)


def capacity_fallback(problem: AllocationProblem) -> CapacityPlan:
    """In-slot-only allocation: ``floor(R_j T_j)`` bits per usable slot."""
    phi = np.array([floor_nudged(problem.rates[j] * problem.durations[j])
                    if problem.caps[j] > 0 else 0
                    for j in range(problem.num_slots)], dtype=int)
    return CapacityPlan(phi=phi, value_bits=problem.n * int(phi.sum()),
                        kind="fallback", problem=problem)


def plan_window(problem: AllocationProblem, chained_spillover: bool) -> CapacityPlan:
    """LP route when the window qualifies, in-slot fallback otherwise."""
    if chained_spillover:
        return capacity_fallback(problem)
    return capacity_lp_floor(problem)


def realtime_bound(plan: CapacityPlan, t: float) -> int:
    """Capacity lower bound from mid-slot time t, reusing the stored plan.

    ``n * max(0, floor(phi_0 - R_0 (t - theta_0))) + n * sum(phi_1..)``;
    within n bits of re-solving from t.
    """
    problem = plan.problem
    if problem is None:
        raise DomainError("plan carries no window; cannot re-anchor")
    if not problem.theta[0] <= t < problem.theta[1]:
        raise DomainError("realtime bound only valid inside the plan's first slot")
    first = int(plan.phi[0])
    if problem.caps[0] > 0:
        first = max(0, floor_nudged(plan.phi[0] - problem.rates[0] * (t - problem.theta[0])))
    tail = int(np.sum(plan.phi[1:]))
    return problem.n * (first + tail)


# ---------------------------------------------------------------------------
# online planner


@dataclass(frozen=True)
class SlotPlanView:
    """Plan anchored at one slot, targeting the next blackout start."""

    slot: int
    plan: CapacityPlan | None       # None when no blackout lies ahead
    tau_l: float | None             # next blackout start (window end)
    blackout_len: float | None      # its full length


class CapacityPlanner:
    """Per-slot allocation plans for the window [slot start, next blackout).

    Plans are a pure function of the schedule and the slot index, so they
    are computed once per slot and cached; recomputation at receptions is
    a no-op by construction.
    """

    def __init__(self, schedule: ChannelSchedule):
        self.schedule = schedule
        self._plans: dict[int, SlotPlanView] = {}

    def plan_for_slot(self, j: int) -> SlotPlanView:
        if j not in self._plans:
            self._plans[j] = self._build(j)
        return self._plans[j]

    def _build(self, j: int) -> SlotPlanView:
        sched = self.schedule
        jb = sched.next_blackout_slot(j)
        if jb is None:
            return SlotPlanView(slot=j, plan=None, tau_l=None, blackout_len=None)
        problem = AllocationProblem.from_schedule(sched, j, jb)
        chained = compute_J(sched, j, jb) != 0
        plan = plan_window(problem, chained)
        return SlotPlanView(slot=j, plan=plan,
                            tau_l=float(sched.theta[jb]),
                            blackout_len=float(sched.theta[jb + 1] - sched.theta[jb]))

    # -- real-time quantities (slot passed explicitly so breakpoint
    #    right-limits can be evaluated before time advances past them) --

    def planned_bits(self, j: int, t: float) -> int | float:
        """Bits still to be launched in slot j under its plan (inf if no target)."""
        view = self.plan_for_slot(j)
        if view.plan is None:
            return float("inf")
        if self.schedule.caps[j] == 0:
            return 0
        decayed = view.plan.phi[0] - self.schedule.rates[j] * (t - self.schedule.theta[j])
        return max(0, floor_nudged(decayed))

    def packet_bound(self, j: int, t: float) -> int:
        """Packet-size bound preserving the capacity plan: min(cap, planned bits)."""
        cap = int(self.schedule.caps[j])
        bits = self.planned_bits(j, t)
        return cap if bits == float("inf") else min(cap, int(bits))

    def capacity_floor(self, j: int, t: float) -> float:
        """Total plan bits obtainable from time t to the blackout start."""
        view = self.plan_for_slot(j)
        if view.plan is None:
            return float("inf")
        tail = int(np.sum(view.plan.phi[1:]))
        return self.schedule.n * (float(self.planned_bits(j, t)) + tail)
