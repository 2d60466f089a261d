"""Deterministic closed-loop discrete-event simulator.

The plant, estimate and error bound all admit closed-form propagation,
so there is no integrator error: segments between events are evaluated
by matrix exponentials of the block dynamics (through an
eigendecomposition fast path when available), and event times are found
by a fixed-step bracketing scan refined by bisection, with channel
breakpoints and their right limits always evaluated explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import codec as codec_mod
from .capacity import CapacityPlanner
from .channel import ChannelSchedule, TransmissionRecord, validate_sequence
from .errors import (
    AdmissibilityError,
    ConfigurationError,
    DomainError,
    GuaranteeBreachError,
    InvariantBreachError,
    ObjectiveViolationError,
)
from .linalg import inf_norm, mat_exp
from .plant import PlantModel
from .triggers import (
    TriggerConfig,
    TriggerSuite,
    blackout_entry_margin,
    channel_bound,
    error_threshold,
    perf_bound,
)

_TIME_TOL = 1e-9
_NUDGE = 1e-9

MODE_NO_BLACKOUT = "no_blackout"
MODE_BLACKOUT = "blackout"
POLICY_MAX = "max_bits"
POLICY_MIN = "min_bits"


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    """Complete description of one closed-loop run."""

    plant: PlantModel
    schedule: ChannelSchedule
    trigger: TriggerConfig
    mode: str
    x0: np.ndarray
    x_hat0: np.ndarray
    d_e0: float
    delay_factor: float = 1.0
    packet_policy: str = POLICY_MAX
    horizon: float | None = None
    scan_step: float | None = None
    sample_step: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x_hat0", np.asarray(self.x_hat0, dtype=float))
        n = self.plant.n
        if self.x0.shape != (n,) or self.x_hat0.shape != (n,):
            raise ConfigurationError("x0 and x_hat0 must be length-n vectors")
        if self.schedule.n != n:
            raise ConfigurationError("channel and plant state dimensions differ")
        if self.mode not in (MODE_NO_BLACKOUT, MODE_BLACKOUT):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.packet_policy not in (POLICY_MAX, POLICY_MIN):
            raise ConfigurationError(f"unknown packet policy {self.packet_policy!r}")
        if not 0.0 <= self.delay_factor <= 1.0:
            raise ConfigurationError("delay_factor must lie in [0, 1]")
        if self.d_e0 < inf_norm(self.x0 - self.x_hat0):
            raise ConfigurationError("d_e0 must dominate the initial estimate error")
        if self.schedule.start != 0.0:
            raise ConfigurationError("schedule must start at t0 = 0")
        horizon = self.schedule.end if self.horizon is None else self.horizon
        if not 0.0 < horizon <= self.schedule.end:
            raise ConfigurationError("horizon must lie within the channel schedule")
        object.__setattr__(self, "horizon", float(horizon))


@dataclass(frozen=True)
class Transmission:
    """One realized transmission with the trigger quantities at its endpoints.

    Carries the packet's quantizer symbols so a trace can be audited
    against an independent decoder replica.
    """

    k: int
    t_k: float
    p_k: int
    r_k: float
    r_tilde_k: float
    h_pf_tx: float
    eps_tx: float
    h_ch_update: float | None = None
    eps_update: float | None = None
    symbols: tuple[int, ...] = ()

    def to_record(self) -> TransmissionRecord:
        return TransmissionRecord(t_k=self.t_k, p_k=self.p_k,
                                  r_k=self.r_k, r_tilde_k=self.r_tilde_k)


@dataclass
class SimTrace:
    """Sampled closed-loop trajectory plus the transmission log."""

    t: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    V: np.ndarray
    Vd: np.ndarray
    h_pf: np.ndarray
    eps: np.ndarray
    h_ch: np.ndarray
    d_e: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    s_hat: np.ndarray
    l3: np.ndarray
    transmissions: list[Transmission]
    mode: str
    horizon: float
    scan_step: float
    sample_step: float
    stats: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    witnesses: tuple = ()
    detail: str = ""


@dataclass(frozen=True)
class AdmissibilityReport:
    conditions: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def __str__(self) -> str:
        lines = []
        for c in self.conditions:
            status = "pass" if c.ok else "FAIL"
            extra = f" {c.detail}" if c.detail and not c.ok else ""
            wit = f" witnesses={list(c.witnesses)[:4]}" if c.witnesses and not c.ok else ""
            lines.append(f"[{status}] {c.name}{extra}{wit}")
        return "\n".join(lines)


def check_admissibility(scenario: Scenario) -> AdmissibilityReport:
    """Evaluate every mode-specific feasibility condition with witnesses."""
    plant, sched = scenario.plant, scenario.schedule
    suite = TriggerSuite(plant, scenario.trigger)
    checks: list[CheckResult] = []
    pmax = int(sched.caps.max()) if sched.caps.size else 0

    vd0 = plant.desired_performance(0.0)
    h0 = plant.lyapunov_value(scenario.x0) / vd0
    eps0 = scenario.d_e0 / (plant.constants.error_scale * math.sqrt(vd0))

    if scenario.mode == MODE_NO_BLACKOUT:
        bad = [(float(sched.theta[j]), int(sched.caps[j]))
               for j in range(sched.num_slots) if sched.caps[j] < 1]
        checks.append(CheckResult("packet_cap_positive", not bad, tuple(bad),
                                  "every slot must allow at least one bit"))
        bad = []
        for j in range(sched.num_slots):
            for p in range(1, int(sched.caps[j]) + 1):
                if sched.rates[j] < p / suite.max_comm_delay(p):
                    bad.append((float(sched.theta[j]), p))
        checks.append(CheckResult("rate_supports_delays", not bad, tuple(bad),
                                  "need R >= p / T_M(p) for p up to the slot cap"))
        cap0 = sched.right_limit_cap(0.0)
        if cap0 >= 1:
            state = suite.measure(scenario.x0, scenario.d_e0, 0.0)
            l1 = suite.perf_trigger(state, cap0)
            l2 = suite.channel_trigger(state, cap0)
            ok = l1 <= 1.0 and l2 <= 1.0
            checks.append(CheckResult("initial_triggers", ok, ((0.0, l1, l2),),
                                      "both trigger values must start at or below 1"))
    else:
        bad = []
        for j in range(sched.num_slots):
            if sched.caps[j] == 0:
                continue  # blackout slot: its rate is never used for transmission
            for p in range(1, pmax + 1):
                if sched.rates[j] < (p + 2) / suite.max_comm_delay(p):
                    bad.append((float(sched.theta[j]), p))
        checks.append(CheckResult("rate_supports_delays", not bad, tuple(bad),
                                  "need R >= (p+2) / T_M(p) for p up to the global cap"))

        planner = CapacityPlanner(sched)
        j0 = sched.right_slot_index(0.0)
        cap0 = int(sched.caps[j0])
        checks.append(CheckResult("initial_cap_positive", cap0 >= 1, ((0.0, cap0),),
                                  "the channel must be usable at t0"))
        psi0 = planner.packet_bound(j0, 0.0)
        rate0 = float(sched.rates[j0])
        if cap0 >= 1:
            state = suite.measure(scenario.x0, scenario.d_e0, 0.0)
            l1 = suite.perf_trigger_capped(state, psi0, rate0)
            l2 = suite.channel_trigger_capped(state, psi0, rate0)
            ok = l1 <= 1.0 and l2 <= 1.0
            checks.append(CheckResult("initial_triggers", ok, ((0.0, l1, l2),),
                                      "both capacity-aware triggers must start at or below 1"))
        view0 = planner.plan_for_slot(j0)
        l3 = suite.capacity_deficit(0.0, eps0, view0.tau_l, view0.blackout_len,
                                    planner.capacity_floor(j0, 0.0))
        checks.append(CheckResult("initial_capacity", l3 <= 0.0, ((0.0, l3),),
                                  "enough capacity must remain before the first blackout"))

        bad = []
        for b in sched.blackout_slots():
            tau_u = float(sched.theta[b + 1])
            if tau_u >= scenario.horizon or b + 1 >= sched.num_slots:
                continue
            j_after = b + 1
            view = planner.plan_for_slot(j_after)
            l3 = suite.capacity_deficit(tau_u, 1.0, view.tau_l, view.blackout_len,
                                        planner.capacity_floor(j_after, tau_u))
            if l3 > 0.0:
                bad.append((b, tau_u, l3))
        checks.append(CheckResult("blackout_capacity", not bad, tuple(bad),
                                  "capacity after each blackout must absorb a unit error"))

    return AdmissibilityReport(conditions=tuple(checks))


# ---------------------------------------------------------------------------
# generic event location


def locate_crossing(predicate, t_lo: float, t_hi: float, scan_step: float,
                    breakpoints=(), right_predicate=None,
                    time_tol: float = _TIME_TOL) -> float | None:
    """First time in [t_lo, t_hi] where a predicate becomes true.

    Scans with a fixed step, evaluating every breakpoint in the window
    explicitly (and, when given, a right-limit predicate there), then
    refines the bracketing interval by bisection to ``time_tol``.
    Returns None when no crossing exists in the window.
    """
    if t_hi < t_lo:
        raise DomainError("empty bracket")
    if predicate(t_lo):
        return t_lo
    marks = sorted({float(b) for b in breakpoints if t_lo < b <= t_hi} | {t_hi})
    prev = t_lo
    for mark in marks:
        t = prev
        while t < mark:
            nxt = min(t + scan_step, mark)
            if predicate(nxt):
                lo, hi = t, nxt
                while hi - lo > time_tol:
                    mid = 0.5 * (lo + hi)
                    if predicate(mid):
                        hi = mid
                    else:
                        lo = mid
                return hi
            t = nxt
        if right_predicate is not None and mark < t_hi and right_predicate(mark):
            return mark
        prev = mark
    return None


# ---------------------------------------------------------------------------
# propagation helper


class _Propagator:
    """exp(M t) at one or many nonnegative times.

    Uses an eigendecomposition when the eigenvector basis is well
    conditioned (then every query is a closed form, with no step-to-step
    drift) and falls back to cumulative scaling-and-squaring otherwise.
    """

    def __init__(self, M):
        self.M = np.asarray(M, dtype=float)
        self._eig = None
        try:
            w, V = np.linalg.eig(self.M)
            cond = np.linalg.cond(V)
            if np.isfinite(cond) and cond < 1e8:
                self._eig = (w, V, np.linalg.inv(V))
        except np.linalg.LinAlgError:
            pass

    def at(self, t: float) -> np.ndarray:
        if t == 0.0:
            return np.eye(self.M.shape[0])
        if self._eig is None:
            return mat_exp(self.M, t)
        w, V, Vi = self._eig
        return ((V * np.exp(w * t)) @ Vi).real

    def batch(self, ts: np.ndarray) -> np.ndarray:
        """Stack of exp(M t) for sorted nonnegative offsets (N, k, k)."""
        ts = np.asarray(ts, dtype=float)
        if self._eig is not None:
            w, V, Vi = self._eig
            E = np.exp(np.multiply.outer(ts, w))
            return np.einsum("ij,nj,jk->nik", V, E, Vi).real
        k = self.M.shape[0]
        out = np.empty((ts.size, k, k))
        prev, cur = 0.0, np.eye(k)
        for i, t in enumerate(ts):
            cur = mat_exp(self.M, t - prev) @ cur
            out[i] = cur
            prev = t
        return out


# ---------------------------------------------------------------------------
# engine


class _Engine:
    def __init__(self, scenario: Scenario):
        self.scn = scenario
        self.plant = scenario.plant
        self.sched = scenario.schedule
        self.suite = TriggerSuite(self.plant, scenario.trigger)
        self.n = self.plant.n
        self.horizon = scenario.horizon
        self.blackout_mode = scenario.mode == MODE_BLACKOUT
        self.planner = CapacityPlanner(self.sched) if self.blackout_mode else None
        self._margins: dict[float, float] = {}

        self.pmax = int(self.sched.caps.max())
        if self.pmax < 1:
            raise ConfigurationError("schedule has no usable slot")
        self.tm = np.full(self.pmax + 1, np.nan)
        self.exp_norm_tm = np.full(self.pmax + 1, np.nan)
        for p in range(1, self.pmax + 1):
            self.tm[p] = self.suite.max_comm_delay(p)
            self.exp_norm_tm[p] = (inf_norm(mat_exp(self.plant.A, self.tm[p]))
                                   * math.exp(self.plant.beta / 2.0 * self.tm[p]))

        A, B, K, Abar = self.plant.A, self.plant.B, self.plant.K, self.plant.Abar
        block = np.block([[A, B @ K], [np.zeros_like(A), Abar]])
        self.prop_full = _Propagator(block)
        self.prop_A = _Propagator(A)

        if scenario.scan_step is not None:
            self.scan_step = scenario.scan_step
        else:
            self.scan_step = min(float(np.min(self.sched.durations())) / 50.0,
                                 self.tm[1] / 10.0)
        self.sample_step = (scenario.sample_step if scenario.sample_step is not None
                            else self.horizon / 2000.0)

        # mutable run state
        self.t = 0.0
        self.x_aug = np.concatenate([scenario.x0, scenario.x_hat0])
        self.enc = codec_mod.initial_state(scenario.x_hat0, scenario.d_e0, 0.0)
        self.dec = codec_mod.initial_state(scenario.x_hat0, scenario.d_e0, 0.0)
        self.pending: tuple | None = None
        self.transmissions: list[Transmission] = []
        self.rows: list[tuple] = []
        grid = np.arange(1, int(np.floor(self.horizon / self.sample_step)) + 1) * self.sample_step
        self.sample_times = grid[grid < self.horizon - _TIME_TOL]
        self._sample_idx = 0

    # -- slot-value helpers -------------------------------------------------

    def _slot_of(self, t: float) -> int:
        if t <= self.sched.start:
            return self.sched.right_slot_index(t)
        return self.sched.slot_index(t)

    def _psi(self, j: int, t: float) -> int:
        if not self.blackout_mode:
            return int(self.sched.caps[j])
        return self.planner.packet_bound(j, t)

    def _entry_margin(self, blackout_len: float) -> float:
        if blackout_len not in self._margins:
            self._margins[blackout_len] = blackout_entry_margin(self.plant, blackout_len)
        return self._margins[blackout_len]

    # -- trigger predicate (scalar) ------------------------------------------

    def _state_at(self, t: float, x: np.ndarray):
        vd = self.plant.desired_performance(t)
        de = self.enc.d_e(self.plant, t)
        h = self.plant.lyapunov_value(x[:self.n]) / vd
        eps = de / (self.plant.constants.error_scale * math.sqrt(vd))
        return h, eps, de, vd

    def _trigger_values(self, t: float, j: int, h: float, eps: float):
        """(gate, fired) for the event rule using slot j's channel values."""
        if not self.blackout_mode:
            cap = int(self.sched.caps[j])
            tm = self.tm[cap]
            l1 = float(perf_bound(self.plant, tm, h, eps))
            if l1 >= 1.0:
                return True, True
            l2 = float(channel_bound(self.plant, self.scn.trigger.lookahead, tm,
                                     h, eps, cap, exp_norm=self.exp_norm_tm[cap],
                                     check_domain=False))
            return True, l2 >= 1.0
        psi = self._psi(j, t)
        if psi < 1:
            return False, False
        tm = self.tm[psi]
        l1 = float(perf_bound(self.plant, tm, h, eps))
        if l1 >= 1.0:
            return True, True
        l2 = float(channel_bound(self.plant, self.scn.trigger.lookahead, tm,
                                 h, eps, psi, exp_norm=self.exp_norm_tm[psi],
                                 check_domain=False))
        if l2 >= 1.0:
            return True, True
        view = self.planner.plan_for_slot(j)
        l3 = self.suite.capacity_deficit(t, eps, view.tau_l, view.blackout_len,
                                         self.planner.capacity_floor(j, t))
        return True, l3 >= 0.0

    def _predicate(self, t: float, x: np.ndarray, j: int) -> bool:
        h, eps, _, _ = self._state_at(t, x)
        gate, fired = self._trigger_values(t, j, h, eps)
        return gate and fired

    # -- vectorized segment scan ----------------------------------------------

    def _segment_fire_index(self, ts: np.ndarray, xs: np.ndarray, des: np.ndarray,
                            j: int) -> int | None:
        """Index of the first grid point in slot j where the rule fires."""
        vd = self.plant.vd0 * np.exp(-self.plant.beta * ts)
        xs_state = xs[:, :self.n]
        h = np.einsum("ni,ij,nj->n", xs_state, self.plant.P, xs_state) / vd
        eps = des / (self.plant.constants.error_scale * np.sqrt(vd))
        T = self.scn.trigger.lookahead

        if not self.blackout_mode:
            cap = int(self.sched.caps[j])
            tm = self.tm[cap]
            l1 = perf_bound(self.plant, tm, h, eps)
            with np.errstate(divide="ignore", invalid="ignore"):
                l2 = channel_bound(self.plant, T, tm, h, eps, cap,
                                   exp_norm=self.exp_norm_tm[cap], check_domain=False)
            fired = (l1 >= 1.0) | (l2 >= 1.0)
        else:
            cap = int(self.sched.caps[j])
            if cap == 0:
                return None
            view = self.planner.plan_for_slot(j)
            if view.plan is None:
                phi = np.full(ts.shape, np.inf)
            else:
                decayed = view.plan.phi[0] - self.sched.rates[j] * (ts - self.sched.theta[j])
                phi = np.maximum(0.0, np.floor(decayed + 1e-9))
            psi = np.minimum(cap, phi)
            gate = psi >= 1.0
            if not np.any(gate):
                return None
            psi_idx = np.clip(psi, 1, self.pmax).astype(int)
            tm = self.tm[psi_idx]
            l1 = perf_bound(self.plant, tm, h, eps)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                l2 = channel_bound(self.plant, T, tm, h, eps, psi_idx,
                                   exp_norm=self.exp_norm_tm[psi_idx], check_domain=False)
                if view.plan is None:
                    l3 = np.full(ts.shape, -np.inf)
                else:
                    tail = float(np.sum(view.plan.phi[1:]))
                    s_hat = self.sched.n * (phi + tail)
                    margin = self._entry_margin(view.blackout_len)
                    growth = self.plant.constants.growth_rate_inf * (view.tau_l - ts)
                    with np.errstate(divide="ignore"):
                        log_eps = np.log2(np.maximum(eps, 0.0))
                    needed = self.n * (growth / math.log(2.0) + log_eps - math.log2(margin))
                    l3 = needed - self.scn.trigger.sigma1 * s_hat
            fired = gate & ((l1 >= 1.0) | (l2 >= 1.0) | (l3 >= 0.0))
        idx = np.flatnonzero(fired)
        return int(idx[0]) if idx.size else None

    # -- fire location ---------------------------------------------------------

    def _locate_fire(self, t_start: float):
        """Next transmit time at or after t_start, or None before the horizon.

        Returns (time, slot_index) with the slot whose channel values the
        transmission uses; right-limit-driven firings at a breakpoint
        whose own gate fails are nudged just inside the next slot.
        """
        anchor_t = t_start
        anchor_x = self.x_aug.copy()
        base_A = mat_exp(self.plant.A, anchor_t - self.enc.anchor_time)

        def x_at(t: float) -> np.ndarray:
            return self.prop_full.at(t - anchor_t) @ anchor_x

        def de_at(t: float) -> float:
            return inf_norm(self.prop_A.at(t - anchor_t) @ base_A) * self.enc.step

        def pred(t: float, j: int) -> bool:
            x = x_at(t)
            vd = self.plant.desired_performance(t)
            h = self.plant.lyapunov_value(x[:self.n]) / vd
            eps = de_at(t) / (self.plant.constants.error_scale * math.sqrt(vd))
            gate, fired = self._trigger_values(t, j, h, eps)
            return gate and fired

        cursor = t_start
        while cursor < self.horizon - _TIME_TOL:
            j = self.sched.right_slot_index(cursor) if cursor < self.sched.end else None
            if j is None:
                return None
            # Explicit test at the segment start: left slot values when the
            # cursor is mid-slot or a right-closed boundary, then the right
            # limit when the cursor sits on a breakpoint.
            j_left = self._slot_of(cursor) if cursor > self.sched.start else j
            if cursor == t_start:
                if pred(cursor, j_left):
                    return cursor, j_left
            if j != j_left and pred(cursor, j):
                if self._gate(cursor, j_left):
                    # Right-limit term fired while the breakpoint itself is
                    # admissible: transmit at it under the old slot's values.
                    return cursor, j_left
                # Otherwise the rule is first satisfied just inside the next
                # slot; nudge the transmit time so slot attribution, rate and
                # validation stay consistent.
                return min(cursor + _NUDGE, self.horizon), j
            seg_end = min(float(self.sched.theta[j + 1]), self.horizon)
            count = max(1, int(math.ceil((seg_end - cursor) / self.scan_step)))
            offs = np.linspace(cursor, seg_end, count + 1)[1:]
            mats = self.prop_full.batch(offs - anchor_t)
            xs = np.einsum("nij,j->ni", mats, anchor_x)
            de_mats = np.einsum("nij,jk->nik", self.prop_A.batch(offs - anchor_t), base_A)
            des = np.max(np.sum(np.abs(de_mats), axis=2), axis=1) * self.enc.step
            hit = self._segment_fire_index(offs, xs, des, j)
            if hit is not None:
                lo = cursor if hit == 0 else float(offs[hit - 1])
                hi = float(offs[hit])
                while hi - lo > _TIME_TOL:
                    mid = 0.5 * (lo + hi)
                    if pred(mid, j):
                        hi = mid
                    else:
                        lo = mid
                # Transmit at the last pre-crossing instant: there the channel
                # bound is still strictly below 1, so the required bit count
                # is guaranteed to fit the allowed packet size.
                return lo, j
            cursor = seg_end
        return None

    def _gate(self, t: float, j: int) -> bool:
        if not self.blackout_mode:
            return True
        return self._psi(j, t) >= 1

    # -- update location --------------------------------------------------------

    def _locate_update(self, r: float) -> float:
        """Earliest admissible controller-update time at or after a reception."""
        if not self.blackout_mode:
            return r
        j = self._slot_of(r)
        if self.sched.caps[j] == 0 or self._psi(j, r) >= 1:
            return r
        for jn in range(j + 1, self.sched.num_slots):
            theta = float(self.sched.theta[jn])
            if theta >= self.horizon:
                break
            if self.sched.caps[jn] == 0 or self._psi(jn, theta) >= 1:
                return theta
        return self.horizon

    # -- advancing and recording --------------------------------------------------

    def _record(self, t: float):
        x = self.x_aug[:self.n]
        x_hat = self.x_aug[self.n:]
        vd = self.plant.desired_performance(t)
        v = self.plant.lyapunov_value(x)
        h = v / vd
        if h > 1.0:
            raise ObjectiveViolationError(f"performance ratio {h} exceeds 1 at t={t}")
        de = self.enc.d_e(self.plant, t)
        err = inf_norm(x - x_hat)
        if err > de * (1.0 + 1e-9) + 1e-300:
            raise InvariantBreachError(f"estimate error {err} exceeds bound {de} at t={t}")
        eps = de / (self.plant.constants.error_scale * math.sqrt(vd))
        rho = float(error_threshold(self.plant, self.scn.trigger.lookahead, h))
        if self.blackout_mode:
            j = self._slot_of(t)
            phi = self.planner.planned_bits(j, t)
            psi = self.planner.packet_bound(j, t)
            s_hat = self.planner.capacity_floor(j, t)
            view = self.planner.plan_for_slot(j)
            l3 = self.suite.capacity_deficit(t, eps, view.tau_l, view.blackout_len, s_hat)
            cap_cols = (float(phi) if phi != float("inf") else math.inf, float(psi),
                        float(s_hat), l3)
        else:
            cap_cols = (math.nan, math.nan, math.nan, math.nan)
        self.rows.append((t, x.copy(), x_hat.copy(), v, vd, h, eps, eps / rho, de) + cap_cols)

    def _advance(self, t_target: float, record_end: bool = True):
        """Propagate exactly to t_target, recording samples and breakpoints."""
        if t_target < self.t - _TIME_TOL:
            raise DomainError("cannot advance backwards")
        pts = []
        while (self._sample_idx < self.sample_times.size
               and self.sample_times[self._sample_idx] <= t_target + 1e-15):
            s = float(self.sample_times[self._sample_idx])
            if s > self.t:
                pts.append(s)
            self._sample_idx += 1
        for theta in self.sched.theta:
            if self.t < theta < t_target:
                pts.append(float(theta))
        pts = sorted(set(pts))
        anchor_t, anchor_x = self.t, self.x_aug
        for s in pts:
            self.x_aug = self.prop_full.at(s - anchor_t) @ anchor_x
            self._record(s)
        if t_target > anchor_t:
            self.x_aug = self.prop_full.at(t_target - anchor_t) @ anchor_x
            self.t = t_target
            if record_end:
                self._record(t_target)

    # -- packet sizing ---------------------------------------------------------

    def _min_bits(self, t: float, h: float, eps: float, rate: float) -> int | None:
        """Smallest bit count whose channel bound stays at or below 1."""
        T = self.scn.trigger.lookahead
        for p in range(1, self.pmax + 1):
            tau = self.tm[p] if self.blackout_mode else p / rate
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                val = float(channel_bound(self.plant, T, tau, h, eps, p,
                                          check_domain=False))
            if val <= 1.0:
                return p
        return None

    def _fire(self, t: float, j: int):
        x = self.x_aug[:self.n]
        h, eps, _, _ = self._state_at(t, self.x_aug)
        rate = float(self.sched.rates[j])
        cap_eff = self._psi(j, t)
        p_lo = self._min_bits(t, h, eps, rate)
        if p_lo is None or p_lo > cap_eff:
            raise GuaranteeBreachError(
                f"required bits {p_lo} exceed allowed {cap_eff} at t={t}",
                state={"t": t, "h_pf": h, "eps": eps, "cap": cap_eff, "p_lo": p_lo,
                       "slot": j, "mode": self.scn.mode})
        p = cap_eff if self.scn.packet_policy == POLICY_MAX else p_lo
        pkt = codec_mod.encode(self.plant, x, self.enc, p, t)
        self.enc = codec_mod.mark_in_flight(self.enc)
        r = t + self.scn.delay_factor * (p / rate)
        self.pending = (pkt, r, h, eps)

    def _apply_update(self, r: float, r_tilde: float):
        pkt, _, h_tx, eps_tx = self.pending
        self.enc = codec_mod.decode_and_update(self.plant, pkt, self.enc, r_tilde)
        self.dec = codec_mod.decode_and_update(self.plant, pkt, self.dec, r_tilde)
        if not (np.array_equal(self.enc.x_hat, self.dec.x_hat)
                and self.enc.step == self.dec.step):
            raise InvariantBreachError("encoder and decoder replicas diverged")
        self.x_aug = np.concatenate([self.x_aug[:self.n], self.enc.x_hat])
        state = self.suite.measure(self.x_aug[:self.n], self.enc.d_e(self.plant, r_tilde),
                                   r_tilde)
        self.transmissions.append(Transmission(
            k=len(self.transmissions) + 1, t_k=pkt.t_k, p_k=pkt.p_k,
            r_k=r, r_tilde_k=r_tilde, h_pf_tx=h_tx, eps_tx=eps_tx,
            h_ch_update=state.channel_ratio, eps_update=state.error_ratio,
            symbols=pkt.symbols))
        self.pending = None
        self._record(r_tilde)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> SimTrace:
        self._record(0.0)
        while self.t < self.horizon - _TIME_TOL:
            if self.pending is None:
                fire = self._locate_fire(self.t)
                if fire is None:
                    self._advance(self.horizon)
                    break
                t_fire, j = fire
                self._advance(t_fire)
                self._fire(t_fire, j)
            else:
                _, r, _, _ = self.pending
                if r >= self.horizon - _TIME_TOL:
                    self._advance(self.horizon)
                    break
                self._advance(r)
                r_tilde = self._locate_update(r)
                if r_tilde >= self.horizon - _TIME_TOL:
                    self._advance(self.horizon)
                    break
                self._advance(r_tilde, record_end=False)
                self._apply_update(r, r_tilde)
        return self._build_trace()

    def _build_trace(self) -> SimTrace:
        rows = self.rows
        t = np.array([r[0] for r in rows])
        trace = SimTrace(
            t=t,
            x=np.array([r[1] for r in rows]),
            x_hat=np.array([r[2] for r in rows]),
            V=np.array([r[3] for r in rows]),
            Vd=np.array([r[4] for r in rows]),
            h_pf=np.array([r[5] for r in rows]),
            eps=np.array([r[6] for r in rows]),
            h_ch=np.array([r[7] for r in rows]),
            d_e=np.array([r[8] for r in rows]),
            phi=np.array([r[9] for r in rows]),
            psi=np.array([r[10] for r in rows]),
            s_hat=np.array([r[11] for r in rows]),
            l3=np.array([r[12] for r in rows]),
            transmissions=self.transmissions,
            mode=self.scn.mode,
            horizon=self.horizon,
            scan_step=self.scan_step,
            sample_step=self.sample_step,
        )
        validate_sequence([tx.to_record() for tx in self.transmissions], self.sched)
        trace.stats = summarize(trace, self.sched)
        return trace


def run(scenario: Scenario, force: bool = False) -> SimTrace:
    """Simulate a scenario after checking its admissibility conditions."""
    report = check_admissibility(scenario)
    if not report.ok and not force:
        raise AdmissibilityError(report)
    return _Engine(scenario).run()


# ---------------------------------------------------------------------------
# statistics


def summarize(trace: SimTrace, schedule: ChannelSchedule) -> dict:
    """Transmission statistics plus the safety margins seen along the run."""
    txs = trace.transmissions
    n = schedule.n
    count = len(txs)
    times = [tx.t_k for tx in txs]
    intervals = np.diff(times) if count >= 2 else np.array([])
    total_bits = n * sum(tx.p_k for tx in txs)
    windows = []
    lo = 0.0
    for b in schedule.blackout_slots():
        tau_l, tau_u = float(schedule.theta[b]), float(schedule.theta[b + 1])
        if tau_l >= trace.horizon:
            break
        windows.append((lo, tau_l))
        lo = min(tau_u, trace.horizon)
    windows.append((lo, trace.horizon))
    bits_per_window = [n * sum(tx.p_k for tx in txs if lo <= tx.t_k <= hi)
                       for lo, hi in windows]
    return {
        "transmission_count": count,
        "mean_intertransmission": float(np.mean(intervals)) if intervals.size else None,
        "min_intertransmission": float(np.min(intervals)) if intervals.size else None,
        "bits_per_unit_time": total_bits / trace.horizon if trace.horizon > 0 else 0.0,
        "total_bits": int(total_bits),
        "max_h_pf": float(np.max(trace.h_pf)),
        "min_de_margin": float(np.min(trace.d_e - np.max(np.abs(trace.x - trace.x_hat),
                                                         axis=1))),
        "bits_per_window": bits_per_window,
        "windows": [[float(lo), float(hi)] for lo, hi in windows],
    }
