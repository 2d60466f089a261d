"""Trigger functions and the threshold constants they are built from.

All bounds are closed-form scalar maps parameterised by a PlantModel
(through its rate constants) and, where a look-ahead enters, by the
design horizon T.  They accept numpy arrays in their time/level
arguments so the simulator can evaluate dense grids in one call.

Root finding follows one recipe throughout: a bracketing scan with step
T/1000 (expanding geometrically when the root lies beyond the first
window) followed by bisection to ``root_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .linalg import inf_norm, mat_exp
from .plant import PlantModel

_SCAN_POINTS = 1000


@dataclass(frozen=True)
class TriggerConfig:
    """Design parameters of the event-triggering rules.

    lookahead  horizon T used by the error threshold rho_T
    sigma      safety factor in (0,1) scaling the max communication delay
    sigma1     safety factor in (0,1) on the capacity budget check
    root_tol   tolerance for every root search
    """

    lookahead: float
    sigma: float
    sigma1: float
    root_tol: float = 1e-9

    def __post_init__(self):
        if not self.lookahead > 0:
            raise ConfigurationError("lookahead horizon T must be positive")
        if not 0 < self.sigma < 1:
            raise ConfigurationError("sigma must lie in (0, 1)")
        if not 0 < self.sigma1 < 1:
            raise ConfigurationError("sigma1 must lie in (0, 1)")


@dataclass(frozen=True)
class TriggerState:
    """Instantaneous trigger quantities at one time.

    perf_ratio     V(x)/V_d(t)
    error_ratio    d_e normalised by the error scale and sqrt(V_d)
    channel_ratio  error_ratio divided by the threshold rho_T(perf_ratio)
    """

    perf_ratio: float
    error_ratio: float
    channel_ratio: float


# ---------------------------------------------------------------------------
# closed-form bounds


def perf_bound(plant: PlantModel, tau, h0, eps0):
    """Upper bound on the performance ratio tau ahead of a state (h0, eps0).

    ``(h0 + W*eps0/(w+mu) * (e^{(w+mu) tau} - 1)) / e^{w tau}`` with
    w the decay gap, W the guarded gap and mu the growth rate.
    """
    c = plant.constants
    wm = c.decay_gap + c.growth_rate
    growth = np.expm1(wm * np.asarray(tau, dtype=float))
    f1 = h0 + (c.guarded_decay_gap * np.asarray(eps0) / wm) * growth
    return f1 / np.exp(c.decay_gap * np.asarray(tau, dtype=float))


def perf_bound_slope0(plant: PlantModel, h0: float, eps0: float) -> float:
    """d/dtau of perf_bound at tau = 0: ``W*eps0 - w*h0``."""
    c = plant.constants
    return c.guarded_decay_gap * eps0 - c.decay_gap * h0


def error_threshold(plant: PlantModel, T: float, h0):
    """Error-ratio level below which performance holds for at least T.

    ``(w+mu)(1-h0) / (W (e^{(w+mu)T} - 1)) + 1``; always >= 1 on h0 <= 1.
    """
    c = plant.constants
    wm = c.decay_gap + c.growth_rate
    return (wm * (1.0 - np.asarray(h0, dtype=float))
            / (c.guarded_decay_gap * math.expm1(wm * T))) + 1.0


def _exp_growth_inf(plant: PlantModel, tau):
    """``||e^{A tau}||_inf * e^{(beta/2) tau}`` for scalar or array tau."""
    taus = np.asarray(tau, dtype=float)
    if taus.ndim == 0:
        return inf_norm(mat_exp(plant.A, float(taus))) * math.exp(plant.beta / 2.0 * float(taus))
    vals = np.array([inf_norm(mat_exp(plant.A, float(s))) for s in taus.ravel()])
    return (vals * np.exp(plant.beta / 2.0 * taus.ravel())).reshape(taus.shape)


def channel_bound(plant: PlantModel, T: float, tau, h0, eps0, p, *,
                  exp_norm=None, check_domain: bool = True):
    """Upper bound on the channel ratio after a p-bit update tau ahead.

    ``||e^{A tau}||_inf e^{(beta/2) tau} eps0 / rho_T(perf_bound(tau)) / 2^p``.
    The perf bound at tau must not exceed 1 (the threshold is undefined
    past that point); pass ``check_domain=False`` only when the caller
    handles that case itself.  ``exp_norm`` optionally supplies a
    precomputed ``||e^{A tau}||_inf e^{(beta/2) tau}`` value or array.
    """
    hbar = perf_bound(plant, tau, h0, eps0)
    if check_domain and np.any(hbar > 1.0 + 1e-12):
        raise DomainError("performance bound exceeds 1 at the requested horizon")
    if exp_norm is None:
        exp_norm = _exp_growth_inf(plant, tau)
    rho = error_threshold(plant, T, hbar)
    return exp_norm * np.asarray(eps0) / rho / np.power(2.0, p)


def blackout_entry_margin(plant: PlantModel, blackout_len: float) -> float:
    """Largest error ratio tolerable when a blackout of this length begins.

    ``min{ (e^{w Tb}-1)(w+mu) / (W (e^{(w+mu) Tb}-1)), e^{-mu_inf Tb} }``.
    """
    if blackout_len <= 0:
        raise DomainError("blackout length must be positive")
    c = plant.constants
    wm = c.decay_gap + c.growth_rate
    first = (math.expm1(c.decay_gap * blackout_len) * wm
             / (c.guarded_decay_gap * math.expm1(wm * blackout_len)))
    second = math.exp(-c.growth_rate_inf * blackout_len)
    return min(first, second)


# ---------------------------------------------------------------------------
# root-found thresholds


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    """Bisect f (False below, True at/above the crossing) to width tol."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid):
            hi = mid
        else:
            lo = mid
    return hi


def time_to_perf_violation(plant: PlantModel, h0: float, eps0: float,
                           root_tol: float = 1e-9,
                           scan_window: float | None = None) -> float:
    """First time the open-loop performance bound reaches 1 going up.

    Returns ``math.inf`` when the bound never comes back to 1 (eps0 = 0
    with h0 < 1, or h0 = 1 with eps0 = 0).  A crossing at tau = 0 with
    negative slope (h0 = 1, small eps0) is skipped: only crossings with
    nonnegative slope count.
    """
    if not 0.0 <= h0 <= 1.0:
        raise DomainError("h0 must lie in [0, 1]")
    if eps0 < 0.0:
        raise DomainError("eps0 must be nonnegative")
    if h0 == 1.0 and perf_bound_slope0(plant, h0, eps0) >= 0.0:
        return 0.0
    if eps0 == 0.0:
        return math.inf  # pure decay below 1, never returns

    c = plant.constants
    wm = c.decay_gap + c.growth_rate
    window = scan_window if scan_window is not None else 1.0 / wm
    above = lambda tau: perf_bound(plant, tau, h0, eps0) > 1.0

    lo, hi = 0.0, window
    # Expand geometrically until the bound has crossed 1; it always does
    # for eps0 > 0 since the bound grows like e^{mu tau}.
    for _ in range(200):
        step = (hi - lo) / _SCAN_POINTS
        grid = np.linspace(lo, hi, _SCAN_POINTS + 1)
        vals = perf_bound(plant, grid, h0, eps0)
        idx = np.flatnonzero(vals > 1.0)
        if idx.size:
            i = int(idx[0])
            left = max(grid[i] - step, 0.0)
            return _bisect(above, left, float(grid[i]), root_tol)
        lo, hi = hi, hi + 2.0 * (hi - lo)
    raise DomainError("performance bound crossing not found (scan exhausted)")


def delay_floor(plant: PlantModel, T: float, p: int, root_tol: float = 1e-9) -> float:
    """Uniform lower bound on the tolerable update delay after p bits.

    Smallest tau in [0, T) where
    ``||e^{A tau}||_inf e^{(beta/2) tau} / 2^p *
      (e^{(w+mu)T}-1)/(e^{(w+mu)T}-e^{(w+mu) tau})`` reaches 1; zero for p = 0.
    """
    if p < 0:
        raise DomainError("bit count must be nonnegative")
    if p == 0:
        return 0.0
    c = plant.constants
    wm = c.decay_gap + c.growth_rate
    e_wmT = math.exp(wm * T)

    def g_above(tau: float) -> bool:
        denom = e_wmT - math.exp(wm * tau)
        if denom <= 0.0:
            return True
        g = _exp_growth_inf(plant, tau) / 2.0 ** p * (e_wmT - 1.0) / denom
        return g >= 1.0

    step = T / _SCAN_POINTS
    prev = 0.0
    for i in range(1, _SCAN_POINTS + 1):
        tau = min(i * step, T * (1.0 - 1e-12))
        if g_above(tau):
            return _bisect(g_above, prev, tau, root_tol)
        prev = tau
    # g diverges at T^-, so the crossing is in the last subinterval.
    return _bisect(g_above, prev, T, root_tol)


def channel_delay_exceeds(plant: PlantModel, T: float, h0: float, eps0: float,
                          p: int, t_check: float, strict: bool = True) -> bool:
    """Whether the tolerable update delay after p bits exceeds ``t_check``.

    Algebraic test: the delay exceeds t_check iff the channel bound at
    t_check is below 1 (strictly, or weakly with ``strict=False``).
    """
    if not 0.0 <= h0 <= 1.0:
        raise DomainError("h0 must lie in [0, 1]")
    rho = float(error_threshold(plant, T, h0))
    if not 0.0 <= eps0 <= rho:
        raise DomainError("eps0 must lie in [0, rho_T(h0)]")
    if t_check < 0.0:
        raise DomainError("t_check must be nonnegative")
    val = float(channel_bound(plant, T, t_check, h0, eps0, p))
    return val < 1.0 if strict else val <= 1.0


# ---------------------------------------------------------------------------
# trigger suite


class TriggerSuite:
    """Trigger evaluations bound to one plant and one configuration.

    Caches the threshold constants (the unit-level violation time, the
    per-bit-count delay floors and max delays) that the event rules and
    admissibility checks query repeatedly.
    """

    def __init__(self, plant: PlantModel, config: TriggerConfig):
        self.plant = plant
        self.config = config
        self._gamma_unit: float | None = None
        self._delay_floor: dict[int, float] = {}
        self._max_delay: dict[int, float] = {}

    # -- cached constants --------------------------------------------------

    @property
    def unit_violation_time(self) -> float:
        """Time for the performance bound to return to 1 from (1, 1)."""
        if self._gamma_unit is None:
            self._gamma_unit = time_to_perf_violation(
                self.plant, 1.0, 1.0, self.config.root_tol)
        return self._gamma_unit

    def delay_floor(self, p: int) -> float:
        if p not in self._delay_floor:
            self._delay_floor[p] = delay_floor(
                self.plant, self.config.lookahead, p, self.config.root_tol)
        return self._delay_floor[p]

    def max_comm_delay(self, p: int) -> float:
        """sigma-scaled min of the unit violation time, T and the delay floor."""
        if p < 1:
            raise DomainError("max_comm_delay requires at least one bit")
        if p not in self._max_delay:
            self._max_delay[p] = self.config.sigma * min(
                self.unit_violation_time, self.config.lookahead, self.delay_floor(p))
        return self._max_delay[p]

    # -- instantaneous state -------------------------------------------------

    def measure(self, x, d_e: float, t: float) -> TriggerState:
        vd = self.plant.desired_performance(t)
        h = self.plant.lyapunov_value(x) / vd
        eps = d_e / (self.plant.constants.error_scale * math.sqrt(vd))
        rho = float(error_threshold(self.plant, self.config.lookahead, h))
        return TriggerState(perf_ratio=h, error_ratio=eps, channel_ratio=eps / rho)

    # -- event-rule values ---------------------------------------------------

    def perf_trigger(self, state: TriggerState, cap: int) -> float:
        """Performance-side trigger for a channel allowing cap bits."""
        if cap < 1:
            raise DomainError("perf_trigger requires cap >= 1 (use blackout-mode triggers)")
        return float(perf_bound(self.plant, self.max_comm_delay(cap),
                                state.perf_ratio, state.error_ratio))

    def channel_trigger(self, state: TriggerState, cap: int) -> float:
        """Channel-side trigger for a channel allowing cap bits."""
        if cap < 1:
            raise DomainError("channel_trigger requires cap >= 1 (use blackout-mode triggers)")
        return float(channel_bound(self.plant, self.config.lookahead,
                                   self.max_comm_delay(cap),
                                   state.perf_ratio, state.error_ratio, cap,
                                   check_domain=False))

    def lookahead_time(self, psi: int, rate: float) -> float:
        """Horizon used by the capacity-aware triggers: T_M(psi) or 2/R."""
        if psi >= 1:
            return self.max_comm_delay(psi)
        if rate <= 0.0:
            raise DomainError("lookahead during an artificial blackout needs R > 0")
        return 2.0 / rate

    def perf_trigger_capped(self, state: TriggerState, psi: int, rate: float) -> float:
        return float(perf_bound(self.plant, self.lookahead_time(psi, rate),
                                state.perf_ratio, state.error_ratio))

    def channel_trigger_capped(self, state: TriggerState, psi: int, rate: float) -> float:
        return float(channel_bound(self.plant, self.config.lookahead,
                                   self.lookahead_time(psi, rate),
                                   state.perf_ratio, state.error_ratio, psi,
                                   check_domain=False))

    def capacity_deficit(self, t: float, eps: float, tau_l: float | None,
                         blackout_len: float | None, capacity_floor: float) -> float:
        """Bits still needed before the next blackout minus the allowed budget.

        Nonpositive means enough capacity remains.  Defined as -inf when
        no blackout lies ahead or the error is already zero.
        """
        if tau_l is None or blackout_len is None:
            return -math.inf
        if eps <= 0.0:
            return -math.inf
        margin = blackout_entry_margin(self.plant, blackout_len)
        growth = self.plant.constants.growth_rate_inf * (tau_l - t)
        needed = self.plant.n * (growth / math.log(2.0) + math.log2(eps / margin))
        return needed - self.config.sigma1 * capacity_floor


def resolve_lookahead(plant: PlantModel, fraction: float, root_tol: float = 1e-9) -> float:
    """Lookahead horizon as a fraction of the unit-level violation time."""
    if fraction <= 0:
        raise ConfigurationError("lookahead fraction must be positive")
    return fraction * time_to_perf_violation(plant, 1.0, 1.0, root_tol)
