import dataclasses
import math

import numpy as np
import pytest

from etcsim.capacity import CapacityPlanner
from etcsim.channel import ChannelSchedule
from etcsim.errors import AdmissibilityError, ConfigurationError
from etcsim.presets import no_blackout_scenario, sec6_plant
from etcsim.sim import Scenario, check_admissibility, locate_crossing, run
from etcsim.triggers import TriggerConfig, blackout_entry_margin, resolve_lookahead


class TestLocateCrossing:
    def test_within_first_step(self):
        t = locate_crossing(lambda s: s >= 0.05, 0.0, 1.0, scan_step=0.1)
        assert 0.0 <= t <= 0.1
        assert t == pytest.approx(0.05, abs=1e-8)

    def test_true_at_start(self):
        assert locate_crossing(lambda s: True, 0.3, 1.0, scan_step=0.1) == 0.3

    def test_right_limit_fires_at_breakpoint(self):
        t = locate_crossing(lambda s: False, 0.0, 1.0, scan_step=0.1,
                            breakpoints=[0.4], right_predicate=lambda s: s == 0.4)
        assert t == 0.4

    def test_none_when_no_crossing(self):
        assert locate_crossing(lambda s: False, 0.0, 1.0, scan_step=0.1) is None

    def test_refinement_under_scan_halving(self):
        pred = lambda s: s >= 0.7312831
        t1 = locate_crossing(pred, 0.0, 1.0, scan_step=0.01)
        t2 = locate_crossing(pred, 0.0, 1.0, scan_step=0.005)
        assert abs(t1 - t2) < 2 * 0.01


class TestEquilibrium:
    def test_origin_never_transmits(self):
        plant = sec6_plant().with_vd0(1.0)
        sched = ChannelSchedule(theta=[0.0, 2.0, 4.0], rates=[3000.0, 3000.0],
                                caps=[8, 8], n=2)
        scn = Scenario(plant=plant, schedule=sched,
                       trigger=TriggerConfig(lookahead=resolve_lookahead(plant, 0.1),
                                             sigma=0.06, sigma1=0.8),
                       mode="no_blackout", x0=np.zeros(2), x_hat0=np.zeros(2),
                       d_e0=0.0, horizon=4.0, sample_step=0.05)
        trace = run(scn)
        assert not trace.transmissions
        assert np.all(trace.V == 0.0)
        assert np.all(trace.V <= trace.Vd)


class TestClearChannelRun:
    def test_safety_and_progress(self, clear_channel_trace):
        trace = clear_channel_trace
        assert np.all(trace.h_pf <= 1.0)
        assert trace.stats["transmission_count"] > 0
        assert trace.stats["min_intertransmission"] > 0.0

    def test_codec_soundness_along_trace(self, clear_channel_trace):
        err = np.max(np.abs(clear_channel_trace.x - clear_channel_trace.x_hat), axis=1)
        assert np.all(err <= clear_channel_trace.d_e * (1 + 1e-9) + 1e-300)

    def test_updates_equal_receptions(self, clear_channel_trace):
        for tx in clear_channel_trace.transmissions:
            assert tx.r_tilde_k == tx.r_k

    def test_min_bits_policy_sends_fewer(self):
        lean = run(no_blackout_scenario(packet_policy="min_bits"))
        for tx in lean.transmissions:
            assert 1 <= tx.p_k <= 8
        assert any(tx.p_k < 8 for tx in lean.transmissions)


class TestBlackoutRun:
    def test_safety(self, blackout_trace):
        assert np.all(blackout_trace.h_pf <= 1.0)

    def test_codec_soundness(self, blackout_trace):
        err = np.max(np.abs(blackout_trace.x - blackout_trace.x_hat), axis=1)
        assert np.all(err <= blackout_trace.d_e * (1 + 1e-9) + 1e-300)

    def test_no_transmission_in_blackouts(self, blackout_scn, blackout_trace):
        sched = blackout_scn.schedule
        planner = CapacityPlanner(sched)
        for tx in blackout_trace.transmissions:
            j = sched.slot_index(tx.t_k)
            assert sched.caps[j] >= 1
            assert tx.p_k <= planner.packet_bound(j, tx.t_k)

    def test_update_gaps_strictly_positive(self, blackout_trace):
        updates = [tx.r_tilde_k for tx in blackout_trace.transmissions]
        assert all(b > a for a, b in zip(updates, updates[1:]))
        gaps = [tx.t_k for tx in blackout_trace.transmissions]
        assert all(b > a for a, b in zip(gaps, gaps[1:]))

    def test_packets_respect_artificial_bound(self, blackout_scn, blackout_trace):
        planner = CapacityPlanner(blackout_scn.schedule)
        for tx in blackout_trace.transmissions:
            j = blackout_scn.schedule.slot_index(tx.t_k)
            assert 1 <= tx.p_k <= planner.packet_bound(j, tx.t_k)

    def test_blackout_entry_margins(self, blackout_scn, blackout_trace):
        plant = blackout_scn.plant
        sched = blackout_scn.schedule
        for b in sched.blackout_slots():
            tau_l = float(sched.theta[b])
            tau_u = float(sched.theta[b + 1])
            if tau_l >= blackout_trace.horizon:
                continue
            margin = blackout_entry_margin(plant, tau_u - tau_l)
            idx = np.flatnonzero(blackout_trace.t == tau_l)
            assert idx.size > 0
            assert blackout_trace.eps[idx[-1]] <= margin
            idx_u = np.flatnonzero(blackout_trace.t == tau_u)
            assert idx_u.size > 0
            assert blackout_trace.h_ch[idx_u[-1]] <= 1.0

    def test_capacity_floor_drops_at_most_sent_bits(self, blackout_scn, blackout_trace):
        sched = blackout_scn.schedule
        planner = CapacityPlanner(sched)
        n = sched.n
        for tx in blackout_trace.transmissions:
            j_tx = sched.slot_index(tx.t_k)
            if planner.plan_for_slot(j_tx).plan is None:
                continue
            j_up = sched.slot_index(tx.r_tilde_k) if tx.r_tilde_k > 0 else j_tx
            before = planner.capacity_floor(j_tx, tx.t_k)
            after = planner.capacity_floor(j_up, tx.r_tilde_k)
            if math.isinf(after):
                continue
            assert after >= before - n * tx.p_k - 1e-9

    def test_logged_deficit_matches_recomputation(self, blackout_scn, blackout_trace):
        # Rebuild the capacity-deficit column at mid-run samples from the
        # trace's own quantities plus the schedule.
        plant = blackout_scn.plant
        sched = blackout_scn.schedule
        n = sched.n
        mu_inf = plant.constants.growth_rate_inf
        for idx in range(40, blackout_trace.t.size, 97):
            t = float(blackout_trace.t[idx])
            if t <= 0 or t >= blackout_trace.horizon:
                continue
            j = sched.slot_index(t)
            b = sched.next_blackout_slot(j)
            logged = blackout_trace.l3[idx]
            if b is None:
                assert logged == -math.inf
                continue
            tau_l = float(sched.theta[b])
            length = float(sched.theta[b + 1] - sched.theta[b])
            eps = blackout_trace.eps[idx]
            margin = blackout_entry_margin(plant, length)
            needed = n * (mu_inf * (tau_l - t) / math.log(2.0)
                          + math.log2(eps / margin))
            want = needed - 0.8 * blackout_trace.s_hat[idx]
            assert logged == pytest.approx(want, rel=1e-9)

    def test_partial_delay_factor_stays_safe(self, blackout_scn):
        quick = run(dataclasses.replace(blackout_scn, delay_factor=0.5,
                                        sample_step=0.05))
        assert np.all(quick.h_pf <= 1.0)
        for tx in quick.transmissions:
            assert tx.r_k - tx.t_k <= blackout_scn.schedule.max_delay(tx.t_k, tx.p_k)

    def test_audited_packets_drive_a_fresh_decoder(self, blackout_scn, blackout_trace):
        # Replaying the recorded packet stream through a fresh replica must
        # reproduce the trace's estimate at every update time.
        from etcsim.codec import Packet, decode_and_update, initial_state
        replica = initial_state(blackout_scn.x_hat0, blackout_scn.d_e0)
        for tx in blackout_trace.transmissions:
            pkt = Packet(t_k=tx.t_k, p_k=tx.p_k, symbols=tx.symbols)
            replica = decode_and_update(blackout_scn.plant, pkt, replica, tx.r_tilde_k)
            row = np.flatnonzero(blackout_trace.t == tx.r_tilde_k)[-1]
            assert np.array_equal(blackout_trace.x_hat[row], replica.x_hat)

    def test_deterministic_replay(self, blackout_scn, blackout_trace):
        again = run(blackout_scn)
        assert np.array_equal(again.t, blackout_trace.t)
        assert np.array_equal(again.x, blackout_trace.x)
        assert np.array_equal(again.x_hat, blackout_trace.x_hat)
        assert [tx.t_k for tx in again.transmissions] == [
            tx.t_k for tx in blackout_trace.transmissions]


class TestAdmissibility:
    def test_reference_scenario_passes(self, blackout_scn):
        assert check_admissibility(blackout_scn).ok

    def test_slow_channel_fails_with_witnesses(self):
        plant = sec6_plant()
        sched = ChannelSchedule(theta=[0.0, 5.0, 10.0], rates=[100.0, 100.0],
                                caps=[8, 8], n=2)
        scn = Scenario(plant=plant, schedule=sched,
                       trigger=TriggerConfig(lookahead=resolve_lookahead(plant, 0.1),
                                             sigma=0.06, sigma1=0.8),
                       mode="no_blackout", x0=np.array([6.0, -4.0]),
                       x_hat0=np.zeros(2), d_e0=9.0, horizon=10.0)
        report = check_admissibility(scn)
        rate_check = next(c for c in report.conditions if c.name == "rate_supports_delays")
        assert not rate_check.ok
        assert rate_check.witnesses
        with pytest.raises(AdmissibilityError):
            run(scn)

    def test_oversized_blackout_fails_capacity_check(self):
        plant = sec6_plant()
        # A sliver of usable time between two long blackouts cannot absorb
        # a unit error before the second one.
        sched = ChannelSchedule(
            theta=[0.0, 1.0, 3.0, 3.005, 5.005, 6.0],
            rates=[2000.0, 2000.0, 2000.0, 2000.0, 2000.0],
            caps=[1, 0, 1, 0, 1], n=2)
        scn = Scenario(plant=plant, schedule=sched,
                       trigger=TriggerConfig(lookahead=resolve_lookahead(plant, 0.1),
                                             sigma=0.06, sigma1=0.8),
                       mode="blackout", x0=np.array([0.1, 0.1]),
                       x_hat0=np.zeros(2), d_e0=0.5, horizon=6.0)
        report = check_admissibility(scn)
        blackout_check = next(c for c in report.conditions if c.name == "blackout_capacity")
        assert not blackout_check.ok
        assert blackout_check.witnesses[0][0] == 1  # the first blackout slot index


class TestScenarioValidation:
    def test_initial_bound_must_dominate_error(self, blackout_scn):
        with pytest.raises(ConfigurationError):
            dataclasses.replace(blackout_scn, d_e0=1.0)

    def test_horizon_must_fit_schedule(self, blackout_scn):
        with pytest.raises(ConfigurationError):
            dataclasses.replace(blackout_scn, horizon=25.0)

    def test_dimension_mismatch_rejected(self, blackout_scn):
        with pytest.raises(ConfigurationError):
            dataclasses.replace(blackout_scn, x0=np.zeros(3))


class TestStats:
    def test_no_transmission_stats(self):
        plant = sec6_plant().with_vd0(1.0)
        sched = ChannelSchedule(theta=[0.0, 2.0], rates=[3000.0], caps=[8], n=2)
        scn = Scenario(plant=plant, schedule=sched,
                       trigger=TriggerConfig(lookahead=resolve_lookahead(plant, 0.1),
                                             sigma=0.06, sigma1=0.8),
                       mode="no_blackout", x0=np.zeros(2), x_hat0=np.zeros(2),
                       d_e0=0.0, horizon=2.0, sample_step=0.1)
        stats = run(scn).stats
        assert stats["transmission_count"] == 0
        assert stats["mean_intertransmission"] is None
        assert stats["min_intertransmission"] is None

    def test_interval_arithmetic(self, blackout_trace):
        times = [tx.t_k for tx in blackout_trace.transmissions]
        gaps = np.diff(times)
        assert blackout_trace.stats["mean_intertransmission"] == pytest.approx(
            float(np.mean(gaps)))
        assert blackout_trace.stats["min_intertransmission"] == pytest.approx(
            float(np.min(gaps)))
        total = 2 * sum(tx.p_k for tx in blackout_trace.transmissions)
        assert blackout_trace.stats["bits_per_unit_time"] == pytest.approx(total / 20.0)

    def test_bits_per_window_partition(self, blackout_trace):
        assert sum(blackout_trace.stats["bits_per_window"]) == blackout_trace.stats[
            "total_bits"]
