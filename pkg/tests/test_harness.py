"""Harness tests: sampler, episodes, campaigns, falsification, crash search."""
import csv

import pytest

from laneshield import (
    CampaignConfig,
    CarState,
    Constants,
    EnvPolicy,
    FallbackOnly,
    Integrator,
    RawPolicy,
    SamplingError,
    WorldState,
    campaign,
    constant_mlp,
    euler_gap_search,
    falsify,
    invariant_behind,
    run_episode,
    sample_initial,
    verify,
)
from laneshield.harness import (
    EulerGapScenario,
    world_from_representative,
    write_crashes,
    write_scenarios,
    write_trajectory,
)

C = Constants()
BRAKE_ENV = EnvPolicy.emergency_brake()


class TestSampleInitial:
    def test_satisfies_invariant(self):
        w = sample_initial(C, pattern=2, seed=0, density=5.0)
        assert invariant_behind(w.ego, w.front, C)

    def test_infeasible_density(self):
        with pytest.raises(SamplingError):
            sample_initial(C, pattern=2, seed=0, density=1e6)

    def test_pattern_sizes(self):
        for k in (2, 3, 4, 5):
            w = sample_initial(C, pattern=k, seed=1, density=5.0)
            assert len(w.cars) == k

    def test_extra_car_ordering(self):
        for seed in range(5):
            w = sample_initial(C, pattern=5, seed=seed, density=5.0)
            for prev, cur in zip(w.cars[1:], w.cars[2:]):
                assert prev.x + C.L <= cur.x
                assert prev.v <= cur.v

    def test_deterministic(self):
        assert sample_initial(C, 3, seed=7, density=5.0) == \
            sample_initial(C, 3, seed=7, density=5.0)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            sample_initial(C, pattern=2, seed=0, density=0.0)
        with pytest.raises(ValueError):
            sample_initial(C, pattern=7, seed=0)


class TestRunEpisode:
    def test_zero_steps(self):
        w0 = sample_initial(C, 2, 0, 5.0)
        res = run_episode(w0, FallbackOnly(), BRAKE_ENV, 0, Integrator.exact(), C)
        assert res.trajectory == () and not res.crashed and res.steps == 0

    def test_fallback_never_crashes(self):
        for seed in range(20):
            w0 = sample_initial(C, 2, seed, 5.0)
            res = run_episode(w0, FallbackOnly(), BRAKE_ENV, 60, Integrator.exact(), C)
            assert not res.crashed

    def test_crashed_iff_some_row_collided(self):
        m = constant_mlp((0, 0, 1))
        for seed in range(10):
            w0 = sample_initial(C, 2, seed, 8.0)
            res = run_episode(w0, RawPolicy(m), BRAKE_ENV, 60, Integrator.exact(), C)
            assert res.crashed == any(r.collided for r in res.trajectory)
            if res.crashed:
                assert res.trajectory[-1].collided

    def test_rows_time_increase_by_period(self):
        w0 = sample_initial(C, 2, 3, 5.0)
        res = run_episode(w0, FallbackOnly(), BRAKE_ENV, 10, Integrator.exact(), C)
        times = [row.t for row in res.trajectory]
        assert times == pytest.approx([C.T * (k + 1) for k in range(10)])

    def test_crash_row_is_at_collision_instant(self):
        m = constant_mlp((0, 0, 1))
        w0 = WorldState((CarState(0.0, 12.0), CarState(17.0, 10.0)))
        res = run_episode(w0, RawPolicy(m), BRAKE_ENV, 60, Integrator.exact(), C)
        assert res.crashed
        last = res.trajectory[-1]
        assert last.cars[1].x - last.cars[0].x == pytest.approx(C.L, abs=1e-6)

    def test_env_policy_broadcast_and_list(self):
        w0 = sample_initial(C, 3, 4, 5.0)
        res_a = run_episode(w0, FallbackOnly(), BRAKE_ENV, 5, Integrator.exact(), C)
        res_b = run_episode(w0, FallbackOnly(), [BRAKE_ENV, BRAKE_ENV], 5,
                            Integrator.exact(), C)
        assert res_a == res_b
        with pytest.raises(ValueError):
            run_episode(w0, FallbackOnly(), [BRAKE_ENV], 5, Integrator.exact(), C)

    def test_idm_env_runs(self):
        w0 = sample_initial(C, 3, 5, 5.0)
        res = run_episode(w0, FallbackOnly(), EnvPolicy.idm_policy(), 20,
                          Integrator.exact(), C)
        assert res.steps == 20


class TestCampaign:
    def test_single_episode_sd_zero(self):
        cfg = CampaignConfig(constants=C, policy="fallback", env=BRAKE_ENV,
                             integrator=Integrator.exact(), steps=10)
        s = campaign(cfg, 1)
        assert s.episodes == 1 and s.reward_sd == 0.0

    def test_deterministic(self):
        cfg = CampaignConfig(constants=C, policy="jsc", env=EnvPolicy.idm_policy(),
                             integrator=Integrator.exact(),
                             mlp=constant_mlp((0, 0, 1)), steps=20, seed=11)
        assert campaign(cfg, 10) == campaign(cfg, 10)

    def test_action_histogram_and_overrides(self):
        cfg = CampaignConfig(constants=C, policy="veriphy", env=BRAKE_ENV,
                             integrator=Integrator.exact(),
                             mlp=constant_mlp((0, 0, 1)), steps=20, seed=2)
        s = campaign(cfg, 5)
        assert sum(s.actions.values()) == 5 * 20
        assert 0.0 <= s.override_rate <= 1.0

    def test_needs_weights_for_nn_policies(self):
        cfg = CampaignConfig(constants=C, policy="raw", env=BRAKE_ENV,
                             integrator=Integrator.exact())
        with pytest.raises(ValueError, match="weights"):
            campaign(cfg, 1)


class TestFalsify:
    def test_empty_report(self):
        report = {"status": "safe", "regions": [], "stats": {}}
        out = falsify(constant_mlp((1, 0, 0)), report, BRAKE_ENV, Integrator.exact(), C)
        assert out == []

    def test_accelerate_representatives_crash_and_fallback_does_not(self):
        m = constant_mlp((0, 0, 1))
        report = verify(m, C, eps=1e-2, budget=20_000)
        assert report.confirmed
        crashes = falsify(m, report, BRAKE_ENV, Integrator.exact(), C, limit=25)
        assert crashes
        safe = falsify(m, report, BRAKE_ENV, Integrator.exact(), C, limit=25,
                       policy_kind="fallback")
        assert safe == []

    def test_world_from_representative(self):
        w = world_from_representative([0.1, 0.2, 0.3, 0.05], 2, C)
        assert w.ego.x == pytest.approx(20.0)
        assert w.ego.v == pytest.approx(16.0)
        assert w.front.x == pytest.approx(20.0 + 60.0)
        assert w.front.v == pytest.approx(16.0 + 4.0)


class TestEulerGapSearch:
    def test_finds_scenarios_with_uniform_braking(self):
        scenarios = euler_gap_search(C.with_bmin(-5.0), [0], Integrator.euler(10),
                                     Integrator.euler(100), samples_per_seed=64)
        assert scenarios
        for s in scenarios:
            assert s.min_gap_coarse < C.L
            assert s.min_gap_fine >= C.L
            assert s.min_gap_exact >= C.L
            assert invariant_behind(s.ego, s.other, C.with_bmin(-5.0))

    def test_exact_as_coarse_is_empty(self):
        assert euler_gap_search(C.with_bmin(-5.0), [0], Integrator.exact(),
                                Integrator.euler(100), samples_per_seed=32) == []

    def test_equal_resolutions_empty(self):
        assert euler_gap_search(C.with_bmin(-5.0), [0], Integrator.euler(10),
                                Integrator.euler(10), samples_per_seed=32) == []


class TestShieldSafetyAnyScores:
    def test_random_networks_never_crash_shielded(self):
        # shields must stay safe for an arbitrary score source
        import numpy as np

        from laneshield import mlp

        rng = np.random.default_rng(21)
        net = mlp([
            (rng.normal(size=(16, 10)), rng.normal(size=16), "relu"),
            (rng.normal(size=(3, 16)), rng.normal(size=3), "linear"),
        ])
        for policy in ("veriphy", "jsc"):
            for env in (BRAKE_ENV, EnvPolicy.idm_policy()):
                cfg = CampaignConfig(constants=C, policy=policy, env=env,
                                     integrator=Integrator.exact(), mlp=net,
                                     steps=60, seed=22)
                assert campaign(cfg, 25).crashes == 0


class TestCrashProvenance:
    def test_every_crash_has_a_sanctioned_cause(self):
        # crashes only from raw policies, coarse Euler, or non-invariant starts
        m = constant_mlp((0, 0, 1))
        policies = [("fallback", None), ("raw", m), ("veriphy", m), ("jsc", m)]
        integrators = [Integrator.exact(), Integrator.euler(10)]
        for kind, net in policies:
            for integ in integrators:
                cfg = CampaignConfig(constants=C, policy=kind, env=BRAKE_ENV,
                                     integrator=integ, mlp=net, steps=30, seed=13)
                summary, results = campaign(cfg, 15, keep_results=True)
                for w0, res in results:
                    if res.crashed:
                        assert (kind == "raw"
                                or integ.kind == "euler"
                                or not invariant_behind(w0.ego, w0.front, C))


class TestStateTypes:
    def test_world_needs_two_to_five_cars(self):
        with pytest.raises(ValueError):
            WorldState((CarState(0, 0),))
        with pytest.raises(ValueError):
            WorldState(tuple(CarState(10.0 * i, 0) for i in range(6)))

    def test_world_accessors(self):
        w = WorldState((CarState(0, 1), CarState(10, 2), CarState(20, 3)))
        assert w.ego.v == 1 and w.front.v == 2

    def test_duo_state_carries_clocks(self):
        from laneshield import DuoState

        d = DuoState(CarState(0, 1), CarState(10, 2), t=3.5, tc=3.0)
        assert d.tc <= d.t <= d.tc + C.T


class TestCsvWriters:
    def test_trajectory_columns(self, tmp_path):
        w0 = sample_initial(C, 3, 1, 5.0)
        res = run_episode(w0, FallbackOnly(), BRAKE_ENV, 5, Integrator.exact(), C)
        path = tmp_path / "traj.csv"
        write_trajectory(res, 3, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["t", "x_1", "x_2", "x_3", "v_1", "v_2", "v_3",
                           "a_1", "a_2", "a_3", "action", "overridden", "collided"]
        assert len(rows) == 6

    def test_crash_and_scenario_files(self, tmp_path):
        m = constant_mlp((0, 0, 1))
        report = verify(m, C, eps=1e-2, budget=10_000)
        crashes = falsify(m, report, BRAKE_ENV, Integrator.exact(), C, limit=5)
        p1 = tmp_path / "crashes.csv"
        write_crashes(crashes, p1)
        assert len(list(csv.reader(p1.open()))) == len(crashes) + 1

        scen = [EulerGapScenario(CarState(0, 20), CarState(50, 10), 4.9, 5.1, 5.2)]
        p2 = tmp_path / "scen.csv"
        write_scenarios(scen, p2)
        rows = list(csv.reader(p2.open()))
        assert rows[0][0] == "x_ego" and len(rows) == 2
