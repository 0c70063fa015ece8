import numpy as np
import pytest

from agpolicy.actions import MAX_N, MAX_WATER, N_LEVELS, ActionAmounts, decode_action
from agpolicy.crop_env import N_FULL, N_PARTIAL, SimConfig
from agpolicy.errors import InvalidArgument
from agpolicy.harness import run_episode, season_weather
from agpolicy.imitation import scripted_expert
from agpolicy.policies import (
    FULL, PARTIAL, BaselineSchedule, FunctionPolicy, baseline_policy, observation_for,
    random_policy, zero_policy,
)


class TestBaseline:
    @pytest.mark.parametrize("seed", range(5))
    def test_total_n_is_360(self, config, seed):
        log = run_episode(config, season_weather(seed, config), baseline_policy())
        assert log.totals.n_input == 360

    def test_each_trigger_fires_once(self, config, weather):
        log = run_episode(config, weather, baseline_policy())
        doses = [r for r in log.records if r.n_applied > 0]
        assert [r.n_applied for r in doses] == [90, 90, 90, 90]
        assert len({r.dap for r in doses}) == 4

    def test_first_split_on_first_day(self, config, weather):
        log = run_episode(config, weather, baseline_policy())
        assert log.records[0].n_applied == 90

    def test_wet_soil_means_no_irrigation(self):
        pol = baseline_policy()
        obs = np.zeros(N_PARTIAL)
        obs[10] = 0.8
        for _ in range(50):
            obs[2] = 15.0
            assert pol.act(obs).water == 0

    def test_irrigation_rule(self):
        pol = baseline_policy()
        obs = np.zeros(N_PARTIAL)
        obs[10] = 0.45
        assert pol.act(obs).water == pytest.approx(min(24, (0.9 - 0.45) * 150))
        obs[10] = 0.85
        assert pol.act(obs).water == 0
        obs[10], obs[3] = 0.1, 4.0
        assert pol.act(obs).water == 0

    def test_refill_smaller_than_cap(self):
        pol = baseline_policy(BaselineSchedule(irrigation_trigger=0.5, refill_target=0.55))
        obs = np.zeros(N_PARTIAL)
        obs[10] = 0.49
        assert pol.act(obs).water == pytest.approx(0.06 * 150)

    def test_irrigates_only_below_trigger(self, config):
        for seed in range(5):
            log = run_episode(config, season_weather(seed, config), baseline_policy())
            prev_sw = config.soil.initial_fraction
            for r in log.records:
                if r.water_applied > 0:
                    assert prev_sw < 0.5
                prev_sw = r.sw

    def test_deterministic(self, config, weather):
        a = run_episode(config, weather, baseline_policy())
        b = run_episode(config, weather, baseline_policy())
        assert a.records == b.records

    def test_reset_restarts_schedule(self):
        pol = baseline_policy()
        obs = np.zeros(N_PARTIAL)
        assert pol.act(obs).n_fert == 90
        assert pol.act(obs).n_fert == 0
        pol.reset()
        assert pol.act(obs).n_fert == 90

    @pytest.mark.parametrize("kw", [
        dict(applications=((100, 90), (50, 90))),
        dict(applications=((0, 200),)),
        dict(irrigation_trigger=1.5),
        dict(daily_cap_mm=30),
        dict(capacity_mm=0),
    ])
    def test_invalid_schedule(self, kw):
        with pytest.raises(InvalidArgument):
            BaselineSchedule(**kw)

    def test_total_property(self):
        assert BaselineSchedule().total_n == 360
        assert BaselineSchedule(applications=((0, 100), (300, 60))).total_n == 160


class TestSimplePolicies:
    def test_zero(self, rng):
        pol = zero_policy()
        for _ in range(20):
            assert pol(rng.normal(size=N_PARTIAL)) == ActionAmounts(0, 0)
        assert pol.observation == PARTIAL

    def test_random_repeatable(self):
        a, b = random_policy(5), random_policy(5)
        obs = np.zeros(N_PARTIAL)
        assert [a.act(obs) for _ in range(50)] == [b.act(obs) for _ in range(50)]
        assert [random_policy(6).act(obs) for _ in range(50)] != [a.act(obs) for _ in range(50)]

    def test_random_mean_n(self):
        idx = random_policy(0).action_indices(100_000)
        n = np.array(N_LEVELS)[idx // 5]
        assert n.mean() == pytest.approx(80, abs=2)
        assert set(np.unique(idx)) == set(range(25))

    def test_act_and_bulk_share_stream(self):
        a, b = random_policy(3), random_policy(3)
        obs = np.zeros(N_PARTIAL)
        assert [a.act(obs) for _ in range(5)] == [decode_action(k) for k in b.action_indices(5)]


@pytest.mark.parametrize("make", [baseline_policy, zero_policy, lambda: random_policy(1), scripted_expert])
def test_actions_inside_box(make):
    cfg = SimConfig()
    for seed in range(3):
        log = run_episode(cfg, season_weather(seed, cfg), make())
        for r in log.records:
            assert 0 <= r.n_applied <= MAX_N and 0 <= r.water_applied <= MAX_WATER


def test_observation_projection():
    full = np.arange(N_FULL, dtype=float)
    part = FunctionPolicy(lambda o: ActionAmounts(0, 0), "p", PARTIAL)
    whole = FunctionPolicy(lambda o: ActionAmounts(0, 0), "f", FULL)
    assert np.array_equal(observation_for(part, full), full[:N_PARTIAL])
    assert observation_for(whole, full) is full
