import math

import numpy as np
import pytest

from agpolicy import harness
from agpolicy.errors import InvalidArgument, ParseError
from agpolicy.imitation import scripted_expert
from agpolicy.policies import baseline_policy, random_policy, zero_policy
from agpolicy.reward import PRESET_NAMES, daily_reward, preset, season_return_from_totals


class TestRunEpisode:
    def test_zero_policy_totals(self, config, weather):
        log = harness.run_episode(config, weather, zero_policy())
        assert log.totals.n_input == 0 and log.totals.water_input == 0
        assert log.done_reason == "maturity" and log.yield_kg > 0

    def test_totals_are_column_sums(self, config, weather):
        log = harness.run_episode(config, weather, random_policy(2))
        assert log.totals.n_input == math.fsum(r.n_applied for r in log.records)
        assert log.totals.water_input == math.fsum(r.water_applied for r in log.records)
        assert log.totals.n_leach == math.fsum(r.tleachd for r in log.records)
        assert log.totals.yield_kg == log.records[-1].grnwt

    @pytest.mark.parametrize("rf", PRESET_NAMES)
    def test_return_matches_totals(self, config, weather, rf):
        log = harness.run_episode(config, weather, baseline_policy(), rf)
        expect = season_return_from_totals(log.totals, rf)
        assert log.total_reward == pytest.approx(expect, rel=1e-9)

    def test_each_rf_rescores_same_trajectory(self, config, weather):
        logs = {rf: harness.run_episode(config, weather, scripted_expert(), rf) for rf in PRESET_NAMES}
        first = logs["RF1"]
        for rf, log in logs.items():
            assert log.totals == first.totals
            daily = [daily_reward(r is log.records[-1], r.grnwt if r is log.records[-1] else None,
                                  r.n_applied, r.water_applied, r.tleachd, preset(rf)) for r in log.records]
            assert daily == log.rewards

    def test_deterministic(self, config, weather):
        a = harness.run_episode(config, weather, random_policy(4))
        b = harness.run_episode(config, weather, random_policy(4))
        assert a.records == b.records

    def test_balance(self, config, weather):
        rep = harness.run_episode(config, weather, random_policy(1)).balance()
        assert rep.water_relative <= 1e-8 and rep.n_relative <= 1e-8

    def test_days_and_doy(self, config, weather):
        log = harness.run_episode(config, weather, zero_policy())
        assert [r.dap for r in log.records] == list(range(1, len(log) + 1))
        assert log.records[0].doy == config.planting_day_of_year


class TestEvaluate:
    def test_single_seed_std_zero(self):
        s = harness.evaluate(baseline_policy(), n_seeds=1)
        assert all(s.std(rf) == 0 for rf in PRESET_NAMES)
        assert s.n_seeds == 1

    def test_repeatable(self):
        a = harness.evaluate(random_policy(0), ("RF1",), 3, base_seed=9)
        b = harness.evaluate(random_policy(0), ("RF1",), 3, base_seed=9)
        assert a.returns == b.returns and a.seeds == b.seeds

    def test_zero_policy_rf1_is_yield_value(self):
        s = harness.evaluate(zero_policy(), ("RF1",), 4, base_seed=2)
        for t, r in zip(s.totals, s.returns["RF1"]):
            assert r == pytest.approx(0.158 * t.yield_kg, rel=1e-12)

    def test_matches_individual_episodes(self):
        f = harness.EnvFactory()
        s = harness.evaluate(baseline_policy(), ("RF1", "RF5"), 2, base_seed=5, factory=f)
        for seed, r1 in zip(s.seeds, s.returns["RF1"]):
            env = f(seed)
            log = harness.run_episode(env.config, env.weather, baseline_policy())
            assert log.total_reward == pytest.approx(r1, rel=1e-9)

    def test_seed_count(self):
        with pytest.raises(InvalidArgument):
            harness.evaluate(zero_policy(), n_seeds=0)

    def test_heldout_seeds_distinct(self):
        seeds = harness.heldout_seeds(0, 20)
        assert len(set(seeds)) == 20
        assert harness.heldout_seeds(0, 5) == seeds[:5]


class TestMatrix:
    ROWS = [("baseline", harness.SeasonTotals(360, 393.7, 212.6, 10771.5)),
            ("TP1", harness.SeasonTotals(240, 156, 38.5, 10998)),
            ("TP5", harness.SeasonTotals(200, 138, 39.2, 10926.1))]

    def test_published_cells(self):
        m = harness.eval_matrix_from_totals(self.ROWS)
        assert m["baseline"]["RF1"] == pytest.approx(984.4, abs=0.1)
        assert m["baseline"]["RF5"] == pytest.approx(337.6, abs=0.1)
        assert m["TP1"]["RF1"] == pytest.approx(1376.5, abs=0.1)
        assert m["TP1"]["RF5"] == pytest.approx(1611, abs=1)
        assert m["TP5"]["RF5"] == pytest.approx(1651, abs=1)

    def test_cell_definition(self):
        m = harness.eval_matrix_from_totals(self.ROWS, ("RF2", "RF3"))
        for name, t in self.ROWS:
            assert set(m[name]) == {"RF2", "RF3"}
            assert m[name]["RF3"] == season_return_from_totals(t, "RF3")


class TestExports:
    def test_empty_curve(self, tmp_path):
        harness.export_training_curve([], tmp_path / "c.csv")
        assert (tmp_path / "c.csv").read_text() == "episode,return,epsilon\n"

    def test_curve_format(self, tmp_path):
        harness.export_training_curve([1.0, -2.5], tmp_path / "c.csv", [1.0, 0.5])
        assert (tmp_path / "c.csv").read_text().splitlines()[1:] == ["0,1.0000,1.0000", "1,-2.5000,0.5000"]
        with pytest.raises(InvalidArgument):
            harness.export_training_curve([1.0], tmp_path / "d.csv", [])

    def test_log_reexport_identical(self, tmp_path, config, weather):
        log = harness.run_episode(config, weather, baseline_policy())
        harness.export_application_history(log, tmp_path / "a.csv")
        harness.export_application_history(log, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        header, rows = harness.read_csv_rows(tmp_path / "a.csv")
        assert header == harness.LOG_HEADER and len(rows) == len(log)
        n = sum(float(r[3]) for r in rows)
        w = sum(float(r[4]) for r in rows)
        assert n == log.totals.n_input and w == pytest.approx(log.totals.water_input, abs=1e-3)

    def test_summary_round_trip(self, tmp_path):
        s = harness.evaluate(baseline_policy(), ("RF1", "RF5"), 2)
        harness.export_eval(s, tmp_path / "s.csv")
        header, rows = harness.read_csv_rows(tmp_path / "s.csv")
        assert header == harness.SUMMARY_HEADER
        for row, rf in zip(rows, ("RF1", "RF5")):
            assert row[:2] == ["baseline", rf]
            assert float(row[2]) == pytest.approx(s.mean(rf), abs=5e-5)
            assert float(row[3]) == pytest.approx(s.std(rf), abs=5e-5)

    def test_matrix_export(self, tmp_path):
        m = harness.eval_matrix_from_totals(TestMatrix.ROWS, ("RF1",))
        harness.export_eval(m, tmp_path / "m.csv")
        header, rows = harness.read_csv_rows(tmp_path / "m.csv")
        assert header == harness.MATRIX_HEADER
        assert rows[0] == ["baseline", "RF1", "984.4270"]


class TestTotalsCsv:
    def test_parse(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("name,n_input,water_input,n_leach,yield\nx,1,2,3,4\n\n")
        (name, t), = harness.load_totals_csv(p)
        assert name == "x" and t == harness.SeasonTotals(1, 2, 3, 4)

    @pytest.mark.parametrize("body,line", [
        ("name,a\n", 1),
        ("name,n_input,water_input,n_leach,yield\nx,1,2,3\n", 2),
        ("name,n_input,water_input,n_leach,yield\nx,1,2,3,4\ny,1,-2,3,4\n", 3),
        ("name,n_input,water_input,n_leach,yield\nx,1,2,three,4\n", 2),
    ])
    def test_errors_carry_line(self, tmp_path, body, line):
        p = tmp_path / "t.csv"
        p.write_text(body)
        with pytest.raises(ParseError) as exc:
            harness.load_totals_csv(p)
        assert exc.value.line == line


def test_factory_fixed_weather(config, weather):
    f = harness.EnvFactory(config, fixed_weather=weather)
    assert f(1).weather is weather and f(2).weather is weather
    g = harness.EnvFactory(config)
    assert not np.array_equal(g.weather(1).as_array(), g.weather(2).as_array())
