"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict with its measured value and
wall time; the lines are printed together in the terminal summary.
"""

import time

import numpy as np
import pytest
from scipy import stats

from agpolicy import dqn, harness, imitation
from agpolicy import neuralnet as nn
from agpolicy.actions import N_ACTIONS, ActionAmounts, action_table, decode_action, encode_action
from agpolicy.cli import main
from agpolicy.crop_env import SimConfig, audit_episode
from agpolicy.policies import baseline_policy, random_policy, zero_policy
from agpolicy.reward import PRESET_NAMES, season_return_from_totals

from conftest import ACCEPTANCE_LINES

ACCEPTANCE_SEED = 0

FIXTURES = """name,n_input,water_input,n_leach,yield
baseline,360,393.7,212.6,10771.5
TP1,240,156,38.5,10998
TP2,240,594,69.2,11291.8
TP5,200,138,39.2,10926.1
IL-TP1,245.6,238.9,43.4,11279.8
"""
EXPECTED_CELLS = {
    ("baseline", "RF1"): 984.4,
    ("baseline", "RF5"): 337.6,
    ("TP1", "RF1"): 1376.5,
    ("TP1", "RF5"): 1611,
    ("TP2", "RF2"): 1595,
    ("TP5", "RF5"): 1651,
    ("IL-TP1", "RF1"): 1325.5,
}


def report(number, title, ok, detail, seconds, budget):
    within = seconds <= budget
    verdict = "PASS" if ok and within else "FAIL"
    line = f"[{verdict}] {number}. {title}: {detail}; {seconds:.1f} s (limit {budget:g} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert within, line


def random_episodes(n, seed):
    """``n`` seasons on distinct weather under the uniform random policy."""
    factory = harness.EnvFactory()
    logs = []
    for k, s in enumerate(harness.heldout_seeds(seed, n)):
        env = factory(s)
        logs.append(harness.run_episode(env.config, env.weather, random_policy(seed + k), env=env))
    return logs


def test_1_published_tables(tmp_path):
    totals = tmp_path / "fixtures.csv"
    totals.write_text(FIXTURES)
    out = tmp_path / "matrix.csv"
    t0 = time.perf_counter()
    status = main(["eval-matrix", "--totals", str(totals), "--out", str(out)])
    seconds = time.perf_counter() - t0
    _, rows = harness.read_csv_rows(out)
    cells = {(name, rf): float(v) for name, rf, v in rows}
    errors = {k: abs(cells[k] - v) for k, v in EXPECTED_CELLS.items()}
    worst = max(errors, key=errors.get)
    ok = status == 0 and errors[worst] <= 1.0
    report(1, "published-table reproduction", ok,
           f"{len(errors)} cells, worst |error| {errors[worst]:.3f} at {worst[0]}/{worst[1]}", seconds, 1)


def test_2_linearity_identity():
    t0 = time.perf_counter()
    factory = harness.EnvFactory()
    worst = 0.0
    for k, s in enumerate(harness.heldout_seeds(202, 100)):
        env = factory(s)
        first = None
        for rf in PRESET_NAMES:
            daily = harness.run_episode(env.config, env.weather, random_policy(k), rf, env=env)
            first = first or daily.totals
            assert daily.totals == first
            direct = season_return_from_totals(daily.totals, rf)
            worst = max(worst, abs(daily.total_reward - direct) / max(1.0, abs(direct)))
    seconds = time.perf_counter() - t0
    report(2, "linearity identity", worst <= 1e-9, f"100 episodes x 5 RFs, max relative gap {worst:.2e}",
           seconds, 30)


def test_3_gradient_correctness():
    t0 = time.perf_counter()
    worst = nn.gradcheck_random_nets(50, seed=ACCEPTANCE_SEED)
    seconds = time.perf_counter() - t0
    report(3, "gradient correctness", worst <= 1e-5, f"50 networks, max relative error {worst:.2e}", seconds, 60)


def test_4_conservation():
    t0 = time.perf_counter()
    reports = [log.balance() for log in random_episodes(100, 404)]
    water = max(r.water_relative for r in reports)
    nitrogen = max(r.n_relative for r in reports)
    seconds = time.perf_counter() - t0
    report(4, "conservation", water <= 1e-8 and nitrogen <= 1e-8,
           f"100 random episodes, worst water closure {water:.2e}, worst N closure {nitrogen:.2e}", seconds, 60)


@pytest.mark.slow
def test_5_dqn_learning_signal():
    t0 = time.perf_counter()
    factory = harness.EnvFactory()
    result = dqn.train(factory, dqn.DQNConfig(episodes=500, seed=ACCEPTANCE_SEED, reward="RF1"))
    means = {}
    policies = {
        "greedy": dqn.greedy_policy(result.params, result.normalizer),
        "zero": zero_policy(),
        "random": random_policy(ACCEPTANCE_SEED),
    }
    for name, pol in policies.items():
        means[name] = harness.evaluate(pol, ("RF1",), 20, base_seed=12345, factory=factory).mean("RF1")
    seconds = time.perf_counter() - t0
    span = max(means.values()) - means["random"]
    margin = (means["greedy"] - means["zero"]) / span
    ok = means["greedy"] > means["zero"] and means["greedy"] > means["random"] and margin >= 0.1
    detail = (f"greedy {means['greedy']:.1f}, zero {means['zero']:.1f}, random {means['random']:.1f}, "
              f"margin {margin:.3f} of span (need 0.1)")
    report(5, "DQN learning signal", ok, detail, seconds, 900)


def test_6_bc_fidelity():
    t0 = time.perf_counter()
    factory = harness.EnvFactory()
    expert = imitation.scripted_expert()
    demos = imitation.collect_demos(expert, factory, 200, seed=ACCEPTANCE_SEED)
    fit = imitation.train_bc(demos, imitation.BCConfig())
    clone = imitation.BCPolicy(fit.params, fit.normalizer, rounded=True)
    agree = imitation.agreement_rate(expert, clone, factory, 20, seed=ACCEPTANCE_SEED)
    exp_t = harness.evaluate(expert, ("RF1",), 20, base_seed=ACCEPTANCE_SEED, factory=factory).mean_totals
    bc_t = harness.evaluate(clone, ("RF1",), 20, base_seed=ACCEPTANCE_SEED, factory=factory).mean_totals
    n_gap = abs(bc_t.n_input - exp_t.n_input) / exp_t.n_input
    w_gap = abs(bc_t.water_input - exp_t.water_input) / exp_t.water_input
    seconds = time.perf_counter() - t0
    ok = agree >= 0.95 and n_gap <= 0.05 and w_gap <= 0.05
    detail = (f"agreement {agree:.4f}, N {bc_t.n_input:.1f} vs {exp_t.n_input:.1f} ({n_gap:.1%}), "
              f"water {bc_t.water_input:.1f} vs {exp_t.water_input:.1f} ({w_gap:.1%})")
    report(6, "BC fidelity", ok, detail, seconds, 300)


def test_7_determinism(tmp_path):
    t0 = time.perf_counter()
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["--out-dir", str(out), "train-dqn", "--episodes", "50",
                     "--seed", str(ACCEPTANCE_SEED)]) == 0
        outputs.append(((out / "training_curve.csv").read_bytes(), (out / "q_network.agpl").read_bytes()))
    seconds = time.perf_counter() - t0
    same = outputs[0] == outputs[1]
    report(7, "determinism", same, f"curve and checkpoint bytes identical: {same}", seconds, 120)


def test_8_structural_properties(tmp_path):
    t0 = time.perf_counter()
    checks = {}
    table = action_table()
    checks["codec"] = all(encode_action(decode_action(k)) == k for k in range(N_ACTIONS)) \
        and len({tuple(r) for r in table}) == N_ACTIONS

    buf = dqn.ReplayBuffer(2)
    for k in range(3):
        buf.push(dqn.Transition(np.zeros(28), k, float(k), np.zeros(28), False))
    checks["fifo"] = [t.a for t in buf.transitions()] == [1, 2]

    rng = np.random.default_rng(ACCEPTANCE_SEED)
    q = nn.init([28, 8, N_ACTIONS], seed=1)
    counts = np.bincount([dqn.select_action(q, np.zeros(28), 1.0, rng) for _ in range(100_000)],
                         minlength=N_ACTIONS)
    checks["uniform"] = stats.chisquare(counts).pvalue > 0.01

    grid_ok = True
    for a in rng.uniform([0, 0], [160, 24], size=(2000, 2)):
        r = imitation.round_to_grid(a)
        grid_ok &= imitation.round_to_grid(r) == r
    checks["rounding"] = grid_ok and imitation.round_to_grid((20, 3)) == ActionAmounts(0.0, 0.0) \
        and imitation.round_to_grid((100, 15)) == ActionAmounts(80.0, 12.0)

    params = nn.init([28, 16, 16, 25], seed=3)
    norm = nn.Normalizer(rng.normal(size=28), rng.uniform(0.5, 2, size=28))
    nn.save_checkpoint(params, norm, {"k": 1}, tmp_path / "c.agpl")
    back, back_norm, meta = nn.load_checkpoint(tmp_path / "c.agpl")
    checks["checkpoint"] = back.equals(params) and back_norm.equals(norm) and meta == {"k": 1}

    seconds = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    report(8, "structural properties", not failed,
           "all of " + ", ".join(checks) + " hold" if not failed else "failed: " + ", ".join(failed), seconds, 60)


def test_9_baseline_contract():
    t0 = time.perf_counter()
    cfg = SimConfig()
    trigger = baseline_policy().schedule.irrigation_trigger
    factory = harness.EnvFactory(cfg)
    n_totals, bad_irrigation = [], 0
    for s in harness.heldout_seeds(909, 20):
        env = factory(s)
        obs = env.reset()
        pol = baseline_policy()
        results = []
        while not env.done:
            a = pol.act(obs[:12])
            if a.water > 0 and not obs[10] < trigger:
                bad_irrigation += 1
            res = env.step(a)
            results.append(res)
            obs = res.observation
        n_totals.append(sum(r.n_applied for r in results))
        assert audit_episode(results).n_relative <= 1e-8
    seconds = time.perf_counter() - t0
    ok = all(n == 360 for n in n_totals) and bad_irrigation == 0
    report(9, "baseline contract", ok,
           f"N per season {sorted(set(n_totals))}, irrigation days with sw >= trigger: {bad_irrigation}",
           seconds, 60)
