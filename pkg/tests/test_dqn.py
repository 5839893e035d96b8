import csv
import math

import numpy as np
import pytest
from scipy import stats

from colourlab import dqn, neural
from colourlab import generators as gen
from colourlab.datasets import generate_graphs
from colourlab.env import ContractError, encode_state, reset
from colourlab.graph import complete_graph, empty_graph, is_valid_colouring


def tiny_data():
    train = [s.graph for s in generate_graphs(12, (6, 8), 1)]
    val = [s.graph for s in generate_graphs(5, (6, 8), 2)]
    return train, val


def test_epsilon_schedule():
    cfg = dqn.TrainConfig()
    assert dqn.epsilon(0, cfg) == 0.9
    assert dqn.epsilon(25000, cfg) == 0.01
    assert dqn.epsilon(40000, cfg) == 0.01
    assert dqn.epsilon(12500, cfg) == pytest.approx(math.sqrt(0.9 * 0.01), rel=1e-12)
    eps = [dqn.epsilon(e, cfg) for e in range(0, 25001, 500)]
    assert all(a > b for a, b in zip(eps, eps[1:]))
    with pytest.raises(ValueError):
        dqn.epsilon(-1, cfg)


@pytest.mark.parametrize("kw", [dict(lr=0), dict(batch_size=0), dict(eps_end=0.95), dict(gamma=0),
                                dict(gamma=1.5), dict(episodes=-1), dict(topology="grid"), dict(tau=2)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        dqn.TrainConfig(**kw)


def test_config_hash_excludes():
    a = dqn.TrainConfig(topology="complete")
    b = dqn.TrainConfig(topology="original")
    assert a.config_hash() != b.config_hash()
    assert a.config_hash(exclude=("topology",)) == b.config_hash(exclude=("topology",))


def test_replay_fifo_eviction():
    buf = dqn.ReplayBuffer(5)
    for i in range(8):
        buf.push(i)
    assert len(buf) == 5
    assert buf.items() == [3, 4, 5, 6, 7]
    s = buf.sample(5, np.random.default_rng(0))
    assert sorted(s) == [3, 4, 5, 6, 7]
    with pytest.raises(ValueError):
        buf.sample(6, np.random.default_rng(0))


def test_replay_sampling_deterministic_and_distinct():
    buf = dqn.ReplayBuffer(100)
    for i in range(100):
        buf.push(i)
    a = buf.sample(64, np.random.default_rng(4))
    b = buf.sample(64, np.random.default_rng(4))
    assert a == b and len(set(a)) == 64


def _state5():
    g = complete_graph(6)
    s = reset(g, 0)
    return s, encode_state(s)


def test_select_action_uniform_when_exploring():
    s, enc = _state5()
    legal = s.uncoloured
    assert legal.size == 5
    rng = np.random.default_rng(0)
    params = neural.init_qnet(0, emb=8, n_blocks=1)
    draws = [dqn.select_action(params, enc, legal, 1.0, rng) for _ in range(10_000)]
    counts = [draws.count(int(v)) for v in legal]
    assert stats.chisquare(counts).pvalue > 1e-3


def test_select_action_greedy():
    s, enc = _state5()
    params = neural.init_qnet(0, emb=8, n_blocks=1)
    q = neural.forward(params, enc)
    legal = s.uncoloured
    best = int(legal[np.argmax(q[legal])])
    assert dqn.select_action(params, enc, legal, 0.0, np.random.default_rng(1)) == best
    assert dqn.greedy_action(q, legal) == dqn.greedy_action(q + 7.5, legal)
    q = np.zeros(6)
    q[3] = 1.0
    assert dqn.greedy_action(q, legal) == 3
    # ties go to the lowest index
    assert dqn.greedy_action(np.zeros(6), legal) == int(legal.min())
    with pytest.raises(ContractError):
        dqn.select_action(params, enc, np.array([], dtype=int), 0.0, np.random.default_rng(0))


def test_evaluate_trivial_graphs():
    p = neural.init_qnet(0, emb=8, n_blocks=1)
    res = dqn.evaluate(p, [empty_graph(5), complete_graph(5)])
    assert res.colours == [1, 5]
    assert res.mean == 3 and res.stderr == 2


def test_evaluate_matches_single_graph_runs():
    p = neural.init_qnet(1, emb=8, n_blocks=2)
    graphs = [gen.gen_erdos_renyi(n, 0.4, n) for n in range(5, 12)]
    batched = dqn.evaluate(p, graphs, seed=3)
    for i, g in enumerate(graphs):
        assert is_valid_colouring(g, batched.colourings[i])
        assert batched.colours[i] <= g.max_degree + 1
    # the lockstep batch must not change any individual rollout
    for i, g in enumerate(graphs):
        s = reset(g, np.random.default_rng([3, i]))
        while not s.terminal:
            from colourlab.env import step
            s, _, _ = step(s, dqn.greedy_action(neural.forward(p, encode_state(s)), s.uncoloured))
        assert s.colours.tolist() == batched.colourings[i].tolist()


def test_evaluate_multiseed():
    graphs = [gen.gen_erdos_renyi(8, 0.5, 0), gen.gen_queen(3, 3)]
    p = neural.init_qnet(0, emb=8, n_blocks=1)
    stats1, raw = dqn.evaluate_multiseed([p], graphs)
    assert raw.shape == (1, 2) and all(se == 0 for _, se in stats1)
    stats12, raw = dqn.evaluate_multiseed([p] * 12, graphs)
    assert all(se == 0 for _, se in stats12)
    assert [m for m, _ in stats12] == [m for m, _ in stats1]
    with pytest.raises(ValueError):
        dqn.evaluate_multiseed([], graphs)


def test_evaluate_multiseed_rejects_incompatible(tmp_path):
    neural.save_params(neural.init_qnet(0, emb=8, n_blocks=1), tmp_path / "small.npz")
    with pytest.raises(neural.CheckpointError):
        dqn.evaluate_multiseed([tmp_path / "small.npz"], [complete_graph(3)])


def test_train_zero_episodes():
    train, val = tiny_data()
    res = dqn.train(dqn.TrainConfig(episodes=0, seed=4), train, val)
    assert res.metrics == [] and res.params.max_abs_diff(neural.init_qnet(4)) == 0.0
    with pytest.raises(ValueError):
        dqn.train(dqn.TrainConfig(episodes=1), [], val)


def test_train_outputs_and_determinism(tmp_path):
    train, val = tiny_data()
    cfg = dqn.TrainConfig(episodes=30, batch_size=8, eval_period=10, seed=3)
    a = dqn.train(cfg, train, val, tmp_path / "a")
    b = dqn.train(cfg, train, val, tmp_path / "b")
    assert a.params.max_abs_diff(b.params) == 0.0
    strip = lambda rows: [{k: v for k, v in r.items() if k != "elapsed_s"} for r in rows]  # noqa: E731
    assert strip(a.metrics) == strip(b.metrics)
    assert len(a.metrics) == 30 and [r["episode"] for r in a.metrics] == list(range(1, 31))
    assert [r["val_mean_colours"] is not None for r in a.metrics].count(True) == 3
    assert any(r["loss"] is not None for r in a.metrics)
    with open(tmp_path / "a" / "metrics.csv") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == dqn.METRICS_HEADER and len(rows) == 31
    names = sorted(p.name for p in (tmp_path / "a" / "checkpoints").iterdir())
    assert names == ["ep000010.npz", "ep000020.npz", "ep000030.npz", "final.npz"]
    for x, y in zip(sorted((tmp_path / "a" / "checkpoints").iterdir()), sorted((tmp_path / "b" / "checkpoints").iterdir())):
        assert x.read_bytes() == y.read_bytes()
    # the stored validation value is reproducible from the checkpoint
    p = neural.load_params(tmp_path / "a" / "checkpoints" / "ep000020.npz")
    assert dqn.evaluate(p, val).mean == a.metrics[19]["val_mean_colours"]


def test_paired_topologies_share_graph_sequence():
    train, val = tiny_data()
    kw = dict(episodes=12, batch_size=8, eval_period=6, seed=9)
    a = dqn.train(dqn.TrainConfig(topology="complete", **kw), train, val)
    b = dqn.train(dqn.TrainConfig(topology="original", **kw), train, val)
    assert a.graph_sequence == b.graph_sequence and a.first_vertices == b.first_vertices


def test_divergence_saves_last_good(tmp_path, monkeypatch):
    train, val = tiny_data()
    real = neural.loss_and_grads
    calls = {"n": 0}

    def flaky(*a, **k):
        calls["n"] += 1
        loss, g = real(*a, **k)
        return (float("nan") if calls["n"] == 3 else loss), g

    monkeypatch.setattr(neural, "loss_and_grads", flaky)
    with pytest.raises(dqn.TrainingDiverged) as ei:
        dqn.train(dqn.TrainConfig(episodes=20, batch_size=4, seed=0), train, val, tmp_path)
    assert ei.value.checkpoint is not None and ei.value.checkpoint.exists()
    assert neural.load_params(ei.value.checkpoint).all_finite()
