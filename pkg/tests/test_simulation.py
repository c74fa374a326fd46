import numpy as np
import pytest

from sliceplace.simulation import (METRIC_COLUMNS, SimConfig, estimated_regret, request_generator,
                                   run, run_replications, with_overrides, write_outputs)
from sliceplace.workload import write_trace


def small(**kw):
    base = dict(topology="geant", horizon=150, seed=3, max_lifetime=20, drain=True, check_invariants=True)
    base.update(kw)
    return SimConfig(**base)


@pytest.fixture(scope="module")
def helios_trace():
    return run(small())


def test_columns_and_counts(helios_trace):
    tr = helios_trace
    assert tuple(tr.columns) == METRIC_COLUMNS
    assert len(tr) == 150 and tr["slot"].tolist() == list(range(1, 151))
    assert np.all(tr["accepted"] <= tr["arrivals"])
    ratio = tr["accepted"].sum() / tr["arrivals"].sum()
    assert tr.final()["acc_ratio"] == pytest.approx(ratio)
    assert np.all(np.diff(tr["elapsed_ms"]) >= 0)


def test_cluster_column(helios_trace):
    tr = helios_trace
    empty = tr["arrivals"] == 0
    assert np.all(tr["cluster"][empty] == -1)
    assert np.all(np.isnan(tr["ggf_reward"][empty]))
    assert set(tr["cluster"][~empty].astype(int)) <= {0, 1, 2}
    assert tr.n_clusters == 3


def test_drain_restores_everything(helios_trace):
    assert helios_trace.drained_clean is True


def test_regret_trace(helios_trace):
    tr = helios_trace
    assert tr.alphas.shape == (int((tr["arrivals"] > 0).sum()), 3)
    assert np.allclose(tr.alphas.sum(axis=1), 1)
    reg = tr["regret_est"][~np.isnan(tr["regret_est"])]
    assert np.all(reg >= -1e-9)
    assert estimated_regret(tr) >= -1e-9


@pytest.mark.parametrize("policy", ["random", "egreedy", "linucb", "c2ucb", "cts"])
def test_baselines_run_clean(policy):
    tr = run(small(policy=policy, horizon=80))
    assert tr.drained_clean and np.all(tr["cluster"] == -1)
    with pytest.raises(ValueError):
        estimated_regret(tr)


def test_same_seed_byte_identical():
    a, b = run(small(horizon=100)), run(small(horizon=100))
    assert a.to_csv() == b.to_csv()
    assert a.to_csv() != run(small(horizon=100, seed=4)).to_csv()


def test_elapsed_only_in_timing_output(helios_trace, tmp_path):
    body = helios_trace.to_csv().splitlines()
    assert body[0].split(",") == list(METRIC_COLUMNS)
    assert all(line.endswith(",") for line in body[1:])
    write_outputs(helios_trace, tmp_path, "m")
    timing = (tmp_path / "m.timing.csv").read_text().splitlines()
    assert timing[0] == "slot,elapsed_ms" and len(timing) == 151


def test_trace_replay_matches_generated_run(tmp_path):
    cfg = small(horizon=60)
    gen = request_generator(cfg)
    reqs = [r for t in range(1, 61) for r in gen.arrivals_for_slot(t)]
    write_trace(reqs, tmp_path / "req.csv")
    replay = run(with_overrides(cfg, trace=str(tmp_path / "req.csv")))
    assert replay.to_csv() == run(cfg).to_csv()


def test_replications_are_independent():
    summary = run_replications(small(horizon=60, replications=3), keep_traces=True)
    assert len(summary.per_run) == 3 and len(summary.traces) == 3
    accs = [r["acc_ratio"] for r in summary.per_run]
    assert summary.mean["acc_ratio"] == pytest.approx(np.mean(accs))
    assert summary.std["acc_ratio"] == pytest.approx(np.std(accs, ddof=1))
    assert len(set(accs)) > 1
    rows = summary.to_csv().splitlines()
    assert rows[0].startswith("replication,acc_ratio") and rows[-2].startswith("mean")


def test_per_request_cluster_mode():
    tr = run(small(horizon=60, per_request_cluster=True))
    assert tr.drained_clean
    assert np.all(np.isnan(tr["regret_est"]))


def test_explicit_cluster_count_and_louvain_fallback(tmp_path):
    assert run(small(horizon=20, n_clusters=5)).n_clusters == 5
    p = tmp_path / "ring.edges"
    p.write_text("nodes 6\n0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n2 3\n")
    assert run(small(topology=str(p), horizon=20)).n_clusters == 2


def test_acceptance_ratio_before_first_arrival_is_one():
    tr = run(small(arrival_rate=0.05, horizon=40, seed=0))
    first = int(np.argmax(tr["arrivals"] > 0))
    assert np.all(tr["acc_ratio"][:first] == 1.0)


@pytest.mark.parametrize("kw", [dict(horizon=0), dict(policy="nope"), dict(replications=0),
                                dict(n_clusters=0), dict(gamma=0), dict(node_capacity=(10, 5)),
                                dict(vnf_demand=(0, 5))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)
