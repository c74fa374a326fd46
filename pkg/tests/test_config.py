import pytest

from sliceplace.config import (ConfigError, build_experiment, format_config, load_config, parse_lines,
                               resolve_key, split_override)


def test_defaults():
    exp = build_experiment([])
    s = exp.sim
    assert (s.arrival_rate, s.max_lifetime, s.horizon, s.steps, s.gamma) == (2.0, 50, 5000, 10, 0.1)
    assert s.chain_lengths == (2, 3, 4) and s.vnf_demand == (5.0, 50.0) and s.vlink_demand == (50.0, 100.0)
    assert s.node_capacity == (5.0, 1000.0) and s.link_capacity == (500.0, 5000.0)
    assert s.n_clusters is None and exp.output_dir == "out"


def test_parse_and_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nworkload.lambda = 5\nworkload.psi = {2,3}\nclustering.k = 4  # trailing\n"
                 "sim.T=100\noutput.write_trace = yes\n")
    exp = load_config(p, [("lambda", "3"), ("K", "auto")])
    assert exp.sim.arrival_rate == 3.0 and exp.sim.chain_lengths == (2, 3)
    assert exp.sim.n_clusters is None and exp.sim.horizon == 100 and exp.write_trace


def test_format_roundtrip():
    exp = build_experiment([("psi", "2,4"), ("k", "3"), ("policy", "cts"), ("dir", "x")])
    again = build_experiment(parse_lines(format_config(exp)))
    assert again.sim == exp.sim and again.output_dir == "x"


@pytest.mark.parametrize("key, full", [("lambda", "workload.lambda"), ("T", "sim.T"), ("K", "clustering.k"),
                                       ("hla.Z", "hla.Z"), ("policy", "policy.name")])
def test_resolve(key, full):
    assert resolve_key(key) == full


@pytest.mark.parametrize("pairs, msg", [
    ([("nope", "1")], "unknown key"),
    ([("sim.T", "abc")], "sim.T"),
    ([("sim.T", "0")], "horizon"),
    ([("hla.eta", "constant")], "step-size"),
    ([("sim.drain", "maybe")], "boolean"),
    ([("workload.vnf_demand", "1,2,3")], "lo,hi"),
    ([("policy", "x")], "unknown policy"),
])
def test_errors(pairs, msg):
    with pytest.raises(ConfigError, match=msg):
        build_experiment(pairs)


def test_parse_lines_error():
    with pytest.raises(ConfigError, match="c.cfg:2"):
        parse_lines("a = 1\njunk\n", "c.cfg")


def test_split_override():
    assert split_override(" k = 3 ") == ("k", "3")
    with pytest.raises(ConfigError):
        split_override("k3")


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")
