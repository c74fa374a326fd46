"""Flat ``section.key = value`` experiment configuration files."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .simulation import SimConfig


class ConfigError(ValueError):
    pass


def _range(value: str) -> tuple[float, float]:
    parts = [p for p in value.replace("[", "").replace("]", "").split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError(f"expected 'lo,hi', got {value!r}")
    lo, hi = (float(p) for p in parts)
    return lo, hi


def _int_list(value: str) -> tuple[int, ...]:
    parts = [p for p in value.replace("{", "").replace("}", "").split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty list")
    return tuple(int(p) for p in parts)


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _clusters(value: str):
    return None if value.strip().lower() == "auto" else int(value)


def _eta(value: str):
    if value.strip().replace(" ", "") not in ("inv_sqrt", "1/sqrt(z+1)"):
        raise ConfigError("only the 1/sqrt(z+1) step-size schedule is supported")
    return None


def _optional_path(value: str):
    return value.strip() or None


# config key -> (SimConfig field or None for non-simulation keys, parser)
KEYS = {
    "topology.source": ("topology", str),
    "topology.node_capacity": ("node_capacity", _range),
    "topology.link_capacity": ("link_capacity", _range),
    "clustering.k": ("n_clusters", _clusters),
    "clustering.resolution": ("resolution", float),
    "workload.lambda": ("arrival_rate", float),
    "workload.zeta": ("max_lifetime", int),
    "workload.min_lifetime": ("min_lifetime", int),
    "workload.psi": ("chain_lengths", _int_list),
    "workload.vnf_demand": ("vnf_demand", _range),
    "workload.vlink_demand": ("vlink_demand", _range),
    "workload.trace": ("trace", _optional_path),
    "sim.T": ("horizon", int),
    "sim.seed": ("seed", int),
    "sim.reps": ("replications", int),
    "sim.drain": ("drain", _bool),
    "sim.check_invariants": ("check_invariants", _bool),
    "policy.name": ("policy", str),
    "hla.Z": ("steps", int),
    "hla.gamma": ("gamma", float),
    "hla.eta": (None, _eta),
    "hla.weight_ratio": ("weight_ratio", float),
    "hla.per_request_cluster": ("per_request_cluster", _bool),
    "baseline.epsilon": ("epsilon", float),
    "baseline.beta": ("beta", float),
    "baseline.cts_v": ("cts_v", float),
    "baseline.cts_gamma": ("cts_gamma", float),
    "output.dir": (None, str),
    "output.write_trace": (None, _bool),
}

ALIASES = {"policy": "policy.name", "K": "clustering.k", "k": "clustering.k", "topology": "topology.source"}


def resolve_key(key: str) -> str:
    key = key.strip()
    if key in KEYS:
        return key
    if key in ALIASES:
        return ALIASES[key]
    matches = [k for k in KEYS if k.split(".", 1)[1] == key]
    if len(matches) == 1:
        return matches[0]
    if matches:
        raise ConfigError(f"ambiguous key {key!r}: {', '.join(matches)}")
    raise ConfigError(f"unknown key {key!r}")


@dataclass
class Experiment:
    sim: SimConfig = field(default_factory=SimConfig)
    output_dir: str = "out"
    write_trace: bool = False


def parse_lines(text: str, source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def build_experiment(pairs) -> Experiment:
    """Apply ``(key, value)`` pairs in order over the defaults."""
    sim_kwargs, exp = {}, Experiment()
    for key, value in pairs:
        full = resolve_key(key)
        attr, parse = KEYS[full]
        try:
            parsed = parse(value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{full}: {exc}") from None
        if attr is not None:
            sim_kwargs[attr] = parsed
        elif full == "output.dir":
            exp.output_dir = parsed
        elif full == "output.write_trace":
            exp.write_trace = parsed
    try:
        exp.sim = SimConfig(**sim_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return exp


def load_config(path, overrides=()) -> Experiment:
    """Read a config file (IO errors propagate as ``OSError``) and apply overrides."""
    pairs = parse_lines(Path(path).read_text(), str(path)) if path is not None else []
    return build_experiment(pairs + list(overrides))


def split_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def format_config(exp: Experiment) -> str:
    """Render every key with its current value (useful as a template)."""
    sim = exp.sim
    out = []
    for key, (attr, _) in KEYS.items():
        if attr is None:
            value = {"hla.eta": "inv_sqrt", "output.dir": exp.output_dir,
                     "output.write_trace": str(exp.write_trace).lower()}[key]
        else:
            v = getattr(sim, attr)
            if v is None:
                value = "auto" if attr == "n_clusters" else ""
            elif isinstance(v, bool):
                value = str(v).lower()
            elif isinstance(v, tuple):
                value = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            else:
                value = str(v)
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"
