"""Slice-request generation: Poisson arrivals of linear service function chains."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .topology import N_NODE_RESOURCES


@dataclass
class WorkloadConfig:
    arrival_rate: float = 2.0
    chain_lengths: tuple[int, ...] = (2, 3, 4)
    vnf_demand: tuple[float, float] = (5.0, 50.0)
    vlink_demand: tuple[float, float] = (50.0, 100.0)
    min_lifetime: int = 10
    max_lifetime: int = 50

    def __post_init__(self):
        self.chain_lengths = tuple(int(c) for c in self.chain_lengths)
        if self.arrival_rate <= 0:
            raise ValueError("arrival rate must be positive")
        if not self.chain_lengths or min(self.chain_lengths) < 1:
            raise ValueError("chain lengths must be positive")
        for lo, hi in (self.vnf_demand, self.vlink_demand):
            if not 0 < lo <= hi:
                raise ValueError(f"invalid demand range [{lo}, {hi}]")
        if not 1 <= self.min_lifetime <= self.max_lifetime:
            raise ValueError("lifetime range must satisfy 1 <= min <= max")

    @property
    def max_chain(self) -> int:
        return max(self.chain_lengths)


@dataclass
class SliceRequest:
    """One network slice request carrying a linear SFC.

    ``vnf_demand`` has one row per VNF (cpu, gpu, ram, storage) and
    ``link_demand`` one bandwidth value per virtual link between consecutive
    VNFs.
    """

    id: int
    arrival: int
    lifetime: int
    vnf_demand: np.ndarray
    link_demand: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.vnf_demand = np.asarray(self.vnf_demand, dtype=float).reshape(-1, N_NODE_RESOURCES)
        self.link_demand = np.asarray(self.link_demand, dtype=float).reshape(-1)
        if len(self.link_demand) != max(self.length - 1, 0):
            raise ValueError("a linear chain of D VNFs needs D-1 virtual links")
        if self.lifetime < 1:
            raise ValueError("lifetime must be at least one slot")

    @property
    def length(self) -> int:
        return len(self.vnf_demand)

    @property
    def expiry(self) -> int:
        return self.arrival + self.lifetime

    @property
    def virtual_links(self) -> list[tuple[int, int]]:
        return [(d, d + 1) for d in range(self.length - 1)]


def aggregate_demand(request: SliceRequest) -> tuple[np.ndarray, float]:
    """Total node demand per resource and total virtual-link bandwidth."""
    return request.vnf_demand.sum(axis=0), float(request.link_demand.sum())


class RequestGenerator:
    """Draws the requests arriving in each slot from its own RNG stream."""

    def __init__(self, config: WorkloadConfig, rng=None):
        self.config = config
        self.rng = np.random.default_rng(rng)
        self._next_id = 0

    def arrivals_for_slot(self, t: int) -> list[SliceRequest]:
        cfg, rng = self.config, self.rng
        count = int(rng.poisson(cfg.arrival_rate))
        out = []
        for _ in range(count):
            length = int(cfg.chain_lengths[rng.integers(len(cfg.chain_lengths))])
            vnf = rng.uniform(cfg.vnf_demand[0], cfg.vnf_demand[1], (length, N_NODE_RESOURCES))
            links = rng.uniform(cfg.vlink_demand[0], cfg.vlink_demand[1], length - 1)
            lifetime = int(rng.integers(cfg.min_lifetime, cfg.max_lifetime + 1))
            out.append(SliceRequest(self._next_id, t, lifetime, vnf, links))
            self._next_id += 1
        return out


class TraceReplay:
    """Replays requests read from a trace, slot by slot."""

    def __init__(self, requests):
        self.by_slot: dict[int, list[SliceRequest]] = {}
        for r in requests:
            self.by_slot.setdefault(r.arrival, []).append(r)

    def arrivals_for_slot(self, t: int) -> list[SliceRequest]:
        return list(self.by_slot.get(t, ()))


TRACE_HEADER = ["h", "tau", "delta", "psi", "demands"]


def write_trace(requests, path) -> None:
    """Write requests as CSV rows ``h,tau,delta,psi,demands...``.

    The demand cells hold ``4*psi`` node values (VNF by VNF, in cpu, gpu, ram,
    storage order) followed by ``psi-1`` bandwidth values.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in requests:
        w.writerow([r.id, r.arrival, r.lifetime, r.length]
                   + [repr(float(x)) for x in r.vnf_demand.ravel()]
                   + [repr(float(x)) for x in r.link_demand])
    Path(path).write_text(buf.getvalue())


def read_trace(path) -> list[SliceRequest]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != TRACE_HEADER[:4]:
            raise ValueError(f"{path}: not a request trace (bad header)")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                h, tau, delta, psi = (int(x) for x in row[:4])
                values = [float(x) for x in row[4:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            n_node = N_NODE_RESOURCES * psi
            if len(values) != n_node + psi - 1:
                raise ValueError(f"{path}:{lineno}: expected {n_node + psi - 1} demand values")
            out.append(SliceRequest(h, tau, delta, np.array(values[:n_node]), np.array(values[n_node:])))
    return out
