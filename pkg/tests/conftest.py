import numpy as np
import pytest

from sliceplace.topology import NetworkGraph
from sliceplace.workload import SliceRequest


def make_request(rid=0, arrival=1, lifetime=5, vnf=((10, 10, 10, 10), (10, 10, 10, 10)), links=(60,)):
    return SliceRequest(rid, arrival, lifetime, np.array(vnf, dtype=float), np.array(links, dtype=float))


@pytest.fixture
def path4():
    # 0 - 1 - 2 - 3 with uniform capacities
    return NetworkGraph(4, [(0, 1), (1, 2), (2, 3)], node_capacity=np.full((4, 4), 100.0),
                        link_capacity=np.full(3, 200.0), name="path4")


@pytest.fixture
def square():
    # 4-cycle with a chord between 0 and 2
    return NetworkGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)],
                        node_capacity=np.full((4, 4), 100.0), link_capacity=np.full(5, 100.0))
