"""Named demo networks and the plans that bound them.

These are the instances the CLI ``reproduce`` targets run; each builder
returns a fresh spec so callers can mutate copies freely.
"""

from __future__ import annotations

from .channel_model import ChannelRealization, NetworkSpec
from .exact_linalg import ScalarDomain
from .replication_bounds import ReplicationPlan, contiguous_partition

import numpy as np


def counterexample_network() -> NetworkSpec:
    """(10, 8, 6) square network, ranks 6 and 5 across the first pair, rest full."""
    return NetworkSpec.square((10, 8, 6), {(0, 1): 6, (1, 0): 5})


def reduced_example_network() -> NetworkSpec:
    """(10, 8, 6) square network whose cross ranks admit an exact-sum reduction."""
    return NetworkSpec.square(
        (10, 8, 6),
        {(0, 1): 8, (0, 2): 3, (1, 0): 5, (1, 2): 4, (2, 0): 6, (2, 1): 2},
    )


def rect_2x3_network() -> NetworkSpec:
    """3 users, 2 transmit / 3 receive antennas each, full-rank cross links."""
    return NetworkSpec.make((2, 2, 2), (3, 3, 3))


def mixed_dims_network() -> NetworkSpec:
    """(10x10)(8x10)(6x3) network with the link from transmitter 1 to receiver 3 absent."""
    return NetworkSpec.make((10, 8, 6), (10, 10, 3), {(2, 0): 0})


def boundary_sum_network() -> NetworkSpec:
    """(5, 3, 2): user 1 as large as the rest combined, only its outbound links live."""
    return NetworkSpec.square((5, 3, 2), {(1, 0): 3, (2, 0): 2}, default="zero")


def boundary_equal_network() -> NetworkSpec:
    """(5, 5, 3): two equal users, a full chain of ranks through the third."""
    return NetworkSpec.square((5, 5, 3), {(1, 0): 5, (2, 0): 3, (1, 2): 3}, default="zero")


def rect_2x3_plan() -> ReplicationPlan:
    """Five copies per user, shifted wiring, first three copies cooperating."""
    shifts = [[0] * 3 for _ in range(3)]
    for j in range(3):
        shifts[j][(j + 1) % 3] = 2
        shifts[j][(j + 2) % 3] = 3
    return ReplicationPlan.from_shifts([5] * 3, shifts,
                                       contiguous_partition([5] * 3, [3, 3, 3]))


def mixed_dims_plan() -> ReplicationPlan:
    """Two copies per user with mirror wiring, copy-wise cooperation."""
    return ReplicationPlan.mirror(3)


def boundary_sum_plan() -> ReplicationPlan:
    """No replication; user 1 against the cooperating rest."""
    return ReplicationPlan.identity(3, (((0, 0),), ((1, 0), (2, 0))))


def boundary_equal_plan() -> ReplicationPlan:
    """Mirror wiring with both copies of user 1 and one copy of user 3 on one side."""
    return ReplicationPlan.mirror(3, (((0, 0), (0, 1), (2, 0)),
                                      ((1, 0), (1, 1), (2, 1))))


def rect_2x3_witness(spec: NetworkSpec) -> ChannelRealization:
    """0/1 channels certifying the full coop rank of the shifted-plan bound."""
    next_link = np.array([[1, 0], [0, 1], [0, 0]], dtype=np.int64)
    second_link = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
    blocks = {}
    for j in range(3):
        blocks[(j, j)] = np.array([[1, 0], [0, 1], [0, 0]], dtype=np.int64)
        blocks[(j, (j + 1) % 3)] = next_link.copy()
        blocks[(j, (j + 2) % 3)] = second_link.copy()
    return ChannelRealization(spec, ScalarDomain.prime_default(), blocks, None)


def mixed_dims_witness(spec: NetworkSpec) -> ChannelRealization:
    """0/1 channels certifying coop rank 23 for the mixed-dimension network."""
    def eye_pad(rows, cols):
        out = np.zeros((rows, cols), dtype=np.int64)
        for l in range(min(rows, cols)):
            out[l, l] = 1
        return out

    blocks = {
        (0, 0): eye_pad(10, 10),
        (1, 1): eye_pad(10, 8),
        (2, 2): eye_pad(3, 6),
        (1, 0): np.eye(10, dtype=np.int64),
        (2, 1): np.hstack([np.eye(3, dtype=np.int64), np.zeros((3, 5), np.int64)]),
        (0, 2): np.vstack([np.eye(6, dtype=np.int64), np.zeros((4, 6), np.int64)]),
        (1, 2): np.vstack([np.eye(6, dtype=np.int64), np.zeros((4, 6), np.int64)]),
        (0, 1): np.vstack([np.zeros((2, 8), np.int64), np.eye(8, dtype=np.int64)]),
        (2, 0): np.zeros((3, 10), dtype=np.int64),
    }
    return ChannelRealization(spec, ScalarDomain.prime_default(), blocks, None)


def boundary_equal_witness(spec: NetworkSpec) -> ChannelRealization:
    """0/1 channels certifying the full coop rank for the equal-pair boundary plan."""
    M1, M3 = spec.M[0], spec.M[2]
    blocks = {}
    for j in range(3):
        for i in range(3):
            blocks[(j, i)] = np.zeros((spec.N[j], spec.M[i]), dtype=np.int64)
        np.fill_diagonal(blocks[(j, j)], 1)
    blocks[(1, 0)] = np.eye(M1, dtype=np.int64)
    blocks[(2, 0)] = np.hstack([np.eye(M3, dtype=np.int64),
                                np.zeros((M3, M1 - M3), np.int64)])
    blocks[(1, 2)] = np.vstack([np.eye(M3, dtype=np.int64),
                                np.zeros((spec.M[1] - M3, M3), np.int64)])
    return ChannelRealization(spec, ScalarDomain.prime_default(), blocks, None)


NETWORKS = {
    "counterexample": counterexample_network,
    "reduced-example": reduced_example_network,
    "example-2x3": rect_2x3_network,
    "example-asym": mixed_dims_network,
    "theorem5": boundary_sum_network,
    "theorem6": boundary_equal_network,
}
