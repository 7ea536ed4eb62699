"""Locality-aware collective communication schedules.

Builds negabinary (base -2) trees and butterflies plus classic baselines
for eight collectives, verifies their semantics with a deterministic
simulator, and quantifies the inter-group traffic they place on
oversubscribed networks.
"""

from .butterflies import ButterflyKind, butterfly_partner
from .negabinary import (
    NegabinaryCode,
    UnsupportedConfigError,
    max_positive,
    nb2rank,
    rank2nb,
    trailing_equal_bits,
)
from .schedules import (
    COLLECTIVES,
    VARIANTS,
    BlockRange,
    CommSchedule,
    Transfer,
    build_allgather,
    build_allreduce,
    build_alltoall,
    build_bcast,
    build_gather,
    build_reduce,
    build_reduce_scatter,
    build_scatter,
    build_schedule,
)
from .simulator import ScheduleDefectError, VerifyReport, execute, oracle, verify
from .topology import (
    AllocationRecord,
    GroupMap,
    block_groups,
    explicit_groups,
    load_allocation,
    torus_coords,
)
from .traffic import TrafficReport, account, allocation_sweep, compare, distance_profile
from .trees import (
    CommTree,
    TreeKind,
    bine_distance,
    build_tree,
    doubling_join_step,
    doubling_partner,
    halving_join_step,
    halving_partner,
    modulo_distance,
    nu,
    subtree_members,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
