"""Communication rates under a constraint on the type of the interference a channel leaks."""
from .prob import (
    ProbabilityError,
    as_cond_pmf,
    as_pmf,
    binary_entropy,
    empirical_type,
    entropy,
    is_typical,
    joint_empirical_type,
    mutual_information,
    push_forward,
    total_variation,
)
from .polytope import (
    EnumerationLimitError,
    InfeasibleTargetError,
    PreimagePolytope,
    enumerate_vertices,
    is_feasible,
    lp_maximize,
)
from .capacity import (
    CapacityResult,
    SingleUserChannel,
    capacity_curve,
    constrained_capacity,
    unconstrained_capacity,
)
from .region import (
    CoordinationDist,
    RegionPoint,
    TwoUserChannel,
    convex_hull_3d,
    example1_channel,
    example1_rates,
    frontier_search,
    interference_type,
    rate_tuple,
)
from .coding import (
    MemoryCapError,
    simulate_example1_protocol,
    simulate_single_user,
    simulate_two_user,
    tv_convergence_profile,
)
from .channels import parse_channel_file, preset, serialize_channel

__version__ = "0.1.0"
