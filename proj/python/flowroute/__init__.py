"""Traffic-aware routing over a macroscopic flow simulation."""

from ._flowroute import (  # noqa: F401
    DuplicateError,
    Error,
    InputError,
    InvalidPathError,
    InvariantError,
    Network,
    NotFoundError,
    ParseError,
    ResourceLimitError,
    RoutingError,
    Scenario,
    Simulation,
    __version__,
    bpr_travel_time,
    generate,
    initial_assignment,
    optimize,
)
