"""Defaults and configuration lookups for fibersampler.

Every value here can be overridden through :func:`pystow.get_config`, which
looks first for an environment variable named ``FIBERSAMPLER_<KEY>`` and then
for the ``[fibersampler]`` section of ``~/.config/fibersampler.ini``.
"""

import pystow

__all__ = [
    "MODULE_NAME",
    "DEFAULT_FIBER_CAP",
    "DEFAULT_STREAMING_THRESHOLD",
    "IPFP_TOL",
    "IPFP_MAX_ITER",
    "ZERO_FITTED_THRESHOLD",
    "DEFAULT_NEG_PENALTY",
    "DEFAULT_FLOOR",
    "TIE_RTOL",
    "RNG_BLOCK_SIZE",
    "get_fiber_cap",
    "get_streaming_threshold",
]

MODULE_NAME = "fibersampler"

#: Largest number of tables an enumeration may produce before it gives up
DEFAULT_FIBER_CAP = 5_000_000
#: Fibers larger than this never get their edge lists materialised
DEFAULT_STREAMING_THRESHOLD = 100_000

#: Stop IPFP once no margin entry is off by more than this
IPFP_TOL = 1e-8
#: Full jk/ik/ij cycles before IPFP gives up
IPFP_MAX_ITER = 10_000
#: Fitted means below this are treated as structural zeros
ZERO_FITTED_THRESHOLD = 1e-12

#: Weight multiplier per negative cell in the relaxed chain
DEFAULT_NEG_PENALTY = 0.1
#: Relaxation depth used when none is given
DEFAULT_FLOOR = 1

#: Relative tolerance when comparing a statistic against the observed one
TIE_RTOL = 1e-9

#: Number of random draws the sampler requests from the generator at once
RNG_BLOCK_SIZE = 4096


def get_fiber_cap() -> int:
    """Get the fiber enumeration cap, honoring ``FIBERSAMPLER_CAP``."""
    return pystow.get_config(
        MODULE_NAME, "cap", dtype=int, default=DEFAULT_FIBER_CAP
    )


def get_streaming_threshold() -> int:
    """Get the fiber size past which edge lists are not materialised."""
    return pystow.get_config(
        MODULE_NAME,
        "streaming_threshold",
        dtype=int,
        default=DEFAULT_STREAMING_THRESHOLD,
    )
