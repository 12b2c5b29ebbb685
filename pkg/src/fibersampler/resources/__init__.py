"""Resource files for fibersampler."""

from pathlib import Path

__all__ = [
    "HERE",
    "NAVY_DIRECTORY",
    "get_navy_path",
]

HERE = Path(__file__).parent.resolve()

#: Race by rank counts of active duty personnel, one file per gender and corps
NAVY_DIRECTORY = HERE.joinpath("navy")


def get_navy_path(gender: str, corps: str) -> Path:
    """Get the path of a Navy table, e.g. ``get_navy_path("male", "officer")``."""
    return NAVY_DIRECTORY.joinpath(f"{gender}_{corps}.tsv")
