"""s-diagonalization of shift-preserving operators on shift-invariant spaces.

Thin Python surface over the C++ core: ``analyze``, ``diagonalize``,
``verify`` and ``synthesize`` act on problem files and return plain dicts;
``convolve`` works on centered odd-length coefficient lists.
"""

from ._core import (  # noqa: F401
    Error,
    ParseError,
    analyze,
    convolve,
    diagonalize,
    synthesize,
    verify,
    version,
)

__version__ = version()
__all__ = [
    "Error",
    "ParseError",
    "analyze",
    "convolve",
    "diagonalize",
    "synthesize",
    "verify",
    "version",
    "__version__",
]
