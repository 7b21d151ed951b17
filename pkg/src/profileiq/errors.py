"""Exception hierarchy shared by the library and the CLI.

Exit-code mapping used by the CLI: InputError -> 1, AnalysisError -> 2,
partial extraction failure under --strict -> 3.
"""


class ProfileIqError(Exception):
    """Base class for all profileiq errors."""


class InputError(ProfileIqError):
    """Invalid or malformed input data (images, manifests, CSVs, config)."""


class AnalysisError(ProfileIqError):
    """A statistical computation is undefined for the given data."""
