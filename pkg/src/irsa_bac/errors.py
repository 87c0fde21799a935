"""Exception types shared across the package."""


class InvalidParametersError(ValueError):
    """Construction parameters violate a documented precondition."""


class FrameOverloadError(RuntimeError):
    """More active users than codewords; the frame cannot be encoded."""

    def __init__(self, active_count: int, num_codewords: int):
        super().__init__(
            f"{active_count} active users exceed codebook size {num_codewords}"
        )
        self.active_count = active_count
        self.num_codewords = num_codewords


class DecodingInconsistencyError(RuntimeError):
    """A decoder reached a state that is impossible under correct SIC."""


class CodebookPropertyError(RuntimeError):
    """A BCH codebook failed its unique-subset-sum guarantee."""


class OracleTooLargeError(RuntimeError):
    """Brute-force subset enumeration would exceed the safety bound."""


class ConfigError(ValueError):
    """A run configuration file is malformed or violates a constraint."""
