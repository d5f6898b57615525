"""Exception types shared across the package."""


class SingularChannelError(ValueError):
    """Channel Gram matrix is singular or too ill-conditioned to invert."""


class ResourceLimitError(RuntimeError):
    """A configured size cap (token count, BFS node count) was exceeded."""
