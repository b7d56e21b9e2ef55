"""Exception types shared across the package."""


class DegenerateProblemError(RuntimeError):
    """A fit or loss evaluation is numerically meaningless.

    Raised when the cross-covariance is rank-exhausted before any factor is
    extracted, when a coefficient system is too ill-conditioned to solve, or
    when a batch norm underflows so the flow loss is undefined. Callers in
    the optimization loop catch this to skip or resample an iteration.
    """


class FlowAbortError(RuntimeError):
    """Kernel-flow run aborted because too many iterations were degenerate."""
