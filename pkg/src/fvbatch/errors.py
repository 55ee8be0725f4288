"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An argument or index broke a documented precondition."""


class NonPhysicalStateError(RuntimeError):
    """A conserved state left the admissible set (rho <= 0 or p < 0).

    Carries enough context to locate the offending volume.
    """

    def __init__(self, message, patch=None, volume=None, step=None):
        parts = [message]
        if step is not None:
            parts.append(f"step={step}")
        if patch is not None:
            parts.append(f"patch={patch}")
        if volume is not None:
            parts.append(f"volume={volume}")
        super().__init__(", ".join(str(p) for p in parts))
        self.patch = patch
        self.volume = volume
        self.step = step


class EmptyReductionError(ValueError):
    """Reduction requested over an empty index space."""


class ChecksumMismatchError(RuntimeError):
    """Benchmark variants disagreed on identical inputs; timing would be meaningless."""
