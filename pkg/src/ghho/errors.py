"""Exception hierarchy shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs outside its contract."""


class DataError(RuntimeError):
    """Input data could not be read or is unusable."""


class DegenerateHistogram(DataError):
    """A histogram has a single occupied bin, so no threshold separates it."""
