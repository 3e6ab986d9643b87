"""Exception types shared across the package."""


class HetpartError(Exception):
    pass


class ModelUndefinedError(HetpartError, ValueError):
    """A cost model cannot be evaluated (e.g. an empty table)."""


class DomainError(HetpartError, ValueError):
    pass


class ContractError(HetpartError, ValueError):
    """Caller violated a documented precondition."""


class TheoremInapplicableError(HetpartError, ValueError):
    """The closed form requires a multiplicative cost function."""


class AsymptoticRegimeError(HetpartError, ValueError):
    """N is too small for the asymptotic n log n approximation; use exact_analytic."""


class RecordCapExceeded(HetpartError, RuntimeError):
    pass
