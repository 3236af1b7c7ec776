"""Exception and warning types shared across the package."""


class RuncountError(ValueError):
    """Base class for data and validation errors (CLI exit code 2)."""


class InsufficientSample(RuncountError):
    pass


class DegenerateSample(RuncountError):
    pass


class ProviderExhausted(RuncountError):
    pass


class EmptyConfiguration(RuncountError):
    pass


class SingleClassError(RuncountError):
    pass


class ModelMismatch(RuncountError):
    pass


class RuncountWarning(UserWarning):
    pass
