"""Exception types shared across the package."""


class WavelabError(ValueError):
    pass


class NonFiniteField(WavelabError):
    """A field contains NaN or infinite samples (the blow-up signal)."""


class NonHermitianSpectrum(WavelabError):
    pass


class InvalidSign(WavelabError):
    pass


class InvalidParams(WavelabError):
    pass


class InvalidIndexRange(WavelabError):
    pass


class DegenerateSample(WavelabError):
    pass
