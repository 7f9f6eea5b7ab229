"""Exception types raised across the package."""


class CenterfieldError(ValueError):
    """Base class for domain errors."""


class ZeroInverse(CenterfieldError, ZeroDivisionError):
    pass


class SingularMatrix(CenterfieldError):
    pass


class NotAZero(CenterfieldError):
    pass


class NotSymmetric(CenterfieldError):
    pass


class NotSymmetricZero(CenterfieldError):
    pass


class DegenerateQuadric(CenterfieldError):
    pass


class NonSquareDiscriminant(CenterfieldError):
    pass


class ModulusTooSmall(CenterfieldError):
    pass


class NotOnVariety(CenterfieldError):
    pass


class OutOfRange(CenterfieldError):
    pass


class IncompatibleManifests(CenterfieldError):
    pass


class InvalidRecord(CenterfieldError):
    pass
