"""Exception hierarchy shared by all dcsplit modules."""


class DCSplitError(Exception):
    """Base class for every error raised by dcsplit."""


class GeometryError(DCSplitError, ValueError):
    pass


class DuplicatePoints(GeometryError):
    pass


class TooFewPoints(GeometryError):
    pass


class BadRadius(GeometryError):
    pass


class NoIntersection(GeometryError):
    pass


class EmptyInput(GeometryError):
    pass


class NonConvexDomain(GeometryError):
    pass


class PWLError(DCSplitError, ValueError):
    pass


class SectorTooWide(PWLError):
    pass


class SingularSector(PWLError):
    pass


class NonConforming(PWLError):
    pass


class DegenerateTriangle(PWLError):
    pass


class OutOfDomain(DCSplitError, ValueError):
    pass


class NotConvexEdge(DCSplitError, ValueError):
    pass


class ConvexityCertificateFailed(DCSplitError, RuntimeError):
    pass


class NotConvexInput(DCSplitError, ValueError):
    pass


class OriginOutside(DCSplitError, ValueError):
    pass


class NotPositiveOnCircle(DCSplitError, ValueError):
    pass


class TooFewLevels(DCSplitError, ValueError):
    pass


class EmptyFamily(DCSplitError, ValueError):
    pass


class UnsupportedDimension(DCSplitError, ValueError):
    pass


class GridMismatch(DCSplitError, ValueError):
    pass


class ConfigInvalid(DCSplitError, ValueError):
    pass


class UnknownBuiltin(ConfigInvalid):
    pass


class ParseError(ConfigInvalid):
    pass


class SchemaError(ConfigInvalid):
    pass
