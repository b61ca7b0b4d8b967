"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ProvnetError`; most also derive from ``ValueError`` so callers that
only care about "bad input" can catch that.
"""


class ProvnetError(Exception):
    """Base class for all package errors."""


class EmptyInput(ProvnetError, ValueError):
    pass


class DuplicateRegion(ProvnetError, ValueError):
    def __init__(self, region_id):
        self.region_id = region_id
        super().__init__(f"duplicate region_id {region_id!r}")


class BadCoordinate(ProvnetError, ValueError):
    def __init__(self, row, detail=""):
        self.row = row
        msg = f"bad coordinate on row {row}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class MissingValue(ProvnetError, ValueError):
    def __init__(self, region_id, column):
        self.region_id = region_id
        self.column = column
        super().__init__(f"missing or non-finite value for region {region_id!r}, column {column!r}")


class UnknownRegion(ProvnetError, ValueError):
    def __init__(self, region_id):
        self.region_id = region_id
        super().__init__(f"region_id {region_id!r} not present in the region set")


class BadCounts(ProvnetError, ValueError):
    pass


class ZeroDenominator(ProvnetError, ValueError):
    def __init__(self, region_id):
        self.region_id = region_id
        super().__init__(f"total case count is zero for region {region_id!r}")


class ZeroVariance(ProvnetError, ValueError):
    def __init__(self, name=None):
        self.name = name
        super().__init__("zero variance" + (f" in {name!r}" if name else ""))


class TooFewObservations(ProvnetError, ValueError):
    pass


class KTooLarge(ProvnetError, ValueError):
    def __init__(self, k, n):
        self.k, self.n = k, n
        super().__init__(f"k={k} requires at least k+1 regions, got n={n}")


class DimensionMismatch(ProvnetError, ValueError):
    pass


class TooFewSimulations(ProvnetError, ValueError):
    def __init__(self, nsim, minimum=99):
        self.nsim = nsim
        super().__init__(f"nsim={nsim} is below the minimum of {minimum}")


class SingularFilter(ProvnetError, ArithmeticError):
    pass


class NameClash(ProvnetError, ValueError):
    pass


class RankDeficient(ProvnetError, ValueError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__("design matrix is rank deficient; involved columns: " + ", ".join(self.columns))


class BoundaryRho(ProvnetError, ArithmeticError):
    def __init__(self, rho, bounds):
        self.rho = rho
        super().__init__(f"rho estimate {rho:.6f} hit the search boundary {bounds}")


class NumericalFailure(ProvnetError, ArithmeticError):
    pass


class NoGeometry(ProvnetError, ValueError):
    def __init__(self, region_id):
        self.region_id = region_id
        super().__init__(f"no polygon geometry for region {region_id!r}")


class BadShape(ProvnetError, ValueError):
    pass


class ConfigError(ProvnetError, ValueError):
    pass


class IoError(ProvnetError, OSError):
    pass


class StageError(ProvnetError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        super().__init__(f"stage {stage!r} failed: {error}")
