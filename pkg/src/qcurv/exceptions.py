"""Exception hierarchy for qcurv."""


class QcurvError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedOrder(QcurvError, ValueError):
    pass


class DimensionTooLow(QcurvError, ValueError):
    pass


class EmptyProduct(QcurvError, ValueError):
    pass


class BadInput(QcurvError, ValueError):
    pass


class NonPositiveConformalFactor(QcurvError, ValueError):
    """A conformal factor is zero or negative somewhere on the grid."""


class UnderResolved(QcurvError, ValueError):
    """Too few quadrature nodes for the requested truncation degree."""


class DegenerateOperator(QcurvError, ArithmeticError):
    """An operator eigenvalue is below the invertibility threshold."""


class NonPositiveOperator(QcurvError, ValueError):
    pass


class ShootingFailure(QcurvError, RuntimeError):
    pass


class EmptyWindow(QcurvError, ValueError):
    pass


class PointOutsideChart(QcurvError, ValueError):
    pass


class NoAdmissiblePairs(QcurvError, ValueError):
    pass


class InsideUnitBall(QcurvError, ValueError):
    pass


class StencilOutOfRegion(QcurvError, ValueError):
    pass


class NotContracting(QcurvError, RuntimeError):
    pass


class BallExit(QcurvError, RuntimeError):
    pass
