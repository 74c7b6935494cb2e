"""Exception hierarchy shared by every module."""


class TsqError(Exception):
    """Base class for all package errors."""


class NonPositiveOmega(TsqError, ValueError):
    pass


class DriftNotEvaluable(TsqError, ValueError):
    pass


class NonPositivePrice(TsqError, ValueError):
    pass


class NonPositiveTau(TsqError, ValueError):
    pass


class HypothesisAViolated(TsqError, ValueError):
    """The dispersion drift does not admit a normalizable stationary density."""


class QuadratureNonConvergence(TsqError, ArithmeticError):
    pass


class StepSizeUnderflow(TsqError, ArithmeticError):
    pass


class GridTooCoarse(TsqError, ArithmeticError):
    pass


class NegativeVariance(TsqError, ValueError):
    pass


class OutOfGrid(TsqError, ValueError):
    pass


class DomainMismatch(TsqError, ValueError):
    pass


class NonPolynomialDrift(TsqError, TypeError):
    pass


class SeedStreamExhausted(TsqError, RuntimeError):
    pass
