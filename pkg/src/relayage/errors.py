"""Exception hierarchy shared by every module."""


class RelayAgeError(Exception):
    """Base class for all errors raised by relayage."""


class NonPositiveRate(RelayAgeError, ValueError):
    pass


class NonFiniteRate(RelayAgeError, ValueError):
    pass


class Unstable(RelayAgeError, ValueError):
    """The queue of stream 1 is not ergodic: mu1 <= lambda1 * (1 + s/w)."""


class NearDegenerateRoots(RelayAgeError, ArithmeticError):
    """The two sojourn-time exponents (nearly) coincide."""


class TruncationInsufficient(RelayAgeError, RuntimeError):
    pass


class SingularSystem(RelayAgeError, ArithmeticError):
    pass


class NotLumpable(RelayAgeError, ValueError):
    pass


class InvalidConfig(RelayAgeError, ValueError):
    pass


class NumericalFailure(RelayAgeError, RuntimeError):
    pass
