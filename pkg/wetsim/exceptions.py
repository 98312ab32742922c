"""Exceptions and warnings that can occur in samplers, integrators and verdicts"""

from typing import Optional

from wetsim.log import Loggers

logger = Loggers.get_named_logger("WETSIM_ERRORS")

# exit codes the CLI maps exceptions to
EXIT_TEST_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class WettingException(Exception):
    """
    Base exception of the toolkit. Carries a human readable detail and the process exit code
    the command line maps it to.
    """
    exit_code: int = EXIT_TEST_FAILURE

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        """Exception initializer"""
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class GridMismatchException(WettingException):
    """Exception that occurs when a resolution is not a multiple of the lattice size, or grids differ"""

    def __init__(self, resolution: int, n: int):
        """Exception initializer"""
        super().__init__(f"Grid mismatch: resolution {resolution} is not a positive multiple of {n}")


class InvalidFieldException(WettingException):
    """Exception that occurs when a lattice field violates nonnegativity or size constraints"""

    def __init__(self, detail: str):
        """Exception initializer"""
        super().__init__(f"Invalid lattice field: {detail}")


class UnsupportedPotentialException(WettingException):
    """Exception that occurs when an operation needs a smooth strip potential but got the indicator"""

    def __init__(self, operation: str):
        """Exception initializer"""
        super().__init__(
            f"{operation} needs a continuous (smooth-bump) strip density; "
            f"the indicator strip is supported only through the delta-pinning sampler"
        )


class UnsupportedLawException(WettingException):
    """Exception that occurs when a reference law or site count is outside the supported range"""

    def __init__(self, detail: str):
        """Exception initializer"""
        super().__init__(f"Unsupported: {detail}")


class SingularInputException(WettingException):
    """Exception that occurs when a singular drift or weight is evaluated at zero"""

    def __init__(self, detail: str):
        """Exception initializer"""
        super().__init__(f"Singular input: {detail}")


class StabilityException(WettingException):
    """Exception that occurs when an explicit scheme is asked to run outside its stability region"""

    def __init__(self, dt: float, limit: float):
        """Exception initializer"""
        super().__init__(f"Refusing step: dt={dt:.6g} exceeds stability limit {limit:.6g}")


class InsufficientSamplesException(WettingException):
    """Exception that occurs when an estimator has too few (effective) samples to produce a verdict"""

    def __init__(self, detail: str):
        """Exception initializer"""
        super().__init__(f"Insufficient samples: {detail}")


class ConfigurationException(WettingException):
    """Exception that occurs when a run configuration is malformed"""
    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, detail: str):
        """Exception initializer"""
        super().__init__(f"Configuration error: {detail}")


class UnknownConfigKeyException(ConfigurationException):
    """Exception that occurs when a run configuration names a key the command does not document"""

    def __init__(self, key: str, command: str):
        """Exception initializer"""
        super().__init__(f"unknown key '{key}' for command '{command}'")
        self.key = key


class StabilityWarning(UserWarning):
    """Drift step is large compared with the noise scale"""


class BiasWarning(UserWarning):
    """Kernel width or step size is outside the regime where discretization bias is controlled"""


class UnreliableEstimateWarning(UserWarning):
    """Effective sample size or replica count is below the reliability floor"""


class NonEquilibriumWarning(UserWarning):
    """Dynamics started away from the stationary law"""
