"""Exception types shared across the solver."""


class FracflowError(Exception):
    pass


class ConfigError(FracflowError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


class MlConvergenceError(FracflowError):
    """Neither series nor asymptotic regime of E_{alpha,mu} attains its tolerance."""


class NonContractionError(FracflowError):
    """tau^alpha * B >= 1: the per-step fixed point is not a contraction."""


class FixedPointError(FracflowError):
    """Per-step fixed-point iteration failed to converge within the cap."""

    def __init__(self, msg, step=None):
        super().__init__(msg)
        self.step = step


class QuadratureError(FracflowError):
    """An element-pair integral failed its tolerance."""


class NonNestedGridError(FracflowError):
    """Reference grid does not nest the coarse grid in space or time."""


class NoPlateauError(FracflowError):
    """Fewer than the required flat nodes on one sign; carries what was found."""

    def __init__(self, msg, plateau_pos=None, plateau_neg=None):
        super().__init__(msg)
        self.plateau_pos = plateau_pos
        self.plateau_neg = plateau_neg
