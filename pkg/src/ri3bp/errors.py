"""Exception hierarchy. Every error carries a stable ``code`` used by the CLI."""


class RI3BPError(Exception):
    code = "ERROR"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details


class DomainError(RI3BPError, ValueError):
    code = "DOMAIN"


class SingularityError(RI3BPError):
    code = "SINGULARITY"


class StepUnderflow(RI3BPError):
    code = "STEP_UNDERFLOW"


class RadiusCollapse(RI3BPError):
    code = "R_COLLAPSE"


class HorizonTooShort(RI3BPError):
    code = "HORIZON_TOO_SHORT"


class NoBracket(RI3BPError):
    code = "NO_BRACKET"


class MaxBisections(RI3BPError):
    code = "MAX_BISECTIONS"


class NoReturn(RI3BPError):
    code = "NO_RETURN"


class WindowTooSmall(RI3BPError):
    code = "WINDOW_TOO_SMALL"


class NonpositiveRadius(RI3BPError, ValueError):
    code = "NONPOSITIVE_RADIUS"


class BoundaryOutOfTable(RI3BPError):
    code = "BOUNDARY_OUT_OF_TABLE"


class NoSignChange(RI3BPError):
    code = "NO_SIGN_CHANGE"


class MatchFail(RI3BPError):
    code = "MATCH_FAIL"


class NonConverged(RI3BPError):
    code = "NONCONVERGED"


class SingularJacobian(RI3BPError):
    code = "SINGULAR_JACOBIAN"


class Stalled(RI3BPError):
    code = "STALLED"


class NoSolutionInBand(RI3BPError):
    code = "NO_SOLUTION_IN_BAND"


class ArcLeavesFarRegion(RI3BPError):
    code = "ARC_LEAVES_FAR_REGION"


class NotHyperbolic(RI3BPError):
    code = "NOT_HYPERBOLIC"


class ShadowingFail(RI3BPError):
    code = "SHADOWING_FAIL"
