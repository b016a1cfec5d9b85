"""Exception hierarchy shared by every hlab module."""


class HlabError(Exception):
    """Base class; the CLI maps these to a nonzero exit code and a reason tag."""

    reason = "error"


class BadReduction(HlabError):
    reason = "bad_reduction"


class HasseBoundViolation(HlabError):
    reason = "hasse_bound_violation"


class DomainError(HlabError):
    reason = "domain_error"


class MissingPrime(HlabError):
    reason = "missing_prime"


class ConfigError(HlabError):
    reason = "config_error"


class TailTooLarge(HlabError):
    reason = "tail_too_large"


class DivergentCuspIntegral(HlabError):
    reason = "divergent_cusp_integral"


class MethodUnavailable(HlabError):
    reason = "method_unavailable"


class WrongSign(HlabError):
    reason = "wrong_sign"


class InconsistentSamples(HlabError):
    reason = "inconsistent_samples"


class DegenerateInput(HlabError):
    reason = "degenerate_input"


class NotConverged(HlabError):
    reason = "not_converged"


class NearSingular(HlabError):
    reason = "near_singular"


class SingularModel(HlabError):
    reason = "singular_model"


class NotFundamental(HlabError):
    reason = "not_fundamental"


class OutsideConvergenceRegion(HlabError):
    reason = "outside_convergence_region"


class PreconditionFailed(HlabError):
    reason = "precondition_failed"


class MeshUnusable(HlabError):
    reason = "mesh_unusable"


class PathSyntaxError(HlabError):
    reason = "path_syntax_error"
