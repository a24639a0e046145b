"""Exception hierarchy shared by every module of the package."""


class DeepoBikeError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class NotStable(DeepoBikeError):
    """A matrix that must be Schur stable has spectral radius >= 1."""


class NonSymmetric(DeepoBikeError):
    """A matrix required to be symmetric is not."""


class RankDeficient(DeepoBikeError):
    """Data matrix lacks full row rank (no persistency of excitation)."""

    exit_code = 3


class PeLost(RankDeficient):
    """Collected data failed the excitation rank check."""


class IllConditioned(DeepoBikeError):
    """Covariance inverse is numerically unreliable."""


class Infeasible(DeepoBikeError):
    """The semidefinite program for the initial policy has no solution."""

    exit_code = 4


class NotStabilizing(DeepoBikeError):
    """A synthesized policy failed its closed-loop stability certificate."""

    exit_code = 4


class Singularity(DeepoBikeError):
    """State too close to a tangent singularity of the bicycle model."""

    exit_code = 2


class Fallen(DeepoBikeError):
    """The bicycle lean angle left the admissible range."""

    exit_code = 2


class ConfigError(DeepoBikeError):
    exit_code = 5


class IoError(DeepoBikeError):
    """Report or artifact files could not be written or read."""

    exit_code = 5
