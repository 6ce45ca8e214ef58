"""Exception types shared across the toolkit."""


class BosskitError(Exception):
    """Base class for all toolkit errors."""


class OpenMeshError(BosskitError):
    """A closed mesh was required but boundary edges exist."""


class DegenerateTriangleError(BosskitError):
    """A triangle with near-zero area breaks the requested computation."""


class AsymmetricMeshError(BosskitError):
    """Mirror pairing residual exceeds the symmetry tolerance."""


class ParseError(BosskitError):
    """Malformed mesh or sidecar file.

    Carries the 1-based line number (text formats) or byte offset
    (binary formats) where parsing failed.
    """

    def __init__(self, message, *, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.offset = offset


class DimensionMismatchError(BosskitError):
    """Coefficient or basis dimensions are inconsistent."""


class NonPositiveScaleError(BosskitError):
    """Segment scales must be strictly positive."""


class RankDeficientError(BosskitError):
    """Too few candidate vertices to fit a regressor row."""


class InsufficientCandidatesError(BosskitError):
    """Candidate sampling produced too few usable vertices."""


class UntrainedPriorError(BosskitError):
    """A pose prior was used before being trained."""


class UntrainedMappingError(BosskitError):
    """The surface-to-joint mapping was used before being trained."""


class UntrainedRegressorError(BosskitError):
    """The metadata regressor was used before being trained."""


class NonFiniteObjectiveError(BosskitError):
    """The objective became non-finite; names the offending term."""

    def __init__(self, term, value):
        super().__init__(f"objective term '{term}' is non-finite ({value})")
        self.term = term


class TooFewLandmarksError(BosskitError):
    """Registration needs at least four landmarks."""


class MissingSegmentLabelsError(BosskitError):
    """Segment-wise registration needs per-vertex segment labels."""


class InsufficientDataError(BosskitError):
    """Not enough subjects or observations for the requested fit."""


class UnderdeterminedError(BosskitError):
    """Observed coordinates do not identify the latent coefficients."""


class InvalidSpecError(BosskitError):
    """Phantom specification parameters are outside documented ranges."""


class ConfigError(BosskitError):
    """Malformed pipeline configuration."""
