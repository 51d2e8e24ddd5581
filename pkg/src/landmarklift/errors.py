"""Exception hierarchy shared across the package.

Every error carries a short machine-parseable ``code`` used by the CLI to
emit a single-line ``ERROR:<code>: <message>`` diagnostic before exiting
nonzero.
"""


class LandmarkLiftError(Exception):
    """Base class for all package errors."""

    code = "E_GENERIC"


class DimensionMismatchError(LandmarkLiftError):
    """Array or layer dimensions do not line up."""

    code = "E_DIM"


class TopologyError(LandmarkLiftError):
    """Landmark count or ordering does not match the expected topology."""

    code = "E_TOPOLOGY"


class DegenerateInputError(LandmarkLiftError):
    """Input has zero variance or is otherwise geometrically degenerate."""

    code = "E_DEGENERATE"


class NonFiniteError(LandmarkLiftError):
    """A NaN or infinity appeared where finite values are required."""

    code = "E_NONFINITE"


class ConvergenceError(LandmarkLiftError):
    """An iterative solver failed to converge within its iteration cap."""

    code = "E_CONVERGENCE"


class ModelFormatError(LandmarkLiftError):
    """Weight file is malformed."""

    code = "E_MODEL_FORMAT"


class ModelVersionError(ModelFormatError):
    """Weight file declares an unsupported format version."""

    code = "E_MODEL_VERSION"


class ModelChecksumError(ModelFormatError):
    """Weight file checksum does not match its payload."""

    code = "E_MODEL_CHECKSUM"


class DatasetFormatError(LandmarkLiftError):
    """Dataset or manifest file is malformed."""

    code = "E_DATASET"


class DatasetVersionError(DatasetFormatError):
    """Dataset file declares an unsupported schema version."""

    code = "E_DATASET_VERSION"


class ConfigError(LandmarkLiftError):
    """Bad key, value, or missing file in a pipeline configuration."""

    code = "E_CONFIG"
