from resclim.linalg import LinalgError
from resclim.linalg import DimensionMismatchError
from resclim.linalg import DuplicateEntryError
from resclim.linalg import SingularSystemError
from resclim.linalg import UnsupportedLengthError
from resclim.linalg import PowerIterationNotConvergedError

from resclim.reservoir import ReservoirError
from resclim.reservoir import InvalidHyperparamsError
from resclim.reservoir import TooManyNonzerosError
from resclim.reservoir import DegenerateAdjacencyError
from resclim.reservoir import NonFiniteInputError
from resclim.reservoir import SeriesTooShortError

from resclim.regularization import RegularizationError
from resclim.regularization import InvalidNoiseStepsError
from resclim.regularization import TrainingTooShortError
from resclim.regularization import InvalidSubsetSizeError
from resclim.regularization import InvalidRegularizationConfigError
from resclim.regularization import FixedPointNotConvergedWarning

from resclim.training import TrainingError
from resclim.training import SingularTrainingSystemError
from resclim.training import ModelFormatError

from resclim.ks_dynamics import KSError
from resclim.ks_dynamics import NonFiniteStateError
from resclim.ks_dynamics import InvalidKSConfigError
from resclim.ks_dynamics import MissingTransformError
from resclim.ks_dynamics import NonPositiveLyapunovWarning

from resclim.metrics import MetricsError
from resclim.metrics import DegenerateNormalizerError
from resclim.metrics import SeriesShorterThanWindowError

from resclim.container import ContainerError
from resclim.container import BadMagicError
from resclim.container import UnsupportedVersionError
from resclim.container import TruncatedContainerError
from resclim.container import InvalidDestinationError
from resclim.container import ContainerFormatError

from resclim.harness.config import HarnessError
from resclim.harness.config import ConfigError
from resclim.harness.config import EmptySweepError
