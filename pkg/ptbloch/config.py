import datetime
import enum
import math
import os
import tempfile

import psutil


def check_env(setting, default_value=None):
    """
    This function checks the default value and the environment variables in the correct order for setting
    our constants. Lower position overrides a higher position
        - default_value
        - environment variable
    """
    value_from_environment = os.environ.get(setting)
    if type(value_from_environment) is str:
        if value_from_environment.lower() == 'true':
            value_from_environment = True
        elif value_from_environment.lower() == 'false':
            value_from_environment = False

    if value_from_environment:
        set_value = value_from_environment
    elif default_value:
        set_value = default_value
    else:
        set_value = None

    return set_value


PTB_DEBUG = check_env('PTB_DEBUG', False)


def get_datetime_string():
    return datetime.datetime.now().strftime("%Y%m%d_%H%M%S")


DATETIME_STR = get_datetime_string()
CONFIGS_ROOT_DIR = os.path.join(os.path.split(os.path.abspath(os.path.dirname(__file__)))[0], "configs")

# The operator is always studied on a 2*pi period. Other periods are handled by rescaling x.
PERIOD = 2 * math.pi

# Integrator tolerances
DEFAULT_TOL = 1e-10
ROOT_TOL = 1e-12            # integration tolerance used inside root finders
MAX_STEPS = 10**6           # per period

# Root finding
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
BRANCH_RESIDUAL_TOL = 1e-9  # |Delta^2 - 4|
DEDUP_TOL = 1e-7
DOUBLE_POINT_TOL = 1e-6
DERIVATIVE_CUTOFF = 1e-3    # |Delta'| below this at a root of Delta^2 - 4 marks a double point
FD_REL_STEP = 1e-6

# Spectral locus tracing
TRACE_TOL = 1e-9
LOCUS_START_TOL = 1e-8
TRACE_INITIAL_STEP = 1e-2
TRACE_MIN_STEP = 1e-6
TRACE_MAX_STEP = 5e-2
TRACE_MAX_POINTS = 5000
TRACE_MAX_STALLS = 5

# Hill matrix cross validation
HILL_HALF_SIZE = 24

# Divisor
DIVISOR_SAMPLES = 512
SCALING_SAMPLES = 64
ELLIPSE_SAMPLES = 256
EPSILON_SCALINGS = (1.0, 0.5, 0.25)
DEGENERATE_PCA_RATIO = 1e-3
MIN_FIT_SAMPLES = 6

# Dubrovin flow
COLLISION_TOL = 1e-9
SHEET_TOL = 1e-10
MIN_BRANCH_SEPARATION = 1e-10

DEFAULT_N_MAX = 3
DEFAULT_RESULTS_DIR = os.path.join(tempfile.gettempdir(), "ptbloch_results")
DEFAULT_JOBS = psutil.cpu_count(logical=False) or 1


class EXIT_CODE(enum.IntEnum):
    SUCCESS = 0
    NUMERICAL_FAILURE = 1
    CONFIG_ERROR = 2
    INTERRUPTED = 130

    def __str__(self):
        return f"{self.name} ({self.value})"


class EXPERIMENT_TYPES(enum.Enum):
    discriminant = "discriminant"
    resonance = "resonance"
    divisor = "divisor"
    dubrovin = "dubrovin"
    locus = "locus"


class Verdict(enum.Enum):
    GAP = "Gap"
    DOUBLE_POINT_AT_FIRST_ORDER = "DoublePointAtFirstOrder"
    TRANSVERSAL_BAND = "TransversalBand"


class Multiplicity(enum.Enum):
    SIMPLE = "simple"
    DOUBLE = "double-within-tolerance"


class EndpointKind(enum.Enum):
    BRANCH_POINT = "branch_point"
    WINDOW_BOUNDARY = "window_boundary"
    CLOSED = "closed"
    POINT_BUDGET = "point_budget"


class Degeneracy(enum.Enum):
    NONE = "none"
    REAL_SEGMENT = "real_segment"
    IMAG_SEGMENT = "imag_segment"
