"""Constants used throughout pedsafe."""

# Hypergeometric series truncation
SERIES_REL_TOL = 1e-13
SERIES_MAX_TERMS = 200_000
STABILITY_WINDOW = 3
BOUNDARY_LIMIT = 0.999
CANCELLATION_LIMIT = 1e8

# Incomplete beta continued fraction
BETACF_MAX_ITER = 20_000
BETACF_EPS = 1e-15
FPMIN = 1e-300

# Quadrature and Monte Carlo
DEFAULT_GRID_POINTS = 4097
MIN_GRID_POINTS = 65
DEFAULT_MC_SAMPLES = 1_000_000
MIN_MC_SAMPLES = 10_000
MIN_PREDICTIVE_TRIALS = 1_000
CLOSED_FORM_NODES = 96
CLOSED_FORM_TOL = 1e-8
SEED_LIMIT = 2**64

# Design solvers
DEFAULT_N_CAP = 100_000
CANDIDATES_PER_WORKER = 4
MIN_FOLD_XTOL = 1e-7

# Win odds
DEFAULT_BOOTSTRAP_REPLICATES = 2000
BOOTSTRAP_LOWER_QUANTILE = 0.025
BOOTSTRAP_UPPER_QUANTILE = 0.975

# Developmental safety SD groups
BASELINE_EDGES = (float("-inf"), -3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5, float("inf"))
CHANGE_EDGES = (float("-inf"), -1.5, -0.5, 0.5, 1.5, float("inf"))

# Input table headers
SDS_COLUMNS = ("subject_id", "time_label", "sds_value")
DELTA_COLUMNS = ("delta",)
WIN_ODDS_FIXED_COLUMNS = ("arm", "subject_id")
CONTOUR_COLUMNS = ("n", "r", "value")

# Output
DEFAULT_CONFIG_FILENAME = "pedsafe.yaml"
ENV_PREFIX = "PEDSAFE_"
TOOL_NAME = "pedsafe"
