# Corrector defaults
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 60

# 2**60 scaling stays finite for cloud radius <= 4 and linearly growing maps
MAX_SCALING_EXPONENT = 60

# Unit scalar grid size for homogeneity checks and theta fitting
DEFAULT_MU_GRID = 8

# Tolerances for well-formed values
UNIT_MODULUS_TOLERANCE = 1e-12
UNIT_NORM_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-12

# Denominators below ZERO_FLOOR count as zero; numerators above NUMERATOR_FLOOR do not
ZERO_FLOOR = 1e-300
NUMERATOR_FLOOR = 1e-12

# Scaling law slack: phi(args) <= 2L * phi(args / 2) * (1 + SCALING_SLACK)
SCALING_SLACK = 1e-9

# Bound certificates: ||f(x) - D(x)|| <= B(x) * (1 + BOUND_RTOL) + BOUND_ATOL
BOUND_RTOL = 1e-6
BOUND_ATOL = 1e-9

# Structure checks on corrected maps use factor * tolerance * (1 + radius) ** n
CHECK_TOLERANCE_FACTOR = 10.0

# Rate estimation needs at least this many successive-residual ratios
RATE_MIN_TAIL = 4
