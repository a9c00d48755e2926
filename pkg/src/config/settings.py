import os


def _optional_float(name, default):
    raw = os.getenv(name, default)
    return float(raw) if raw else None


# ======================================================
# SIMULATION SETTINGS  (interchange dynamics)
# ======================================================
# Phase length is either given directly or derived as T = ln(N)^a.
# Leave SIM_PHASE_LENGTH empty to derive it from SIM_A_EXPONENT.
SIMULATION_SETTINGS = {
    "n":               int(os.getenv("SIM_N", "16")),
    "num_phases":      int(os.getenv("SIM_PHASES", "4")),
    "phase_length":    _optional_float("SIM_PHASE_LENGTH", "5.0"),
    "a_exponent":      float(os.getenv("SIM_A_EXPONENT", "8.5")),
    # owner_endpoint: a swap on (i, j) counts for both pointer owners and both
    # endpoints (rate 8 per node).  owner: only the two owners (rate 4).
    "count_mode":      os.getenv("SIM_COUNT_MODE", "owner_endpoint"),
    # random | identity | reverse
    "initial":         os.getenv("SIM_INITIAL", "random"),
    # rewiring threshold is this factor times tau
    "rewiring_threshold_factor": 16.0,
}

# ======================================================
# ISOPERIMETRIC PROFILE SETTINGS
# ======================================================
PROFILE_SETTINGS = {
    # Exact enumeration refuses graphs above this many nodes
    "enumeration_budget": int(os.getenv("PROFILE_BUDGET", "22")),
    # Subsets are scanned in blocks of 2**chunk_bits masks
    "chunk_bits":         int(os.getenv("PROFILE_CHUNK_BITS", "16")),
    "workers":            int(os.getenv("PROFILE_WORKERS", "1")),
}

# ======================================================
# SPECTRAL SETTINGS
# ======================================================
SPECTRAL_SETTINGS = {
    # Poisson tail mass dropped by the uniformization series
    "uniformization_tolerance": 1e-12,
    "mass_tolerance":           1e-10,
    "negativity_tolerance":     1e-12,
    # Slack allowed before an inequality counts as violated
    "violation_tolerance":      1e-9,
    "majorization_tolerance":   1e-8,
    "collapsed_majorization_tolerance": 1e-6,
    # collapsed majorization step is step_scale / max_degree
    "step_scale":               1e-3,
    # finite-difference check of the sorted-mass derivative
    "fd_step":                  1e-6,
    "fd_relative_tolerance":    1e-4,
    # below this magnitude the relative error is dominated by rounding
    "fd_min_derivative":        1e-3,
    # Dense linear algebra only up to this size
    "dense_limit":              2048,
}

# ======================================================
# PATH / CONGESTION SETTINGS
# ======================================================
PATH_SETTINGS = {
    "degree":                 4,
    # walks per source = ceil(factor * N ln N)
    "walks_per_source_factor": 5.0,
    # no node may be visited more than factor * N ln(N) Delta times
    "visit_threshold_factor": 9.0,
    "lazy":                   os.getenv("PATH_LAZY", "false").lower() == "true",
}

# ======================================================
# STATISTICAL ACCEPTANCE THRESHOLDS
# ======================================================
# Every Monte Carlo verdict in the package reads its constant from here.
STATISTICAL_THRESHOLDS = {
    "p_value_min":           0.001,   # chi-square uniformity
    "sigma_envelope":        3.0,     # Monte Carlo envelope, in standard errors
    "rate_tolerance":        0.10,    # mean modifications within 10% of 8T
    "min_replicas_per_cell": 20,      # chi-square needs n! * 20 replicas
    "max_uniformity_n":      5,
    "max_duality_n":         64,
    "tail_ratios":           (0.3, 0.5, 0.7),
}

# ======================================================
# RUNTIME SETTINGS
# ======================================================
RUNTIME_SETTINGS = {
    "output_directory":   os.getenv("POINTERMIX_OUT", "results"),
    "threads":            int(os.getenv("POINTERMIX_THREADS", "1")),
    "format":             os.getenv("POINTERMIX_FORMAT", "json"),
    # Replicas are simulated in fixed-size blocks, one RNG stream per block,
    # so results do not depend on the thread count.
    "replica_block_size": int(os.getenv("POINTERMIX_BLOCK", "50000")),
    # Monte Carlo replica count when a config leaves it unset; simulate defaults to one trajectory
    "replicas":           int(os.getenv("POINTERMIX_REPLICAS", "100")),
    # seeds per campaign when none are listed, counted up from --seed
    "campaign_seeds":     int(os.getenv("POINTERMIX_CAMPAIGN_SEEDS", "10")),
    "cache_profiles":     os.getenv("POINTERMIX_CACHE_PROFILES", "false").lower() == "true",
    "cache_directory":    os.getenv("POINTERMIX_CACHE_DIR", "data/cache/profiles"),
}
