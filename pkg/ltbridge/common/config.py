import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("LTBRIDGE_LOG_LEVEL", "INFO")
LOG_JSON = os.getenv("LTBRIDGE_LOG_JSON", "false").lower() == "true"

# Quadrature
QUAD_TOL = float(os.getenv("LTBRIDGE_QUAD_TOL", 1e-10))
MAX_HALVINGS = int(os.getenv("LTBRIDGE_MAX_HALVINGS", 60))
SCALE_CHECK_TOL = float(os.getenv("LTBRIDGE_SCALE_CHECK_TOL", 1e-8))

# Simulation defaults
N_PATHS = int(os.getenv("LTBRIDGE_N_PATHS", 10_000))
DT = float(os.getenv("LTBRIDGE_DT", 1e-4))
BAND_FACTOR = float(os.getenv("LTBRIDGE_BAND_FACTOR", 5.0))
ESCAPE_LEVEL = float(os.getenv("LTBRIDGE_ESCAPE_LEVEL", 1e3))
EXIT_ETA = float(os.getenv("LTBRIDGE_EXIT_ETA", 1e-3))
SNAP_TOL = float(os.getenv("LTBRIDGE_SNAP_TOL", 1e-12))
NOISE_CHUNK = int(os.getenv("LTBRIDGE_NOISE_CHUNK", 512))
WORKERS = int(os.getenv("LTBRIDGE_WORKERS", 1))

# Bridge
HORIZON_RETRIES = int(os.getenv("LTBRIDGE_HORIZON_RETRIES", 3))
ENTRANCE_SCALE_DEPTH = float(os.getenv("LTBRIDGE_ENTRANCE_SCALE_DEPTH", 1e6))
REENTRY_BUDGET = float(os.getenv("LTBRIDGE_REENTRY_BUDGET", 0.01))

# Statistics
ALPHA = float(os.getenv("LTBRIDGE_ALPHA", 0.01))
SEED_VOTES = int(os.getenv("LTBRIDGE_SEED_VOTES", 3))
SEED_VOTES_REQUIRED = int(os.getenv("LTBRIDGE_SEED_VOTES_REQUIRED", 2))
