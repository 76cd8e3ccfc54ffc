import os

from dotenv import load_dotenv

load_dotenv()

# --- Configuration Settings ---

# Randomized checks
DEFAULT_SEED = int(os.getenv("HARNACK_SEED", "0"))
DEFAULT_TRIALS = int(os.getenv("HARNACK_TRIALS", "100"))
DEFAULT_TOLERANCE = float(os.getenv("HARNACK_TOLERANCE", "1e-10"))
DEFAULT_DIMENSIONS = tuple(
    int(n) for n in os.getenv("HARNACK_DIMENSIONS", "3,4,5").split(",") if n.strip()
)

# Shrinking-sphere finite differences
DEFAULT_FD_STEP = float(os.getenv("HARNACK_FD_STEP", "1e-4"))
DEFAULT_FD_TOLERANCE = float(os.getenv("HARNACK_FD_TOLERANCE", "1e-6"))

# Linear algebra thresholds
SINGULAR_THRESHOLD = float(os.getenv("HARNACK_SINGULAR_THRESHOLD", "1e-10"))
CONSTRAINT_TOLERANCE = float(os.getenv("HARNACK_CONSTRAINT_TOLERANCE", "1e-12"))

# Rewriting
MAX_REWRITE_PASSES = int(os.getenv("HARNACK_MAX_REWRITE_PASSES", "64"))
