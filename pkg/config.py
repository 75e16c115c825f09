"""
Configuration settings for the roommates-reduce toolkit.
"""
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Application settings
APP_TITLE = "roommates-reduce"
APP_DESCRIPTION = (
    "Stable roommates toolkit: canonical reduction, bipartite reducibility, "
    "exact and approximate minimum-weight stable matchings"
)
APP_VERSION = "0.2.0"

# Logging
LOG_LEVEL = os.getenv("SMP_LOG_LEVEL", "WARNING").upper()

# Brute-force oracle settings
ORACLE_MAX_AGENTS = int(os.getenv("SMP_ORACLE_MAX_AGENTS", "12"))
CROSS_CHECK_ORACLE = os.getenv("SMP_CROSS_CHECK_ORACLE", "0").lower() in ("1", "true", "yes")

# Enumeration output
ENUMERATE_DEFAULT_LIMIT = int(os.getenv("SMP_ENUMERATE_LIMIT", "100"))

# Process exit codes
EXIT_OK = 0
EXIT_NO_STABLE_MATCHING = 1
EXIT_PRECONDITION = 2
EXIT_USAGE = 3

# Report schema shipped with the package
SCHEMA_FILE = Path(__file__).resolve().parent / "schemas" / "run_report.schema.json"
