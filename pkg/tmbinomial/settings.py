from __future__ import annotations

import os


PREFIX_GROWTH_K = int(os.getenv("TMB_PREFIX_K", "40"))
MAX_DOUBLINGS = int(os.getenv("TMB_MAX_DOUBLINGS", "8"))
BUDGET_MB = int(os.getenv("TMB_BUDGET_MB", "64"))
JOBS = os.getenv("TMB_JOBS", "1")
STRATEGY = os.getenv("TMB_STRATEGY", "cover")
LOG_LEVEL = os.getenv("TMB_LOG_LEVEL", "WARNING")

# Binomial coefficients must stay strictly below this bound (signed 128-bit range).
BINOMIAL_LIMIT = 1 << 127
MAX_ALPHABET = 255
