import os
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(f"CACTUSPILE_{name}")
    return int(value) if value not in (None, "") else default


class Settings:
    # Tool metadata
    TOOL_NAME = "cactuspile"
    TOOL_VERSION = "1.0.0"
    # Bumped whenever a default below changes; echoed into every run manifest
    DEFAULTS_VERSION = "1"

    # Logging
    LOG_LEVEL = os.getenv("CACTUSPILE_LOG_LEVEL", "WARNING")

    # Worker pool and randomness
    WORKERS = _env_int("WORKERS", 1)
    SEED = _env_int("SEED", 20240601)

    # Graph sizes
    BALL_RADIUS = _env_int("BALL_RADIUS", 1)
    BRUTE_FORCE_MAX_VERTICES = _env_int("BRUTE_FORCE_MAX_VERTICES", 13)
    CLUSTER_MAX_CELLS = _env_int("CLUSTER_MAX_CELLS", 12)
    PHI_MAX_CELLS = _env_int("PHI_MAX_CELLS", 6)

    # Multi-wave witness search
    WITNESS_BUDGET = _env_int("WITNESS_BUDGET", 200000)
    WITNESS_EXHAUSTIVE_MAX_VERTICES = _env_int("WITNESS_EXHAUSTIVE_MAX_VERTICES", 13)

    # First-wave sampling
    SAMPLE_SIZE = _env_int("SAMPLE_SIZE", 20000)

    # Series and exponent fit
    EXACT_SERIES_MAX = _env_int("EXACT_SERIES_MAX", 2000)
    SCALED_SERIES_MAX = _env_int("SCALED_SERIES_MAX", 100000)
    SERIES_LENGTH = _env_int("SERIES_LENGTH", 10000)
    FIT_WINDOW_MIN = _env_int("FIT_WINDOW_MIN", 2000)
    FIT_WINDOW_MAX = _env_int("FIT_WINDOW_MAX", 10000)

    # Radical census
    STOPPER_DEPTH = _env_int("STOPPER_DEPTH", 12)

    # Output
    OUTPUT_DIR = os.getenv("CACTUSPILE_OUTPUT_DIR", "results")

    def as_dict(self) -> Dict[str, Any]:
        """Experiment defaults as a plain dict."""
        return {
            name: getattr(self, name)
            for name in dir(self)
            if name.isupper()
        }


settings = Settings()
