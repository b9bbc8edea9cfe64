"""
Runtime Configuration
Environment-driven defaults and logging setup
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings:
    """Defaults read from the environment (or a local .env file)"""

    def __init__(self):
        self.default_seed = int(os.getenv("VNF_PSO_SEED", "0"))
        self.log_level = os.getenv("VNF_PSO_LOG_LEVEL", "INFO").upper()
        self.workers = max(1, int(os.getenv("VNF_PSO_WORKERS", "1")))
        self.results_dir = os.getenv("VNF_PSO_RESULTS_DIR", "results")


def get_settings() -> Settings:
    return Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Install the timestamped root handler once; later calls only adjust the level"""
    level_name = (level or get_settings().log_level).upper()
    root = logging.getLogger()
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(getattr(logging, level_name, logging.INFO))
