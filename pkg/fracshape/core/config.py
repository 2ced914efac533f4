# fracshape/core/config.py
import os
from pathlib import Path

from dotenv import load_dotenv

from fracshape.core.errors import ParameterError

# load .env before reading any variable
load_dotenv()


class Settings:
    LOG_LEVEL = os.getenv("FRACSHAPE_LOG_LEVEL", "INFO")
    OUTPUT_DIR = Path(os.getenv("FRACSHAPE_OUTPUT_DIR", "./runs"))
    WORKERS = int(os.getenv("FRACSHAPE_WORKERS", "2"))

    # dense LAPACK paths below these sizes
    DENSE_LIMIT = int(os.getenv("FRACSHAPE_DENSE_LIMIT", "1024"))
    ASSEMBLY_LIMIT = int(os.getenv("FRACSHAPE_ASSEMBLY_LIMIT", "4096"))

    KERNEL_RULE = os.getenv("FRACSHAPE_KERNEL_RULE", "corrected")

    EIGEN_SEED = 0x5EED

    TOLERANCES = {
        "cg_rtol": 1e-12,
        "eig_rtol": 1e-8,
        "power_rtol": 1e-8,
        "capacity_rtol": 1e-10,
        "capacity_window": 100,
        "capacity_max_iter": 200_000,
        "quad_rtol": 1e-8,
        "taylor_err": 1e-10,
        "plateau_slope": 0.02,
        "gamma_cauchy": 0.02,
        "resolvent_gap_ratio": 0.05,
        "debris_fraction": 0.02,
        "volume_floor_fraction": 0.1,
    }

    def tolerances(self, overrides: dict | None = None) -> dict:
        merged = dict(self.TOLERANCES)
        if overrides:
            unknown = sorted(set(overrides) - set(merged))
            if unknown:
                raise ParameterError("tolerances", f"unknown keys: {', '.join(unknown)}")
            merged.update(overrides)
        return merged

    def tol(self, key: str) -> float:
        return self.TOLERANCES[key]


settings = Settings()
