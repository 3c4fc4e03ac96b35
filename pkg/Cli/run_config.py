import os
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, model_validator

from log import Logger

logger = Logger("RunConfig").get_logger()

DEFAULT_ENV_FILE = "galinv.env"

# RunConfig field -> environment variable
ENV_KEYS = {
    "scheme": "GALINV_SCHEME",
    "smooth_window": "GALINV_SMOOTH_WINDOW",
    "smooth_degree": "GALINV_SMOOTH_DEGREE",
    "tol_a": "GALINV_TOL_A",
    "tol_b": "GALINV_TOL_B",
    "tol": "GALINV_TOL",
    "format": "GALINV_FORMAT",
    "seed": "GALINV_SEED",
    "shift_grid": "GALINV_SHIFT_GRID",
    "window_margin": "GALINV_WINDOW_MARGIN",
}


class RunConfig(BaseModel):
    """
    Settings of one CLI run.

    Attributes:
        scheme (str): Differentiation scheme, "central2" or "central4".
        smooth_window (int, optional): Odd Savitzky-Golay window; None disables smoothing.
        smooth_degree (int): Smoothing polynomial degree, at least 4.
        tol_a (float): Acceleration regularity threshold.
        tol_b (float): Torsion regularity threshold.
        tol (float): Pointwise equivalence tolerance.
        format (str): Output format, "json" (JSON lines) or "csv".
        seed (int): Seed of the generators.
        anchor (float, optional): Anchor time for transformation recovery.
        shift_grid (int, optional): Coarse time-shift grid size.
        window_margin (float): Time trimmed from both ends of the first trajectory before testing.
    """
    scheme: Literal["central2", "central4"] = "central4"
    smooth_window: Optional[int] = None
    smooth_degree: int = Field(default=4, ge=4)
    tol_a: float = Field(default=1e-9, gt=0)
    tol_b: float = Field(default=1e-9, gt=0)
    tol: float = Field(default=1e-6, gt=0)
    format: Literal["json", "csv"] = "json"
    seed: int = 0
    anchor: Optional[float] = None
    shift_grid: Optional[int] = Field(default=None, ge=3)
    window_margin: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def check_smoothing(self):
        if self.smooth_window is not None:
            if self.smooth_window % 2 == 0:
                raise ValueError(f"smooth_window must be odd, got {self.smooth_window}")
            if self.smooth_window < self.smooth_degree + 1:
                raise ValueError(
                    f"smooth_window must be at least smooth_degree + 1 = {self.smooth_degree + 1}, "
                    f"got {self.smooth_window}"
                )
        return self

    @classmethod
    def from_env(cls, env_file=DEFAULT_ENV_FILE, **overrides):
        """
        Builds a config from environment defaults and explicit overrides.

        Values already present in the environment win over the env file; overrides that are None
        are ignored so unset CLI flags keep the defaults.

        Args:
            env_file (str, optional): Dotenv file with defaults. Default is "galinv.env".
            **overrides: Field values from the command line.

        Returns:
            RunConfig: The validated config.

        Raises:
            pydantic.ValidationError: If a value is out of range.
        """
        if env_file and os.path.exists(env_file):
            load_dotenv(env_file, override=False)
            logger.debug("Loaded defaults from %s.", env_file)
        values = {}
        for name, key in ENV_KEYS.items():
            raw = os.getenv(key)
            if raw is not None and raw.strip() != "":
                values[name] = raw.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
