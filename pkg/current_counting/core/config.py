"""
Settings for the current counting framework.

Numerical tolerances, quadrature and contour parameters, oracle settings and
logging are grouped into pydantic models and loaded from JSON or YAML files.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigurationError


class ToleranceSettings(BaseModel):
    """Numerical tolerances shared by all modules."""
    model_config = ConfigDict(extra="forbid")

    root: float = Field(1e-9, gt=0, description="Root clustering / gap tolerance (relative)")
    assume: float = Field(1e-9, gt=0, description="Assumption checks (eigenvalue gaps, A4 flags)")
    quad: float = Field(1e-10, gt=0, description="Quadrature convergence target")
    residual: float = Field(1e-8, gt=0, description="Residual contract for zeroes and exceptional points")
    coefficient_trim: float = Field(1e-11, gt=0, description="Relative size below which a P+- coefficient is zero")
    detailed_balance: float = Field(1e-10, gt=0, description="Relative detailed balance tolerance")


class QuadratureSettings(BaseModel):
    """Quadrature rules used by the probability methods."""
    model_config = ConfigDict(extra="forbid")

    max_nodes: int = Field(2 ** 15, ge=64, description="Node cap for node doubling")
    tanh_sinh_tmax: float = Field(4.0, gt=1.0, description="Truncation of the tanh-sinh abscissa range")
    gauss_order: int = Field(20, ge=4, description="Gauss-Legendre order on path pieces")
    min_contour_nodes: int = Field(256, ge=16, description="Initial trapezoid node count")


class ContourSettings(BaseModel):
    """Geometry parameters for contours and integration paths."""
    model_config = ConfigDict(extra="forbid")

    margin_fraction: float = Field(0.08, gt=0, description="Contour margin relative to the cut extent")
    min_margin: float = Field(0.02, gt=0, description="Lower bound on the contour margin")
    clearance_fraction: float = Field(0.3, gt=0, lt=0.5,
                                      description="Path clearance relative to the closest obstacle pair")
    max_pairings: int = Field(20000, ge=1, description="Cap on the non-crossing cut pairings searched")
    loop_modes: int = Field(127, ge=8, description="Fourier modes kept on a per-cut contour loop")
    repair_attempts: int = Field(24, ge=1, description="Cut re-routing attempts for the sheet convention")


class OracleConfig(BaseModel):
    """Settings of the brute-force oracles."""
    model_config = ConfigDict(extra="forbid")

    n_theta: int = Field(256, description="Fourier nodes on the circle |g| = r")
    radius: float = Field(1.0, gt=0, description="Radius of the inversion circle")
    n_samples: int = Field(100_000, ge=1, description="Monte Carlo trajectories")
    seed: int = Field(20240607, ge=0, lt=2 ** 64, description="Root seed of the sampler")
    chunk_size: int = Field(4096, ge=1, description="Trajectories sharing one random stream")

    @field_validator('n_theta')
    @classmethod
    def validate_n_theta(cls, v: int) -> int:
        if v < 64 or v & (v - 1):
            raise ValueError("n_theta must be a power of two >= 64")
        return v


class LoggingSettings(BaseModel):
    """Logging configuration settings."""
    model_config = ConfigDict(extra="forbid")

    level: str = Field("WARNING", description="Logging level")
    format: str = Field("%(asctime)s - %(name)s - %(levelname)s - %(message)s", description="Log format")
    console: bool = Field(True, description="Log to the console")
    file_path: Optional[str] = Field(None, description="Optional log file")

    @field_validator('level')
    @classmethod
    def validate_level(cls, v: str) -> str:
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f"Logging level must be one of: {valid_levels}")
        return v.upper()


class Settings(BaseModel):
    """Root settings model."""
    model_config = ConfigDict(extra="forbid")

    version: str = Field("1.0.0", description="Settings format version")
    tolerances: ToleranceSettings = Field(default_factory=ToleranceSettings)
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)
    contour: ContourSettings = Field(default_factory=ContourSettings)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    threads: int = Field(1, ge=1, description="Worker cap for parallel sections")


def _deep_update(base: Dict[str, Any], update: Dict[str, Any]) -> None:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


class SettingsManager:
    """Loads, overrides and saves `Settings`."""

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        self.config_path = Path(config_path) if config_path else None
        self.settings = self._load_settings()

    def _load_settings(self) -> Settings:
        """Load settings from file or create defaults."""
        if self.config_path is None:
            return Settings()
        if not self.config_path.exists():
            raise ConfigurationError(f"Configuration file not found: {self.config_path}")
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                if self.config_path.suffix.lower() in ['.yml', '.yaml']:
                    data = yaml.safe_load(f) or {}
                else:
                    data = json.load(f)
            return Settings(**data)
        except (OSError, ValueError, yaml.YAMLError, ValidationError) as e:
            raise ConfigurationError(f"Failed to load configuration from {self.config_path}: {e}")

    def update(self, overrides: Dict[str, Any]) -> Settings:
        """Deep-merge `overrides` into the current settings and re-validate."""
        data = self.settings.model_dump()
        _deep_update(data, overrides)
        try:
            self.settings = Settings(**data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid settings override: {e}")
        return self.settings

    def save(self, output_path: Optional[Union[str, Path]] = None) -> None:
        """Save current settings to JSON or YAML based on the extension."""
        save_path = Path(output_path) if output_path else self.config_path
        if not save_path:
            raise ConfigurationError("No output path specified for saving configuration")

        data = self.settings.model_dump()
        with open(save_path, 'w', encoding='utf-8') as f:
            if save_path.suffix.lower() in ['.yml', '.yaml']:
                yaml.safe_dump(data, f, default_flow_style=False, indent=2)
            else:
                json.dump(data, f, indent=2)

    @property
    def logging_config(self) -> LoggingSettings:
        """Get logging configuration."""
        return self.settings.logging

    @property
    def tolerances(self) -> ToleranceSettings:
        return self.settings.tolerances
