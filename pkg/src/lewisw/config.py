"""
Copyright (C) 2025 Narendra S

This file is a part of the Lewisw project

Lewisw is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

Lewisw is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with Lewisw.  If not, see <https://www.gnu.org/licenses/>.
"""

from __future__ import annotations

import os
from enum import StrEnum
from pathlib import Path
from typing import Literal

from platformdirs import user_config_path
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict, TomlConfigSettingsSource

CONFIG_ENV = "LEWISW_CONFIG_FILE"


class Variant(StrEnum):
    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"
    ONE_STEP = "one_step"
    COHEN_PENG = "cohen_peng"

    @classmethod
    def parse(cls, value: str) -> Variant:
        """Accepts the CLI spelling (``one-step``) as well as the enum value."""
        return cls(value.replace("-", "_"))


class SolverSettings(BaseModel):
    """Engineering knobs of the solver. None of these change what is computed, only how hard it tries."""

    iteration_constant: float = Field(default=40.0, gt=0)
    """K in T_total = ceil(K * max(1/alpha, alpha) * log(m / eps_tilde))."""

    cap_factor: float = Field(default=10.0, ge=1)
    """Safety multiple applied to every proved iteration bound before it becomes a hard cap."""

    max_iters_scale: float = Field(default=1.0, gt=0)
    """Extra multiplier on T_total, exposed as --max-iters-scale."""

    iteration_limit: int = Field(default=10_000_000, gt=0)
    """Largest T_total a run may be scheduled with; bigger budgets are refused up front."""

    factorization: Literal["cholesky", "qr"] = "cholesky"
    """How A^T W A is factored; qr works on W^(1/2) A and suits ill-conditioned inputs."""

    refactor_period: int | None = Field(default=None, gt=0)
    """Rank-one updates between full refactorizations; None means m."""

    sm_tolerance: float = Field(default=1e-8, gt=0)
    """Sherman-Morrison denominators below this trigger a refactorization."""

    eps_tilde_form: Literal["strict", "relaxed"] = "strict"
    """strict: alpha^8 eps^4 / (25 m (sqrt(n) + alpha)(alpha + 1/alpha))^4; relaxed: alpha^4 eps^4 / (2 m ...)^4."""

    eps_tilde: float | None = Field(default=None, gt=0)
    """Explicit objective tolerance, overrides eps_tilde_form."""

    stop_tolerance: float | None = Field(default=None, gt=0)
    """Optimality residual that ends a run early; None means sqrt(eps_tilde) / 4."""

    certify_fraction: float = Field(default=0.1, gt=0, le=1)
    """A run also stops once the extracted weights have Lewis residual <= certify_fraction * eps * min(1, alpha)."""

    workers: int = Field(default=1, ge=1)
    """Threads used for row-parallel leverage scores."""


class Settings(BaseSettings):
    """Settings for lewisw."""

    solver: SolverSettings = Field(default_factory=SolverSettings)
    """Solver tuning."""

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    """Level of the rich log handler on standard error."""

    containment_trials: int = Field(default=100, ge=0)
    """Random directions used by the ellipsoid containment check in reports."""

    config_file: Path = Field(default_factory=lambda: user_config_path("lewisw") / "config.toml")
    """The path to the lewisw configuration file."""

    @field_validator("config_file")
    @classmethod
    def validate_path(cls, path: Path) -> Path:
        """Ensures the configuration path is absolute."""
        if not path.is_absolute():
            raise ValueError(f"Path {path} must be absolute.")
        return path

    model_config = SettingsConfigDict(
        env_prefix="LEWISW_",
        env_nested_delimiter=":",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="forbid",
        validate_assignment=True,
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        config_from_env = os.getenv(CONFIG_ENV)
        default_sources = (
            init_settings,
            env_settings,
            dotenv_settings,
            file_secret_settings,
        )

        if config_from_env:
            conf_file = Path(config_from_env).resolve()
        else:
            return default_sources

        if conf_file.exists():
            return (
                init_settings,
                TomlConfigSettingsSource(settings_cls, conf_file),
                env_settings,
                dotenv_settings,
                file_secret_settings,
            )
        return default_sources
