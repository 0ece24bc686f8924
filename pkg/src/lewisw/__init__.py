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

from .config import Settings, SolverSettings, Variant
from .errors import LewisError
from .linalg import WeightVector, leverage_scores
from .objective import AlphaParams
from .solver import SolverReport, cohen_peng_fixed_point, lewis_weights, schedule, solve
from .verify import ellipsoid_containment, lewis_residual, oracle_solve, suboptimality_certificate

__all__ = [
    "AlphaParams",
    "LewisError",
    "Settings",
    "SolverReport",
    "SolverSettings",
    "Variant",
    "WeightVector",
    "cohen_peng_fixed_point",
    "ellipsoid_containment",
    "leverage_scores",
    "lewis_residual",
    "lewis_weights",
    "oracle_solve",
    "schedule",
    "solve",
    "suboptimality_certificate",
]
