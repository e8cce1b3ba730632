"""Heteroclinic standing waves of Delta u = W_u(u) on periodic strips.

Finite-volume constrained minimization on masked grids, with numerical
checks of the cut-off replacement, the maximum principle, the comparison
function contraction and the exponential decay of the tails.
"""

__version__ = "0.1.0"

from .potential import (DegenerateWell, Potential, ProductWell, ScalarQuartic,  # noqa: E402
                        CustomPotential, make_potential)
from .geometry import (StripSpec, DiscreteDomain, build_mask, build_line,  # noqa: E402
                       flat_cylinder, sinusoidal_strip)
from .energy import energy, residual  # noqa: E402
from .minimizer import ConstraintSpec, SolverOptions, minimize  # noqa: E402
from .wave import solve_standing_wave  # noqa: E402
from .oracle import solve_heteroclinic_1d, compare_to_2d  # noqa: E402

__all__ = [
    "Potential", "ScalarQuartic", "ProductWell", "DegenerateWell", "CustomPotential",
    "make_potential", "StripSpec", "DiscreteDomain", "build_mask", "build_line",
    "flat_cylinder", "sinusoidal_strip", "energy", "residual", "ConstraintSpec",
    "SolverOptions", "minimize", "solve_standing_wave", "solve_heteroclinic_1d",
    "compare_to_2d",
]
