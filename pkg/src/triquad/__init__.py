"""Circle-method computations for systems of three integral quadratic forms."""

from .errors import BudgetError, InputError
from .quadsys import (TripleSystem, band_system, certify_cond2, classify_prime,
                      four_lines_system, load_system, random_system)
from .modcount import count_N, hensel_count
from .expsum import T_sum, complete_sum, local_density, singular_series
from .arch import Weight, osc_integral, singular_integral, singular_integral_oracle
from .circle import count_reps, dft_recover, minor_arc_probe, predict

__version__ = "0.1.0"
