"""bergman: density expansions of Bergman kernels from local Kahler data.

The exact core (jets, curvature, normalization, Gram engine) works over
Gaussian rationals; floating point appears only in the independent
quadrature oracles used for validation.
"""

from .rationals import QQi, qqi_from_strings
from .jets import (
    BidegreeJet,
    MatrixJet,
    SectionIndex,
    graded_exponents,
    matrix_sqrt_jet,
    section_indices,
    section_rank,
)

__version__ = "0.1.0"
