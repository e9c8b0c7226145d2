"""Exact fat Cantor sets, Lipschitz map deciders and finite extension operators."""
from __future__ import annotations

__version__ = "0.1.0"

from .rationals import DenominatorOrder, ExplicitOrder, HorizonExhausted, as_rational, fmt  # noqa: E402
from .gaps import (  # noqa: E402
    Gap, GammaSequence, GapStructure, build_gaps, complement_measure_bound,
    consecutive_pair_check, minimality_audit, refinement_witness,
)
from .maps import (  # noqa: E402
    FeasibilityResult, JumpCertificate, MonotonePLMap, check_jump_length, jump_certificates,
    max_feasible_map, monotonize, sweep_escape_check, sweeping,
)
from .adversary import AdversaryPrefix, construct_gamma_star, sweep_chain, verify_prefix_defeat  # noqa: E402
from .glued import BASE0, BASE1, GluedPoint, GluedSpace, collapse_map, embed, glued_distance  # noqa: E402
from .cube import (  # noqa: E402
    CubePoint, SheetSpec, check_retraction_violation, component_of, cube_distance,
    defeat_family, membership,
)
from .extension import (  # noqa: E402
    FiniteMetricSpace, cone_function, extension_operator, finite_net, local_map,
    mcshane_extend, norming_function, separated_chain,
)
