"""Ground state energies, cut norms and sampling estimators for weighted r-uniform hypergraphs."""
from .arrays import (
    FractionalPartition,
    IntegerPartition,
    InteractionArray,
    LayeredInteraction,
    LayeredRArray,
    RArray,
    StateDistribution,
    energy,
    layered_energy,
)
from .csp import Constraint, Formula, eval_rep, indicator_interactions, max_csp_exact
from .cutnorm import cut_decompose, cut_distance, cut_norm
from .errors import (
    ArgumentError,
    CapacityError,
    ConfigurationError,
    DimensionError,
    DomainError,
    GselabError,
    InfeasibleError,
    MalformedInputError,
    UnsupportedError,
)
from .graphon import FullStepGraphon, StepKernel, sample_g, sample_h
from .gse import (
    gse_fractional_ascent,
    gse_integer_exact,
    gse_integer_local,
    kernel_gse_reference,
    round_microcanonical,
    round_to_integer,
)
from .homdensity import DecoratedTemplate, Decoration, t_hom, t_inj
from .qap import TriangularKernel, ac_exact, cluster_fit, estimate_qap, qap_exact

__version__ = "0.1.0"
