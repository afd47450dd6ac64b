"""cmlab: a simulation laboratory for critical configuration models.

Five building blocks: ``degrees`` constructs heavy-tailed sequences and
verifies the standing assumptions; ``graph`` realizes multigraphs by uniform
half-edge pairing and percolates at the critical window; ``explore`` runs the
breadth-first exploration walk and measures component geometry; ``branching``
hosts the dominating offspring laws and walk/height machinery; ``lab`` is the
reproducible Monte Carlo harness behind the ``cmlab`` CLI.
"""

from .degrees import (
    AssumptionReport,
    DegreeSequence,
    Exponents,
    ThetaSequence,
    beta_profile,
    check_assumptions,
    compactness_diagnostics,
    criticality,
    exponents_from_tau,
    iid_powerlaw_sequence,
    kn_default,
    powerlaw_quantile_sequence,
    psi_theta,
    retune_to_criticality,
)
from .graph import (
    HalfEdgeGraph,
    PercolationOutcome,
    critical_p,
    is_simple,
    pair_half_edges,
    percolate_degrees,
    realize_percolated,
    remove_hubs,
    sample_simple,
)
from .explore import (
    ComponentSummary,
    ExplorationTrace,
    MassProfile,
    bfs_distances,
    component_diameter,
    components,
    discovery_diagnostic,
    explore_component,
    hitting_time,
    hub_mass_statistic,
    hub_removed_diameter,
    mass_profile,
    neighborhood_size,
    rescaled_walk,
)
from .branching import (
    ProgenyLaw,
    WalkTrace,
    bf_walk,
    exit_time_estimate,
    gw_height,
    height_harmonic_check,
    hitting_probability_check,
    i2_lambda,
    levy_concentration,
    mean_bound_check,
    progeny_law,
    subcritical_path_tail,
    truncated_progeny_law,
    upcrossing_tail_check,
)
from .lab import (
    ExperimentSpec,
    TrialRecord,
    mix_seed,
    percolation_assumption_report,
    run_experiment,
    tightness_diagnostic,
)

__version__ = "0.1.0"
