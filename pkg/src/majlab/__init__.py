"""majlab: majority dynamics on G(n,p) random graphs.

A simulator for the synchronous and lazy (random activation/update)
majority-dynamics processes on Erdos-Renyi graphs, exact small-scale
oracles, closed-form failure-bound evaluation, spectral shrink checks, and
a reproducible Monte Carlo ensemble harness.
"""

from .analytics import (
    BoundReport,
    C_BE,
    berry_esseen_bound,
    chernoff_upper,
    day1_bound,
    day1_chebyshev_const,
    day1_critical_coeff,
    degree_threshold,
    isolated_moments,
    lazy_failure_bound,
    neg_entropy,
    normal_cdf,
    normal_cdf_centered,
    point_mass_bound,
    shrink_exponent,
    shrink_exponent_factor,
    shrink_exponent_factor_direct,
    step2_condition,
    step2_fail_bound,
    subcon_avg_deg_check,
    subcon_avg_deg_check_theorem,
    theorem1_failure_bound,
)
from .dynamics import Coloring, LazyParams, Trajectory, delta, lazy_step, majority_step, run
from .exact_oracle import (
    exact_day1_distribution,
    exact_day1_moments,
    exact_day1_vertex_prob,
    exact_lazy_day1_distribution,
    exact_win_prob,
)
from .experiments import (
    DefectorModel,
    EnsembleResult,
    ExperimentConfig,
    FixedGap,
    RandomBiased,
    RandomHalf,
    apply_scheme,
    bound_vs_measured,
    preset,
    preset_anchor,
    preset_names,
    results_to_csv,
    results_to_json,
    run_ensemble,
    wilson_interval,
)
from .graphs import (
    DENSE_THRESHOLD,
    Graph,
    from_edges,
    load_edge_list,
    min_degree,
    sample_gnp,
    sample_gnp_pairwise,
    sample_gnp_scan,
    save_edge_list,
)
from .rng import RngStream, derive_stream
from .spectral import (
    OpnormResult,
    centered_opnorm,
    default_x_grid,
    min_opnorm,
    norm_concentration,
    shrink_check,
)

__version__ = "0.1.0"
