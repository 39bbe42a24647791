"""Concentration inequalities for dependent sequences on finite alphabets."""

from .bounds import (BoundCurve, azuma_bound, concentration_alpha, exact_tail, main_bound,
                     make_curve, marton_bound, mcdiarmid_bound, median, median_mean_convert,
                     samson_bound)
from .lab import (ExperimentConfig, TailReport, monte_carlo_tail, reindex_experiment,
                  rn_experiment, sample_sequence)
from .lipschitz import (WeightedSpace, check_psi_dominance, l1_norm, marginal_projection,
                        max_pairing, phi_norm, psi_n, psi_norm)
from .martingale import check_vd_bound, conditional_mean, martingale_profile, v_hat, v_i
from .measure import (DiscreteMeasure, MeasureFamily, SignedDensity, conditional,
                      load_measure, make_forbidden, make_markov, make_product,
                      make_row_homogeneous, marginal_prefix, measure_from_spec,
                      positive_part_mass, reindex, save_measure, total_variation)
from .metrics import (FunctionTable, MetricSpec, diameter, distance, lipschitz_constant,
                      random_lipschitz)
from .mixing import (MixingMatrix, delta_matrix, doeblin_coefficient, eta_bar, eta_ij,
                     gamma_matrix, gershgorin_bound, inf_norm, phi_coefficient, spectral_norm)

__version__ = "0.1.0"
