"""Projective (nuclear) tensor norm estimation via adaptive-rank CP
decompositions, with separability tests for density matrices."""

from .tensor import (COMPLEX, REAL, FieldMismatchError, SvdConvergenceError,
                     Tensor, frobenius_norm, load_tensor, matricize,
                     operator_matrix, outer_product, rank_one_frobenius,
                     save_tensor, split_operator_dims, svd_nuclear_norm,
                     symmetrize, tensor_from_json_dict, tensor_to_json_dict)
from .cpd import (CpGradients, CpModel, DegenerateTermError, DensityCpModel,
                  DensityGradients, LossBreakdown, LossWeights, build_phi,
                  build_phi_density, effective_rank, gradients, loss_arcpd,
                  loss_density, loss_nrcpd, model_to_json_dict, norm_estimate,
                  reconstruct, reconstruct_density)
from .optimize import (AdamState, FitConfig, FitDivergenceError, FitResult,
                       TraceRow, adam_step, fit, fit_density, fit_symmetric,
                       init_density_model, init_model, init_symmetric_model,
                       multi_restart, rank_upper_bound,
                       rank_upper_bound_density, rank_upper_bound_symmetric,
                       result_json_dict, trace_csv_text, write_trace_csv)
from .states import (DEFAULT_VERDICT_TOL, ENTANGLED, INCONCLUSIVE, SEPARABLE,
                     StateSpec, bell, build_state, density_from_pure, dps_3x3,
                     dps_4x4, ghz, make_state, mix_white_noise, product_state,
                     psi_b, random_product_state, random_state,
                     random_symmetric_state, separability_verdict, w, zzzg)
from .verify import (CheckReport, check_frobenius_lower_bound, check_gradient,
                     check_order2, check_pure_density_consistency,
                     load_reference_norms, multi_start_oracle,
                     psd_min_eigenvalue)

__version__ = "0.1.0"
