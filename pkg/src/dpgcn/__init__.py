"""Edge-private node labeling with one-layer GCNs via subsampling stability."""

from dpgcn.audit import AuditReport, audit_dp
from dpgcn.gcn import (ForwardResult, GcnModel, flip_count_bound, gcn_forward, hamming,
                       misclassification_rate)
from dpgcn.graph import (Graph, GraphError, SbmParams, build_graph, generate_sbm, laplacian,
                         laplacian_rank_one, neighboring_graph, normalize_features,
                         read_edge_list, read_features, sbm_features, write_edge_list,
                         write_features)
from dpgcn.mechanism import (MechanismConfig, MechanismOutcome, SubsampleGcnMechanism,
                             VoteTally, laplace_sample, majority_vote, ptr_release,
                             run_mechanism, stability_score, subsample_edges)
from dpgcn.spectral import SpectralNormResult, spectral_norm
from dpgcn.theory import (BernsteinParams, BoundInputs, FeasibleRange, bound_aggregated,
                          bound_f, choose_m, feasible_range, solve_ps_star)
from dpgcn.verify import VerificationReport, verify_bernstein, verify_theorem1, verify_theorem2

__version__ = "0.1.0"
