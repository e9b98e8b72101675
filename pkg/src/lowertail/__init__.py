"""Score functionals of Poisson point processes and their lower tails."""
from .errors import (BracketError, InfeasibleSweepError, InsufficientPointsError, LowerTailError,
                     ParameterError, RareEventExhaustion, UnboundedCellError, UnstabilizedError)
from .geometry import (BoxWindow, PointConfig, RngStream, point_index, restrict, sample_poisson,
                       superpose, thin)
from .graphs import (ConvexPolygon, Graph, clique_count_at, intrinsic_volumes_2d, knn_graph,
                     knn_radius, rng_graph, voronoi_cell)
from .scores import (AltDeltaM, Cap, CliqueCount, DeltaM, KnnPower, PowerEdgeRGG, Range, RngPower,
                     ScoredConfig, ScoreSpec, VoronoiIntrinsic, evaluate_score, format_spec, h_n,
                     parse_spec, score_all, truncate)
from .stabilization import (ConeCover, cone_cover_2d, stab_radius_knn, stab_radius_voronoi,
                            verify_stabilization)
from .sprinkling import (CouplingSample, count_b_dense, couple_eps, couple_M, event_A,
                         event_E_bn, event_E_M_plus, sample_given_A, telescoping_increase_count)
from .entropy import EntropyBound, entropy_by_likelihood_ratio, h_poisson, palm_mean_mc, rate_upper_bound
from .tails import ConditionedSample, TailEstimate, conditional_sample, estimate_tail, rate_curve
from .lemmas import (LemmaReport, check_increasing, check_R_bounded, check_R_decreasing,
                     check_rng_angles, check_weakly_decreasing, run_suite)

__version__ = "0.1.0"
