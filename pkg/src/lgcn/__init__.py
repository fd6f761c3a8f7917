"""Lorentzian graph convolutional networks on the hyperboloid model.

Rigorously hyperbolic graph operations (feature transformation, centroid
aggregation, distance attention, pointwise nonlinearity), a scalar
reverse-mode autodiff engine for end-to-end training with trainable
curvature, the Poincare ball as a cross-model oracle, and graph analysis
tools (four-point hyperbolicity, average distortion).
"""

from ._backend import backend_name
from .activations import RELU, Nonlinearity, leaky_relu, parse_nonlinearity
from .autodiff import (
    Adam,
    AdamState,
    CurvatureParam,
    Parameter,
    Tape,
    Value,
    adam_step,
    dropconnect_mask,
)
from .graphs import (
    Graph,
    GraphParseError,
    HyperbolicityResult,
    Splits,
    UndefinedMetricError,
    all_pairs_distances,
    average_distortion,
    average_distortion_from_matrix,
    delta_avg,
    delta_quadruple,
    generate_blocks,
    generate_tree,
    load_graph,
    make_splits,
    save_graph,
)
from .hyperboloid import (
    HyperPoint,
    TangentVector,
    distance,
    exp_origin,
    log_origin,
    lorentz_inner,
    lorentz_norm,
    origin,
    project_to_manifold,
    sq_lorentz_distance,
)
from .model import (
    LgcnConfig,
    LgcnModel,
    TrainedModel,
    evaluate_auc,
    fermi_dirac_score,
    forward_numpy,
    forward_values,
    link_prediction_loss,
    load_checkpoint,
    node_classification_head,
    save_checkpoint,
    score_edges,
    train,
)
from .ops import (
    AttentionWeights,
    attention_weights,
    centroid_objective,
    change_curvature,
    frechet_descent_centroid,
    lgcn_layer_forward,
    lift_euclidean,
    lorentz_centroid,
    lorentz_matvec,
    lorentz_pointwise,
    uniform_weights,
)
from .poincare import (
    BallPoint,
    ball_exp_origin,
    ball_log_origin,
    ball_to_hyperboloid,
    hyperboloid_to_ball,
    mobius_matvec,
    mobius_pointwise,
)

__version__ = "0.1.0"
