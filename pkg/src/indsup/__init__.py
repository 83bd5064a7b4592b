"""Learnability analysis for learning from indirect supervision signals on finite spaces."""

from .complexity import (
    DimensionResult,
    dimension_bound,
    gamma_bar,
    natarajan_dimension,
    rademacher_estimate,
    transition_dimension,
    weak_vc_major_dimension,
)
from .errors import IndsupError
from .joint import JointSpec, LinearConstraint, compose_joint, difference_scenario, verify_no_free_separation
from .learning import CurveRecord, ErmResult, bound_coverage, erm, learning_curve, theorem_bound
from .losses import LossSpec, concentration_loss, cross_entropy_loss
from .scenario import (
    Dataset,
    HypothesisClass,
    Scenario,
    annotation_risk,
    classification_risk,
    empirical_annotation_risk,
    loss_ceiling,
    reachable_labels,
    sample_dataset,
)
from .separation import (
    concentration_degree,
    evidence_bound,
    identifiability_level,
    non_learnability_witness,
    pairwise_separation,
    separation_degree,
)
from .spaces import Distribution, FiniteSpace, entropy, kl, make_distribution, point_mass, total_variation
from .transition import TransitionClass, TransitionHypothesis, build_class

__version__ = "0.1.0"
