from .classifiers import (
    AugmentedClassifier,
    BaseClassifier,
    ConstantClassifier,
    HalfspaceClassifier,
    NearestNeighborClassifier,
    RelabeledClassifier,
    build_classifier,
)
from .robustness import (
    AttackConfig,
    AttackResult,
    RadiusEstimate,
    adversarial_accuracy,
    adversarial_accuracy_curve,
    attack_point,
    natural_accuracy,
    robust_at,
    robust_radius,
)
from .smoothing import SmoothedPrediction, smooth_accuracy, smooth_predict
