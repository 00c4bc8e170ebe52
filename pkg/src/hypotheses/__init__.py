from .augment import AugmentedDecision, augmented_classify, augmented_restriction, class_log_scores, class_scores, influences
from .census import CensusReport, empirical_rademacher, enumerate_census, pac_sample_bound, worst_case_check
from .threshold import ThresholdResult, feasible, solve_threshold
