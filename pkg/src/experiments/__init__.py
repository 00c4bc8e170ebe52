from .sweep import GeneralizationReport, RandomLabelReport, approximation_gap, resolve_dataset, run_random_label, run_sweep
