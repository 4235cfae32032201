"""Histogram-based multilevel thresholding via bee-colony mixture fitting."""

__version__ = "0.1.0"

from .histogram import (
    GrayImage,
    Histogram,
    PgmError,
    build_histogram,
    histogram_from_csv,
    histogram_to_csv,
    load_grayscale_image,
    write_pgm,
)
from .mixture import (
    GaussianClass,
    MixtureModel,
    ObjectiveSpec,
    decode_candidate,
    encode_candidate,
    mixture_density,
    model_from_dict,
    model_to_dict,
    objective_j,
    sort_classes,
)
from .abc import (
    AbcConfig,
    Bounds,
    FoodSource,
    ObjectiveError,
    RunTrace,
    fitness_of,
    init_population,
    perturb,
    run_abc,
    selection_probs,
)
from .thresholds import (
    InfeasibleThresholdError,
    LabelImage,
    ThresholdSet,
    classification_error,
    compute_thresholds,
    optimal_threshold,
    quadratic_coefficients,
    render_labels,
    segment,
)
from .em import DegenerateModelError, EmConfig, EmFitResult, em_fit, weighted_log_likelihood
from .synth import SynthSpec, synth_histogram
