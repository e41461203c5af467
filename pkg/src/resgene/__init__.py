"""Genomic prediction toolkit.

Encodes SNP genotype sequences as 2D images or C-channel tensors, trains
residual regression networks on them from scratch, and evaluates models
with k-fold cross-validation, Pearson correlation, and Friedman rank
statistics.  A closed-form ridge baseline and a seeded synthetic data
generator support desk-scale experiments and oracle checks.
"""

__version__ = "0.1.0"

from .autodiff import Tensor, load_checkpoint, save_checkpoint
from .errors import (
    ConfigError,
    DataError,
    FitError,
    GraphError,
    LayoutError,
    ParseError,
    ResgeneError,
    StatsError,
    SynthError,
)
from .genio import (
    GenotypeDataset,
    PhenotypeTable,
    RawGenotypeTable,
    TraitVector,
    build_dataset,
    encode_base,
    encode_table,
    load_genotypes,
    load_phenotypes,
)
from .network import ModelConfig, ResGeneNet, build, param_count, predict
from .ridge import RidgeModel, RidgeModelSpec, fit_ridge, predict_ridge
from .stats import (
    AggregateReport,
    CvReport,
    RankTable,
    aggregate_report,
    average_ranks,
    chi2_sf,
    cross_validate,
    friedman_chi2,
    kfold_split,
    pcc,
    rank_models,
)
from .synth import GroundTruth, SynthSpec, generate, write_synth_files
from .tensorize import (
    CoverageEstimate,
    SnpLayout,
    coverage,
    dump_tensor_blob,
    load_tensor_blob,
    plan_layout,
    to_image2d,
    to_tensor3d,
)
from .training import (
    FoldTrainResult,
    ResGeneModelSpec,
    TrainConfig,
    sgd_step,
    train_fold,
)

__all__ = [
    "__version__",
    # errors
    "ResgeneError", "ParseError", "DataError", "LayoutError", "GraphError",
    "ConfigError", "StatsError", "FitError", "SynthError",
    # genotype io
    "RawGenotypeTable", "PhenotypeTable", "GenotypeDataset", "TraitVector",
    "encode_base", "encode_table", "load_genotypes", "load_phenotypes",
    "build_dataset",
    # layouts
    "SnpLayout", "CoverageEstimate", "plan_layout", "to_image2d",
    "to_tensor3d", "coverage", "dump_tensor_blob", "load_tensor_blob",
    # autodiff
    "Tensor", "save_checkpoint", "load_checkpoint",
    # network
    "ModelConfig", "ResGeneNet", "build", "predict", "param_count",
    # training
    "TrainConfig", "FoldTrainResult", "train_fold", "sgd_step",
    "ResGeneModelSpec",
    # statistics
    "pcc", "kfold_split", "cross_validate", "CvReport", "rank_models",
    "average_ranks", "friedman_chi2", "chi2_sf", "aggregate_report",
    "RankTable", "AggregateReport",
    # ridge baseline
    "RidgeModel", "fit_ridge", "predict_ridge", "RidgeModelSpec",
    # synthetic data
    "SynthSpec", "GroundTruth", "generate", "write_synth_files",
]
