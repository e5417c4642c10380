"""pvdefect: photovoltaic-panel surface defect classification.

Preprocessing (bilateral, NLM, CLAHE, gamma), seeded augmentation,
handcrafted descriptors (LBP / HOG / Gabor), deep-embedding fusion, native
SVM (SMO) and gradient-boosted tree classifiers, and an experiment grid
over feature combinations.
"""

from .augment import AugmentConfig, augment_dataset, flip, rotate90, translate
from .classifiers import (
    GbdtModel,
    SvmModel,
    TrainParams,
    gbdt_predict,
    gbdt_train,
    load_model,
    save_model,
    svm_predict,
    svm_train,
)
from .dataset import ClassLabel, LabeledDataset, Sample, read_manifest, write_manifest
from .deepfeat import EmbeddingSet, load_embeddings, synthetic_embeddings, write_embeddings
from .evaluate import (
    ConfusionMatrix,
    GridConfig,
    Metrics,
    MetricsRow,
    compute_metrics,
    confusion_matrix,
    render_report,
    run_experiment_grid,
    stratified_split,
)
from .fusion import (
    FeatureStore,
    FeatureVector,
    Standardizer,
    apply_standardizer,
    fit_standardizer,
    fuse_blocks,
    load_feature_store,
    write_feature_store,
)
from .handcrafted import (
    FeatureBlock,
    HandcraftedConfig,
    extract_handcrafted,
    gabor_features,
    hog_descriptor,
    lbp_histogram,
)
from .image import ImageF32, ImageU8, lab_to_rgb, load_image, resize_bilinear, rgb_to_lab, save_image, to_gray
from .preprocess import (
    PreprocessConfig,
    bilateral_filter,
    clahe_luminance,
    gamma_correct,
    nlm_denoise,
    preprocess_pipeline,
)

__version__ = "0.1.0"
