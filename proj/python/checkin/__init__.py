"""Check-in prediction engine: spatial features, boosted trees and a small
prediction service, exposed from the C++ core."""

from ._core import (
    Dataset,
    DomainError,
    IoError,
    Model,
    Service,
    __version__,
    category_summary,
    cross_validate,
    feature_matrix,
    fit,
    haversine,
    ingest,
    load_dataset,
    load_model,
    male,
    msle,
    pcc,
    pcc_by_radius,
    synth,
    train,
    ttest_ind,
)

__all__ = [
    "Dataset",
    "DomainError",
    "IoError",
    "Model",
    "Service",
    "category_summary",
    "cross_validate",
    "feature_matrix",
    "fit",
    "haversine",
    "ingest",
    "load_dataset",
    "load_model",
    "male",
    "msle",
    "pcc",
    "pcc_by_radius",
    "synth",
    "train",
    "ttest_ind",
]
