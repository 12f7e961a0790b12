"""Deep-forest toolkit for malicious network flow detection under class imbalance."""

from cascadeids.core import BENIGN, MALICIOUS, Dataset, class_counts, derive_seed, stratified_split

__version__ = "0.1.0"

__all__ = [
    "BENIGN",
    "MALICIOUS",
    "Dataset",
    "class_counts",
    "derive_seed",
    "stratified_split",
    "__version__",
]
