"""Dialect distance matrices, matrix comparison and dialect clustering from atlas transcriptions."""

__version__ = "0.1.0"

from .atlas import (
    Atlas,
    AtlasError,
    AtlasParseError,
    AtlasReferenceError,
    AtlasTokenizationError,
    Citation,
    Concept,
    IsoglossFeature,
    Site,
    load_atlas,
    validate_coverage,
)
from .cluster import (
    ClusterNode,
    SilhouetteReport,
    agglomerate,
    cut_top,
    mean_silhouette,
    partition_medoids,
    recursive_partition,
    silhouette,
)
from .matrixlab import DistanceMatrix, compare, dietz_kc, pearson_rho, read_matrix
from .metrics import (
    METRICS,
    CostModel,
    IncompleteMatrixError,
    MetricSpec,
    build_matrix,
    citation_distance,
    levenshtein,
    site_pair_distance,
)
from .transcript import (
    FeatureSystem,
    Phone,
    PhoneSeq,
    SymbolInventory,
    default_feature_system,
    load_feature_system,
    phone_distance,
    phone_vector,
    tokenize,
)
