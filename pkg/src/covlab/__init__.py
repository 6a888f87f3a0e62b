"""Covariance models on geographic x environmental domains: construction,
positive-definiteness checks, variogram calculus and simple kriging."""

__version__ = "0.1.0"

from .metrics import (  # noqa: E402
    EuclideanPoint,
    GeoPoint,
    JointSample,
    MetricSpec,
    env_distance,
    euclidean_distance,
    great_circle_distance,
    joint_rescaled_distance,
)
from .models import (  # noqa: E402
    CovarianceModel,
    DomainSpec,
    ValidityVerdict,
    brc,
    evaluate,
    evaluate_pair,
    exponential,
    modified_brc,
    product_of,
    stable,
    sum_of,
    triangle,
    validity_range,
)
from .gram import (  # noqa: E402
    Configuration,
    NotPositiveDefiniteError,
    PDCertificate,
    certify_pd,
    cholesky_simulate,
    counterexample_search,
    gram_matrix,
    grid_312,
    min_eigenvalue,
)
from .kriging import (  # noqa: E402
    EmpiricalCovariance,
    FieldData,
    KrigingResult,
    empirical_covariance,
    fit_model,
    grid_targets,
    simple_krige,
)
