"""Low-rank representation clustering on product Grassmann manifolds."""
from .clustering import ClusteringResult, clustering_accuracy, ncut_cluster, symmetrize_affinity
from .errors import (
    DegenerateInput,
    DimensionError,
    EmptyDataset,
    InvalidK,
    LengthMismatch,
    MalformedFile,
    ManifestError,
    NumericalFailure,
    PGLRRError,
)
from .gram import GramStack, SpectralDecomposition, build_gram_stack, gram_entry, spectral_decompose
from .manifold import (
    GrassmannPoint,
    ProductGrassmannPoint,
    embed,
    grassmann_dist_sq,
    grassmann_from_matrix,
    pgm_dist_sq,
    suggest_subspace_dim,
)
from .pipeline import cluster_points, solve
from .solvers import (
    CoefficientMatrix,
    LaplacianPair,
    SolverConfig,
    build_laplacian,
    lappglrr_objective,
    lappglrr_solve,
    pglrr_closed_form,
    svt,
    threshold_from_lambda,
)

__version__ = "0.1.0"
