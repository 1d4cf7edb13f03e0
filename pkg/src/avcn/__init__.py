"""Aligned vertex convolutional networks for graph classification."""

from .alignment import (
    KMeansResult,
    PrototypeSet,
    affinity_matrix,
    aligned_feature_matrix,
    aligned_grids_per_depth,
    build_grid,
    correspondence_matrix,
    fit_prototypes,
    kmeans,
    prototype_order,
)
from .depth import DbRepresentationSet, db_representations, expansion_subgraph, subgraph_entropy
from .errors import (
    AvcnError,
    EmptyInput,
    InvalidParameter,
    MalformedDataset,
    MissingFile,
    NumericalError,
    UnknownLabel,
)
from .graphs import Dataset, Graph, load_tu_dataset, one_hot_features, vertex_degree, write_tu_dataset
from .harness import (
    CvReport,
    RunConfig,
    load_checkpoint,
    prepare,
    run_cv,
    save_checkpoint,
    split_folds,
    train_fold,
)
from .neural import (
    AdamState,
    ConvLayerParams,
    NetworkParams,
    adam_step,
    forward,
    init_network,
    loss_and_gradients,
    stack_branch,
    vertex_conv_backward,
    vertex_conv_forward,
)

__version__ = "0.1.0"
