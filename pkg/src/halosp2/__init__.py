"""Core-halo graph partitioning and partitioned SP2 density-matrix evaluation."""

from .anneal import SAConfig, SAResult, accept_probability, sa_delta, sa_refine
from .errors import (
    AssemblyError,
    ConvergenceWarning,
    IllegalMoveError,
    ParseError,
    ValidationError,
)
from .generators import gen_system, gapped_hamiltonian, random_symmetric
from .gsp2 import (
    PartWorkItem,
    RunMetrics,
    assemble,
    evaluate_part,
    extract_submatrix,
    gsp2_run,
    gsp2_sp2,
)
from .partition import (
    bfs_block_partition,
    export_partition,
    import_partition,
    validate_cores,
)
from .sgraph import (
    CHPartition,
    PartitionMetrics,
    SparsityGraph,
    build_ch_partition,
    communication_volume,
    neighborhood,
    objective_sum_cubes,
    partition_metrics,
    read_metis_graph,
    sparsity_graph,
    structural_polynomial_graph,
    write_metis_graph,
)
from .sp2 import (
    Poly,
    PolySchedule,
    SP2Config,
    sm_sp2,
    sp2_initial,
    sp2_step,
    thresholded_poly_apply,
)
from .spmat import (
    SymSparseMatrix,
    load_matrix_market,
    save_matrix_market,
    threshold,
    trace,
)

__version__ = "0.1.0"
