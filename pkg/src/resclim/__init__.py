"""
Namespace flattening for resclim.
"""

from resclim.empty import Empty
from resclim.helpers import *
import resclim.iters as iters
from resclim.iters import (
    blocks,
    pairwise_reduce,
    )
from resclim.docparse import split_docstring
from resclim.seeding import (
    seed_sequence,
    substream,
    derive_seed,
    )

from resclim.option import Option

from resclim.linalg import (
    PIVOT_RTOL,
    sparse_matrix,
    spmv,
    spectral_radius,
    solve_normal_equations,
    fft_real,
    ifft_real,
    LinalgError,
    DimensionMismatchError,
    SingularSystemError,
    )
from resclim.transform import StandardizationTransform
from resclim.container import (
    MAGIC_DATASET,
    MAGIC_MODEL,
    MAGIC_REGMAT,
    write_container,
    read_container,
    write_sidecar,
    read_sidecar,
    pack_name,
    unpack_name,
    ContainerError,
    ContainerFormatError,
    )

from resclim.reservoir import (
    ReservoirHyperparams,
    Reservoir,
    FeatureSeries,
    Prediction,
    build_reservoir,
    input_blocks,
    preactivation,
    step,
    feature,
    drive_open_loop,
    closed_loop_map,
    predict_closed_loop,
    echo_state_gap,
    )
from resclim.regularization import (
    Kind,
    Method,
    LmntMode,
    RegularizationConfig,
    RegularizationMatrix,
    tikhonov_matrix,
    input_jacobian,
    state_jacobian,
    jacobian_matrix,
    lmnt_matrix,
    reduced_indices,
    lmnt_matrix_reduced,
    mean_input_fixed_point,
    lmnt_matrix_mean_input,
    noise_inputs,
    noisy_features,
    regularization_matrices,
    save_matrix,
    load_matrix,
    )
from resclim.training import (
    OutputWeights,
    GramCache,
    TrainedModel,
    gram_cache,
    train,
    train_noisy,
    training_residual,
    save_model,
    load_model,
    )
from resclim.ks_dynamics import (
    KSConfig,
    ETDRK4Tables,
    DataSet,
    Role,
    TrueMap,
    wavenumbers,
    build_tables,
    ks_step,
    advance,
    initial_condition,
    integrate,
    generate_dataset,
    save_dataset,
    load_dataset,
    write_csv,
    true_map_F,
    benettin,
    largest_lyapunov,
    NonFiniteStateError,
    )
from resclim.metrics import (
    Verdict,
    ErrorNormalizers,
    PredictionRecord,
    PSDEstimate,
    mean_pair_distance,
    sampled_pair_distance,
    normalizers,
    valid_time,
    map_error_series,
    classify_stability,
    score_prediction,
    welch_psd,
    )

from resclim import typing
from resclim import err

from resclim import harness
from resclim.harness.config import (
    HarnessError,
    ConfigError,
    EmptySweepError,
    BETA_ORDER,
    Section,
    Schedule,
    Ensemble,
    RegularizationPlan,
    ExperimentConfig,
    parse_config,
    with_overrides,
    load_config,
    grid_points,
    )
from resclim.harness.stats import (
    MedianCI,
    PointSummary,
    SweepResult,
    median_ci,
    summarize,
    select_parameters,
    )
import resclim.harness.sweep
from resclim.harness.sweep import (
    UnitContext,
    run_unit,
    run_sweep,
    )
from resclim.harness.report import (
    format_table,
    write_table_csv,
    write_grid_csv,
    mean_map_histogram,
    write_histogram_csv,
    psd_curves,
    write_psd_csv,
    )
import resclim.harness.cli

# Mypy really wants __all__ to be present
__all__ = [
    'Reservoir',
    'ReservoirHyperparams',
    'FeatureSeries',
    'RegularizationMatrix',
    'OutputWeights',
    'PredictionRecord',
    'ExperimentConfig',
    ]
