from .design_space import (
    DesignSpace,
    build_space,
    build_x1,
    build_x2,
    build_x3,
    build_x4,
    l1_distance,
    load_csv,
    make_space,
    save_csv,
)
from .errors import (
    DegenerateStart,
    DesignError,
    DesignSpaceError,
    InvalidConfig,
    InvalidWeights,
    MonotonicityViolation,
    SingularInformation,
    SolveCancelled,
)
from .information import DesignWeights, InformationState, make_state, make_weights
from .kernels import (
    StepOutcome,
    cocktail_step,
    converged,
    ma_step,
    nne_pairing,
    nne_sweep,
    vdm_select,
    vdm_step,
    ve_delta_star,
    ve_step,
    vem_step,
)
from .solver import (
    CertificateReport,
    DesignResult,
    SolverConfig,
    SolverTrace,
    certify,
    cluster_support,
    init_random_support,
    init_uniform,
    normalize_algorithm,
    solve,
)

__version__ = '1.0.0'
