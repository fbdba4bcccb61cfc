"""Simulation of SRAM power-up randomness, data remanence and RAM-based
random number generation on passive RFID tags."""

from .errors import (
    ArityError,
    ClockError,
    ConstraintError,
    InfeasibleError,
    InsufficientEntropy,
    InsufficientInputError,
    NoFitError,
    PowerError,
    RangeError,
    SimulationError,
    TagStateError,
    UnknownProtocolError,
)
from .sram_model import (
    GENERATIONS,
    CellParams,
    DecayParams,
    TagSpec,
    TagState,
    create_tag,
    decay_cdf,
    hamming_fraction,
)
from .extractor import (
    HarvestReport,
    HashOutput,
    PhConfig,
    PHExtractor,
    entropy_capacity,
    extract_all,
    harvest,
    ph_hash,
)
from .entropy import (
    BiasProfile,
    BudgetRow,
    MinEntropyEstimator,
    budget,
    estimate_biases,
    min_entropy_density,
    monobit_test,
    serial_correlation,
)
from .remanence_lab import (
    DecaySample,
    LogisticDecayRegressor,
    LogisticFit,
    fit_logistic,
    full_decay_time,
    run_decay_experiment,
)
from .protocol import (
    EntropyPool,
    HbPlusParams,
    HbSecrets,
    RoundRecord,
    authenticate,
    consumption_profile,
    continuous_power_attack,
    dos_window,
    keygen,
    scheduled_auth,
    tag_round,
)

__version__ = "0.1.0"
