"""Generalized WOLA filter banks for subband system identification."""
from .adaptation import RlsBank, RlsState, rls_init, rls_update
from .bench import MetricSeries, ScenarioConfig, measure_erle, run_simulation, simulate, sweep, system_distance
from .complexity import ComplexityReport, FlopCounter, Method, table1
from .errors import WolaError
from .filterbank import (
    FilterBankSpec,
    SubbandFilterSet,
    SubbandImages,
    TransferCharacterization,
    analysis_frames,
    characterize,
    characterize_effective,
    lptv_impulse_responses,
    subband_images,
    synthesis_overlap_add,
)
from .gwola import ConventionalEngine, GwolaEngine, OverlapAddSynthesizer, build_regressor
from .prototype import (
    CosineSeries,
    PrototypeFilter,
    SynthesisDesign,
    SynthesisPrototype,
    WindowKind,
    compute_kernels,
    cosine_series,
    design_synthesis,
    make_window,
    verify_pr,
)
from .ptwola import PtwolaConfig, PtwolaEngine, map_coefficients, ptwola_regressor
from .steady_state import analytical_erle, compute_Z0, erle_model, generate_rir, steady_state_images

__version__ = "0.1.0"
