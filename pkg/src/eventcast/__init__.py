"""eventcast: pattern detection and completion forecasting over event streams.

Compile a guarded regular-expression pattern into a deterministic symbolic
automaton, learn a Markov model of its runs from a stream, and forecast per
state the window of future events within which the pattern will complete with
at least a chosen probability.
"""

from .algebra import (
    Band,
    Event,
    Minterm,
    MissingAttributeError,
    NoMatchingMintermError,
    PredicateAtom,
    SatOracle,
    classify,
    compute_minterms,
    evaluate,
)
from .engine import (
    DetectionRecord,
    EmittedForecast,
    EvaluationReport,
    StreamEngine,
    ThroughputReport,
    benchmark_throughput,
    evaluate_forecasts,
    run_sharded,
    score_forecasts,
)
from .geo import GeoPoint, Region, builtin_registry, distance_km
from .pattern import PatternSpec, format_pattern, parse_pattern
from .pmc import (
    Forecast,
    PatternMarkovChain,
    WaitingTimeDistribution,
    analytic_chain,
    build_forecast_table,
    forecast_interval,
    learn_matrix,
    waiting_time_distribution,
)
from .sfa import (
    DisambiguatedDfa,
    SymbolicDfa,
    SymbolicNfa,
    compile_pattern,
    compile_snfa,
    determinize,
    disambiguate,
    relabel_to_classical,
    step,
)
from .synth import (
    AttributeEmitter,
    ChainWalkSource,
    IidSource,
    MarkovSource,
    UninvertibleMintermError,
    generate_synthetic_stream,
)

__version__ = "0.1.0"
