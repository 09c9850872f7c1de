"""archprobe: CPU micro-architecture characterization suite.

Measures cache/memory latency and bandwidth, instruction latency,
arithmetic throughput, coherency transfer costs and math-function
throughput, on live hardware or against a deterministic synthetic
machine model, and distils the results into a machine model that can
be diffed against datasheet claims.
"""

from .analysis import (
    CacheLevel,
    DatasheetClaim,
    InferredHierarchy,
    LatencyGrid,
    MachineModel,
    Verdict,
    build_machine_model,
    compare_datasheet,
    detect_knees,
    infer_hierarchy,
    model_metrics,
)
from .backends import ExecutionBackend, SyntheticBackend, get_backend
from .coherency import CoherencyRun, CoherencyState, remote_latency
from .errors import (
    ArchprobeError,
    CalibrationError,
    CapabilityError,
    ClaimsParseError,
    InsufficientWorkError,
    KernelError,
    PlacementError,
    ProtocolError,
    ReportError,
    TopologyError,
    ValidationError,
)
from .kernels import (
    BandwidthCurve,
    BandwidthKind,
    ChainSpec,
    ChaseArray,
    arithmetic_throughput,
    bandwidth,
    bandwidth_curve,
    build_chase,
    chase_cycle_length,
    chase_latency,
    instruction_chain_latency,
    latency_grid,
    math_function_bench,
    math_single_double_ratio,
    striad,
)
from .reporting import Report, ResultRecord, emit_report
from .synthmodel import SyntheticHierarchy, default_model, load_model
from .timekit import (
    RunProtocol,
    Sample,
    SystemClock,
    TimerCalibration,
    calibrate_timer,
)
from .topo import (
    CpuTopology,
    PlacementPattern,
    assign_threads,
    discover_topology,
    parse_topology_fixture,
)

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
