"""Connection-based LoRa sensor network: frame codec, protocol state
machines, empirical lossy channel, energy ledger, discrete-event
simulator, and an embedded time-series ingestion pipeline."""

from .frame import ControlFlags, Frame, FrameError, decode, encode
from .channel import LinkProfile, RadioParams, airtime, lookup_profile, sample_delivery
from .power import BatterySpec, EnergyLedger, Mode, estimate_lifetime, event_energy
from .protocol import GatewaySM, RelaySM, RetrySchedule, SensorNodeSM, next_retry_delay
from .ingest import MeasurementRecord, TimeSeriesStore
from .simkernel import (
    InvalidScenarioError,
    LinkSpec,
    NodeSpec,
    Scenario,
    SimMetrics,
    SimResult,
    TraceRecord,
    compute_flr,
    run,
    seeded_stream,
)

__version__ = "0.1.0"

__all__ = [
    "ControlFlags",
    "Frame",
    "FrameError",
    "decode",
    "encode",
    "LinkProfile",
    "RadioParams",
    "airtime",
    "lookup_profile",
    "sample_delivery",
    "BatterySpec",
    "EnergyLedger",
    "Mode",
    "estimate_lifetime",
    "event_energy",
    "GatewaySM",
    "RelaySM",
    "RetrySchedule",
    "SensorNodeSM",
    "next_retry_delay",
    "MeasurementRecord",
    "TimeSeriesStore",
    "InvalidScenarioError",
    "LinkSpec",
    "NodeSpec",
    "Scenario",
    "SimMetrics",
    "SimResult",
    "TraceRecord",
    "compute_flr",
    "run",
    "seeded_stream",
    "__version__",
]
