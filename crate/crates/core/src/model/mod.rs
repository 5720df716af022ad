//! Shared data types: frames, protocols, and recorded runs.

mod frame;
mod manifest;
mod protocol;

pub use frame::{Frame, FrameStack, CHANNELS};
pub use manifest::{
    load_manifest, load_sweep, read_forces, read_header, read_png, run_dirs, save_manifest,
    stream_cycles, CycleRecord, CycleWriter, LoadSample, RunData, RunHeader, RunManifest,
    FORCES_FILE, MANIFEST_FILE, SCHEMA_VERSION, TRUTH_FILE,
};
pub use protocol::{
    linspace, AbrasionSchedule, Contact, CyclicLoading, ForceRamp, Protocol, ProtocolKind,
    RidgeOrientation, RidgeSpec, SurfaceLoad, SweepPlan, INDENTER_TIP_RADIUS_MM,
};

pub(crate) use frame::ensure_strictly_increasing as ensure_increasing;
