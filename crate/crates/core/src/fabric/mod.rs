//! Simulated partially reconfigurable SoC fabric.
//!
//! The static region (processor glue, interconnect, optional cycle counter)
//! stays configured while a single reconfigurable partition hosts one SVM
//! core at a time. A configuration library holds a full and a partial
//! bitstream per module; the first load must be full, later swaps may be
//! partial. Only resource arithmetic and timing are modeled, not geometry.

mod bitstream;
mod core;
mod device;
mod dpr;
mod library;
mod state;

pub use self::bitstream::{
    config_time, config_time_bits, Bitstream, BitstreamKind, ConfigPort, PortKind, SizeModel,
};
pub use self::core::{
    feature_reg, SvmCore, CTRL_START, MAX_FEATURES, REG_CTRL, REG_DIM, REG_DISTANCE_HI,
    REG_DISTANCE_LO, REG_FEATURE_BASE, REG_RESULT, REG_STATUS, STATUS_DONE, STATUS_IDLE,
};
pub use self::device::{Device, FootprintDelta, ResourceFootprint, RESOURCE_NAMES};
pub use self::dpr::{dpr_cascade_run, DprTrace, StaticCascadeSystem, SwapPolicy, SwapRecord};
pub use self::library::{
    build_configuration_library, ConfigurationLibrary, FabricConfig, ReconfigurableModule,
    ReconfigurablePartition,
};
pub use self::state::{DeviceState, Event, EventKind};
