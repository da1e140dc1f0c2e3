//! Telemetry, synthetic experiments, configuration and file formats.

pub mod config;
pub mod cycle;
pub mod files;
pub mod synth;
pub mod telemetry;

pub use config::{AppConfig, FitConfig, SweepConfig};
pub use cycle::{generate_drive_cycle, CurrentProfile, DriveCycle, DriveCycleSpec, Segment};
pub use files::{
    load_calibration, load_json, read_calibration, save_calibration, save_json, save_sweep,
    save_trace, sweep_header, write_calibration, write_sweep, write_trace, CALIBRATION_HEADER,
    TRACE_HEADER,
};
pub use synth::{synthesize_telemetry, Coolant, NoiseSpec, PlantSetup};
pub use telemetry::{
    load_telemetry, read_telemetry, save_telemetry, validate_telemetry, write_telemetry,
    TelemetryRecord, TELEMETRY_HEADER,
};
