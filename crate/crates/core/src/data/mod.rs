//! Dataset model, CSV boundary, gap segmentation and the synthetic plant.

mod csv_io;
mod dataset;
mod faults;
mod segment;
mod synthetic;

pub use csv_io::{emit_csv, format_timestamp, load_csv, parse_timestamp, read_csv, write_csv, CsvSchema};
pub use dataset::{channel, Channel, ColumnMeta, ColumnRef, TimeSeriesDataset};
pub use faults::{inject_faults, FaultSpec, InjectionLog};
pub use segment::{segment_continuous, segment_timestamps, Segment};
pub use synthetic::{
    exponential_kernel, generate_synthetic_plant, mean_abs_step, NoiseSigma, PlantPhysics, Regime, SyntheticPlantSpec,
    DEFAULT_KERNEL_LAGS, DEFAULT_START_MINUTE, MIN_PARAMS,
};
