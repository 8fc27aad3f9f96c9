//! Getting data in and out: raw log ingestion, the synthetic generator, and
//! the on-disk dataset bundle.

mod bundle;
mod ingest;
mod simulate;

pub use bundle::{
    load_dataset, save_dataset, BundleMeta, DatasetBundle, BUNDLE_FORMAT_VERSION, COVARIATES_FILE,
    GROUND_TRUTH_FILE, META_FILE, SERIES_FILE,
};
pub use ingest::{
    aggregate_daily, load_accidents, load_inspections, write_accidents, write_inspections,
    AccidentRecord, DateRange, InspectionRecord, RecordFilter, WorkerClass, ACCIDENT_COLUMNS,
    INSPECTION_COLUMNS,
};
pub use simulate::{simulate_dataset, HazardProcess, Preset, SimulatedDataset, SimulationConfig};
