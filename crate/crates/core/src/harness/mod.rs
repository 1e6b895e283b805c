//! Verification experiments: defect ladders, norm scans and order fits, with
//! their on-disk records.

pub mod catalog;
pub mod config;
pub mod defects;
pub mod fit;
pub mod run;
pub mod svg;

pub use catalog::{catalog, lookup};
pub use config::{CutoffConfig, ExperimentConfig};
pub use defects::{
    classical_sup, dirac_defect, norm_continuity_scan, quantized_norm, selfadjoint_defect, vonneumann_defect, Defect,
    Setting,
};
pub use fit::{order_fit, OrderFit};
pub use run::{crosscheck, rung_model, run_experiment, CrosscheckRow, ExperimentRecord, RecordRow};
