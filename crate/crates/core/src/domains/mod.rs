//! Source and target domains: datasets, loss models with full-batch and
//! minibatch oracles, synthetic instance generators and CSV ingestion.

mod constants;
mod csv_io;
mod dataset;
mod loss;
mod synthetic;

pub use constants::{estimate_constants, suite_constants, CurvatureConstants};
pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use dataset::{Dataset, Standardizer};
pub use loss::{draw_batch, LogisticLoss, LossModel, QuadraticLoss, SoftmaxLoss, DEFAULT_REG};
pub use synthetic::{
    closed_form_wstar, group_class_sets, make_grouped_classification, make_quadratic_suite,
    GroupedClassification, QuadraticSuiteSpec, WStar,
};
