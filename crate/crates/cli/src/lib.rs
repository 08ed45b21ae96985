//! File formats, dataset-level distance matrices, nearest-neighbour
//! evaluation and kernel export on top of `wlmetric-core`.

pub mod distance;
pub mod error;
pub mod formats;
pub mod kernel;
pub mod knn;
pub mod synth;
pub mod tudataset;

pub use distance::{distance_matrix, graph_distance, DistanceMatrix, DistanceParams, LabelScheme, MatrixMeta, Method};
pub use error::{HarnessError, Result};
pub use formats::{load_edgelist_json, read_classes, read_matrix_csv, write_matrix_csv};
pub use kernel::kernel_export;
pub use knn::{knn_classify, majority_baseline, CvScore};
pub use tudataset::{load_tudataset, write_tudataset, Dataset, TuOptions};
