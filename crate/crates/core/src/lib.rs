//! Locally normalized dissimilarities merged with m-schemes, completed to a
//! geodesic metric and embedded in the plane.
//!
//! The pipeline is `knn -> stars -> assemble -> aggregate -> geodesics ->
//! classical MDS -> SMACOF`; see [`cli::run`].

pub mod cli;
pub mod datasets;
pub mod dissim;
pub mod embed;
pub mod error;
pub mod local;
pub mod merge;
pub mod mscheme;
mod shortest_path;
pub mod value;

pub use dissim::{DissimilarityMatrix, TriangleViolation, ValidateOptions, ValidationReport};
pub use embed::{Embedding, MdsConfig, Point2};
pub use error::{Error, Result};
pub use local::{NeighborList, OuterMode, PointCloud, StarGraph, StarOptions};
pub use merge::{DisconnectPolicy, Geodesics, HazyGraph, MultiGraph};
pub use mscheme::{MScheme, SchemeFamily};
pub use value::ExtendedValue;
pub use cli::{PipelineConfig, RunReport, SweepSpec};
pub use datasets::{DatasetKind, DatasetSpec};
