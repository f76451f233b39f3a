pub mod cli;
pub mod cloud;
pub mod coding;
pub mod color;
pub mod error;
pub mod metrics;
pub mod partition;
pub mod ply;
pub mod trainer;
pub mod transform;

pub use cloud::PointCloud;
pub use error::{Error, Result};
