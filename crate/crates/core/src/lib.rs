pub mod analyze;
pub mod capture;
pub mod coverage;
pub mod error;
pub mod fixtures;
pub mod image;
pub mod meshkit;
pub mod oracle;
pub mod palette;
pub mod pipeline;
pub mod raster;
pub mod scene;

pub use error::{Error, Result};
