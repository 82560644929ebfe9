use std::path::PathBuf;

use thiserror::Error;

use crate::palette::TexelIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("every 24-bit color is covered by the mesh; no ignore color is available")]
    NoIgnoreColor,

    #[error("mesh has no texture coordinates: {0}")]
    Unwrap(String),

    #[error("malformed input {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{} texel(s) owned by more than one triangle (first: {:?})", .texels.len(), .texels.first())]
    Overlap { texels: Vec<TexelIndex> },

    #[error("look-at target is degenerate: {0}")]
    DegenerateLook(String),

    #[error("non-finite geometry: {0}")]
    Geometry(String),

    #[error("frame {width}x{height} cannot be split into a {cols}x{rows} tile grid")]
    Tiling {
        width: usize,
        height: usize,
        cols: usize,
        rows: usize,
    },

    #[error("encoder check failed: {0}")]
    Encoder(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("no data: {0}")]
    EmptyData(String),

    #[error("texel {0:?} is not owned by any triangle")]
    Ownership(TexelIndex),

    #[error("triangle {0} has a degenerate UV mapping")]
    SingularMapping(usize),

    #[error("scene too large for the brute-force oracle: {0}")]
    ScaleGuard(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("png encode: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("png decode: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
