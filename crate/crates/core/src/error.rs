use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("singular geotransform")]
    SingularGeoTransform,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty stack")]
    EmptyStack,
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("tile too small: {width}x{height} < chip size {chip_size}")]
    TileTooSmall {
        width: usize,
        height: usize,
        chip_size: usize,
    },
    #[error("degenerate cluster params: {0}")]
    DegenerateClusterParams(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("point geometry requested for platform cluster")]
    ClusterPointGeometry,
    #[error("placement rejected: {0}")]
    PlacementRejected(String),
    #[error("no accepted backgrounds")]
    NoAcceptedBackgrounds,
    #[error("scene generation failed: {0}")]
    GenerationFailed(String),
    #[error("unknown chip {0:?}")]
    UnknownChip(String),
    #[error("ungeolocated detection {0}")]
    UngeolocatedDetection(u64),
    #[error("mixed coordinate frames: {0}")]
    MixedFrames(String),
    #[error("invalid class id {0}")]
    InvalidClassId(i64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
