use thiserror::Error;

pub type Result<T, E = CoverError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("degenerate mirror point")]
    DegenerateMirrorPoint,
    #[error("no separating hyperplane")]
    NoSeparatingHyperplane,
    #[error("robots coincide")]
    RobotsCoincide,
    #[error("robots {0} and {1} overlap")]
    RobotsOverlap(usize, usize),
    #[error("obstacle inside safety radius")]
    ObstacleInsideSafetyRadius,
    #[error("sensor region fully blocked")]
    SensorRegionBlocked,
    #[error("goal voxel is blocked")]
    GoalBlocked,
    #[error("point {0:?} is outside the voxel grid")]
    OutOfBounds([f64; 3]),
    #[error("empty cloud")]
    EmptyCloud,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoverError {
    fn from(e: std::io::Error) -> Self {
        CoverError::Io(e.to_string())
    }
}
