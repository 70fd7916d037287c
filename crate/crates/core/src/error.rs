use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyMesh,
    DegenerateMesh(String),
    IndexOutOfRange { face: usize, index: usize, vertex_count: usize },
    InvalidArgument(String),
    ResolutionMismatch { expected: usize, found: usize },
    BoundsMismatch,
    EpisodeFinished { step: usize, horizon: usize },
    InvalidPose { pose_id: usize, pose_count: usize },
    EmptyCorpus,
    NonFinite(String),
    Shape(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyMesh => write!(f, "mesh has no faces"),
            Error::DegenerateMesh(why) => write!(f, "degenerate mesh: {why}"),
            Error::IndexOutOfRange {
                face,
                index,
                vertex_count,
            } => write!(
                f,
                "face {face} references vertex {index} but mesh has {vertex_count} vertices"
            ),
            Error::InvalidArgument(why) => write!(f, "invalid argument: {why}"),
            Error::ResolutionMismatch { expected, found } => {
                write!(f, "grid resolution {found} does not match expected {expected}")
            }
            Error::BoundsMismatch => write!(f, "grid bounding boxes differ"),
            Error::EpisodeFinished { step, horizon } => {
                write!(f, "episode finished: step {step} >= horizon {horizon}")
            }
            Error::InvalidPose {
                pose_id,
                pose_count,
            } => write!(f, "pose id {pose_id} out of range for {pose_count} poses"),
            Error::EmptyCorpus => write!(f, "corpus contains no shapes"),
            Error::NonFinite(ctx) => write!(f, "non-finite value encountered: {ctx}"),
            Error::Shape(why) => write!(f, "invalid shape recipe: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
