use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::config::ConfigError;
use crate::container::ContainerError;
use crate::cv::CvError;
use crate::metrics::MetricsError;
use crate::nn::NnError;
use crate::pose::PoseError;
use crate::preprocess::PreprocessError;
use crate::segment::SegmentError;
use crate::weak::WeakError;

/// Any failure surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Weak(#[from] WeakError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
