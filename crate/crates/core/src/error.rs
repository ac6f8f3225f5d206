use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("material law pole at omega = {omega}: {detail}")]
    Pole { omega: String, detail: String },
    #[error("singular interior block at omega = {omega} (pivot {pivot} of {n})")]
    Singular { omega: String, pivot: usize, n: usize },
    #[error("rank defect: {0}")]
    Rank(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Region(_) | Error::Mesh(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
