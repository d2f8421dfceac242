use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A temperature component was not strictly positive, so `1/x` is undefined.
    #[error("temperature must be strictly positive, got {value} at pixel {index}")]
    NonPositiveTemperature { index: usize, value: f64 },

    #[error("wavelength index {index} out of range for a table of {lines} lines")]
    WavelengthIndex { index: usize, lines: usize },

    #[error("shape mismatch: {what} (expected {expected}, got {got})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid line table: {0}")]
    LineTable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Every reference coefficient was at or below the clamp floor.
    #[error("reference wavelength coefficients are all below the floor {floor:e}")]
    UnsolvableReference { floor: f64 },

    #[error("relative error undefined: reference field has zero norm")]
    ZeroReference,

    #[error("TV gradient requires a positive smoothing constant")]
    NonSmoothTv,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape {
            what,
            expected,
            got,
        })
    }
}
