use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {re}+{im}i is not inside the open unit disk (modulus {modulus})")]
    OutsideDisk { re: f64, im: f64, modulus: f64 },

    #[error("closed bubbles from sources {first} and {second} overlap")]
    Overlap { first: usize, second: usize },

    #[error("bubbles from sources {first} and {second} overlap{}", admissible_hint(*.min_r))]
    Inadmissible {
        first: usize,
        second: usize,
        min_r: Option<f64>,
    },

    #[error("bubble from source {source_index} does not fit strictly inside the outer circle")]
    BubbleOutside { source_index: usize },

    #[error("point {re}+{im}i lies in or on bubble {bubble}")]
    InsideBubble { re: f64, im: f64, bubble: usize },

    #[error("walk exceeded the step budget of {budget} at {re}+{im}i")]
    StepBudget { budget: u64, re: f64, im: f64 },

    #[error("{failed} of {total} walks failed: {first}")]
    Walks {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error("numerical refusal: {0}")]
    Refusal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn admissible_hint(min_r: Option<f64>) -> String {
    match min_r {
        Some(r) => format!("; the delta rule is admissible only for r >= {r}"),
        None => String::new(),
    }
}

impl Error {
    /// Refusals and exhausted step budgets are the errors where a well-formed
    /// request was declined by the numerics.
    pub fn is_refusal(&self) -> bool {
        match self {
            Error::Refusal(_) | Error::StepBudget { .. } => true,
            Error::Walks { first, .. } => first.is_refusal(),
            _ => false,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
