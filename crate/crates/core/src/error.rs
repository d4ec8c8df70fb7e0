use thiserror::Error;

/// Errors raised by the solvers, oracles and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {x} lies outside the window [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("evaluation at singular point x = {0}")]
    SingularEvaluation(f64),

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not reach tolerance (estimated error {estimate:.3e})")]
    Accuracy { estimate: f64 },

    #[error("horizon too long: offset {offset} reaches the cap {cap}")]
    Horizon { offset: f64, cap: f64 },

    #[error("a-priori bound violated: {0}; try a shorter horizon")]
    Regime(String),

    #[error("entropy violation: {0}")]
    Entropy(String),

    #[error("characteristic left its region at t = {t}, x = {x}")]
    PathCrossing { t: f64, x: f64 },

    #[error("no convergence after {iterations} iterations (last difference {last_diff:.3e})")]
    NonConvergence { iterations: usize, last_diff: f64 },

    #[error("time {t} is past the collision at {collision}")]
    PastCollision { t: f64, collision: f64 },

    #[error("shocks do not approach: a1 = {a1}, a2 = {a2}")]
    NotApproaching { a1: f64, a2: f64 },

    #[error("interaction frame degenerates: a1 − a2 = {gap}")]
    DegenerateFrame { gap: f64 },

    #[error("characteristic at t = {t}, x = {x} is {distance:.3e} from a shock, inside the cone radius {radius:.3e}")]
    ConeViolation { t: f64, x: f64, distance: f64, radius: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
