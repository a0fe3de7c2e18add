use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("asymmetric input: d({i},{j})={dij} but d({j},{i})={dji}")]
    AsymmetricInput { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("negative distance d({i},{j})={d}")]
    NegativeDistance { i: usize, j: usize, d: f64 },
    #[error("zero distance between distinct points {i} and {j}")]
    ZeroDistancePair { i: usize, j: usize },
    #[error("nonzero self-distance d({i},{i})={d}")]
    NonzeroDiagonal { i: usize, d: f64 },
    #[error("triangle inequality violated: d({i},{k})={dik} > d({i},{j})+d({j},{k})={sum}")]
    TriangleViolation { i: usize, j: usize, k: usize, dik: f64, sum: f64 },
    #[error("graph input is disconnected: no path between {i} and {j}")]
    DisconnectedGraph { i: usize, j: usize },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("unknown fixture family {0:?}")]
    UnknownFixture(String),
    #[error("invalid fixture parameters: {0}")]
    InvalidParameters(String),
    #[error("empty subspace")]
    EmptySubspace,
    #[error("k={k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("point id {0} does not belong to this space")]
    UnknownPoint(usize),
    #[error("node {0} is not a leaf of this tree")]
    ForeignLeaf(usize),
    #[error("restricted core carries no weight inside the inner ball")]
    EmptyCore,
    #[error("delta={delta} out of range (0, {max}]")]
    DeltaOutOfRange { delta: f64, max: f64 },
    #[error("invalid delta: {0}")]
    InvalidDelta(f64),
    #[error("fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid norm exponent p={0}; need p >= 1")]
    InvalidNorm(f64),
    #[error("empty path")]
    EmptyPath,
    #[error("map is not non-expansive on pair ({i},{j}): mapped {mapped} > {d}")]
    NotNonExpansive { i: usize, j: usize, mapped: f64, d: f64 },
    #[error("guarantee violated: {what}: {lhs} vs {rhs}")]
    GuaranteeViolation { what: String, lhs: f64, rhs: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn guarantee(what: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Error::GuaranteeViolation { what: what.into(), lhs, rhs }
    }

    /// Guarantee violations map to exit code 2 in the CLI; everything else is a usage error.
    pub fn is_guarantee_violation(&self) -> bool {
        matches!(self, Error::GuaranteeViolation { .. })
    }
}
