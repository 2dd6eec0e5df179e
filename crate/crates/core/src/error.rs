use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("zeta = {re}{im:+}i is outside the sector 0 <= arg <= pi/{n}")]
    OutsideSector { n: usize, re: f64, im: f64 },
    #[error("root alpha^{root} zeta is marginal (no decay); zeta must lie strictly inside the sector")]
    MarginalRoot { root: usize },
    #[error("zeta = 0 is not allowed here")]
    ZeroZeta,
    #[error("branch m = {m} is not admissible on the {side} side (Im(alpha^m zeta) has the wrong sign)")]
    BranchNotAdmissible { m: usize, side: &'static str },
    #[error("solutions live on different grids or spectral parameters")]
    Mismatch,
    #[error("piece [{a}, {b}] is not constant")]
    NonConstantPiece { a: f64, b: f64 },
    #[error("N = {0} is not supported by this operation")]
    UnsupportedOrder(usize),
    #[error("Jost solutions are numerically dependent: |Delta| = {delta:e} below threshold {threshold:e}")]
    Dependent { delta: f64, threshold: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("rank-one denominator vanishes: |1 + <phi0, R phi0>| = {0:e}")]
    RankOneDenominator(f64),
    #[error("threshold criteria disagree: c-criterion says {c_says}, Delta order = {order}")]
    CriteriaDisagree { c_says: &'static str, order: i64 },
    #[error("refused: {0}")]
    Refused(String),
    #[error("kappa = {kappa} outside (0, {kappa0})")]
    KappaRange { kappa: f64, kappa0: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
