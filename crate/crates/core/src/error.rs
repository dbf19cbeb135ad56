use thiserror::Error;

use crate::geometry::Site;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("site {0} is not in the region")]
    SiteOutsideRegion(Site),

    #[error("site {0} is frozen")]
    FrozenSite(Site),

    #[error("value {value} is outside the support of {law}")]
    OutsideSupport { value: f64, law: String },

    #[error("operation requires a Bernoulli law, got {0}")]
    NotBernoulli(String),

    #[error("symmetric eigendecomposition failed on a {dim}x{dim} matrix (frobenius norm {norm:.3e}, max |entry| {max_entry:.3e})")]
    Eigen {
        dim: usize,
        norm: f64,
        max_entry: f64,
    },

    #[error("energy {energy} is resonant: distance {distance:.3e} to the spectrum")]
    Resonance { energy: f64, distance: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("branch {0} is broken (unresolved crossing)")]
    BrokenBranch(usize),

    #[error("{free} free sites exceed the enumeration cap of {cap}")]
    TooManyFreeSites { free: usize, cap: usize },

    #[error("witness squares {0} and {1} overlap")]
    OverlappingSquares(usize, usize),

    #[error("frozen set is not regular: non-sparse mass {nonsparse} exceeds budget {budget}")]
    IrregularFrozenSet { nonsparse: usize, budget: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("mixed parameters: {0}")]
    MixedParameters(String),

    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },
}

pub type Result<T> = std::result::Result<T, Error>;
