use thiserror::Error;

/// Errors produced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh parse error (line {line}): {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {0} is not used by any element")]
    DanglingVertex(usize),

    #[error("edge ({0}, {1}) is shared by {2} elements")]
    NonManifoldFacet(usize, usize, usize),

    #[error("boundary edge ({0}, {1}) has no boundary tag")]
    UntaggedBoundary(usize, usize),

    #[error("element {0} is degenerate (zero area)")]
    DegenerateElement(usize),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("space construction error: {0}")]
    Space(String),

    #[error("rank error on element {element}: expected kernel dimension {expected}, found {found}")]
    Rank {
        element: usize,
        expected: usize,
        found: usize,
    },

    #[error("inadmissible Morawetz multiplier: {0}")]
    Multiplier(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
