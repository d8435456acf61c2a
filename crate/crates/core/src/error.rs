use std::fmt;

use thiserror::Error;

/// Which of the four rectangle coordinates broke a staircase chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Coord::A => "a",
            Coord::B => "b",
            Coord::C => "c",
            Coord::D => "d",
        };
        f.write_str(s)
    }
}

/// First strict inequality that failed while checking a staircase chain.
///
/// `index` is the 1-based index of the first rectangle of the offending pair,
/// `relation` is `'<'` or `'>'` and reads `coord_index relation coord_{index+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseViolation {
    pub index: usize,
    pub coord: Coord,
    pub relation: char,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for StaircaseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{c}_{i} {r} {c}_{j} violated ({lhs} vs {rhs})",
            c = self.coord,
            i = self.index,
            j = self.index + 1,
            r = self.relation,
            lhs = self.lhs,
            rhs = self.rhs
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rectangle [{a}, {b}] x [{c}, {d}]: need a < b and c < d, all finite")]
    InvalidRect { a: f64, b: f64, c: f64, d: f64 },

    #[error("invalid direction ({0}, {1})")]
    InvalidDirection(f64, f64),

    #[error("invalid cone: generators are antiparallel")]
    DegenerateCone,

    #[error("invalid blur configuration: {0}")]
    InvalidConfig(String),

    #[error("staircase violation: {0}")]
    Staircase(StaircaseViolation),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("convolution nesting too deep")]
    NestingTooDeep,

    #[error("slab enumeration is not finite: step advance {advance:e} along the query direction")]
    NonFiniteSlab { advance: f64 },

    #[error("measure vanishes at its extremal candidate")]
    ZeroMeasure,

    #[error("measure support is unbounded in the requested direction")]
    UnboundedSupport,

    #[error("cone verification failed at atom ({x}, {y}): {reason}")]
    ConeVerificationFailed { x: f64, y: f64, reason: String },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("advance margin {0:e} is not positive")]
    NonPositiveAdvance(f64),

    #[error("recursion depth bound {needed} exceeds cap {cap}")]
    DepthExceeded { needed: u64, cap: u64 },

    #[error("memo table would exceed its capacity of {cap} entries")]
    MemoCapExceeded { cap: usize },

    #[error("residual {max_abs:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { max_abs: f64, tolerance: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
