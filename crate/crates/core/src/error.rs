use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// The target of an implied-volatility inversion is not strictly inside
    /// the no-arbitrage band `(lower, upper)`.
    NoSolution { price: f64, lower: f64, upper: f64 },
    /// `y` lies below `U_K(-sqrt(2 log K))`, the left end of the range on
    /// which `U_K` is invertible. `min_depth` is the smallest `log K` for
    /// which the same `y` would be admissible, when one exists.
    DomainBelow { y: f64, lower_limit: f64, min_depth: Option<f64> },
    /// `y >= 1`; `U_K` never reaches one.
    DomainAbove { y: f64 },
    /// `L + H < 0` inside a square-root bound.
    BoundInvalid { depth: f64, h: f64 },
    /// Adaptive quadrature stopped before reaching its tolerance.
    Quadrature { estimate: f64, error: f64, intervals: usize },
    /// A bracketed root search did not bracket or did not converge.
    Root { lo: f64, hi: f64, iterations: usize },
    /// The model does not carry the evaluator an operation needs.
    MissingEvaluator(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::Domain { what, value } => write!(f, "domain error: {what} (got {value})"),
            Error::NoSolution { price, lower, upper } => write!(
                f,
                "no implied volatility: price {price} outside no-arbitrage band ({lower}, {upper})"
            ),
            Error::DomainBelow { y, lower_limit, min_depth } => {
                write!(f, "U_K inverse undefined: y = {y} below left limit {lower_limit}")?;
                if let Some(d) = min_depth {
                    write!(f, " (defined once log-moneyness depth >= {d})")?;
                }
                Ok(())
            }
            Error::DomainAbove { y } => write!(f, "U_K inverse undefined: y = {y} >= 1"),
            Error::BoundInvalid { depth, h } => {
                write!(f, "bound undefined: L + H < 0 (L = {depth}, H = {h})")
            }
            Error::Quadrature { estimate, error, intervals } => write!(
                f,
                "quadrature did not converge: estimate {estimate}, error {error}, {intervals} intervals"
            ),
            Error::Root { lo, hi, iterations } => {
                write!(f, "root search failed on [{lo}, {hi}] after {iterations} iterations")
            }
            Error::MissingEvaluator(name) => write!(f, "model has no {name} evaluator"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn ensure(cond: bool, what: &'static str, value: f64) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
