//! Small-strike implied-volatility asymptotics for price models whose
//! terminal law has an atom at zero, with a CEV backend that serves as an
//! exact oracle and a Monte Carlo simulator for cross-checks.
//!
//! The crate is `no_std` (it needs `alloc`); all elementary functions come
//! from `libm`.

#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod blackscholes;
pub mod cev;
mod error;
pub mod model;
pub mod montecarlo;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod specfun;

pub use asymptotics::{BoundsConfig, Sign, SmileApproximation, StrikeCdf};
pub use blackscholes::{MarketSlice, OptionKind, OptionQuote, Vol};
pub use cev::{CevAtomModel, CevDistribution, CevParams};
pub use error::{Error, Result};
pub use model::{AtomModel, AtomOnly, CustomAtomModel, TabulatedModel};
pub use montecarlo::{McConfig, McSmileEstimate, TerminalSample};
pub use specfun::Probability;
