//! Zero-rate Black–Scholes pricing and implied-volatility inversion.
//!
//! Out-of-the-money prices are assembled from Mills ratios,
//! `P = K phi(d2) [M(d2) - M(d1)]`, which uses the identity
//! `x0 phi(d1) = K phi(d2)` and never forms `K N(-d2)` and `x0 N(-d1)`
//! separately. Inversion happens on the logarithm of the out-of-the-money
//! price, which stays well conditioned in the deep wing where vega vanishes.

use crate::error::{ensure, Error, Result};
use crate::roots::brent;
use crate::specfun::{mills_ratio, ncdf, norm_pdf, LN_SQRT_2PI};
use libm::{exp, log, sqrt};

/// Spot and maturity of the pricing context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSlice {
    x0: f64,
    t: f64,
}

impl MarketSlice {
    pub fn new(x0: f64, t: f64) -> Result<Self> {
        ensure(x0 > 0.0 && x0.is_finite(), "spot must be positive", x0)?;
        ensure(t > 0.0 && t.is_finite(), "maturity must be positive", t)?;
        Ok(MarketSlice { x0, t })
    }

    #[inline]
    pub fn x0(&self) -> f64 {
        self.x0
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Same maturity, spot normalized to one.
    pub fn normalized(&self) -> MarketSlice {
        MarketSlice { x0: 1.0, t: self.t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub strike: f64,
    pub kind: OptionKind,
    pub price: f64,
}

impl OptionQuote {
    pub fn put(strike: f64, price: f64) -> Self {
        OptionQuote { strike, kind: OptionKind::Put, price }
    }

    pub fn call(strike: f64, price: f64) -> Self {
        OptionQuote { strike, kind: OptionKind::Call, price }
    }
}

/// Annualized Black–Scholes volatility.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Vol(f64);

impl Vol {
    pub fn new(sigma: f64) -> Result<Self> {
        ensure(sigma > 0.0 && sigma.is_finite(), "volatility must be positive", sigma)?;
        Ok(Vol(sigma))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Open no-arbitrage band `(lower, upper)` for a quote of the given kind.
pub fn price_bounds(slice: &MarketSlice, strike: f64, kind: OptionKind) -> (f64, f64) {
    match kind {
        OptionKind::Call => ((slice.x0 - strike).max(0.0), slice.x0),
        OptionKind::Put => ((strike - slice.x0).max(0.0), strike),
    }
}

pub fn d1_d2(slice: &MarketSlice, strike: f64, sigma: Vol) -> (f64, f64) {
    let sd = sigma.0 * sqrt(slice.t);
    let d1 = (log(slice.x0 / strike) + 0.5 * sd * sd) / sd;
    (d1, d1 - sd)
}

/// Out-of-the-money option price: the put for `K < x0`, the call otherwise.
fn otm_price(slice: &MarketSlice, strike: f64, sigma: f64) -> f64 {
    let (d1, d2) = d1_d2(slice, strike, Vol(sigma));
    if strike < slice.x0 {
        if d2 >= 1.0 {
            strike * norm_pdf(d2) * (mills_ratio(d2) - mills_ratio(d1))
        } else {
            strike * ncdf(-d2) - slice.x0 * ncdf(-d1)
        }
    } else if d1 <= -1.0 {
        slice.x0 * norm_pdf(d1) * (mills_ratio(-d1) - mills_ratio(-d2))
    } else {
        slice.x0 * ncdf(d1) - strike * ncdf(d2)
    }
}

/// Natural logarithm of the out-of-the-money price, finite even where the
/// price itself underflows. Returns `-inf` only when the Mills-ratio
/// difference rounds to zero.
fn ln_otm_price(slice: &MarketSlice, strike: f64, sigma: f64) -> f64 {
    let (d1, d2) = d1_d2(slice, strike, Vol(sigma));
    if strike < slice.x0 && d2 >= 1.0 {
        let diff = mills_ratio(d2) - mills_ratio(d1);
        if diff <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log(strike) - 0.5 * d2 * d2 - LN_SQRT_2PI + log(diff)
    } else if strike >= slice.x0 && d1 <= -1.0 {
        let diff = mills_ratio(-d1) - mills_ratio(-d2);
        if diff <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log(slice.x0) - 0.5 * d1 * d1 - LN_SQRT_2PI + log(diff)
    } else {
        log(otm_price(slice, strike, sigma))
    }
}

/// Black–Scholes price with zero rates.
pub fn bs_price(slice: &MarketSlice, strike: f64, sigma: Vol, kind: OptionKind) -> f64 {
    let otm = otm_price(slice, strike, sigma.0);
    let put_side = strike < slice.x0;
    match (kind, put_side) {
        (OptionKind::Put, true) | (OptionKind::Call, false) => otm,
        // Parity: C - P = x0 - K.
        (OptionKind::Call, true) => otm + slice.x0 - strike,
        (OptionKind::Put, false) => otm + strike - slice.x0,
    }
}

/// `ln` of the out-of-the-money price at `strike` (put below spot, call at or
/// above).
pub fn bs_ln_otm_price(slice: &MarketSlice, strike: f64, sigma: Vol) -> f64 {
    ln_otm_price(slice, strike, sigma.0)
}

/// `d price / d sigma`, identical for calls and puts.
pub fn bs_vega(slice: &MarketSlice, strike: f64, sigma: Vol) -> f64 {
    let (d1, _) = d1_d2(slice, strike, sigma);
    slice.x0 * norm_pdf(d1) * sqrt(slice.t)
}

const SIGMA_MIN: f64 = 1e-9;
const SIGMA_START: f64 = 10.0;
const SIGMA_CEILING: f64 = 1e6;

/// Solves `ln otm(sigma) = ln_target` for sigma.
fn invert_ln_otm(slice: &MarketSlice, strike: f64, ln_target: f64) -> Result<Vol> {
    let f = |s: f64| ln_otm_price(slice, strike, s) - ln_target;
    let mut hi = SIGMA_START;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > SIGMA_CEILING {
            return Err(Error::Root { lo: SIGMA_MIN, hi, iterations: 0 });
        }
    }
    let lo = SIGMA_MIN;
    if f(lo) >= 0.0 {
        // Price is at or below the smallest volatility the solver supports.
        return Err(Error::Root { lo, hi, iterations: 0 });
    }
    brent(f, lo, hi, 0.0, 300).map(Vol)
}

/// Implied volatility of a quote.
///
/// The quote is mapped to its out-of-the-money counterpart by parity before
/// inversion. Prices on or outside the no-arbitrage band fail with
/// [`Error::NoSolution`].
pub fn implied_vol(slice: &MarketSlice, quote: OptionQuote) -> Result<Vol> {
    ensure(quote.strike > 0.0 && quote.strike.is_finite(), "strike must be positive", quote.strike)?;
    let (lower, upper) = price_bounds(slice, quote.strike, quote.kind);
    if !(quote.price > lower && quote.price < upper) {
        return Err(Error::NoSolution { price: quote.price, lower, upper });
    }
    let put_side = quote.strike < slice.x0;
    let otm = match (quote.kind, put_side) {
        (OptionKind::Put, true) | (OptionKind::Call, false) => quote.price,
        (OptionKind::Call, true) => quote.price - (slice.x0 - quote.strike),
        (OptionKind::Put, false) => quote.price - (quote.strike - slice.x0),
    };
    if otm <= 0.0 {
        return Err(Error::NoSolution { price: quote.price, lower, upper });
    }
    invert_ln_otm(slice, quote.strike, log(otm))
}

/// Implied volatility from the logarithm of an out-of-the-money price, for
/// deep-wing prices below the smallest positive `f64`.
pub fn implied_vol_from_ln_otm(slice: &MarketSlice, strike: f64, ln_price: f64) -> Result<Vol> {
    ensure(strike > 0.0 && strike.is_finite(), "strike must be positive", strike)?;
    let cap = if strike < slice.x0 { strike } else { slice.x0 };
    if !(ln_price.is_finite() && ln_price < log(cap)) {
        return Err(Error::NoSolution { price: exp(ln_price), lower: 0.0, upper: cap });
    }
    invert_ln_otm(slice, strike, ln_price)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice() -> MarketSlice {
        MarketSlice::new(1.0, 1.2).unwrap()
    }

    #[test]
    fn d1_minus_d2_is_total_vol() {
        let s = MarketSlice::new(3.0, 0.7).unwrap();
        for (k, sig) in [(1.0, 0.2), (3.0, 1.1), (9.0, 0.05)] {
            let (d1, d2) = d1_d2(&s, k, Vol::new(sig).unwrap());
            assert!((d1 - d2 - sig * sqrt(0.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn at_the_money_is_symmetric() {
        let s = slice();
        let sig = Vol::new(0.4).unwrap();
        let (d1, d2) = d1_d2(&s, 1.0, sig);
        let half = 0.5 * 0.4 * sqrt(1.2);
        assert!((d1 - half).abs() < 1e-16 && (d2 + half).abs() < 1e-16);
        let c = bs_price(&s, 1.0, sig, OptionKind::Call);
        assert!((c - (2.0 * ncdf(half) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn tiny_vol_tends_to_intrinsic() {
        let s = slice();
        let v = Vol::new(1e-7).unwrap();
        assert!((bs_price(&s, 0.8, v, OptionKind::Call) - 0.2).abs() < 1e-15);
        assert!(bs_price(&s, 1.3, v, OptionKind::Call) < 1e-300);
        assert!((bs_price(&s, 1.3, v, OptionKind::Put) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn boundary_prices_have_no_solution() {
        let s = slice();
        assert!(matches!(implied_vol(&s, OptionQuote::call(0.5, 0.5)), Err(Error::NoSolution { .. })));
        assert!(matches!(implied_vol(&s, OptionQuote::call(0.5, 1.0)), Err(Error::NoSolution { .. })));
        assert!(matches!(implied_vol(&s, OptionQuote::put(0.5, 0.0)), Err(Error::NoSolution { .. })));
        assert!(matches!(implied_vol(&s, OptionQuote::put(0.5, 0.5)), Err(Error::NoSolution { .. })));
    }

    #[test]
    fn round_trip_both_kinds() {
        let s = slice();
        for k in [0.3, 0.9, 1.0, 1.4] {
            for kind in [OptionKind::Call, OptionKind::Put] {
                let p = bs_price(&s, k, Vol::new(0.37).unwrap(), kind);
                let v = implied_vol(&s, OptionQuote { strike: k, kind, price: p }).unwrap();
                assert!((v.value() - 0.37).abs() < 1e-9, "k={k} {kind:?} {}", v.value());
            }
        }
    }

    #[test]
    fn log_price_matches_price_where_representable() {
        let s = slice();
        for (k, sig) in [(0.01, 0.3), (0.2, 0.1), (5.0, 0.2), (0.9, 2.0)] {
            let v = Vol::new(sig).unwrap();
            let kind = if k < 1.0 { OptionKind::Put } else { OptionKind::Call };
            let p = bs_price(&s, k, v, kind);
            assert!((bs_ln_otm_price(&s, k, v) - log(p)).abs() < 1e-12, "k={k}");
        }
    }
}
