//! Small-strike implied-volatility asymptotics for models with an atom at zero.
//!
//! The three-term formulas replace the normal quantile `N^-1(m_T)` of the
//! classical two-term expansion by the inverse of the strike-dependent
//! function
//!
//! ```text
//! U_K(x) = N(x) - exp(-x^2/2) / (2 sqrt(pi) sqrt(log K)),   K > 1,
//! ```
//!
//! which is strictly increasing on `[-sqrt(2 log K), inf)`. With
//! `L = log(x0/K)` and `u` the inverse of `U_{x0/K}` at `G(x0/K)`, `p_T(K/x0)`
//! or `m_T`, each variant reads
//!
//! ```text
//! I(K) ~ sqrt(2/T) sqrt(L) + u / sqrt(T) + sqrt(2) u^2 / (4 sqrt(T) sqrt(L)).
//! ```
//!
//! Everything is parameterized by the depth `L` rather than by the strike so
//! that depths far beyond `exp(709)` remain usable.

use crate::blackscholes::{MarketSlice, Vol};
use crate::error::{ensure, Error, Result};
use crate::model::{p_total, resolve_g, AtomModel};
use crate::roots::bisect_increasing;
use crate::specfun::{exp_neg_half_sq, ncdf, norm_cdf_inv, FRAC_1_SQRT_PI};
use libm::{log, sqrt};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_TOL: f64 = 1e-13;
const INV_MAX_ITER: usize = 200;

/// `U_K` for a fixed `K = exp(depth)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeCdf {
    depth: f64,
    // 1 / (2 sqrt(pi) sqrt(log K))
    gap: f64,
}

impl StrikeCdf {
    /// From `log K`.
    pub fn at_depth(depth: f64) -> Result<Self> {
        ensure(depth > 0.0 && depth.is_finite(), "U_K needs K > 1 (log K > 0)", depth)?;
        Ok(StrikeCdf { depth, gap: 0.5 * FRAC_1_SQRT_PI / sqrt(depth) })
    }

    pub fn new(big_k: f64) -> Result<Self> {
        ensure(big_k > 1.0, "U_K needs K > 1", big_k)?;
        Self::at_depth(log(big_k))
    }

    #[inline]
    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn eval(&self, x: f64) -> f64 {
        ncdf(x) - self.gap * exp_neg_half_sq(x)
    }

    /// `-sqrt(2 log K)`, left end of the monotone branch.
    pub fn left_end(&self) -> f64 {
        -sqrt(2.0 * self.depth)
    }

    /// `U_K(-sqrt(2 log K))`; always negative.
    pub fn left_value(&self) -> f64 {
        self.eval(self.left_end())
    }

    /// `U_K(0) = 1/2 - 1/(2 sqrt(pi) sqrt(log K))`: the inverse is positive
    /// exactly when `y` exceeds this.
    pub fn sign_threshold(&self) -> f64 {
        0.5 - self.gap
    }

    /// `(U_K)^-1(y)` by bisection on the monotone branch.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return Err(Error::Domain { what: "U_K inverse of NaN", value: y });
        }
        if y >= 1.0 {
            return Err(Error::DomainAbove { y });
        }
        let lo = self.left_end();
        let lower_limit = self.eval(lo);
        if y < lower_limit {
            return Err(Error::DomainBelow { y, lower_limit, min_depth: None });
        }
        // U_K < N pointwise, so the root lies above N^-1(y); shifting the
        // target by the largest possible gap gives a safe upper bracket.
        let target = (y + self.gap).min(1.0 - 1e-16);
        let mut hi = if target <= 0.0 { 0.0 } else { norm_cdf_inv(target)? + 1.0 };
        hi = hi.max(lo + 1.0);
        while self.eval(hi) < y {
            hi += 1.0;
        }
        Ok(bisect_increasing(|x| self.eval(x) - y, lo, hi, INV_TOL, INV_MAX_ITER))
    }
}

/// `U_K(x)`.
pub fn u_k(x: f64, big_k: f64) -> Result<f64> {
    Ok(StrikeCdf::new(big_k)?.eval(x))
}

/// `(U_K)^-1(y)`.
pub fn u_k_inv(y: f64, big_k: f64) -> Result<f64> {
    StrikeCdf::new(big_k)?.inverse(y)
}

/// Tunables of the two-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsConfig {
    epsilon: f64,
}

impl BoundsConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        ensure(epsilon > 0.0 && epsilon.is_finite(), "bounds epsilon must be positive", epsilon)?;
        Ok(BoundsConfig { epsilon })
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { epsilon: 0.01 }
    }
}

/// Log-moneyness depth `L = log(x0/K)`; wing formulas require `K < x0`.
pub fn wing_depth(slice: &MarketSlice, strike: f64) -> Result<f64> {
    ensure(strike > 0.0 && strike.is_finite(), "strike must be positive", strike)?;
    ensure(strike < slice.x0(), "wing formulas need K < x0", strike)?;
    Ok(log(slice.x0() / strike))
}

/// `sqrt(2/T) sqrt(L) + u/sqrt(T) + sqrt(2) u^2 / (4 sqrt(T) sqrt(L))`.
pub fn three_term_value(t: f64, depth: f64, u: f64) -> f64 {
    let sl = sqrt(depth);
    (SQRT_2 * sl + u + 0.25 * SQRT_2 * u * u / sl) / sqrt(t)
}

/// Leading-order formula from the put price alone (spot rescaled to one):
/// `sqrt(2/T) (sqrt(log(1/P)) - sqrt(log(K/P)))`.
pub fn smile_leading(slice: &MarketSlice, strike: f64, put_price: f64) -> Result<Vol> {
    wing_depth(slice, strike)?;
    ensure(put_price > 0.0 && put_price < strike, "leading formula needs 0 < P < K", put_price)?;
    let k = strike / slice.x0();
    let p = put_price / slice.x0();
    let a = -log(p);
    let b = log(k / p);
    ensure(b > 0.0, "leading formula needs K > P", b)?;
    Vol::new(SQRT_2 / sqrt(slice.t()) * (sqrt(a) - sqrt(b)))
}

/// Value of a three-term formula together with the inverse it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeTerm {
    pub vol: Vol,
    pub u: f64,
    pub argument: f64,
}

fn three_term_from(slice: &MarketSlice, depth: f64, y: f64) -> Result<ThreeTerm> {
    let u = StrikeCdf::at_depth(depth)?.inverse(y)?;
    Ok(ThreeTerm { vol: Vol::new(three_term_value(slice.t(), depth, u))?, u, argument: y })
}

/// Three-term formula driven by `G(x0/K)`, with `G` resolved from the model
/// (explicit `G`, else from puts, else `m_T`).
pub fn smile_three_term_g<M: AtomModel + ?Sized>(slice: &MarketSlice, strike: f64, model: &M) -> Result<ThreeTerm> {
    let depth = wing_depth(slice, strike)?;
    let (g, _) = resolve_g(model, depth)?;
    three_term_from(slice, depth, g)
}

/// Three-term formula driven by `p_T(K/x0) = m_T + p~_T(K/x0)`.
pub fn smile_three_term_pt<M: AtomModel + ?Sized>(slice: &MarketSlice, strike: f64, model: &M) -> Result<ThreeTerm> {
    let depth = wing_depth(slice, strike)?;
    let p = p_total(model, strike / slice.x0())?;
    three_term_from(slice, depth, p)
}

/// Three-term formula driven by the atom mass alone.
pub fn smile_three_term_atom(slice: &MarketSlice, strike: f64, mass: f64) -> Result<ThreeTerm> {
    ensure(mass > 0.0 && mass < 1.0, "atom mass must lie in (0, 1)", mass)?;
    let depth = wing_depth(slice, strike)?;
    three_term_from(slice, depth, mass)
}

/// Two-term formula with `N^-1(m_T)` plus its partial third term; the
/// residual function is not evaluated.
pub fn smile_dmhj(slice: &MarketSlice, strike: f64, mass: f64) -> Result<Vol> {
    let depth = wing_depth(slice, strike)?;
    let a = norm_cdf_inv(mass)?;
    Vol::new(three_term_value(slice.t(), depth, a))
}

/// Same formula truncated after the second term.
pub fn smile_two_term_atom(slice: &MarketSlice, strike: f64, mass: f64) -> Result<Vol> {
    let depth = wing_depth(slice, strike)?;
    let u = StrikeCdf::at_depth(depth)?.inverse(mass)?;
    Vol::new((SQRT_2 * sqrt(depth) + u) / sqrt(slice.t()))
}

/// Majorant of the classical expansion's residual,
/// `sqrt(2)/(2 sqrt T) L^(-1/2) + sqrt(2 pi / T) exp(N^-1(m_T)^2 / 2) psi`,
/// where `psi = G - m_T` at the same depth.
pub fn dmhj_residual_majorant(t: f64, depth: f64, mass: f64, psi: f64) -> Result<f64> {
    let a = norm_cdf_inv(mass)?;
    let st = sqrt(t);
    Ok(0.5 * SQRT_2 / (st * sqrt(depth))
        + sqrt(2.0 * core::f64::consts::PI) / st * libm::exp(0.5 * a * a) * psi)
}

fn sqrt_form(t: f64, depth: f64, u: f64) -> Result<Vol> {
    let h = u * u + u * sqrt(u * u + 2.0 * depth);
    let arg = depth + h;
    if arg < 0.0 {
        return Err(Error::BoundInvalid { depth, h });
    }
    Vol::new(SQRT_2 / sqrt(t) * sqrt(arg))
}

/// `G~_eps(K) = G(K) - (3 N^-1(m_T)^2 + 2 + eps) / (8 sqrt(pi) (log K)^(3/2))`.
fn g_tilde(g: f64, mass: f64, depth: f64, eps: f64) -> Result<f64> {
    let a = norm_cdf_inv(mass)?;
    Ok(g - (3.0 * a * a + 2.0 + eps) * 0.125 * FRAC_1_SQRT_PI / (depth * sqrt(depth)))
}

/// Upper bound `sqrt(2/T) sqrt(L + H_1)` with
/// `H_1 = u^2 + u sqrt(u^2 + 2L)`, `u = (U_{x0/K})^-1(G(x0/K))`. This is also
/// the square-root-form approximation, accurate to `O(L^(-3/2))`.
pub fn smile_upper_bound<M: AtomModel + ?Sized>(slice: &MarketSlice, strike: f64, model: &M) -> Result<Vol> {
    let depth = wing_depth(slice, strike)?;
    let (g, _) = resolve_g(model, depth)?;
    let u = StrikeCdf::at_depth(depth)?.inverse(g)?;
    sqrt_form(slice.t(), depth, u)
}

fn lower_bound_at_depth<M: AtomModel + ?Sized>(t: f64, depth: f64, model: &M, cfg: BoundsConfig) -> Result<Vol> {
    let (g, _) = resolve_g(model, depth)?;
    let gt = g_tilde(g, model.mass(), depth, cfg.epsilon)?;
    let u = StrikeCdf::at_depth(depth)?.inverse(gt)?;
    sqrt_form(t, depth, u)
}

const MAX_SEARCH_DEPTH: f64 = 1e6;

/// Smallest depth at or beyond `from` where the lower bound's argument is
/// admissible, or `None` if none is found below `MAX_SEARCH_DEPTH`.
fn lower_bound_min_depth<M: AtomModel + ?Sized>(model: &M, from: f64, cfg: BoundsConfig) -> Option<f64> {
    let defined = |depth: f64| -> Option<bool> {
        let (g, _) = resolve_g(model, depth).ok()?;
        let gt = g_tilde(g, model.mass(), depth, cfg.epsilon).ok()?;
        Some(gt >= StrikeCdf::at_depth(depth).ok()?.left_value())
    };
    let mut lo = from;
    let mut hi = from;
    loop {
        hi *= 2.0;
        if hi > MAX_SEARCH_DEPTH {
            return None;
        }
        if defined(hi)? {
            break;
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if defined(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-6 * hi {
            break;
        }
    }
    Some(hi)
}

/// Lower bound `sqrt(2/T) sqrt(L + H_2)` with `u` taken at `G~_eps(x0/K)`.
///
/// When `G~_eps` falls below the invertible range the error carries the
/// smallest depth at which the bound becomes defined.
pub fn smile_lower_bound<M: AtomModel + ?Sized>(
    slice: &MarketSlice,
    strike: f64,
    model: &M,
    cfg: BoundsConfig,
) -> Result<Vol> {
    let depth = wing_depth(slice, strike)?;
    match lower_bound_at_depth(slice.t(), depth, model, cfg) {
        Err(Error::DomainBelow { y, lower_limit, .. }) => Err(Error::DomainBelow {
            y,
            lower_limit,
            min_depth: lower_bound_min_depth(model, depth, cfg),
        }),
        other => other,
    }
}

/// Two-sided estimate `(lower, upper)` of the implied volatility, valid for
/// strikes below a model-dependent threshold.
pub fn smile_bounds<M: AtomModel + ?Sized>(
    slice: &MarketSlice,
    strike: f64,
    model: &M,
    cfg: BoundsConfig,
) -> Result<(Vol, Vol)> {
    let upper = smile_upper_bound(slice, strike, model)?;
    let lower = smile_lower_bound(slice, strike, model, cfg)?;
    debug_assert!(lower <= upper);
    Ok((lower, upper))
}

/// `sqrt(2) sqrt(log(1/K)) [(U_{1/K})^-1(m_T) - N^-1(m_T)]` at
/// `log(1/K) = depth`; tends to one as the depth grows.
pub fn estims_ratio_at_depth(mass: f64, depth: f64) -> Result<f64> {
    ensure(mass > 0.0 && mass < 1.0, "atom mass must lie in (0, 1)", mass)?;
    let cdf = StrikeCdf::at_depth(depth)?;
    let floor = ncdf(cdf.left_end());
    if mass <= floor {
        return Err(Error::DomainBelow { y: mass, lower_limit: floor, min_depth: None });
    }
    let u = cdf.inverse(mass)?;
    Ok(SQRT_2 * sqrt(depth) * (u - norm_cdf_inv(mass)?))
}

/// [`estims_ratio_at_depth`] at strike `K` (spot one), `0 < K < 1`.
pub fn estims_ratio(mass: f64, strike: f64) -> Result<f64> {
    ensure(strike > 0.0 && strike < 1.0, "estims ratio needs 0 < K < 1", strike)?;
    estims_ratio_at_depth(mass, -log(strike))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

/// Sign of `(U_{1/K})^-1(m_T)` for `m_T < 1/2`, decided by comparing `m_T`
/// with `1/2 - 1/(2 sqrt(pi) sqrt(log(1/K)))`.
pub fn sign_classify_at_depth(mass: f64, depth: f64) -> Result<Sign> {
    ensure(mass > 0.0 && mass < 0.5, "sign trichotomy needs 0 < m_T < 1/2", mass)?;
    let cdf = StrikeCdf::at_depth(depth)?;
    if mass <= cdf.left_value() {
        return Err(Error::DomainBelow { y: mass, lower_limit: cdf.left_value(), min_depth: None });
    }
    let threshold = cdf.sign_threshold();
    Ok(if mass > threshold {
        Sign::Positive
    } else if mass == threshold {
        Sign::Zero
    } else {
        Sign::Negative
    })
}

pub fn sign_classify(mass: f64, strike: f64) -> Result<Sign> {
    ensure(strike > 0.0 && strike < 1.0, "sign trichotomy needs 0 < K < 1", strike)?;
    sign_classify_at_depth(mass, -log(strike))
}

/// All wing approximations at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmileApproximation {
    pub strike: f64,
    pub depth: f64,
    pub leading: Option<Vol>,
    pub two_term_atom: Vol,
    pub three_term_atom: Vol,
    pub three_term_pt: Option<Vol>,
    pub three_term_g: Vol,
    pub dmhj: Vol,
    pub lower: Option<Vol>,
    pub upper: Option<Vol>,
    /// `(U_{x0/K})^-1(G(x0/K))`.
    pub u_inv_value: f64,
}

/// Evaluates every formula at `strike`. Formulas whose evaluator is missing
/// or whose argument is inadmissible come back as `None`; failures of the
/// mandatory atom-only formulas are errors.
pub fn approximate<M: AtomModel + ?Sized>(
    slice: &MarketSlice,
    strike: f64,
    model: &M,
    cfg: BoundsConfig,
) -> Result<SmileApproximation> {
    let depth = wing_depth(slice, strike)?;
    let mass = model.mass();
    let leading = match model.put(strike / slice.x0()) {
        Some(p) => smile_leading(slice, strike, p? * slice.x0()).ok(),
        None => None,
    };
    let g = smile_three_term_g(slice, strike, model)?;
    let pt = if model.p_tilde(0.5).is_some() {
        Some(smile_three_term_pt(slice, strike, model)?.vol)
    } else {
        None
    };
    let upper = sqrt_form(slice.t(), depth, g.u).ok();
    let lower = lower_bound_at_depth(slice.t(), depth, model, cfg).ok();
    Ok(SmileApproximation {
        strike,
        depth,
        leading,
        two_term_atom: smile_two_term_atom(slice, strike, mass)?,
        three_term_atom: smile_three_term_atom(slice, strike, mass)?.vol,
        three_term_pt: pt,
        three_term_g: g.vol,
        dmhj: smile_dmhj(slice, strike, mass)?,
        lower,
        upper,
        u_inv_value: g.u,
    })
}
