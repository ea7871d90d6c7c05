//! Constant-elasticity-of-variance model `dS = sigma S^rho dW`, `0 < rho < 1`,
//! absorbed at zero.
//!
//! With `D = T sigma^2 (1-rho)^2` and `a = 1/(2(1-rho))` the terminal law has
//! mass `1 - P(a, s0^(2(1-rho)) / (2D))` at zero and density
//!
//! ```text
//! c x^(1/2 - 2 rho) exp(-x^(2(1-rho)) / (2D)) I_a(s0^(1-rho) x^(1-rho) / D),
//! c = sqrt(s0) / (T sigma^2 (1-rho)) exp(-s0^(2(1-rho)) / (2D)).
//! ```
//!
//! Integrals run in `v = x^(1-rho)`, where the integrand is smooth at the
//! origin (it vanishes linearly) and Gaussian-like around `v0 = s0^(1-rho)`
//! with width `sqrt(D)`.

use crate::blackscholes::{implied_vol, MarketSlice, OptionQuote, Vol};
use crate::error::{ensure, Result};
use crate::model::AtomModel;
use crate::quad::{integrate_points, QuadResult, Tolerance};
use crate::specfun::{ln_bessel_i_scaled, reg_inc_gamma_upper, BesselArgs, GammaArgs, Probability};
use libm::{exp, lgamma, log, pow, sqrt};

/// Tail cut: the Gaussian factor is below `1e-20` of its peak beyond it.
const LN_TAIL: f64 = 46.051_701_859_880_914;
const MAX_INTERVALS: usize = 4000;
const TOL: Tolerance = Tolerance::new(1e-300, 1e-12);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevParams {
    s0: f64,
    sigma: f64,
    rho: f64,
    t: f64,
}

impl CevParams {
    /// `sigma = 0` is accepted (a constant path); the distribution needs
    /// `sigma > 0`.
    pub fn new(s0: f64, sigma: f64, rho: f64, t: f64) -> Result<Self> {
        ensure(s0 > 0.0 && s0.is_finite(), "CEV spot must be positive", s0)?;
        ensure(sigma >= 0.0 && sigma.is_finite(), "CEV sigma must be non-negative", sigma)?;
        ensure(rho > 0.0 && rho < 1.0, "CEV elasticity must lie in (0, 1)", rho)?;
        ensure(t > 0.0 && t.is_finite(), "maturity must be positive", t)?;
        Ok(CevParams { s0, sigma, rho, t })
    }

    #[inline]
    pub fn s0(&self) -> f64 {
        self.s0
    }
    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }
    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn slice(&self) -> MarketSlice {
        MarketSlice::new(self.s0, self.t).expect("validated in CevParams::new")
    }

    /// Shape and argument of the incomplete gamma function in the mass formula.
    pub fn gamma_args(&self) -> GammaArgs {
        let one_m = 1.0 - self.rho;
        let d = self.t * self.sigma * self.sigma * one_m * one_m;
        GammaArgs { a: 0.5 / one_m, y: pow(self.s0, 2.0 * one_m) / (2.0 * d) }
    }
}

/// `m_T = 1 - P(a, y)`.
pub fn mass_at_zero(params: &CevParams) -> Probability {
    let g = params.gamma_args();
    if !g.y.is_finite() {
        return Probability::new(0.0).expect("zero is a probability");
    }
    reg_inc_gamma_upper(g)
}

/// Terminal law of the CEV model with precomputed constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevDistribution {
    params: CevParams,
    mass: f64,
    one_m: f64,
    order: f64,
    d: f64,
    v0: f64,
    // log of sqrt(s0) / (T sigma^2 (1-rho)); the exp(-y) factor is folded
    // into the Gaussian term
    ln_c0: f64,
    v_max: f64,
}

impl CevDistribution {
    pub fn new(params: CevParams) -> Result<Self> {
        ensure(params.sigma > 0.0, "CEV distribution needs sigma > 0", params.sigma)?;
        let one_m = 1.0 - params.rho;
        let d = params.t * params.sigma * params.sigma * one_m * one_m;
        let v0 = pow(params.s0, one_m);
        let ln_c0 = 0.5 * log(params.s0) - log(params.t * params.sigma * params.sigma * one_m);
        // a little beyond the 1e-20 point to absorb the polynomial factors
        let v_max = v0 + sqrt(2.0 * d * (LN_TAIL + 10.0)) * 1.25;
        Ok(CevDistribution {
            params,
            mass: mass_at_zero(&params).value(),
            one_m,
            order: 0.5 / one_m,
            d,
            v0,
            ln_c0,
            v_max,
        })
    }

    #[inline]
    pub fn params(&self) -> &CevParams {
        &self.params
    }

    #[inline]
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Density prefactor `c`.
    pub fn prefactor(&self) -> f64 {
        exp(self.ln_c0 - 0.5 * self.v0 * self.v0 / self.d)
    }

    fn ln_bessel_part(&self, v: f64) -> f64 {
        let z = self.v0 * v / self.d;
        ln_bessel_i_scaled(BesselArgs { order: self.order, argument: z }).unwrap_or(f64::NEG_INFINITY)
    }

    /// `ln` of the density at `x`; the three exponentials are merged into
    /// `-(v - v0)^2 / (2D)` before exponentiation.
    pub fn ln_density(&self, x: f64) -> Result<f64> {
        ensure(x > 0.0 && x.is_finite(), "density needs x > 0", x)?;
        let v = pow(x, self.one_m);
        let dv = v - self.v0;
        Ok(self.ln_c0 + (0.5 - 2.0 * self.params.rho) * log(x) - 0.5 * dv * dv / self.d + self.ln_bessel_part(v))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.ln_density(x).map(exp)
    }

    /// Density of `v = x^(1-rho)`.
    fn v_density(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let ln_x = log(v) / self.one_m;
        let dv = v - self.v0;
        exp(self.ln_c0 - log(self.one_m) + (0.5 - self.params.rho) * ln_x - 0.5 * dv * dv / self.d
            + self.ln_bessel_part(v))
    }

    fn x_of(&self, v: f64) -> f64 {
        pow(v, 1.0 / self.one_m)
    }

    /// Breakpoints on `[0, hi]` at the bulk of the `v` law.
    fn partition(&self, hi: f64) -> ([f64; 6], usize) {
        let w = sqrt(self.d);
        let mut pts = [0.0; 6];
        let mut n = 1;
        for p in [self.v0 - 3.0 * w, self.v0 - w, self.v0 + w, self.v0 + 3.0 * w] {
            if p > pts[n - 1] && p < hi {
                pts[n] = p;
                n += 1;
            }
        }
        pts[n] = hi;
        (pts, n + 1)
    }

    fn integrate_v<F: FnMut(f64) -> f64>(&self, f: F, hi: f64, tol: Tolerance) -> Result<QuadResult> {
        let (pts, n) = self.partition(hi);
        integrate_points(f, &pts[..n], tol, MAX_INTERVALS)
    }

    /// `c~` in `D~(x) ~ c~ x^(1-2 rho)` as `x -> 0`.
    pub fn small_x_constant(&self) -> f64 {
        let a = self.order;
        exp(self.ln_c0 - 0.5 * self.v0 * self.v0 / self.d + a * log(0.5 * self.v0 / self.d) - lgamma(a + 1.0))
    }

    /// `p~_T(K) = int_0^K D~(x) dx`.
    pub fn p_tilde(&self, strike: f64) -> Result<Probability> {
        ensure(strike > 0.0, "p_tilde needs K > 0", strike)?;
        let hi = pow(strike, self.one_m).min(self.v_max);
        let r = self.integrate_v(|v| self.v_density(v), hi, TOL)?;
        Ok(Probability::saturating(r.value))
    }

    /// `p_T(K) = m_T + p~_T(K)`.
    pub fn cdf(&self, strike: f64) -> Result<Probability> {
        Ok(Probability::saturating(self.mass + self.p_tilde(strike)?.value()))
    }

    /// Put price `K m_T + int_0^K (K - x) D~(x) dx`.
    pub fn put_price(&self, strike: f64) -> Result<f64> {
        ensure(strike > 0.0 && strike.is_finite(), "put needs K > 0", strike)?;
        let hi = pow(strike, self.one_m);
        let cont = if hi >= self.v_max {
            // past the cut (K - x)^+ = K - x on all of the retained support
            let r = self.integrate_v(|v| (strike - self.x_of(v)) * self.v_density(v), self.v_max, TOL)?;
            r.value
        } else {
            self.integrate_v(|v| (strike - self.x_of(v)).max(0.0) * self.v_density(v), hi, TOL)?.value
        };
        Ok(strike * self.mass + cont)
    }

    /// `int_0^inf D~(x) dx`, which equals `1 - m_T`.
    pub fn continuous_mass(&self) -> Result<f64> {
        Ok(self.integrate_v(|v| self.v_density(v), self.v_max, TOL)?.value)
    }

    /// `int_0^inf x D~(x) dx`, which equals `s0`.
    pub fn first_moment(&self) -> Result<f64> {
        Ok(self.integrate_v(|v| self.x_of(v) * self.v_density(v), self.v_max, TOL)?.value)
    }

    /// Black–Scholes implied volatility of the put at `K < s0`.
    pub fn exact_smile(&self, strike: f64) -> Result<Vol> {
        ensure(strike > 0.0 && strike < self.params.s0, "exact smile needs 0 < K < s0", strike)?;
        let p = self.put_price(strike)?;
        implied_vol(&self.params.slice(), OptionQuote::put(strike, p))
    }

    /// Wing-formula view with spot normalized to one.
    pub fn atom_model(&self) -> Result<CevAtomModel> {
        ensure(self.mass > 0.0 && self.mass < 1.0, "atom mass must lie in (0, 1)", self.mass)?;
        Ok(CevAtomModel { dist: *self })
    }
}

/// [`CevDistribution`] seen through [`AtomModel`]: strikes and prices in
/// units of `s0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevAtomModel {
    dist: CevDistribution,
}

impl CevAtomModel {
    pub fn distribution(&self) -> &CevDistribution {
        &self.dist
    }
}

impl AtomModel for CevAtomModel {
    fn mass(&self) -> f64 {
        self.dist.mass
    }

    fn p_tilde(&self, u: f64) -> Option<Result<f64>> {
        let s0 = self.dist.params.s0;
        Some(self.dist.p_tilde(u * s0).map(f64::from))
    }

    fn put(&self, strike: f64) -> Option<Result<f64>> {
        let s0 = self.dist.params.s0;
        Some(self.dist.put_price(strike * s0).map(|p| p / s0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sec5() -> CevDistribution {
        CevDistribution::new(CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap()).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(CevParams::new(0.0, 0.2, 0.6, 1.0).is_err());
        assert!(CevParams::new(1.0, 0.2, 1.0, 1.0).is_err());
        assert!(CevParams::new(1.0, -0.1, 0.5, 1.0).is_err());
        assert!(CevDistribution::new(CevParams::new(1.0, 0.0, 0.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn mass_closed_form_at_shape_one() {
        let p = CevParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        // D = 1/4, so the gamma argument is 2
        assert!((mass_at_zero(&p).value() - exp(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn mass_vanishes_for_short_maturity() {
        let p = CevParams::new(0.05, 0.2, 0.6, 1e-6).unwrap();
        assert!(mass_at_zero(&p).value() < 1e-300);
    }

    #[test]
    fn small_x_asymptote() {
        let d = sec5();
        let x = 1e-8;
        let r = d.density(x).unwrap() / (d.small_x_constant() * pow(x, 1.0 - 2.0 * 0.6));
        assert!((r - 1.0).abs() < 1e-4, "{r}");
    }

    #[test]
    fn half_elasticity_density_is_flat_near_zero() {
        let d = CevDistribution::new(CevParams::new(1.0, 0.5, 0.5, 1.0).unwrap()).unwrap();
        let r = d.density(1e-9).unwrap() / d.small_x_constant();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn put_over_strike_tends_to_mass() {
        let d = sec5();
        let k = 0.05 * exp(-14.0);
        let r = d.put_price(k).unwrap() / k;
        assert!((r / d.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn put_stays_in_band() {
        let d = sec5();
        for k in [1e-4, 0.01, 0.04, 0.05, 0.2] {
            let p = d.put_price(k).unwrap();
            assert!(p > k * d.mass() && p < k, "K={k} P={p}");
        }
    }

    #[test]
    fn p_tilde_saturates() {
        let d = sec5();
        let p = d.p_tilde(10.0).unwrap().value();
        assert!((p + d.mass() - 1.0).abs() < 1e-10);
    }
}
