use proptest::prelude::*;

use wingsmile_core::asymptotics::{
    smile_bounds, smile_dmhj, smile_three_term_atom, BoundsConfig, StrikeCdf,
};
use wingsmile_core::blackscholes::{
    bs_ln_otm_price, bs_price, implied_vol, implied_vol_from_ln_otm,
};
use wingsmile_core::specfun::{
    bessel_i, gamma_fn, ncdf, norm_cdf_inv, norm_sf, reg_inc_gamma, BesselArgs, GammaArgs, SQRT_2PI,
};
use wingsmile_core::{AtomOnly, MarketSlice, OptionKind, OptionQuote, Vol};

const MATURITIES: [f64; 3] = [0.1, 1.2, 5.0];

/// Put below spot, call at or above: the side whose price stays representable.
fn round_trip(slice: &MarketSlice, strike: f64, sigma: f64) -> f64 {
    let v = Vol::new(sigma).unwrap();
    let kind = if strike < slice.x0() { OptionKind::Put } else { OptionKind::Call };
    let price = bs_price(slice, strike, v, kind);
    if price > 1e-290 {
        implied_vol(slice, OptionQuote { strike, kind, price }).unwrap().value()
    } else {
        implied_vol_from_ln_otm(slice, strike, bs_ln_otm_price(slice, strike, v)).unwrap().value()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bs_implied_vol_round_trip(sigma in 0.01f64..3.0, ln_k in -12.0f64..0.0, ti in 0usize..3) {
        let s = MarketSlice::new(1.0, MATURITIES[ti]).unwrap();
        let got = round_trip(&s, ln_k.exp(), sigma);
        prop_assert!((got - sigma).abs() <= 1e-8, "sigma {} k {} T {}: {}", sigma, ln_k, MATURITIES[ti], got);
    }

    #[test]
    fn u_k_inverse_round_trip_and_sign(y in 1e-6f64..0.999_999, depth in 0.05f64..40.0) {
        let c = StrikeCdf::at_depth(depth).unwrap();
        let x = c.inverse(y).unwrap();
        prop_assert!(x >= c.left_end());
        prop_assert!((c.eval(x) - y).abs() <= 1e-12);
        let margin = y - c.sign_threshold();
        if margin.abs() > 1e-12 {
            prop_assert_eq!(x > 0.0, margin > 0.0);
        }
    }
}

proptest! {
    #[test]
    fn normal_quantile_round_trip(p in 1e-8f64..(1.0 - 1e-8)) {
        let x = norm_cdf_inv(p).unwrap();
        prop_assert!((ncdf(x) - p).abs() <= 1e-12);
    }

    #[test]
    fn gaussian_tail_sandwich(x in 1.0f64..10.0) {
        let tail = ncdf(-x);
        let g = (-0.5 * x * x).exp() / SQRT_2PI;
        prop_assert!(tail <= g / x * (1.0 + 1e-14));
        prop_assert!(tail >= g * (1.0 / x - 1.0 / (x * (x * x + 1.0))) * (1.0 - 1e-14));
    }

    #[test]
    fn normal_cdf_increasing(x in -8.0f64..8.0, dx in 1e-3f64..1.0) {
        prop_assert!(ncdf(x + dx) >= ncdf(x));
        prop_assert!(norm_sf(x + dx) <= norm_sf(x));
        // strict on the side that is not within an ulp of one
        if x >= 0.0 {
            prop_assert!(norm_sf(x + dx) < norm_sf(x));
        } else {
            prop_assert!(ncdf(x + dx) > ncdf(x));
        }
    }

    #[test]
    fn incomplete_gamma_increasing(a in 0.1f64..20.0, y in 0.0f64..40.0, dy in 1e-2f64..1.0) {
        let lo = reg_inc_gamma(GammaArgs::new(a, y).unwrap()).value();
        let hi = reg_inc_gamma(GammaArgs::new(a, y + dy).unwrap()).value();
        prop_assert!(hi >= lo);
        if lo < 0.999_999 && lo > 1e-12 {
            prop_assert!(hi > lo);
        }
    }

    #[test]
    fn put_call_parity(sigma in 0.01f64..3.0, k in 0.05f64..3.0, ti in 0usize..3) {
        let s = MarketSlice::new(1.0, MATURITIES[ti]).unwrap();
        let v = Vol::new(sigma).unwrap();
        let c = bs_price(&s, k, v, OptionKind::Call);
        let p = bs_price(&s, k, v, OptionKind::Put);
        prop_assert!((c - p - (1.0 - k)).abs() <= 1e-14 * c.max(1.0));
    }

    #[test]
    fn bs_price_increasing_in_vol(sigma in 0.05f64..2.5, k in 0.2f64..3.0) {
        // in-the-money prices absorb the time value into rounding; compare
        // the out-of-the-money side
        let s = MarketSlice::new(1.0, 1.2).unwrap();
        let kind = if k < 1.0 { OptionKind::Put } else { OptionKind::Call };
        let lo = bs_price(&s, k, Vol::new(sigma).unwrap(), kind);
        let hi = bs_price(&s, k, Vol::new(sigma * 1.05).unwrap(), kind);
        prop_assert!(hi > lo);
    }

    #[test]
    fn implied_vol_scale_invariant(sigma in 0.05f64..2.0, k in 0.01f64..2.0, lambda in 0.01f64..100.0) {
        let s = MarketSlice::new(1.0, 1.2).unwrap();
        let kind = if k < 1.0 { OptionKind::Put } else { OptionKind::Call };
        let price = bs_price(&s, k, Vol::new(sigma).unwrap(), kind);
        prop_assume!(price > 1e-250);
        let a = implied_vol(&s, OptionQuote { strike: k, kind, price }).unwrap().value();
        let ls = MarketSlice::new(lambda, 1.2).unwrap();
        let b = implied_vol(&ls, OptionQuote { strike: lambda * k, kind, price: lambda * price }).unwrap().value();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn u_k_increasing_on_branch(depth in 0.1f64..40.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let c = StrikeCdf::at_depth(depth).unwrap();
        let span = 2.0 * -c.left_end() + 8.0;
        let (x1, x2) = (c.left_end() + a.min(b) * span, c.left_end() + a.max(b) * span);
        prop_assume!(x2 - x1 > 1e-6);
        let (y1, y2) = (c.eval(x1), c.eval(x2));
        prop_assert!(y1 <= y2);
        // strict unless both sit within a few ulps of one
        prop_assert!(y1 < y2 || y2 > 1.0 - 1e-12);
    }

    #[test]
    fn smile_formulas_scale_invariant(depth in 1.0f64..12.0, m in 0.05f64..0.6, lambda in 0.01f64..100.0) {
        let unit = MarketSlice::new(1.0, 1.2).unwrap();
        let scaled = MarketSlice::new(lambda, 1.2).unwrap();
        let k = (-depth).exp();
        let a = smile_three_term_atom(&unit, k, m).unwrap().vol.value();
        let b = smile_three_term_atom(&scaled, lambda * k, m).unwrap().vol.value();
        prop_assert!((a - b).abs() <= 1e-9 * a);
        let a = smile_dmhj(&unit, k, m).unwrap().value();
        let b = smile_dmhj(&scaled, lambda * k, m).unwrap().value();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn bounds_are_ordered(depth in 2.0f64..200.0, m in 0.01f64..0.95, eps in 1e-3f64..0.5) {
        let s = MarketSlice::new(1.0, 1.2).unwrap();
        let model = AtomOnly::new(m).unwrap();
        if let Ok((lo, hi)) = smile_bounds(&s, (-depth).exp(), &model, BoundsConfig::new(eps).unwrap()) {
            prop_assert!(lo <= hi);
        }
    }
}

#[test]
fn bessel_small_argument_limit() {
    let x = 1e-6;
    for alpha in [-0.9, -0.5, 0.5, 1.25] {
        let v = bessel_i(BesselArgs::new(alpha, x).unwrap()).unwrap();
        let r = v * gamma_fn(alpha + 1.0) * (2.0 / x).powf(alpha);
        assert!((r - 1.0).abs() <= 1e-6, "alpha {alpha}: {r}");
    }
}

#[test]
fn normal_quantile_extremes_round_trip() {
    for p in [1e-8, 1e-5, 0.02425, 0.5, 0.97575, 1.0 - 1e-8] {
        let x = norm_cdf_inv(p).unwrap();
        assert!((ncdf(x) - p).abs() <= 1e-12, "p {p}");
    }
}

#[test]
fn half_mass_three_term_inverse_positive_everywhere() {
    let s = MarketSlice::new(1.0, 1.2).unwrap();
    for depth in [0.5f64, 2.0, 8.0, 50.0, 400.0] {
        assert!(smile_three_term_atom(&s, (-depth).exp(), 0.5).unwrap().u > 0.0);
    }
}
