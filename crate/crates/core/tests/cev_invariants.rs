use wingsmile_core::asymptotics::{smile_bounds, smile_three_term_atom, smile_three_term_g, smile_three_term_pt, BoundsConfig};
use wingsmile_core::model::{g_from_put, resolve_g, GSource};
use wingsmile_core::montecarlo::{mc_put_price, simulate_terminals};
use wingsmile_core::{AtomModel, CevDistribution, CevParams, McConfig};

fn grid() -> impl Iterator<Item = CevParams> {
    let mut out = Vec::new();
    for rho in [0.25, 0.5, 0.8] {
        for sigma in [0.1, 0.3, 0.7] {
            for s0 in [0.05, 1.0, 20.0] {
                // sigma is quoted as a lognormal-equivalent level
                out.push(CevParams::new(s0, sigma * s0.powf(1.0 - rho), rho, 1.0).unwrap());
            }
        }
    }
    out.into_iter()
}

#[test]
fn normalization_and_martingale_on_grid() {
    for p in grid() {
        let d = CevDistribution::new(p).unwrap();
        let total = d.mass() + d.continuous_mass().unwrap();
        assert!((total - 1.0).abs() <= 1e-8, "{p:?}: mass {total}");
        let m1 = d.first_moment().unwrap();
        assert!((m1 - p.s0()).abs() <= 1e-6 * p.s0(), "{p:?}: first moment {m1}");
    }
}

#[test]
fn density_positive_near_zero_and_in_tail() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap()).unwrap();
    for x in [1e-12, 1e-6, 1e-3, 0.05, 0.2, 0.4] {
        assert!(d.density(x).unwrap() > 0.0, "x={x}");
    }
    assert!(d.density(0.0).is_err());
}

#[test]
fn p_tilde_small_strike_asymptote() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap()).unwrap();
    let k: f64 = 1e-9;
    let approx = d.small_x_constant() * k.powf(0.8) / 0.8;
    let r = d.p_tilde(k).unwrap().value() / approx;
    assert!((r - 1.0).abs() < 1e-4, "{r}");
}

#[test]
fn p_tilde_non_decreasing() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap()).unwrap();
    let mut prev = 0.0;
    for i in 0..60 {
        let k = 0.05 * (-12.0 + 0.25 * f64::from(i)).exp();
        let p = d.p_tilde(k).unwrap().value();
        assert!(p >= prev);
        prev = p;
    }
}

#[test]
fn tail_condition_holds() {
    // p~(K) (log 1/K)^(3/2) -> 0
    let d = CevDistribution::new(CevParams::new(1.0, 0.3, 0.6, 1.2).unwrap()).unwrap();
    let vals: Vec<f64> = [5.0f64, 10.0, 20.0, 40.0]
        .iter()
        .map(|&l| d.p_tilde((-l).exp()).unwrap().value() * l.powf(1.5))
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    assert!(vals[3] < 1e-10);
}

#[test]
fn g_from_cev_put_decomposes() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap()).unwrap();
    let m = d.atom_model().unwrap();
    let big_k = 14f64.exp();
    let g = g_from_put(|k| m.put(k).unwrap(), big_k).unwrap().value();
    let psi = g - d.mass();
    assert!(psi >= 0.0);
    assert!(psi <= d.p_tilde(0.05 / big_k).unwrap().value());
    let (via_model, src) = resolve_g(&m, 14.0).unwrap();
    assert_eq!(src, GSource::FromPut);
    assert!((via_model - g).abs() < 1e-15);
}

#[test]
fn three_term_variants_ordering_on_cev() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.276_737, 0.6, 1.2).unwrap()).unwrap();
    let m = d.atom_model().unwrap();
    let s = d.params().slice();
    let k = 0.05 * (-8f64).exp();
    let atom = smile_three_term_atom(&s, k, d.mass()).unwrap().vol;
    let g = smile_three_term_g(&s, k, &m).unwrap().vol;
    let pt = smile_three_term_pt(&s, k, &m).unwrap().vol;
    // G(K) > m_T and p_T > m_T with an increasing inverse
    assert!(g > atom && pt > atom);
    eprintln!("k=-8: atom {} pT {} G {}", atom.value(), pt.value(), g.value());
}

#[test]
fn cev_bounds_ordered_on_grid() {
    let d = CevDistribution::new(CevParams::new(0.05, 0.276_737, 0.6, 1.2).unwrap()).unwrap();
    let m = d.atom_model().unwrap();
    let s = d.params().slice();
    for depth in 4..=10 {
        let k = 0.05 * (-f64::from(depth)).exp();
        if let Ok((lo, hi)) = smile_bounds(&s, k, &m, BoundsConfig::default()) {
            assert!(lo <= hi);
        }
    }
}

#[test]
fn simulated_mean_is_spot() {
    let p = CevParams::new(0.05, 0.2, 0.6, 1.2).unwrap();
    let s = simulate_terminals(&p, &McConfig::new(20_000, 50, 11).unwrap());
    let (mean, se) = s.mean_and_se(|x| x);
    assert!((mean - 0.05).abs() <= 3.0 * se, "{mean} +- {se}");
    // put at a shallow strike agrees with quadrature
    let d = CevDistribution::new(p).unwrap();
    let k = 0.05 * (-1f64).exp();
    let (mc, se) = mc_put_price(&s, k);
    let exact = d.put_price(k).unwrap();
    assert!((mc - exact).abs() <= 4.0 * se, "{mc} +- {se} vs {exact}");
}
