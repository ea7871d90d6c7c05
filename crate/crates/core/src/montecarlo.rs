//! Euler–Maruyama simulation of the CEV model with absorption at zero, and
//! the Monte Carlo put prices and normalized smile built on it.

use alloc::vec::Vec;
use core::ops::Range;

use crate::blackscholes::{bs_vega, implied_vol, OptionQuote};
use crate::cev::CevParams;
use crate::error::{ensure, Error, Result};
use crate::rng::NormalStream;
use libm::{exp, pow, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: u64,
    pub n_steps: u64,
    pub seed: u64,
    /// Paths `2i` and `2i + 1` share increments with opposite signs.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: u64, n_steps: u64, seed: u64) -> Result<Self> {
        ensure(n_paths >= 1, "n_paths must be at least 1", n_paths as f64)?;
        ensure(n_steps >= 1, "n_steps must be at least 1", n_steps as f64)?;
        Ok(McConfig { n_paths, n_steps, seed, antithetic: false })
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }
}

/// Terminal value of one path; `0.0` once absorbed.
pub fn simulate_path(params: &CevParams, cfg: &McConfig, stream: &NormalStream, path: u64) -> f64 {
    let (base, sign) = if cfg.antithetic { (path >> 1, if path & 1 == 1 { -1.0 } else { 1.0 }) } else { (path, 1.0) };
    let vol = params.sigma() * sqrt(params.t() / cfg.n_steps as f64);
    let rho = params.rho();
    let mut s = params.s0();
    let mut pair = (0.0, 0.0);
    for step in 0..cfg.n_steps {
        let z = if step & 1 == 0 {
            pair = stream.normal_pair(base, step >> 1);
            pair.0
        } else {
            pair.1
        };
        s += vol * pow(s, rho) * (sign * z);
        if s <= 0.0 {
            return 0.0;
        }
    }
    s
}

/// Terminal values of paths `range.start..range.end`; concatenating ranges
/// reproduces [`simulate_terminals`] exactly.
pub fn simulate_range(params: &CevParams, cfg: &McConfig, range: Range<u64>) -> Vec<f64> {
    let stream = NormalStream::new(cfg.seed);
    range.map(|p| simulate_path(params, cfg, &stream, p)).collect()
}

/// Simulated terminal prices.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    values: Vec<f64>,
    antithetic: bool,
}

impl TerminalSample {
    pub fn new(values: Vec<f64>, antithetic: bool) -> Result<Self> {
        ensure(!values.is_empty(), "terminal sample must not be empty", 0.0)?;
        Ok(TerminalSample { values, antithetic })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_absorbed(&self) -> u64 {
        self.values.iter().filter(|&&v| v == 0.0).count() as u64
    }

    /// Absorbed fraction and its binomial standard error.
    pub fn absorbed_fraction(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let f = self.n_absorbed() as f64 / n;
        (f, sqrt(f * (1.0 - f) / n))
    }

    /// Mean and standard error of `f(S_T)`. Antithetic pairs are averaged
    /// before the variance is taken.
    pub fn mean_and_se<F: Fn(f64) -> f64>(&self, f: F) -> (f64, f64) {
        let pairs = self.antithetic && self.values.len() >= 2;
        let step = if pairs { 2 } else { 1 };
        let n = self.values.len() / step;
        let (mut sum, mut sq, mut used) = (0.0, 0.0, 0usize);
        for chunk in self.values.chunks_exact(step) {
            let y = chunk.iter().map(|&v| f(v)).sum::<f64>() / step as f64;
            sum += y;
            sq += y * y;
            used += 1;
        }
        debug_assert_eq!(used, n);
        let mean = sum / n as f64;
        if n < 2 {
            return (mean, 0.0);
        }
        let var = ((sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
        (mean, sqrt(var / n as f64))
    }
}

pub fn simulate_terminals(params: &CevParams, cfg: &McConfig) -> TerminalSample {
    TerminalSample { values: simulate_range(params, cfg, 0..cfg.n_paths), antithetic: cfg.antithetic }
}

/// Sample mean and standard error of `(K - S_T)^+`.
pub fn mc_put_price(sample: &TerminalSample, strike: f64) -> (f64, f64) {
    sample.mean_and_se(|s| (strike - s).max(0.0))
}

/// Monte Carlo smile point at log-moneyness `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSmileEstimate {
    pub k: f64,
    pub strike: f64,
    pub price: f64,
    pub price_se: f64,
    /// `None` when the price is outside the no-arbitrage band.
    pub iv: Option<f64>,
    /// `iv sqrt(T) / |k|`.
    pub normalized_iv: Option<f64>,
    /// Price standard error divided by vega.
    pub iv_se: Option<f64>,
    pub n_absorbed: u64,
}

/// Smile estimates on `k_grid` from an existing sample.
pub fn mc_smile_from_sample(params: &CevParams, sample: &TerminalSample, k_grid: &[f64]) -> Result<Vec<McSmileEstimate>> {
    let slice = params.slice();
    let n_absorbed = sample.n_absorbed();
    k_grid
        .iter()
        .map(|&k| {
            ensure(k < 0.0, "Monte Carlo smile needs k < 0", k)?;
            let strike = params.s0() * exp(k);
            let (price, price_se) = mc_put_price(sample, strike);
            let (iv, iv_se) = match implied_vol(&slice, OptionQuote::put(strike, price)) {
                Ok(v) => (Some(v.value()), Some(price_se / bs_vega(&slice, strike, v))),
                Err(Error::NoSolution { .. }) | Err(Error::Root { .. }) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(McSmileEstimate {
                k,
                strike,
                price,
                price_se,
                iv,
                normalized_iv: iv.map(|v| v * sqrt(params.t()) / -k),
                iv_se,
                n_absorbed,
            })
        })
        .collect()
}

/// Simulates and evaluates the smile on `k_grid` (all `k < 0`).
pub fn mc_smile(params: &CevParams, cfg: &McConfig, k_grid: &[f64]) -> Result<Vec<McSmileEstimate>> {
    mc_smile_from_sample(params, &simulate_terminals(params, cfg), k_grid)
}
