//! Per-strike tables behind the `smile`, `compare`, `bounds` and `mc`
//! commands, and their CSV serialization.

use std::io::Write;

use rayon::prelude::*;
use wingsmile_core::asymptotics::{
    smile_dmhj, smile_leading, smile_lower_bound, smile_three_term_atom, smile_three_term_g,
    smile_three_term_pt, smile_upper_bound,
};
use wingsmile_core::cev::CevAtomModel;
use wingsmile_core::montecarlo::{mc_smile_from_sample, simulate_range};
use wingsmile_core::{
    AtomModel, BoundsConfig, CevParams, Error, MarketSlice, McConfig, McSmileEstimate, TerminalSample, Vol,
};

use crate::config::Model;
use crate::error::CliError;

pub const COMPARE_HEADER: [&str; 14] = [
    "k",
    "K",
    "exact_iv",
    "mc_iv",
    "mc_se",
    "leading",
    "three_term_atom",
    "three_term_pT",
    "three_term_G",
    "dmhj",
    "lower",
    "upper",
    "err_three_term",
    "err_dmhj",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompareRow {
    pub k: f64,
    pub strike: f64,
    pub exact_iv: Option<f64>,
    pub mc_iv: Option<f64>,
    pub mc_se: Option<f64>,
    pub leading: Option<f64>,
    pub three_term_atom: Option<f64>,
    pub three_term_pt: Option<f64>,
    pub three_term_g: Option<f64>,
    pub dmhj: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub err_three_term: Option<f64>,
    pub err_dmhj: Option<f64>,
}

impl CompareRow {
    fn cells(&self) -> [Option<f64>; 14] {
        [
            Some(self.k),
            Some(self.strike),
            self.exact_iv,
            self.mc_iv,
            self.mc_se,
            self.leading,
            self.three_term_atom,
            self.three_term_pt,
            self.three_term_g,
            self.dmhj,
            self.lower,
            self.upper,
            self.err_three_term,
            self.err_dmhj,
        ]
    }
}

/// Keeps a value, blanks a cell whose formula is undefined at this strike,
/// and lets genuine numerical failures through.
fn cell(r: Result<Vol, Error>) -> Result<Option<f64>, CliError> {
    match r {
        Ok(v) => Ok(Some(v.value())),
        Err(e @ (Error::Quadrature { .. } | Error::Root { .. })) => Err(e.into()),
        Err(_) => Ok(None),
    }
}

/// Spot, maturity and the normalized-spot model behind a [`Model`].
pub struct WingContext<'a> {
    pub slice: MarketSlice,
    pub model: &'a (dyn AtomModel + Send + Sync),
    pub cev: Option<&'a CevAtomModel>,
}

pub fn context<'a>(model: &'a Model, cev_view: &'a Option<CevAtomModel>) -> Result<WingContext<'a>, CliError> {
    match model {
        Model::Cev(d) => {
            let view = cev_view.as_ref().expect("CEV view built by caller");
            Ok(WingContext { slice: d.params().slice(), model: view, cev: Some(view) })
        }
        Model::Atom { spot, t, model } => Ok(WingContext {
            slice: MarketSlice::new(*spot, *t).map_err(|e| CliError::Config(e.to_string()))?,
            model: model.as_ref(),
            cev: None,
        }),
    }
}

pub fn cev_view(model: &Model) -> Result<Option<CevAtomModel>, CliError> {
    match model {
        Model::Cev(d) => Ok(Some(d.atom_model()?)),
        Model::Atom { .. } => Ok(None),
    }
}

fn compare_row(ctx: &WingContext<'_>, k: f64, bounds: BoundsConfig) -> Result<CompareRow, CliError> {
    let slice = &ctx.slice;
    let spot = slice.x0();
    let strike = spot * k.exp();
    let m = ctx.model;
    let mass = m.mass();
    let exact_iv = match ctx.cev {
        Some(c) => cell(c.distribution().exact_smile(strike))?,
        None => None,
    };
    let leading = match m.put(strike / spot) {
        Some(p) => cell(p.and_then(|p| smile_leading(slice, strike, p * spot)))?,
        None => None,
    };
    let three_term_atom = cell(smile_three_term_atom(slice, strike, mass).map(|t| t.vol))?;
    let three_term_pt = if m.p_tilde(1.0).is_some() {
        cell(smile_three_term_pt(slice, strike, m).map(|t| t.vol))?
    } else {
        None
    };
    let three_term_g = cell(smile_three_term_g(slice, strike, m).map(|t| t.vol))?;
    let dmhj = cell(smile_dmhj(slice, strike, mass))?;
    let lower = cell(smile_lower_bound(slice, strike, m, bounds))?;
    let upper = cell(smile_upper_bound(slice, strike, m))?;
    let err = |a: Option<f64>| Some((exact_iv? - a?).abs());
    Ok(CompareRow {
        k,
        strike,
        exact_iv,
        mc_iv: None,
        mc_se: None,
        leading,
        three_term_atom,
        three_term_pt,
        three_term_g,
        dmhj,
        lower,
        upper,
        err_three_term: err(three_term_atom),
        err_dmhj: err(dmhj),
    })
}

/// One row per grid point, evaluated in parallel, returned in grid order.
pub fn compare_rows(ctx: &WingContext<'_>, grid: &[f64], bounds: BoundsConfig) -> Result<Vec<CompareRow>, CliError> {
    grid.par_iter().map(|&k| compare_row(ctx, k, bounds)).collect()
}

pub fn attach_mc(rows: &mut [CompareRow], mc: &[McSmileEstimate]) {
    for (r, e) in rows.iter_mut().zip(mc) {
        debug_assert_eq!(r.k, e.k);
        r.mc_iv = e.iv;
        r.mc_se = e.iv_se;
    }
}

pub const BOUNDS_HEADER: [&str; 9] = ["k", "K", "G", "u_G", "lower", "upper", "exact_iv", "inside", "lower_min_k"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub k: f64,
    pub strike: f64,
    pub g: f64,
    pub u_g: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exact_iv: Option<f64>,
    /// `lower <= exact <= upper` when all three are known.
    pub inside: Option<bool>,
    /// Largest log-moneyness at which the lower bound becomes defined.
    pub lower_min_k: Option<f64>,
}

fn bounds_row(ctx: &WingContext<'_>, k: f64, cfg: BoundsConfig) -> Result<BoundsRow, CliError> {
    let slice = &ctx.slice;
    let strike = slice.x0() * k.exp();
    let (g, _) = wingsmile_core::model::resolve_g(ctx.model, -k)?;
    let u_g = match smile_three_term_g(slice, strike, ctx.model) {
        Ok(t) => Some(t.u),
        Err(e @ (Error::Quadrature { .. } | Error::Root { .. })) => return Err(e.into()),
        Err(_) => None,
    };
    let (lower, lower_min_k) = match smile_lower_bound(slice, strike, ctx.model, cfg) {
        Ok(v) => (Some(v.value()), None),
        Err(Error::DomainBelow { min_depth, .. }) => (None, min_depth.map(|d| -d)),
        Err(e) => (cell(Err(e))?, None),
    };
    let upper = cell(smile_upper_bound(slice, strike, ctx.model))?;
    let exact_iv = match ctx.cev {
        Some(c) => cell(c.distribution().exact_smile(strike))?,
        None => None,
    };
    let inside = match (lower, exact_iv, upper) {
        (Some(l), Some(x), Some(u)) => Some(l <= x && x <= u),
        _ => None,
    };
    Ok(BoundsRow { k, strike, g, u_g, lower, upper, exact_iv, inside, lower_min_k })
}

pub fn bounds_rows(ctx: &WingContext<'_>, grid: &[f64], cfg: BoundsConfig) -> Result<Vec<BoundsRow>, CliError> {
    grid.par_iter().map(|&k| bounds_row(ctx, k, cfg)).collect()
}

pub const MC_HEADER: [&str; 9] =
    ["k", "K", "put_price", "put_se", "iv", "iv_se", "normalized_iv", "normalized_se", "n_absorbed"];

const CHUNK: u64 = 4096;

/// Simulation split into fixed chunks of paths, run in parallel and
/// concatenated in path order; identical to the sequential result.
pub fn simulate_parallel(params: &CevParams, cfg: &McConfig) -> TerminalSample {
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| simulate_range(params, cfg, c * CHUNK..((c + 1) * CHUNK).min(cfg.n_paths)))
        .collect();
    TerminalSample::new(parts.concat(), cfg.antithetic).expect("n_paths >= 1")
}

pub fn mc_estimates(params: &CevParams, cfg: &McConfig, grid: &[f64]) -> Result<(TerminalSample, Vec<McSmileEstimate>), CliError> {
    let sample = simulate_parallel(params, cfg);
    let est = mc_smile_from_sample(params, &sample, grid)?;
    Ok((sample, est))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out)
}

pub fn write_compare<W: Write>(out: W, rows: &[CompareRow]) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record(r.cells().iter().map(|&c| opt(c)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds<W: Write>(out: W, rows: &[BoundsRow]) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(BOUNDS_HEADER)?;
    for r in rows {
        w.write_record([
            num(r.k),
            num(r.strike),
            num(r.g),
            opt(r.u_g),
            opt(r.lower),
            opt(r.upper),
            opt(r.exact_iv),
            r.inside.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.lower_min_k),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mc<W: Write>(out: W, t: f64, rows: &[McSmileEstimate]) -> Result<(), CliError> {
    let mut w = writer(out);
    w.write_record(MC_HEADER)?;
    for e in rows {
        let scale = t.sqrt() / e.k.abs();
        w.write_record([
            num(e.k),
            num(e.strike),
            num(e.price),
            num(e.price_se),
            opt(e.iv),
            opt(e.iv_se),
            opt(e.normalized_iv),
            opt(e.iv_se.map(|s| s * scale)),
            e.n_absorbed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const MASS_HEADER: [&str; 7] = ["s0", "sigma", "rho", "T", "gamma_a", "gamma_y", "m_T"];

pub fn write_mass<W: Write>(out: W, p: &CevParams) -> Result<(), CliError> {
    let g = p.gamma_args();
    let m = wingsmile_core::cev::mass_at_zero(p).value();
    let mut w = writer(out);
    w.write_record(MASS_HEADER)?;
    w.write_record([p.s0(), p.sigma(), p.rho(), p.t(), g.a, g.y, m].map(num))?;
    w.flush()?;
    Ok(())
}
