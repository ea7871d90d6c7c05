//! Models whose terminal law has an atom at zero, seen through the
//! quantities the wing formulas consume.
//!
//! All evaluators work with the spot normalized to one: strikes and
//! price levels are fractions of `x0`, and put prices are in units of `x0`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::specfun::Probability;
use libm::exp;

/// Terminal law with mass `m_T` at zero plus an absolutely continuous part.
///
/// Only [`mass`](AtomModel::mass) is mandatory. Implementations must be
/// reentrant; the smile routines call them from several threads.
pub trait AtomModel {
    /// `m_T = P(X_T = 0)`, strictly between 0 and 1.
    fn mass(&self) -> f64;

    /// `G(K) = K P(1/K)` at `K = exp(depth)`.
    fn g(&self, _depth: f64) -> Option<Result<f64>> {
        None
    }

    /// `p~_T(u)`, the continuous-part distribution function.
    fn p_tilde(&self, _u: f64) -> Option<Result<f64>> {
        None
    }

    /// Put price at normalized strike `k`.
    fn put(&self, _strike: f64) -> Option<Result<f64>> {
        None
    }
}

impl<M: AtomModel + ?Sized> AtomModel for &M {
    fn mass(&self) -> f64 {
        (**self).mass()
    }
    fn g(&self, depth: f64) -> Option<Result<f64>> {
        (**self).g(depth)
    }
    fn p_tilde(&self, u: f64) -> Option<Result<f64>> {
        (**self).p_tilde(u)
    }
    fn put(&self, strike: f64) -> Option<Result<f64>> {
        (**self).put(strike)
    }
}

/// Which evaluator produced a `G` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GSource {
    Explicit,
    FromPut,
    Mass,
}

/// `G(K) = K P(1/K)` from a put evaluator.
pub fn g_from_put<F>(put: F, big_k: f64) -> Result<Probability>
where
    F: FnOnce(f64) -> Result<f64>,
{
    ensure(big_k > 1.0, "G needs K > 1", big_k)?;
    let p = put(1.0 / big_k)?;
    Probability::new(big_k * p)
}

/// `G(exp(depth))`, taking the first available of: the model's own `G`,
/// `K P(1/K)` from its put evaluator, the constant `m_T`.
pub fn resolve_g<M: AtomModel + ?Sized>(model: &M, depth: f64) -> Result<(f64, GSource)> {
    if let Some(g) = model.g(depth) {
        return g.map(|v| (v, GSource::Explicit));
    }
    if let Some(p) = model.put(exp(-depth)) {
        return p.map(|v| (v * exp(depth), GSource::FromPut));
    }
    Ok((model.mass(), GSource::Mass))
}

/// `p_T(u) = m_T + p~_T(u)`.
pub fn p_total<M: AtomModel + ?Sized>(model: &M, u: f64) -> Result<f64> {
    match model.p_tilde(u) {
        Some(p) => Ok(model.mass() + p?),
        None => Err(Error::MissingEvaluator("p_tilde")),
    }
}

fn check_mass(m: f64) -> Result<()> {
    ensure(m > 0.0 && m < 1.0, "atom mass must lie in (0, 1)", m)
}

/// Pure atom plus an unspecified continuous part: only `m_T` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomOnly {
    mass: f64,
}

impl AtomOnly {
    pub fn new(mass: f64) -> Result<Self> {
        check_mass(mass)?;
        Ok(AtomOnly { mass })
    }
}

impl AtomModel for AtomOnly {
    fn mass(&self) -> f64 {
        self.mass
    }
}

pub type Evaluator = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Model assembled from closures.
pub struct CustomAtomModel {
    mass: f64,
    g: Option<Evaluator>,
    p_tilde: Option<Evaluator>,
    put: Option<Evaluator>,
}

impl CustomAtomModel {
    pub fn new(mass: f64) -> Result<Self> {
        check_mass(mass)?;
        Ok(CustomAtomModel { mass, g: None, p_tilde: None, put: None })
    }

    /// `G` as a function of `depth = log K`.
    pub fn with_g(mut self, g: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.g = Some(Box::new(g));
        self
    }

    pub fn with_p_tilde(mut self, p: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.p_tilde = Some(Box::new(p));
        self
    }

    pub fn with_put(mut self, p: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.put = Some(Box::new(p));
        self
    }
}

impl AtomModel for CustomAtomModel {
    fn mass(&self) -> f64 {
        self.mass
    }
    fn g(&self, depth: f64) -> Option<Result<f64>> {
        self.g.as_ref().map(|f| f(depth))
    }
    fn p_tilde(&self, u: f64) -> Option<Result<f64>> {
        self.p_tilde.as_ref().map(|f| f(u))
    }
    fn put(&self, strike: f64) -> Option<Result<f64>> {
        self.put.as_ref().map(|f| f(strike))
    }
}

/// Atom mass with a tabulated continuous-part distribution function,
/// interpolated linearly and held constant past the last node.
///
/// Puts follow from `P(k) = k m_T + int_0^k p~_T(x) dx`, which is exact for
/// the piecewise-linear interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedModel {
    mass: f64,
    nodes: Vec<(f64, f64)>,
    // cumulative integral of p~ up to each node
    area: Vec<f64>,
}

impl TabulatedModel {
    pub fn new(mass: f64, table: &[(f64, f64)]) -> Result<Self> {
        check_mass(mass)?;
        let mut nodes = Vec::with_capacity(table.len() + 1);
        if table.first().is_none_or(|&(u, _)| u > 0.0) {
            nodes.push((0.0, 0.0));
        }
        for &(u, p) in table {
            ensure(u >= 0.0 && u.is_finite(), "table abscissa must be non-negative", u)?;
            ensure((0.0..=1.0 - mass).contains(&p), "table value must lie in [0, 1 - m_T]", p)?;
            if let Some(&(pu, pp)) = nodes.last() {
                ensure(u > pu || (u == 0.0 && pu == 0.0), "table abscissae must increase", u)?;
                ensure(p >= pp, "tabulated p_tilde must be non-decreasing", p)?;
                if u == pu {
                    continue;
                }
            }
            nodes.push((u, p));
        }
        let mut area = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        area.push(0.0);
        for w in nodes.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            area.push(acc);
        }
        Ok(TabulatedModel { mass, nodes, area })
    }

    fn locate(&self, u: f64) -> usize {
        // index i with nodes[i].0 <= u < nodes[i + 1].0
        match self.nodes.binary_search_by(|n| n.0.total_cmp(&u)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    fn interp(&self, u: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if u >= self.nodes[last].0 {
            return self.nodes[last].1;
        }
        let i = self.locate(u);
        let (u0, p0) = self.nodes[i];
        let (u1, p1) = self.nodes[i + 1];
        p0 + (p1 - p0) * (u - u0) / (u1 - u0)
    }

    fn integral(&self, k: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if k >= self.nodes[last].0 {
            return self.area[last] + self.nodes[last].1 * (k - self.nodes[last].0);
        }
        let i = self.locate(k);
        let (u0, p0) = self.nodes[i];
        self.area[i] + 0.5 * (p0 + self.interp(k)) * (k - u0)
    }
}

impl AtomModel for TabulatedModel {
    fn mass(&self) -> f64 {
        self.mass
    }
    fn p_tilde(&self, u: f64) -> Option<Result<f64>> {
        Some(ensure(u >= 0.0, "p_tilde needs u >= 0", u).map(|_| self.interp(u)))
    }
    fn put(&self, strike: f64) -> Option<Result<f64>> {
        Some(ensure(strike > 0.0, "put needs a positive strike", strike).map(|_| strike * self.mass + self.integral(strike)))
    }
}
