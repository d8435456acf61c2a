//! Forward operator `f -> Σ α_i ∫∫_{R_i} f(p - s) ds` by tensor
//! Gauss-Legendre quadrature, and residual reporting on uniform grids.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BlurConfig, Pt, Rect};
use crate::smoothfn::C2Fn;

/// Something that can be sampled pointwise.
pub trait Evaluable: Sync {
    fn value_at(&self, p: Pt) -> Result<Complex64>;
}

impl Evaluable for C2Fn {
    fn value_at(&self, p: Pt) -> Result<Complex64> {
        self.value(p)
    }
}

impl<F: Fn(Pt) -> Result<Complex64> + Sync> Evaluable for F {
    fn value_at(&self, p: Pt) -> Result<Complex64> {
        self(p)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Lines `offset + spacing·k` (in the integrand's own coordinate) where the
/// integrand may lose smoothness. Integration intervals are cut there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breaklines {
    pub spacing: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    breaks: (Option<Breaklines>, Option<Breaklines>),
}

impl QuadratureRule {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if !(2..=128).contains(&order) {
            return Err(Error::InvalidConfig(format!("quadrature order {order} outside 2..=128")));
        }
        let (nodes, weights) = gauss_legendre(order);
        Ok(QuadratureRule { order, nodes, weights, breaks: (None, None) })
    }

    /// Composite rule split at breaklines in `x` and `y`.
    pub fn with_breaklines(mut self, bx: Option<Breaklines>, by: Option<Breaklines>) -> Result<Self> {
        for b in [bx, by].into_iter().flatten() {
            if !(b.spacing > 0.0 && b.spacing.is_finite() && b.offset.is_finite()) {
                return Err(Error::InvalidConfig(format!("bad breakline spacing {}", b.spacing)));
            }
        }
        self.breaks = (bx, by);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breaklines(&self) -> (Option<Breaklines>, Option<Breaklines>) {
        self.breaks
    }

    /// Nodes and weights for `∫_lo^hi φ(s) ds` where `φ(s) = F(center - s)`.
    fn axis(&self, lo: f64, hi: f64, center: f64, br: Option<Breaklines>) -> Vec<(f64, f64)> {
        let mut cuts = vec![lo];
        if let Some(b) = br {
            // center - s = offset + spacing·k  <=>  s = center - offset - spacing·k
            let base = center - b.offset;
            let k_lo = ((base - hi) / b.spacing).ceil() as i64;
            let k_hi = ((base - lo) / b.spacing).floor() as i64;
            let mut inner: Vec<f64> = (k_lo..=k_hi).map(|k| base - b.spacing * k as f64).collect();
            inner.sort_by(f64::total_cmp);
            cuts.extend(inner.into_iter().filter(|&s| s > lo + 1e-12 && s < hi - 1e-12));
        }
        cuts.push(hi);
        let mut out = Vec::with_capacity(self.order * (cuts.len() - 1));
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, half * wt));
            }
        }
        out
    }
}

/// `∫∫_R f(p - s) ds` for one rectangle.
pub fn blur_rect(f: &dyn Evaluable, r: &Rect, p: Pt, q: &QuadratureRule) -> Result<Complex64> {
    let xs = q.axis(r.a(), r.b(), p.x, q.breaks.0);
    let ys = q.axis(r.c(), r.d(), p.y, q.breaks.1);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(t, wy) in &ys {
        let mut row = Complex64::new(0.0, 0.0);
        for &(s, wx) in &xs {
            row += f.value_at(Pt::new(p.x - s, p.y - t))? * wx;
        }
        acc += row * wy;
    }
    Ok(acc)
}

/// `Σ α_i ∫∫_{R_i} f(p - s) ds`.
pub fn blur(f: &dyn Evaluable, cfg: &BlurConfig, p: Pt, q: &QuadratureRule) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, w) in cfg.iter() {
        acc += w * blur_rect(f, r, p, q)?;
    }
    Ok(acc)
}

/// `Σ α_i Δ_{R_i} f(p)`, the mixed second difference over each rectangle's
/// corners. For a continuous `f` this is the `∂x∂y` derivative of the blur.
pub fn corner_difference(f: &dyn Evaluable, cfg: &BlurConfig, p: Pt) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, w) in cfg.iter() {
        let v = |s: f64, t: f64| f.value_at(Pt::new(p.x - s, p.y - t));
        acc += w * (v(r.a(), r.c())? - v(r.b(), r.c())? - v(r.a(), r.d())? + v(r.b(), r.d())?);
    }
    Ok(acc)
}

/// Uniform closed grid, traversed row-major (`x` fastest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Upper bound on grid size accepted from outside callers.
pub const MAX_GRID_POINTS: usize = 1 << 24;

impl GridSpec {
    pub fn new(region: (f64, f64, f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let (xmin, xmax, ymin, ymax) = region;
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2x2 points, got {nx}x{ny}")));
        }
        if nx.saturating_mul(ny) > MAX_GRID_POINTS {
            return Err(Error::InvalidGrid(format!("{nx}x{ny} exceeds {MAX_GRID_POINTS} points")));
        }
        let ok = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) && xmax > xmin && ymax > ymin;
        if !ok {
            return Err(Error::InvalidGrid(format!("bad region {region:?}")));
        }
        Ok(GridSpec { xmin, xmax, ymin, ymax, nx, ny })
    }

    pub fn point(&self, i: usize, j: usize) -> Pt {
        let fx = i as f64 / (self.nx - 1) as f64;
        let fy = j as f64 / (self.ny - 1) as f64;
        Pt::new(self.xmin + (self.xmax - self.xmin) * fx, self.ymin + (self.ymax - self.ymin) * fy)
    }

    pub fn points(&self) -> Vec<Pt> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| self.point(i, j))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub p: Pt,
    pub forward: Complex64,
    pub target: Complex64,
}

impl ResidualSample {
    pub fn residual(&self) -> f64 {
        (self.forward - self.target).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub rms: f64,
    pub grid: GridSpec,
    pub samples: Vec<ResidualSample>,
}

impl ResidualStats {
    fn from_samples(grid: GridSpec, samples: Vec<ResidualSample>) -> Self {
        let n = samples.len().max(1) as f64;
        let max_abs = samples.iter().map(ResidualSample::residual).fold(0.0, f64::max);
        let rms = (samples.iter().map(|s| s.residual().powi(2)).sum::<f64>() / n).sqrt();
        ResidualStats { max_abs, rms, grid, samples }
    }
}

fn sample_grid(
    grid: &GridSpec,
    forward: impl Fn(Pt) -> Result<Complex64> + Sync,
    target: impl Fn(Pt) -> Result<Complex64> + Sync,
) -> Result<ResidualStats> {
    let samples = grid
        .points()
        .into_par_iter()
        .map(|p| Ok(ResidualSample { p, forward: forward(p)?, target: target(p)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualStats::from_samples(*grid, samples))
}

/// `|blur(f_hat) - g|` over the grid.
pub fn residual_grid(
    f_hat: &dyn Evaluable,
    g: &dyn Evaluable,
    cfg: &BlurConfig,
    grid: &GridSpec,
    q: &QuadratureRule,
) -> Result<ResidualStats> {
    sample_grid(grid, |p| blur(f_hat, cfg, p, q), |p| g.value_at(p))
}

/// `|Σ α_i Δ_{R_i} f_hat - ∂x∂y g|` over the grid; needs no quadrature.
pub fn corner_residual_grid(f_hat: &dyn Evaluable, g: &C2Fn, cfg: &BlurConfig, grid: &GridSpec) -> Result<ResidualStats> {
    sample_grid(grid, |p| corner_difference(f_hat, cfg, p), |p| Ok(g.eval(p)?.dxy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothfn::{Polynomial, PolyBump};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn unit_cfg(r: Rect) -> BlurConfig {
        BlurConfig::new(vec![r], vec![c(1.0)]).unwrap()
    }

    #[test]
    fn legendre_nodes_integrate_polynomials() {
        for n in [2, 3, 8, 17] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn constant_and_bilinear() {
        let q = QuadratureRule::gauss_legendre(2).unwrap();
        let one = C2Fn::new(Polynomial::new(vec![(0, 0, c(1.0))]));
        let xy = C2Fn::new(Polynomial::new(vec![(1, 1, c(1.0))]));
        let sq = unit_cfg(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap());
        let off = unit_cfg(Rect::new(0.0, 2.0, 0.0, 2.0).unwrap());
        for p in [Pt::new(0.3, -1.7), Pt::new(4.0, 2.5)] {
            assert!((blur(&one, &sq, p, &q).unwrap() - c(4.0)).norm() < 1e-12);
            assert!((blur(&xy, &sq, p, &q).unwrap() - c(4.0 * p.x * p.y)).norm() < 1e-12);
            let want = 4.0 * (p.x - 1.0) * (p.y - 1.0);
            assert!((blur(&xy, &off, p, &q).unwrap() - c(want)).norm() < 1e-12);
        }
    }

    #[test]
    fn breaklines_make_bumps_exact() {
        let b = C2Fn::new(PolyBump::new(Pt::ORIGIN, (1.0, 1.0), c(1.0)).unwrap());
        let cfg = unit_cfg(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap());
        let br = Some(Breaklines { spacing: 1.0, offset: 0.0 });
        let coarse = QuadratureRule::gauss_legendre(4).unwrap().with_breaklines(br, br).unwrap();
        let fine = QuadratureRule::gauss_legendre(7).unwrap().with_breaklines(br, br).unwrap();
        for p in [Pt::new(0.25, -0.3), Pt::new(1.7, 0.9)] {
            let a = blur(&b, &cfg, p, &coarse).unwrap();
            let z = blur(&b, &cfg, p, &fine).unwrap();
            assert!((a - z).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_estimate_reports_target() {
        let g = C2Fn::new(PolyBump::new(Pt::ORIGIN, (1.0, 1.0), c(2.0)).unwrap());
        let cfg = unit_cfg(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap());
        let grid = GridSpec::new((-1.0, 1.0, -1.0, 1.0), 3, 3).unwrap();
        let q = QuadratureRule::gauss_legendre(4).unwrap();
        let zero = C2Fn::zero();
        let st = residual_grid(&zero, &g, &cfg, &grid, &q).unwrap();
        assert_eq!(st.max_abs, 2.0);
        assert!(st.max_abs >= st.rms && st.rms > 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new((0.0, 1.0, 0.0, 1.0), 1, 5).is_err());
        assert!(GridSpec::new((0.0, 0.0, 0.0, 1.0), 2, 2).is_err());
        let g = GridSpec::new((0.0, 1.0, 0.0, 2.0), 2, 3).unwrap();
        assert_eq!(g.points()[1], Pt::new(1.0, 0.0));
        assert_eq!(g.points()[5], Pt::new(1.0, 2.0));
    }
}
