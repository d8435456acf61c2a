//! End-to-end construction of `f` with `f ★ μ = g`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{corner_residual_grid, residual_grid, Breaklines, GridSpec, QuadratureRule, ResidualStats};
use crate::geometry::{
    reflect_config_x, validate_staircase, AxisBounds, BlurConfig, Direction, Orientation, Pt, RectParams, Side,
};
use crate::measure::{advance_extreme, cone_for_pair, extremal_atom, ConeData, Extremal, MeasureExpr, QuadLattice};
use crate::neumann::{solve_general, SolverOptions};
use crate::smoothfn::{conv_measure, split_halfplane, C2Fn, Channels};

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// The four lattice measures attached to an intermediate rectangle `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KFamily {
    /// 1-based rectangle index.
    pub k: usize,
    pub zeta: MeasureExpr,
    pub eta: MeasureExpr,
    pub xi: MeasureExpr,
    pub psi_k: MeasureExpr,
}

impl KFamily {
    /// `ζ - η - ξ + ψ_k`.
    pub fn combined(&self) -> MeasureExpr {
        self.zeta.minus(&self.eta).minus(&self.xi).plus(&self.psi_k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMeasures {
    pub nu: MeasureExpr,
    pub psi: MeasureExpr,
    pub mu1: MeasureExpr,
    pub families: Vec<KFamily>,
    pub side: Side,
}

/// Lattice `w·Σ δ_{base + (±2S·j, ±2T·k)}` receding towards `side`.
fn quad(w: Complex64, base: Pt, steps: &RectParams, side: Side) -> Result<MeasureExpr> {
    let dir = match side {
        Side::Left => (-1, -1),
        Side::Right => (1, 1),
    };
    Ok(MeasureExpr::lattice(QuadLattice::new(w, base, (2.0 * steps.s, 2.0 * steps.t), dir)?))
}

/// Leading corner `(-M ∓ S, -N ∓ T)` of a rectangle's lattice.
fn corner(p: &RectParams, side: Side) -> Pt {
    match side {
        Side::Left => Pt::new(-p.m - p.s, -p.n - p.t),
        Side::Right => Pt::new(-p.m + p.s, -p.n + p.t),
    }
}

fn params(cfg: &BlurConfig) -> Vec<RectParams> {
    cfg.rects().iter().map(|r| r.params()).collect()
}

fn require_cond1(cfg: &BlurConfig) -> Result<()> {
    match validate_staircase(cfg)? {
        Orientation::Cond1 => Ok(()),
        Orientation::Cond2 => Err(Error::InvalidConfig("measures need an up-right staircase; reflect first".into())),
    }
}

/// Measures for one side, dispatching on the number of rectangles. Two
/// rectangles use the dedicated two-rectangle formulas.
pub fn build_case_measures(cfg: &BlurConfig, side: Side) -> Result<CaseMeasures> {
    match cfg.len() {
        1 => build_single(cfg, side),
        2 => build_two_rect_measures(cfg, side),
        _ => build_general_measures(cfg, side),
    }
}

fn build_single(cfg: &BlurConfig, side: Side) -> Result<CaseMeasures> {
    require_cond1(cfg)?;
    let p = params(cfg);
    let a1 = cfg.weights()[0];
    Ok(CaseMeasures {
        nu: MeasureExpr::delta(Pt::ORIGIN, one()),
        psi: MeasureExpr::delta(Pt::ORIGIN, one()),
        mu1: quad(one() / a1, corner(&p[0], side), &p[0], side)?,
        families: Vec::new(),
        side,
    })
}

/// `ν₁ = (1/α₁)·L(R₁) + (1/α₂)·L(R₂)` and `ψ₁ = (1/α₂)·L(R₂)` (or their
/// right-side counterparts).
pub fn build_two_rect_measures(cfg: &BlurConfig, side: Side) -> Result<CaseMeasures> {
    if cfg.len() != 2 {
        return Err(Error::InvalidConfig(format!("expected two rectangles, got {}", cfg.len())));
    }
    require_cond1(cfg)?;
    let p = params(cfg);
    let (a1, a2) = (cfg.weights()[0], cfg.weights()[1]);
    let first = quad(one() / a1, corner(&p[0], side), &p[0], side)?;
    let second = quad(one() / a2, corner(&p[1], side), &p[1], side)?;
    Ok(CaseMeasures { nu: first.plus(&second), psi: second, mu1: first, families: Vec::new(), side })
}

/// The general construction, valid for any `n >= 2`.
pub fn build_general_measures(cfg: &BlurConfig, side: Side) -> Result<CaseMeasures> {
    let n = cfg.len();
    if n < 2 {
        return build_single(cfg, side);
    }
    require_cond1(cfg)?;
    let p = params(cfg);
    let w = cfg.weights();
    let (p1, pn) = (&p[0], &p[n - 1]);
    let mu1 = quad(one() / w[0], corner(p1, side), p1, side)?;
    let psi = quad(one() / w[n - 1], corner(pn, side), pn, side)?;
    let c1 = corner(p1, side);
    let mut families = Vec::with_capacity(n.saturating_sub(2));
    let mut nu = mu1.plus(&psi);
    for k in 1..n - 1 {
        let pk = &p[k];
        let wk = w[k] / w[0];
        let lat = |dx: f64, dy: f64| quad(wk, Pt::new(c1.x + pk.m + dx, c1.y + pk.n + dy), p1, side);
        let fam = KFamily {
            k: k + 1,
            zeta: lat(-pk.s, -pk.t)?,
            eta: lat(-pk.s, pk.t)?,
            xi: lat(pk.s, -pk.t)?,
            psi_k: lat(pk.s, pk.t)?,
        };
        nu = nu.plus(&fam.combined().convolve(&psi)?);
        families.push(fam);
    }
    Ok(CaseMeasures { nu, psi, mu1, families, side })
}

/// `f = (∂x∂y g₁) ★ μ₁`.
pub fn assemble_f(g1: &C2Fn, mu1: &MeasureExpr, v: Direction) -> Result<C2Fn> {
    conv_measure(&g1.mixed_partial(), mu1, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Skip the ramp when `g` is already bounded on one side.
    Auto,
    /// Always split with the quintic ramp.
    Always,
}

/// Which construction serves a two-rectangle problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurePath {
    Auto,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    LeftOnly,
    RightOnly,
    Ramp,
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitKind::LeftOnly => "left-only",
            SplitKind::RightOnly => "right-only",
            SplitKind::Ramp => "ramp",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub split_width: f64,
    pub split_mode: SplitMode,
    pub tolerance: f64,
    pub quad_order: usize,
    /// Verification grid; defaults to 21x21 over the inflated support hull.
    pub grid: Option<GridSpec>,
    /// Optional cut lines for the verification quadrature.
    pub breaklines: (Option<Breaklines>, Option<Breaklines>),
    pub solver: SolverOptions,
    pub path: MeasurePath,
    pub verify: bool,
    /// Flips the sign of `ψ` inside `ν`. Only useful for checking that the
    /// verification catches a broken construction.
    #[doc(hidden)]
    pub corrupt_nu: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            split_width: 1.0,
            split_mode: SplitMode::Auto,
            tolerance: 1e-6,
            quad_order: 8,
            grid: None,
            breaklines: (None, None),
            solver: SolverOptions::default(),
            path: MeasurePath::Auto,
            verify: true,
            corrupt_nu: false,
        }
    }
}

/// Everything computed for one side, in the working (possibly reflected)
/// frame.
#[derive(Debug, Clone)]
pub struct SideSolution {
    pub side: Side,
    pub measures: CaseMeasures,
    pub g_side: C2Fn,
    pub h: C2Fn,
    pub g1: C2Fn,
    pub f: C2Fn,
    /// Advance margin of the perturbation measure.
    pub beta: f64,
}

impl SideSolution {
    /// The pieces `g₁, …, g_n` whose blurs against the individual rectangles
    /// reproduce them; they sum to `g_side`.
    pub fn parts(&self, v: Direction) -> Result<Vec<C2Fn>> {
        let mut parts = vec![self.g1.clone()];
        if self.measures.psi == MeasureExpr::delta(Pt::ORIGIN, one()) {
            return Ok(parts);
        }
        for fam in &self.measures.families {
            parts.push(conv_measure(&self.g1, &fam.combined(), v)?);
        }
        let rest = parts.iter().fold(self.g_side.clone(), |acc, p| acc.sub(p));
        parts.push(rest);
        Ok(parts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AtomCounts {
    pub nu_terms: usize,
    pub nu_lattices: usize,
    pub families: usize,
    /// Merged atoms of `ν` within four lattice steps of its leading atom.
    pub nu_atoms_near_lead: usize,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub f: C2Fn,
    pub orientation: Orientation,
    pub cone: ConeData,
    /// Smallest advance margin over the sides that were solved.
    pub beta: f64,
    pub split_width: f64,
    pub split: SplitKind,
    pub left: Option<SideSolution>,
    pub right: Option<SideSolution>,
    pub residual: Option<ResidualStats>,
    /// Quadrature-free check of `Σ α_i Δ_{R_i} f = ∂x∂y g`.
    pub corner_residual: Option<ResidualStats>,
    pub atom_counts: AtomCounts,
    pub channels: Channels,
    pub tolerance: f64,
}

impl ReconstructionResult {
    pub fn passed(&self) -> bool {
        self.residual.as_ref().is_some_and(|r| r.max_abs <= self.tolerance)
    }
}

/// Default verification grid: 21x21 over the hull of `g`'s support (or of
/// the rectangles when `g` is unbounded) inflated by `2·max(S, T)`.
pub fn default_grid(cfg: &BlurConfig, g: &C2Fn) -> Result<GridSpec> {
    let pad = 2.0 * cfg.max_half_extent();
    let b = g.support().bounds();
    let hull = if b.is_bounded() && !g.support().is_empty() {
        *b
    } else {
        cfg.rects()
            .iter()
            .map(|r| AxisBounds::boxed(r.a(), r.b(), r.c(), r.d()))
            .reduce(|a, b| a.hull(&b))
            .unwrap_or(AxisBounds::boxed(-1.0, 1.0, -1.0, 1.0))
    };
    let (xmin, xmax, ymin, ymax) = (hull.xmin.unwrap(), hull.xmax.unwrap(), hull.ymin.unwrap(), hull.ymax.unwrap());
    GridSpec::new((xmin - pad, xmax + pad, ymin - pad, ymax + pad), 21, 21)
}

/// Largest power-of-two spacing (between 2⁻²⁰ and 2⁸) dividing every value.
pub fn common_dyadic_spacing(values: &[f64]) -> Option<f64> {
    (-20..=8).rev().map(|k| 2f64.powi(k)).find(|h| {
        values.iter().all(|v| {
            let r = v / h;
            (r - r.round()).abs() <= 1e-9 * (1.0 + r.abs())
        })
    })
}

/// Breaklines for the verification quadrature when `g` is smooth apart from
/// the given axis-aligned edges and all edges and rectangle coordinates lie
/// on a common dyadic grid; the reconstruction then only loses smoothness on
/// that grid.
pub fn lattice_breaklines(cfg: &BlurConfig, x_edges: &[f64], y_edges: &[f64]) -> (Option<Breaklines>, Option<Breaklines>) {
    let mut xs: Vec<f64> = cfg.rects().iter().flat_map(|r| [r.a(), r.b()]).collect();
    let mut ys: Vec<f64> = cfg.rects().iter().flat_map(|r| [r.c(), r.d()]).collect();
    xs.extend_from_slice(x_edges);
    ys.extend_from_slice(y_edges);
    let mk = |h: Option<f64>| h.map(|spacing| Breaklines { spacing, offset: 0.0 });
    (mk(common_dyadic_spacing(&xs)), mk(common_dyadic_spacing(&ys)))
}

fn solve_side(
    cfg: &BlurConfig,
    g_side: &C2Fn,
    measures: CaseMeasures,
    v: Direction,
    opts: &ReconstructOptions,
) -> Result<SideSolution> {
    let side = measures.side;
    let h = conv_measure(g_side, &measures.psi, v)?;
    let g1 = solve_general(&h, &measures.nu, v, side, &opts.solver)?;
    let f = assemble_f(&g1, &measures.mu1, v)?;
    let beta = advance_margin(&measures.nu, v, side)?;
    let _ = cfg;
    Ok(SideSolution { side, measures, g_side: g_side.clone(), h, g1, f, beta })
}

/// Advance margin of `ν` normalized at its leading atom.
pub fn advance_margin(nu: &MeasureExpr, v: Direction, side: Side) -> Result<f64> {
    let mode = match side {
        Side::Left => Extremal::MaxXThenMaxY,
        Side::Right => Extremal::MinXThenMinY,
    };
    let lead = extremal_atom(nu, mode)?;
    let eta = nu.translate(-lead.pos).plus(&MeasureExpr::delta(Pt::ORIGIN, -lead.w));
    Ok(match advance_extreme(&eta, v, side)? {
        None => f64::INFINITY,
        Some(e) => e.abs(),
    })
}

fn measures_for(cfg: &BlurConfig, side: Side, opts: &ReconstructOptions) -> Result<CaseMeasures> {
    let mut m = match opts.path {
        MeasurePath::General => build_general_measures(cfg, side)?,
        MeasurePath::Auto => build_case_measures(cfg, side)?,
    };
    if opts.corrupt_nu && cfg.len() > 1 {
        m.nu = m.nu.minus(&m.psi).minus(&m.psi);
    }
    Ok(m)
}

/// Runs the pipeline and fills in verification statistics without judging
/// them.
pub fn reconstruct_unchecked(cfg: &BlurConfig, g: &C2Fn, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    let orientation = validate_staircase(cfg)?;
    let reflected = orientation == Orientation::Cond2;
    let (work_cfg, work_g) = if reflected { (reflect_config_x(cfg), g.reflect_x()) } else { (cfg.clone(), g.clone()) };

    let left_m = measures_for(&work_cfg, Side::Left, opts)?;
    let right_m = measures_for(&work_cfg, Side::Right, opts)?;
    let cone = cone_for_pair(&right_m.nu, &left_m.nu)?;
    let v = cone.v;

    let (split, g_left, g_right) = match opts.split_mode {
        SplitMode::Auto if work_g.support().threshold(v, Side::Left).is_some() => {
            (SplitKind::LeftOnly, Some(work_g.clone()), None)
        }
        SplitMode::Auto if work_g.support().threshold(v, Side::Right).is_some() => {
            (SplitKind::RightOnly, None, Some(work_g.clone()))
        }
        _ => {
            let (up, down) = split_halfplane(&work_g, v, opts.split_width)?;
            (SplitKind::Ramp, Some(down), Some(up))
        }
    };

    let counts = AtomCounts {
        nu_terms: left_m.nu.terms().len(),
        nu_lattices: left_m.nu.lattice_count(),
        families: left_m.families.len(),
        nu_atoms_near_lead: {
            let ext = advance_extreme(&left_m.nu, v, Side::Left)?.unwrap_or(0.0);
            let reach = 8.0 * work_cfg.max_half_extent();
            crate::measure::atoms_in_slab(&left_m.nu, v, ext - reach, ext)?.len()
        },
    };

    let left = g_left.map(|gl| solve_side(&work_cfg, &gl, left_m, v, opts)).transpose()?;
    let right = g_right.map(|gr| solve_side(&work_cfg, &gr, right_m, v, opts)).transpose()?;
    let f_work = match (&left, &right) {
        (Some(l), Some(r)) => l.f.add(&r.f),
        (Some(l), None) => l.f.clone(),
        (None, Some(r)) => r.f.clone(),
        (None, None) => C2Fn::zero(),
    };
    let f = if reflected { f_work.reflect_x() } else { f_work };
    let beta = [left.as_ref().map(|s| s.beta), right.as_ref().map(|s| s.beta)]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);

    let (residual, corner_residual) = if opts.verify {
        let grid = match opts.grid {
            Some(g) => g,
            None => default_grid(cfg, g)?,
        };
        let (bx, by) = opts.breaklines;
        let q = QuadratureRule::gauss_legendre(opts.quad_order)?.with_breaklines(bx, by)?;
        (Some(residual_grid(&f, g, cfg, &grid, &q)?), Some(corner_residual_grid(&f, g, cfg, &grid)?))
    } else {
        (None, None)
    };

    Ok(ReconstructionResult {
        channels: f.channels(),
        f,
        orientation,
        cone,
        beta,
        split_width: opts.split_width,
        split,
        left,
        right,
        residual,
        corner_residual,
        atom_counts: counts,
        tolerance: opts.tolerance,
    })
}

/// Runs the pipeline and fails with `ResidualTooLarge` when the forward
/// residual exceeds the tolerance.
pub fn reconstruct(cfg: &BlurConfig, g: &C2Fn, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    let res = reconstruct_unchecked(cfg, g, opts)?;
    if let Some(r) = &res.residual {
        if !(r.max_abs <= opts.tolerance) {
            return Err(Error::ResidualTooLarge { max_abs: r.max_abs, tolerance: opts.tolerance });
        }
    }
    Ok(res)
}
