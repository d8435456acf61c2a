//! TOML problem descriptions.
//!
//! ```toml
//! [[rect]]
//! a = -1.0
//! b = 1.0
//! c = -1.0
//! d = 1.0
//! weight = 1.0            # or { re = 1.0, im = 0.5 }
//!
//! [g]
//! kind = "polybump"
//! center = [0.0, 0.0]
//! radii = [2.0, 2.0]
//!
//! [grid]
//! region = [-4.0, 4.0, -4.0, 4.0]
//! nx = 21
//! ny = 21
//!
//! [tolerances]
//! residual = 1e-8
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forward::{Breaklines, GridSpec};
use crate::geometry::{BlurConfig, Pt, Rect};
use crate::neumann::SolverOptions;
use crate::reconstruct::{lattice_breaklines, ReconstructOptions, SplitMode};
use crate::smoothfn::{C2Fn, Constant, PolyBump, Polynomial, TaperedGauss};

/// A real number or an `{ re, im }` table.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Complex { re, im } => Complex64::new(re, im),
        }
    }
}

fn unit() -> ComplexSpec {
    ComplexSpec::Real(1.0)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub weight: ComplexSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    #[serde(default = "unit")]
    pub amp: ComplexSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub px: u32,
    pub py: u32,
    pub coef: ComplexSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Polybump {
        center: [f64; 2],
        radii: [f64; 2],
        #[serde(default = "unit")]
        amp: ComplexSpec,
    },
    SumOfBumps {
        bumps: Vec<BumpSpec>,
    },
    Polynomial {
        terms: Vec<MonomialSpec>,
    },
    TaperedGauss {
        center: [f64; 2],
        sigma: f64,
        flat: f64,
        cutoff: f64,
        #[serde(default = "unit")]
        amp: ComplexSpec,
    },
    Constant {
        value: ComplexSpec,
    },
    /// Samples written by `forward`, interpolated between nodes.
    GridCsv {
        path: String,
    },
}

/// A built function together with the axis lines where its higher
/// derivatives jump.
#[derive(Debug, Clone)]
pub struct BuiltFn {
    pub f: C2Fn,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
}

fn bump(center: [f64; 2], radii: [f64; 2], amp: ComplexSpec) -> Result<(PolyBump, [f64; 2], [f64; 2])> {
    let b = PolyBump::new(Pt::new(center[0], center[1]), (radii[0], radii[1]), amp.into())?;
    let (ex, ey) = b.edges();
    Ok((b, ex, ey))
}

/// Polynomials above this total degree are refused.
pub const MAX_POLY_DEGREE: u32 = 32;
pub const MAX_BUMPS: usize = 4096;

impl FunctionSpec {
    /// Builds the function; CSV paths are resolved against `base_dir`, and
    /// are refused when it is `None`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<BuiltFn> {
        let smooth = |f: C2Fn| BuiltFn { f, x_edges: Vec::new(), y_edges: Vec::new() };
        Ok(match self {
            FunctionSpec::Polybump { center, radii, amp } => {
                let (b, ex, ey) = bump(*center, *radii, *amp)?;
                BuiltFn { f: C2Fn::new(b), x_edges: ex.to_vec(), y_edges: ey.to_vec() }
            }
            FunctionSpec::SumOfBumps { bumps } => {
                if bumps.len() > MAX_BUMPS {
                    return Err(Error::InvalidConfig(format!("more than {MAX_BUMPS} bumps")));
                }
                let mut out = smooth(C2Fn::zero());
                for s in bumps {
                    let (b, ex, ey) = bump(s.center, s.radii, s.amp)?;
                    out.f = out.f.add(&C2Fn::new(b));
                    out.x_edges.extend(ex);
                    out.y_edges.extend(ey);
                }
                out
            }
            FunctionSpec::Polynomial { terms } => {
                if let Some(t) = terms.iter().find(|t| t.px.saturating_add(t.py) > MAX_POLY_DEGREE) {
                    return Err(Error::InvalidConfig(format!("degree {} above {MAX_POLY_DEGREE}", t.px + t.py)));
                }
                let ts: Vec<_> = terms.iter().map(|t| (t.px, t.py, Complex64::from(t.coef))).collect();
                if ts.iter().any(|t| !t.2.is_finite()) {
                    return Err(Error::InvalidConfig("non-finite polynomial coefficient".into()));
                }
                smooth(C2Fn::new(Polynomial::new(ts)))
            }
            FunctionSpec::TaperedGauss { center, sigma, flat, cutoff, amp } => smooth(C2Fn::new(TaperedGauss::new(
                Pt::new(center[0], center[1]),
                *sigma,
                *flat,
                *cutoff,
                (*amp).into(),
            )?)),
            FunctionSpec::Constant { value } => {
                let c = Complex64::from(*value);
                if !c.is_finite() {
                    return Err(Error::InvalidConfig("non-finite constant".into()));
                }
                smooth(C2Fn::new(Constant::new(c)))
            }
            FunctionSpec::GridCsv { path } => {
                let dir = base_dir
                    .ok_or_else(|| Error::InvalidConfig(format!("grid file {path:?} needs a base directory")))?;
                let full: PathBuf = dir.join(path);
                let data = crate::io::read_grid_csv(std::fs::File::open(&full)?)?;
                let g = data.grid;
                let xs = (0..g.nx).map(|i| g.point(i, 0).x).collect();
                let ys = (0..g.ny).map(|j| g.point(0, j).y).collect();
                BuiltFn { f: C2Fn::new(data.into_sampled()?), x_edges: xs, y_edges: ys }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub region: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        let r = self.region;
        GridSpec::new((r[0], r[1], r[2], r[3]), self.nx, self.ny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BreaklineMode {
    /// Cut the quadrature at the common dyadic grid of the rectangle and
    /// function edges, when there is one.
    #[default]
    Auto,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitModeSpec {
    #[default]
    Auto,
    Always,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub split_width: f64,
    pub quad_order: usize,
    pub depth_cap: u64,
    pub memo_cap: usize,
    pub breaklines: BreaklineMode,
    pub split_mode: SplitModeSpec,
}

impl Default for Tolerances {
    fn default() -> Self {
        let r = ReconstructOptions::default();
        Tolerances {
            residual: r.tolerance,
            split_width: r.split_width,
            quad_order: r.quad_order,
            depth_cap: r.solver.depth_cap,
            memo_cap: r.solver.memo_cap,
            breaklines: BreaklineMode::Auto,
            split_mode: SplitModeSpec::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub rect: Vec<RectSpec>,
    /// Data to invert.
    pub g: Option<FunctionSpec>,
    /// Function to blur with `forward`.
    pub f_true: Option<FunctionSpec>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ProblemConfig {
    /// Parses and checks the parts that need no filesystem access.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ProblemConfig = toml::from_str(s).map_err(|e| Error::Parse(e.message().to_string()))?;
        let t = &cfg.tolerances;
        if !(t.residual >= 0.0) || !(t.split_width > 0.0 && t.split_width.is_finite()) {
            return Err(Error::InvalidConfig("residual must be >= 0 and split_width positive".into()));
        }
        if !(2..=128).contains(&t.quad_order) {
            return Err(Error::InvalidConfig(format!("quad_order {} outside 2..=128", t.quad_order)));
        }
        if let Some(g) = &cfg.grid {
            g.spec()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn blur_config(&self) -> Result<BlurConfig> {
        let rects = self.rect.iter().map(|r| Rect::new(r.a, r.b, r.c, r.d)).collect::<Result<Vec<_>>>()?;
        BlurConfig::new(rects, self.rect.iter().map(|r| r.weight.into()).collect())
    }

    pub fn grid_spec(&self) -> Result<Option<GridSpec>> {
        self.grid.as_ref().map(GridConfig::spec).transpose()
    }

    /// Reconstruction options for data `g` with the given edges.
    pub fn reconstruct_options(&self, blur: &BlurConfig, g: &BuiltFn) -> Result<ReconstructOptions> {
        let t = &self.tolerances;
        let breaklines: (Option<Breaklines>, Option<Breaklines>) = match t.breaklines {
            BreaklineMode::Auto => lattice_breaklines(blur, &g.x_edges, &g.y_edges),
            BreaklineMode::Off => (None, None),
        };
        Ok(ReconstructOptions {
            split_width: t.split_width,
            split_mode: match t.split_mode {
                SplitModeSpec::Auto => SplitMode::Auto,
                SplitModeSpec::Always => SplitMode::Always,
            },
            tolerance: t.residual,
            quad_order: t.quad_order,
            grid: self.grid_spec()?,
            breaklines,
            solver: SolverOptions { depth_cap: t.depth_cap, memo_cap: t.memo_cap },
            ..ReconstructOptions::default()
        })
    }
}
