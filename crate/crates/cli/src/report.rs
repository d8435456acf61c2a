use boxinv_core::reconstruct::{ReconstructOptions, ReconstructionResult};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct GridReport {
    pub region: [f64; 4],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub wall_seconds: f64,
}

/// Summary written to `report.toml`. Everything except `timings` is a
/// deterministic function of the input.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub orientation: String,
    pub v1: f64,
    pub v2: f64,
    pub beta: f64,
    pub split: String,
    pub split_width: f64,
    pub nu_terms: usize,
    pub nu_lattices: usize,
    pub families: usize,
    pub nu_atoms_near_lead: usize,
    pub quad_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakline_spacing_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakline_spacing_y: Option<f64>,
    pub residual_max: f64,
    pub residual_rms: f64,
    pub corner_residual_max: f64,
    pub tolerance: f64,
    pub verdict: String,
    pub grid: GridReport,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(res: &ReconstructionResult, opts: &ReconstructOptions, wall_seconds: f64) -> Self {
        let (rmax, rrms, grid) = match &res.residual {
            Some(r) => (r.max_abs, r.rms, Some(r.grid)),
            None => (f64::NAN, f64::NAN, None),
        };
        let grid = grid.map_or(GridReport { region: [f64::NAN; 4], nx: 0, ny: 0 }, |g| GridReport {
            region: [g.xmin, g.xmax, g.ymin, g.ymax],
            nx: g.nx,
            ny: g.ny,
        });
        RunReport {
            orientation: res.orientation.to_string(),
            v1: res.cone.v.v1(),
            v2: res.cone.v.v2(),
            beta: res.beta,
            split: res.split.to_string(),
            split_width: res.split_width,
            nu_terms: res.atom_counts.nu_terms,
            nu_lattices: res.atom_counts.nu_lattices,
            families: res.atom_counts.families,
            nu_atoms_near_lead: res.atom_counts.nu_atoms_near_lead,
            quad_order: opts.quad_order,
            breakline_spacing_x: opts.breaklines.0.map(|b| b.spacing),
            breakline_spacing_y: opts.breaklines.1.map(|b| b.spacing),
            residual_max: rmax,
            residual_rms: rrms,
            corner_residual_max: res.corner_residual.as_ref().map_or(f64::NAN, |r| r.max_abs),
            tolerance: res.tolerance,
            verdict: if res.passed() { "pass" } else { "fail" }.to_string(),
            grid,
            timings: Timings { wall_seconds },
        }
    }

    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }
}
