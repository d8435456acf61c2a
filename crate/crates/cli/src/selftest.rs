//! Reduced-size versions of the acceptance checks.

use boxinv_core::forward::{blur, Breaklines, GridSpec, QuadratureRule};
use boxinv_core::geometry::{BlurConfig, Direction, Pt, Rect, Side};
use boxinv_core::measure::MeasureExpr;
use boxinv_core::neumann::{solve_perturbed_identity, PerturbedIdentityProblem, SolverOptions};
use boxinv_core::reconstruct::{reconstruct_unchecked, MeasurePath, ReconstructOptions};
use boxinv_core::smoothfn::{conv_measure, split_halfplane, C2Fn, PolyBump, Polynomial};
use boxinv_core::{Complex64, Result};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn config(rs: &[(f64, f64, f64, f64)], ws: &[f64]) -> Result<BlurConfig> {
    BlurConfig::new(
        rs.iter().map(|r| Rect::new(r.0, r.1, r.2, r.3)).collect::<Result<Vec<_>>>()?,
        ws.iter().map(|&w| c(w)).collect(),
    )
}

fn bump(radius: f64) -> Result<C2Fn> {
    Ok(C2Fn::new(PolyBump::new(Pt::ORIGIN, (radius, radius), c(1.0))?))
}

struct Settings {
    tol: Option<f64>,
    quad_order: usize,
    corrupt_nu: bool,
}

/// `(passed, detail)`.
type Outcome = Result<(bool, String)>;

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn half_grid() -> (Option<Breaklines>, Option<Breaklines>) {
    let b = Some(Breaklines { spacing: 0.5, offset: 0.0 });
    (b, b)
}

fn end_to_end(s: &Settings, cfg: &BlurConfig, g: &C2Fn, grid: GridSpec, tol: f64) -> Outcome {
    let opts = ReconstructOptions {
        tolerance: s.tol.unwrap_or(tol),
        quad_order: s.quad_order,
        grid: Some(grid),
        breaklines: half_grid(),
        corrupt_nu: s.corrupt_nu,
        ..ReconstructOptions::default()
    };
    let res = reconstruct_unchecked(cfg, g, &opts)?;
    let r = res.residual.as_ref().map_or(f64::INFINITY, |r| r.max_abs);
    Ok((res.passed(), format!("residual {r:.3e} (tol {:.1e})", opts.tolerance)))
}

fn perturbed_identity(s: &Settings) -> Outcome {
    let v = Direction::diagonal();
    let h = C2Fn::new(PolyBump::new(Pt::new(0.2, -0.1), (1.0, 1.5), c(1.0))?);
    let eta = MeasureExpr::delta(Pt::new(-0.5, -0.25), c(0.7))
        .plus(&MeasureExpr::delta(Pt::new(-1.0, 0.1), c(-0.4)))
        .plus(&MeasureExpr::delta(Pt::new(0.2, -0.9), Complex64::new(0.3, 0.2)));
    let p = PerturbedIdentityProblem::new(h.clone(), eta.clone(), v, Side::Left)?;
    let f = solve_perturbed_identity(&p, &SolverOptions::default())?;
    let back = conv_measure(&f, &MeasureExpr::delta(Pt::ORIGIN, c(1.0)).plus(&eta), v)?;
    let mut worst: f64 = 0.0;
    for i in 0..25 {
        let q = Pt::new(-2.5 + 0.19 * i as f64, 1.5 - 0.13 * i as f64);
        worst = worst.max((back.value(q)? - h.value(q)?).norm());
    }
    let tol = s.tol.unwrap_or(1e-10);
    Ok((worst <= tol, format!("max {worst:.3e}")))
}

fn forward_closed_forms(s: &Settings) -> Outcome {
    let cfg = config(&[(-1.0, 1.0, -1.0, 1.0)], &[1.0])?;
    let q = QuadratureRule::gauss_legendre(s.quad_order.max(2))?;
    let one = C2Fn::new(Polynomial::new(vec![(0, 0, c(1.0))]));
    let xy = C2Fn::new(Polynomial::new(vec![(1, 1, c(1.0))]));
    let mut worst: f64 = 0.0;
    for p in [Pt::new(0.3, -0.7), Pt::new(2.0, 5.0), Pt::new(-1.25, 0.5)] {
        worst = worst.max((blur(&one, &cfg, p, &q)? - c(4.0)).norm());
        worst = worst.max((blur(&xy, &cfg, p, &q)? - c(4.0 * p.x * p.y)).norm() / (1.0 + (p.x * p.y).abs()));
    }
    Ok((worst <= 1e-12, format!("max {worst:.3e}")))
}

fn split_exact() -> Outcome {
    let g = bump(2.0)?;
    let v = Direction::new(0.9, 0.4)?;
    let (up, down) = split_halfplane(&g, v, 0.25)?;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let p = Pt::new(-1.9 + 0.077 * i as f64, 1.7 - 0.069 * i as f64);
        worst = worst.max((up.value(p)? + down.value(p)? - g.value(p)?).norm());
    }
    Ok((worst <= 1e-14, format!("max {worst:.3e}")))
}

fn two_rect_paths(s: &Settings) -> Outcome {
    let cfg = config(&[(-1.0, 1.0, -1.0, 1.0), (0.5, 2.5, 0.5, 2.5)], &[1.0, 0.5])?;
    let g = bump(1.0)?;
    let base = ReconstructOptions { verify: false, corrupt_nu: s.corrupt_nu, ..ReconstructOptions::default() };
    let a = reconstruct_unchecked(&cfg, &g, &base)?;
    let b = reconstruct_unchecked(&cfg, &g, &ReconstructOptions { path: MeasurePath::General, ..base.clone() })?;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let p = Pt::new(-2.0 + 0.21 * i as f64, -0.3 - 0.17 * i as f64);
        worst = worst.max((a.f.value(p)? - b.f.value(p)?).norm());
    }
    Ok((worst <= 1e-9, format!("max {worst:.3e}")))
}

/// Runs every check and returns the number of failures.
pub fn run(tol: Option<f64>, quad_order: Option<usize>, corrupt_nu: bool) -> std::result::Result<(), usize> {
    let s = Settings { tol, quad_order: quad_order.unwrap_or(8), corrupt_nu };
    let square = || GridSpec::new((-4.0, 4.0, -4.0, 4.0), 9, 9);
    let n2 = [(-1.0, 1.0, -1.0, 1.0), (0.5, 2.5, 0.5, 2.5)];
    let checks: Vec<Check> = vec![
        ("perturbed-identity", Box::new(|| perturbed_identity(&s))),
        ("forward-closed-forms", Box::new(|| forward_closed_forms(&s))),
        ("split-exactness", Box::new(split_exact)),
        ("two-rect-vs-general", Box::new(|| two_rect_paths(&s))),
        (
            "end-to-end-n1",
            Box::new(|| end_to_end(&s, &config(&[(-1.0, 1.0, -1.0, 1.0)], &[1.0])?, &bump(2.0)?, square()?, 1e-8)),
        ),
        (
            "end-to-end-n2",
            Box::new(|| end_to_end(&s, &config(&n2, &[1.0, 0.5])?, &bump(1.0)?, square()?, 1e-6)),
        ),
        (
            "end-to-end-n2-mirrored",
            Box::new(|| {
                let m: Vec<_> = n2.iter().map(|r| (-r.1, -r.0, r.2, r.3)).collect();
                end_to_end(&s, &config(&m, &[1.0, 0.5])?, &bump(1.0)?, square()?, 1e-6)
            }),
        ),
        (
            "end-to-end-n3",
            Box::new(|| {
                let rs = [(-1.0, 1.0, -1.0, 1.0), (-0.5, 1.5, -0.5, 1.5), (0.0, 2.0, 0.0, 2.0)];
                let grid = GridSpec::new((-3.0, 3.0, -3.0, 3.0), 7, 7)?;
                end_to_end(&s, &config(&rs, &[1.0, 0.5, 0.25])?, &bump(1.0)?, grid, 1e-5)
            }),
        ),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        match check() {
            Ok((true, d)) => println!("PASS {name}: {d}"),
            Ok((false, d)) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(failed)
    }
}
