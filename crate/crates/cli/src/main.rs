use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use boxinv_core::config::{BreaklineMode, ProblemConfig};
use boxinv_core::forward::{blur, GridSpec, QuadratureRule};
use boxinv_core::geometry::validate_staircase;
use boxinv_core::io::write_grid_csv;
use boxinv_core::reconstruct::{default_grid, lattice_breaklines, reconstruct_unchecked};
use boxinv_core::Error;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

mod report;
mod selftest;

use report::RunReport;

#[derive(Parser, Debug)]
#[command(name = "boxinv", version, about = "Invert blurs by weighted sums of rectangle indicators")]
struct Cli {
    /// Worker threads for grid evaluation (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check that the rectangles form a staircase.
    Validate(Common),
    /// Blur `f_true` and write the samples as CSV.
    Forward(Common),
    /// Solve for `f` with `f ★ μ = g` and verify the residual.
    Reconstruct(Common),
    /// Run the built-in acceptance checks at reduced sizes.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size as `NX,NY`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Residual tolerance applied to every end-to-end check.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, hide = true)]
    corrupt_nu: bool,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected NX,NY")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Failure carrying the process exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Staircase(_) | Error::ZeroMeasure => 2,
            Error::ResidualTooLarge { .. } => 3,
            _ => 1,
        };
        Fail(code, e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(1, e.to_string())
    }
}

struct Loaded {
    cfg: ProblemConfig,
    dir: PathBuf,
}

fn load(args: &Common) -> Result<Loaded, Fail> {
    let mut cfg = ProblemConfig::load(&args.config).map_err(|e| match e {
        Error::InvalidGrid(_) => Fail(2, e.to_string()),
        _ => Fail(1, e.to_string()),
    })?;
    if let Some(t) = args.tol {
        cfg.tolerances.residual = t;
    }
    if let Some(q) = args.quad_order {
        cfg.tolerances.quad_order = q;
    }
    let dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { cfg, dir })
}

fn out_dir(args: &Common, l: &Loaded) -> Result<PathBuf, Fail> {
    let dir = match (&args.out, &l.cfg.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => l.dir.join(d),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Grid from the config, with `--grid` overriding the point counts.
fn grid_for(args: &Common, l: &Loaded, fallback: impl FnOnce() -> boxinv_core::Result<GridSpec>) -> Result<GridSpec, Fail> {
    let base = match l.cfg.grid_spec()? {
        Some(g) => g,
        None => fallback()?,
    };
    match args.grid {
        None => Ok(base),
        Some((nx, ny)) => GridSpec::new((base.xmin, base.xmax, base.ymin, base.ymax), nx, ny)
            .map_err(|e| Fail(2, e.to_string())),
    }
}

fn cmd_validate(args: &Common) -> Result<(), Fail> {
    let l = load(args)?;
    let mu = l.cfg.blur_config()?;
    let o = validate_staircase(&mu)?;
    println!("{o}");
    Ok(())
}

fn cmd_forward(args: &Common) -> Result<(), Fail> {
    let l = load(args)?;
    let mu = l.cfg.blur_config()?;
    let spec = l.cfg.f_true.as_ref().ok_or_else(|| Fail(1, "config has no [f_true]".into()))?;
    let f = spec.build(Some(&l.dir))?;
    let grid = grid_for(args, &l, || default_grid(&mu, &f.f))?;
    let (bx, by) = match l.cfg.tolerances.breaklines {
        BreaklineMode::Auto => lattice_breaklines(&mu, &f.x_edges, &f.y_edges),
        BreaklineMode::Off => (None, None),
    };
    let q = QuadratureRule::gauss_legendre(l.cfg.tolerances.quad_order)?.with_breaklines(bx, by)?;
    let rows = grid
        .points()
        .into_par_iter()
        .map(|p| Ok((p, blur(&f.f, &mu, p, &q)?)))
        .collect::<boxinv_core::Result<Vec<_>>>()?;
    let path = out_dir(args, &l)?.join("g.csv");
    write_grid_csv(BufWriter::new(File::create(&path)?), rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_reconstruct(args: &Common) -> Result<(), Fail> {
    let start = Instant::now();
    let l = load(args)?;
    let mu = l.cfg.blur_config()?;
    let spec = l.cfg.g.as_ref().ok_or_else(|| Fail(1, "config has no [g]".into()))?;
    let g = spec.build(Some(&l.dir))?;
    let mut opts = l.cfg.reconstruct_options(&mu, &g)?;
    opts.grid = Some(grid_for(args, &l, || default_grid(&mu, &g.f))?);
    let res = reconstruct_unchecked(&mu, &g.f, &opts)?;
    let report = RunReport::new(&res, &opts, start.elapsed().as_secs_f64());

    let dir = out_dir(args, &l)?;
    let stats = res.residual.as_ref().ok_or_else(|| Fail(1, "verification did not run".into()))?;
    let f_rows = stats
        .samples
        .par_iter()
        .map(|s| Ok((s.p, res.f.value(s.p)?)))
        .collect::<boxinv_core::Result<Vec<_>>>()?;
    write_grid_csv(BufWriter::new(File::create(dir.join("f_hat.csv"))?), f_rows)?;
    write_grid_csv(
        BufWriter::new(File::create(dir.join("residual.csv"))?),
        stats.samples.iter().map(|s| (s.p, s.forward - s.target)),
    )?;
    let text = report.to_toml().map_err(|e| Fail(1, e))?;
    std::fs::write(dir.join("report.toml"), &text)?;
    print!("{text}");
    if report.verdict != "pass" {
        return Err(Error::ResidualTooLarge { max_abs: report.residual_max, tolerance: report.tolerance }.into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let r = match &cli.cmd {
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Forward(a) => cmd_forward(a),
        Cmd::Reconstruct(a) => cmd_reconstruct(a),
        Cmd::Selftest(a) => selftest::run(a.tol, a.quad_order, a.corrupt_nu).map_err(|n| Fail(1, format!("{n} check(s) failed"))),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
