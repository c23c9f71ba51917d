//! Command line for the thin obstacle laboratory: config-driven pipeline
//! plus direct subcommands wrapping the individual analyses.
//!
//! Exit codes: 0 success, 2 config error, 3 hypothesis failure, 4 solver
//! divergence, 1 anything else.

mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{CliError, CliResult};
use signorini::almgren::{almgren_sweep, ico_audit};
use signorini::coefficients::{validate_hypotheses, MatrixField};
use signorini::fields::{GridSpec, ScalarField};
use signorini::frequency::{
    frequency_sweep, geometric_radii_with, monotonicity_audit,
};
use signorini::geometry::{
    beta, contact_order, homogeneous_library, minkowski_content, write_beta_csv,
    write_contact_order_csv, write_minkowski_csv, BoxRegion, Family,
};
use signorini::intrinsic::intrinsic_sweep;
use signorini::solver::{assemble, solve_signorini, SolveConfig};

#[derive(Parser)]
#[command(
    name = "signorini",
    about = "Thin obstacle laboratory: grid solves, frequency functions and free-boundary geometry"
)]
struct Cli {
    /// Worker threads for multi-point sweeps (outputs are deterministic for
    /// any value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for the randomized boundary presets; core analyses ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FieldArgs {
    /// SGNF1 field file.
    #[arg(long)]
    field: PathBuf,
    /// Base point (comma-separated coordinates).
    #[arg(long, default_value = "0,0")]
    x0: String,
    /// Coefficient preset name.
    #[arg(long, default_value = "identity")]
    coeff: String,
    /// Coefficient preset parameters (comma-separated).
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long, default_value_t = 4)]
    steps: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full config-driven pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assemble and solve only, writing the solution field and report.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Frequency sweep of a stored field.
    Freq {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Intrinsic frequency sweep of a stored field.
    Intrinsic {
        #[command(flatten)]
        field: FieldArgs,
        /// Additive quasi-monotonicity constant for J and Xi.
        #[arg(long, default_value_t = 0.0)]
        c: f64,
    },
    /// Solid-ball sweep of a stored field (requires identity coefficients at
    /// the base point).
    Almgren {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Mean flatness of the extracted free boundary at a center and radii.
    Beta {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "0,0")]
        center: String,
        #[arg(long)]
        radii: String,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Minkowski content of the extracted free boundary.
    Minkowski {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        radii: String,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Order-of-contact estimate at a point of a stored field.
    ContactOrder {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "0,0")]
        x0: String,
        #[arg(long, default_value_t = 0.8)]
        rho_max: f64,
        #[arg(long, default_value_t = 6)]
        levels: usize,
    },
    /// Run every monotonicity/doubling/identity audit on a stored field and
    /// print a pass/fit table.
    Audit {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Write an exact homogeneous-library element as an SGNF1 field.
    Library {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 257)]
        counts: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_point(s: &str) -> CliResult<[f64; 3]> {
    let coords: Vec<f64> = s
        .split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad coordinate {t:?}: {e}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if coords.len() < 2 || coords.len() > 3 {
        return Err(CliError::Config(format!(
            "point {s:?} must have 2 or 3 coordinates"
        )));
    }
    let mut p = [0.0; 3];
    p[..coords.len()].copy_from_slice(&coords);
    Ok(p)
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn coeff_from(field: &ScalarField, name: &str, params: &str) -> CliResult<MatrixField> {
    let params = parse_list(params)?;
    MatrixField::from_preset(field.grid().dim(), name, &params)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn radii_for(field: &ScalarField, args: &FieldArgs) -> Vec<f64> {
    let (dmin, dmax) = signorini::frequency::default_radius_window(field.grid());
    geometric_radii_with(
        args.r_min.unwrap_or(dmin),
        args.r_max.unwrap_or(dmax),
        args.steps,
    )
}

fn dispatch(cli: Cli) -> CliResult<()> {
    std::fs::create_dir_all(&cli.out_dir)?;
    match cli.command {
        Command::Run { config } => {
            let out = config::run(&config, &cli.out_dir, cli.threads.max(1), cli.seed)?;
            println!("summary written to {}", out.summary_path.display());
            Ok(())
        }
        Command::Solve { config } => {
            let cfg = config::load_config(&config)?;
            let grid = match &cfg.grid.counts {
                config::Counts::Square(n) => GridSpec::square(cfg.grid.dim, *n),
                config::Counts::PerAxis(v) => GridSpec::new(cfg.grid.dim, v),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            let mf = MatrixField::from_preset(
                grid.dim(),
                &cfg.coefficients.preset,
                &cfg.coefficients.params,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let rep = validate_hypotheses(&mf, &grid);
            if let Some(msg) = rep.failure_message() {
                return Err(CliError::Hypothesis(msg));
            }
            let (g, exact) = config::boundary_field(&cfg.boundary, &grid, cli.seed)?;
            if exact {
                g.write(cli.out_dir.join("field.sgnf"))
                    .map_err(CliError::from)?;
                println!("exact library field written (no solve needed)");
                return Ok(());
            }
            let sys = assemble(&mf, &grid).map_err(CliError::from)?;
            let solve_cfg = SolveConfig {
                omega: cfg.solver.omega,
                tol: cfg.solver.tol,
                max_sweeps: cfg.solver.max_sweeps,
                reverse_order: false,
            };
            let (u, rep) = solve_signorini(&sys, &g, &solve_cfg).map_err(CliError::from)?;
            u.write(cli.out_dir.join("field.sgnf"))
                .map_err(CliError::from)?;
            std::fs::write(cli.out_dir.join("solve_report.txt"), rep.to_text())?;
            print!("{}", rep.to_text());
            Ok(())
        }
        Command::Freq { field } => {
            let u = config::read_field(&field.field)?;
            let mf = coeff_from(&u, &field.coeff, &field.params)?;
            let x0 = parse_point(&field.x0)?;
            let cutoff = config::default_cutoff();
            let radii = radii_for(&u, &field);
            let sweep =
                frequency_sweep(&u, &mf, &x0, &radii, &cutoff).map_err(CliError::from)?;
            let mut buf = Vec::new();
            sweep.write_csv(&mut buf)?;
            let path = cli.out_dir.join("freq.csv");
            std::fs::write(&path, &buf)?;
            println!("sweep written to {}", path.display());
            Ok(())
        }
        Command::Intrinsic { field, c } => {
            let u = config::read_field(&field.field)?;
            let mf = coeff_from(&u, &field.coeff, &field.params)?;
            let x0 = parse_point(&field.x0)?;
            let cutoff = config::default_cutoff();
            let radii = radii_for(&u, &field);
            let sweep =
                intrinsic_sweep(&u, &mf, &x0, &radii, &cutoff, c).map_err(CliError::from)?;
            let mut buf = Vec::new();
            sweep.write_csv(&mut buf)?;
            let path = cli.out_dir.join("intrinsic.csv");
            std::fs::write(&path, &buf)?;
            println!("sweep written to {}", path.display());
            Ok(())
        }
        Command::Almgren { field } => {
            let u = config::read_field(&field.field)?;
            let mf = coeff_from(&u, &field.coeff, &field.params)?;
            let x0 = parse_point(&field.x0)?;
            let floor = 8.0 * u.grid().max_spacing();
            let radii: Vec<f64> = radii_for(&u, &field)
                .into_iter()
                .filter(|&r| r >= floor)
                .collect();
            let sweep = almgren_sweep(&u, &mf, &x0, &radii).map_err(CliError::from)?;
            let mut buf = Vec::new();
            sweep.write_csv(&mut buf)?;
            let path = cli.out_dir.join("almgren.csv");
            std::fs::write(&path, &buf)?;
            println!("sweep written to {}", path.display());
            Ok(())
        }
        Command::Beta {
            field,
            center,
            radii,
            tol_scale,
        } => {
            let u = config::read_field(&field)?;
            let center = parse_point(&center)?;
            let radii = parse_list(&radii)?;
            let (fb, gamma) = config::gamma_of(&u, tol_scale)?;
            let dim = u.grid().dim();
            let weight = fb.spacing.powi(dim as i32 - 2);
            let weighted: Vec<([f64; 3], f64)> = gamma.iter().map(|p| (*p, weight)).collect();
            let reports: Vec<_> = radii
                .iter()
                .map(|&r| beta(&weighted, dim, &center, r))
                .collect();
            let mut buf = Vec::new();
            write_beta_csv(&mut buf, &reports)?;
            let path = cli.out_dir.join("beta.csv");
            std::fs::write(&path, &buf)?;
            println!("beta table written to {}", path.display());
            Ok(())
        }
        Command::Minkowski {
            field,
            radii,
            tol_scale,
        } => {
            let u = config::read_field(&field)?;
            let radii = parse_list(&radii)?;
            let (_, gamma) = config::gamma_of(&u, tol_scale)?;
            let dim = u.grid().dim();
            let hs = {
                let target = ((u.grid().count(0) - 1) * 4).min(1024);
                2.0 / target as f64
            };
            let margin = radii.iter().cloned().fold(0.0, f64::max) + 2.0 * hs;
            let region = BoxRegion {
                min: [-0.5 - margin; 3],
                max: [0.5 + margin; 3],
            };
            let mut rows = Vec::new();
            for &r in &radii {
                let (v, q) =
                    minkowski_content(&gamma, dim, &region, r, hs).map_err(CliError::from)?;
                rows.push((r, v, q));
            }
            let mut buf = Vec::new();
            write_minkowski_csv(&mut buf, &rows)?;
            let path = cli.out_dir.join("minkowski.csv");
            std::fs::write(&path, &buf)?;
            println!("minkowski table written to {}", path.display());
            Ok(())
        }
        Command::ContactOrder {
            field,
            x0,
            rho_max,
            levels,
        } => {
            let u = config::read_field(&field)?;
            let x0 = parse_point(&x0)?;
            let cutoff = config::default_cutoff();
            let order =
                contact_order(&u, &x0, rho_max, levels, &cutoff).map_err(CliError::from)?;
            let mut buf = Vec::new();
            write_contact_order_csv(&mut buf, &order)?;
            let path = cli.out_dir.join("contact_order.csv");
            std::fs::write(&path, &buf)?;
            println!(
                "slope {:.6} window [{:.6}, {:.6}] written to {}",
                order.slope,
                order.kappa_low,
                order.kappa_high,
                path.display()
            );
            Ok(())
        }
        Command::Audit { field } => {
            let u = config::read_field(&field.field)?;
            let mf = coeff_from(&u, &field.coeff, &field.params)?;
            let x0 = parse_point(&field.x0)?;
            let cutoff = config::default_cutoff();
            let radii = radii_for(&u, &field);
            let sweep =
                frequency_sweep(&u, &mf, &x0, &radii, &cutoff).map_err(CliError::from)?;
            let samples: Vec<(f64, f64)> = sweep.rows.iter().map(|r| (r.r, r.i)).collect();
            println!("radii {} in [{}, {}]", radii.len(), radii[0], radii[radii.len() - 1]);
            match monotonicity_audit(&samples, mf.alpha()) {
                Ok(fit) => {
                    println!("freq_c_star_exp {:.6e}", fit.c_exp);
                    println!("freq_c_star_add {:.6e}", fit.c_add);
                }
                Err(e) => println!("freq_audit_error {e}"),
            }
            println!(
                "cauchy_schwarz_defect {:.6e} (pass {})",
                sweep.cauchy_schwarz_defect(),
                sweep.cauchy_schwarz_defect() <= 1e-10
            );
            let mut hmax: Option<f64> = None;
            let mut dmin: Option<f64> = None;
            for row in &sweep.rows {
                if let Some(h2h) = row.h2h {
                    hmax = Some(hmax.map_or(h2h, |m: f64| m.max(h2h)));
                }
                if let Some(d2d) = row.d2d {
                    dmin = Some(dmin.map_or(d2d, |m: f64| m.min(d2d)));
                }
            }
            let mut hmin: Option<f64> = None;
            for row in &sweep.rows {
                if let Some(h2h) = row.h2h {
                    hmin = Some(hmin.map_or(h2h, |m: f64| m.min(h2h)));
                }
            }
            if let (Some(hi), Some(lo)) = (hmax, hmin) {
                println!("doubling_H_min {lo:.6}");
                println!("doubling_H_max {hi:.6}");
            }
            if let Some(d) = dmin {
                println!("doubling_D_min {d:.6} (pass {})", d >= 1.0 - 1e-9);
            }
            let worst_ident = sweep
                .rows
                .iter()
                .map(|r| r.hp_resid.max(r.dp_resid))
                .fold(0.0f64, f64::max);
            println!("radial_identity_max_resid {worst_ident:.6e}");
            if mf.at(&x0).is_identity(1e-10) {
                let floor = 8.0 * u.grid().max_spacing();
                let aradii: Vec<f64> = radii.iter().cloned().filter(|&r| r >= floor).collect();
                let asweep = almgren_sweep(&u, &mf, &x0, &aradii).map_err(CliError::from)?;
                let c = ico_audit(&asweep).map_err(CliError::from)?;
                println!("ico_c_star {c:.6e}");
            }
            Ok(())
        }
        Command::Library {
            family,
            m,
            dim,
            counts,
            out,
        } => {
            let fam = Family::parse(&family).map_err(|e| CliError::Config(e.to_string()))?;
            let w = homogeneous_library(2, fam, m).map_err(CliError::from)?;
            let grid =
                GridSpec::square(dim, counts).map_err(|e| CliError::Config(e.to_string()))?;
            let f = move |p: &[f64; 3]| {
                if dim == 2 {
                    w.value(p)
                } else {
                    w.value(&[p[0], p[2], 0.0])
                }
            };
            let field = ScalarField::sample(grid, f, true).map_err(CliError::from)?;
            field.write(&out).map_err(CliError::from)?;
            println!("library field written to {}", out.display());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
