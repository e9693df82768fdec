//! Command-line front end.
//!
//! Exit codes are the only success channel: 0 on success, 1 when a
//! search or verification fails, 2 on input errors (bad files, bad
//! dimensions, bad flags).

use crate::contraction::{sampled_decay_check, verify_certificate, DECAY_MARGIN};
use crate::files::{
    load_certificate, load_model, load_points, save_certificate, status_name, CertificateFile,
    ModelFile,
};
use crate::hull::{angular_order, gift_wrap_facets};
use crate::numerics::Vector;
use crate::plants::PlantModel;
use crate::search::{find_polyhedron, synthesize, SearchConfig, SearchReport, SearchStatus, StepMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "polylyap",
    about = "Searches for polyhedral Lyapunov functions of fixed complexity for linear systems \
             and polytopic differential inclusions, and synthesizes static output feedback"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify a stored certificate against a model, or search for one.
    Verify {
        /// Model file (JSON).
        model: PathBuf,
        /// Existing certificate to re-verify; omit to search.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Where to write the certificate found by the search.
        #[arg(long, default_value = "certificate.json")]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search for a contracting polytope and a stabilizing output-feedback gain.
    Synthesize {
        /// Synthesis model file (JSON).
        model: PathBuf,
        #[arg(long, default_value = "certificate.json")]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Evaluate the certified function and its decay at given points.
    Eval {
        certificate: PathBuf,
        /// JSON array of coordinate arrays.
        points: PathBuf,
    },
    /// Write plot data (CSV) for a 2-D or 3-D certificate.
    Plot {
        certificate: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StepArg {
    Full,
    Fast,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Number of polytope vertices (default: 2·dimension + 2).
    #[arg(long)]
    vertices: Option<usize>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Initial step budget ε (default: 0.05 · largest initial vertex entry).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    eta_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, value_enum, default_value_t = StepArg::Fast)]
    step: StepArg,
    /// Perturbation factor for the motor models.
    #[arg(long)]
    gamma: Option<f64>,
    /// Gain box half-width for synthesis.
    #[arg(long, default_value_t = 1e3)]
    kappa: f64,
}

impl SearchArgs {
    fn to_config(&self, state_dim: usize) -> SearchConfig {
        let mut cfg = SearchConfig::new(self.vertices.unwrap_or(2 * state_dim + 2));
        cfg.max_iter = self.max_iter;
        cfg.epsilon0 = self.epsilon;
        cfg.eta_tol = self.eta_tol;
        cfg.seed = self.seed;
        cfg.restarts = self.restarts;
        cfg.step_mode = match self.step {
            StepArg::Full => StepMode::Full,
            StepArg::Fast => StepMode::Fast,
        };
        cfg.kappa = self.kappa;
        cfg
    }
}

/// Runs the CLI on the given argument list and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through errors as well.
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Verify {
            model,
            certificate,
            out,
            search,
        } => cmd_verify(&model, certificate.as_deref(), &out, &search),
        Command::Synthesize { model, out, search } => cmd_synthesize(&model, &out, &search),
        Command::Eval {
            certificate,
            points,
        } => cmd_eval(&certificate, &points),
        Command::Plot { certificate, out } => cmd_plot(&certificate, &out),
    }
}

fn load_model_checked(
    path: &Path,
    gamma: Option<f64>,
) -> Result<(ModelFile, PlantModel), i32> {
    let file = load_model(path).map_err(|e| {
        eprintln!("error: cannot read model {}: {e}", path.display());
        EXIT_INPUT
    })?;
    let model = file.to_plant_model(gamma).map_err(|e| {
        eprintln!("error: invalid model {}: {e}", path.display());
        EXIT_INPUT
    })?;
    Ok((file, model))
}

fn print_report(report: &SearchReport) {
    println!("status: {}", status_name(report.status));
    println!(
        "iterations: {} (restart {} of {})",
        report.trace.len().saturating_sub(1),
        report.restart_index + 1,
        report.restarts_used
    );
    if let Some(cert) = &report.certificate {
        println!("eta = {:.17e}", cert.eta);
    } else if let Some(last) = report.trace.last() {
        println!("best eta = {:.17e}", last.eta);
    }
}

fn write_certificate_file(
    report: &SearchReport,
    model_file: &ModelFile,
    cfg: &SearchConfig,
    out: &Path,
) -> i32 {
    let Some(file) = CertificateFile::from_report(report, model_file, cfg) else {
        return EXIT_FAILED;
    };
    match save_certificate(out, &file) {
        Ok(()) => {
            println!("certificate written to {}", out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: cannot write certificate: {e}");
            EXIT_INPUT
        }
    }
}

fn cmd_verify(
    model_path: &Path,
    certificate: Option<&Path>,
    out: &Path,
    search: &SearchArgs,
) -> i32 {
    let (model_file, model) = match load_model_checked(model_path, search.gamma) {
        Ok(v) => v,
        Err(code) => return code,
    };

    if let Some(cert_path) = certificate {
        let cert_file = match load_certificate(cert_path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: cannot read certificate: {e}");
                return EXIT_INPUT;
            }
        };
        let (cert, _) = match cert_file.to_certificate() {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        };
        let closed = match model.closed_loop(cert.gain.as_ref()) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        };
        println!("eta = {:.17e}", cert.eta);
        let structural = verify_certificate(&cert, &closed);
        println!("certificate check: {}", if structural { "PASS" } else { "FAIL" });
        if !structural {
            return EXIT_FAILED;
        }
        let decay = sampled_decay_check(&cert, &closed, 1000, search.seed);
        println!("sampled decay check: {}", if decay { "PASS" } else { "FAIL" });
        return if decay { EXIT_OK } else { EXIT_FAILED };
    }

    if matches!(model, PlantModel::Synthesis(_)) {
        eprintln!("error: use `synthesize` to search on a synthesis model");
        return EXIT_INPUT;
    }
    let cfg = search.to_config(model.state_dim());
    let report = match find_polyhedron(&model, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    print_report(&report);
    if report.status != SearchStatus::Certified {
        return EXIT_FAILED;
    }
    write_certificate_file(&report, &model_file, &cfg, out)
}

fn cmd_synthesize(model_path: &Path, out: &Path, search: &SearchArgs) -> i32 {
    let (model_file, model) = match load_model_checked(model_path, search.gamma) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if !matches!(model, PlantModel::Synthesis(_)) {
        eprintln!("error: synthesize needs a synthesis-kind model");
        return EXIT_INPUT;
    }
    let cfg = search.to_config(model.state_dim());
    let report = match synthesize(&model, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    print_report(&report);
    if let Some(cert) = &report.certificate {
        if let Some(k) = &cert.gain {
            let rows: Vec<String> = (0..k.nrows())
                .map(|i| {
                    let entries: Vec<String> =
                        (0..k.ncols()).map(|j| format!("{:.6}", k[(i, j)])).collect();
                    format!("[{}]", entries.join(", "))
                })
                .collect();
            println!("K = [{}]", rows.join(", "));
        }
    }
    if report.status != SearchStatus::Certified {
        return EXIT_FAILED;
    }
    write_certificate_file(&report, &model_file, &cfg, out)
}

fn cmd_eval(cert_path: &Path, points_path: &Path) -> i32 {
    let cert_file = match load_certificate(cert_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cannot read certificate: {e}");
            return EXIT_INPUT;
        }
    };
    let (cert, model) = match cert_file.to_certificate() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let closed = match model.closed_loop(cert.gain.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if !verify_certificate(&cert, &closed) {
        eprintln!("error: certificate does not verify against its model");
        return EXIT_FAILED;
    }
    let points = match load_points(points_path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot read points: {e}");
            return EXIT_INPUT;
        }
    };
    let mut all_ok = true;
    for (idx, coords) in points.iter().enumerate() {
        if coords.len() != cert.v.dim() {
            eprintln!(
                "error: point {idx} has {} coordinates, expected {}",
                coords.len(),
                cert.v.dim()
            );
            return EXIT_INPUT;
        }
        let x = Vector::from_column_slice(coords);
        let (primal, dual) = match (cert.v.minkowski_primal(&x), cert.v.minkowski_dual(&x)) {
            (Ok(p), Ok((d, _))) => (p, d),
            _ => {
                eprintln!("error: gauge evaluation failed at point {idx}");
                return EXIT_FAILED;
            }
        };
        let mut worst_margin = f64::INFINITY;
        let mut decays = Vec::with_capacity(closed.len());
        for a in &closed {
            match cert.v.subgradient_max_decay(a, &x) {
                Ok(d) => {
                    worst_margin = worst_margin.min(-cert.eta * primal - d);
                    decays.push(d);
                }
                Err(_) => {
                    eprintln!("error: decay evaluation failed at point {idx}");
                    return EXIT_FAILED;
                }
            }
        }
        let decay_str: Vec<String> = decays.iter().map(|d| format!("{d:.9e}")).collect();
        println!(
            "point {idx}: psi_primal = {primal:.9e}, psi_dual = {dual:.9e}, decay = [{}], margin = {worst_margin:.9e}",
            decay_str.join(", ")
        );
        if worst_margin < -DECAY_MARGIN {
            all_ok = false;
        }
    }
    if all_ok {
        EXIT_OK
    } else {
        eprintln!("error: some margins are negative beyond tolerance");
        EXIT_FAILED
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_plot(cert_path: &Path, out: &Path) -> i32 {
    let cert_file = match load_certificate(cert_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cannot read certificate: {e}");
            return EXIT_INPUT;
        }
    };
    let (cert, _) = match cert_file.to_certificate() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let v = cert.v.vertices();
    let csv = match cert.v.dim() {
        2 => {
            let mut lines = vec!["x,y".to_string()];
            for j in angular_order(v) {
                lines.push(format!("{},{}", fmt17(v[(0, j)]), fmt17(v[(1, j)])));
            }
            lines.join("\n") + "\n"
        }
        3 => {
            let facets = match gift_wrap_facets(v) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INPUT;
                }
            };
            let mut lines = vec!["kind,a,b,c".to_string()];
            for j in 0..v.ncols() {
                lines.push(format!(
                    "vertex,{},{},{}",
                    fmt17(v[(0, j)]),
                    fmt17(v[(1, j)]),
                    fmt17(v[(2, j)])
                ));
            }
            for f in facets {
                lines.push(format!("facet,{},{},{}", f[0], f[1], f[2]));
            }
            lines.join("\n") + "\n"
        }
        n => {
            eprintln!("error: plot supports dimensions 2 and 3, certificate has {n}");
            return EXIT_INPUT;
        }
    };
    match std::fs::write(out, csv) {
        Ok(()) => {
            println!("plot data written to {}", out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: cannot write plot data: {e}");
            return EXIT_INPUT;
        }
    }
}
