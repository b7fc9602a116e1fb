//! The `hinf` command-line tool.

pub mod error;
pub mod io;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hinf_core::analysis::{
    gamma_bisection, hinf_norm, is_stable, lyapunov_certificate, lyapunov_scale,
};
use hinf_core::bench::{run_benchmark, BenchConfig};
use hinf_core::pde::{
    disk_discretize, disk_estimator_kernel, extract_estimator_kernel, extract_feedback_kernel,
    gain_kernel_g, heat1d_discretize, irregular2d_discretize, Conductivity, DiskGrid, DiskSpec,
    IrregularSpec, KernelSamples, Rod1DSpec, RodDisturbance,
};
use hinf_core::{
    closed_loop_est, closed_loop_sf, placement_sweep, synthesize_estimator,
    synthesize_state_feedback, Candidate,
};
use serde::Deserialize;
use serde_json::{json, Value};

pub use error::{CliError, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION};
use report::{fmt_g, json_number, Report, Table};

/// Environment variable capping placement-sweep worker threads.
pub const THREADS_ENV: &str = "HINF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Constant,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Disturbance {
    Scalar,
    Identity,
}

#[derive(Debug, Parser)]
#[command(
    name = "hinf",
    version,
    about = "Closed-form H-infinity synthesis and verification"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Also write the results to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal state feedback for a plant bundle (A, B, H, R).
    Synth {
        plant: PathBuf,
        /// Relative tolerance of the closed-loop norm check.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Optimal estimator for a plant bundle (A, C, Q, S).
    Estimate {
        plant: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// H-infinity norm of a state-space bundle (A, B, C, optional D).
    Norm {
        system: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Built-in heat-equation examples.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Time the closed form against Riccati bisection on the holed plate.
    Bench(BenchArgs),
    /// Rank candidate actuator layouts for a plant bundle.
    Place {
        plant: PathBuf,
        /// JSON list of `{"id": ..., "path": ...}` input matrices.
        #[arg(long)]
        candidates: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Rod with Dirichlet ends.
    Rod {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, value_enum, default_value_t = Profile::Quadratic)]
        profile: Profile,
        #[arg(long, value_enum, default_value_t = Disturbance::Scalar)]
        disturbance: Disturbance,
    },
    /// Unit disk measured over a central sub-disk.
    Disk {
        /// Radial intervals.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        n_theta: usize,
        #[arg(long, default_value_t = 0.25)]
        rho: f64,
    },
    /// 4x4 plate with a circular hole.
    Irregular {
        /// Grid step; must divide 4 (fractions like `4/30` are accepted).
        #[arg(long, default_value = "0.25", value_parser = parse_step)]
        step: f64,
        /// Relative bisection tolerance for the Riccati comparison.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Grid steps, repeatable (fractions like `4/30` are accepted).
    #[arg(long, value_parser = parse_step)]
    pub step: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Timed repetitions of the Riccati bisection (at least 3).
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

/// Default benchmark orders: `4/k` for `k = 10, 15, …, 30`.
pub const DEFAULT_BENCH_ORDERS: [usize; 5] = [10, 15, 20, 25, 30];

pub fn parse_step(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad step {s:?}"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad step {s:?}"))?;
            num / den
        }
        None => s.trim().parse().map_err(|_| format!("bad step {s:?}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("step must be positive, got {s:?}"))
    }
}

/// Runs `config`, printing to `stdout`/`stderr`, and returns the exit code.
pub fn run_with(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(config) {
        Ok(report) => {
            let text = report.render_text();
            if stdout.write_all(text.as_bytes()).is_err() {
                return EXIT_VALIDATION;
            }
            match &config.out {
                Some(path) => match write_output(&report, path, config.format) {
                    Ok(()) => EXIT_OK,
                    Err(e) => {
                        let _ = writeln!(stderr, "error: {e}");
                        e.exit_code()
                    }
                },
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(config: &RunConfig) -> i32 {
    run_with(config, &mut std::io::stdout(), &mut std::io::stderr())
}

enum Output {
    Plain(Report),
    Bench(Report, hinf_core::bench::BenchReport),
}

impl Output {
    fn render_text(&self) -> String {
        match self {
            Output::Plain(r) | Output::Bench(r, _) => r.render_text(),
        }
    }
}

fn write_output(out: &Output, path: &Path, format: OutputFormat) -> Result<(), CliError> {
    let body = match (out, format) {
        (Output::Plain(r), OutputFormat::Json) => {
            serde_json::to_string_pretty(&r.to_json()).expect("json value serializes") + "\n"
        }
        (Output::Plain(r), OutputFormat::Csv) => r.to_csv(),
        (Output::Bench(_, b), OutputFormat::Json) => b.to_json() + "\n",
        (Output::Bench(_, b), OutputFormat::Csv) => {
            let mut buf = Vec::new();
            b.write_csv(&mut buf).map_err(|e| CliError::io(path, e))?;
            String::from_utf8(buf).expect("ascii csv")
        }
    };
    std::fs::write(path, body).map_err(|e| CliError::io(path, e))?;
    if let Output::Bench(_, b) = out {
        let plot = plot_path(path);
        let file = std::fs::File::create(&plot).map_err(|e| CliError::io(&plot, e))?;
        b.write_plot_csv(file).map_err(|e| CliError::io(&plot, e))?;
    }
    Ok(())
}

/// `report.json` → `report_plot.csv`.
pub fn plot_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "bench".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_plot.csv"))
}

fn execute(config: &RunConfig) -> Result<Output, CliError> {
    Ok(match &config.command {
        Command::Synth { plant, tol } => Output::Plain(synth(plant, *tol)?),
        Command::Estimate { plant, tol } => Output::Plain(estimate(plant, *tol)?),
        Command::Norm { system, tol } => Output::Plain(norm(system, *tol)?),
        Command::Demo { which } => Output::Plain(demo(which)?),
        Command::Bench(args) => bench(args)?,
        Command::Place { plant, candidates } => Output::Plain(place(plant, candidates)?),
    })
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--tol must lie in (0, 1), got {tol}"
        )))
    }
}

fn synth(dir: &Path, tol: f64) -> Result<Report, CliError> {
    check_tol(tol)?;
    let plant = io::load_plant_sf(dir)?;
    let out = synthesize_state_feedback(&plant)?;
    let cl = closed_loop_sf(&plant, out.gain.as_ref())?;
    let norm = hinf_norm(&cl, tol)?;
    let cert = lyapunov_certificate(&plant, out.gain.as_ref())?;
    let mut r = Report::new("synth");
    r.matrix("K", out.gain)
        .scalar("gamma", out.gamma)
        .scalar("closed_loop_norm", norm)
        .scalar("lyapunov_certificate", cert)
        .scalar("lyapunov_scale", lyapunov_scale(&plant));
    Ok(r)
}

fn estimate(dir: &Path, tol: f64) -> Result<Report, CliError> {
    check_tol(tol)?;
    let plant = io::load_plant_est(dir)?;
    let out = synthesize_estimator(&plant)?;
    let cl = closed_loop_est(&plant, out.gain.as_ref())?;
    let norm = hinf_norm(&cl, tol)?;
    let mut r = Report::new("estimate");
    r.matrix("L", out.gain)
        .scalar("error", out.gamma)
        .scalar("closed_loop_norm", norm);
    Ok(r)
}

fn norm(dir: &Path, tol: f64) -> Result<Report, CliError> {
    check_tol(tol)?;
    let sys = io::load_state_space(dir)?;
    let (_, abscissa) = is_stable(&sys)?;
    let value = hinf_norm(&sys, tol)?;
    let mut r = Report::new("norm");
    r.scalar("hinf_norm", value)
        .scalar("spectral_abscissa", abscissa);
    Ok(r)
}

fn kernel_table(samples: &KernelSamples, extra: Option<(&str, Vec<f64>)>) -> Table {
    let mut columns: Vec<String> = samples.axes.iter().map(|s| s.to_string()).collect();
    columns.extend(["value".into(), "weight".into()]);
    if let Some((name, _)) = &extra {
        columns.push(name.to_string());
    }
    let rows = (0..samples.len())
        .map(|i| {
            let mut row: Vec<Value> = samples.nodes[i].iter().map(|c| json_number(*c)).collect();
            row.push(json_number(samples.values[i]));
            row.push(json_number(samples.weights[i]));
            if let Some((_, v)) = &extra {
                row.push(json_number(v[i]));
            }
            row
        })
        .collect();
    Table { columns, rows }
}

fn demo(which: &Demo) -> Result<Report, CliError> {
    match *which {
        Demo::Rod {
            n,
            length,
            profile,
            disturbance,
        } => {
            let conductivity = match profile {
                Profile::Constant => Conductivity::Constant(1.0),
                Profile::Quadratic => Conductivity::Quadratic,
            };
            let spec =
                Rod1DSpec::new(length, n, conductivity).with_disturbance(match disturbance {
                    Disturbance::Scalar => RodDisturbance::Scalar,
                    Disturbance::Identity => RodDisturbance::Identity,
                });
            let plant = heat1d_discretize(&spec)?;
            let out = synthesize_state_feedback(&plant)?;
            let samples = extract_feedback_kernel(&out.gain, &spec)?;
            let exact = samples
                .nodes
                .iter()
                .map(|x| gain_kernel_g(x[0], &spec))
                .collect::<Result<Vec<_>, _>>()?;
            let dev = samples
                .values
                .iter()
                .zip(&exact)
                .map(|(v, g)| (v - g).abs())
                .fold(0.0, f64::max);
            let peak = exact.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let mut r = Report::new("demo rod");
            r.count("n", n)
                .scalar("h", spec.step())
                .scalar("gamma", out.gamma)
                .scalar("max_abs_deviation", dev)
                .scalar("max_rel_deviation", dev / peak);
            r.table = Some(kernel_table(&samples, Some(("g", exact))));
            Ok(r)
        }
        Demo::Disk { n, n_theta, rho } => {
            let spec = DiskSpec::new(n, n_theta).with_rho(rho);
            let grid = DiskGrid::new(spec)?;
            let plant = disk_discretize(&spec)?;
            let out = synthesize_estimator(&plant)?;
            let samples = extract_estimator_kernel(&out.gain, &grid)?;
            // The kernel is radial: one quadrature per ring suffices.
            let mut ring_values: Vec<(f64, f64)> = Vec::new();
            let mut exact = Vec::with_capacity(samples.len());
            for p in &samples.nodes {
                let r = p[0];
                let v = match ring_values.iter().find(|(rr, _)| *rr == r) {
                    Some(&(_, v)) => v,
                    None => {
                        let v = disk_estimator_kernel(r, 0.0, &spec)?;
                        ring_values.push((r, v));
                        v
                    }
                };
                exact.push(v);
            }
            let dev = samples
                .values
                .iter()
                .zip(&exact)
                .map(|(v, g)| (v - g).abs())
                .fold(0.0, f64::max);
            let peak = exact.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let mut r = Report::new("demo disk");
            r.count("n", plant.dim())
                .scalar("error", out.gamma)
                .scalar("sensor_area", samples_sensor_area(&grid))
                .scalar("max_abs_deviation", dev)
                .scalar("max_rel_deviation", dev / peak);
            r.table = Some(kernel_table(&samples, Some(("reference", exact))));
            Ok(r)
        }
        Demo::Irregular { step, tol } => {
            check_tol(tol)?;
            let plant = irregular2d_discretize(&IrregularSpec::new(step))?;
            let out = synthesize_state_feedback(&plant)?;
            let trace = gamma_bisection(&plant, tol)?;
            let cert = lyapunov_certificate(&plant, out.gain.as_ref())?;
            let mut r = Report::new("demo irregular");
            r.count("n", plant.dim())
                .scalar("h", step)
                .scalar("gamma", out.gamma)
                .scalar("gamma_bisection", trace.final_gamma)
                .scalar("gamma_upper_bound", trace.upper_bound)
                .count("bisection_steps", trace.iteration_count())
                .scalar("lyapunov_certificate", cert);
            Ok(r)
        }
    }
}

fn samples_sensor_area(grid: &DiskGrid) -> f64 {
    (0..grid.len())
        .filter(|&k| grid.in_sensor(k))
        .map(|k| grid.areas[k])
        .sum()
}

fn bench(args: &BenchArgs) -> Result<Output, CliError> {
    check_tol(args.tol)?;
    let steps: Vec<f64> = if args.step.is_empty() {
        DEFAULT_BENCH_ORDERS
            .iter()
            .map(|&k| 4.0 / k as f64)
            .collect()
    } else {
        args.step.clone()
    };
    let config = BenchConfig {
        tol: args.tol,
        repeats_ii: args.repeats,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&steps, &config)?;
    let mut r = Report::new("bench");
    r.text("env", report.env.clone()).scalar("tol", report.tol);
    for row in &report.rows {
        r.text(
            &format!("n={}", row.n),
            format!(
                "t_I={} t_II={} ratio={} gamma_I={} gamma_II={} rel_diff={}{}",
                fmt_g(row.t_i),
                fmt_g(row.t_ii),
                fmt_g(row.ratio),
                fmt_g(row.gamma_i),
                fmt_g(row.gamma_ii),
                fmt_g(row.rel_diff),
                if row.flagged { " FLAGGED" } else { "" }
            ),
        );
    }
    Ok(Output::Bench(r, report))
}

#[derive(Debug, Deserialize)]
struct CandidateRef {
    id: String,
    path: PathBuf,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .map(Some)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn place(dir: &Path, list: &Path) -> Result<Report, CliError> {
    let bundle = io::Bundle::open(dir, io::BundleKind::StateFeedback)?;
    let a = bundle.generator()?;
    let h = bundle.matrix("H")?;
    let r = bundle.matrix("R")?;
    let text = std::fs::read_to_string(list).map_err(|e| CliError::io(list, e))?;
    let refs: Vec<CandidateRef> = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: list.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    let base = list.parent().unwrap_or(Path::new("."));
    let candidates = refs
        .into_iter()
        .map(|c| {
            let path = if c.path.is_absolute() {
                c.path
            } else {
                base.join(c.path)
            };
            Ok(Candidate {
                label: c.id,
                matrix: io::read_matrix(&path)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let result = placement_sweep(&a, h.as_ref(), r.as_ref(), &candidates, threads_from_env()?)?;
    let mut rep = Report::new("place");
    rep.text("best", result.candidates[result.best].label.clone())
        .scalar("best_gamma", result.candidates[result.best].gamma);
    let mut rows = Vec::with_capacity(result.candidates.len());
    for (rank, i) in result.ranking().into_iter().enumerate() {
        let e = &result.candidates[i];
        rep.scalar(&format!("gamma[{}]", e.label), e.gamma);
        rows.push(vec![json!(rank + 1), json!(e.label), json_number(e.gamma)]);
    }
    rep.table = Some(Table {
        columns: vec!["rank".into(), "id".into(), "gamma".into()],
        rows,
    });
    Ok(rep)
}
