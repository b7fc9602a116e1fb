//! Timing of the closed-form synthesis (Method I) against the Riccati
//! γ-iteration (Method II) on the holed-plate plants.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::gamma_bisection;
use crate::error::{HinfError, Result};
use crate::model::PlantSF;
use crate::pde::{irregular2d_discretize, IrregularSpec};
use crate::synthesis::{optimal_attenuation, state_feedback_gain};

pub const MIN_REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodTiming {
    /// Median wall time in seconds.
    pub seconds: f64,
    pub gamma: f64,
    /// Bisection steps (zero for the closed form).
    pub iterations: usize,
    /// Bracket upper bound (zero for the closed form).
    pub gamma_ub: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn check_repeats(repeats: usize) -> Result<()> {
    if repeats < MIN_REPEATS {
        return Err(HinfError::OutOfDomain {
            value: repeats as f64,
            lo: MIN_REPEATS as f64,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Runs `f` once untimed, then `repeats` timed runs; returns the median time
/// and the last result.
fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut last = f()?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        last = f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((median(times), last))
}

pub fn time_method_i(plant: &PlantSF, repeats: usize) -> Result<MethodTiming> {
    check_repeats(repeats)?;
    let (seconds, gamma) = timed(repeats, || {
        let k = state_feedback_gain(plant)?;
        std::hint::black_box(k);
        optimal_attenuation(plant)
    })?;
    Ok(MethodTiming {
        seconds,
        gamma,
        iterations: 0,
        gamma_ub: 0.0,
    })
}

pub fn time_method_ii(plant: &PlantSF, tol: f64, repeats: usize) -> Result<MethodTiming> {
    check_repeats(repeats)?;
    let (seconds, trace) = timed(repeats, || gamma_bisection(plant, tol))?;
    Ok(MethodTiming {
        seconds,
        gamma: trace.final_gamma,
        iterations: trace.iteration_count(),
        gamma_ub: trace.upper_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub h: f64,
    #[serde(rename = "t_I")]
    pub t_i: f64,
    #[serde(rename = "t_II")]
    pub t_ii: f64,
    pub ratio: f64,
    #[serde(rename = "gamma_I")]
    pub gamma_i: f64,
    #[serde(rename = "gamma_II")]
    pub gamma_ii: f64,
    pub rel_diff: f64,
    pub iterations: usize,
    pub gamma_ub: f64,
    /// Set when the two methods disagree by more than `2·tol·γ_ub`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub env: String,
    pub tol: f64,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub tol: f64,
    pub repeats_i: usize,
    pub repeats_ii: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            repeats_i: 7,
            repeats_ii: MIN_REPEATS,
        }
    }
}

/// Host description: CPU model, OS, architecture and available threads.
pub fn environment() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|v| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {} {}; {threads} hardware threads; timed regions single-threaded",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

pub fn bench_row(plant: &PlantSF, h: f64, config: &BenchConfig) -> Result<BenchRow> {
    let one = time_method_i(plant, config.repeats_i)?;
    let two = time_method_ii(plant, config.tol, config.repeats_ii)?;
    let diff = (one.gamma - two.gamma).abs();
    Ok(BenchRow {
        n: plant.dim(),
        h,
        t_i: one.seconds,
        t_ii: two.seconds,
        ratio: two.seconds / one.seconds,
        gamma_i: one.gamma,
        gamma_ii: two.gamma,
        rel_diff: diff / one.gamma,
        iterations: two.iterations,
        gamma_ub: two.gamma_ub,
        flagged: diff > 2.0 * config.tol * two.gamma_ub,
    })
}

/// One row per grid step, in the order given.
pub fn run_benchmark(steps: &[f64], config: &BenchConfig) -> Result<BenchReport> {
    if steps.is_empty() {
        return Err(HinfError::EmptyCandidateList);
    }
    if !(config.tol > 0.0) {
        return Err(HinfError::OutOfDomain {
            value: config.tol,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let mut rows = Vec::with_capacity(steps.len());
    for &h in steps {
        let plant = irregular2d_discretize(&IrregularSpec::new(h))?;
        rows.push(bench_row(&plant, h, config)?);
    }
    Ok(BenchReport {
        env: environment(),
        tol: config.tol,
        rows,
    })
}

impl BenchReport {
    pub fn flagged_rows(&self) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "n,h,t_I,t_II,ratio,gamma_I,gamma_II,rel_diff,iterations,flagged"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.6e},{:.6e},{:.6e},{:.12e},{:.12e},{:.6e},{},{}",
                r.n,
                r.h,
                r.t_i,
                r.t_ii,
                r.ratio,
                r.gamma_i,
                r.gamma_ii,
                r.rel_diff,
                r.iterations,
                r.flagged
            )?;
        }
        Ok(())
    }

    pub fn write_plot_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,ratio")?;
        for r in &self.rows {
            writeln!(out, "{},{:.6e}", r.n, r.ratio)?;
        }
        Ok(())
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>_plot.csv` into `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        self.write_plot_csv(std::fs::File::create(dir.join(format!("{stem}_plot.csv")))?)
    }
}
