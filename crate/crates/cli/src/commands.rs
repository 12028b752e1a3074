//! Subcommand implementations. Every table goes to stdout or the configured
//! file as CSV; timings and diagnostics go to stderr so reruns with the same
//! seed produce identical tables.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use qdioph::asymptotics::{fit_error_exponent, run_convergence};
use qdioph::heights::{
    decomposition_check, echelon_enumerate, echelon_enumerate_field, subspace_count, subspace_height,
    subspace_height_field, tail_sum, EchelonForm, Scalar,
};
use qdioph::regions::{monte_carlo_volume, RegionKind, RegionSpec};
use qdioph::siegelmc::siegel_mc_check_radii;
use qdioph::{count_solutions, FieldSpec, Theta};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::{CliError, Command};

pub fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Count { config, theta } => cmd_count(&ExperimentConfig::load(config)?, theta, out, err),
        Command::Asymptotics { config } => cmd_asymptotics(&ExperimentConfig::load(config)?, out, err),
        Command::Volume { config, region, eps, mc, seed } => {
            cmd_volume(&ExperimentConfig::load(config)?, region, *eps, *mc, *seed, out)
        }
        Command::Heights { k, d, xmax, table } => cmd_heights(*k, *d, *xmax, table, out),
        Command::Echelon { m, k, bound, field } => cmd_echelon(*m, *k, *bound, *field, out, err),
        Command::Decomposition { d, k, grid_bound } => cmd_decomposition(*d, *k, *grid_bound, out),
        Command::Siegel { radius, samples, seed } => cmd_siegel(radius, *samples, *seed, out),
    }
}

fn write_rows<R: Serialize>(rows: &[R], out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `zero` or `2mn` comma-separated hexadecimal floats.
pub fn parse_theta(text: &str, m: usize, n: usize) -> Result<Theta, CliError> {
    if text.trim() == "zero" {
        return Ok(Theta::zero(m, n));
    }
    let vals = text
        .split(',')
        .map(|s| {
            hexf_parse::parse_hexf64(s.trim(), false)
                .map_err(|e| CliError::Usage(format!("theta entry {s:?} is not a hex float: {e}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if vals.len() != 2 * m * n {
        return Err(CliError::Usage(format!("theta needs {} hex floats, got {}", 2 * m * n, vals.len())));
    }
    let entries = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(Theta::new(m, n, entries)?)
}

#[derive(Serialize)]
struct CountRow {
    #[serde(rename = "T")]
    t: f64,
    count: u64,
    predicted: f64,
    ratio: f64,
    q_enumerated: u64,
    theorem_backed: bool,
}

fn cmd_count(cfg: &ExperimentConfig, theta: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let spec = cfg.problem(None)?;
    let theta = parse_theta(theta, spec.m, spec.n)?;
    let rep = count_solutions(&spec, &theta)?;
    writeln!(err, "wall_time_s={:.3}", rep.wall_time)?;
    if !rep.theorem_backed {
        writeln!(err, "warning: d < 3, outside the range covered by the asymptotic")?;
    }
    write_rows(
        &[CountRow {
            t: rep.t,
            count: rep.count,
            predicted: rep.predicted,
            ratio: rep.ratio,
            q_enumerated: rep.q_enumerated,
            theorem_backed: rep.theorem_backed,
        }],
        out,
    )
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_asymptotics(cfg: &ExperimentConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let start = Instant::now();
    let table = run_convergence(&plan)?;
    writeln!(err, "wall_time_s={:.3}", start.elapsed().as_secs_f64())?;
    for w in &table.warnings {
        writeln!(err, "warning: {w}")?;
    }
    for s in &table.summary {
        writeln!(
            err,
            "T={} median_ratio={:.6} iqr=[{:.6}, {:.6}] median_abs_dev={:.6}",
            s.t, s.median_ratio, s.q1, s.q3, s.median_abs_deviation
        )?;
    }
    match fit_error_exponent(&table) {
        Ok(fits) => {
            for f in fits {
                match f.beta {
                    Some(b) => writeln!(err, "theta {} beta={b:.4}{}", f.theta_index, if f.degenerate { " (degenerate)" } else { "" })?,
                    None => writeln!(err, "theta {} beta=NA (degenerate)", f.theta_index)?,
                }
            }
        }
        Err(e) => writeln!(err, "exponent fit skipped: {e}")?,
    }
    match cfg.csv_path() {
        Some(p) => table.write_csv(create(p)?)?,
        None => table.write_csv(&mut *out)?,
    }
    if let Some(p) = cfg.svg_path() {
        create(p)?.write_all(table.to_svg().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VolumeRow {
    region: &'static str,
    m: usize,
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    eps: f64,
    volume: f64,
    alpha_infinity: f64,
    adelic_volume: f64,
    mc_estimate: Option<f64>,
    mc_std_error: Option<f64>,
    mc_samples: u64,
}

fn cmd_volume(cfg: &ExperimentConfig, region: &str, eps: f64, mc: u64, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let kind: RegionKind = region.parse()?;
    let p = &cfg.problem;
    let t = p.t.ok_or_else(|| CliError::Config("problem.T is required for this command".into()))?;
    let spec = RegionSpec::new(kind, p.m, p.n, p.psi.clone(), t, eps)?;
    let est = if mc > 0 { Some(monte_carlo_volume(&spec, mc, seed)?) } else { None };
    write_rows(
        &[VolumeRow {
            region: kind.name(),
            m: p.m,
            n: p.n,
            t,
            eps,
            volume: spec.volume(),
            alpha_infinity: spec.alpha_infinity(),
            adelic_volume: spec.adelic_volume(&cfg.field()?, &cfg.ideal()?),
            mc_estimate: est.map(|e| e.estimate),
            mc_std_error: est.map(|e| e.std_error),
            mc_samples: mc,
        }],
        out,
    )
}

#[derive(Serialize)]
struct LineCountRow {
    x: f64,
    count: u64,
    count_over_x_k: f64,
}

#[derive(Serialize)]
struct BlockRow {
    j: u32,
    lines: u64,
    #[serde(rename = "S_j")]
    sum: f64,
    bound: f64,
    partial_sum: f64,
    complete: bool,
}

fn cmd_heights(k: usize, d: usize, xmax: f64, table: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match table {
        "count" => {
            let mut xs: Vec<f64> = std::iter::successors(Some(1.0f64), |x| Some(x * 2.0)).take_while(|&x| x < xmax).collect();
            xs.push(xmax);
            let rows = xs
                .into_iter()
                .map(|x| {
                    let count = subspace_count(k, x)?;
                    Ok(LineCountRow { x, count, count_over_x_k: count as f64 / x.powi(k as i32) })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            write_rows(&rows, out)
        }
        "blocks" => {
            let rep = tail_sum(k, d, xmax)?;
            let rows: Vec<BlockRow> = rep
                .blocks
                .iter()
                .zip(&rep.partial_sums)
                .map(|(b, &p)| BlockRow { j: b.j, lines: b.lines, sum: b.sum, bound: b.bound, partial_sum: p, complete: b.complete })
                .collect();
            write_rows(&rows, out)
        }
        other => Err(CliError::Usage(format!("--table must be count or blocks, got {other:?}"))),
    }
}

#[derive(Serialize)]
struct EchelonRow {
    index: usize,
    pivots: String,
    form: String,
    height: f64,
}

fn echelon_rows<S: Scalar>(forms: &[EchelonForm<S>], height: impl Fn(&EchelonForm<S>) -> qdioph::Result<f64>) -> Result<Vec<EchelonRow>, CliError> {
    forms
        .iter()
        .enumerate()
        .map(|(index, f)| {
            Ok(EchelonRow {
                index,
                pivots: f.pivots.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(" "),
                form: f.to_string(),
                height: height(f)?,
            })
        })
        .collect()
}

fn cmd_echelon(m: usize, k: usize, bound: u32, field: Option<i64>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let rows = match field {
        None => echelon_rows(&echelon_enumerate(m, k, bound)?, subspace_height)?,
        Some(d) => {
            let f = FieldSpec::new(d)?;
            echelon_rows(&echelon_enumerate_field(m, k, bound, &f)?, subspace_height_field)?
        }
    };
    writeln!(err, "forms={}", rows.len())?;
    write_rows(&rows, out)
}

#[derive(Serialize)]
struct DecompositionRow {
    d: usize,
    k: usize,
    grid_bound: u32,
    checked: u64,
    failures: u64,
}

fn cmd_decomposition(d: usize, k: usize, grid_bound: u32, out: &mut dyn Write) -> Result<(), CliError> {
    let rep = decomposition_check(d, k, grid_bound)?;
    write_rows(&[DecompositionRow { d, k, grid_bound, checked: rep.checked, failures: rep.failures }], out)
}

#[derive(Serialize)]
struct SiegelRow {
    radius: f64,
    mean: f64,
    std_error: f64,
    target: f64,
    samples: u64,
}

fn cmd_siegel(radii: &[f64], samples: u64, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let rows: Vec<SiegelRow> = siegel_mc_check_radii(radii, samples, seed)?
        .into_iter()
        .map(|r| SiegelRow { radius: r.radius, mean: r.mean_count, std_error: r.std_error, target: r.target_area, samples: r.samples })
        .collect();
    write_rows(&rows, out)
}
