//! Convergence experiments: counts against the predicted volume over a grid
//! of `T` for a batch of random θ, plus a diagnostic error-exponent fit.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{count_solutions_grid, ProblemSpec, Theta};
use crate::error::{Error, Result};
use crate::sampling::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Problem data; its own `t` is ignored in favour of `t_grid`.
    pub spec: ProblemSpec,
    pub t_grid: Vec<f64>,
    pub theta_count: usize,
    /// θ entries are uniform on the rectangle `[0, box] + i[0, box]`.
    pub theta_box: f64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::invalid("T grid is empty"));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) || self.t_grid.iter().any(|&t| !(t > 1.0) || !t.is_finite()) {
            return Err(Error::invalid("T grid must be strictly increasing with every T > 1"));
        }
        if self.theta_count == 0 {
            return Err(Error::invalid("theta_count must be at least 1"));
        }
        if !(self.theta_box > 0.0) || !self.theta_box.is_finite() {
            return Err(Error::invalid("theta_box must be positive"));
        }
        self.spec.with_t(self.t_grid[0]).validate()
    }

    /// The `index`-th θ of this plan.
    pub fn theta(&self, index: usize) -> Theta {
        let (m, n) = (self.spec.m, self.spec.n);
        let mut rng = stream(self.seed, index as u64);
        let entries = (0..m * n)
            .map(|_| {
                let re = rng.gen::<f64>() * self.theta_box;
                let im = rng.gen::<f64>() * self.theta_box;
                Complex64::new(re, im)
            })
            .collect();
        Theta::new(m, n, entries).expect("sampled theta is finite")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub theta_index: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub t: f64,
    pub median_ratio: f64,
    pub q1: f64,
    pub q3: f64,
    /// Median of `|ratio − 1|` across θ.
    pub median_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub summary: Vec<GridSummary>,
    pub warnings: Vec<String>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

impl ConvergenceTable {
    fn summarize(rows: &[ConvergenceRow], grid: &[f64]) -> Vec<GridSummary> {
        grid.iter()
            .map(|&t| {
                let ratios = sorted(rows.iter().filter(|r| r.t == t).map(|r| r.ratio).collect());
                let devs = sorted(ratios.iter().map(|r| (r - 1.0).abs()).collect());
                GridSummary {
                    t,
                    median_ratio: quantile(&ratios, 0.5),
                    q1: quantile(&ratios, 0.25),
                    q3: quantile(&ratios, 0.75),
                    median_abs_deviation: quantile(&devs, 0.5),
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))
    }

    /// Ratio against `log10 T`, one polyline per θ, with the `ratio = 1` line.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 600.0;
        const PAD: f64 = 60.0;
        let xs: Vec<f64> = self.rows.iter().map(|r| r.t.log10()).collect();
        let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if !(x1 > x0) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let finite = self.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite());
        let (mut y0, mut y1) = finite.fold((1.0f64, 1.0f64), |(a, b), y| (a.min(y), b.max(y)));
        let margin = 0.05 * (y1 - y0).max(0.1);
        y0 -= margin;
        y1 += margin;
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        );
        for k in x0.ceil() as i64..=x1.floor() as i64 {
            let x = px(k as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{t}" stroke="black"/><text x="{x:.2}" y="{l}" font-size="14" text-anchor="middle">10^{k}</text>"#,
                b = H - PAD,
                t = H - PAD + 6.0,
                l = H - PAD + 24.0
            );
        }
        for i in 0..=4 {
            let y = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{py:.2}" font-size="12" text-anchor="end">{y:.3}</text>"#,
                x = PAD - 8.0,
                py = py(y) + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{PAD}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="gray" stroke-dasharray="6,4"/>"#,
            y = py(1.0),
            r = W - PAD
        );
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle">log10 T</text>"#, x = W / 2.0, y = H - 12.0);
        let _ = writeln!(s, r#"<text x="16" y="{y}" font-size="14" transform="rotate(-90 16 {y})" text-anchor="middle">count / predicted</text>"#, y = H / 2.0);
        let mut idx: Vec<usize> = self.rows.iter().map(|r| r.theta_index).collect();
        idx.dedup();
        for (c, &ti) in idx.iter().enumerate() {
            let pts: Vec<String> = self
                .rows
                .iter()
                .filter(|r| r.theta_index == ti && r.ratio.is_finite())
                .map(|r| format!("{:.2},{:.2}", px(r.t.log10()), py(r.ratio)))
                .collect();
            let hue = (c * 360) / idx.len().max(1);
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="hsl({hue},70%,45%)" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn run_convergence(plan: &ExperimentPlan) -> Result<ConvergenceTable> {
    plan.validate()?;
    let mut warnings = Vec::new();
    if !plan.spec.psi.integral_diverges() {
        warnings.push("psi has a convergent integral; the asymptotic needs a divergent one".to_string());
    }
    let predicted: Vec<f64> = plan.t_grid.iter().map(|&t| plan.spec.with_t(t).predicted()).collect();
    let per_theta: Vec<Result<Vec<(u64, u64)>>> = (0..plan.theta_count)
        .into_par_iter()
        .map(|i| count_solutions_grid(&plan.spec, &plan.theta(i), &plan.t_grid))
        .collect();
    let mut rows = Vec::with_capacity(plan.theta_count * plan.t_grid.len());
    for (i, counts) in per_theta.into_iter().enumerate() {
        for ((&t, &p), (count, _)) in plan.t_grid.iter().zip(&predicted).zip(counts?) {
            rows.push(ConvergenceRow { theta_index: i, t, count, predicted: p, ratio: count as f64 / p });
        }
    }
    let summary = ConvergenceTable::summarize(&rows, &plan.t_grid);
    Ok(ConvergenceTable { rows, summary, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub theta_index: usize,
    /// Slope of `log|count − predicted|` against `log predicted`.
    pub beta: Option<f64>,
    /// Some residual was exactly zero, so its point was left out.
    pub degenerate: bool,
}

/// Minimum `predicted` for a row to enter the fit.
pub const FIT_MIN_PREDICTED: f64 = 10.0;

pub fn fit_error_exponent(table: &ConvergenceTable) -> Result<Vec<ExponentFit>> {
    let mut idx: Vec<usize> = table.rows.iter().map(|r| r.theta_index).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter()
        .map(|ti| {
            let usable: Vec<&ConvergenceRow> =
                table.rows.iter().filter(|r| r.theta_index == ti && r.predicted > FIT_MIN_PREDICTED).collect();
            if usable.len() < 3 {
                return Err(Error::invalid(format!(
                    "theta {ti}: need at least 3 grid points with predicted > {FIT_MIN_PREDICTED}"
                )));
            }
            let pts: Vec<(f64, f64)> = usable
                .iter()
                .filter(|r| r.count as f64 != r.predicted)
                .map(|r| (r.predicted.ln(), (r.count as f64 - r.predicted).abs().ln()))
                .collect();
            let degenerate = pts.len() < usable.len();
            let beta = (pts.len() >= 2).then(|| least_squares_slope(&pts));
            Ok(ExponentFit { theta_index: ti, beta, degenerate })
        })
        .collect()
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numberfield::{FieldSpec, IdealRep, QuadInt};
    use crate::regions::PsiSpec;

    fn plan(ideal: IdealRep, grid: Vec<f64>, count: usize) -> ExperimentPlan {
        let f = FieldSpec::new(1).unwrap();
        let spec = ProblemSpec::new(f, 1, 2, PsiSpec::constant(1.0).unwrap(), vec![QuadInt::ZERO; 3], ideal, grid[0]).unwrap();
        ExperimentPlan { spec, t_grid: grid, theta_count: count, theta_box: 1.0, seed: 11 }
    }

    fn synthetic(f: impl Fn(f64) -> u64) -> ConvergenceTable {
        let rows = (2..8)
            .map(|k| {
                let p = (k * k * k * k) as f64;
                let c = f(p);
                ConvergenceRow { theta_index: 0, t: k as f64, count: c, predicted: p, ratio: c as f64 / p }
            })
            .collect();
        ConvergenceTable { rows, summary: vec![], warnings: vec![] }
    }

    #[test]
    fn synthetic_square_root_error() {
        let fits = fit_error_exponent(&synthetic(|p| (p + p.sqrt()) as u64)).unwrap();
        assert!((fits[0].beta.unwrap() - 0.5).abs() < 1e-12);
        assert!(!fits[0].degenerate);
    }

    #[test]
    fn synthetic_exact_is_degenerate() {
        let fits = fit_error_exponent(&synthetic(|p| p as u64)).unwrap();
        assert!(fits[0].degenerate);
        assert_eq!(fits[0].beta, None);
    }

    #[test]
    fn too_few_points_rejected() {
        let mut t = synthetic(|p| p as u64 + 1);
        t.rows.truncate(2);
        assert!(fit_error_exponent(&t).is_err());
    }

    #[test]
    fn single_row_table() {
        let table = run_convergence(&plan(IdealRep::unit(), vec![2.0], 1)).unwrap();
        assert_eq!(table.rows.len(), 1);
        let r = &table.rows[0];
        assert_eq!(r.ratio, r.count as f64 / r.predicted);
        assert_eq!(table.summary[0].median_ratio, r.ratio);
    }

    #[test]
    fn deterministic_tables() {
        let p = plan(IdealRep::unit(), vec![10.0, 50.0], 4);
        let a = run_convergence(&p).unwrap();
        let b = run_convergence(&p).unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("theta_index,T,count,predicted,ratio\n"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn ideal_scales_prediction_by_norm_power() {
        let f = FieldSpec::new(1).unwrap();
        let p2 = IdealRep::from_generators(&f, &[QuadInt::new(1, 1)]).unwrap();
        let a = run_convergence(&plan(IdealRep::unit(), vec![10.0, 100.0], 2)).unwrap();
        let b = run_convergence(&plan(p2, vec![10.0, 100.0], 2)).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((rb.predicted / ra.predicted - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_plans_rejected() {
        let mut p = plan(IdealRep::unit(), vec![10.0], 1);
        p.t_grid.clear();
        assert!(run_convergence(&p).is_err());
        p.t_grid = vec![10.0, 10.0];
        assert!(run_convergence(&p).is_err());
        p.t_grid = vec![10.0];
        p.theta_count = 0;
        assert!(run_convergence(&p).is_err());
    }

    #[test]
    fn divergent_psi_has_no_warning() {
        let mut p = plan(IdealRep::unit(), vec![5.0], 1);
        p.spec.psi = PsiSpec::step(vec![1.0, 3.0], vec![1.0, 0.5]).unwrap();
        let table = run_convergence(&p).unwrap();
        assert!(table.warnings.is_empty());
    }

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn svg_has_one_polyline_per_theta() {
        let table = run_convergence(&plan(IdealRep::unit(), vec![10.0, 100.0], 3)).unwrap();
        let svg = table.to_svg();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
    }
}
