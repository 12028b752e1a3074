//! Approximation functions `ψ`, the archimedean regions `E_T`, `E⁻`, `E⁺`,
//! `C₀` in `C^m × C^n`, and their volumes.
//!
//! Norms follow the complex-place convention: `‖z‖_∞ = |z|²`, and on vectors
//! the maximum over coordinates. Volumes are reported in two conventions:
//! `vol` is the standard `2d`-dimensional Lebesgue measure, and
//! `α_∞^d = 2^d · vol`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numberfield::{FieldSpec, IdealRep};
use crate::sampling::{self, StreamRng};

/// A positive nonincreasing function on `[1, ∞)`, extended by zero on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PsiConfig", into = "PsiConfig")]
pub enum PsiSpec {
    /// `ψ(t) = c`
    Constant { c: f64 },
    /// `ψ(t) = c·t^(−s)`, `0 < s ≤ 1`
    Power { c: f64, s: f64 },
    /// `ψ(t) = values[i]` on `[starts[i], starts[i+1])`; `starts[0] = 1`.
    Step { starts: Vec<f64>, values: Vec<f64> },
}

/// Wire form of [`PsiSpec`]: `{"family": "...", "params": [...]}`.
///
/// `constant` takes `[c]`, `power` takes `[c, s]`, and `step` takes the
/// flattened pairs `[1, v0, t1, v1, ...]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    pub family: String,
    pub params: Vec<f64>,
}

impl TryFrom<PsiConfig> for PsiSpec {
    type Error = Error;

    fn try_from(cfg: PsiConfig) -> Result<Self> {
        match (cfg.family.as_str(), cfg.params.as_slice()) {
            ("constant", &[c]) => PsiSpec::constant(c),
            ("power", &[c, s]) => PsiSpec::power(c, s),
            ("step", p) if !p.is_empty() && p.len() % 2 == 0 => {
                let starts = p.iter().step_by(2).copied().collect();
                let values = p.iter().skip(1).step_by(2).copied().collect();
                PsiSpec::step(starts, values)
            }
            (family, p) => Err(Error::invalid(format!(
                "psi family {family:?} with {} parameters",
                p.len()
            ))),
        }
    }
}

impl From<PsiSpec> for PsiConfig {
    fn from(psi: PsiSpec) -> Self {
        match psi {
            PsiSpec::Constant { c } => PsiConfig { family: "constant".into(), params: vec![c] },
            PsiSpec::Power { c, s } => PsiConfig { family: "power".into(), params: vec![c, s] },
            PsiSpec::Step { starts, values } => PsiConfig {
                family: "step".into(),
                params: starts.iter().zip(&values).flat_map(|(&t, &v)| [t, v]).collect(),
            },
        }
    }
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl PsiSpec {
    pub fn constant(c: f64) -> Result<Self> {
        if !positive_finite(c) {
            return Err(Error::invalid(format!("psi constant must be positive, got {c}")));
        }
        Ok(PsiSpec::Constant { c })
    }

    pub fn power(c: f64, s: f64) -> Result<Self> {
        if !positive_finite(c) || !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("power psi needs c > 0 and 0 < s <= 1, got c={c}, s={s}")));
        }
        Ok(PsiSpec::Power { c, s })
    }

    pub fn step(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(Error::invalid("step psi needs matching nonempty starts and values"));
        }
        if starts[0] != 1.0 {
            return Err(Error::invalid("step psi must start at t = 1"));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid("step psi breakpoints must be strictly increasing"));
        }
        if values.iter().any(|&v| !positive_finite(v)) {
            return Err(Error::invalid("step psi values must be positive"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("step psi values must be nonincreasing"));
        }
        Ok(PsiSpec::Step { starts, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t >= 1.0) {
            return 0.0;
        }
        match self {
            PsiSpec::Constant { c } => *c,
            PsiSpec::Power { c, s } => c * t.powf(-s),
            PsiSpec::Step { starts, values } => {
                let i = starts.partition_point(|&b| b <= t);
                values[i - 1]
            }
        }
    }

    /// `∫_a^b ψ(t) dt` with `ψ = 0` below 1; zero when `b ≤ max(a, 1)`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(1.0);
        if !(b > a) {
            return 0.0;
        }
        match self {
            PsiSpec::Constant { c } => c * (b - a),
            PsiSpec::Power { c, s } => {
                if *s == 1.0 {
                    c * (b / a).ln()
                } else {
                    let e = 1.0 - s;
                    c * (b.powf(e) - a.powf(e)) / e
                }
            }
            PsiSpec::Step { starts, values } => {
                let mut total = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    let lo = starts[i].max(a);
                    let hi = starts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(b);
                    if hi > lo {
                        total += v * (hi - lo);
                    }
                }
                total
            }
        }
    }

    /// `Ψ(T) = ∫_1^T ψ(t) dt`.
    pub fn integral(&self, t: f64) -> f64 {
        self.integral_between(1.0, t)
    }

    /// Whether `∫_1^∞ ψ = ∞`. Every supported family diverges.
    pub fn integral_diverges(&self) -> bool {
        match self {
            PsiSpec::Constant { .. } | PsiSpec::Step { .. } => true,
            PsiSpec::Power { s, .. } => *s <= 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    #[serde(rename = "E_T")]
    ET,
    #[serde(rename = "E_minus")]
    EMinus,
    #[serde(rename = "E_plus")]
    EPlus,
    C0,
}

impl RegionKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::ET => "E_T",
            RegionKind::EMinus => "E_minus",
            RegionKind::EPlus => "E_plus",
            RegionKind::C0 => "C0",
        }
    }
}

impl std::str::FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E_T" => Ok(RegionKind::ET),
            "E_minus" => Ok(RegionKind::EMinus),
            "E_plus" => Ok(RegionKind::EPlus),
            "C0" => Ok(RegionKind::C0),
            other => Err(Error::invalid(format!("unknown region kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub m: usize,
    pub n: usize,
    pub psi: PsiSpec,
    #[serde(rename = "T")]
    pub t: f64,
    pub eps: f64,
}

/// Sup-norm powers `(‖x‖_∞^m, ‖y‖_∞^n)` of a point split as `(x, y)`.
fn shell_coordinates(m: usize, point: &[Complex64]) -> (f64, f64) {
    let (x, y) = point.split_at(m);
    let sup = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    (sup(x).powi(m as i32), sup(y).powi(y.len() as i32))
}

impl RegionSpec {
    pub fn new(kind: RegionKind, m: usize, n: usize, psi: PsiSpec, t: f64, eps: f64) -> Result<Self> {
        let spec = RegionSpec { kind, m, n, psi, t, eps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("m and n must be positive"));
        }
        if !(self.t >= 1.0) || !self.t.is_finite() {
            return Err(Error::invalid(format!("T must be finite and >= 1, got {}", self.t)));
        }
        if matches!(self.kind, RegionKind::EMinus | RegionKind::EPlus) && !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::invalid(format!("eps must lie in (0, 1/2), got {}", self.eps)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Archimedean membership of a point `(x, y) ∈ C^m × C^n`.
    pub fn contains(&self, point: &[Complex64]) -> Result<bool> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: point.len() });
        }
        let (xs, ys) = shell_coordinates(self.m, point);
        Ok(self.contains_shell(xs, ys))
    }

    /// Membership in terms of `X = ‖x‖_∞^m` and `Y = ‖y‖_∞^n`.
    pub fn contains_shell(&self, x: f64, y: f64) -> bool {
        let psi = &self.psi;
        let e = 1.0 + self.eps;
        let c0 = || x <= 2.0 * psi.eval(1.0) && (0.5..=1.5).contains(&y);
        match self.kind {
            RegionKind::ET => x <= psi.eval(y) && y >= 1.0 && y < self.t,
            RegionKind::EMinus => x <= psi.eval(e * y) / e && y >= 1.5 && y < self.t / e,
            RegionKind::EPlus => (x <= e * psi.eval(y / e) && y >= 1.5 && y <= e * self.t) || c0(),
            RegionKind::C0 => c0(),
        }
    }

    /// Standard `2d`-dimensional Lebesgue volume.
    ///
    /// A slice `{x : ‖x‖^m ≤ B}` has volume `π^m·B`, and the shell
    /// `{y : a ≤ ‖y‖^n < b}` pushes Lebesgue measure forward to `π^n dt` on `[a, b)`.
    pub fn volume(&self) -> f64 {
        let d = self.dim() as i32;
        let pd = PI.powi(d);
        let psi = &self.psi;
        let e = 1.0 + self.eps;
        let c0 = 2.0 * psi.eval(1.0);
        match self.kind {
            RegionKind::ET => pd * psi.integral(self.t),
            // ∫_{3/2}^{T/e} e⁻¹ψ(e t) dt = e⁻² ∫_{3e/2}^{T} ψ
            RegionKind::EMinus => pd * psi.integral_between(1.5 * e, self.t) / (e * e),
            // ∫_{3/2}^{eT} e ψ(t/e) dt = e² ∫_{3/(2e)}^{T} ψ, plus C₀
            RegionKind::EPlus => pd * (e * e * psi.integral_between(1.5 / e, self.t) + c0),
            RegionKind::C0 => pd * c0,
        }
    }

    /// `α_∞^d = 2^d · vol`.
    pub fn alpha_infinity(&self) -> f64 {
        2f64.powi(self.dim() as i32) * self.volume()
    }

    /// `α_F^d = 2^d |Δ_F|^{−d/2} N(I)^{−d} vol`.
    pub fn adelic_volume(&self, field: &FieldSpec, ideal: &IdealRep) -> f64 {
        adelic_factor(field, ideal, self.dim()) * self.volume()
    }

    /// `[lo, hi]` range of `‖y‖_∞^n` and the largest `‖x‖_∞^m` allowed anywhere.
    fn bounding_shell(&self) -> (f64, f64) {
        let psi = &self.psi;
        let e = 1.0 + self.eps;
        match self.kind {
            RegionKind::ET => (self.t, psi.eval(1.0)),
            RegionKind::EMinus => (self.t / e, psi.eval(1.5 * e) / e),
            RegionKind::EPlus => (e * self.t, (e * psi.eval(1.5 / e)).max(2.0 * psi.eval(1.0))),
            RegionKind::C0 => (1.5, 2.0 * psi.eval(1.0)),
        }
    }

    /// Upper bound for `‖x‖_∞^m` on the slice at `Y = ‖y‖_∞^n`, or `None` off the shell.
    fn x_bound(&self, y: f64) -> Option<f64> {
        let psi = &self.psi;
        let e = 1.0 + self.eps;
        match self.kind {
            RegionKind::ET => (y >= 1.0 && y < self.t).then(|| psi.eval(y)),
            RegionKind::EMinus => (y >= 1.5 && y < self.t / e).then(|| psi.eval(e * y) / e),
            RegionKind::EPlus => {
                let main = (y >= 1.5 && y <= e * self.t).then(|| e * psi.eval(y / e));
                let c0 = (0.5..=1.5).contains(&y).then(|| 2.0 * psi.eval(1.0));
                match (main, c0) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                }
            }
            RegionKind::C0 => (0.5..=1.5).contains(&y).then(|| 2.0 * psi.eval(1.0)),
        }
    }

    /// `‖y‖_∞^n` range the region occupies.
    fn shell_range(&self) -> (f64, f64) {
        let e = 1.0 + self.eps;
        match self.kind {
            RegionKind::ET => (1.0, self.t),
            RegionKind::EMinus => (1.5, self.t / e),
            RegionKind::EPlus => (0.5, e * self.t),
            RegionKind::C0 => (0.5, 1.5),
        }
    }
}

pub fn adelic_factor(field: &FieldSpec, ideal: &IdealRep, d: usize) -> f64 {
    let d = d as i32;
    let disc = field.discriminant().unsigned_abs() as f64;
    2f64.powi(d) * disc.powf(-f64::from(d) / 2.0) * (ideal.norm() as f64).powi(-d)
}

/// Uniform point of the polydisc `{y ∈ C^n : max|y_j|² = s}` with the maximum
/// attained by a uniformly chosen coordinate.
fn sample_on_sup_sphere(rng: &mut StreamRng, n: usize, s: f64, out: &mut [Complex64]) {
    let top = rng.gen_range(0..n);
    let r = s.sqrt();
    for (j, z) in out.iter_mut().enumerate().take(n) {
        let phi = rng.gen::<f64>() * 2.0 * PI;
        let rad = if j == top { r } else { r * rng.gen::<f64>().sqrt() };
        *z = Complex64::from_polar(rad, phi);
    }
}

/// Uniform point of the polydisc `{x ∈ C^m : max|x_i|² ≤ r2}`.
fn sample_polydisc(rng: &mut StreamRng, r2: f64, out: &mut [Complex64]) {
    for z in out.iter_mut() {
        let phi = rng.gen::<f64>() * 2.0 * PI;
        *z = Complex64::from_polar((r2 * rng.gen::<f64>()).sqrt(), phi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McVolume {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Number of `‖y‖` strata used by [`monte_carlo_volume`].
pub const MC_STRATA: u64 = 64;

/// Rejection-sampling estimate of [`RegionSpec::volume`] from the bounding
/// polydisc, stratified into equal-volume slabs of `‖y‖_∞^n ∈ [0, Y_max]`.
///
/// Only polydisc volumes and [`RegionSpec::contains`] are used, so the
/// estimate is independent of the closed-form volume.
pub fn monte_carlo_volume(region: &RegionSpec, samples: u64, seed: u64) -> Result<McVolume> {
    region.validate()?;
    let (m, n) = (region.m, region.n);
    let (y_max, x_max) = region.bounding_shell();
    let xr2 = x_max.powf(1.0 / m as f64);
    let x_vol = (PI * xr2).powi(m as i32);
    let budget = sampling::split_budget(samples, MC_STRATA);
    let width = y_max / MC_STRATA as f64;
    let parts: Vec<(f64, f64)> = budget
        .par_iter()
        .enumerate()
        .map(|(k, &count)| {
            if count == 0 {
                return (0.0, 0.0);
            }
            let mut rng = sampling::stream(seed, k as u64);
            let mut point = vec![Complex64::new(0.0, 0.0); m + n];
            let mut hits = 0u64;
            for _ in 0..count {
                let u = width * (k as f64 + rng.gen::<f64>());
                sample_on_sup_sphere(&mut rng, n, u.powf(1.0 / n as f64), &mut point[m..]);
                sample_polydisc(&mut rng, xr2, &mut point[..m]);
                if region.contains(&point).expect("dimension fixed above") {
                    hits += 1;
                }
            }
            let slab = PI.powi(n as i32) * width * x_vol;
            let p = hits as f64 / count as f64;
            (slab * p, slab * slab * p * (1.0 - p) / count as f64)
        })
        .collect();
    let estimate = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    Ok(McVolume { estimate, std_error: var.sqrt(), samples })
}

/// Samples a point of the region with `‖y‖_∞^n` uniform on its shell range
/// and `x` uniform on the slice over it.
fn sample_in_region(region: &RegionSpec, rng: &mut StreamRng, out: &mut [Complex64]) {
    let (lo, hi) = region.shell_range();
    loop {
        let u = lo + (hi - lo) * rng.gen::<f64>();
        if let Some(b) = region.x_bound(u) {
            sample_on_sup_sphere(rng, region.n, u.powf(1.0 / region.n as f64), &mut out[region.m..]);
            sample_polydisc(rng, b.powf(1.0 / region.m as f64), &mut out[..region.m]);
            return;
        }
    }
}

/// Violations of `E⁻ ⊆ hE_T ⊆ E⁺` found on sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SandwichReport {
    /// Points of `E⁻` with `h⁻¹z ∉ E_T`.
    pub violations_minus: u64,
    /// Points `hw`, `w ∈ E_T`, outside `E⁺`.
    pub violations_plus: u64,
    pub samples: u64,
}

const SUBGROUP_TOL: f64 = 1e-12;

/// Checks that `h` is block lower-triangular `[[α, 0], [β, γ]]` with
/// `‖det α · det γ‖_∞ = 1`.
pub fn check_subgroup_member(m: usize, n: usize, h: &DMatrix<Complex64>) -> Result<()> {
    let d = m + n;
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::NotInSubgroup(format!("expected {d}x{d}, got {}x{}", h.nrows(), h.ncols())));
    }
    for i in 0..m {
        for j in m..d {
            if h[(i, j)].norm() > SUBGROUP_TOL {
                return Err(Error::NotInSubgroup(format!("upper-right entry ({i}, {j}) is nonzero")));
            }
        }
    }
    let det_a = h.view((0, 0), (m, m)).into_owned().determinant();
    let det_g = h.view((m, m), (n, n)).into_owned().determinant();
    let nd = (det_a * det_g).norm_sqr();
    if (nd - 1.0).abs() > SUBGROUP_TOL {
        return Err(Error::NotInSubgroup(format!("|det α det γ|² = {nd}")));
    }
    Ok(())
}

/// Empirical check of `E⁻_{T,ε} ⊆ hE_T ⊆ E⁺_{T,ε}` on `sample_count` points per side.
pub fn sandwich_check(
    m: usize,
    n: usize,
    psi: &PsiSpec,
    t: f64,
    eps: f64,
    h: &DMatrix<Complex64>,
    sample_count: u64,
    seed: u64,
) -> Result<SandwichReport> {
    check_subgroup_member(m, n, h)?;
    if !(t > 10.0) {
        return Err(Error::invalid(format!("sandwich check needs T > 10, got {t}")));
    }
    let et = RegionSpec::new(RegionKind::ET, m, n, psi.clone(), t, eps)?;
    let minus = RegionSpec::new(RegionKind::EMinus, m, n, psi.clone(), t, eps)?;
    let plus = RegionSpec::new(RegionKind::EPlus, m, n, psi.clone(), t, eps)?;
    let h_inv = h
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotInSubgroup("singular".into()))?;
    const SHARDS: u64 = 16;
    let budget = sampling::split_budget(sample_count, SHARDS);
    let counts: Vec<(u64, u64)> = budget
        .par_iter()
        .enumerate()
        .map(|(k, &count)| {
            let mut rng = sampling::stream(seed, k as u64);
            let d = m + n;
            let mut z = DMatrix::<Complex64>::zeros(d, 1);
            let (mut vm, mut vp) = (0u64, 0u64);
            for _ in 0..count {
                sample_in_region(&minus, &mut rng, z.as_mut_slice());
                let w = &h_inv * &z;
                if !et.contains(w.as_slice()).expect("dimension") {
                    vm += 1;
                }
                sample_in_region(&et, &mut rng, z.as_mut_slice());
                let hz = h * &z;
                if !plus.contains(hz.as_slice()).expect("dimension") {
                    vp += 1;
                }
            }
            (vm, vp)
        })
        .collect();
    Ok(SandwichReport {
        violations_minus: counts.iter().map(|c| c.0).sum(),
        violations_plus: counts.iter().map(|c| c.1).sum(),
        samples: sample_count,
    })
}

/// Random element of the block lower-triangular subgroup with
/// `‖h − 1‖_F ≤ dist`, normalized so `|det α det γ| = 1`.
pub fn sample_near_identity(m: usize, n: usize, dist: f64, rng: &mut StreamRng) -> DMatrix<Complex64> {
    let d = m + n;
    loop {
        let mut p = DMatrix::<Complex64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                if i < m && j >= m {
                    continue;
                }
                p[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let scale = dist * rng.gen::<f64>() / p.norm();
        let mut h = DMatrix::<Complex64>::identity(d, d) + p * Complex64::new(scale, 0.0);
        let det_a = h.view((0, 0), (m, m)).into_owned().determinant();
        let det_g = h.view((m, m), (n, n)).into_owned().determinant();
        let c = (det_a * det_g).norm().powf(-1.0 / n as f64);
        for i in m..d {
            for j in m..d {
                h[(i, j)] *= c;
            }
        }
        let off = (&h - DMatrix::<Complex64>::identity(d, d)).norm();
        if off <= dist {
            return h;
        }
    }
}
