//! Enumeration of the solutions `(p, q) ∈ O^m × O^n` of
//!
//! ```text
//!     ‖θq + p‖_∞^m ≤ ψ(‖q‖_∞^n),   1 ≤ ‖q‖_∞^n < T,   (p, q) ≡ v (mod I)
//! ```
//!
//! `q` is walked over the ideal translates `v_j + I` coordinate by
//! coordinate; the shell test uses exact integer norms. For each admissible
//! `q` the `p`-count factors into one disc count per coordinate. Disc tests
//! are done in `f64`; points within a thin guard band of the circle are
//! re-tested in double-double precision, and ties count as inside.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ddouble::DD;
use crate::error::{Error, Result};
use crate::intmat::ext_gcd;
use crate::numberfield::{congruent, FieldSpec, IdealRep, QuadInt};
use crate::regions::{PsiSpec, RegionKind, RegionSpec};

/// Upper limit on `T` accepted by [`count_brute_force`].
pub const BRUTE_FORCE_MAX_T: f64 = 1e4;

const GUARD_BAND: f64 = 1e-9;
const TIE_BAND: f64 = 1e-25;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub field: FieldSpec,
    pub m: usize,
    pub n: usize,
    pub psi: PsiSpec,
    /// Residue vector `(v_p, v_q) ∈ O^m × O^n`.
    pub v: Vec<QuadInt>,
    pub ideal: IdealRep,
    pub t: f64,
    /// Permits `d = m + n < 3`, outside the range where the asymptotic is a theorem.
    pub allow_low_dimension: bool,
}

impl ProblemSpec {
    pub fn new(field: FieldSpec, m: usize, n: usize, psi: PsiSpec, v: Vec<QuadInt>, ideal: IdealRep, t: f64) -> Result<Self> {
        let spec = ProblemSpec { field, m, n, psi, v, ideal, t, allow_low_dimension: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn theorem_backed(&self) -> bool {
        self.dim() >= 3
    }

    pub fn with_t(&self, t: f64) -> Self {
        ProblemSpec { t, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("m and n must be positive"));
        }
        if self.dim() < 3 && !self.allow_low_dimension {
            return Err(Error::invalid(format!("d = m + n = {} < 3 needs the low-dimension override", self.dim())));
        }
        if self.v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: self.v.len() });
        }
        if !(self.t > 1.0) || !self.t.is_finite() {
            return Err(Error::invalid(format!("T must be finite and > 1, got {}", self.t)));
        }
        Ok(())
    }

    /// `α_F^d(E_T)`.
    pub fn predicted(&self) -> f64 {
        self.region_at(self.t).adelic_volume(&self.field, &self.ideal)
    }

    fn region_at(&self, t: f64) -> RegionSpec {
        RegionSpec { kind: RegionKind::ET, m: self.m, n: self.n, psi: self.psi.clone(), t, eps: 0.0 }
    }
}

/// A complex `m × n` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    m: usize,
    n: usize,
    entries: Vec<Complex64>,
}

impl Theta {
    pub fn new(m: usize, n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != m * n {
            return Err(Error::DimensionMismatch { expected: m * n, got: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("theta entries must be finite"));
        }
        Ok(Theta { m, n, entries })
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Theta { m, n, entries: vec![Complex64::new(0.0, 0.0); m * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub count: u64,
    pub t: f64,
    /// `α_F^d(E_T)`.
    pub predicted: f64,
    pub ratio: f64,
    pub q_enumerated: u64,
    pub wall_time: f64,
    pub theorem_backed: bool,
}

/// Embedding data in both precisions.
#[derive(Clone, Copy)]
struct Embedding {
    omega: Complex64,
    omega_re: DD,
    omega_im: DD,
}

impl Embedding {
    fn new(field: &FieldSpec) -> Self {
        let omega = field.omega_complex();
        let im = match field.omega_kind() {
            crate::numberfield::OmegaKind::SqrtMinusD => DD::sqrt_of(field.d() as f64),
            crate::numberfield::OmegaKind::HalfIntegral => DD::sqrt_of(field.d() as f64 / 4.0),
        };
        Embedding { omega, omega_re: DD::from_f64(omega.re), omega_im: im }
    }

    fn dd(&self, w: QuadInt) -> (DD, DD) {
        let (a, b) = (DD::from_f64(w.a as f64), DD::from_f64(w.b as f64));
        (a + b * self.omega_re, b * self.omega_im)
    }
}

/// Visits every `w ∈ translate + I` with `|embed(w) − center|² ≤ r2` (up to a
/// relative slack of `GUARD_BAND`), in increasing `w.b` then `w.a` order.
fn visit_coset_disc(
    emb: &Embedding,
    ideal: &IdealRep,
    translate: QuadInt,
    center: Complex64,
    r2: f64,
    mut f: impl FnMut(QuadInt) -> Result<()>,
) -> Result<()> {
    if !(r2 >= 0.0) || !r2.is_finite() {
        return Err(Error::invalid(format!("disc radius² must be finite and >= 0, got {r2}")));
    }
    let [[a, b], [_, c]] = ideal.basis();
    let slack = r2 + GUARD_BAND * r2.max(1.0);
    let rad = slack.sqrt();
    let (wre, wim) = (emb.omega.re, emb.omega.im);
    let b_lo = ((center.im - rad) / wim).floor() as i64;
    let b_hi = ((center.im + rad) / wim).ceil() as i64;
    let (g, inv, _) = ext_gcd(i128::from(b), i128::from(c));
    let step_x = c / g as i64;
    for w1 in b_lo..=b_hi {
        let dy = w1 as f64 * wim - center.im;
        let h2 = slack - dy * dy;
        if h2 < 0.0 {
            continue;
        }
        // w1 = t1 + x·b + y·c  ⇔  x·b ≡ w1 − t1 (mod c)
        let rhs = i128::from(w1) - i128::from(translate.b);
        if rhs % g != 0 {
            continue;
        }
        let x0 = ((rhs / g) * inv).rem_euclid(i128::from(step_x)) as i64;
        // w0 = t0 + x·a with x ≡ x0 (mod step_x)
        let stride = a.checked_mul(step_x).ok_or(Error::Overflow("coset stride"))?;
        let base = translate.a + x0 * a;
        let h = h2.sqrt();
        let mid = center.re - w1 as f64 * wre;
        let lo = ((mid - h - base as f64) / stride as f64).ceil() as i64;
        let hi = ((mid + h - base as f64) / stride as f64).floor() as i64;
        for k in lo..=hi {
            let w0 = base
                .checked_add(k.checked_mul(stride).ok_or(Error::Overflow("coset point"))?)
                .ok_or(Error::Overflow("coset point"))?;
            f(QuadInt::new(w0, w1))?;
        }
    }
    Ok(())
}

/// All `w ≡ translate (mod I)` with `‖w‖_∞ ≤ max_norm`, paired with their norms.
fn coset_points_in_norm_ball(
    field: &FieldSpec,
    emb: &Embedding,
    ideal: &IdealRep,
    translate: QuadInt,
    max_norm: i64,
) -> Result<Vec<(QuadInt, i64)>> {
    let mut out = Vec::new();
    visit_coset_disc(emb, ideal, translate, Complex64::new(0.0, 0.0), max_norm as f64, |w| {
        let nw = field.norm_inf(w)?;
        if nw <= max_norm {
            out.push((w, nw));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Disc center given in `f64` plus an optional exact recipe for retesting.
enum Center<'a> {
    Plain(Complex64),
    /// `−Σ_j θ_j · embed(q_j)` for one row of θ.
    ThetaRow { approx: Complex64, row: &'a [Complex64], q: &'a [QuadInt] },
}

impl Center<'_> {
    fn approx(&self) -> Complex64 {
        match self {
            Center::Plain(c) => *c,
            Center::ThetaRow { approx, .. } => *approx,
        }
    }

    fn dd(&self, emb: &Embedding) -> (DD, DD) {
        match self {
            Center::Plain(c) => (DD::from_f64(c.re), DD::from_f64(c.im)),
            Center::ThetaRow { row, q, .. } => {
                let (mut re, mut im) = (DD::ZERO, DD::ZERO);
                for (th, &qj) in row.iter().zip(q.iter()) {
                    let (er, ei) = emb.dd(qj);
                    let (tr, ti) = (DD::from_f64(th.re), DD::from_f64(th.im));
                    re = re + (tr * er - ti * ei);
                    im = im + (tr * ei + ti * er);
                }
                (-re, -im)
            }
        }
    }
}

fn count_in_disc(emb: &Embedding, ideal: &IdealRep, translate: QuadInt, center: &Center<'_>, r2: f64) -> Result<u64> {
    let c = center.approx();
    let band = GUARD_BAND * r2.max(1.0);
    let mut exact_center: Option<(DD, DD)> = None;
    let mut count = 0u64;
    visit_coset_disc(emb, ideal, translate, c, r2, |w| {
        let e = Complex64::new(w.a as f64 + w.b as f64 * emb.omega.re, w.b as f64 * emb.omega.im);
        let dist2 = (e - c).norm_sqr();
        if dist2 < r2 - band {
            count += 1;
        } else if dist2 <= r2 + band {
            let (cre, cim) = *exact_center.get_or_insert_with(|| center.dd(emb));
            let (ere, eim) = emb.dd(w);
            let (dx, dy) = (ere - cre, eim - cim);
            let gap = (dx * dx + dy * dy - DD::from_f64(r2)).to_f64();
            if gap <= TIE_BAND * r2.max(1.0) {
                count += 1;
            }
        }
        Ok(())
    })?;
    Ok(count)
}

/// `#{w ∈ translate + I : |embed(w) − center| ≤ radius}`.
pub fn disc_lattice_count(field: &FieldSpec, ideal: &IdealRep, translate: QuadInt, center: Complex64, radius: f64) -> Result<u64> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius must be finite and >= 0, got {radius}")));
    }
    let emb = Embedding::new(field);
    count_in_disc(&emb, ideal, translate, &Center::Plain(center), radius * radius)
}

/// Largest integer `s ≥ 0` with `s^n < t`.
fn max_shell_norm(t: f64, n: usize) -> Result<i64> {
    const EXACT: i128 = 1 << 53;
    let guess = t.powf(1.0 / n as f64).floor();
    if !(guess < EXACT as f64) {
        return Err(Error::Overflow("shell bound"));
    }
    let below = |s: i64| -> Result<bool> {
        let p = (s as i128).checked_pow(n as u32).filter(|&p| p < EXACT).ok_or(Error::Overflow("shell bound"))?;
        Ok((p as f64) < t)
    };
    let mut s = guess as i64 + 1;
    while s > 0 && !below(s)? {
        s -= 1;
    }
    while below(s + 1)? {
        s += 1;
    }
    Ok(s)
}

struct Enumeration {
    lists: Vec<Vec<(QuadInt, i64)>>,
    emb: Embedding,
}

impl Enumeration {
    fn new(spec: &ProblemSpec, t_max: f64) -> Result<Self> {
        let emb = Embedding::new(&spec.field);
        let s_max = max_shell_norm(t_max, spec.n)?;
        let lists = (0..spec.n)
            .map(|j| coset_points_in_norm_ball(&spec.field, &emb, &spec.ideal, spec.v[spec.m + j], s_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Enumeration { lists, emb })
    }

    /// Number of `p` for a fixed `q`, or `None` when `q = 0`.
    fn p_count(&self, spec: &ProblemSpec, theta: &Theta, q: &[QuadInt], shell: i64) -> Result<Option<(u64, f64)>> {
        if shell == 0 {
            return Ok(None);
        }
        let u = (shell as f64).powi(spec.n as i32);
        let bound = spec.psi.eval(u);
        let r2 = if spec.m == 1 { bound } else { bound.powf(1.0 / spec.m as f64) };
        let mut total = 1u64;
        for i in 0..spec.m {
            let row = &theta.entries[i * spec.n..(i + 1) * spec.n];
            let cnt = if theta.is_zero() {
                self.p_count_exact(spec, i, r2)?
            } else {
                let mut acc = Complex64::new(0.0, 0.0);
                for (th, &qj) in row.iter().zip(q) {
                    acc += th * Complex64::new(qj.a as f64 + qj.b as f64 * self.emb.omega.re, qj.b as f64 * self.emb.omega.im);
                }
                count_in_disc(&self.emb, &spec.ideal, spec.v[i], &Center::ThetaRow { approx: -acc, row, q }, r2)?
            };
            total = total.checked_mul(cnt).ok_or(Error::Overflow("solution count"))?;
            if total == 0 {
                break;
            }
        }
        Ok(Some((total, u)))
    }

    /// θ = 0: the disc is centered at the origin and integer norms decide exactly.
    fn p_count_exact(&self, spec: &ProblemSpec, i: usize, r2: f64) -> Result<u64> {
        let max_norm = r2.floor() as i64;
        Ok(coset_points_in_norm_ball(&spec.field, &self.emb, &spec.ideal, spec.v[i], max_norm)?.len() as u64)
    }

    /// Adds each admissible `q`'s contribution into the first grid bucket with `u < T_k`,
    /// restricted to sup-norms `s` in `shells`.
    fn accumulate(
        &self,
        spec: &ProblemSpec,
        theta: &Theta,
        grid: &[f64],
        shells: std::ops::Range<i64>,
    ) -> Result<Vec<(u64, u64)>> {
        let first = &self.lists[0];
        let partials: Vec<Result<Vec<(u64, u64)>>> = first
            .par_iter()
            .map(|&(q0, n0)| {
                let mut buckets = vec![(0u64, 0u64); grid.len()];
                let mut q = vec![q0; spec.n];
                let mut idx = vec![0usize; spec.n];
                let rest = &self.lists[1..];
                if rest.iter().any(Vec::is_empty) {
                    return Ok(buckets);
                }
                loop {
                    let mut shell = n0;
                    for (j, list) in rest.iter().enumerate() {
                        let (w, nw) = list[idx[j]];
                        q[j + 1] = w;
                        shell = shell.max(nw);
                    }
                    if shells.contains(&shell) {
                        if let Some((cnt, u)) = self.p_count(spec, theta, &q, shell)? {
                            let k = grid.partition_point(|&t| t <= u);
                            if k < grid.len() {
                                buckets[k].0 += cnt;
                                buckets[k].1 += 1;
                            }
                        }
                    }
                    // odometer over the remaining coordinates
                    let mut j = 0;
                    loop {
                        if j == rest.len() {
                            return Ok(buckets);
                        }
                        idx[j] += 1;
                        if idx[j] < rest[j].len() {
                            break;
                        }
                        idx[j] = 0;
                        j += 1;
                    }
                }
            })
            .collect();
        let mut total = vec![(0u64, 0u64); grid.len()];
        for part in partials {
            for (acc, (c, q)) in total.iter_mut().zip(part?) {
                acc.0 = acc.0.checked_add(c).ok_or(Error::Overflow("solution count"))?;
                acc.1 += q;
            }
        }
        Ok(total)
    }
}

fn check_theta(spec: &ProblemSpec, theta: &Theta) -> Result<()> {
    if theta.dims() != (spec.m, spec.n) {
        return Err(Error::invalid(format!(
            "theta is {}x{}, problem needs {}x{}",
            theta.m, theta.n, spec.m, spec.n
        )));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("T grid is empty"));
    }
    if grid.iter().any(|&t| !(t > 1.0) || !t.is_finite()) {
        return Err(Error::invalid("every T must be finite and > 1"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("T grid must be strictly increasing"));
    }
    Ok(())
}

/// Counts for every `T` in a strictly increasing grid in one enumeration.
/// Returns `(count, admissible q)` per grid point.
pub fn count_solutions_grid(spec: &ProblemSpec, theta: &Theta, grid: &[f64]) -> Result<Vec<(u64, u64)>> {
    spec.validate()?;
    check_theta(spec, theta)?;
    check_grid(grid)?;
    let t_max = *grid.last().expect("nonempty");
    let en = Enumeration::new(spec, t_max)?;
    let buckets = en.accumulate(spec, theta, grid, 1..i64::MAX)?;
    let mut run = (0u64, 0u64);
    Ok(buckets
        .into_iter()
        .map(|(c, q)| {
            run = (run.0 + c, run.1 + q);
            run
        })
        .collect())
}

/// Contribution of the `q` whose sup-norm `‖q‖_∞` lies in `shells`, for the
/// spec's own `T`. Disjoint ranges partition the full count.
pub fn count_in_annulus(spec: &ProblemSpec, theta: &Theta, shells: std::ops::Range<i64>) -> Result<(u64, u64)> {
    spec.validate()?;
    check_theta(spec, theta)?;
    let en = Enumeration::new(spec, spec.t)?;
    Ok(en.accumulate(spec, theta, &[spec.t], shells)?[0])
}

pub fn count_solutions(spec: &ProblemSpec, theta: &Theta) -> Result<CountReport> {
    let start = Instant::now();
    let (count, q_enumerated) = count_solutions_grid(spec, theta, &[spec.t])?[0];
    let predicted = spec.predicted();
    Ok(CountReport {
        count,
        t: spec.t,
        predicted,
        ratio: if predicted > 0.0 { count as f64 / predicted } else { f64::NAN },
        q_enumerated,
        wall_time: start.elapsed().as_secs_f64(),
        theorem_backed: spec.theorem_backed(),
    })
}

/// Integer box `[a_lo, a_hi] × [b_lo, b_hi]` of coordinates covering the disc.
fn coordinate_box(field: &FieldSpec, center: Complex64, radius: f64) -> (i64, i64, i64, i64) {
    let w = field.omega_complex();
    let b_lo = ((center.im - radius) / w.im).floor() as i64 - 1;
    let b_hi = ((center.im + radius) / w.im).ceil() as i64 + 1;
    let shift = b_lo.unsigned_abs().max(b_hi.unsigned_abs()) as f64 * w.re;
    let a_lo = (center.re - radius - shift).floor() as i64 - 1;
    let a_hi = (center.re + radius + shift).ceil() as i64 + 1;
    (a_lo, a_hi, b_lo, b_hi)
}

fn box_points(bx: (i64, i64, i64, i64)) -> Vec<QuadInt> {
    let (a_lo, a_hi, b_lo, b_hi) = bx;
    (a_lo..=a_hi)
        .flat_map(|a| (b_lo..=b_hi).map(move |b| QuadInt::new(a, b)))
        .collect()
}

/// Direct double loop over every `q` and `p` in bounding boxes, with the
/// congruence tested on the full vector and the inequality tested as
/// `(max_i |θq + p|²)^m ≤ ψ(‖q‖^n)`.
pub fn count_brute_force(spec: &ProblemSpec, theta: &Theta) -> Result<u64> {
    spec.validate()?;
    check_theta(spec, theta)?;
    if spec.t > BRUTE_FORCE_MAX_T {
        return Err(Error::invalid(format!("brute force needs T <= {BRUTE_FORCE_MAX_T}, got {}", spec.t)));
    }
    let (m, n) = (spec.m, spec.n);
    let f = &spec.field;
    let emb = Embedding::new(f);
    let q_box = box_points(coordinate_box(f, Complex64::new(0.0, 0.0), spec.t.powf(0.5 / n as f64)));
    let p_radius = spec.psi.eval(1.0).powf(0.5 / m as f64);
    let exact = theta.is_zero();
    let mut count = 0u64;
    let mut q = vec![QuadInt::ZERO; n];
    let mut qi = vec![0usize; n];
    loop {
        for j in 0..n {
            q[j] = q_box[qi[j]];
        }
        let shell = f.sup_norm(&q)?;
        let u = (shell as f64).powi(n as i32);
        if u >= 1.0 && u < spec.t && congruent(&q, &spec.v[m..], &spec.ideal)? {
            let bound = spec.psi.eval(u);
            let centers: Vec<Complex64> = (0..m)
                .map(|i| -(0..n).map(|j| theta.get(i, j) * f.embed(q[j])).sum::<Complex64>())
                .collect();
            let boxes: Vec<Vec<QuadInt>> = centers.iter().map(|&c| box_points(coordinate_box(f, c, p_radius))).collect();
            let mut p = vec![QuadInt::ZERO; m];
            let mut pi = vec![0usize; m];
            loop {
                for i in 0..m {
                    p[i] = boxes[i][pi[i]];
                }
                if congruent(&p, &spec.v[..m], &spec.ideal)? {
                    let inside = if exact {
                        (f.sup_norm(&p)? as f64).powi(m as i32) <= bound
                    } else {
                        let mut sup = DD::ZERO;
                        for i in 0..m {
                            let (cre, cim) = Center::ThetaRow {
                                approx: centers[i],
                                row: &theta.entries[i * n..(i + 1) * n],
                                q: &q,
                            }
                            .dd(&emb);
                            let (pre, pim) = emb.dd(p[i]);
                            let (dx, dy) = (pre - cre, pim - cim);
                            let d2 = dx * dx + dy * dy;
                            if d2.to_f64() > sup.to_f64() {
                                sup = d2;
                            }
                        }
                        let mut pow = DD::from_f64(1.0);
                        for _ in 0..m {
                            pow = pow * sup;
                        }
                        (pow - DD::from_f64(bound)).to_f64() <= TIE_BAND * bound.max(1.0)
                    };
                    if inside {
                        count += 1;
                    }
                }
                if !advance(&mut pi, |i| boxes[i].len()) {
                    break;
                }
            }
        }
        if !advance(&mut qi, |_| q_box.len()) {
            break;
        }
    }
    Ok(count)
}

fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for (j, slot) in idx.iter_mut().enumerate() {
        *slot += 1;
        if *slot < len(j) {
            return true;
        }
        *slot = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian() -> FieldSpec {
        FieldSpec::new(1).unwrap()
    }

    fn fixture(ideal: IdealRep, t: f64) -> ProblemSpec {
        ProblemSpec::new(gaussian(), 1, 2, PsiSpec::constant(1.0).unwrap(), vec![QuadInt::ZERO; 3], ideal, t).unwrap()
    }

    #[test]
    fn four_hundred_fixture() {
        let spec = fixture(IdealRep::unit(), 16.0);
        let theta = Theta::zero(1, 2);
        let rep = count_solutions(&spec, &theta).unwrap();
        assert_eq!(rep.count, 400);
        assert_eq!(rep.q_enumerated, 80);
        assert_eq!(count_brute_force(&spec, &theta).unwrap(), 400);
    }

    #[test]
    fn even_ideal_fixture_matches_oracle() {
        let f = gaussian();
        let p = IdealRep::from_generators(&f, &[QuadInt::new(1, 1)]).unwrap();
        let spec = fixture(p, 16.0);
        let theta = Theta::zero(1, 2);
        let fast = count_solutions(&spec, &theta).unwrap().count;
        // independent count: Gaussian pairs with even norms
        let mut direct = 0u64;
        for a1 in -4i64..=4 {
            for b1 in -4i64..=4 {
                for a2 in -4i64..=4 {
                    for b2 in -4i64..=4 {
                        let s = (a1 * a1 + b1 * b1).max(a2 * a2 + b2 * b2);
                        let even = (a1 * a1 + b1 * b1) % 2 == 0 && (a2 * a2 + b2 * b2) % 2 == 0;
                        if even && s >= 1 && s * s < 16 {
                            // p ∈ (1+i) with |p|² ≤ 1: only p = 0
                            direct += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(fast, direct);
        assert_eq!(count_brute_force(&spec, &theta).unwrap(), direct);
    }

    #[test]
    fn shell_lower_edge() {
        let spec = ProblemSpec::new(
            gaussian(),
            1,
            2,
            PsiSpec::constant(0.5).unwrap(),
            vec![QuadInt::ZERO; 3],
            IdealRep::unit(),
            1.0000001,
        )
        .unwrap();
        let theta = Theta::zero(1, 2);
        let rep = count_solutions(&spec, &theta).unwrap();
        assert_eq!(rep.count, 24);
        assert_eq!(rep.q_enumerated, 24);
        assert_eq!(count_brute_force(&spec, &theta).unwrap(), 24);
    }

    #[test]
    fn t_at_most_one_rejected() {
        let r = ProblemSpec::new(gaussian(), 1, 2, PsiSpec::constant(1.0).unwrap(), vec![QuadInt::ZERO; 3], IdealRep::unit(), 1.0);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn low_dimension_needs_override() {
        let psi = PsiSpec::constant(1.0).unwrap();
        let r = ProblemSpec::new(gaussian(), 1, 1, psi.clone(), vec![QuadInt::ZERO; 2], IdealRep::unit(), 10.0);
        assert!(r.is_err());
        let mut spec = ProblemSpec {
            field: gaussian(),
            m: 1,
            n: 1,
            psi,
            v: vec![QuadInt::ZERO; 2],
            ideal: IdealRep::unit(),
            t: 10.0,
            allow_low_dimension: true,
        };
        spec.validate().unwrap();
        let rep = count_solutions(&spec, &Theta::zero(1, 1)).unwrap();
        assert!(!rep.theorem_backed);
        spec.allow_low_dimension = false;
        assert!(count_solutions(&spec, &Theta::zero(1, 1)).is_err());
    }

    #[test]
    fn brute_force_guard() {
        let spec = fixture(IdealRep::unit(), 2e4);
        assert!(count_brute_force(&spec, &Theta::zero(1, 2)).is_err());
    }

    #[test]
    fn unit_ideal_ignores_residue() {
        let f = FieldSpec::new(2).unwrap();
        let theta = Theta::new(1, 2, vec![Complex64::new(0.31, 0.77), Complex64::new(0.52, 0.13)]).unwrap();
        let psi = PsiSpec::power(1.0, 0.5).unwrap();
        let a = ProblemSpec::new(f, 1, 2, psi.clone(), vec![QuadInt::ZERO; 3], IdealRep::unit(), 40.0).unwrap();
        let b = ProblemSpec::new(f, 1, 2, psi, vec![QuadInt::new(3, -1), QuadInt::new(7, 2), QuadInt::new(-5, 5)], IdealRep::unit(), 40.0).unwrap();
        assert_eq!(count_solutions(&a, &theta).unwrap().count, count_solutions(&b, &theta).unwrap().count);
        assert_eq!(count_brute_force(&b, &theta).unwrap(), count_solutions(&a, &theta).unwrap().count);
    }

    #[test]
    fn disc_count_examples() {
        let f = gaussian();
        let o = IdealRep::unit();
        assert_eq!(disc_lattice_count(&f, &o, QuadInt::ZERO, Complex64::new(0.0, 0.0), 1.0).unwrap(), 5);
        let tr = QuadInt::new(3, -2);
        assert_eq!(disc_lattice_count(&f, &o, tr, f.embed(tr), 0.0).unwrap(), 1);
        let big = disc_lattice_count(&f, &o, QuadInt::ZERO, Complex64::new(0.0, 0.0), 50.0).unwrap();
        // Gauss circle brute force
        let brute = (-50i64..=50).flat_map(|a| (-50i64..=50).map(move |b| a * a + b * b)).filter(|&n| n <= 2500).count() as u64;
        assert_eq!(big, brute);
        let area = std::f64::consts::PI * 2500.0;
        assert!((big as f64 / area - 1.0).abs() < 0.02);
        assert!(disc_lattice_count(&f, &o, QuadInt::ZERO, Complex64::new(0.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn disc_count_on_ideal_translates() {
        // compare with a direct filter over a box for several fields and ideals
        for d in [1, 2, 3, 7] {
            let f = FieldSpec::new(d).unwrap();
            for g in [QuadInt::new(2, 0), QuadInt::new(1, 1), QuadInt::new(3, 1)] {
                let ideal = IdealRep::from_generators(&f, &[g]).unwrap();
                let center = Complex64::new(0.37, -1.21);
                let tr = QuadInt::new(1, 2);
                for radius in [0.5, 1.9, 4.3] {
                    let fast = disc_lattice_count(&f, &ideal, tr, center, radius).unwrap();
                    let slow = box_points(coordinate_box(&f, center, radius))
                        .into_iter()
                        .filter(|&w| ideal.contains(w - tr) && (f.embed(w) - center).norm() <= radius)
                        .count() as u64;
                    assert_eq!(fast, slow, "D={d} g={g} r={radius}");
                }
            }
        }
    }

    #[test]
    fn boundary_ties_resolve_inside_for_eisenstein() {
        // ω has |ω|² = 1 exactly but its embedding is irrational
        let f = FieldSpec::new(3).unwrap();
        let n = disc_lattice_count(&f, &IdealRep::unit(), QuadInt::ZERO, Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(n, 7);
    }

    #[test]
    fn grid_matches_individual_counts() {
        let f = FieldSpec::new(1).unwrap();
        let theta = Theta::new(1, 2, vec![Complex64::new(0.123, 0.456), Complex64::new(0.789, 0.321)]).unwrap();
        let spec = fixture(IdealRep::from_generators(&f, &[QuadInt::new(2, 0)]).unwrap(), 2.0);
        let grid = [2.0, 10.0, 55.5, 300.0];
        let counts = count_solutions_grid(&spec, &theta, &grid).unwrap();
        for (&t, &(c, _)) in grid.iter().zip(&counts) {
            assert_eq!(count_solutions(&spec.with_t(t), &theta).unwrap().count, c);
        }
        assert!(count_solutions_grid(&spec, &theta, &[10.0, 5.0]).is_err());
        assert!(count_solutions_grid(&spec, &theta, &[]).is_err());
    }

    #[test]
    fn annular_shards_sum_to_total() {
        let f = FieldSpec::new(3).unwrap();
        let theta = Theta::new(1, 2, vec![Complex64::new(0.6, 0.2), Complex64::new(0.1, 0.9)]).unwrap();
        let spec = ProblemSpec::new(f, 1, 2, PsiSpec::power(2.0, 1.0).unwrap(), vec![QuadInt::ZERO; 3], IdealRep::unit(), 400.0).unwrap();
        let full = count_solutions(&spec, &theta).unwrap();
        let cuts = [0i64, 3, 4, 9, 12, 20, i64::MAX];
        let (mut c, mut q) = (0, 0);
        for w in cuts.windows(2) {
            let part = count_in_annulus(&spec, &theta, w[0]..w[1]).unwrap();
            c += part.0;
            q += part.1;
        }
        assert_eq!((c, q), (full.count, full.q_enumerated));
    }

    #[test]
    fn residue_classes_partition_unit_count() {
        let f = gaussian();
        let theta = Theta::new(2, 1, vec![Complex64::new(0.27, 0.61), Complex64::new(0.83, 0.05)]).unwrap();
        let psi = PsiSpec::constant(1.5).unwrap();
        let unit = ProblemSpec::new(f, 2, 1, psi.clone(), vec![QuadInt::ZERO; 3], IdealRep::unit(), 60.0).unwrap();
        let total = count_solutions(&unit, &theta).unwrap().count;
        let ideal = IdealRep::from_generators(&f, &[QuadInt::new(1, 1)]).unwrap();
        let res = ideal.residues();
        let mut sum = 0;
        for &r0 in &res {
            for &r1 in &res {
                for &r2 in &res {
                    let spec = ProblemSpec::new(f, 2, 1, psi.clone(), vec![r0, r1, r2], ideal, 60.0).unwrap();
                    sum += count_solutions(&spec, &theta).unwrap().count;
                }
            }
        }
        assert_eq!(sum, total);
    }

    #[test]
    fn max_shell_norm_is_exact() {
        assert_eq!(max_shell_norm(16.0, 2).unwrap(), 3);
        assert_eq!(max_shell_norm(16.000001, 2).unwrap(), 4);
        assert_eq!(max_shell_norm(1.0000001, 2).unwrap(), 1);
        assert_eq!(max_shell_norm(1e4, 2).unwrap(), 99);
        assert_eq!(max_shell_norm(8.0, 3).unwrap(), 1);
        assert_eq!(max_shell_norm(1e300, 2), Err(Error::Overflow("shell bound")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_t(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, e in 0.0f64..1.0, t1 in 2.0f64..60.0, dt in 0.0f64..60.0) {
            let theta = Theta::new(1, 2, vec![Complex64::new(a, b), Complex64::new(c, e)]).unwrap();
            let spec = fixture(IdealRep::unit(), t1);
            let lo = count_solutions(&spec, &theta).unwrap().count;
            let hi = count_solutions(&spec.with_t(t1 + dt), &theta).unwrap().count;
            prop_assert!(lo <= hi);
        }
    }
}
