//! Row-reduced echelon forms, integral saturation of rational row spans,
//! lattice covolumes and counts of rational lines of bounded height.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intmat::{det_bareiss, row_hnf, saturated_row_basis};
use crate::numberfield::{FieldElement, FieldSpec, Rational};

/// Upper limit on `x` for the line enumerations.
pub const SUBSPACE_MAX_X: f64 = 1000.0;
/// Upper limit on the number of leading-coordinate tuples visited.
const ENUMERATION_BUDGET: f64 = 5e9;

pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync {
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;
}

impl Scalar for Rational {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
}

impl Scalar for FieldElement {
    fn is_zero(&self) -> bool {
        FieldElement::is_zero(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(&self.a) && Zero::is_zero(&self.b)
    }
}

/// An `m × k` row-reduced echelon matrix of rank `m` with no zero column.
#[derive(Debug, Clone, PartialEq)]
pub struct EchelonForm<S> {
    pub m: usize,
    pub k: usize,
    /// Zero-based pivot columns, strictly increasing.
    pub pivots: Vec<usize>,
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> EchelonForm<S> {
    pub fn is_valid(&self) -> bool {
        if self.m == 0 || self.m > self.k || self.pivots.len() != self.m || self.rows.len() != self.m {
            return false;
        }
        if self.pivots.windows(2).any(|w| w[1] <= w[0]) || self.pivots.last().is_some_and(|&p| p >= self.k) {
            return false;
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.k {
                return false;
            }
            let p = self.pivots[i];
            if !row[p].is_one() || row[..p].iter().any(|x| !x.is_zero()) {
                return false;
            }
            for (i2, &p2) in self.pivots.iter().enumerate() {
                if i2 != i && !row[p2].is_zero() {
                    return false;
                }
            }
        }
        (0..self.k).all(|j| self.rows.iter().any(|r| !r[j].is_zero()))
    }
}

impl<S: Scalar> fmt::Display for EchelonForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// Reduced fractions `p/q` with `|p| ≤ bound`, `1 ≤ q ≤ bound`, in increasing order.
pub fn rational_pool(bound: u32) -> Vec<Rational> {
    let b = i128::from(bound);
    let set: BTreeSet<Rational> = (-b..=b).flat_map(|p| (1..=b).map(move |q| Rational::new(p, q))).collect();
    set.into_iter().collect()
}

/// `a + b·ω` with `a, b` from [`rational_pool`], ordered by `(a, b)`.
pub fn field_pool(bound: u32, field: &FieldSpec) -> Vec<FieldElement> {
    let q = rational_pool(bound);
    q.iter().flat_map(|&a| q.iter().map(move |&b| FieldElement::new(field, a, b))).collect()
}

fn combinations(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, k: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for c in start..k {
            if k - c < m - cur.len() {
                break;
            }
            cur.push(c);
            rec(c + 1, k, m, cur, out);
            cur.pop();
        }
    }
    rec(0, k, m, &mut cur, &mut out);
    out
}

fn enumerate_with_pool<S: Scalar>(m: usize, k: usize, pool: &[S], zero: &S, one: &S) -> Vec<EchelonForm<S>> {
    let mut out = Vec::new();
    for pivots in combinations(k, m) {
        // free slots: (row, column) right of the row's pivot, outside pivot columns
        let free: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| {
                let piv = &pivots;
                (pivots[i] + 1..k).filter(move |j| !piv.contains(j)).map(move |j| (i, j))
            })
            .collect();
        // a non-pivot column with no free slot is forced to zero
        let coverable = (0..k).all(|j| pivots.contains(&j) || free.iter().any(|&(_, c)| c == j));
        if !coverable {
            continue;
        }
        let mut base = vec![vec![zero.clone(); k]; m];
        for (i, &p) in pivots.iter().enumerate() {
            base[i][p] = one.clone();
        }
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut rows = base.clone();
            for (&(i, j), &t) in free.iter().zip(&idx) {
                rows[i][j] = pool[t].clone();
            }
            let form = EchelonForm { m, k, pivots: pivots.clone(), rows };
            if (0..k).all(|j| form.rows.iter().any(|r| !r[j].is_zero())) {
                out.push(form);
            }
            // last free slot varies fastest
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < pool.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if free.is_empty() || pos == usize::MAX {
                break;
            }
        }
    }
    out
}

fn check_shape(m: usize, k: usize, bound: u32) -> Result<()> {
    if m == 0 || m > k {
        return Err(Error::invalid(format!("need 1 <= m <= k, got m={m}, k={k}")));
    }
    if bound == 0 {
        return Err(Error::invalid("bound must be at least 1"));
    }
    Ok(())
}

/// All echelon forms over Q with free entries from [`rational_pool`]`(bound)`,
/// ordered by pivot set and then by entries.
pub fn echelon_enumerate(m: usize, k: usize, bound: u32) -> Result<Vec<EchelonForm<Rational>>> {
    check_shape(m, k, bound)?;
    Ok(enumerate_with_pool(m, k, &rational_pool(bound), &Rational::zero(), &Rational::one()))
}

/// As [`echelon_enumerate`] with entries from [`field_pool`].
pub fn echelon_enumerate_field(m: usize, k: usize, bound: u32, field: &FieldSpec) -> Result<Vec<EchelonForm<FieldElement>>> {
    check_shape(m, k, bound)?;
    let zero = FieldElement::new(field, Rational::zero(), Rational::zero());
    Ok(enumerate_with_pool(m, k, &field_pool(bound, field), &zero, &zero.one_like()))
}

/// Reduced row echelon form and pivot columns of a rational matrix.
fn rref(mut a: Vec<Vec<Rational>>) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !Zero::is_zero(&a[i][c])) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..a.len() {
            if i != r && !Zero::is_zero(&a[i][c]) {
                let f = a[i][c];
                for j in 0..cols {
                    let t = a[r][j] * f;
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    (a, pivots)
}

/// Solves `A x = b` when `A` has full column rank; `None` if inconsistent.
fn solve_full_rank(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let r = a.first().map_or(0, Vec::len);
    let aug: Vec<Vec<Rational>> = a.iter().zip(b).map(|(row, &v)| row.iter().copied().chain([v]).collect()).collect();
    let (red, piv) = rref(aug);
    if piv.len() != r || piv.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(red.iter().map(|row| row[r]).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub x_prime: Vec<Vec<Rational>>,
    pub echelon: EchelonForm<Rational>,
}

/// Factors `X = X′·D` with `D` the echelon form of the row space of `X`
/// and `X′` the pivot columns of `X`.
pub fn decompose(x: &[Vec<Rational>]) -> Result<Decomposition> {
    let k = x.first().map_or(0, Vec::len);
    if k == 0 || x.iter().any(|r| r.len() != k) {
        return Err(Error::invalid("matrix must be rectangular and nonempty"));
    }
    let (rows, pivots) = rref(x.to_vec());
    if pivots.is_empty() {
        return Err(Error::invalid("zero matrix has no decomposition"));
    }
    let x_prime = x.iter().map(|r| pivots.iter().map(|&p| r[p]).collect()).collect();
    Ok(Decomposition { x_prime, echelon: EchelonForm { m: pivots.len(), k, pivots, rows } })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub checked: u64,
    pub failures: u64,
    /// First few failing matrices, for diagnostics.
    pub examples: Vec<String>,
}

fn matmul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let k = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|r| (0..k).map(|j| r.iter().zip(b).map(|(&x, row)| x * row[j]).sum()).collect())
        .collect()
}

/// Checks the factorization `X = X′·D` for every integer `d × k` matrix with
/// entries in `[−grid_bound, grid_bound]` and no zero column: it must exist,
/// `X′` must have full column rank, and no other pivot set may give a valid
/// echelon `D`.
pub fn decomposition_check(d: usize, k: usize, grid_bound: u32) -> Result<DecompositionReport> {
    if k == 0 || k >= d {
        return Err(Error::invalid(format!("need 1 <= k < d, got k={k}, d={d}")));
    }
    if grid_bound == 0 || grid_bound > 3 {
        return Err(Error::invalid("grid_bound must be in 1..=3"));
    }
    let g = i128::from(grid_bound);
    let side = (2 * g + 1) as u64;
    let total = side.checked_pow((d * k) as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| Error::invalid("grid too large"))?;
    let all_sets: Vec<Vec<usize>> = (1..=k).flat_map(|m| combinations(k, m)).collect();
    let results: Vec<(u64, u64, Vec<String>)> = (0..total)
        .into_par_iter()
        .fold(
            || (0u64, 0u64, Vec::new()),
            |(mut checked, mut failures, mut ex), code| {
                let mut c = code;
                let mut x = vec![vec![Rational::zero(); k]; d];
                for row in x.iter_mut() {
                    for v in row.iter_mut() {
                        *v = Rational::from((c % side) as i128 - g);
                        c /= side;
                    }
                }
                if (0..k).any(|j| x.iter().all(|r| Zero::is_zero(&r[j]))) {
                    return (checked, failures, ex);
                }
                checked += 1;
                let ok = decomposition_holds(&x, &all_sets);
                if !ok {
                    failures += 1;
                    if ex.len() < 5 {
                        ex.push(format!("{x:?}"));
                    }
                }
                (checked, failures, ex)
            },
        )
        .collect();
    let mut report = DecompositionReport { checked: 0, failures: 0, examples: Vec::new() };
    for (c, f, e) in results {
        report.checked += c;
        report.failures += f;
        report.examples.extend(e);
    }
    report.examples.truncate(5);
    Ok(report)
}

fn decomposition_holds(x: &[Vec<Rational>], all_sets: &[Vec<usize>]) -> bool {
    let Ok(dec) = decompose(x) else {
        return false;
    };
    let m = dec.echelon.m;
    if !dec.echelon.is_valid() || matmul(&dec.x_prime, &dec.echelon.rows) != x {
        return false;
    }
    if rref(dec.x_prime.clone()).1.len() != m {
        return false;
    }
    let k = dec.echelon.k;
    let mut valid = 0;
    for set in all_sets {
        let xp: Vec<Vec<Rational>> = x.iter().map(|r| set.iter().map(|&p| r[p]).collect()).collect();
        if rref(xp.clone()).1.len() != set.len() {
            continue;
        }
        let mut rows = vec![vec![Rational::zero(); k]; set.len()];
        let mut consistent = true;
        for j in 0..k {
            let col: Vec<Rational> = x.iter().map(|r| r[j]).collect();
            match solve_full_rank(&xp, &col) {
                Some(sol) => {
                    for (i, v) in sol.into_iter().enumerate() {
                        rows[i][j] = v;
                    }
                }
                None => {
                    consistent = false;
                    break;
                }
            }
        }
        if consistent {
            let cand = EchelonForm { m: set.len(), k, pivots: set.clone(), rows };
            if cand.is_valid() {
                if cand != dec.echelon {
                    return false;
                }
                valid += 1;
            }
        }
    }
    valid == 1
}

/// Integer row basis of a sublattice of `Z^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    pub rows: Vec<Vec<i128>>,
    /// The rows span every integer point of their rational span.
    pub saturated: bool,
}

impl LatticeBasis {
    pub fn new(rows: Vec<Vec<i128>>) -> Self {
        LatticeBasis { rows, saturated: false }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Basis of `(rational row span) ∩ Z^N`, in Hermite normal form.
pub fn lattice_saturation(span_rows: &[Vec<Rational>]) -> Result<LatticeBasis> {
    let n = span_rows.first().map_or(0, Vec::len);
    if span_rows.is_empty() || n == 0 || span_rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("span rows must be nonempty and of equal length"));
    }
    let ints = span_rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(1i128, |acc, q| acc.lcm(q.denom()));
            r.iter()
                .map(|q| (q * Rational::from(l)).to_integer())
                .collect::<Vec<i128>>()
        })
        .collect();
    let basis = saturated_row_basis(ints)?;
    let hnf = row_hnf(basis)?;
    if hnf.len() != span_rows.len() {
        return Err(Error::DependentRows);
    }
    Ok(LatticeBasis { rows: hnf, saturated: true })
}

/// `√det(B·Bᵀ)`, the covolume of the lattice inside its real span.
pub fn lattice_determinant(basis: &LatticeBasis) -> Result<f64> {
    let r = basis.rows.len();
    let mut gram = vec![vec![0i128; r]; r];
    for i in 0..r {
        for j in 0..r {
            let mut s = 0i128;
            for (a, b) in basis.rows[i].iter().zip(&basis.rows[j]) {
                s = a.checked_mul(*b).and_then(|p| s.checked_add(p)).ok_or(Error::Overflow("Gram matrix"))?;
            }
            gram[i][j] = s;
        }
    }
    let det = det_bareiss(gram)?;
    if det <= 0 {
        return Err(Error::DependentRows);
    }
    Ok((det as f64).sqrt())
}

/// Covolume of the saturation of the row span of `D` over Q.
pub fn subspace_height(form: &EchelonForm<Rational>) -> Result<f64> {
    lattice_determinant(&lattice_saturation(&form.rows)?)
}

/// Each row of `D` over F spans, as a Q-space, the two rows of the `2 × 2k`
/// block matrix of regular representations; the height is the covolume of
/// the saturation of all `2m` such rows in `Z^{2k}`.
pub fn subspace_height_field(form: &EchelonForm<FieldElement>) -> Result<f64> {
    let mut rows = Vec::with_capacity(2 * form.m);
    for row in &form.rows {
        let blocks: Vec<[[Rational; 2]; 2]> = row.iter().map(FieldElement::regular_representation).collect();
        for r in 0..2 {
            rows.push(blocks.iter().flat_map(|b| b[r]).collect::<Vec<_>>());
        }
    }
    lattice_determinant(&lattice_saturation(&rows)?)
}

/// Smallest-prime-factor table on `0..=n`.
fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            for j in (i..=n).step_by(i) {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
            }
        }
    }
    spf
}

fn distinct_primes(mut g: u64, spf: &[u32]) -> Vec<u64> {
    let mut out = Vec::new();
    while g > 1 {
        let p = u64::from(spf[g as usize]);
        out.push(p);
        while g % p == 0 {
            g /= p;
        }
    }
    out
}

/// Largest `c ≥ 0` with `c² < bound`, or `None` when `bound ≤ 0`.
fn max_below(bound: f64) -> Option<u64> {
    if !(bound > 0.0) {
        return None;
    }
    let mut c = bound.sqrt().floor() as u64;
    while c > 0 && (c * c) as f64 >= bound {
        c -= 1;
    }
    while (((c + 1) * (c + 1)) as f64) < bound {
        c += 1;
    }
    Some(c)
}

fn check_lines(k: usize, x: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if !(x >= 1.0) || x > SUBSPACE_MAX_X {
        return Err(Error::invalid(format!("x must lie in [1, {SUBSPACE_MAX_X}], got {x}")));
    }
    if (2.0 * x + 1.0).powi(k as i32 - 1) > ENUMERATION_BUDGET {
        return Err(Error::invalid(format!("enumeration too large for k={k}, x={x}")));
    }
    Ok(())
}

/// Visits every leading tuple `(v_1..v_{k−1})` with `Σv_i² < x²`, passing
/// the partial squared norm and the gcd of the tuple. Parallel over `v_1`.
fn fold_prefixes<T: Send>(
    k: usize,
    x2: f64,
    init: impl Fn() -> T + Sync + Send,
    visit: impl Fn(&mut T, u64, u64) + Sync + Send,
    merge: impl Fn(T, T) -> T + Sync + Send,
) -> T {
    fn rec<T>(depth: usize, sum: u64, g: u64, x2: f64, acc: &mut T, visit: &(impl Fn(&mut T, u64, u64) + Sync)) {
        if depth == 0 {
            visit(acc, sum, g);
            return;
        }
        let Some(c) = max_below(x2 - sum as f64) else {
            return;
        };
        for v in 0..=c {
            // ±v contribute identically
            let reps = if v == 0 { 1 } else { 2 };
            for _ in 0..reps {
                rec(depth - 1, sum + v * v, g.gcd(&v), x2, acc, visit);
            }
        }
    }
    if k == 1 {
        let mut acc = init();
        visit(&mut acc, 0, 0);
        return acc;
    }
    let c = max_below(x2).unwrap_or(0) as i64;
    // one partial result per leading coordinate, merged in order so float sums do not depend on scheduling
    let parts: Vec<T> = (-c..=c)
        .into_par_iter()
        .map(|v| {
            let mut acc = init();
            let v = v.unsigned_abs();
            rec(k - 2, v * v, v, x2, &mut acc, &visit);
            acc
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}

/// Number of lines in Q^k whose primitive integer vector has length `< x`.
pub fn subspace_count(k: usize, x: f64) -> Result<u64> {
    if k < 2 {
        return Err(Error::invalid("subspace_count needs k >= 2"));
    }
    check_lines(k, x)?;
    let x2 = x * x;
    let spf = spf_table(x.ceil() as usize + 1);
    let primitive = fold_prefixes(
        k,
        x2,
        || 0u64,
        |acc, sum, g| {
            let Some(c) = max_below(x2 - sum as f64) else {
                return;
            };
            if g == 0 {
                // only ±1 completes the zero prefix to a primitive vector
                if c >= 1 {
                    *acc += 2;
                }
                return;
            }
            let primes = distinct_primes(g, &spf);
            let mut total: i64 = 0;
            for mask in 0u32..(1 << primes.len()) {
                let e: u64 = primes.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).product();
                let term = 2 * (c / e) as i64 + 1;
                total += if mask.count_ones() % 2 == 0 { term } else { -term };
            }
            *acc += total as u64;
        },
        |a, b| a + b,
    );
    Ok(primitive / 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicBlock {
    pub j: u32,
    /// `Σ height^{−d}` over lines with height in `[2^j, 2^{j+1})`.
    pub sum: f64,
    pub lines: u64,
    /// `C·2^{(k−d)j}` with the fitted `C`.
    pub bound: f64,
    /// The whole block lies below `x_max`.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub k: usize,
    pub d: usize,
    pub x_max: f64,
    pub blocks: Vec<DyadicBlock>,
    /// Cumulative sums after each block.
    pub partial_sums: Vec<f64>,
    /// Smallest `C` with `S_j ≤ C·2^{(k−d)j}` on every block.
    pub fitted_c: f64,
    /// Least-squares slope of `log2 S_j` over complete blocks with `j ≥ 2`.
    pub slope: Option<f64>,
}

/// Dyadic decomposition of `Σ_U d(Λ_U)^{−d}` over lines `U ⊂ Q^k` of height `< x_max`.
pub fn tail_sum(k: usize, d: usize, x_max: f64) -> Result<TailReport> {
    if k >= d {
        return Err(Error::invalid(format!("tail sum needs k < d, got k={k}, d={d}")));
    }
    check_lines(k, x_max)?;
    let x2 = x_max * x_max;
    let nblocks = (x_max.log2().ceil() as usize).max(1) + 1;
    let accumulate = |acc: &mut Vec<(f64, u64)>, norm2: u64| {
        let h = (norm2 as f64).sqrt();
        let j = (0..nblocks).rev().find(|&j| norm2 >= 1u64 << (2 * j)).unwrap_or(0);
        acc[j].0 += h.powi(-(d as i32));
        acc[j].1 += 1;
    };
    let sums = fold_prefixes(
        k,
        x2,
        || vec![(0.0f64, 0u64); nblocks],
        |acc, sum, g| {
            let Some(c) = max_below(x2 - sum as f64) else {
                return;
            };
            for v in -(c as i64)..=c as i64 {
                if g.gcd(&v.unsigned_abs()) == 1 {
                    accumulate(acc, sum + v.unsigned_abs().pow(2));
                }
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.1 += y.1;
            }
            a
        },
    );
    // every line was visited twice, once per sign
    let blocks_raw: Vec<(f64, u64)> = sums.into_iter().map(|(s, n)| (s / 2.0, n / 2)).collect();
    let last = blocks_raw.iter().rposition(|b| b.1 > 0).map_or(1, |i| i + 1);
    let decay = |j: usize| 2f64.powf((k as f64 - d as f64) * j as f64);
    let fitted_c = blocks_raw[..last].iter().enumerate().map(|(j, b)| b.0 / decay(j)).fold(0.0, f64::max);
    let mut run = 0.0;
    let mut partial_sums = Vec::new();
    let blocks: Vec<DyadicBlock> = blocks_raw[..last]
        .iter()
        .enumerate()
        .map(|(j, &(sum, lines))| {
            run += sum;
            partial_sums.push(run);
            DyadicBlock {
                j: j as u32,
                sum,
                lines,
                bound: fitted_c * decay(j),
                complete: 2f64.powi(j as i32 + 1) <= x_max,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = blocks
        .iter()
        .filter(|b| b.j >= 2 && b.complete && b.sum > 0.0)
        .map(|b| (f64::from(b.j), b.sum.log2()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    });
    Ok(TailReport { k, d, x_max, blocks, partial_sums, fitted_c, slope })
}

/// Largest ratio `N(x)/x^k` over the given `x`, the tightest `C` in `N(x) ≤ C·x^k`.
pub fn fit_growth_constant(k: usize, xs: &[f64]) -> Result<f64> {
    xs.iter()
        .map(|&x| Ok(subspace_count(k, x)? as f64 / x.powi(k as i32)))
        .try_fold(0.0f64, |acc, r: Result<f64>| Ok(acc.max(r?)))
}
