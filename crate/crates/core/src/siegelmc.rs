//! Monte Carlo check of the mean value of the lattice-point count in a disc
//! over unimodular planar lattices drawn from the invariant probability
//! measure on the modular surface.
//!
//! Only radial test functions are supported, so the rotation fiber is not
//! sampled.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{split_budget, stream};

pub const SIEGEL_SHARDS: u64 = 16;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Unimodular basis with rows `y^{−1/2}(1, 0)` and `y^{−1/2}(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarLattice {
    /// Point `x + iy` of the fundamental domain.
    pub x: f64,
    pub y: f64,
}

impl PlanarLattice {
    pub fn from_point(x: f64, y: f64) -> Result<Self> {
        if !(x.abs() <= 0.5) || !(x * x + y * y >= 1.0 - 1e-12) || !y.is_finite() {
            return Err(Error::invalid(format!("({x}, {y}) lies outside the fundamental domain")));
        }
        Ok(PlanarLattice { x, y })
    }

    pub fn basis(&self) -> [[f64; 2]; 2] {
        let s = self.y.sqrt().recip();
        [[s, 0.0], [s * self.x, s * self.y]]
    }

    pub fn determinant(&self) -> f64 {
        let b = self.basis();
        b[0][0] * b[1][1] - b[0][1] * b[1][0]
    }

    /// `#{v ∈ L ∖ {0} : |v| ≤ radius}`.
    pub fn count_in_disc(&self, radius: f64) -> u64 {
        self.count_in_annulus(-1.0, radius)
    }

    /// `#{v ∈ L ∖ {0} : inner < |v| ≤ outer}`.
    pub fn count_in_annulus(&self, inner: f64, outer: f64) -> u64 {
        if !(outer >= 0.0) {
            return 0;
        }
        let (x, y) = (self.x, self.y);
        let r2 = outer * outer;
        let in2 = if inner < 0.0 { -1.0 } else { inner * inner };
        // |i·b1 + j·b2|² = ((i + j x)² + (j y)²) / y
        let norm2 = |i: i64, j: i64| {
            let (a, b) = (i as f64 + j as f64 * x, j as f64 * y);
            (a * a + b * b) / y
        };
        let jmax = (outer / y.sqrt()).floor() as i64 + 1;
        let mut count = 0u64;
        for j in -jmax..=jmax {
            let slack = y * r2 - (j as f64 * y).powi(2);
            if slack < -1e-9 * y * r2.max(1.0) {
                continue;
            }
            let h = slack.max(0.0).sqrt();
            let mid = -(j as f64) * x;
            let mut lo = (mid - h).floor() as i64 - 1;
            let mut hi = (mid + h).ceil() as i64 + 1;
            while lo <= hi && norm2(lo, j) > r2 {
                lo += 1;
            }
            while hi >= lo && norm2(hi, j) > r2 {
                hi -= 1;
            }
            if lo > hi {
                continue;
            }
            // the inner disc removes a contiguous run around the integer nearest the midpoint
            let c = (mid.round() as i64).clamp(lo, hi);
            if in2 >= 0.0 && norm2(c, j) <= in2 {
                let (mut a, mut b) = (c, c);
                while a > lo && norm2(a - 1, j) <= in2 {
                    a -= 1;
                }
                while b < hi && norm2(b + 1, j) <= in2 {
                    b += 1;
                }
                count += (a - lo) as u64 + (hi - b) as u64;
                continue;
            }
            count += (hi - lo + 1) as u64;
            if j == 0 && (lo..=hi).contains(&0) {
                count -= 1;
            }
        }
        count
    }
}

/// Draws from the probability measure `(3/π) y^{−2} dx dy` on
/// `{|x| ≤ 1/2, x² + y² ≥ 1}`: `y` by inverse CDF of the marginal on
/// `[√3/2, ∞)`, `x` uniform, rejecting points below the unit circle.
pub fn sample_modular_lattice<R: Rng + ?Sized>(rng: &mut R) -> PlanarLattice {
    loop {
        let u: f64 = rng.gen();
        let y = SQRT3_2 / (1.0 - u);
        let x = rng.gen::<f64>() - 0.5;
        if x * x + y * y >= 1.0 {
            return PlanarLattice { x, y };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiegelReport {
    pub radius: f64,
    pub mean_count: f64,
    pub std_error: f64,
    /// `πr²`.
    pub target_area: f64,
    pub samples: u64,
}

/// One report per radius, all computed on the same sampled lattices.
pub fn siegel_mc_check_radii(radii: &[f64], samples: u64, seed: u64) -> Result<Vec<SiegelReport>> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::invalid("radii must be positive and finite"));
    }
    let budget = split_budget(samples, SIEGEL_SHARDS);
    let shards: Vec<Vec<(u128, u128)>> = budget
        .par_iter()
        .enumerate()
        .map(|(s, &n)| {
            let mut rng = stream(seed, s as u64);
            let mut acc = vec![(0u128, 0u128); radii.len()];
            for _ in 0..n {
                let lat = sample_modular_lattice(&mut rng);
                for (a, &r) in acc.iter_mut().zip(radii) {
                    let c = u128::from(lat.count_in_disc(r));
                    a.0 += c;
                    a.1 += c * c;
                }
            }
            acc
        })
        .collect();
    let n = samples as f64;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(k, &radius)| {
            let (s, s2) = shards.iter().fold((0u128, 0u128), |acc, sh| (acc.0 + sh[k].0, acc.1 + sh[k].1));
            let mean = s as f64 / n;
            let var = if samples > 1 { (s2 as f64 - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
            SiegelReport {
                radius,
                mean_count: mean,
                std_error: (var / n).sqrt(),
                target_area: std::f64::consts::PI * radius * radius,
                samples,
            }
        })
        .collect())
}

pub fn siegel_mc_check(radius: f64, samples: u64, seed: u64) -> Result<SiegelReport> {
    Ok(siegel_mc_check_radii(&[radius], samples, seed)?.remove(0))
}
