//! Exact arithmetic in the ring of integers of an imaginary quadratic field
//! `Q(√−D)`, with elements written in the integral basis `{1, ω}`.
//!
//! `ω = √−D` when `D ≡ 1, 2 (mod 4)` and `ω = (1 + √−D)/2` when
//! `D ≡ 3 (mod 4)`. In both cases `ω² = t·ω − n` with trace `t ∈ {0, 1}` and
//! norm `n`, which is all the multiplication table needs.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat;

/// Exact rational with enough headroom for the small echelon computations.
pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OmegaKind {
    /// `ω = √−D`
    SqrtMinusD,
    /// `ω = (1 + √−D)/2`
    HalfIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    d: i64,
    omega: OmegaKind,
    discriminant: i64,
}

fn is_squarefree(d: i64) -> bool {
    let mut k = 2i64;
    while k.saturating_mul(k) <= d {
        if d % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

impl FieldSpec {
    pub fn new(d: i64) -> Result<Self> {
        if d < 1 || !is_squarefree(d) || d > (1i64 << 40) {
            return Err(Error::InvalidFieldParameter(d));
        }
        let (omega, discriminant) = if d % 4 == 3 {
            (OmegaKind::HalfIntegral, -d)
        } else {
            (OmegaKind::SqrtMinusD, -4 * d)
        };
        Ok(FieldSpec { d, omega, discriminant })
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn omega_kind(&self) -> OmegaKind {
        self.omega
    }

    pub fn discriminant(&self) -> i64 {
        self.discriminant
    }

    /// Trace of `ω`.
    pub fn omega_trace(&self) -> i64 {
        match self.omega {
            OmegaKind::SqrtMinusD => 0,
            OmegaKind::HalfIntegral => 1,
        }
    }

    /// Field norm of `ω`.
    pub fn omega_norm(&self) -> i64 {
        match self.omega {
            OmegaKind::SqrtMinusD => self.d,
            OmegaKind::HalfIntegral => (1 + self.d) / 4,
        }
    }

    /// Complex value of `ω` under the embedding with positive imaginary part.
    pub fn omega_complex(&self) -> Complex64 {
        let s = (self.d as f64).sqrt();
        match self.omega {
            OmegaKind::SqrtMinusD => Complex64::new(0.0, s),
            OmegaKind::HalfIntegral => Complex64::new(0.5, s / 2.0),
        }
    }

    pub fn embed(&self, x: QuadInt) -> Complex64 {
        let w = self.omega_complex();
        Complex64::new(x.a as f64 + x.b as f64 * w.re, x.b as f64 * w.im)
    }

    pub fn checked_mul(&self, x: QuadInt, y: QuadInt) -> Option<QuadInt> {
        let (t, n) = (self.omega_trace(), self.omega_norm());
        let bd = x.b.checked_mul(y.b)?;
        let a = x.a.checked_mul(y.a)?.checked_sub(bd.checked_mul(n)?)?;
        let b = x
            .a
            .checked_mul(y.b)?
            .checked_add(x.b.checked_mul(y.a)?)?
            .checked_add(bd.checked_mul(t)?)?;
        Some(QuadInt::new(a, b))
    }

    pub fn mul(&self, x: QuadInt, y: QuadInt) -> Result<QuadInt> {
        self.checked_mul(x, y).ok_or(Error::Overflow("QuadInt product"))
    }

    /// `|embed(x)|²` evaluated exactly through the norm form `a² + t·ab + n·b²`.
    pub fn checked_norm(&self, x: QuadInt) -> Option<i64> {
        let (a, b) = (i128::from(x.a), i128::from(x.b));
        let v = a * a + i128::from(self.omega_trace()) * a * b
            + i128::from(self.omega_norm()).checked_mul(b * b)?;
        i64::try_from(v).ok()
    }

    /// The squared complex modulus `‖x‖_∞ = |x|²`; always a nonnegative integer on `O`.
    pub fn norm_inf(&self, x: QuadInt) -> Result<i64> {
        self.checked_norm(x).ok_or(Error::Overflow("norm"))
    }

    /// Sup-norm of a vector: the largest `‖x_i‖_∞`.
    pub fn sup_norm(&self, xs: &[QuadInt]) -> Result<i64> {
        xs.iter().try_fold(0i64, |acc, &x| Ok(acc.max(self.norm_inf(x)?)))
    }

    /// Matrix `ỹ` of multiplication by `y`: `[x·y] = [x]·ỹ` for row coordinates `[x]`.
    pub fn regular_representation(&self, y: QuadInt) -> [[i64; 2]; 2] {
        // rows are the coordinates of 1·y and ω·y
        let (t, n) = (self.omega_trace(), self.omega_norm());
        [[y.a, y.b], [-y.b * n, y.a + y.b * t]]
    }

    pub fn conj(&self, x: QuadInt) -> QuadInt {
        // conj(ω) = t − ω
        QuadInt::new(x.a + x.b * self.omega_trace(), -x.b)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt(-{}))", self.d)
    }
}

/// Element `a + b·ω` of the ring of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { a: 0, b: 0 };
    pub const ONE: QuadInt = QuadInt { a: 1, b: 0 };
    pub const OMEGA: QuadInt = QuadInt { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        QuadInt { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn checked_add(self, o: QuadInt) -> Option<QuadInt> {
        Some(QuadInt::new(self.a.checked_add(o.a)?, self.b.checked_add(o.b)?))
    }

    pub fn checked_sub(self, o: QuadInt) -> Option<QuadInt> {
        Some(QuadInt::new(self.a.checked_sub(o.a)?, self.b.checked_sub(o.b)?))
    }
}

impl Add for QuadInt {
    type Output = QuadInt;
    fn add(self, o: QuadInt) -> QuadInt {
        self.checked_add(o).expect("QuadInt addition overflowed")
    }
}

impl Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, o: QuadInt) -> QuadInt {
        self.checked_sub(o).expect("QuadInt subtraction overflowed")
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt::new(-self.a, -self.b)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}w", self.a, self.b)
    }
}

/// A nonzero ideal, stored as its Hermite normal form `Z`-basis
/// `{(a, b), (0, c)}` in `{1, ω}` coordinates with `a, c > 0` and `0 ≤ b < c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdealRep {
    basis: [[i64; 2]; 2],
    norm: i64,
}

impl IdealRep {
    pub fn unit() -> Self {
        IdealRep { basis: [[1, 0], [0, 1]], norm: 1 }
    }

    pub fn from_generators(field: &FieldSpec, gens: &[QuadInt]) -> Result<Self> {
        if gens.iter().all(QuadInt::is_zero) {
            return Err(Error::ZeroIdeal);
        }
        let mut rows = Vec::with_capacity(2 * gens.len());
        for &g in gens {
            let wg = field.mul(QuadInt::OMEGA, g)?;
            rows.push(vec![i128::from(g.a), i128::from(g.b)]);
            rows.push(vec![i128::from(wg.a), i128::from(wg.b)]);
        }
        let h = intmat::row_hnf(rows)?;
        if h.len() != 2 {
            // an O-module containing a nonzero element has rank 2
            return Err(Error::ZeroIdeal);
        }
        let cv = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("ideal basis"));
        let basis = [[cv(h[0][0])?, cv(h[0][1])?], [cv(h[1][0])?, cv(h[1][1])?]];
        let norm = basis[0][0]
            .checked_mul(basis[1][1])
            .ok_or(Error::Overflow("ideal norm"))?;
        Ok(IdealRep { basis, norm })
    }

    pub fn basis(&self) -> [[i64; 2]; 2] {
        self.basis
    }

    /// `#(O/I)`.
    pub fn norm(&self) -> i64 {
        self.norm
    }

    pub fn is_unit(&self) -> bool {
        self.norm == 1
    }

    pub fn contains(&self, w: QuadInt) -> bool {
        let [[a, b], [_, c]] = self.basis;
        if w.a % a != 0 {
            return false;
        }
        let x = w.a / a;
        match x.checked_mul(b).and_then(|xb| w.b.checked_sub(xb)) {
            Some(r) => r % c == 0,
            None => (i128::from(w.b) - i128::from(x) * i128::from(b)) % i128::from(c) == 0,
        }
    }

    /// Canonical representative of `w + I`: first coordinate in `[0, a)`,
    /// second in `[0, c)`.
    pub fn reduce(&self, w: QuadInt) -> QuadInt {
        let [[a, b], [_, c]] = self.basis;
        let x = w.a.div_euclid(a);
        let r0 = w.a - x * a;
        let r1 = (i128::from(w.b) - i128::from(x) * i128::from(b)).rem_euclid(i128::from(c));
        QuadInt::new(r0, r1 as i64)
    }

    /// A complete residue system of `O/I`, in the order produced by [`IdealRep::reduce`].
    pub fn residues(&self) -> Vec<QuadInt> {
        let [[a, _], [_, c]] = self.basis;
        (0..a)
            .flat_map(|i| (0..c).map(move |j| QuadInt::new(i, j)))
            .collect()
    }
}

/// True iff `z_i − v_i ∈ I` for every component.
pub fn congruent(z: &[QuadInt], v: &[QuadInt], ideal: &IdealRep) -> Result<bool> {
    if z.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: z.len() });
    }
    for (&zi, &vi) in z.iter().zip(v) {
        let diff = zi.checked_sub(vi).ok_or(Error::Overflow("congruence difference"))?;
        if !ideal.contains(diff) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Element `a + b·ω` of the field itself, with rational coordinates.
///
/// Carries `ω`'s trace and norm so the arithmetic operators need no context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub a: Rational,
    pub b: Rational,
    trace: i64,
    norm: i64,
}

impl FieldElement {
    pub fn new(field: &FieldSpec, a: Rational, b: Rational) -> Self {
        FieldElement { a, b, trace: field.omega_trace(), norm: field.omega_norm() }
    }

    pub fn from_quad(field: &FieldSpec, x: QuadInt) -> Self {
        Self::new(field, Rational::from(i128::from(x.a)), Rational::from(i128::from(x.b)))
    }

    fn with(&self, a: Rational, b: Rational) -> Self {
        FieldElement { a, b, trace: self.trace, norm: self.norm }
    }

    pub fn zero_like(&self) -> Self {
        self.with(Rational::zero(), Rational::zero())
    }

    pub fn one_like(&self) -> Self {
        self.with(Rational::one(), Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn field_norm(&self) -> Rational {
        let t = Rational::from(i128::from(self.trace));
        let n = Rational::from(i128::from(self.norm));
        self.a * self.a + t * self.a * self.b + n * self.b * self.b
    }

    pub fn mul(&self, o: &Self) -> Self {
        let t = Rational::from(i128::from(self.trace));
        let n = Rational::from(i128::from(self.norm));
        let bd = self.b * o.b;
        self.with(self.a * o.a - bd * n, self.a * o.b + self.b * o.a + bd * t)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.with(self.a + o.a, self.b + o.b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.with(self.a - o.a, self.b - o.b)
    }

    pub fn neg(&self) -> Self {
        self.with(-self.a, -self.b)
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.field_norm();
        let t = Rational::from(i128::from(self.trace));
        // conjugate of a + bω is (a + t·b) − bω
        Some(self.with((self.a + t * self.b) / n, -self.b / n))
    }

    /// Rational matrix of multiplication by `self` in the basis `{1, ω}`.
    pub fn regular_representation(&self) -> [[Rational; 2]; 2] {
        let t = Rational::from(i128::from(self.trace));
        let n = Rational::from(i128::from(self.norm));
        [[self.a, self.b], [-self.b * n, self.a + self.b * t]]
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}+{}w", self.a, self.b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> QuadInt {
        QuadInt::new(a, b)
    }

    /// Discriminant from the trace pairing, using only the complex embedding:
    /// det [[Tr(1), Tr(ω)], [Tr(ω), Tr(ω²)]] with Tr(z) = 2 Re z.
    fn trace_form_det(f: &FieldSpec) -> f64 {
        let w = f.omega_complex();
        let tr = |z: Complex64| 2.0 * z.re;
        let m = [[tr(Complex64::new(1.0, 0.0)), tr(w)], [tr(w), tr(w * w)]];
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    #[test]
    fn discriminants_match_trace_form() {
        for (d, disc) in [(1, -4), (2, -8), (3, -3), (5, -20), (7, -7), (11, -11)] {
            let f = FieldSpec::new(d).unwrap();
            assert_eq!(f.discriminant(), disc);
            assert!((trace_form_det(&f) - disc as f64).abs() < 1e-9, "D={d}");
        }
        assert_eq!(FieldSpec::new(1).unwrap().omega_complex(), Complex64::new(0.0, 1.0));
        assert_eq!(FieldSpec::new(3).unwrap().omega_kind(), OmegaKind::HalfIntegral);
    }

    #[test]
    fn rejects_bad_d() {
        for d in [0, -1, 4, 8, 9, 12, 18] {
            assert_eq!(FieldSpec::new(d), Err(Error::InvalidFieldParameter(d)));
        }
    }

    #[test]
    fn embedding_examples() {
        let f1 = FieldSpec::new(1).unwrap();
        assert_eq!(f1.embed(q(1, 0)), Complex64::new(1.0, 0.0));
        assert_eq!(f1.embed(q(0, 1)), Complex64::new(0.0, 1.0));
        let f3 = FieldSpec::new(3).unwrap();
        let w = f3.embed(q(0, 1));
        assert!((w.re - 0.5).abs() < 1e-15 && (w.im - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let f1 = FieldSpec::new(1).unwrap();
        assert_eq!(f1.norm_inf(q(1, 1)).unwrap(), 2);
        assert_eq!(f1.norm_inf(q(0, 0)).unwrap(), 0);
        assert_eq!(FieldSpec::new(3).unwrap().norm_inf(q(0, 1)).unwrap(), 1);
    }

    #[test]
    fn regular_representation_examples() {
        let f1 = FieldSpec::new(1).unwrap();
        assert_eq!(f1.regular_representation(QuadInt::ONE), [[1, 0], [0, 1]]);
        assert_eq!(f1.regular_representation(q(0, 1)), [[0, 1], [-1, 0]]);
    }

    #[test]
    fn ideal_examples() {
        let f1 = FieldSpec::new(1).unwrap();
        let two = IdealRep::from_generators(&f1, &[q(2, 0)]).unwrap();
        assert_eq!(two.norm(), 4);
        let p = IdealRep::from_generators(&f1, &[q(1, 1)]).unwrap();
        assert_eq!(p.norm(), 2);
        for d in [1, 2, 3, 5] {
            let f = FieldSpec::new(d).unwrap();
            let u = IdealRep::from_generators(&f, &[QuadInt::ONE]).unwrap();
            assert_eq!(u.norm(), 1);
            assert_eq!(u.basis(), [[1, 0], [0, 1]]);
        }
        assert_eq!(IdealRep::from_generators(&f1, &[QuadInt::ZERO]), Err(Error::ZeroIdeal));
        assert_eq!(IdealRep::from_generators(&f1, &[]), Err(Error::ZeroIdeal));
    }

    #[test]
    fn congruence_examples() {
        let f1 = FieldSpec::new(1).unwrap();
        let two = IdealRep::from_generators(&f1, &[q(2, 0)]).unwrap();
        let p = IdealRep::from_generators(&f1, &[q(1, 1)]).unwrap();
        assert!(congruent(&[q(3, 1)], &[q(1, 1)], &two).unwrap());
        assert!(!congruent(&[q(1, 0)], &[q(0, 0)], &p).unwrap());
        assert!(congruent(&[q(5, -7), q(2, 2)], &[q(5, -7), q(2, 2)], &p).unwrap());
        assert!(matches!(
            congruent(&[q(1, 0)], &[], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Brute-force #(O/I): count classes of a box of elements under membership of differences.
    fn coset_count(ideal: &IdealRep, range: i64) -> usize {
        let mut reps: Vec<QuadInt> = Vec::new();
        for a in -range..=range {
            for b in -range..=range {
                let x = q(a, b);
                if !reps.iter().any(|&r| ideal.contains(x - r)) {
                    reps.push(x);
                }
            }
        }
        reps.len()
    }

    #[test]
    fn norm_equals_brute_force_index() {
        for d in [1, 2, 3, 7] {
            let f = FieldSpec::new(d).unwrap();
            for ga in -4i64..=4 {
                for gb in -3i64..=3 {
                    let g = q(ga, gb);
                    if g.is_zero() {
                        continue;
                    }
                    let ideal = IdealRep::from_generators(&f, &[g]).unwrap();
                    if ideal.norm() > 100 {
                        continue;
                    }
                    assert_eq!(ideal.norm(), f.norm_inf(g).unwrap(), "principal ideal norm");
                    assert_eq!(coset_count(&ideal, ideal.norm()) as i64, ideal.norm());
                    assert_eq!(ideal.residues().len() as i64, ideal.norm());
                }
            }
        }
    }

    #[test]
    fn ideal_is_closed_under_omega() {
        let f = FieldSpec::new(3).unwrap();
        let ideal = IdealRep::from_generators(&f, &[q(2, 0), q(1, 1)]).unwrap();
        for row in ideal.basis() {
            let w = f.mul(QuadInt::OMEGA, q(row[0], row[1])).unwrap();
            assert!(ideal.contains(w));
        }
    }

    #[test]
    fn field_element_inverse() {
        let f = FieldSpec::new(3).unwrap();
        let x = FieldElement::from_quad(&f, q(2, 1));
        let y = x.inverse().unwrap();
        assert_eq!(x.mul(&y), x.one_like());
    }

    fn small() -> impl Strategy<Value = QuadInt> {
        (-1000i64..1000, -1000i64..1000).prop_map(|(a, b)| q(a, b))
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(d in prop::sample::select(vec![1i64, 2, 3, 5, 7, 11]), x in small(), y in small()) {
            let f = FieldSpec::new(d).unwrap();
            let xy = f.mul(x, y).unwrap();
            prop_assert_eq!(f.norm_inf(xy).unwrap(), f.norm_inf(x).unwrap() * f.norm_inf(y).unwrap());
            prop_assert_eq!(f.norm_inf(x).unwrap() == 0, x.is_zero());
            let e = f.embed(x);
            prop_assert!((e.norm_sqr() - f.norm_inf(x).unwrap() as f64).abs() <= 1e-9 * (1.0 + e.norm_sqr()));
        }

        #[test]
        fn regular_representation_is_homomorphism(d in prop::sample::select(vec![1i64, 2, 3, 7]), x in small(), y in small(), z in small()) {
            let f = FieldSpec::new(d).unwrap();
            let ry = f.regular_representation(y);
            let xy = f.mul(x, y).unwrap();
            prop_assert_eq!([xy.a, xy.b], [x.a * ry[0][0] + x.b * ry[1][0], x.a * ry[0][1] + x.b * ry[1][1]]);
            let det = ry[0][0] * ry[1][1] - ry[0][1] * ry[1][0];
            prop_assert_eq!(det, f.norm_inf(y).unwrap());
            // ỹ·z̃ = (yz)~
            let rz = f.regular_representation(z);
            let ryz = f.regular_representation(f.mul(y, z).unwrap());
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert_eq!(ry[i][0] * rz[0][j] + ry[i][1] * rz[1][j], ryz[i][j]);
                }
            }
        }

        #[test]
        fn ideal_generator_order_invariant(d in prop::sample::select(vec![1i64, 2, 3]), g in proptest::collection::vec((-6i64..6, -6i64..6), 1..4)) {
            let f = FieldSpec::new(d).unwrap();
            let gens: Vec<QuadInt> = g.iter().map(|&(a, b)| q(a, b)).collect();
            prop_assume!(gens.iter().any(|x| !x.is_zero()));
            let mut rev = gens.clone();
            rev.reverse();
            prop_assert_eq!(IdealRep::from_generators(&f, &gens).unwrap(), IdealRep::from_generators(&f, &rev).unwrap());
        }

        #[test]
        fn congruence_is_equivalence(x in small(), y in small(), z in small()) {
            let f = FieldSpec::new(1).unwrap();
            let ideal = IdealRep::from_generators(&f, &[q(2, 1)]).unwrap();
            let c = |a: QuadInt, b: QuadInt| congruent(&[a], &[b], &ideal).unwrap();
            prop_assert!(c(x, x));
            prop_assert_eq!(c(x, y), c(y, x));
            if c(x, y) && c(y, z) { prop_assert!(c(x, z)); }
            prop_assert_eq!(c(x, y), ideal.reduce(x) == ideal.reduce(y));
        }
    }
}
