//! Small exact integer matrix routines: row Hermite normal form and
//! column reduction with a tracked unimodular inverse.

use crate::error::{Error, Result};

fn ck(v: Option<i128>) -> Result<i128> {
    v.ok_or(Error::Overflow("integer matrix reduction"))
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g >= 0.
pub(crate) fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Row-style Hermite normal form of the lattice spanned by `rows`.
///
/// Returns only the nonzero rows. Pivots are positive and entries above a
/// pivot lie in `[0, pivot)`.
pub(crate) fn row_hnf(mut rows: Vec<Vec<i128>>) -> Result<Vec<Vec<i128>>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0usize;
    for col in 0..ncols {
        if pivot_row == rows.len() {
            break;
        }
        for r in pivot_row + 1..rows.len() {
            if rows[r][col] == 0 {
                continue;
            }
            let a = rows[pivot_row][col];
            let b = rows[r][col];
            let (g, x, y) = ext_gcd(a, b);
            let (ag, bg) = (a / g, b / g);
            for c in 0..ncols {
                let p = rows[pivot_row][c];
                let q = rows[r][c];
                let np = ck(ck(x.checked_mul(p))?.checked_add(ck(y.checked_mul(q))?))?;
                let nq = ck(ck(ag.checked_mul(q))?.checked_sub(ck(bg.checked_mul(p))?))?;
                rows[pivot_row][c] = np;
                rows[r][c] = nq;
            }
        }
        if rows[pivot_row][col] == 0 {
            continue;
        }
        if rows[pivot_row][col] < 0 {
            for v in rows[pivot_row].iter_mut() {
                *v = -*v;
            }
        }
        let piv = rows[pivot_row][col];
        for r in 0..pivot_row {
            let q = rows[r][col].div_euclid(piv);
            if q != 0 {
                for c in 0..ncols {
                    rows[r][c] = ck(rows[r][c].checked_sub(ck(q.checked_mul(rows[pivot_row][c]))?))?;
                }
            }
        }
        pivot_row += 1;
    }
    rows.truncate(pivot_row);
    Ok(rows)
}

/// Reduces the `r x n` integer matrix `b` of rank `r` by unimodular column
/// operations `b W = [H | 0]` with `H` lower triangular, and returns the
/// first `r` rows of `W^{-1}`.
///
/// Those rows span `(row space of b) ∩ Z^n`.
pub(crate) fn saturated_row_basis(mut b: Vec<Vec<i128>>) -> Result<Vec<Vec<i128>>> {
    let r = b.len();
    let n = b.first().map_or(0, Vec::len);
    // winv starts as the identity; each column operation E on b applies E^{-1} to winv from the left.
    let mut winv: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();
    for i in 0..r {
        // gather the gcd of row i's entries in columns i.. into column i
        for j in i + 1..n {
            if b[i][j] == 0 {
                continue;
            }
            let a = b[i][i];
            let c = b[i][j];
            let (g, x, y) = ext_gcd(a, c);
            let (ag, cg) = (a / g, c / g);
            // columns (i, j) <- (x*col_i + y*col_j, -cg*col_i + ag*col_j); det = 1
            for row in b.iter_mut() {
                let p = row[i];
                let q = row[j];
                row[i] = ck(ck(x.checked_mul(p))?.checked_add(ck(y.checked_mul(q))?))?;
                row[j] = ck(ck(ag.checked_mul(q))?.checked_sub(ck(cg.checked_mul(p))?))?;
            }
            // inverse of [[x, -cg], [y, ag]] is [[ag, cg], [-y, x]] acting on rows i, j of winv
            for c in 0..n {
                let p = winv[i][c];
                let q = winv[j][c];
                winv[i][c] = ck(ck(ag.checked_mul(p))?.checked_add(ck(cg.checked_mul(q))?))?;
                winv[j][c] = ck(ck(x.checked_mul(q))?.checked_sub(ck(y.checked_mul(p))?))?;
            }
        }
        if b[i][i] == 0 {
            return Err(Error::DependentRows);
        }
    }
    winv.truncate(r);
    Ok(winv)
}

/// Exact determinant of a square integer matrix (Bareiss fraction-free elimination).
pub(crate) fn det_bareiss(mut m: Vec<Vec<i128>>) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Ok(0);
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = ck(ck(m[i][j].checked_mul(m[k][k]))?
                    .checked_sub(ck(m[i][k].checked_mul(m[k][j]))?))?;
                m[i][j] = num / prev;
            }
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_of_gaussian_ideal_two() {
        let h = row_hnf(vec![vec![2, 0], vec![0, 2]]).unwrap();
        assert_eq!(h, vec![vec![2, 0], vec![0, 2]]);
        let h = row_hnf(vec![vec![1, 1], vec![-1, 1]]).unwrap();
        assert_eq!(h, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn hnf_drops_dependent_rows() {
        let h = row_hnf(vec![vec![2, 4], vec![3, 6], vec![0, 0]]).unwrap();
        assert_eq!(h, vec![vec![1, 2]]);
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let m = vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]];
        assert_eq!(det_bareiss(m).unwrap(), 4);
        assert_eq!(det_bareiss(vec![vec![0, 1], vec![1, 0]]).unwrap(), -1);
        assert_eq!(det_bareiss(vec![vec![1, 2], vec![2, 4]]).unwrap(), 0);
    }

    #[test]
    fn saturation_basis_spans_primitive_line() {
        let w = saturated_row_basis(vec![vec![2, 4]]).unwrap();
        let g = w[0][0].abs();
        assert_eq!(w[0].iter().map(|v| v.abs()).collect::<Vec<_>>(), vec![g, 2 * g]);
        assert_eq!(g, 1);
    }
}
