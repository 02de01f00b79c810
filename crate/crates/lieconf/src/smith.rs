//! Smith normal form of matrices over the polynomial ring `k[∂]`.
//!
//! The pivoting rule is deterministic: among nonzero entries of the working
//! submatrix, pick one of minimal degree, breaking ties by smallest
//! `(row, column)`. Diagonal entries are normalized monic.

use crate::linalg::poly_det;
use crate::poly::{Rat, RatPoly};
use num_traits::One;

pub type PolyMat = Vec<Vec<RatPoly>>;

pub fn identity(n: usize) -> PolyMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { RatPoly::one() } else { RatPoly::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &PolyMat, b: &PolyMat) -> PolyMat {
    let rows = a.len();
    let inner = if rows > 0 { a[0].len() } else { 0 };
    let cols = if b.is_empty() { 0 } else { b[0].len() };
    assert_eq!(inner, b.len(), "matrix dimension mismatch");
    let mut out = vec![vec![RatPoly::zero(); cols]; rows];
    for i in 0..rows {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..cols {
                if b[k][j].is_zero() {
                    continue;
                }
                out[i][j] = &out[i][j] + &(&a[i][k] * &b[k][j]);
            }
        }
    }
    out
}

/// Result of the Smith reduction `u · a · v = s`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub u: PolyMat,
    pub s: PolyMat,
    pub v: PolyMat,
    pub v_inv: PolyMat,
    /// Diagonal of `s` (length `min(rows, cols)`), monic, satisfying the
    /// divisibility chain; zeros trail.
    pub diag: Vec<RatPoly>,
}

impl SmithForm {
    pub fn nonzero_diagonal_count(&self) -> usize {
        self.diag.iter().filter(|d| !d.is_zero()).count()
    }
}

/// Compute the Smith normal form of a rectangular polynomial matrix.
pub fn smith_normal_form(a: &PolyMat) -> SmithForm {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    let mut m = a.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut v_inv = identity(cols);

    let swap_rows = |m: &mut PolyMat, u: &mut PolyMat, i: usize, j: usize| {
        m.swap(i, j);
        u.swap(i, j);
    };
    let swap_cols = |m: &mut PolyMat, v: &mut PolyMat, vi: &mut PolyMat, i: usize, j: usize| {
        for row in m.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        vi.swap(i, j);
    };
    // row_i -= q * row_k
    let row_sub = |m: &mut PolyMat, u: &mut PolyMat, i: usize, k: usize, q: &RatPoly| {
        for j in 0..cols {
            let d = q * &m[k][j];
            m[i][j] = &m[i][j] - &d;
        }
        for j in 0..u[0].len() {
            let d = q * &u[k][j];
            u[i][j] = &u[i][j] - &d;
        }
    };
    // col_j -= q * col_k
    let col_sub =
        |m: &mut PolyMat, v: &mut PolyMat, vi: &mut PolyMat, j: usize, k: usize, q: &RatPoly| {
            for row in m.iter_mut() {
                let d = q * &row[k];
                row[j] = &row[j] - &d;
            }
            for row in v.iter_mut() {
                let d = q * &row[k];
                row[j] = &row[j] - &d;
            }
            // inverse operation on the left of v_inv: row_k += q * row_j
            for c in 0..vi[0].len() {
                let d = q * &vi[j][c];
                vi[k][c] = &vi[k][c] + &d;
            }
        };

    let n = rows.min(cols);
    for k in 0..n {
        'step: loop {
            // minimal-degree nonzero pivot, ties by (row, col)
            let mut pivot: Option<(usize, usize, i64)> = None;
            for i in k..rows {
                for j in k..cols {
                    if m[i][j].is_zero() {
                        continue;
                    }
                    let d = m[i][j].degree_i64();
                    if pivot.map_or(true, |(_, _, pd)| d < pd) {
                        pivot = Some((i, j, d));
                    }
                }
            }
            let Some((pi, pj, _)) = pivot else {
                break 'step;
            };
            if pi != k {
                swap_rows(&mut m, &mut u, k, pi);
            }
            if pj != k {
                swap_cols(&mut m, &mut v, &mut v_inv, k, pj);
            }
            let mut dirty = false;
            for i in k + 1..rows {
                if m[i][k].is_zero() {
                    continue;
                }
                let (q, r) = m[i][k].div_rem(&m[k][k]);
                row_sub(&mut m, &mut u, i, k, &q);
                if !r.is_zero() {
                    dirty = true;
                }
            }
            for j in k + 1..cols {
                if m[k][j].is_zero() {
                    continue;
                }
                let (q, r) = m[k][j].div_rem(&m[k][k]);
                col_sub(&mut m, &mut v, &mut v_inv, j, k, &q);
                if !r.is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue 'step;
            }
            // pivot row and column are clear; enforce that the pivot divides
            // the rest of the submatrix before moving on
            let mut fix = None;
            'scan: for i in k + 1..rows {
                for j in k + 1..cols {
                    if !m[i][j].is_zero() && !m[k][k].divides(&m[i][j]) {
                        fix = Some(i);
                        break 'scan;
                    }
                }
            }
            if let Some(i) = fix {
                // add the offending row to the pivot row (row_k += row_i)
                let minus_one = RatPoly::constant(-Rat::one());
                row_sub(&mut m, &mut u, k, i, &minus_one);
                continue 'step;
            }
            break 'step;
        }
        if m[k][k].is_zero() {
            break;
        }
    }

    // monic normalization by row scaling
    for k in 0..n {
        if m[k][k].is_zero() {
            continue;
        }
        let lc = m[k][k].leading_coeff();
        if !lc.is_one() {
            let inv = Rat::one() / lc;
            for j in 0..cols {
                m[k][j] = m[k][j].scale(&inv);
            }
            for j in 0..u[0].len() {
                u[k][j] = u[k][j].scale(&inv);
            }
        }
    }

    let diag = (0..n).map(|k| m[k][k].clone()).collect();
    SmithForm { u, s: m, v, v_inv, diag }
}

/// Basis of the left kernel `{ w : w · a = 0 }` of a polynomial matrix,
/// one row vector per basis element.
pub fn left_kernel(a: &PolyMat) -> Vec<Vec<RatPoly>> {
    let rows = a.len();
    if rows == 0 {
        return vec![];
    }
    let cols = a[0].len();
    let sf = smith_normal_form(a);
    let n = rows.min(cols);
    let mut basis = vec![];
    for j in 0..rows {
        if j >= n || sf.diag[j].is_zero() {
            basis.push(sf.u[j].clone());
        }
    }
    basis
}

/// `det(U)`/`det(V)` checks: both must be nonzero rationals.
pub fn is_unimodular(mat: &PolyMat) -> bool {
    let d = poly_det(mat);
    !d.is_zero() && d.is_constant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat_int, RatPoly};
    use proptest::prelude::*;

    fn d_var() -> RatPoly {
        RatPoly::var()
    }

    fn check_snf(a: &PolyMat) -> SmithForm {
        let sf = smith_normal_form(a);
        // u·a·v = s exactly
        if !a.is_empty() {
            assert_eq!(mat_mul(&mat_mul(&sf.u, a), &sf.v), sf.s);
            assert!(is_unimodular(&sf.u), "u not unimodular");
            assert!(is_unimodular(&sf.v), "v not unimodular");
            assert_eq!(mat_mul(&sf.v, &sf.v_inv), identity(a[0].len()));
        }
        // divisibility chain
        for w in sf.diag.windows(2) {
            if !w[1].is_zero() {
                assert!(!w[0].is_zero(), "zero before nonzero in diagonal");
            }
            if !w[0].is_zero() {
                assert!(w[0].divides(&w[1]), "divisibility chain broken");
            }
        }
        // off-diagonal zero
        for (i, row) in sf.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if i != j {
                    assert!(e.is_zero());
                }
            }
        }
        sf
    }

    #[test]
    fn identity_is_its_own_form() {
        let sf = check_snf(&identity(2));
        assert_eq!(sf.diag, vec![RatPoly::one(), RatPoly::one()]);
    }

    #[test]
    fn unit_entry_pivots_to_one() {
        // [[D, 1]] has Smith form [[1, 0]]
        let a = vec![vec![d_var(), RatPoly::one()]];
        let sf = check_snf(&a);
        assert_eq!(sf.diag, vec![RatPoly::one()]);
    }

    #[test]
    fn reorders_for_divisibility() {
        // diag(D^2, D) must come out as diag(D, D^2)
        let d = d_var();
        let a = vec![
            vec![&d * &d, RatPoly::zero()],
            vec![RatPoly::zero(), d.clone()],
        ];
        let sf = check_snf(&a);
        assert_eq!(sf.diag, vec![d.clone(), &d * &d]);
    }

    #[test]
    fn zero_and_empty_matrices() {
        let a: PolyMat = vec![vec![RatPoly::zero(), RatPoly::zero()]];
        let sf = check_snf(&a);
        assert!(sf.diag[0].is_zero());
        let empty: PolyMat = vec![];
        let sf = smith_normal_form(&empty);
        assert!(sf.diag.is_empty());
    }

    #[test]
    fn left_kernel_annihilates() {
        let d = d_var();
        // rows (D, D^2) and (1, D) have kernel (D·r0 - ... ) — just verify w·a = 0
        let a = vec![
            vec![d.clone(), &d * &d],
            vec![RatPoly::one(), d.clone()],
        ];
        let ker = left_kernel(&a);
        assert_eq!(ker.len(), 1);
        for w in &ker {
            for j in 0..2 {
                let mut acc = RatPoly::zero();
                for i in 0..2 {
                    acc = &acc + &(&w[i] * &a[i][j]);
                }
                assert!(acc.is_zero());
            }
        }
    }

    fn arb_poly() -> impl Strategy<Value = RatPoly> {
        proptest::collection::vec(-4i64..=4, 0..=4)
            .prop_map(|cs| RatPoly::new(cs.into_iter().map(rat_int).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn prop_snf(rows in 1usize..=3, cols in 1usize..=3,
                    seedrows in proptest::collection::vec(proptest::collection::vec(arb_poly(), 3), 3)) {
            let a: PolyMat = (0..rows)
                .map(|i| (0..cols).map(|j| seedrows[i][j].clone()).collect())
                .collect();
            check_snf(&a);
        }
    }
}
