//! Exact linear algebra over the rationals, plus a fraction-free
//! determinant for polynomial matrices.

use crate::poly::{Rat, RatPoly};
use num_traits::{One, Zero};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(mat: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = mat.len();
    if rows == 0 {
        return vec![];
    }
    let cols = mat[0].len();
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, pr);
        let inv = Rat::one() / mat[r][c].clone();
        for j in c..cols {
            mat[r][j] = &mat[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in c..cols {
                    let delta = &mat[r][j] * &f;
                    mat[i][j] = &mat[i][j] - &delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

/// Basis of the right nullspace of the matrix (solutions of M·v = 0),
/// one vector per free column, in column order.
pub fn nullspace(mat: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    if mat.is_empty() {
        return vec![];
    }
    let cols = mat[0].len();
    let mut work = mat.to_vec();
    let pivots = rref(&mut work);
    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut basis = vec![];
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -work[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Rank of a rational matrix.
pub fn rank(mat: &[Vec<Rat>]) -> usize {
    let mut work = mat.to_vec();
    rref(&mut work).len()
}

/// Nullspace of a system whose rows are sparse maps from an arbitrary
/// ordered key type.  `images[i]` is the constraint image of unknown `i`;
/// the result is a basis of coefficient vectors `v` with
/// `Σᵢ vᵢ·images[i] = 0`.
pub fn nullspace_keyed<K: Ord + Clone>(
    images: &[std::collections::BTreeMap<K, Rat>],
) -> Vec<Vec<Rat>> {
    use std::collections::BTreeMap;
    let mut keys: BTreeMap<K, usize> = BTreeMap::new();
    for img in images {
        for k in img.keys() {
            let next = keys.len();
            keys.entry(k.clone()).or_insert(next);
        }
    }
    let nrows = keys.len();
    let ncols = images.len();
    if nrows == 0 {
        // no constraints at all: everything is in the kernel
        return (0..ncols)
            .map(|i| {
                let mut v = vec![Rat::zero(); ncols];
                v[i] = Rat::one();
                v
            })
            .collect();
    }
    let mut mat = vec![vec![Rat::zero(); ncols]; nrows];
    for (i, img) in images.iter().enumerate() {
        for (k, c) in img {
            mat[keys[k]][i] = c.clone();
        }
    }
    nullspace(&mat)
}

/// Determinant of a square polynomial matrix by Bareiss fraction-free
/// elimination (division-exact in an integral domain).
pub fn poly_det(mat: &[Vec<RatPoly>]) -> RatPoly {
    let n = mat.len();
    if n == 0 {
        return RatPoly::one();
    }
    assert!(mat.iter().all(|r| r.len() == n), "determinant of non-square matrix");
    let mut m: Vec<Vec<RatPoly>> = mat.to_vec();
    let mut prev = RatPoly::one();
    let mut sign = false;
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(sw) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return RatPoly::zero();
            };
            m.swap(k, sw);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                m[i][j] = q;
            }
            m[i][k] = RatPoly::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign {
        -&det
    } else {
        det
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat_int, RatPoly};

    fn r(v: i64) -> Rat {
        rat_int(v)
    }

    #[test]
    fn nullspace_simple() {
        // x + y = 0 has kernel spanned by (1, -1)
        let m = vec![vec![r(1), r(1)]];
        let ns = nullspace(&m);
        assert_eq!(ns.len(), 1);
        assert_eq!(&ns[0][0] + &ns[0][1], r(0));
    }

    #[test]
    fn nullspace_checks_product() {
        let m = vec![
            vec![r(1), r(2), r(3)],
            vec![r(2), r(4), r(6)],
            vec![r(1), r(0), r(1)],
        ];
        for v in nullspace(&m) {
            for row in &m {
                let dot: Rat = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                assert!(dot.is_zero());
            }
        }
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn det_poly() {
        let t = RatPoly::var();
        let one = RatPoly::one();
        // det [[t, 1], [1, t]] = t^2 - 1
        let m = vec![vec![t.clone(), one.clone()], vec![one.clone(), t.clone()]];
        let d = poly_det(&m);
        let expect = &(&t * &t) - &one;
        assert_eq!(d, expect);
        // singular matrix
        let m2 = vec![vec![t.clone(), t.clone()], vec![t.clone(), t.clone()]];
        assert!(poly_det(&m2).is_zero());
    }

    #[test]
    fn det_with_pivoting() {
        let z = RatPoly::zero();
        let t = RatPoly::var();
        let one = RatPoly::one();
        let m = vec![
            vec![z.clone(), one.clone(), z.clone()],
            vec![t.clone(), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), &t * &t],
        ];
        let d = poly_det(&m);
        let expect = -&(&t * &(&t * &t));
        assert_eq!(d, expect);
    }
}
