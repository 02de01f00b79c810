//! Rectangular matrix pencils `A - x·B` over the rationals and the rational
//! root extraction used to locate their rank-drop points.
//!
//! The invariant factors of the pencil (computed by the Smith reduction over
//! `Q[x]`) are the characteristic data: the pencil loses column rank exactly
//! at the roots of the top invariant factor. Rational roots give exact
//! eigenvalues; a nonconstant cofactor after stripping them witnesses
//! eigenvalues that only exist over a field extension.

use crate::poly::{Rat, RatPoly};
use crate::smith;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

/// All rational roots of a polynomial (with multiplicity), plus the monic
/// cofactor that remains after dividing them out.
pub fn rational_roots(p: &RatPoly) -> (Vec<(Rat, usize)>, RatPoly) {
    if p.is_zero() || p.is_constant() {
        return (vec![], p.monic());
    }
    let mut work = p.monic();
    let mut roots: Vec<(Rat, usize)> = vec![];

    // strip roots at zero
    let mut zero_mult = 0usize;
    while !work.is_zero() && work.coeff(0).is_zero() {
        let coeffs = work.coeffs()[1..].to_vec();
        work = RatPoly::new(coeffs);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        roots.push((Rat::zero(), zero_mult));
    }

    if work.is_constant() {
        return (roots, work.monic());
    }

    // clear denominators to a primitive integer polynomial
    let mut den = BigInt::one();
    for c in work.coeffs() {
        den = den.lcm(c.denom());
    }
    let ints: Vec<BigInt> = work.coeffs().iter().map(|c| (c * Rat::from_integer(den.clone())).to_integer()).collect();
    let lead = ints.last().unwrap().magnitude().clone();
    let cons = ints[0].magnitude().clone();

    let mut candidates: Vec<Rat> = vec![];
    if let (Some(ps), Some(qs)) = (divisors(&cons), divisors(&lead)) {
        for p_num in &ps {
            for q_den in &qs {
                let base = Rat::new(BigInt::from(p_num.clone()), BigInt::from(q_den.clone()));
                candidates.push(base.clone());
                candidates.push(-base);
            }
        }
    } else {
        // factorization bailed out; fall back to small searches
        for num in -64i64..=64 {
            for dd in 1i64..=16 {
                candidates.push(Rat::new(BigInt::from(num), BigInt::from(dd)));
            }
        }
    }
    candidates.sort();
    candidates.dedup();

    for cand in candidates {
        if cand.is_zero() {
            continue;
        }
        let mut mult = 0usize;
        while !work.is_constant() && work.eval(&cand).is_zero() {
            // divide by (x - cand)
            let lin = RatPoly::new(vec![-cand.clone(), Rat::one()]);
            let (q, r) = work.div_rem(&lin);
            debug_assert!(r.is_zero());
            work = q;
            mult += 1;
        }
        if mult > 0 {
            roots.push((cand, mult));
        }
    }
    (roots, work.monic())
}

/// Rank-drop points of the pencil `A - x·B` where `B` has full column rank:
/// returns the distinct rational eigenvalues and the nonconstant extension
/// cofactor, if any.
pub fn pencil_eigenvalues(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> (Vec<Rat>, Option<RatPoly>) {
    let rows = a.len();
    assert_eq!(rows, b.len());
    if rows == 0 {
        return (vec![], None);
    }
    let cols = a[0].len();
    if cols == 0 {
        return (vec![], None);
    }
    let mut pencil: smith::PolyMat = vec![vec![RatPoly::zero(); cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            pencil[i][j] = RatPoly::new(vec![a[i][j].clone(), -b[i][j].clone()]);
        }
    }
    let sf = smith::smith_normal_form(&pencil);
    let top = sf
        .diag
        .iter()
        .rev()
        .find(|d| !d.is_zero())
        .cloned()
        .unwrap_or_else(RatPoly::zero);
    if sf.nonzero_diagonal_count() < cols {
        // the pencil is column-rank-deficient for every x; with an injective
        // B this cannot happen, so treat it as structurally defective
        return (vec![], Some(RatPoly::zero()));
    }
    if top.is_constant() {
        return (vec![], None);
    }
    let (roots, cofactor) = rational_roots(&top);
    let ext = if cofactor.is_constant() { None } else { Some(cofactor) };
    (roots.into_iter().map(|(r, _)| r).collect(), ext)
}

/// All positive divisors of `n`, or `None` when the factorization gives up.
fn divisors(n: &BigUint) -> Option<Vec<BigUint>> {
    if n.is_zero() {
        return Some(vec![BigUint::one()]);
    }
    let factors = factorize(n.clone())?;
    let mut divs = vec![BigUint::one()];
    for (p, e) in factors {
        let mut next = vec![];
        for d in &divs {
            let mut pk = BigUint::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk = &pk * &p;
            }
        }
        next.sort();
        next.dedup();
        divs = next;
        if divs.len() > 4096 {
            return None;
        }
    }
    Some(divs)
}

/// Factor a positive integer by trial division plus Pollard's rho.
fn factorize(mut n: BigUint) -> Option<Vec<(BigUint, u32)>> {
    let mut out: Vec<(BigUint, u32)> = vec![];
    let push = |p: BigUint, out: &mut Vec<(BigUint, u32)>| {
        for (q, e) in out.iter_mut() {
            if *q == p {
                *e += 1;
                return;
            }
        }
        out.push((p, 1));
    };
    for small in 2u64..1000 {
        let p = BigUint::from(small);
        if &p * &p > n {
            break;
        }
        while (&n % &p).is_zero() {
            n = &n / &p;
            push(p.clone(), &mut out);
        }
    }
    let mut stack = vec![n];
    let mut effort = 0usize;
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            push(m, &mut out);
            continue;
        }
        effort += 1;
        if effort > 64 {
            return None;
        }
        let d = pollard_rho(&m)?;
        stack.push(&m / &d);
        stack.push(d);
    }
    Some(out)
}

fn is_probable_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u8) {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let bp = BigUint::from(p);
        if n == &bp {
            return true;
        }
        if (n % &bp).is_zero() {
            return false;
        }
    }
    // Miller-Rabin with fixed witnesses (deterministic far beyond our range)
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let ab = BigUint::from(a) % n;
        if ab.is_zero() {
            continue;
        }
        let mut x = ab.modpow(&d, n);
        if x == one || x == nm1 {
            continue 'witness;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigUint) -> Option<BigUint> {
    if (n % BigUint::from(2u8)).is_zero() {
        return Some(BigUint::from(2u8));
    }
    let one = BigUint::one();
    for c in 1u64..32 {
        let cc = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &cc) % n;
        let mut x = BigUint::from(2u8);
        let mut y = BigUint::from(2u8);
        let mut d = one.clone();
        let mut steps = 0u32;
        while d == one {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            d = diff.gcd(n);
            steps += 1;
            if steps > 1_000_000 {
                return None;
            }
        }
        if d != one && &d != n {
            return Some(d);
        }
    }
    None
}

/// Keep a maximal linearly independent subset, preserving order.
pub fn independent_subset(vectors: Vec<Vec<Rat>>) -> Vec<usize> {
    let mut kept_rows: Vec<Vec<Rat>> = vec![];
    let mut kept = vec![];
    for (idx, v) in vectors.iter().enumerate() {
        let mut work = kept_rows.clone();
        work.push(v.clone());
        if crate::linalg::rank(&work) > kept_rows.len() {
            kept_rows = work;
            kept.push(idx);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, rat_int};

    fn p(coeffs: &[i64]) -> RatPoly {
        RatPoly::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    #[test]
    fn roots_of_products() {
        // (x - 2)(x + 1/3)·x
        let poly = &(&p(&[-2, 1]) * &RatPoly::new(vec![rat(1, 3), rat_int(1)])) * &p(&[0, 1]);
        let (roots, cof) = rational_roots(&poly);
        let mut vals: Vec<Rat> = roots.iter().map(|(r, _)| r.clone()).collect();
        vals.sort();
        assert_eq!(vals, vec![rat(-1, 3), rat_int(0), rat_int(2)]);
        assert!(cof.is_constant());
    }

    #[test]
    fn irrational_cofactor_survives() {
        // (x^2 - 2)(x - 1)
        let poly = &p(&[-2, 0, 1]) * &p(&[-1, 1]);
        let (roots, cof) = rational_roots(&poly);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].0, rat_int(1));
        assert_eq!(cof, p(&[-2, 0, 1]).monic());
    }

    #[test]
    fn multiplicity_counted() {
        let poly = &p(&[-1, 1]) * &p(&[-1, 1]);
        let (roots, _) = rational_roots(&poly);
        assert_eq!(roots, vec![(rat_int(1), 2)]);
    }

    #[test]
    fn pencil_simple_eigenvalues() {
        // A = diag(1, 2) acting on a 2-dim space, B = identity
        let a = vec![vec![rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(2)]];
        let b = vec![vec![rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(1)]];
        let (mut eigs, ext) = pencil_eigenvalues(&a, &b);
        eigs.sort();
        assert_eq!(eigs, vec![rat_int(1), rat_int(2)]);
        assert!(ext.is_none());
    }

    #[test]
    fn pencil_rectangular_no_eigenvalues() {
        // B injective, A pushes out of the image: no rank drop anywhere
        let a = vec![vec![rat_int(0)], vec![rat_int(1)]];
        let b = vec![vec![rat_int(1)], vec![rat_int(0)]];
        let (eigs, ext) = pencil_eigenvalues(&a, &b);
        assert!(eigs.is_empty());
        assert!(ext.is_none());
    }

    #[test]
    fn pencil_detects_irrational_spectrum() {
        // A = [[0, 1], [2, 0]] has eigenvalues ±√2
        let a = vec![vec![rat_int(0), rat_int(1)], vec![rat_int(2), rat_int(0)]];
        let b = vec![vec![rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(1)]];
        let (eigs, ext) = pencil_eigenvalues(&a, &b);
        assert!(eigs.is_empty());
        let cof = ext.expect("extension factor expected");
        assert_eq!(cof, p(&[-2, 0, 1]).monic());
    }

    #[test]
    fn factorization_of_moderate_numbers() {
        let n = BigUint::from(2u64 * 2 * 3 * 97 * 1009);
        let divs = divisors(&n).unwrap();
        assert!(divs.contains(&BigUint::from(97u64 * 3)));
        assert_eq!(divs.first().unwrap(), &BigUint::one());
        assert_eq!(divs.last().unwrap(), &n);
    }
}
