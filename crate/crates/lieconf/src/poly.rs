//! Exact univariate and bivariate polynomials over the rationals.
//!
//! [`RatPoly`] is dense and variable-agnostic: the same type carries
//! polynomials in `∂`, in `λ`, or in the auxiliary variable of a matrix
//! pencil. [`BiPoly`] is sparse over two variables `x`, `y`; in Hopf-algebra
//! contexts `x` stands for `∂⊗1` and `y` for `1⊗∂`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rat = BigRational;

/// Rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// n! as a rational.
pub fn factorial(n: usize) -> Rat {
    let mut f = BigInt::one();
    for k in 2..=n {
        f *= BigInt::from(k);
    }
    Rat::from_integer(f)
}

/// Binomial coefficient C(n, k) for natural n.
pub fn binomial(n: usize, k: usize) -> Rat {
    if k > n {
        return Rat::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    Rat::new(num, den)
}

/// Generalized binomial C(m, k) for integer m (possibly negative), k ≥ 0.
pub fn binomial_int(m: i64, k: usize) -> Rat {
    let mut num = Rat::one();
    for i in 0..k {
        num = num * Rat::from_integer(BigInt::from(m - i as i64));
    }
    num / factorial(k)
}

/// Dense univariate polynomial with exact rational coefficients.
///
/// Invariant: the coefficient vector never ends in a zero; the zero
/// polynomial is the empty vector and has degree `None`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        RatPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        RatPoly::new(vec![c])
    }

    pub fn from_int(c: i64) -> Self {
        RatPoly::constant(rat_int(c))
    }

    /// The generator of the polynomial ring (the variable itself).
    pub fn var() -> Self {
        RatPoly::new(vec![Rat::zero(), Rat::one()])
    }

    /// c · t^k as a polynomial.
    pub fn monomial(c: Rat, k: usize) -> Self {
        if c.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); k + 1];
        coeffs[k] = c;
        RatPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the convention degree(0) = -1.
    pub fn degree_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(0)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return RatPoly::zero();
        }
        RatPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Multiply by t^k.
    pub fn mul_var_pow(&self, k: usize) -> Self {
        if self.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        RatPoly { coeffs }
    }

    pub fn pow(&self, mut e: usize) -> Self {
        let mut base = self.clone();
        let mut acc = RatPoly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Euclidean division: self = q·d + r with deg r < deg d.
    ///
    /// Panics if `d` is zero.
    pub fn div_rem(&self, d: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dd = d.degree().unwrap();
        let lc = d.leading_coeff();
        let mut r = self.clone();
        let mut q = RatPoly::zero();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let c = r.leading_coeff() / &lc;
            let t = RatPoly::monomial(c, rd - dd);
            q = &q + &t;
            r = &r - &(&t * d);
        }
        (q, r)
    }

    pub fn rem(&self, d: &RatPoly) -> RatPoly {
        self.div_rem(d).1
    }

    pub fn divides(&self, other: &RatPoly) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem(self).is_zero()
    }

    /// Monic associate (zero stays zero).
    pub fn monic(&self) -> RatPoly {
        if self.is_zero() {
            return RatPoly::zero();
        }
        let lc = self.leading_coeff();
        self.scale(&(Rat::one() / lc))
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: returns (g, s, t) with s·self + t·other = g, g monic.
    pub fn xgcd(&self, other: &RatPoly) -> (RatPoly, RatPoly, RatPoly) {
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (RatPoly::one(), RatPoly::zero());
        let (mut t0, mut t1) = (RatPoly::zero(), RatPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            let s = &s0 - &(&q * &s1);
            let t = &t0 - &(&q * &t1);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
            t0 = t1;
            t1 = t;
        }
        if r0.is_zero() {
            return (RatPoly::zero(), RatPoly::zero(), RatPoly::zero());
        }
        let lc = r0.leading_coeff();
        let inv = Rat::one() / lc;
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    pub fn lcm(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let g = self.gcd(other);
        (&self.div_rem(&g).0 * other).monic()
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat_int(k as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Substitute another polynomial for the variable.
    pub fn compose(&self, inner: &RatPoly) -> RatPoly {
        let mut acc = RatPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &RatPoly::constant(c.clone());
        }
        acc
    }

    /// p(t) ↦ p(-t).
    pub fn flip_sign(&self) -> RatPoly {
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c.clone() } else { c.clone() })
                .collect(),
        )
    }

    /// Lift into [`BiPoly`] as a polynomial in x.
    pub fn as_bipoly_x(&self) -> BiPoly {
        let mut terms = BTreeMap::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.insert((k as u32, 0), c.clone());
            }
        }
        BiPoly { terms }
    }

    /// Lift into [`BiPoly`] as a polynomial in y.
    pub fn as_bipoly_y(&self) -> BiPoly {
        let mut terms = BTreeMap::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.insert((0, k as u32), c.clone());
            }
        }
        BiPoly { terms }
    }

    /// Render with a chosen variable name.
    pub fn display<'a>(&'a self, var: &'a str) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, var }
    }
}

impl Add for &RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) + rhs.coeff(k));
        }
        RatPoly::new(coeffs)
    }
}

impl Sub for &RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) - rhs.coeff(k));
        }
        RatPoly::new(coeffs)
    }
}

impl Mul for &RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &RatPoly) -> RatPoly {
        if self.is_zero() || rhs.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RatPoly::new(coeffs)
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a RatPoly,
    var: &'a str,
}

fn fmt_rat(c: &Rat) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_term(c: &Rat, mono: &str, first: bool, out: &mut String) {
    let mag = c.abs();
    let sign = c.is_negative();
    if first {
        if sign {
            out.push('-');
        }
    } else if sign {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    if mono.is_empty() {
        out.push_str(&fmt_rat(&mag));
    } else if mag.is_one() {
        out.push_str(mono);
    } else {
        out.push_str(&fmt_rat(&mag));
        out.push('*');
        out.push_str(mono);
    }
}

fn fmt_power(var: &str, k: u32) -> String {
    match k {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{}^{}", var, k),
    }
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        let mut out = String::new();
        let mut first = true;
        for (k, c) in self.poly.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            fmt_term(c, &fmt_power(self.var, k as u32), first, &mut out);
            first = false;
        }
        write!(f, "{out}")
    }
}

impl fmt::Debug for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display("t"))
    }
}

/// Sparse bivariate polynomial over the rationals.
///
/// Invariant: no zero coefficient is stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), Rat>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    pub fn one() -> Self {
        BiPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        BiPoly { terms }
    }

    pub fn var_x() -> Self {
        BiPoly::monomial(Rat::one(), 1, 0)
    }

    pub fn var_y() -> Self {
        BiPoly::monomial(Rat::one(), 0, 1)
    }

    pub fn monomial(c: Rat, xk: u32, yk: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((xk, yk), c);
        }
        BiPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, xk: u32, yk: u32) -> Rat {
        self.terms.get(&(xk, yk)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn insert_add(&mut self, key: (u32, u32), c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(a, b)| a + b).max()
    }

    pub fn x_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(a, _)| a).max()
    }

    pub fn y_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(_, b)| b).max()
    }

    /// Coefficient of y^k as a polynomial in x.
    pub fn y_slice(&self, k: u32) -> RatPoly {
        let mut coeffs = vec![];
        for (&(a, b), c) in &self.terms {
            if b == k {
                if coeffs.len() <= a as usize {
                    coeffs.resize(a as usize + 1, Rat::zero());
                }
                coeffs[a as usize] = c.clone();
            }
        }
        RatPoly::new(coeffs)
    }

    /// Exchange x and y (the flip of tensor factors).
    pub fn swap(&self) -> BiPoly {
        let mut terms = BTreeMap::new();
        for (&(a, b), c) in &self.terms {
            terms.insert((b, a), c.clone());
        }
        BiPoly { terms }
    }

    pub fn scale(&self, c: &Rat) -> BiPoly {
        if c.is_zero() {
            return BiPoly::zero();
        }
        BiPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Substitute a bivariate image for y, leaving x fixed.
    pub fn substitute_y(&self, image: &BiPoly) -> BiPoly {
        let max = self.y_degree().unwrap_or(0);
        // power table image^0 .. image^max
        let mut pows = Vec::with_capacity(max as usize + 1);
        pows.push(BiPoly::one());
        for _ in 0..max {
            pows.push(&pows[pows.len() - 1] * image);
        }
        let mut out = BiPoly::zero();
        for (&(a, b), c) in &self.terms {
            let factor = BiPoly::monomial(c.clone(), a, 0);
            out = &out + &(&factor * &pows[b as usize]);
        }
        out
    }

    /// Substitute a bivariate image for x, leaving y fixed.
    pub fn substitute_x(&self, image: &BiPoly) -> BiPoly {
        self.swap().substitute_y(&image.swap()).swap()
    }

    /// If the polynomial does not involve x, return it as a polynomial in y.
    pub fn try_into_y_poly(&self) -> Option<RatPoly> {
        if self.x_degree().unwrap_or(0) > 0 {
            return None;
        }
        Some(self.swap().y_slice(0))
    }

    pub fn display<'a>(&'a self, xvar: &'a str, yvar: &'a str) -> BiPolyDisplay<'a> {
        BiPolyDisplay { poly: self, xvar, yvar }
    }
}

impl Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&k, c) in &rhs.terms {
            out.insert_add(k, c.clone());
        }
        out
    }
}

impl Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for (&k, c) in &rhs.terms {
            out.insert_add(k, -c.clone());
        }
        out
    }
}

impl Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &rhs.terms {
                out.insert_add((a1 + a2, b1 + b2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        BiPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, -v.clone())).collect(),
        }
    }
}

pub struct BiPolyDisplay<'a> {
    poly: &'a BiPoly,
    xvar: &'a str,
    yvar: &'a str,
}

impl fmt::Display for BiPolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest total degree first, x-heavy terms before y-heavy ones
        let mut keys: Vec<(u32, u32)> = self.poly.terms.keys().cloned().collect();
        keys.sort_by(|&(a1, b1), &(a2, b2)| {
            (a2 + b2, a2).cmp(&(a1 + b1, a1))
        });
        let mut out = String::new();
        let mut first = true;
        for (a, b) in keys {
            let c = self.poly.coeff(a, b);
            let xm = fmt_power(self.xvar, a);
            let ym = fmt_power(self.yvar, b);
            let mono = match (xm.is_empty(), ym.is_empty()) {
                (true, true) => String::new(),
                (false, true) => xm,
                (true, false) => ym,
                (false, false) => format!("{xm}*{ym}"),
            };
            fmt_term(&c, &mono, first, &mut out);
            first = false;
        }
        write!(f, "{out}")
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display("x", "y"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(coeffs: &[i64]) -> RatPoly {
        RatPoly::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    #[test]
    fn degree_conventions() {
        assert_eq!(RatPoly::zero().degree(), None);
        assert_eq!(RatPoly::zero().degree_i64(), -1);
        assert_eq!(p(&[3]).degree(), Some(0));
        assert_eq!(p(&[0, 0, 2]).degree(), Some(2));
        assert!(RatPoly::new(vec![Rat::zero()]).is_zero());
    }

    #[test]
    fn div_rem_examples() {
        let a = p(&[1, 0, 1]); // 1 + t^2
        let b = p(&[1, 1]); // 1 + t
        let (q, r) = a.div_rem(&b);
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.degree_i64() < b.degree_i64());
    }

    #[test]
    fn gcd_and_xgcd() {
        let a = &p(&[1, 1]) * &p(&[2, 0, 1]);
        let b = &p(&[1, 1]) * &p(&[-1, 1]);
        let g = a.gcd(&b);
        assert_eq!(g, p(&[1, 1]).monic());
        let (g2, s, t) = a.xgcd(&b);
        assert_eq!(g2, g);
        assert_eq!(&(&s * &a) + &(&t * &b), g);
    }

    #[test]
    fn compose_and_flip() {
        let a = p(&[1, 2, 1]); // (1+t)^2
        assert_eq!(a.compose(&p(&[-1, 1])), p(&[0, 0, 1]));
        assert_eq!(p(&[0, 3, 1]).flip_sign(), p(&[0, -3, 1]));
    }

    #[test]
    fn bipoly_substitution() {
        // y ↦ x + y applied to y^2 gives x^2 + 2xy + y^2
        let img = &BiPoly::var_x() + &BiPoly::var_y();
        let sq = BiPoly::monomial(Rat::one(), 0, 2).substitute_y(&img);
        assert_eq!(sq.coeff(2, 0), rat_int(1));
        assert_eq!(sq.coeff(1, 1), rat_int(2));
        assert_eq!(sq.coeff(0, 2), rat_int(1));
    }

    #[test]
    fn display_round_shapes() {
        let q = RatPoly::new(vec![rat(1, 2), rat_int(0), rat_int(-3)]);
        assert_eq!(format!("{}", q.display("D")), "-3*D^2 + 1/2");
        let b = &BiPoly::var_x() + &BiPoly::monomial(rat_int(2), 0, 1);
        assert_eq!(format!("{}", b.display("D", "L")), "D + 2*L");
    }

    proptest! {
        #[test]
        fn prop_div_rem(a in proptest::collection::vec(-6i64..6, 0..6),
                        b in proptest::collection::vec(-6i64..6, 1..5)) {
            let a = p(&a);
            let b = p(&b);
            prop_assume!(!b.is_zero());
            let (q, r) = a.div_rem(&b);
            prop_assert_eq!(&(&q * &b) + &r, a);
            prop_assert!(r.degree_i64() < b.degree_i64());
        }

        #[test]
        fn prop_gcd_divides(a in proptest::collection::vec(-4i64..4, 0..5),
                            b in proptest::collection::vec(-4i64..4, 0..5)) {
            let a = p(&a);
            let b = p(&b);
            let g = a.gcd(&b);
            if !g.is_zero() {
                prop_assert!(g.divides(&a));
                prop_assert!(g.divides(&b));
            } else {
                prop_assert!(a.is_zero() && b.is_zero());
            }
        }
    }
}
