//! Hopf-algebra operations of `H = k[∂]`.
//!
//! `H` carries the standard cocommutative Hopf structure with
//! `Δ(∂) = ∂⊗1 + 1⊗∂` and `S(∂) = -∂`. Elements of `H⊗H` live in
//! [`BiPoly`] with `x = ∂⊗1`, `y = 1⊗∂`.

use crate::poly::{BiPoly, Rat, RatPoly};

/// Coproduct: `∂^k ↦ (x + y)^k`, extended linearly.
pub fn coproduct(h: &RatPoly) -> BiPoly {
    let img = &BiPoly::var_x() + &BiPoly::var_y();
    h.as_bipoly_y().substitute_y(&img)
}

/// Antipode: `∂^k ↦ (-∂)^k`.
pub fn antipode(h: &RatPoly) -> RatPoly {
    h.flip_sign()
}

/// Counit: the constant term.
pub fn counit(h: &RatPoly) -> Rat {
    h.constant_term()
}

/// Fourier transform `h⊗k ↦ h·k₍₁₎ ⊗ k₍₂₎`, i.e. the substitution `y ↦ x + y`.
pub fn fourier(p: &BiPoly) -> BiPoly {
    let img = &BiPoly::var_x() + &BiPoly::var_y();
    p.substitute_y(&img)
}

/// Inverse Fourier transform `h⊗k ↦ h·S(k₍₁₎) ⊗ k₍₂₎`: the substitution `y ↦ y - x`.
pub fn fourier_inverse(p: &BiPoly) -> BiPoly {
    let img = &BiPoly::var_y() - &BiPoly::var_x();
    p.substitute_y(&img)
}

/// Express `p ∈ H⊗H` in the straightened form `Σᵢ (hᵢ(x)⊗1)·Δ(∂^{nᵢ})`
/// with distinct `nᵢ`, returned as pairs `(hᵢ, nᵢ)` sorted by `nᵢ`.
pub fn straighten(p: &BiPoly) -> Vec<(RatPoly, u32)> {
    let flat = fourier_inverse(p);
    let mut out = vec![];
    if let Some(top) = flat.y_degree() {
        for n in 0..=top {
            let h = flat.y_slice(n);
            if !h.is_zero() {
                out.push((h, n));
            }
        }
    }
    out
}

/// Recombine a straightened expansion into the corresponding `H⊗H` element.
pub fn unstraighten(parts: &[(RatPoly, u32)]) -> BiPoly {
    let delta = &BiPoly::var_x() + &BiPoly::var_y();
    let mut acc = BiPoly::zero();
    for (h, n) in parts {
        let term = &h.as_bipoly_x() * &delta.clone().substitute_y(&BiPoly::var_y()).pow_self(*n);
        acc = &acc + &term;
    }
    acc
}

trait PowSelf {
    fn pow_self(&self, e: u32) -> Self;
}

impl PowSelf for BiPoly {
    fn pow_self(&self, e: u32) -> BiPoly {
        let mut acc = BiPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat_int, RatPoly};
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn d_pow(k: usize) -> RatPoly {
        RatPoly::monomial(Rat::one(), k)
    }

    #[test]
    fn coproduct_examples() {
        assert_eq!(coproduct(&RatPoly::one()), BiPoly::one());
        let d = coproduct(&RatPoly::var());
        assert_eq!(d, &BiPoly::var_x() + &BiPoly::var_y());
        let d2 = coproduct(&d_pow(2));
        assert_eq!(d2.coeff(2, 0), rat_int(1));
        assert_eq!(d2.coeff(1, 1), rat_int(2));
        assert_eq!(d2.coeff(0, 2), rat_int(1));
    }

    #[test]
    fn antipode_examples() {
        assert_eq!(antipode(&RatPoly::var()), RatPoly::new(vec![Rat::zero(), rat_int(-1)]));
        assert_eq!(antipode(&RatPoly::one()), RatPoly::one());
        let p = RatPoly::new(vec![rat_int(0), rat_int(3), rat_int(1)]);
        let q = RatPoly::new(vec![rat_int(0), rat_int(-3), rat_int(1)]);
        assert_eq!(antipode(&p), q);
        assert_eq!(antipode(&antipode(&p)), p);
    }

    #[test]
    fn fourier_examples() {
        assert_eq!(fourier(&BiPoly::one()), BiPoly::one());
        assert_eq!(fourier(&BiPoly::var_y()), &BiPoly::var_x() + &BiPoly::var_y());
        // x·y^2 under the inverse transform becomes x(y-x)^2
        let p = &BiPoly::var_x() * &(&BiPoly::var_y() * &BiPoly::var_y());
        let q = fourier_inverse(&p);
        let ymx = &BiPoly::var_y() - &BiPoly::var_x();
        let expect = &BiPoly::var_x() * &(&ymx * &ymx);
        assert_eq!(q, expect);
    }

    #[test]
    fn straighten_examples() {
        // x is already straight
        let s = straighten(&BiPoly::var_x());
        assert_eq!(s, vec![(RatPoly::var(), 0)]);
        // y = (-x⊗1) + Δ(∂)
        let s = straighten(&BiPoly::var_y());
        assert_eq!(
            s,
            vec![
                (RatPoly::new(vec![Rat::zero(), rat_int(-1)]), 0),
                (RatPoly::one(), 1)
            ]
        );
        // x + y = Δ(∂)
        let s = straighten(&(&BiPoly::var_x() + &BiPoly::var_y()));
        assert_eq!(s, vec![(RatPoly::one(), 1)]);
    }

    /// Sparse trivariate polynomial used as the target of coassociativity.
    type TriPoly = BTreeMap<(u32, u32, u32), Rat>;

    fn tri_insert(t: &mut TriPoly, key: (u32, u32, u32), c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = t.entry(key).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            t.remove(&key);
        }
    }

    /// Apply Δ to the first slot: x^a y^b ↦ (x+y)^a z^b.
    fn delta_first(p: &BiPoly) -> TriPoly {
        let mut out = TriPoly::new();
        for (&(a, b), c) in p.terms() {
            for i in 0..=a {
                let coeff = c * crate::poly::binomial(a as usize, i as usize);
                tri_insert(&mut out, (i, a - i, b), coeff);
            }
        }
        out
    }

    /// Apply Δ to the second slot: x^a y^b ↦ x^a (y+z)^b.
    fn delta_second(p: &BiPoly) -> TriPoly {
        let mut out = TriPoly::new();
        for (&(a, b), c) in p.terms() {
            for i in 0..=b {
                let coeff = c * crate::poly::binomial(b as usize, i as usize);
                tri_insert(&mut out, (a, i, b - i), coeff);
            }
        }
        out
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = RatPoly> {
        proptest::collection::vec(-5i64..=5, 0..=max_deg + 1)
            .prop_map(|cs| RatPoly::new(cs.into_iter().map(rat_int).collect()))
    }

    fn arb_bipoly() -> impl Strategy<Value = BiPoly> {
        proptest::collection::vec(((0u32..6, 0u32..6), -5i64..=5), 0..8).prop_map(|ts| {
            let mut p = BiPoly::zero();
            for ((a, b), c) in ts {
                p.insert_add((a, b), rat_int(c));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn prop_coassociativity(h in arb_poly(8)) {
            let d = coproduct(&h);
            prop_assert_eq!(delta_first(&d), delta_second(&d));
        }

        #[test]
        fn prop_counit(h in arb_poly(8)) {
            // (ε⊗id)Δ = id: set x = 0 in Δ(h) and read off the y-polynomial
            let d = coproduct(&h);
            let mut restored = RatPoly::zero();
            for (&(a, b), c) in d.terms() {
                if a == 0 {
                    restored = &restored + &RatPoly::monomial(c.clone(), b as usize);
                }
            }
            prop_assert_eq!(restored, h);
        }

        #[test]
        fn prop_antipode_axiom(h in arb_poly(8)) {
            // μ(S⊗id)Δ(h) = ε(h)·1
            let d = coproduct(&h);
            let mut acc = RatPoly::zero();
            for (&(a, b), c) in d.terms() {
                let term = &antipode(&d_pow(a as usize)) * &d_pow(b as usize);
                acc = &acc + &term.scale(c);
            }
            prop_assert_eq!(acc, RatPoly::constant(counit(&h)));
        }

        #[test]
        fn prop_fourier_inverse(p in arb_bipoly()) {
            prop_assert_eq!(fourier(&fourier_inverse(&p)), p.clone());
            prop_assert_eq!(fourier_inverse(&fourier(&p)), p);
        }

        #[test]
        fn prop_straighten_roundtrip(p in arb_bipoly()) {
            let parts = straighten(&p);
            prop_assert_eq!(unstraighten(&parts), p);
        }
    }
}
