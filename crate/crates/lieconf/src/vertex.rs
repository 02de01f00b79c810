//! Finite vertex algebras: n-th products, truncated axiom checks, the
//! λ-bracket functor, nilpotence certificates, inner automorphisms, and the
//! root-space decomposition `V = U ⋉ V^[∞]`.
//!
//! Two product backends are supported. Generic algebras carry a finite
//! product table on generators over a window of indices, extended by the
//! translation rules; products the rules cannot reduce into the window are
//! a structured error. The built-in counterexample algebra
//! `C[t⁻¹] ⋉ C[∂]n` computes all products from closed formulas and is
//! total.

use crate::conformal::{CapConfig, ConformalAlgebra, LambdaElement};
use crate::error::{Error, Result};
use crate::modify::{modify, ModificationTrace, ModifyConfig};
use crate::module::{ModuleElement, PresentedModule, Submodule};
use crate::poly::{binomial_int, factorial, rat_int, Rat, RatPoly};
use crate::repweight::LambdaAction;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Debug)]
enum ProductBackend {
    /// Products of generators declared on a window `lo ≤ n ≤ hi`;
    /// nonnegative indices above `hi` are zero, indices below `lo` are
    /// outside the window.
    Table {
        lo: i64,
        hi: i64,
        products: BTreeMap<(usize, usize, i64), ModuleElement>,
    },
    /// The counterexample algebra on `{1, t⁻¹, n}`.
    Example,
}

/// A finite vertex algebra on a presented `C[∂]`-module.
#[derive(Clone, Debug)]
pub struct VertexAlgebra {
    carrier: Arc<PresentedModule>,
    vacuum: usize,
    backend: ProductBackend,
}

/// Element of the counterexample algebra `C[t⁻¹] ⋉ C[∂]n`: a Laurent
/// polynomial in `t` with nonpositive powers, plus a `C[∂]`-multiple of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleElement {
    /// Coefficients of `t^k` for `k ≤ 0`.
    pub u_part: BTreeMap<i64, Rat>,
    /// `n_part(∂)·n`.
    pub n_part: RatPoly,
}

impl ExampleElement {
    fn zero() -> Self {
        ExampleElement { u_part: BTreeMap::new(), n_part: RatPoly::zero() }
    }

    fn insert_u(&mut self, power: i64, c: Rat) {
        debug_assert!(power <= 0, "positive powers of t cannot occur");
        if c.is_zero() {
            return;
        }
        let entry = self.u_part.entry(power).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.u_part.remove(&power);
        }
    }

    /// Largest pole order appearing in the `t`-part (0 for constants).
    fn pole_order(&self) -> i64 {
        self.u_part.keys().min().map_or(0, |k| -k)
    }
}

impl VertexAlgebra {
    /// Generic table-backed algebra. The window is inferred from the
    /// declared product indices.
    pub fn from_table(
        carrier: Arc<PresentedModule>,
        vacuum: usize,
        products: BTreeMap<(usize, usize, i64), ModuleElement>,
    ) -> Result<Self> {
        if vacuum >= carrier.generator_count() {
            return Err(Error::Unsupported("vacuum generator index out of range".into()));
        }
        let lo = products.keys().map(|&(_, _, n)| n).min().unwrap_or(-1).min(-1);
        let hi = products.keys().map(|&(_, _, n)| n).max().unwrap_or(0).max(0);
        for e in products.values() {
            if !e.is_in(&carrier) {
                return Err(Error::Unsupported("product value outside the carrier".into()));
            }
        }
        Ok(VertexAlgebra { carrier, vacuum, backend: ProductBackend::Table { lo, hi, products } })
    }

    /// The counterexample vertex algebra `M = C[t⁻¹] ⋉ C[∂]n`, generated
    /// over `C[∂]` by the vacuum `e`, `u = t⁻¹` and `n`, with `∂·e = 0`.
    pub fn example() -> Self {
        let carrier = PresentedModule::new(
            vec!["e".into(), "u".into(), "n".into()],
            vec![vec![RatPoly::var(), RatPoly::zero(), RatPoly::zero()]],
        );
        VertexAlgebra { carrier, vacuum: 0, backend: ProductBackend::Example }
    }

    pub fn carrier(&self) -> &Arc<PresentedModule> {
        &self.carrier
    }

    pub fn vacuum_index(&self) -> usize {
        self.vacuum
    }

    pub fn vacuum(&self) -> ModuleElement {
        self.carrier.generator(self.vacuum)
    }

    pub fn is_example(&self) -> bool {
        matches!(self.backend, ProductBackend::Example)
    }

    /// Declared product window (the example backend is total).
    pub fn window(&self) -> Option<(i64, i64)> {
        match &self.backend {
            ProductBackend::Table { lo, hi, .. } => Some((*lo, *hi)),
            ProductBackend::Example => None,
        }
    }

    /// The n-th product `x₍ₙ₎y`, extended from generators by the
    /// translation rules
    /// `(∂x)₍ₘ₎y = -m·x₍ₘ₋₁₎y` and `x₍ₘ₎(∂y) = ∂(x₍ₘ₎y) + m·x₍ₘ₋₁₎y`.
    pub fn nth_product(&self, x: &ModuleElement, y: &ModuleElement, n: i64) -> Result<ModuleElement> {
        assert!(x.is_in(&self.carrier) && y.is_in(&self.carrier), "foreign elements");
        if let ProductBackend::Example = self.backend {
            let a = self.to_example(x);
            let b = self.to_example(y);
            return Ok(self.from_example(&example_product(&a, &b, n)));
        }
        let mut acc = self.carrier.zero();
        for (i, p) in x.coords().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (d, c) in p.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                // (∂^d g_i)₍ₙ₎ y = (-1)^d n(n-1)...(n-d+1) g_i₍ₙ₋d₎ y
                let mut fall = Rat::one();
                for s in 0..d {
                    fall = fall * rat_int(n - s as i64);
                }
                if fall.is_zero() {
                    continue;
                }
                if d % 2 == 1 {
                    fall = -fall;
                }
                let t = self.gen_on_element(i, y, n - d as i64)?;
                acc = acc.add(&t.scale_rat(&(fall * c)));
            }
        }
        Ok(acc)
    }

    /// `g_i ₍ₙ₎ y` for an arbitrary `y`, recursing on the ∂-degree of `y`.
    fn gen_on_element(&self, i: usize, y: &ModuleElement, n: i64) -> Result<ModuleElement> {
        let mut acc = self.carrier.zero();
        for (j, q) in y.coords().iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            for (e, c) in q.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let t = self.gen_on_shifted_gen(i, j, e, n)?;
                acc = acc.add(&t.scale_rat(c));
            }
        }
        Ok(acc)
    }

    /// `g_i ₍ₙ₎ (∂^e g_j)` by the second translation rule.
    fn gen_on_shifted_gen(&self, i: usize, j: usize, e: usize, n: i64) -> Result<ModuleElement> {
        if e == 0 {
            return self.gen_product(i, j, n);
        }
        // x₍ₙ₎(∂y) = ∂(x₍ₙ₎y) + n·x₍ₙ₋₁₎y
        let inner = self.gen_on_shifted_gen(i, j, e - 1, n)?;
        let mut acc = inner.apply_del();
        if n != 0 {
            let lower = self.gen_on_shifted_gen(i, j, e - 1, n - 1)?;
            acc = acc.add(&lower.scale_rat(&rat_int(n)));
        }
        Ok(acc)
    }

    /// Table lookup for a generator pair, with the vacuum products built in.
    fn gen_product(&self, i: usize, j: usize, n: i64) -> Result<ModuleElement> {
        // vacuum rules: e₍₋₁₎x = x; x₍₋₁₋ⱼ₎e = ∂ʲx/j!
        if i == self.vacuum {
            return Ok(if n == -1 { self.carrier.generator(j) } else { self.carrier.zero() });
        }
        if j == self.vacuum {
            if n >= 0 {
                return Ok(self.carrier.zero());
            }
            let k = (-n - 1) as usize;
            return Ok(self
                .carrier
                .generator(i)
                .scale_poly(&RatPoly::monomial(Rat::one() / factorial(k), k)));
        }
        match &self.backend {
            ProductBackend::Example => {
                let a = self.to_example(&self.carrier.generator(i));
                let b = self.to_example(&self.carrier.generator(j));
                Ok(self.from_example(&example_product(&a, &b, n)))
            }
            ProductBackend::Table { lo, hi, products } => {
                if n > *hi {
                    if n >= 0 {
                        return Ok(self.carrier.zero());
                    }
                    return Err(Error::OutsideWindow { n });
                }
                if n < *lo {
                    return Err(Error::OutsideWindow { n });
                }
                Ok(products
                    .get(&(i, j, n))
                    .cloned()
                    .unwrap_or_else(|| self.carrier.zero()))
            }
        }
    }

    fn to_example(&self, x: &ModuleElement) -> ExampleElement {
        let mut out = ExampleElement::zero();
        // e-coordinate: a constant after canonical reduction
        out.insert_u(0, x.coords()[0].constant_term());
        // u-coordinate: ∂^d t⁻¹ = (-1)^d d! t^(-1-d)
        for (d, c) in x.coords()[1].coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut v = c * factorial(d);
            if d % 2 == 1 {
                v = -v;
            }
            out.insert_u(-1 - d as i64, v);
        }
        out.n_part = x.coords()[2].clone();
        out
    }

    fn from_example(&self, x: &ExampleElement) -> ModuleElement {
        let mut e_coord = RatPoly::zero();
        let mut u_coord = RatPoly::zero();
        for (&k, c) in &x.u_part {
            if k == 0 {
                e_coord = &e_coord + &RatPoly::constant(c.clone());
            } else {
                // t^(-1-d) = (-1)^d/d! · ∂^d t⁻¹
                let d = (-k - 1) as usize;
                let mut v = c / factorial(d);
                if d % 2 == 1 {
                    v = -v;
                }
                u_coord = &u_coord + &RatPoly::monomial(v, d);
            }
        }
        self.carrier.element(vec![e_coord, u_coord, x.n_part.clone()])
    }

    /// Indices at which `x₍ₙ₎y` can be nonzero.
    fn product_support(&self, x: &ModuleElement, y: &ModuleElement) -> (i64, i64) {
        match &self.backend {
            ProductBackend::Table { lo, hi, .. } => {
                let shift = x
                    .coords()
                    .iter()
                    .chain(y.coords().iter())
                    .map(|p| p.degree_i64().max(0))
                    .sum::<i64>();
                (*lo - shift, *hi + shift)
            }
            ProductBackend::Example => {
                let a = self.to_example(x);
                let b = self.to_example(y);
                let lo = -(a.pole_order() + b.pole_order()) - 2 - a.n_part.degree_i64().max(0)
                    - b.n_part.degree_i64().max(0);
                (lo, a.pole_order().max(b.pole_order()).max(1))
            }
        }
    }

    /// Upper bound of nonzero nonnegative products on generators.
    fn nonneg_bound(&self) -> i64 {
        match &self.backend {
            ProductBackend::Table { hi, .. } => (*hi).max(0),
            ProductBackend::Example => 4,
        }
    }

    /// The underlying Lie conformal algebra: `[a_λ b] = Σ λⁿ/n!·a₍ₙ₎b`.
    /// The resulting bracket table must pass the conformal axiom checks.
    pub fn lie_functor(&self) -> Result<ConformalAlgebra> {
        let k = self.carrier.generator_count();
        let mut table = BTreeMap::new();
        for i in 0..k {
            for j in 0..k {
                let mut e = LambdaElement::zero();
                for n in 0..=self.nonneg_bound() {
                    let p = self.gen_product(i, j, n)?;
                    if !p.is_zero() {
                        e.insert_add(n as usize, p.scale_rat(&(Rat::one() / factorial(n as usize))));
                    }
                }
                if !e.is_zero() {
                    table.insert((i, j), e);
                }
            }
        }
        let alg = ConformalAlgebra::new(self.carrier.clone(), table);
        if !alg.check_axioms().passes() {
            return Err(Error::Invariant(
                "the λ-bracket of the vertex algebra violates the conformal axioms".into(),
            ));
        }
        Ok(alg)
    }

    /// Truncated verification of the vertex algebra axioms.
    pub fn check_vertex_axioms(&self, truncation: i64) -> Result<VertexAxiomReport> {
        let k = self.carrier.generator_count();
        let gens: Vec<ModuleElement> = (0..k).map(|i| self.carrier.generator(i)).collect();
        let mut report = VertexAxiomReport::default();

        // vacuum axiom
        for (i, g) in gens.iter().enumerate() {
            for m in -truncation..=truncation {
                let left = self.nth_product(&self.vacuum(), g, m)?;
                let expect = if m == -1 { g.clone() } else { self.carrier.zero() };
                if left != expect {
                    report.fail("vacuum", format!("1₍{m}₎{} ≠ {expect}", self.carrier.label(i)));
                }
                let right = self.nth_product(g, &self.vacuum(), m)?;
                let expect = if m >= 0 {
                    self.carrier.zero()
                } else {
                    let j = (-m - 1) as usize;
                    g.scale_poly(&RatPoly::monomial(Rat::one() / factorial(j), j))
                };
                if right != expect {
                    report.fail("vacuum", format!("{}₍{m}₎1 mismatch", self.carrier.label(i)));
                }
            }
        }

        // translation invariance on the window
        for x in &gens {
            for y in &gens {
                for m in -truncation..=truncation {
                    let tx = self.nth_product(&x.apply_del(), y, m);
                    let base = self.nth_product(x, y, m - 1);
                    if let (Ok(tx), Ok(base)) = (tx, base) {
                        if tx != base.scale_rat(&rat_int(-m)) {
                            report.fail("translation", format!("(∂x)₍{m}₎y rule fails"));
                        }
                    }
                    let lhs = self.nth_product(x, y, m).map(|p| p.apply_del());
                    let r1 = self.nth_product(&x.apply_del(), y, m);
                    let r2 = self.nth_product(x, &y.apply_del(), m);
                    if let (Ok(lhs), Ok(r1), Ok(r2)) = (lhs, r1, r2) {
                        if lhs != r1.add(&r2) {
                            report.fail("translation", format!("∂(x₍{m}₎y) Leibniz rule fails"));
                        }
                    }
                }
            }
        }

        // skew-commutativity: x₍ₘ₎y = Σ_{j≥0} (-1)^(m+j+1) ∂ʲ(y₍ₘ₊ⱼ₎x)/j!
        for x in &gens {
            for y in &gens {
                let (_, hi) = self.product_support(y, x);
                for m in -truncation..=truncation {
                    let lhs = match self.nth_product(x, y, m) {
                        Ok(v) => v,
                        Err(_) => continue,
                    };
                    let mut rhs = self.carrier.zero();
                    let mut ok = true;
                    for j in 0..=(hi - m).max(0) {
                        match self.nth_product(y, x, m + j) {
                            Ok(p) => {
                                if p.is_zero() {
                                    continue;
                                }
                                let mut c = Rat::one() / factorial(j as usize);
                                if (m + j + 1).rem_euclid(2) == 1 {
                                    c = -c;
                                }
                                rhs = rhs.add(
                                    &p.scale_poly(&RatPoly::monomial(c, j as usize)),
                                );
                            }
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && lhs != rhs {
                        report.fail("skew-commutativity", format!("pair at index {m}"));
                    }
                }
            }
        }

        // locality through the commutator formula:
        // [a₍ₘ₎, b₍ₖ₎]c = Σ_j C(m,j) (a₍ⱼ₎b)₍ₘ₊ₖ₋ⱼ₎c
        for a in &gens {
            for b in &gens {
                let (_, top) = self.product_support(a, b);
                for c in &gens {
                    for m in -truncation..=truncation {
                        for kk in -truncation..=truncation {
                            let lhs = (|| -> Result<ModuleElement> {
                                let bc = self.nth_product(b, c, kk)?;
                                let abc = self.nth_product(a, &bc, m)?;
                                let ac = self.nth_product(a, c, m)?;
                                let bac = self.nth_product(b, &ac, kk)?;
                                Ok(abc.sub(&bac))
                            })();
                            let rhs = (|| -> Result<ModuleElement> {
                                let mut acc = self.carrier.zero();
                                for j in 0..=top.max(0) {
                                    let ab = self.nth_product(a, b, j)?;
                                    if ab.is_zero() {
                                        continue;
                                    }
                                    let t = self.nth_product(&ab, c, m + kk - j)?;
                                    acc = acc.add(&t.scale_rat(&binomial_int(m, j as usize)));
                                }
                                Ok(acc)
                            })();
                            if let (Ok(lhs), Ok(rhs)) = (lhs, rhs) {
                                if lhs != rhs {
                                    report.fail(
                                        "locality",
                                        format!("commutator identity fails at ({m}, {kk})"),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }

        // locality orders N(a, b) = 1 + max{ j ≥ 0 : a₍ⱼ₎b ≠ 0 }
        for (i, a) in gens.iter().enumerate() {
            for (j, b) in gens.iter().enumerate() {
                let mut order = 0;
                for n in 0..=self.nonneg_bound() {
                    if !self.nth_product(a, b, n)?.is_zero() {
                        order = n + 1;
                    }
                }
                report.locality_orders.insert(
                    (self.carrier.label(i).to_string(), self.carrier.label(j).to_string()),
                    order,
                );
            }
        }
        Ok(report)
    }

    /// Bounded nilpotence certificate: the element is nilpotent at order
    /// `d+1` when all depth-`d` iterated products vanish. Never claims
    /// non-nilpotence.
    pub fn is_nilpotent_element(&self, v: &ModuleElement, bound: usize) -> Result<Nilpotence> {
        let mut current = Submodule::span(&self.carrier, std::slice::from_ref(v));
        for depth in 1..=bound {
            let mut next_gens = vec![];
            for w in current.generators() {
                let (lo, hi) = self.product_support(v, &w);
                for m in lo..=hi {
                    match self.nth_product(v, &w, m) {
                        Ok(p) => {
                            if !p.is_zero() {
                                next_gens.push(p);
                            }
                        }
                        // an unknowable product means no certificate
                        Err(Error::OutsideWindow { .. }) => return Ok(Nilpotence::NotDecided),
                        Err(e) => return Err(e),
                    }
                }
            }
            if next_gens.is_empty() {
                return Ok(Nilpotence::NilpotentAtOrder(depth + 1));
            }
            current = Submodule::span(&self.carrier, &next_gens);
        }
        Ok(Nilpotence::NotDecided)
    }

    /// `exp(k·v₍₀₎)` for a square-zero derivation `v₍₀₎`: the endomorphism
    /// `x ↦ x + k·v₍₀₎x`.
    pub fn exp_inner_automorphism(
        &self,
        v: &ModuleElement,
        k: &Rat,
        truncation: i64,
    ) -> Result<VertexEndo> {
        let gens: Vec<ModuleElement> =
            (0..self.carrier.generator_count()).map(|i| self.carrier.generator(i)).collect();
        // v₍₀₎ must be square-zero on the carrier
        for g in &gens {
            let once = self.nth_product(v, g, 0)?;
            let twice = self.nth_product(v, &once, 0)?;
            if !twice.is_zero() {
                return Err(Error::Unsupported("the zeroth action of the element is not square-zero".into()));
            }
        }
        // and a derivation of every product in the window
        for x in &gens {
            for y in &gens {
                for m in -truncation..=truncation {
                    let lhs = self.nth_product(x, y, m).and_then(|p| self.nth_product(v, &p, 0));
                    let r1 = self
                        .nth_product(v, x, 0)
                        .and_then(|vx| self.nth_product(&vx, y, m));
                    let r2 = self
                        .nth_product(v, y, 0)
                        .and_then(|vy| self.nth_product(x, &vy, m));
                    if let (Ok(lhs), Ok(r1), Ok(r2)) = (lhs, r1, r2) {
                        if lhs != r1.add(&r2) {
                            return Err(Error::Unsupported(
                                "the zeroth action of the element is not a derivation".into(),
                            ));
                        }
                    }
                }
            }
        }
        let images = gens
            .iter()
            .map(|g| Ok(g.add(&self.nth_product(v, g, 0)?.scale_rat(k))))
            .collect::<Result<Vec<_>>>()?;
        let endo = VertexEndo { algebra: self.clone(), images, parameter: k.clone(), base: v.clone() };
        // the automorphism must preserve products on the window
        for (i, x) in gens.iter().enumerate() {
            for (j, y) in gens.iter().enumerate() {
                for m in -truncation..=truncation {
                    let direct = self.nth_product(x, y, m);
                    if let Ok(direct) = direct {
                        let mapped = self.nth_product(&endo.images[i], &endo.images[j], m)?;
                        if endo.apply(&direct) != mapped {
                            return Err(Error::Invariant(format!(
                                "inner automorphism fails to preserve the product at index {m}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(endo)
    }

    /// Root-space decomposition `V = U ⋉ N` with `N = V^[∞]` and `U` a
    /// Cartan part: the generalized zero-weight space of a modified element
    /// of minimal singularity.
    pub fn root_space_decomposition(&self, cfg: RootConfig) -> Result<RootDecomposition> {
        let lie = Arc::new(self.lie_functor()?);
        if !lie.is_solvable() {
            return Err(Error::Invariant(
                "the Lie conformal part of a finite vertex algebra must be solvable".into(),
            ));
        }
        let n_expected = lie.stabilized_ideal();

        // minimal-singularity candidate search by increasing max-norm; a
        // value witnessed on two consecutive norm levels is accepted as the
        // minimum, the earliest candidate achieving it winning ties
        let search_cap = CapConfig { initial: cfg.cap.initial, max: cfg.cap.initial };
        let mut budget = cfg.candidate_budget;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut best: Option<(usize, ModuleElement)> = None;
        let mut prev_level_min: Option<usize> = None;
        let mut accepted = false;
        'levels: for level in 1..=4i64 {
            let mut level_min: Option<usize> = None;
            let mut candidates = enumerate_level(&self.carrier, level);
            // seed permutes tie-breaks inside a norm level
            for idx in (1..candidates.len()).rev() {
                let j = (rng.next_u64() as usize) % (idx + 1);
                candidates.swap(idx, j);
            }
            for cand in candidates {
                if budget == 0 {
                    return Err(Error::BudgetExhausted(format!(
                        "minimal-singularity search (best so far: {:?})",
                        best.as_ref().map(|(s, e)| (s, e.to_string()))
                    )));
                }
                budget -= 1;
                let act = LambdaAction::adjoint(lie.clone(), cand.clone())?;
                let Ok((filt, _)) = act.lie_filtration(search_cap) else { continue };
                let sing = filt.singularity();
                if best.as_ref().map_or(true, |(s, _)| sing < *s) {
                    best = Some((sing, cand.clone()));
                }
                if level_min.map_or(true, |m| sing < m) {
                    level_min = Some(sing);
                }
                if level > 1 && prev_level_min == Some(sing) && best.as_ref().unwrap().0 == sing {
                    accepted = true;
                    break 'levels;
                }
            }
            prev_level_min = match (prev_level_min, level_min) {
                (Some(p), Some(l)) => Some(p.min(l)),
                (None, l) => l,
                (p, None) => p,
            };
        }
        if !accepted {
            return Err(Error::BudgetExhausted(format!(
                "minimal singularity not certified (best so far: {:?})",
                best.as_ref().map(|(s, e)| (s, e.to_string()))
            )));
        }
        let candidate = best.expect("accepted implies a best candidate").1;

        // modify the candidate so that its subalgebra image is nilpotent
        let act = LambdaAction::adjoint(lie.clone(), candidate.clone())?;
        let trace = modify(&act, ModifyConfig { cap: cfg.cap, seed: cfg.seed })?;
        let abar = trace.result.clone();
        let new_act = act.with_element(abar.clone())?;
        let dec = new_act.decompose(cfg.cap)?;
        if !dec.covers {
            return Err(Error::Invariant("root decomposition does not cover the carrier".into()));
        }
        let u_part = dec
            .parts
            .iter()
            .find(|(w, _)| w.is_zero())
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| Submodule::zero(&self.carrier));
        let n_part = dec.nonzero_weight_sum(&self.carrier);

        // structural postconditions of the decomposition
        if !n_part.equals(&n_expected) {
            return Err(Error::Invariant(
                "the nonzero-weight sum differs from the stabilized ideal".into(),
            ));
        }
        if !u_part.sum(&n_part).equals(&Submodule::full(&self.carrier))
            || !u_part.intersect(&n_part).is_zero()
        {
            return Err(Error::Invariant("U ⊕ N is not the whole carrier".into()));
        }
        // U is closed under products in the verification window
        let ugens = u_part.generators();
        for x in &ugens {
            for y in &ugens {
                let (lo, hi) = self.product_support(x, y);
                for m in lo.max(-cfg.truncation)..=hi.min(cfg.truncation) {
                    if let Ok(p) = self.nth_product(x, y, m) {
                        if !u_part.contains(&p) {
                            return Err(Error::Invariant(
                                "U is not closed under the vertex products".into(),
                            ));
                        }
                    }
                }
            }
        }
        // N is an abelian ideal: internal products vanish, products with V
        // stay inside
        let ngens = n_part.generators();
        for x in &ngens {
            for y in &ngens {
                let (lo, hi) = self.product_support(x, y);
                for m in lo..=hi {
                    if !self.nth_product(x, y, m)?.is_zero() {
                        return Err(Error::Invariant("N is not abelian".into()));
                    }
                }
            }
        }
        for i in 0..self.carrier.generator_count() {
            let g = self.carrier.generator(i);
            for y in &ngens {
                let (lo, hi) = self.product_support(&g, y);
                for m in lo..=hi {
                    if let Ok(p) = self.nth_product(&g, y, m) {
                        if !n_part.contains(&p) {
                            return Err(Error::Invariant("N is not an ideal".into()));
                        }
                    }
                }
            }
        }
        // the Lie part of U is nilpotent and self-normalizing
        if !lie.central_series_of(&u_part).last().unwrap().is_zero() {
            return Err(Error::Invariant("the Lie part of U is not nilpotent".into()));
        }
        let (normalizer, _) = lie.normalizer(&u_part, cfg.cap);
        if !normalizer.equals(&u_part) {
            return Err(Error::Invariant("U is not self-normalizing".into()));
        }

        Ok(RootDecomposition {
            u_part,
            n_part,
            candidate,
            trace,
            singularity: new_act.singularity(cfg.cap)?,
        })
    }
}

/// Endomorphism `x ↦ x + k·v₍₀₎x` of a vertex algebra.
#[derive(Clone, Debug)]
pub struct VertexEndo {
    algebra: VertexAlgebra,
    images: Vec<ModuleElement>,
    parameter: Rat,
    base: ModuleElement,
}

impl VertexEndo {
    pub fn apply(&self, x: &ModuleElement) -> ModuleElement {
        let mut out = self.algebra.carrier.zero();
        for (c, img) in x.coords().iter().zip(&self.images) {
            if !c.is_zero() {
                out = out.add(&img.scale_poly(c));
            }
        }
        out
    }

    /// The inverse automorphism (the same exponential with parameter `-k`).
    pub fn inverse(&self, truncation: i64) -> Result<VertexEndo> {
        self.algebra
            .exp_inner_automorphism(&self.base, &-self.parameter.clone(), truncation)
    }
}

/// Outcome of a bounded nilpotence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nilpotence {
    NilpotentAtOrder(usize),
    NotDecided,
}

/// Truncated axiom verification report.
#[derive(Clone, Debug, Default)]
pub struct VertexAxiomReport {
    /// (axiom, first counterexample) for each failure.
    pub failures: Vec<(String, String)>,
    /// `N(a, b)` per generator pair.
    pub locality_orders: BTreeMap<(String, String), i64>,
}

impl VertexAxiomReport {
    fn fail(&mut self, axiom: &str, detail: String) {
        // keep only the first counterexample per axiom
        if !self.failures.iter().any(|(a, _)| a == axiom) {
            self.failures.push((axiom.to_string(), detail));
        }
    }

    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Configuration of the root-space decomposition pipeline.
#[derive(Clone, Copy, Debug)]
pub struct RootConfig {
    pub cap: CapConfig,
    pub truncation: i64,
    pub candidate_budget: usize,
    pub seed: u64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            cap: CapConfig::default(),
            truncation: 8,
            candidate_budget: 200,
            seed: 0,
        }
    }
}

/// Result of the root-space decomposition.
#[derive(Clone, Debug)]
pub struct RootDecomposition {
    pub u_part: Submodule,
    pub n_part: Submodule,
    pub candidate: ModuleElement,
    pub trace: ModificationTrace,
    pub singularity: usize,
}

/// Products in the counterexample algebra.
fn example_product(a: &ExampleElement, b: &ExampleElement, n: i64) -> ExampleElement {
    let mut out = ExampleElement::zero();

    // U-part times U-part: z^j-coefficient of the |z|<|t| expansion of
    // a(t+z)·b(t); only negative product indices n = -1-j survive
    if n <= -1 {
        let j = (-n - 1) as usize;
        for (&ka, ca) in &a.u_part {
            // (t+z)^ka expanded with positive powers of z/t
            let coeff = binomial_int(ka, j);
            if coeff.is_zero() {
                continue;
            }
            for (&kb, cb) in &b.u_part {
                out.insert_u(ka - j as i64 + kb, ca * cb * &coeff);
            }
        }
    }

    // U-part acting on the n-part: Y(a,z)(q(∂)n) from Y(a,z)n = a(z)n and
    // the translation rule
    if !b.n_part.is_zero() {
        let acted = u_on_npart(&a.u_part, &b.n_part, n);
        out.n_part = &out.n_part + &acted;
    }

    // n-part acting on the U-part: Y(p(∂)n, z)b via
    // Y(n,z)b = b(-z)·e^{z∂}n and the first translation rule
    if !a.n_part.is_zero() && !b.u_part.is_empty() {
        for (d, c) in a.n_part.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // (∂^d n)₍ₙ₎b = (-1)^d n(n-1)...(n-d+1)·n₍ₙ₋d₎b
            let mut fall = Rat::one();
            for s in 0..d {
                fall = fall * rat_int(n - s as i64);
            }
            if fall.is_zero() {
                continue;
            }
            if d % 2 == 1 {
                fall = -fall;
            }
            let base = n_gen_on_upart(&b.u_part, n - d as i64);
            out.n_part = &out.n_part + &base.scale(&(fall * c));
        }
    }

    // n-part on n-part is zero
    out
}

/// `a₍ₙ₎(q(∂)n)` as a polynomial applied to `n`.
fn u_on_npart(a: &BTreeMap<i64, Rat>, q: &RatPoly, n: i64) -> RatPoly {
    let mut out = RatPoly::zero();
    for (e, c) in q.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out = &out + &u_on_shifted_n(a, e, n).scale(c);
    }
    out
}

/// `a₍ₙ₎(∂^e n)`: base case `a₍ₙ₎n = (coefficient of t^(-n-1) in a)·n`.
fn u_on_shifted_n(a: &BTreeMap<i64, Rat>, e: usize, n: i64) -> RatPoly {
    if e == 0 {
        return RatPoly::constant(a.get(&(-n - 1)).cloned().unwrap_or_else(Rat::zero));
    }
    let inner = u_on_shifted_n(a, e - 1, n);
    let mut acc = inner.mul_var_pow(1);
    if n != 0 {
        acc = &acc + &u_on_shifted_n(a, e - 1, n - 1).scale(&rat_int(n));
    }
    acc
}

/// `n₍ₘ₎b` for `b` in the `t`-part:
/// `n₍ₘ₎b = Σ_k B_k·(-1)^k·∂^(-m-1-k)n/(-m-1-k)!`.
fn n_gen_on_upart(b: &BTreeMap<i64, Rat>, m: i64) -> RatPoly {
    let mut out = RatPoly::zero();
    for (&k, c) in b {
        let j = -m - 1 - k;
        if j < 0 {
            continue;
        }
        let mut v = c / factorial(j as usize);
        if k.rem_euclid(2) == 1 {
            v = -v;
        }
        out = &out + &RatPoly::monomial(v, j as usize);
    }
    out
}

/// Elements `Σ cᵢgᵢ + Σ dᵢ∂gᵢ` with integer coefficients of max-norm
/// exactly `level`, deduplicated up to scalar (primitive, first nonzero
/// coefficient positive).
fn enumerate_level(carrier: &Arc<PresentedModule>, level: i64) -> Vec<ModuleElement> {
    let k = carrier.generator_count();
    let width = 2 * k;
    let mut out = vec![];
    let mut seen = std::collections::BTreeSet::new();
    let mut coeffs = vec![0i64; width];
    enumerate_rec(carrier, level, 0, &mut coeffs, &mut seen, &mut out);
    out
}

fn enumerate_rec(
    carrier: &Arc<PresentedModule>,
    level: i64,
    pos: usize,
    coeffs: &mut Vec<i64>,
    seen: &mut std::collections::BTreeSet<Vec<(usize, String)>>,
    out: &mut Vec<ModuleElement>,
) {
    let width = coeffs.len();
    if pos == width {
        if coeffs.iter().map(|c| c.abs()).max().unwrap_or(0) != level {
            return;
        }
        // primitive, first nonzero positive
        let g = coeffs.iter().fold(0i64, |acc, &c| num_integer::gcd(acc, c.abs()));
        if g != 1 {
            return;
        }
        if let Some(first) = coeffs.iter().find(|c| **c != 0) {
            if *first < 0 {
                return;
            }
        }
        let k = width / 2;
        let mut vec_coords = vec![RatPoly::zero(); k];
        for i in 0..k {
            let c = rat_int(coeffs[i]);
            let d = rat_int(coeffs[k + i]);
            vec_coords[i] = &RatPoly::constant(c) + &RatPoly::monomial(d, 1);
        }
        let e = carrier.element(vec_coords);
        if e.is_zero() {
            return;
        }
        let key: Vec<(usize, String)> = e
            .coords()
            .iter()
            .enumerate()
            .map(|(i, p)| (i, format!("{:?}", p)))
            .collect();
        if seen.insert(key) {
            out.push(e);
        }
        return;
    }
    for c in -level..=level {
        coeffs[pos] = c;
        enumerate_rec(carrier, level, pos + 1, coeffs, seen, out);
    }
    coeffs[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use crate::repweight::Weight;

    fn d() -> RatPoly {
        RatPoly::var()
    }

    #[test]
    fn example_products_match_closed_forms() {
        let v = VertexAlgebra::example();
        let m = v.carrier().clone();
        let (e, u, n) = (m.generator(0), m.generator(1), m.generator(2));
        for idx in -5..=5 {
            assert!(v.nth_product(&n, &n, idx).unwrap().is_zero());
        }
        assert_eq!(v.nth_product(&u, &n, 0).unwrap(), n);
        assert!(v.nth_product(&u, &n, 1).unwrap().is_zero());
        assert!(v.nth_product(&u, &n, -1).unwrap().is_zero());
        // (t⁻¹)₍₋₁₎t⁻¹ = t⁻² and (t⁻¹)₍₋₂₎t⁻¹ = -t⁻³
        assert_eq!(v.nth_product(&u, &u, -1).unwrap(), u.apply_del().neg());
        assert_eq!(
            v.nth_product(&u, &u, -2).unwrap(),
            u.scale_poly(&RatPoly::monomial(rat(-1, 2), 2))
        );
        assert_eq!(v.nth_product(&n, &u, 0).unwrap(), n.neg());
        assert_eq!(v.nth_product(&n, &u, -1).unwrap(), n.apply_del().neg());
        // vacuum rules
        assert_eq!(v.nth_product(&e, &u, -1).unwrap(), u);
        assert_eq!(v.nth_product(&u, &e, -1).unwrap(), u);
        assert_eq!(v.nth_product(&u, &e, -2).unwrap(), u.apply_del());
        assert!(v.nth_product(&u, &e, 0).unwrap().is_zero());
    }

    #[test]
    fn nonnegative_products_agree_with_bracket_coefficients() {
        let v = VertexAlgebra::example();
        let lie = v.lie_functor().unwrap();
        let m = v.carrier().clone();
        for i in 0..3 {
            for j in 0..3 {
                let e = lie.bracket(&m.generator(i), &m.generator(j));
                for n in 0..=6usize {
                    let via_bracket = e.coefficient(n).unwrap_or_else(|| m.zero());
                    let direct = v
                        .nth_product(&m.generator(i), &m.generator(j), n as i64)
                        .unwrap();
                    assert_eq!(via_bracket, direct);
                }
            }
        }
    }

    #[test]
    fn lie_functor_reproduces_the_example_algebra() {
        let v = VertexAlgebra::example();
        let lie = v.lie_functor().unwrap();
        let m = v.carrier().clone();
        let (e, u, n) = (m.generator(0), m.generator(1), m.generator(2));
        assert_eq!(lie.bracket(&u, &n), LambdaElement::from_element(n.clone()));
        assert_eq!(lie.bracket(&n, &u), LambdaElement::from_element(n.neg()));
        assert!(lie.bracket(&u, &u).is_zero());
        for x in [&e, &u, &n] {
            assert!(lie.bracket(&e, x).is_zero());
            assert!(lie.bracket(x, &e).is_zero());
        }
        // [a_λ a] = (∂ + 2λ)n for a = t⁻¹ + ∂n
        let a = u.add(&n.apply_del());
        let b = lie.bracket(&a, &a);
        assert_eq!(b.slice(0), Some(&n.apply_del()));
        assert_eq!(b.slice(1), Some(&n.scale_rat(&rat_int(2))));
        // structure facts used downstream
        assert!(lie.is_solvable());
        assert!(!lie.is_nilpotent());
        assert_eq!(lie.derived_length(), Some(2));
        let n_line = Submodule::span(&m, &[n.clone()]);
        assert!(lie.stabilized_ideal().equals(&n_line));
        assert_eq!(m.rank(), 2);
        assert_eq!(m.torsion_invariants(), vec![d()]);
    }

    #[test]
    fn vertex_axioms_pass_at_truncation_eight() {
        let v = VertexAlgebra::example();
        let report = v.check_vertex_axioms(8).unwrap();
        assert!(report.passes(), "failures: {:?}", report.failures);
        assert_eq!(report.locality_orders[&("u".to_string(), "n".to_string())], 1);
        assert_eq!(report.locality_orders[&("n".to_string(), "u".to_string())], 1);
        assert_eq!(report.locality_orders[&("u".to_string(), "u".to_string())], 0);
        assert_eq!(report.locality_orders[&("e".to_string(), "u".to_string())], 0);
    }

    #[test]
    fn bad_product_tables_are_reported() {
        // u₍₀₎u = u violates skew-commutativity
        let carrier = PresentedModule::new(vec!["e".into(), "u".into()], vec![vec![d(), RatPoly::zero()]]);
        let mut products = BTreeMap::new();
        products.insert((1usize, 1usize, 0i64), carrier.generator(1));
        let v = VertexAlgebra::from_table(carrier, 0, products).unwrap();
        let report = v.check_vertex_axioms(3).unwrap();
        assert!(!report.passes());
        assert!(report.failures.iter().any(|(a, _)| a == "skew-commutativity"));
    }

    #[test]
    fn commutative_table_gives_abelian_lie_part() {
        // the subalgebra C[t⁻¹] alone, as a table on {e, u}
        let carrier = PresentedModule::new(vec!["e".into(), "u".into()], vec![vec![d(), RatPoly::zero()]]);
        let mut products = BTreeMap::new();
        products.insert((1usize, 1usize, -1i64), carrier.generator(1).apply_del().neg());
        products.insert(
            (1usize, 1usize, -2i64),
            carrier.generator(1).scale_poly(&RatPoly::monomial(rat(-1, 2), 2)),
        );
        let v = VertexAlgebra::from_table(carrier, 0, products).unwrap();
        let lie = v.lie_functor().unwrap();
        assert!(lie.is_abelian());
        let report = v.check_vertex_axioms(2).unwrap();
        assert!(report.passes(), "failures: {:?}", report.failures);
    }

    #[test]
    fn products_outside_declared_windows_error() {
        let carrier = PresentedModule::new(vec!["e".into(), "u".into()], vec![vec![d(), RatPoly::zero()]]);
        let mut products = BTreeMap::new();
        products.insert((1usize, 1usize, -1i64), carrier.generator(1).apply_del().neg());
        let v = VertexAlgebra::from_table(carrier.clone(), 0, products).unwrap();
        let u = carrier.generator(1);
        assert!(matches!(
            v.nth_product(&u, &u, -2),
            Err(Error::OutsideWindow { n: -2 })
        ));
        // nonnegative products beyond the window are zero, not errors
        assert!(v.nth_product(&u, &u, 3).unwrap().is_zero());
    }

    #[test]
    fn nilpotence_certificates() {
        let v = VertexAlgebra::example();
        let m = v.carrier().clone();
        let n = m.generator(2);
        assert_eq!(v.is_nilpotent_element(&n, 4).unwrap(), Nilpotence::NilpotentAtOrder(2));
        // arbitrary elements of the abelian ideal certify at order 2
        let w = n.apply_del().add(&n.scale_rat(&rat_int(2)));
        assert_eq!(v.is_nilpotent_element(&w, 4).unwrap(), Nilpotence::NilpotentAtOrder(2));
        // t⁻¹ is not nilpotent: its negative products never die out
        let u = m.generator(1);
        assert_eq!(v.is_nilpotent_element(&u, 5).unwrap(), Nilpotence::NotDecided);
    }

    #[test]
    fn inner_automorphism_examples() {
        let v = VertexAlgebra::example();
        let m = v.carrier().clone();
        let (e, u, n) = (m.generator(0), m.generator(1), m.generator(2));
        for k in [rat_int(1), rat_int(-2), rat(3, 2)] {
            let psi = v.exp_inner_automorphism(&n, &k, 8).unwrap();
            assert_eq!(psi.apply(&u), u.sub(&n.scale_rat(&k)));
            assert_eq!(psi.apply(&n), n);
            assert_eq!(psi.apply(&e), e);
            let inv = psi.inverse(8).unwrap();
            for g in [&e, &u, &n] {
                assert_eq!(inv.apply(&psi.apply(g)), **&g);
            }
        }
        // t⁻¹ has (t⁻¹)₍₀₎² ≠ 0, so it is rejected
        assert!(matches!(
            v.exp_inner_automorphism(&u, &rat_int(1), 4),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn root_space_decomposition_of_the_example() {
        let v = VertexAlgebra::example();
        let m = v.carrier().clone();
        let dec = v.root_space_decomposition(RootConfig::default()).unwrap();
        let n_line = Submodule::span(&m, &[m.generator(2)]);
        assert!(dec.n_part.equals(&n_line));
        assert!(dec.u_part.sum(&dec.n_part).equals(&Submodule::full(&m)));
        assert!(dec.u_part.intersect(&dec.n_part).is_zero());
        assert_eq!(dec.singularity, 1);
        // U ≅ C·1 ⊕ C[∂]·w: rank 1 plus the torsion vacuum line
        let (pres, _) = dec.u_part.presented();
        assert_eq!(pres.rank(), 1);
        assert_eq!(pres.torsion_invariants(), vec![d()]);
        assert!(dec.u_part.contains(&m.generator(0)));
        assert!(dec.u_part.contains(&dec.trace.result));
        // the Lie part of U is abelian
        let lie = v.lie_functor().unwrap();
        assert!(lie.bracket_submodule(&dec.u_part, &dec.u_part).is_zero());
        // every element of N certifies nilpotent at order ≤ 2
        for g in dec.n_part.generators() {
            assert_eq!(v.is_nilpotent_element(&g, 3).unwrap(), Nilpotence::NilpotentAtOrder(2));
        }
    }

    #[test]
    fn root_decomposition_n_part_is_seed_independent() {
        let v = VertexAlgebra::example();
        let m = v.carrier().clone();
        let a = v
            .root_space_decomposition(RootConfig { seed: 0, ..Default::default() })
            .unwrap();
        let b = v
            .root_space_decomposition(RootConfig { seed: 7, ..Default::default() })
            .unwrap();
        assert!(a.n_part.equals(&b.n_part));
        // both U-parts complement the same canonical N
        for dec in [&a, &b] {
            assert!(dec.u_part.sum(&dec.n_part).equals(&Submodule::full(&m)));
        }
        // U ≅ V/N on generators: projecting either U into V/N hits the
        // whole quotient
        let q = m.quotient(&a.n_part);
        for dec in [&a, &b] {
            let proj: Vec<ModuleElement> =
                dec.u_part.generators().iter().map(|g| q.project(g)).collect();
            let span = Submodule::span(&q.module, &proj);
            assert!(span.equals(&Submodule::full(&q.module)));
        }
    }

    #[test]
    fn commutative_algebra_decomposes_trivially() {
        let carrier = PresentedModule::new(vec!["e".into(), "u".into()], vec![vec![d(), RatPoly::zero()]]);
        let mut products = BTreeMap::new();
        products.insert((1usize, 1usize, -1i64), carrier.generator(1).apply_del().neg());
        let v = VertexAlgebra::from_table(carrier.clone(), 0, products).unwrap();
        let dec = v.root_space_decomposition(RootConfig::default()).unwrap();
        assert!(dec.n_part.is_zero());
        assert!(dec.u_part.equals(&Submodule::full(&carrier)));
    }

    #[test]
    fn decompose_weights_for_modified_adjoint() {
        // decompose(ā on M) after modification: weights {0, 1}
        let v = VertexAlgebra::example();
        let lie = Arc::new(v.lie_functor().unwrap());
        let m = v.carrier().clone();
        let a = m.generator(1).add(&m.generator(2).apply_del());
        let act = LambdaAction::adjoint(lie, a).unwrap();
        let trace = modify(&act, ModifyConfig::default()).unwrap();
        let dec = act
            .with_element(trace.result)
            .unwrap()
            .decompose(CapConfig::default())
            .unwrap();
        let weights: Vec<Weight> = dec.parts.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(weights.len(), 2);
        assert!(weights[0].is_zero());
        assert_eq!(weights[1], Weight::constant(rat_int(1)));
    }
}
