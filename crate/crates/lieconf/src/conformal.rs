//! Lie conformal algebras as λ-bracket structures on a presented
//! `k[∂]`-module.
//!
//! The λ-form is the single source of truth for brackets; the equivalent
//! pseudo-form `P(∂⊗1, 1⊗∂) ⊗ c ↔ P(-λ, ∂+λ)·c` is exposed only as a
//! conversion utility for reports.

use crate::linalg::nullspace_keyed;
use crate::module::{ModuleElement, PresentedModule, Submodule};
use crate::poly::{binomial, factorial, BiPoly, Rat, RatPoly};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Degree-cap policy for linear solves over `k[∂]`: search coordinate
/// polynomials of degree ≤ cap, doubling the cap until the answer is stable
/// over two consecutive caps or the maximum is reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapConfig {
    pub initial: usize,
    pub max: usize,
}

impl Default for CapConfig {
    fn default() -> Self {
        CapConfig { initial: 4, max: 64 }
    }
}

/// How a capped computation terminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapStatus {
    /// The result did not change between two consecutive caps.
    HeuristicStable,
    /// The maximal cap was hit; the result is a lower bound.
    CapReached,
}

/// An element of `M[λ]`: a polynomial in λ with module-element coefficients.
///
/// Invariant: no zero coefficient is stored.
#[derive(Clone, PartialEq, Eq)]
pub struct LambdaElement {
    terms: BTreeMap<usize, ModuleElement>,
}

impl LambdaElement {
    pub fn zero() -> Self {
        LambdaElement { terms: BTreeMap::new() }
    }

    pub fn from_element(m: ModuleElement) -> Self {
        let mut e = LambdaElement::zero();
        e.insert_add(0, m);
        e
    }

    pub fn insert_add(&mut self, n: usize, m: ModuleElement) {
        if m.is_zero() {
            return;
        }
        match self.terms.remove(&n) {
            None => {
                self.terms.insert(n, m);
            }
            Some(old) => {
                let s = old.add(&m);
                if !s.is_zero() {
                    self.terms.insert(n, s);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &ModuleElement)> {
        self.terms.iter().map(|(&n, m)| (n, m))
    }

    pub fn lambda_degree(&self) -> Option<usize> {
        self.terms.keys().max().copied()
    }

    /// λⁿ-coefficient as a module element.
    pub fn slice(&self, n: usize) -> Option<&ModuleElement> {
        self.terms.get(&n)
    }

    /// The n-th coefficient `a₍ₙ₎b = n! · (λⁿ-slice)`.
    pub fn coefficient(&self, n: usize) -> Option<ModuleElement> {
        self.terms.get(&n).map(|m| m.scale_rat(&factorial(n)))
    }

    /// All nonzero coefficients `a₍ₙ₎b`.
    pub fn coefficients(&self) -> Vec<ModuleElement> {
        self.terms
            .iter()
            .map(|(&n, m)| m.scale_rat(&factorial(n)))
            .collect()
    }

    pub fn add(&self, other: &LambdaElement) -> LambdaElement {
        let mut out = self.clone();
        for (&n, m) in &other.terms {
            out.insert_add(n, m.clone());
        }
        out
    }

    pub fn sub(&self, other: &LambdaElement) -> LambdaElement {
        let mut out = self.clone();
        for (&n, m) in &other.terms {
            out.insert_add(n, m.neg());
        }
        out
    }

    pub fn neg(&self) -> LambdaElement {
        LambdaElement {
            terms: self.terms.iter().map(|(&n, m)| (n, m.neg())).collect(),
        }
    }

    pub fn scale_rat(&self, c: &Rat) -> LambdaElement {
        let mut out = LambdaElement::zero();
        for (&n, m) in &self.terms {
            out.insert_add(n, m.scale_rat(c));
        }
        out
    }

    /// Multiply by a polynomial in λ.
    pub fn mul_lambda_poly(&self, p: &RatPoly) -> LambdaElement {
        let mut out = LambdaElement::zero();
        for (d, c) in p.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (&n, m) in &self.terms {
                out.insert_add(n + d, m.scale_rat(c));
            }
        }
        out
    }

    /// Multiply by `q(∂+λ)`, with `∂` acting on the coefficients.
    pub fn apply_shifted_poly(&self, q: &RatPoly) -> LambdaElement {
        let mut out = LambdaElement::zero();
        for (d, c) in q.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // (∂+λ)^d = Σ_i C(d,i) λ^i ∂^(d-i)
            for i in 0..=d {
                let coeff = binomial(d, i) * c;
                for (&n, m) in &self.terms {
                    let shifted = m.scale_poly(&RatPoly::monomial(coeff.clone(), d - i));
                    out.insert_add(n + i, shifted);
                }
            }
        }
        out
    }

    /// Substitution λ ↦ -λ-∂: the right side of the skew-symmetry identity
    /// `[b_λ a] = -[a_{-λ-∂} b]` (without the outer sign).
    pub fn substitute_minus_lambda_minus_del(&self) -> LambdaElement {
        let mut out = LambdaElement::zero();
        for (&n, m) in &self.terms {
            // (-λ-∂)^n m = (-1)^n Σ_i C(n,i) λ^i ∂^(n-i) m
            for i in 0..=n {
                let mut c = binomial(n, i);
                if n % 2 == 1 {
                    c = -c;
                }
                out.insert_add(i, m.scale_poly(&RatPoly::monomial(c, n - i)));
            }
        }
        out
    }

    /// Straightened pseudo-form parts `Σ (hᵢ(∂⊗1) ⊗ 1) ⊗ mᵢ`:
    /// `λⁿ·m` corresponds to `((-∂)ⁿ ⊗ 1) ⊗ m`.
    pub fn pseudo_parts(&self) -> Vec<(RatPoly, ModuleElement)> {
        self.terms
            .iter()
            .map(|(&n, m)| {
                let sign = if n % 2 == 1 { -Rat::from_integer(1.into()) } else { Rat::from_integer(1.into()) };
                (RatPoly::monomial(sign, n), m.clone())
            })
            .collect()
    }
}

impl LambdaElement {
    /// Build `P(λ, ∂)·m` from a polynomial in the two variables (λ, ∂),
    /// with `∂` acting on the element. This is the reading used by the
    /// bracket entries of the definition-file format.
    pub fn from_ld_poly(p: &BiPoly, m: &ModuleElement) -> LambdaElement {
        let mut out = LambdaElement::zero();
        for (&(l, d), c) in p.terms() {
            out.insert_add(
                l as usize,
                m.scale_poly(&RatPoly::monomial(c.clone(), d as usize)),
            );
        }
        out
    }

    /// Coefficients per carrier generator as polynomials in (λ, ∂): the
    /// inverse of [`LambdaElement::from_ld_poly`] on canonical forms.
    pub fn to_ld_parts(&self) -> Vec<(usize, BiPoly)> {
        let mut per_gen: BTreeMap<usize, BiPoly> = BTreeMap::new();
        for (n, m) in self.terms() {
            for (gi, q) in m.coords().iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let entry = per_gen.entry(gi).or_default();
                for (d, c) in q.coeffs().iter().enumerate() {
                    entry.insert_add((n as u32, d as u32), c.clone());
                }
            }
        }
        per_gen.into_iter().filter(|(_, p)| !p.is_zero()).collect()
    }
}

/// Canonical λ-form of a pseudo-element `P(x, y) ⊗_H m` under the
/// substitution `x = -λ, y = ∂+λ`.
pub fn lambda_from_pseudo(p: &BiPoly, m: &ModuleElement) -> LambdaElement {
    let mut out = LambdaElement::zero();
    for (&(a, b), c) in p.terms() {
        // (-λ)^a (∂+λ)^b m
        let mut base = LambdaElement::zero();
        base.insert_add(a as usize, if a % 2 == 1 { m.scale_rat(&-c.clone()) } else { m.scale_rat(c) });
        let shifted = base.apply_shifted_poly(&RatPoly::monomial(Rat::from_integer(1.into()), b as usize));
        out = out.add(&shifted);
    }
    out
}

impl fmt::Display for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = vec![];
        for (&n, m) in self.terms.iter().rev() {
            let head = match n {
                0 => String::new(),
                1 => "L*".to_string(),
                _ => format!("L^{n}*"),
            };
            parts.push(format!("{head}({m})"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Polynomial in two formal variables λ, μ with module-element coefficients;
/// the ambient space of the Jacobi identity.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BiLambdaElement {
    terms: BTreeMap<(usize, usize), ModuleElement>,
}

impl BiLambdaElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn insert_add(&mut self, key: (usize, usize), m: ModuleElement) {
        if m.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, m);
            }
            Some(old) => {
                let s = old.add(&m);
                if !s.is_zero() {
                    self.terms.insert(key, s);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sub(&self, other: &BiLambdaElement) -> BiLambdaElement {
        let mut out = self.clone();
        for (&k, m) in &other.terms {
            out.insert_add(k, m.neg());
        }
        out
    }
}

/// Outcome of the axiom verification of a bracket table.
#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    /// Relations on which the bracket fails to be well defined
    /// (relation index, side, generator index).
    pub relation_violations: Vec<(usize, &'static str, usize)>,
    /// Generator pairs violating skew-symmetry.
    pub skew_violations: Vec<(usize, usize)>,
    /// Generator triples violating the Jacobi identity.
    pub jacobi_violations: Vec<(usize, usize, usize)>,
}

impl AxiomReport {
    pub fn passes(&self) -> bool {
        self.relation_violations.is_empty()
            && self.skew_violations.is_empty()
            && self.jacobi_violations.is_empty()
    }
}

/// A Lie conformal algebra: a presented `k[∂]`-module with a table of
/// λ-brackets between generators.
#[derive(Clone)]
pub struct ConformalAlgebra {
    carrier: Arc<PresentedModule>,
    table: BTreeMap<(usize, usize), LambdaElement>,
    axioms: OnceLock<AxiomReport>,
}

impl ConformalAlgebra {
    /// Build from a complete table; missing entries are zero.
    pub fn new(
        carrier: Arc<PresentedModule>,
        mut table: BTreeMap<(usize, usize), LambdaElement>,
    ) -> Self {
        table.retain(|_, e| !e.is_zero());
        ConformalAlgebra { carrier, table, axioms: OnceLock::new() }
    }

    /// Build from entries given for ordered pairs `(i, j)` with `i ≤ j`,
    /// completing the missing `(j, i)` entries by skew-symmetry. Returns the
    /// algebra together with warnings about entries that had to default.
    pub fn from_upper_table(
        carrier: Arc<PresentedModule>,
        entries: BTreeMap<(usize, usize), LambdaElement>,
    ) -> (Self, Vec<String>) {
        let n = carrier.generator_count();
        let mut table = BTreeMap::new();
        let mut warnings = vec![];
        for (&(i, j), e) in &entries {
            table.insert((i, j), e.clone());
        }
        for i in 0..n {
            for j in 0..n {
                if table.contains_key(&(i, j)) {
                    continue;
                }
                if let Some(e) = entries.get(&(j, i)) {
                    // [g_i λ g_j] = -[g_j [-λ-∂] g_i]
                    table.insert((i, j), e.substitute_minus_lambda_minus_del().neg());
                } else {
                    warnings.push(format!(
                        "bracket {} {} not given; defaulting to 0",
                        carrier.label(i),
                        carrier.label(j)
                    ));
                }
            }
        }
        (ConformalAlgebra::new(carrier, table), warnings)
    }

    pub fn carrier(&self) -> &Arc<PresentedModule> {
        &self.carrier
    }

    pub fn table_entry(&self, i: usize, j: usize) -> LambdaElement {
        self.table.get(&(i, j)).cloned().unwrap_or_else(LambdaElement::zero)
    }

    pub fn table(&self) -> &BTreeMap<(usize, usize), LambdaElement> {
        &self.table
    }

    /// λ-bracket `[a_λ b]`, extended from the generator table by
    /// sesquilinearity: `[p(∂)a_λ b] = p(-λ)[a_λ b]` and
    /// `[a_λ q(∂)b] = q(∂+λ)[a_λ b]`.
    pub fn bracket(&self, a: &ModuleElement, b: &ModuleElement) -> LambdaElement {
        assert!(a.is_in(&self.carrier) && b.is_in(&self.carrier), "foreign elements");
        let mut out = LambdaElement::zero();
        for (i, p) in a.coords().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (j, q) in b.coords().iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let Some(entry) = self.table.get(&(i, j)) else { continue };
                let t = entry.apply_shifted_poly(q).mul_lambda_poly(&p.flip_sign());
                out = out.add(&t);
            }
        }
        out
    }

    /// All coefficients `a₍ₙ₎b` of the bracket.
    pub fn bracket_coefficients(&self, a: &ModuleElement, b: &ModuleElement) -> Vec<ModuleElement> {
        self.bracket(a, b).coefficients()
    }

    /// Axiom verification, cached on first use.
    pub fn check_axioms(&self) -> &AxiomReport {
        self.axioms.get_or_init(|| self.check_axioms_uncached())
    }

    pub fn is_verified(&self) -> bool {
        self.check_axioms().passes()
    }

    fn check_axioms_uncached(&self) -> AxiomReport {
        let mut report = AxiomReport::default();
        let n = self.carrier.generator_count();
        let gens: Vec<ModuleElement> = (0..n).map(|i| self.carrier.generator(i)).collect();

        // well-definedness on relations
        for (ri, row) in self.carrier.relations().iter().enumerate() {
            let rel = self.carrier.element(row.clone());
            if !rel.is_zero() {
                continue; // redundant relation row
            }
            for gi in 0..gens.len() {
                let left = {
                    // [row_λ g] = Σ_j r_j(-λ)[g_j λ g]
                    let mut acc = LambdaElement::zero();
                    for (j, r) in row.iter().enumerate() {
                        if r.is_zero() {
                            continue;
                        }
                        acc = acc.add(&self.table_entry(j, gi).mul_lambda_poly(&r.flip_sign()));
                    }
                    acc
                };
                if !left.is_zero() {
                    report.relation_violations.push((ri, "left", gi));
                }
                let right = {
                    let mut acc = LambdaElement::zero();
                    for (j, r) in row.iter().enumerate() {
                        if r.is_zero() {
                            continue;
                        }
                        acc = acc.add(&self.table_entry(gi, j).apply_shifted_poly(r));
                    }
                    acc
                };
                if !right.is_zero() {
                    report.relation_violations.push((ri, "right", gi));
                }
            }
        }

        // skew-symmetry on generator pairs
        for i in 0..n {
            for j in 0..n {
                let lhs = self.table_entry(j, i);
                let rhs = self.table_entry(i, j).substitute_minus_lambda_minus_del().neg();
                if lhs != rhs {
                    report.skew_violations.push((i, j));
                }
            }
        }

        // Jacobi identity on generator triples
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs1 = self.nest_left(&gens[i], &self.table_entry(j, k), false);
                    let lhs2 = self.nest_left(&gens[j], &self.table_entry(i, k), true);
                    let rhs = self.nest_right(&self.table_entry(i, j), &gens[k]);
                    if !lhs1.sub(&lhs2).sub(&rhs).is_zero() {
                        report.jacobi_violations.push((i, j, k));
                    }
                }
            }
        }
        report
    }

    /// `[a_λ e]` for `e ∈ M[μ]`, as an element of `M[λ, μ]`.
    /// With `transpose` set, computes `[a_μ e]` for `e ∈ M[λ]`.
    fn nest_left(&self, a: &ModuleElement, e: &LambdaElement, transpose: bool) -> BiLambdaElement {
        let mut out = BiLambdaElement::zero();
        for (j, m) in e.terms() {
            let inner = self.bracket(a, m);
            for (i, c) in inner.terms() {
                let key = if transpose { (j, i) } else { (i, j) };
                out.insert_add(key, c.clone());
            }
        }
        out
    }

    /// `[[a_λ b]_{λ+μ} c]` from `d = [a_λ b]`, as an element of `M[λ, μ]`.
    fn nest_right(&self, d: &LambdaElement, c: &ModuleElement) -> BiLambdaElement {
        let mut out = BiLambdaElement::zero();
        for (nlam, dn) in d.terms() {
            let f = self.bracket(dn, c);
            for (m, fm) in f.terms() {
                // λ^nlam (λ+μ)^m = Σ_i C(m,i) λ^(nlam+i) μ^(m-i)
                for i in 0..=m {
                    out.insert_add((nlam + i, m - i), fm.scale_rat(&binomial(m, i)));
                }
            }
        }
        out
    }

    /// Smallest `H`-submodule `S` with `[a ∗ b] ∈ (H⊗H)⊗_H S` for all
    /// `a ∈ A, b ∈ B`: the span of all bracket coefficients.
    pub fn bracket_submodule(&self, a: &Submodule, b: &Submodule) -> Submodule {
        let mut coeffs = vec![];
        for x in a.generators() {
            for y in b.generators() {
                coeffs.extend(self.bracket_coefficients(&x, &y));
                coeffs.extend(self.bracket_coefficients(&y, &x));
            }
        }
        Submodule::span(&self.carrier, &coeffs)
    }

    /// Derived series of a subalgebra `S ⊇ S' ⊇ S'' ⊇ ...`, listed up to and
    /// including the first repeated term.
    pub fn derived_series_of(&self, s: &Submodule) -> Vec<Submodule> {
        let mut chain = vec![s.clone()];
        loop {
            let last = chain.last().unwrap();
            let next = self.bracket_submodule(last, last);
            let stop = next.equals(last);
            chain.push(next);
            if stop || chain.len() > 2 * self.carrier.generator_count() + 8 {
                break;
            }
        }
        chain
    }

    /// Central series `S ⊇ [S,S] ⊇ [S,[S,S]] ⊇ ...` of a subalgebra, up to
    /// and including the first repeated term.
    pub fn central_series_of(&self, s: &Submodule) -> Vec<Submodule> {
        let mut chain = vec![s.clone()];
        loop {
            let last = chain.last().unwrap();
            let next = self.bracket_submodule(s, last);
            let stop = next.equals(last);
            chain.push(next);
            if stop || chain.len() > 2 * self.carrier.generator_count() + 8 {
                break;
            }
        }
        chain
    }

    pub fn derived_series(&self) -> Vec<Submodule> {
        self.derived_series_of(&Submodule::full(&self.carrier))
    }

    pub fn central_series(&self) -> Vec<Submodule> {
        self.central_series_of(&Submodule::full(&self.carrier))
    }

    /// The ideal on which the central series stabilizes (`L^[∞]`).
    pub fn stabilized_ideal(&self) -> Submodule {
        self.central_series().last().unwrap().clone()
    }

    pub fn is_solvable(&self) -> bool {
        self.derived_series().last().unwrap().is_zero()
    }

    pub fn is_nilpotent(&self) -> bool {
        self.stabilized_ideal().is_zero()
    }

    pub fn is_abelian(&self) -> bool {
        self.bracket_submodule(&Submodule::full(&self.carrier), &Submodule::full(&self.carrier))
            .is_zero()
    }

    /// Derived length: the number of strict steps of the derived series
    /// until it reaches zero, if it does.
    pub fn derived_length(&self) -> Option<usize> {
        let chain = self.derived_series();
        chain.iter().position(|s| s.is_zero())
    }

    /// Smallest subalgebra containing the given elements: the fixed point of
    /// `W ↦ W + span(coefficients of [W, W])`.
    pub fn subalgebra_generated(
        &self,
        xs: &[ModuleElement],
    ) -> crate::error::Result<Submodule> {
        let mut w = Submodule::span(&self.carrier, xs);
        for _ in 0..64 {
            let next = w.sum(&self.bracket_submodule(&w, &w));
            if next.equals(&w) {
                return Ok(w);
            }
            w = next;
        }
        Err(crate::error::Error::IterationCap("subalgebra generation"))
    }

    /// Centre: kernel of the adjoint map, computed by a degree-capped exact
    /// linear solve with escalation.
    pub fn centre(&self, cfg: CapConfig) -> (Submodule, CapStatus) {
        let n = self.carrier.generator_count();
        let zero = Submodule::zero(&self.carrier);
        self.escalate_solutions(cfg, |z| {
            let mut image = BTreeMap::new();
            for j in 0..n {
                let gj = self.carrier.generator(j);
                flatten_lambda(&self.bracket(z, &gj), &zero, j, &mut image);
            }
            image
        })
    }

    /// Normalizer of a subalgebra `S`: all `x` whose bracket coefficients
    /// with every generator of `S` stay inside `S`.
    pub fn normalizer(&self, s: &Submodule, cfg: CapConfig) -> (Submodule, CapStatus) {
        let gens = s.generators();
        self.escalate_solutions(cfg, |z| {
            let mut image = BTreeMap::new();
            for (j, sg) in gens.iter().enumerate() {
                flatten_lambda(&self.bracket(z, sg), s, j, &mut image);
            }
            image
        })
    }

    /// Solve `image(z) = 0` for `z` with coordinates of bounded degree,
    /// escalating the bound per the cap policy.
    fn escalate_solutions(
        &self,
        cfg: CapConfig,
        image: impl Fn(&ModuleElement) -> BTreeMap<SolveKey, Rat>,
    ) -> (Submodule, CapStatus) {
        let mut cap = cfg.initial;
        let mut prev: Option<Submodule> = None;
        loop {
            let sols = solve_capped(&self.carrier, cap, &image);
            let w = Submodule::span(&self.carrier, &sols);
            if let Some(p) = &prev {
                if p.equals(&w) {
                    return (w, CapStatus::HeuristicStable);
                }
            }
            if cap >= cfg.max {
                return (w, CapStatus::CapReached);
            }
            prev = Some(w);
            cap *= 2;
        }
    }
}

impl fmt::Debug for ConformalAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conformal algebra on [{}]", self.carrier.labels().join(", "))?;
        for (&(i, j), e) in &self.table {
            writeln!(
                f,
                "  [{} _L {}] = {}",
                self.carrier.label(i),
                self.carrier.label(j),
                e
            )?;
        }
        Ok(())
    }
}

/// Key space for flattened linear constraints.
pub(crate) type SolveKey = (u32, u32, u32, u32);

/// Flatten `reduce(e, w) = 0` into scalar constraints, tagged by a group id.
pub(crate) fn flatten_lambda(
    e: &LambdaElement,
    w: &Submodule,
    group: usize,
    image: &mut BTreeMap<SolveKey, Rat>,
) {
    for (n, m) in e.terms() {
        let reduced = w.reduce(m);
        for (ci, c) in reduced.coords().iter().enumerate() {
            for (d, v) in c.coeffs().iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let key = (group as u32, n as u32, ci as u32, d as u32);
                let entry = image.entry(key).or_insert_with(Rat::zero);
                *entry += v.clone();
            }
        }
    }
}

/// Spanning set of the capped coordinate space: canonical forms of
/// `∂^d · g_i` for `d ≤ cap`.
pub(crate) fn capped_basis(carrier: &Arc<PresentedModule>, cap: usize) -> Vec<ModuleElement> {
    let mut basis = vec![];
    for i in 0..carrier.generator_count() {
        for d in 0..=cap {
            let e = carrier
                .generator(i)
                .scale_poly(&RatPoly::monomial(Rat::from_integer(1.into()), d));
            if !e.is_zero() && !basis.contains(&e) {
                basis.push(e);
            }
        }
    }
    basis
}

/// Exact kernel of a linear constraint map on the capped coordinate space.
pub(crate) fn solve_capped(
    carrier: &Arc<PresentedModule>,
    cap: usize,
    image: &impl Fn(&ModuleElement) -> BTreeMap<SolveKey, Rat>,
) -> Vec<ModuleElement> {
    let basis = capped_basis(carrier, cap);
    let images: Vec<BTreeMap<SolveKey, Rat>> = basis.iter().map(image).collect();
    let kernel = nullspace_keyed(&images);
    let mut out = vec![];
    for v in kernel {
        let mut e = carrier.zero();
        for (c, b) in v.iter().zip(&basis) {
            if !c.is_zero() {
                e = e.add(&b.scale_rat(c));
            }
        }
        if !e.is_zero() {
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;
    use crate::poly::RatPoly;

    /// Carrier of the counterexample algebra: e (vacuum, ∂e = 0), u = t⁻¹, n.
    pub fn example_carrier() -> Arc<PresentedModule> {
        PresentedModule::new(
            vec!["e".into(), "u".into(), "n".into()],
            vec![vec![RatPoly::var(), RatPoly::zero(), RatPoly::zero()]],
        )
    }

    /// The Lie conformal algebra of the counterexample vertex algebra:
    /// `[u_λ n] = n`, `[n_λ u] = -n`, all other generator brackets zero.
    pub fn example_algebra() -> ConformalAlgebra {
        let m = example_carrier();
        let mut entries = BTreeMap::new();
        entries.insert((1, 2), LambdaElement::from_element(m.generator(2)));
        let (alg, _) = ConformalAlgebra::from_upper_table(m, entries);
        alg
    }

    /// Heisenberg-type algebra on free generators x, y, z:
    /// `[x_λ y] = P(λ,∂)·z` with `z` central. Valid for every `P`.
    pub fn heisenberg(p: &crate::poly::BiPoly) -> ConformalAlgebra {
        let m = PresentedModule::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![],
        );
        let mut entries = BTreeMap::new();
        entries.insert((0, 1), LambdaElement::from_ld_poly(p, &m.generator(2)));
        let (alg, _) = ConformalAlgebra::from_upper_table(m, entries);
        alg
    }
}

#[cfg(test)]
mod tests {
    use super::test_fixtures::*;
    use super::*;
    use crate::poly::{rat, rat_int, RatPoly};
    use proptest::prelude::*;

    fn d() -> RatPoly {
        RatPoly::var()
    }

    /// a = t⁻¹ + ∂n in the example algebra.
    fn paper_element(alg: &ConformalAlgebra) -> ModuleElement {
        let m = alg.carrier();
        m.generator(1).add(&m.generator(2).apply_del())
    }

    #[test]
    fn bracket_reproduces_paper_value() {
        let alg = example_algebra();
        let a = paper_element(&alg);
        let e = alg.bracket(&a, &a);
        // (∂ + 2λ)·n
        let n = alg.carrier().generator(2);
        assert_eq!(e.slice(0), Some(&n.apply_del()));
        assert_eq!(e.slice(1), Some(&n.scale_rat(&rat_int(2))));
        assert_eq!(e.lambda_degree(), Some(1));
    }

    #[test]
    fn bracket_sesquilinearity() {
        let alg = example_algebra();
        let a = paper_element(&alg);
        // [∂a_λ a] = -λ(∂+2λ)n
        let left = alg.bracket(&a.apply_del(), &a);
        let n = alg.carrier().generator(2);
        assert!(left.slice(0).is_none());
        assert_eq!(left.slice(1), Some(&n.apply_del().neg()));
        assert_eq!(left.slice(2), Some(&n.scale_rat(&rat_int(-2))));
        // [a_λ ∂a] = (∂+λ)(∂+2λ)n
        let right = alg.bracket(&a, &a.apply_del());
        let dd = &d() * &d();
        assert_eq!(right.slice(0), Some(&n.scale_poly(&dd)));
        assert_eq!(right.slice(1), Some(&n.scale_poly(&RatPoly::new(vec![rat_int(0), rat_int(3)]))));
        assert_eq!(right.slice(2), Some(&n.scale_rat(&rat_int(2))));
    }

    #[test]
    fn torsion_vacuum_brackets_vanish() {
        let alg = example_algebra();
        let m = alg.carrier();
        let e = m.generator(0);
        for x in [m.generator(0), m.generator(1), m.generator(2), paper_element(&alg)] {
            assert!(alg.bracket(&e, &x).is_zero());
            assert!(alg.bracket(&x, &e).is_zero());
        }
    }

    #[test]
    fn axioms_pass_on_example_and_abelian() {
        let alg = example_algebra();
        assert!(alg.check_axioms().passes());
        assert!(alg.is_verified());
        let abelian = ConformalAlgebra::new(example_carrier(), BTreeMap::new());
        assert!(abelian.check_axioms().passes());
    }

    #[test]
    fn skew_violation_detected() {
        let m = PresentedModule::free(2);
        let mut table = BTreeMap::new();
        table.insert((0, 1), LambdaElement::from_element(m.generator(1)));
        table.insert((1, 0), LambdaElement::from_element(m.generator(1)));
        let alg = ConformalAlgebra::new(m, table);
        let report = alg.check_axioms();
        assert!(!report.passes());
        assert!(report.skew_violations.contains(&(0, 1)));
    }

    #[test]
    fn relation_violation_detected() {
        let m = example_carrier();
        let mut table = BTreeMap::new();
        // [e_λ u] = u is inconsistent with ∂e = 0
        table.insert((0, 1), LambdaElement::from_element(m.generator(1)));
        let alg = ConformalAlgebra::new(m, table);
        let report = alg.check_axioms();
        assert!(!report.relation_violations.is_empty());
    }

    #[test]
    fn pseudo_form_conversion_roundtrip() {
        // λ-form to straightened pseudo-form and back
        let alg = example_algebra();
        let a = paper_element(&alg);
        let e = alg.bracket(&a, &a);
        let parts = e.pseudo_parts();
        let mut back = LambdaElement::zero();
        for (h, m) in &parts {
            back = back.add(&lambda_from_pseudo(&h.as_bipoly_x(), m));
        }
        assert_eq!(back, e);
        // (∂+2λ)n corresponds to (1⊗1)⊗∂n + ((-2∂)⊗1)⊗n after straightening
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn coefficient_extraction() {
        let alg = example_algebra();
        let a = paper_element(&alg);
        let e = alg.bracket(&a, &a);
        let n = alg.carrier().generator(2);
        assert_eq!(e.coefficient(0), Some(n.apply_del()));
        assert_eq!(e.coefficient(1), Some(n.scale_rat(&rat_int(2))));
        assert_eq!(e.coefficient(99), None);
    }

    #[test]
    fn bracket_submodule_examples() {
        let alg = example_algebra();
        let m = alg.carrier();
        let full = Submodule::full(m);
        let zero = Submodule::zero(m);
        assert!(alg.bracket_submodule(&full, &zero).is_zero());
        let n_line = Submodule::span(m, &[m.generator(2)]);
        assert!(alg.bracket_submodule(&full, &full).equals(&n_line));
        let s = alg.subalgebra_generated(&[paper_element(&alg)]).unwrap();
        assert!(alg.bracket_submodule(&s, &s).equals(&n_line));
    }

    #[test]
    fn series_of_the_example() {
        let alg = example_algebra();
        let m = alg.carrier();
        let n_line = Submodule::span(m, &[m.generator(2)]);
        let derived = alg.derived_series();
        assert!(derived[0].equals(&Submodule::full(m)));
        assert!(derived[1].equals(&n_line));
        assert!(derived[2].is_zero());
        assert_eq!(alg.derived_length(), Some(2));
        let central = alg.central_series();
        assert_eq!(central.len(), 3);
        assert!(central[1].equals(&n_line));
        assert!(central[2].equals(&n_line));
        assert!(alg.stabilized_ideal().equals(&n_line));
        assert!(alg.is_solvable());
        assert!(!alg.is_nilpotent());
        assert!(!alg.is_abelian());
    }

    #[test]
    fn modifications_generate_abelian_subalgebras() {
        let alg = example_algebra();
        let m = alg.carrier();
        for k in [rat_int(0), rat_int(1), rat_int(-2), rat(3, 2)] {
            let abar = m.generator(1).sub(&m.generator(2).scale_rat(&k));
            assert!(alg.bracket(&abar, &abar).is_zero());
            let s = alg.subalgebra_generated(&[abar.clone()]).unwrap();
            assert!(alg.bracket_submodule(&s, &s).is_zero());
        }
    }

    #[test]
    fn subalgebra_generation_examples() {
        let alg = example_algebra();
        let m = alg.carrier();
        assert!(alg.subalgebra_generated(&[]).unwrap().is_zero());
        let s = alg.subalgebra_generated(&[paper_element(&alg)]).unwrap();
        let expect = Submodule::span(m, &[m.generator(1), m.generator(2)]);
        assert!(s.equals(&expect));
        let n_only = alg.subalgebra_generated(&[m.generator(2)]).unwrap();
        assert!(n_only.equals(&Submodule::span(m, &[m.generator(2)])));
    }

    #[test]
    fn centre_of_example_is_vacuum_line() {
        let alg = example_algebra();
        let m = alg.carrier();
        let (z, status) = alg.centre(CapConfig::default());
        assert_eq!(status, CapStatus::HeuristicStable);
        assert!(z.equals(&Submodule::span(m, &[m.generator(0)])));
        // centre of an abelian algebra is everything
        let abelian = ConformalAlgebra::new(example_carrier(), BTreeMap::new());
        let (z, _) = abelian.centre(CapConfig::default());
        assert!(z.equals(&Submodule::full(abelian.carrier())));
    }

    #[test]
    fn normalizer_of_cartan_part_is_itself() {
        let alg = example_algebra();
        let m = alg.carrier();
        let abar = m.generator(1).sub(&m.generator(2));
        let u = Submodule::span(m, &[m.generator(0), abar]);
        let (nz, status) = alg.normalizer(&u, CapConfig::default());
        assert_eq!(status, CapStatus::HeuristicStable);
        assert!(nz.equals(&u));
    }

    fn arb_bipoly() -> impl Strategy<Value = crate::poly::BiPoly> {
        proptest::collection::vec(((0u32..3, 0u32..3), -4i64..=4), 0..5).prop_map(|ts| {
            let mut p = crate::poly::BiPoly::zero();
            for ((a, b), c) in ts {
                p.insert_add((a, b), rat_int(c));
            }
            p
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prop_heisenberg_axioms_and_series(p in arb_bipoly()) {
            let alg = heisenberg(&p);
            prop_assert!(alg.check_axioms().passes());
            // derived series terms sit inside central series terms
            let derived = alg.derived_series();
            let central = alg.central_series();
            for (k, dterm) in derived.iter().enumerate() {
                if let Some(cterm) = central.get(k) {
                    prop_assert!(cterm.contains_sub(dterm));
                }
            }
            prop_assert!(alg.is_nilpotent());
            prop_assert!(alg.is_solvable());
        }

        #[test]
        fn prop_coefficient_span_matches_bracket_submodule(p in arb_bipoly()) {
            let alg = heisenberg(&p);
            let m = alg.carrier();
            let x = Submodule::span(m, &[m.generator(0)]);
            let y = Submodule::span(m, &[m.generator(1)]);
            let via_op = alg.bracket_submodule(&x, &y);
            let coeffs = alg.bracket_coefficients(&m.generator(0), &m.generator(1));
            let via_span = Submodule::span(m, &coeffs);
            prop_assert!(via_op.equals(&via_span));
        }

        #[test]
        fn prop_pseudo_map_injective_on_free_rank_one(p in arb_bipoly()) {
            // α ⊗ m = 0 iff α = 0 for m free
            let m = PresentedModule::free(1);
            let e = lambda_from_pseudo(&p, &m.generator(0));
            prop_assert_eq!(e.is_zero(), p.is_zero());
        }

        #[test]
        fn prop_skew_of_bracket(p in arb_bipoly(),
                                c1 in proptest::collection::vec(-3i64..=3, 3),
                                c2 in proptest::collection::vec(-3i64..=3, 3)) {
            let alg = heisenberg(&p);
            let m = alg.carrier();
            let a = m.element(c1.iter().map(|&v| RatPoly::from_int(v)).collect());
            let b = m.element(c2.iter().map(|&v| RatPoly::from_int(v)).collect());
            let lhs = alg.bracket(&b, &a);
            let rhs = alg.bracket(&a, &b).substitute_minus_lambda_minus_del().neg();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
