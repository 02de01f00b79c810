//! Module actions of cyclic conformal subalgebras: weight vectors,
//! Lie-theorem filtrations, generalized weight decompositions, singularity
//! and the Engel criterion.
//!
//! All solvers are exact over the rationals on degree-capped coordinate
//! spaces, with cap escalation per [`CapConfig`]. Candidate eigen-polynomials
//! come from the invariant factors of exact matrix pencils; irrational
//! factors are reported as a structured "needs field extension" condition
//! rather than approximated.

use crate::conformal::{capped_basis, flatten_lambda, solve_capped, CapConfig, CapStatus, ConformalAlgebra, LambdaElement};
use crate::error::{Error, Result};
use crate::module::{lattice_rank, ModuleElement, PresentedModule, QuotientModule, Submodule, Subquotient};
use crate::pencil;
use crate::poly::{Rat, RatPoly};
use num_traits::Zero;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A weight for the action of a cyclic subalgebra `⟨a⟩`: the polynomial
/// `p(λ) = φ(a)(-λ)` with `a_λ v = p(λ)·v` on weight vectors.
#[derive(Clone, PartialEq, Eq)]
pub struct Weight {
    p: RatPoly,
}

impl Weight {
    pub fn new(p: RatPoly) -> Self {
        Weight { p }
    }

    pub fn zero() -> Self {
        Weight { p: RatPoly::zero() }
    }

    pub fn constant(c: Rat) -> Self {
        Weight { p: RatPoly::constant(c) }
    }

    pub fn poly(&self) -> &RatPoly {
        &self.p
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero()
    }

    /// Deterministic merge order: degree, then coefficients from the top.
    fn sort_key(&self) -> (i64, Vec<Rat>) {
        let mut coeffs: Vec<Rat> = self.p.coeffs().to_vec();
        coeffs.reverse();
        (self.p.degree_i64(), coeffs)
    }

    /// Greedy preference for filtration building: nonzero weights first.
    fn greedy_key(&self) -> (u8, i64, Vec<Rat>) {
        let (d, c) = self.sort_key();
        (u8::from(self.is_zero()), d, c)
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p.display("L"))
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The weight spaces found within a degree cap.
#[derive(Clone, Debug)]
pub struct WeightSpaces {
    /// Pairs (weight, k-basis of weight vectors), sorted by weight.
    pub spaces: Vec<(Weight, Vec<ModuleElement>)>,
    /// Monic irrational factor of the characteristic data, when the pencil
    /// has eigenvalues that require a field extension.
    pub extension: Option<RatPoly>,
}

/// An action of a conformal algebra element on a finite `k[∂]`-module,
/// together with the full generator action table of the ambient algebra
/// (needed to act with bracket coefficients during modification).
#[derive(Clone)]
pub struct LambdaAction {
    algebra: Arc<ConformalAlgebra>,
    element: ModuleElement,
    target: Arc<PresentedModule>,
    table: BTreeMap<(usize, usize), LambdaElement>,
}

impl LambdaAction {
    /// Adjoint action of an element on the algebra's own carrier.
    pub fn adjoint(algebra: Arc<ConformalAlgebra>, element: ModuleElement) -> Result<Self> {
        if !element.is_in(algebra.carrier()) {
            return Err(Error::InvalidAction("acting element is not in the algebra".into()));
        }
        let table = algebra.table().clone();
        let target = algebra.carrier().clone();
        Ok(LambdaAction { algebra, element, target, table })
    }

    /// General action table `(algebra generator, target generator) → λ-element`.
    pub fn new(
        algebra: Arc<ConformalAlgebra>,
        element: ModuleElement,
        target: Arc<PresentedModule>,
        table: BTreeMap<(usize, usize), LambdaElement>,
    ) -> Result<Self> {
        if !element.is_in(algebra.carrier()) {
            return Err(Error::InvalidAction("acting element is not in the algebra".into()));
        }
        let action = LambdaAction { algebra, element, target, table };
        action.validate()?;
        Ok(action)
    }

    fn validate(&self) -> Result<()> {
        // well-definedness against target relations: Σ_t ρ_t(∂+λ)·act(g_i, g_t) = 0
        for row in self.target.relations() {
            for i in 0..self.algebra.carrier().generator_count() {
                let mut acc = LambdaElement::zero();
                for (t, r) in row.iter().enumerate() {
                    if r.is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.table_entry(i, t).apply_shifted_poly(r));
                }
                if !acc.is_zero() {
                    return Err(Error::InvalidAction(format!(
                        "action of generator {i} is ill-defined against a target relation"
                    )));
                }
            }
        }
        // well-definedness against algebra relations: Σ_i r_i(-λ)·act(g_i, g_t) = 0
        for row in self.algebra.carrier().relations() {
            for t in 0..self.target.generator_count() {
                let mut acc = LambdaElement::zero();
                for (i, r) in row.iter().enumerate() {
                    if r.is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.table_entry(i, t).mul_lambda_poly(&r.flip_sign()));
                }
                if !acc.is_zero() {
                    return Err(Error::InvalidAction(format!(
                        "action on target generator {t} is ill-defined against an algebra relation"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Jacobi-compatibility of the action table with the algebra brackets,
    /// checked as exact identities in two formal variables. Returns the
    /// violating generator triples (algebra, algebra, target).
    pub fn check_action(&self) -> Vec<(usize, usize, usize)> {
        let mut bad = vec![];
        let na = self.algebra.carrier().generator_count();
        let nt = self.target.generator_count();
        for i in 0..na {
            for j in 0..na {
                for t in 0..nt {
                    if !self.action_jacobi_holds(i, j, t) {
                        bad.push((i, j, t));
                    }
                }
            }
        }
        bad
    }

    /// `x_λ (y_μ v) - y_μ (x_λ v) = [x_λ y]_{λ+μ} v` on a generator triple.
    fn action_jacobi_holds(&self, i: usize, j: usize, t: usize) -> bool {
        let gi = self.algebra.carrier().generator(i);
        let gj = self.algebra.carrier().generator(j);
        let gt = self.target.generator(t);
        let mut acc: BTreeMap<(usize, usize), ModuleElement> = BTreeMap::new();
        let addterm = |key: (usize, usize), m: ModuleElement, map: &mut BTreeMap<(usize, usize), ModuleElement>| {
            if m.is_zero() {
                return;
            }
            match map.remove(&key) {
                None => {
                    map.insert(key, m);
                }
                Some(old) => {
                    let s = old.add(&m);
                    if !s.is_zero() {
                        map.insert(key, s);
                    }
                }
            }
        };
        for (mu, v1) in self.act(&gj, &gt).terms() {
            for (la, v2) in self.act(&gi, v1).terms() {
                addterm((la, mu), v2.clone(), &mut acc);
            }
        }
        for (la, v1) in self.act(&gi, &gt).terms() {
            for (mu, v2) in self.act(&gj, v1).terms() {
                addterm((la, mu), v2.neg(), &mut acc);
            }
        }
        for (n, dn) in self.algebra.bracket(&gi, &gj).terms() {
            for (m, fm) in self.act(dn, &gt).terms() {
                // λ^n (λ+μ)^m = Σ_s C(m,s) λ^(n+s) μ^(m-s)
                for s in 0..=m {
                    addterm((n + s, m - s), fm.scale_rat(&-crate::poly::binomial(m, s)), &mut acc);
                }
            }
        }
        acc.is_empty()
    }

    pub fn algebra(&self) -> &Arc<ConformalAlgebra> {
        &self.algebra
    }

    pub fn element(&self) -> &ModuleElement {
        &self.element
    }

    pub fn target(&self) -> &Arc<PresentedModule> {
        &self.target
    }

    /// Same action, different acting element.
    pub fn with_element(&self, element: ModuleElement) -> Result<Self> {
        if !element.is_in(self.algebra.carrier()) {
            return Err(Error::InvalidAction("acting element is not in the algebra".into()));
        }
        let mut out = self.clone();
        out.element = element;
        Ok(out)
    }

    fn table_entry(&self, i: usize, t: usize) -> LambdaElement {
        self.table.get(&(i, t)).cloned().unwrap_or_else(LambdaElement::zero)
    }

    /// Act with an arbitrary algebra element: sesquilinear extension of the
    /// generator table.
    pub fn act(&self, x: &ModuleElement, v: &ModuleElement) -> LambdaElement {
        assert!(x.is_in(self.algebra.carrier()), "actor outside the algebra");
        assert!(v.is_in(&self.target), "target element outside the module");
        let mut out = LambdaElement::zero();
        for (i, p) in x.coords().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (t, q) in v.coords().iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let Some(entry) = self.table.get(&(i, t)) else { continue };
                out = out.add(&entry.apply_shifted_poly(q).mul_lambda_poly(&p.flip_sign()));
            }
        }
        out
    }

    /// Action of the distinguished element.
    pub fn act_element(&self, v: &ModuleElement) -> LambdaElement {
        self.act(&self.element, v)
    }

    /// Maximal λ-degree of the distinguished element's action on the target
    /// generators; weights are constrained to this degree.
    pub fn element_table_lambda_degree(&self) -> usize {
        (0..self.target.generator_count())
            .filter_map(|t| self.act_element(&self.target.generator(t)).lambda_degree())
            .max()
            .unwrap_or(0)
    }

    /// Induced action on a quotient of the target.
    pub fn induced_on_quotient(&self, q: &QuotientModule) -> LambdaAction {
        let mut table = BTreeMap::new();
        for (&(i, t), e) in &self.table {
            let mut mapped = LambdaElement::zero();
            for (n, m) in e.terms() {
                let pm = q.module.element(m.coords().to_vec());
                if !pm.is_zero() {
                    let mut one = LambdaElement::zero();
                    one.insert_add(n, pm);
                    mapped = mapped.add(&one);
                }
            }
            if !mapped.is_zero() {
                table.insert((i, t), mapped);
            }
        }
        LambdaAction {
            algebra: self.algebra.clone(),
            element: self.element.clone(),
            target: q.module.clone(),
            table,
        }
    }

    /// Induced action on a subquotient of the target; errors if the
    /// numerator is not stable under the acting algebra's generators.
    pub fn induced_on_subquotient(&self, sq: &Subquotient) -> Result<LambdaAction> {
        let na = self.algebra.carrier().generator_count();
        let mut table = BTreeMap::new();
        let lifts: Vec<ModuleElement> = (0..sq.module().generator_count())
            .map(|t| sq.lift(&sq.module().generator(t)))
            .collect();
        for i in 0..na {
            let gi = self.algebra.carrier().generator(i);
            for (t, lift) in lifts.iter().enumerate() {
                let e = self.act(&gi, lift);
                let mut mapped = LambdaElement::zero();
                for (n, m) in e.terms() {
                    let pm = sq.project(m)?;
                    if !pm.is_zero() {
                        let mut one = LambdaElement::zero();
                        one.insert_add(n, pm);
                        mapped = mapped.add(&one);
                    }
                }
                if !mapped.is_zero() {
                    table.insert((i, t), mapped);
                }
            }
        }
        Ok(LambdaAction {
            algebra: self.algebra.clone(),
            element: self.element.clone(),
            target: sq.module().clone(),
            table,
        })
    }

    /// Subalgebra generated by the acting element, inside the acting algebra.
    pub fn acting_subalgebra(&self) -> Result<Submodule> {
        self.algebra.subalgebra_generated(std::slice::from_ref(&self.element))
    }

    /// Strict weight spaces `M_φ = {v : a_λ v = p(λ)v}` within the cap
    /// policy, with candidate weights read off exact pencil invariants.
    pub fn weight_spaces(&self, cfg: CapConfig) -> Result<(WeightSpaces, CapStatus)> {
        escalate(cfg, |cap| self.weight_spaces_at(cap), weight_spaces_eq)
    }

    fn weight_spaces_at(&self, cap: usize) -> Result<WeightSpaces> {
        let basis = independent_capped_basis(&self.target, cap);
        if basis.is_empty() {
            return Ok(WeightSpaces { spaces: vec![], extension: None });
        }
        let pmax = self.element_table_lambda_degree();
        let lam_max = basis
            .iter()
            .filter_map(|v| self.act_element(v).lambda_degree())
            .max()
            .unwrap_or(0)
            .max(pmax);

        // linear constraints first: λ-slices above the weight-degree bound vanish
        let mut vectors = basis;
        if lam_max > pmax {
            let images: Vec<BTreeMap<SliceKey, Rat>> = vectors
                .iter()
                .map(|v| {
                    let e = self.act_element(v);
                    let mut img = BTreeMap::new();
                    for (n, m) in e.terms() {
                        if n > pmax {
                            flatten_element(m, n as u32, &mut img);
                        }
                    }
                    img
                })
                .collect();
            vectors = kernel_combos(&vectors, &images);
        }

        let mut extension: Option<RatPoly> = None;
        // branch over the eigenvalue of each λ-slice, from the top down
        let mut branches: Vec<(Vec<Rat>, Vec<ModuleElement>)> = vec![(vec![], vectors)];
        for n in (0..=pmax).rev() {
            let mut next = vec![];
            for (pcoeffs, vecs) in branches {
                if vecs.is_empty() {
                    continue;
                }
                let (amat, bmat) = self.slice_pencil(&vecs, n);
                let (eigs, ext) = pencil::pencil_eigenvalues(&amat, &bmat);
                if let Some(c) = ext {
                    extension = Some(match extension {
                        None => c,
                        Some(prev) => (&prev * &c).monic(),
                    });
                }
                for r in eigs {
                    let sub = self.slice_eigen_kernel(&vecs, n, &r);
                    if sub.is_empty() {
                        continue;
                    }
                    let mut pc = pcoeffs.clone();
                    pc.push(r);
                    next.push((pc, sub));
                }
            }
            branches = next;
        }

        let mut spaces = vec![];
        for (pcoeffs, vecs) in branches {
            if vecs.is_empty() {
                continue;
            }
            // pcoeffs were collected from degree pmax down to 0
            let mut coeffs = pcoeffs;
            coeffs.reverse();
            let w = Weight::new(RatPoly::new(coeffs));
            // exact verification of the weight equation on each basis vector
            for v in &vecs {
                let lhs = self.act_element(v);
                let rhs = LambdaElement::from_element(v.clone()).mul_lambda_poly(w.poly());
                if lhs != rhs {
                    return Err(Error::Invariant(format!(
                        "weight solver produced a non-weight vector for weight {w}"
                    )));
                }
            }
            // reduce the basis modulo H-spans: keep vectors that add new
            // H-span (for the zero weight the strict space is an H-submodule,
            // so a k-basis is infinite; generators are the useful output)
            let mut kept: Vec<ModuleElement> = vec![];
            let mut span = Submodule::zero(&self.target);
            for v in vecs {
                if !span.contains(&v) {
                    span = span.sum(&Submodule::span(&self.target, &[v.clone()]));
                    kept.push(v);
                }
            }
            spaces.push((w, kept));
        }
        spaces.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(WeightSpaces { spaces, extension })
    }

    /// Matrices of `v ↦ slice_n(a_λ v)` and of the inclusion, over a basis.
    fn slice_pencil(&self, vecs: &[ModuleElement], n: usize) -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>) {
        let mut keys: BTreeMap<SliceKey, usize> = BTreeMap::new();
        let mut acols: Vec<BTreeMap<SliceKey, Rat>> = vec![];
        let mut bcols: Vec<BTreeMap<SliceKey, Rat>> = vec![];
        for v in vecs {
            let mut a = BTreeMap::new();
            if let Some(m) = self.act_element(v).slice(n) {
                flatten_element(m, 0, &mut a);
            }
            let mut b = BTreeMap::new();
            flatten_element(v, 0, &mut b);
            for k in a.keys().chain(b.keys()) {
                let next = keys.len();
                keys.entry(*k).or_insert(next);
            }
            acols.push(a);
            bcols.push(b);
        }
        let rows = keys.len();
        let mut amat = vec![vec![Rat::zero(); vecs.len()]; rows];
        let mut bmat = vec![vec![Rat::zero(); vecs.len()]; rows];
        for (j, (a, b)) in acols.iter().zip(&bcols).enumerate() {
            for (k, c) in a {
                amat[keys[k]][j] = c.clone();
            }
            for (k, c) in b {
                bmat[keys[k]][j] = c.clone();
            }
        }
        (amat, bmat)
    }

    /// Kernel of `slice_n(a_λ v) = r·v` inside the span of `vecs`.
    fn slice_eigen_kernel(&self, vecs: &[ModuleElement], n: usize, r: &Rat) -> Vec<ModuleElement> {
        let images: Vec<BTreeMap<SliceKey, Rat>> = vecs
            .iter()
            .map(|v| {
                let mut img = BTreeMap::new();
                if let Some(m) = self.act_element(v).slice(n) {
                    flatten_element(m, 0, &mut img);
                }
                let mut scaled = BTreeMap::new();
                flatten_element(v, 0, &mut scaled);
                for (k, c) in scaled {
                    let e = img.entry(k).or_insert_with(Rat::zero);
                    *e -= c * r;
                }
                img.retain(|_, c| !c.is_zero());
                img
            })
            .collect();
        kernel_combos(vecs, &images)
    }

    /// Generalized weight filtration for a given weight: the increasing
    /// chain `0 = M^φ_{-1} ⊂ M^φ_0 ⊂ ...` up to stabilization.
    pub fn generalized_weight_filtration(
        &self,
        w: &Weight,
        cfg: CapConfig,
    ) -> Result<(WeightFiltration, CapStatus)> {
        let (chain, status) = escalate(
            cfg,
            |cap| self.generalized_chain_at(w, cap),
            |a, b| a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.equals(y)),
        )?;
        Ok((WeightFiltration { weight: w.clone(), chain }, status))
    }

    fn generalized_chain_at(&self, w: &Weight, cap: usize) -> Result<Vec<Submodule>> {
        let mut chain = vec![Submodule::zero(&self.target)];
        loop {
            let prev = chain.last().unwrap().clone();
            let sols = solve_capped(&self.target, cap, &|v: &ModuleElement| {
                let e = self
                    .act_element(v)
                    .sub(&LambdaElement::from_element(v.clone()).mul_lambda_poly(w.poly()));
                let mut img = BTreeMap::new();
                flatten_lambda(&e, &prev, 0, &mut img);
                img
            });
            let next = prev.sum(&Submodule::span(&self.target, &sols));
            if next.equals(&prev) {
                break;
            }
            chain.push(next);
            if chain.len() > 4 * self.target.generator_count() + 8 {
                return Err(Error::IterationCap("generalized weight filtration"));
            }
        }
        Ok(chain)
    }

    /// Lie-theorem filtration: `0 = M_0 ⊂ M_1 ⊂ ... ⊂ M_n = M` with each
    /// quotient generated over `H` by a weight vector.
    pub fn lie_filtration(&self, cfg: CapConfig) -> Result<(LieFiltration, CapStatus)> {
        self.require_solvable()?;
        escalate(cfg, |cap| self.lie_filtration_at(cap), |a, b| a.same_as(b))
    }

    pub(crate) fn require_solvable(&self) -> Result<()> {
        let s = self.acting_subalgebra()?;
        if !self.algebra.derived_series_of(&s).last().unwrap().is_zero() {
            return Err(Error::NotSolvable);
        }
        Ok(())
    }

    fn lie_filtration_at(&self, cap: usize) -> Result<LieFiltration> {
        let mut steps: Vec<LieStep> = vec![];
        let mut current = Submodule::zero(&self.target);
        let full = Submodule::full(&self.target);
        let relations_rank = lattice_rank(self.target.relations());
        loop {
            if current.equals(&full) {
                break;
            }
            let q = self.target.quotient(&current);
            let qact = self.induced_on_quotient(&q);
            let ws = qact.weight_spaces_at(cap)?;
            if ws.spaces.is_empty() {
                return Err(if let Some(cof) = ws.extension {
                    Error::NeedsFieldExtension { cofactor: cof.display("x").to_string() }
                } else {
                    Error::NoWeightVector {
                        context: format!(
                            "quotient by span of {} generators",
                            current.generators().len()
                        ),
                        extension: false,
                    }
                });
            }
            let mut ordered = ws.spaces.clone();
            ordered.sort_by(|a, b| a.0.greedy_key().cmp(&b.0.greedy_key()));
            let (w, basis) = &ordered[0];
            let v = basis.first().unwrap();
            let lift = q.section(v);
            let before = lattice_rank(current.rows()).max(relations_rank);
            let next = current.sum(&Submodule::span(&self.target, &[lift]));
            let after = lattice_rank(next.rows());
            if next.equals(&current) {
                return Err(Error::Invariant("filtration step added nothing".into()));
            }
            steps.push(LieStep {
                submodule: next.clone(),
                weight: w.clone(),
                free_step: after > before,
            });
            current = next;
            if steps.len() > 4 * self.target.generator_count() + 8 {
                return Err(Error::IterationCap("Lie filtration"));
            }
        }
        Ok(LieFiltration { steps })
    }

    /// Number of non-torsion trivial-action quotients in the Lie filtration
    /// (the multiplicity of the zero eigenvalue). Verified to be independent
    /// of the greedy choices by recomputation with the preference reversed.
    pub fn singularity(&self, cfg: CapConfig) -> Result<usize> {
        let (filt, _) = self.lie_filtration(cfg)?;
        let count = filt.singularity();
        let shuffled = self.permuted_target_action();
        let (alt, _) = shuffled.lie_filtration(cfg)?;
        if alt.singularity() != count {
            return Err(Error::Invariant(
                "singularity changed under a shuffled generator order".into(),
            ));
        }
        Ok(count)
    }

    /// The same action on a presentation of the target with the generator
    /// order reversed; used to verify that greedy choices do not influence
    /// filtration-independent quantities.
    fn permuted_target_action(&self) -> LambdaAction {
        let n = self.target.generator_count();
        let perm: Vec<usize> = (0..n).rev().collect();
        let labels = perm.iter().map(|&i| self.target.label(i).to_string()).collect();
        let relations = self
            .target
            .relations()
            .iter()
            .map(|row| perm.iter().map(|&i| row[i].clone()).collect())
            .collect();
        let newmod = PresentedModule::new(labels, relations);
        let remap = |m: &ModuleElement| {
            let coords: Vec<RatPoly> = perm.iter().map(|&i| m.coords()[i].clone()).collect();
            newmod.element(coords)
        };
        let mut table = BTreeMap::new();
        for (&(i, t), e) in &self.table {
            let mut mapped = LambdaElement::zero();
            for (k, m) in e.terms() {
                let rm = remap(m);
                if !rm.is_zero() {
                    let mut one = LambdaElement::zero();
                    one.insert_add(k, rm);
                    mapped = mapped.add(&one);
                }
            }
            let tt = perm.iter().position(|&x| x == t).unwrap();
            if !mapped.is_zero() {
                table.insert((i, tt), mapped);
            }
        }
        LambdaAction {
            algebra: self.algebra.clone(),
            element: self.element.clone(),
            target: newmod,
            table,
        }
    }

    /// Decomposition into generalized weight submodules, with the structural
    /// postconditions verified on every call.
    pub fn decompose(&self, cfg: CapConfig) -> Result<Decomposition> {
        let (ws, _) = self.weight_spaces(cfg)?;
        let mut parts: Vec<(Weight, Submodule)> = vec![];
        let mut status = CapStatus::HeuristicStable;
        for (w, _) in &ws.spaces {
            let (filt, st) = self.generalized_weight_filtration(w, cfg)?;
            if st == CapStatus::CapReached {
                status = CapStatus::CapReached;
            }
            let limit = filt.limit().clone();
            if !limit.is_zero() {
                parts.push((w.clone(), limit));
            }
        }
        parts.sort_by(|a, b| a.0.cmp(&b.0));

        // directness: pairwise intersections vanish
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if !parts[i].1.intersect(&parts[j].1).is_zero() {
                    return Err(Error::Invariant(format!(
                        "generalized weight submodules for {} and {} intersect",
                        parts[i].0, parts[j].0
                    )));
                }
            }
        }
        // freeness for nonzero weights
        for (w, sub) in &parts {
            if !w.is_zero() {
                let (pres, _) = sub.presented();
                if !pres.torsion_invariants().is_empty() {
                    return Err(Error::Invariant(format!(
                        "generalized weight submodule for {w} is not free"
                    )));
                }
            }
        }
        // (M/M^φ)^φ = 0
        for (w, sub) in &parts {
            let q = self.target.quotient(sub);
            let qact = self.induced_on_quotient(&q);
            let (filt, _) = qact.generalized_weight_filtration(w, cfg)?;
            if !filt.limit().is_zero() {
                return Err(Error::Invariant(format!("(M/M^φ)^φ is nonzero for weight {w}")));
            }
        }

        let mut sum = Submodule::zero(&self.target);
        for (_, sub) in &parts {
            sum = sum.sum(sub);
        }
        let covers = sum.equals(&Submodule::full(&self.target));
        let nilpotent = self.image_is_nilpotent(cfg)?;
        if covers != nilpotent {
            return Err(Error::Invariant(format!(
                "decomposition covers = {covers} but image nilpotence = {nilpotent}"
            )));
        }
        Ok(Decomposition { parts, covers, status })
    }

    /// Whether the image of `⟨a⟩` inside the pseudolinear maps of the target
    /// is nilpotent: the stabilized central series of `⟨a⟩` must act by zero.
    pub fn image_is_nilpotent(&self, cfg: CapConfig) -> Result<bool> {
        let s = self.acting_subalgebra()?;
        let stabilized = self.algebra.central_series_of(&s).last().unwrap().clone();
        if stabilized.is_zero() {
            return Ok(true);
        }
        let (kernel, _) = self.action_kernel(cfg)?;
        Ok(kernel.contains_sub(&stabilized))
    }

    /// Elements of the acting algebra that act by zero on the target.
    pub fn action_kernel(&self, cfg: CapConfig) -> Result<(Submodule, CapStatus)> {
        let carrier = self.algebra.carrier().clone();
        let targets: Vec<ModuleElement> = (0..self.target.generator_count())
            .map(|t| self.target.generator(t))
            .collect();
        let zero = Submodule::zero(&self.target);
        escalate(
            cfg,
            |cap| {
                let sols = solve_capped(&carrier, cap, &|z: &ModuleElement| {
                    let mut img = BTreeMap::new();
                    for (t, gt) in targets.iter().enumerate() {
                        flatten_lambda(&self.act(z, gt), &zero, t, &mut img);
                    }
                    img
                });
                Ok(Submodule::span(&carrier, &sols))
            },
            |a: &Submodule, b: &Submodule| a.equals(b),
        )
    }
}

/// One step of a Lie filtration: the cumulative submodule, the weight of
/// the new quotient, and whether the quotient is non-torsion.
#[derive(Clone, Debug)]
pub struct LieStep {
    pub submodule: Submodule,
    pub weight: Weight,
    pub free_step: bool,
}

#[derive(Clone, Debug)]
pub struct LieFiltration {
    pub steps: Vec<LieStep>,
}

impl LieFiltration {
    pub fn weights(&self) -> Vec<Weight> {
        self.steps.iter().map(|s| s.weight.clone()).collect()
    }

    pub fn singularity(&self) -> usize {
        self.steps.iter().filter(|s| s.weight.is_zero() && s.free_step).count()
    }

    fn same_as(&self, other: &LieFiltration) -> bool {
        self.steps.len() == other.steps.len()
            && self
                .steps
                .iter()
                .zip(&other.steps)
                .all(|(a, b)| a.weight == b.weight && a.submodule.equals(&b.submodule))
    }
}

/// Generalized weight filtration `0 ⊂ M^φ_0 ⊂ M^φ_1 ⊂ ... ⊂ M^φ`.
#[derive(Clone, Debug)]
pub struct WeightFiltration {
    pub weight: Weight,
    pub chain: Vec<Submodule>,
}

impl WeightFiltration {
    pub fn limit(&self) -> &Submodule {
        self.chain.last().unwrap()
    }
}

/// Result of [`LambdaAction::decompose`].
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub parts: Vec<(Weight, Submodule)>,
    pub covers: bool,
    pub status: CapStatus,
}

impl Decomposition {
    pub fn part(&self, w: &Weight) -> Option<&Submodule> {
        self.parts.iter().find(|(pw, _)| pw == w).map(|(_, s)| s)
    }

    /// Sum of the parts with nonzero weight.
    pub fn nonzero_weight_sum(&self, target: &Arc<PresentedModule>) -> Submodule {
        let mut acc = Submodule::zero(target);
        for (w, s) in &self.parts {
            if !w.is_zero() {
                acc = acc.sum(s);
            }
        }
        acc
    }
}

/// Engel-style criterion: true iff the generalized zero-weight submodule of
/// every generator's adjoint action is the whole algebra.
pub fn engel_check(algebra: &Arc<ConformalAlgebra>, cfg: CapConfig) -> Result<bool> {
    let carrier = algebra.carrier().clone();
    let full = Submodule::full(&carrier);
    for i in 0..carrier.generator_count() {
        let act = LambdaAction::adjoint(algebra.clone(), carrier.generator(i))?;
        let (filt, _) = act.generalized_weight_filtration(&Weight::zero(), cfg)?;
        if !filt.limit().equals(&full) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Run a capped computation at doubling caps until two consecutive results
/// agree (heuristic-stable) or the ceiling is reached.
pub(crate) fn escalate<T>(
    cfg: CapConfig,
    mut compute: impl FnMut(usize) -> Result<T>,
    mut eq: impl FnMut(&T, &T) -> bool,
) -> Result<(T, CapStatus)> {
    let mut cap = cfg.initial.max(1);
    let mut prev: Option<T> = None;
    loop {
        match compute(cap) {
            Ok(t) => {
                if let Some(p) = &prev {
                    if eq(p, &t) {
                        return Ok((t, CapStatus::HeuristicStable));
                    }
                }
                if cap >= cfg.max {
                    return Ok((t, CapStatus::CapReached));
                }
                prev = Some(t);
            }
            Err(e) => {
                if cap >= cfg.max {
                    return Err(e);
                }
                prev = None;
            }
        }
        cap *= 2;
    }
}

fn weight_spaces_eq(a: &WeightSpaces, b: &WeightSpaces) -> bool {
    if a.spaces.len() != b.spaces.len() {
        return false;
    }
    a.spaces.iter().zip(&b.spaces).all(|((wa, va), (wb, vb))| {
        if wa != wb || va.len() != vb.len() {
            return false;
        }
        let home = match va.first() {
            Some(v) => v.module().clone(),
            None => return vb.is_empty(),
        };
        Submodule::span(&home, va).equals(&Submodule::span(&home, vb))
    })
}

type SliceKey = (u32, u32, u32);

/// Flatten the canonical coordinates of an element into sparse scalar keys
/// `(group, coordinate, degree)`.
fn flatten_element(m: &ModuleElement, group: u32, out: &mut BTreeMap<SliceKey, Rat>) {
    for (ci, c) in m.coords().iter().enumerate() {
        for (d, v) in c.coeffs().iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let e = out.entry((group, ci as u32, d as u32)).or_insert_with(Rat::zero);
            *e += v.clone();
        }
    }
    out.retain(|_, c| !c.is_zero());
}

/// Independent spanning set of the capped coordinate space.
fn independent_capped_basis(target: &Arc<PresentedModule>, cap: usize) -> Vec<ModuleElement> {
    let span = capped_basis(target, cap);
    let mut keys: BTreeMap<SliceKey, usize> = BTreeMap::new();
    let mut flats = vec![];
    for v in &span {
        let mut img = BTreeMap::new();
        flatten_element(v, 0, &mut img);
        for k in img.keys() {
            let next = keys.len();
            keys.entry(*k).or_insert(next);
        }
        flats.push(img);
    }
    let dense: Vec<Vec<Rat>> = flats
        .iter()
        .map(|img| {
            let mut row = vec![Rat::zero(); keys.len()];
            for (k, c) in img {
                row[keys[k]] = c.clone();
            }
            row
        })
        .collect();
    let kept = pencil::independent_subset(dense);
    kept.into_iter().map(|i| span[i].clone()).collect()
}

/// Kernel of a keyed constraint map restricted to the span of the given
/// vectors; returns independent combinations as elements.
fn kernel_combos(vecs: &[ModuleElement], images: &[BTreeMap<SliceKey, Rat>]) -> Vec<ModuleElement> {
    let kernel = crate::linalg::nullspace_keyed(images);
    let mut out = vec![];
    for combo in kernel {
        let mut e: Option<ModuleElement> = None;
        for (c, v) in combo.iter().zip(vecs) {
            if c.is_zero() {
                continue;
            }
            let t = v.scale_rat(c);
            e = Some(match e {
                None => t,
                Some(acc) => acc.add(&t),
            });
        }
        if let Some(e) = e {
            if !e.is_zero() {
                out.push(e);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::test_fixtures::{example_algebra, example_carrier};
    use crate::poly::rat_int;

    fn cfg() -> CapConfig {
        CapConfig::default()
    }

    fn arc_example() -> Arc<ConformalAlgebra> {
        Arc::new(example_algebra())
    }

    /// a = t⁻¹ + ∂n
    fn mixed_element(m: &Arc<PresentedModule>) -> ModuleElement {
        m.generator(1).add(&m.generator(2).apply_del())
    }

    /// ā = t⁻¹ - n
    fn modified_element(m: &Arc<PresentedModule>) -> ModuleElement {
        m.generator(1).sub(&m.generator(2))
    }

    #[test]
    fn weight_spaces_of_tinv_action() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let act = LambdaAction::adjoint(alg, m.generator(1)).unwrap();
        let (ws, status) = act.weight_spaces(cfg()).unwrap();
        assert_eq!(status, CapStatus::HeuristicStable);
        assert!(ws.extension.is_none());
        assert_eq!(ws.spaces.len(), 2);
        // weight 0 spans {1, t⁻¹}
        let (w0, basis0) = &ws.spaces[0];
        assert!(w0.is_zero());
        let span0 = Submodule::span(&m, basis0);
        assert!(span0.equals(&Submodule::span(&m, &[m.generator(0), m.generator(1)])));
        // weight 1 is the n-line
        let (w1, basis1) = &ws.spaces[1];
        assert_eq!(w1, &Weight::constant(rat_int(1)));
        let span1 = Submodule::span(&m, basis1);
        assert!(span1.equals(&Submodule::span(&m, &[m.generator(2)])));
    }

    #[test]
    fn weight_spaces_of_zero_module() {
        let alg = arc_example();
        let zero = PresentedModule::new(vec![], vec![]);
        let act = LambdaAction::new(alg, example_carrier().generator(1), zero, BTreeMap::new());
        // constructing with an unrelated carrier for the element is fine as
        // long as it lies in the algebra
        let act = act.unwrap();
        let (ws, _) = act.weight_spaces(cfg()).unwrap();
        assert!(ws.spaces.is_empty());
    }

    #[test]
    fn lie_filtration_weights_of_mixed_element() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let act = LambdaAction::adjoint(alg, mixed_element(&m)).unwrap();
        let (filt, status) = act.lie_filtration(cfg()).unwrap();
        assert_eq!(status, CapStatus::HeuristicStable);
        let weights: Vec<String> = filt.weights().iter().map(|w| w.to_string()).collect();
        assert_eq!(weights, vec!["1", "0", "0"]);
        // span{n} ⊂ span{n, 1} ⊂ M
        assert!(filt.steps[0]
            .submodule
            .equals(&Submodule::span(&m, &[m.generator(2)])));
        assert!(filt.steps[1]
            .submodule
            .equals(&Submodule::span(&m, &[m.generator(2), m.generator(0)])));
        assert!(filt.steps[2].submodule.equals(&Submodule::full(&m)));
        assert!(filt.steps[0].free_step);
        assert!(!filt.steps[1].free_step); // the vacuum line is torsion
        assert!(filt.steps[2].free_step);
    }

    #[test]
    fn lie_filtration_of_modified_element() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let abar = modified_element(&m);
        let act = LambdaAction::adjoint(alg, abar.clone()).unwrap();
        let (filt, _) = act.lie_filtration(cfg()).unwrap();
        let weights: Vec<String> = filt.weights().iter().map(|w| w.to_string()).collect();
        assert_eq!(weights, vec!["1", "0", "0"]);
        // ā is itself a 0-weight vector: a_λ ā = 0
        assert!(act.act_element(&abar).is_zero());
    }

    #[test]
    fn generalized_filtrations_of_abar() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let abar = modified_element(&m);
        let act = LambdaAction::adjoint(alg, abar.clone()).unwrap();

        let (f1, st1) = act
            .generalized_weight_filtration(&Weight::constant(rat_int(1)), cfg())
            .unwrap();
        assert_eq!(st1, CapStatus::HeuristicStable);
        assert_eq!(f1.chain.len(), 2);
        assert!(f1.limit().equals(&Submodule::span(&m, &[m.generator(2)])));

        let (f0, _) = act.generalized_weight_filtration(&Weight::zero(), cfg()).unwrap();
        let expect = Submodule::span(&m, &[m.generator(0), abar]);
        assert!(f0.limit().equals(&expect));

        let odd = Weight::new(RatPoly::monomial(rat_int(7), 3));
        let (fodd, _) = act.generalized_weight_filtration(&odd, cfg()).unwrap();
        assert!(fodd.limit().is_zero());
    }

    #[test]
    fn decompose_covers_for_modification() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let abar = modified_element(&m);
        let act = LambdaAction::adjoint(alg, abar.clone()).unwrap();
        let dec = act.decompose(cfg()).unwrap();
        assert!(dec.covers);
        assert_eq!(dec.parts.len(), 2);
        assert!(dec.parts[0].0.is_zero());
        assert!(dec.parts[0]
            .1
            .equals(&Submodule::span(&m, &[m.generator(0), abar])));
        assert_eq!(dec.parts[1].0, Weight::constant(rat_int(1)));
        assert!(dec.parts[1].1.equals(&Submodule::span(&m, &[m.generator(2)])));
    }

    #[test]
    fn decompose_fails_to_cover_for_non_nilpotent_image() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let a = mixed_element(&m);
        // adjoint action restricted to S = ⟨a⟩ = span{u, n}
        let s = alg.subalgebra_generated(std::slice::from_ref(&a)).unwrap();
        let sq = crate::module::Subquotient::new(s, Submodule::zero(&m)).unwrap();
        let full_act = LambdaAction::adjoint(alg, a).unwrap();
        let act = full_act.induced_on_subquotient(&sq).unwrap();
        let dec = act.decompose(cfg()).unwrap();
        assert!(!dec.covers);
        // only the weight-1 part (the n-line) shows up
        assert_eq!(dec.parts.len(), 1);
        assert_eq!(dec.parts[0].0, Weight::constant(rat_int(1)));
        assert!(!act.image_is_nilpotent(cfg()).unwrap());
    }

    #[test]
    fn decompose_of_zero_action_is_single_zero_part() {
        let m = example_carrier();
        let abelian = Arc::new(ConformalAlgebra::new(m.clone(), BTreeMap::new()));
        let act = LambdaAction::adjoint(abelian, m.generator(1)).unwrap();
        let dec = act.decompose(cfg()).unwrap();
        assert!(dec.covers);
        assert_eq!(dec.parts.len(), 1);
        assert!(dec.parts[0].0.is_zero());
        assert!(dec.parts[0].1.equals(&Submodule::full(&m)));
    }

    #[test]
    fn singularity_examples() {
        let alg = arc_example();
        let m = alg.carrier().clone();
        let a_act = LambdaAction::adjoint(alg.clone(), mixed_element(&m)).unwrap();
        assert_eq!(a_act.singularity(cfg()).unwrap(), 1);
        let abar_act = LambdaAction::adjoint(alg.clone(), modified_element(&m)).unwrap();
        assert_eq!(abar_act.singularity(cfg()).unwrap(), 1);
        // abelian algebra: singularity of any adjoint equals the rank
        let abelian = Arc::new(ConformalAlgebra::new(example_carrier(), BTreeMap::new()));
        let act = LambdaAction::adjoint(abelian.clone(), abelian.carrier().generator(1)).unwrap();
        assert_eq!(act.singularity(cfg()).unwrap(), abelian.carrier().rank());
    }

    #[test]
    fn engel_agreement() {
        let alg = arc_example();
        assert!(!engel_check(&alg, cfg()).unwrap());
        assert!(!alg.is_nilpotent());
        let abelian = Arc::new(ConformalAlgebra::new(example_carrier(), BTreeMap::new()));
        assert!(engel_check(&abelian, cfg()).unwrap());
        assert!(abelian.is_nilpotent());
    }

    #[test]
    fn irrational_spectrum_is_reported_as_extension() {
        // abelian ⟨a⟩ acting on a free rank-2 module by a₍₀₎ = [[0,1],[2,0]]
        let acting = PresentedModule::new(vec!["a".into()], vec![]);
        let algebra = Arc::new(ConformalAlgebra::new(acting.clone(), BTreeMap::new()));
        let target = PresentedModule::new(vec!["m1".into(), "m2".into()], vec![]);
        let mut table = BTreeMap::new();
        table.insert((0, 0), LambdaElement::from_element(target.generator(1)));
        table.insert(
            (0, 1),
            LambdaElement::from_element(target.generator(0).scale_rat(&rat_int(2))),
        );
        let act = LambdaAction::new(algebra, acting.generator(0), target, table).unwrap();
        assert!(act.check_action().is_empty());
        let (ws, _) = act.weight_spaces(cfg()).unwrap();
        assert!(ws.spaces.is_empty());
        let cof = ws.extension.expect("extension factor expected");
        assert_eq!(format!("{}", cof.display("x")), "x^2 - 2");
        match act.lie_filtration(cfg()) {
            Err(Error::NeedsFieldExtension { cofactor }) => {
                assert_eq!(cofactor, "x^2 - 2");
            }
            other => panic!("expected a field-extension error, got {other:?}"),
        }
    }

    #[test]
    fn section_exists_for_quotient_by_nonzero_weight_submodule() {
        // U = span{n} ⊆ M^1 for ā = t⁻¹ - n; build the section of M → M/U
        // from the decomposition and verify it splits the projection.
        let alg = arc_example();
        let m = alg.carrier().clone();
        let abar = modified_element(&m);
        let act = LambdaAction::adjoint(alg, abar.clone()).unwrap();
        let dec = act.decompose(cfg()).unwrap();
        let u = Submodule::span(&m, &[m.generator(2)]);
        assert!(dec.parts[1].1.contains_sub(&u));
        let q = m.quotient(&u);
        // basis of M⁰ projected into M/U generates the quotient
        let zero_part = &dec.parts[0].1;
        let proj_gens: Vec<ModuleElement> =
            zero_part.generators().iter().map(|g| q.project(g)).collect();
        let lift_gens = zero_part.generators();
        for t in 0..q.module.generator_count() {
            let qe = q.module.generator(t);
            if qe.is_zero() {
                continue;
            }
            let coeffs = Submodule::express_over(&q.module, &proj_gens, &qe)
                .expect("projection of the zero-weight part must generate the quotient");
            let mut lifted = m.zero();
            for (c, g) in coeffs.iter().zip(&lift_gens) {
                lifted = lifted.add(&g.scale_poly(c));
            }
            assert_eq!(q.project(&lifted), qe);
        }
    }

    #[test]
    fn coefficient_actions_match_the_bilambda_expansion() {
        // the action of a₍ₙ₎b is recovered from the (λ, μ)-expansion of
        // x_λ(y_μ v) - y_μ(x_λ v) by substituting μ = ν - λ and reading the
        // λ-slices
        let alg = arc_example();
        let m = alg.carrier().clone();
        let act = LambdaAction::adjoint(alg.clone(), mixed_element(&m)).unwrap();
        let x = mixed_element(&m);
        let y = m.generator(1).add(&m.generator(2));
        for v in [m.generator(1), m.generator(2), mixed_element(&m)] {
            // F(λ, μ)
            let mut f: BTreeMap<(usize, usize), ModuleElement> = BTreeMap::new();
            let mut add = |key: (usize, usize), e: ModuleElement, map: &mut BTreeMap<(usize, usize), ModuleElement>| {
                if e.is_zero() {
                    return;
                }
                match map.remove(&key) {
                    None => {
                        map.insert(key, e);
                    }
                    Some(old) => {
                        let s = old.add(&e);
                        if !s.is_zero() {
                            map.insert(key, s);
                        }
                    }
                }
            };
            for (mu, w) in act.act(&y, &v).terms() {
                for (la, u) in act.act(&x, w).terms() {
                    add((la, mu), u.clone(), &mut f);
                }
            }
            for (la, w) in act.act(&x, &v).terms() {
                for (mu, u) in act.act(&y, w).terms() {
                    add((la, mu), u.neg(), &mut f);
                }
            }
            // substitute μ = ν - λ and collect G_n(ν) per λ-power n
            let mut g: BTreeMap<(usize, usize), ModuleElement> = BTreeMap::new();
            for (&(a, b), e) in &f {
                for i in 0..=b {
                    let mut c = crate::poly::binomial(b, i);
                    if (b - i) % 2 == 1 {
                        c = -c;
                    }
                    add((a + b - i, i), e.scale_rat(&c), &mut g);
                }
            }
            let bracket = alg.bracket(&x, &y);
            let top = bracket.lambda_degree().unwrap_or(0);
            for n in 0..=top + 1 {
                // n!·(λⁿ-slice of G) as a ν-polynomial
                let mut expansion = LambdaElement::zero();
                for (&(la, nu), e) in &g {
                    if la == n {
                        expansion.insert_add(nu, e.scale_rat(&crate::poly::factorial(n)));
                    }
                }
                let coeff = bracket
                    .coefficient(n)
                    .unwrap_or_else(|| alg.carrier().zero());
                assert_eq!(act.act(&coeff, &v), expansion, "coefficient {n} mismatch");
            }
        }
    }

    #[test]
    fn check_action_flags_bad_tables() {
        // a acting with a₍₀₎ non-commuting against an abelian bracket: the
        // composition identity fails if the table is inconsistent
        let acting = PresentedModule::new(vec!["a".into()], vec![]);
        // [a_λ a] = 0
        let algebra = Arc::new(ConformalAlgebra::new(acting.clone(), BTreeMap::new()));
        let target = PresentedModule::new(vec!["m1".into(), "m2".into()], vec![]);
        let mut table = BTreeMap::new();
        // a_λ m1 = λ·m2, a_λ m2 = m1: [a_λ[a_μ m1]] - [a_μ[a_λ m1]] = (λ-μ)m1 ≠ 0
        let mut e1 = LambdaElement::zero();
        e1.insert_add(1, target.generator(1));
        table.insert((0, 0), e1);
        table.insert((0, 1), LambdaElement::from_element(target.generator(0)));
        let act = LambdaAction::new(algebra, acting.generator(0), target, table).unwrap();
        assert!(!act.check_action().is_empty());
    }
}
