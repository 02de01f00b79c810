//! Finitely generated modules over `k[∂]`.
//!
//! A [`PresentedModule`] is given by generators and a relation matrix; its
//! Smith normal form is computed once on demand and fixes a canonical
//! reduced coordinate form for every element. [`Submodule`]s are stored in
//! a triangular echelon form over `k[∂]` that makes membership, reduction
//! and equality decidable and deterministic.

use crate::poly::{Rat, RatPoly};
use crate::smith::{self, PolyMat, SmithForm};
use num_traits::{One, Zero};
use std::fmt;
use std::sync::{Arc, OnceLock};

#[derive(Debug)]
struct SmithData {
    form: SmithForm,
    rank: usize,
    torsion: Vec<RatPoly>,
}

/// A finitely generated `k[∂]`-module presented by generators and relations.
#[derive(Debug)]
pub struct PresentedModule {
    labels: Vec<String>,
    relations: PolyMat,
    snf: OnceLock<SmithData>,
}

impl PartialEq for PresentedModule {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.relations == other.relations
    }
}
impl Eq for PresentedModule {}

impl PresentedModule {
    /// Build a module from generator labels and relation rows (each row is a
    /// relation `Σ row[j]·g_j = 0`).
    pub fn new(labels: Vec<String>, relations: PolyMat) -> Arc<Self> {
        for row in &relations {
            assert_eq!(row.len(), labels.len(), "relation width mismatch");
        }
        Arc::new(PresentedModule { labels, relations, snf: OnceLock::new() })
    }

    /// Free module of the given rank with default labels `g0, g1, ...`.
    pub fn free(rank: usize) -> Arc<Self> {
        let labels = (0..rank).map(|i| format!("g{i}")).collect();
        PresentedModule::new(labels, vec![])
    }

    pub fn generator_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn relations(&self) -> &PolyMat {
        &self.relations
    }

    fn smith(&self) -> &SmithData {
        self.snf.get_or_init(|| {
            let form = smith::smith_normal_form(&self.relations);
            let nonzero = form.nonzero_diagonal_count();
            let rank = self.labels.len() - nonzero;
            let torsion = form
                .diag
                .iter()
                .filter(|d| !d.is_zero() && !d.is_constant())
                .cloned()
                .collect();
            SmithData { form, rank, torsion }
        })
    }

    /// Rank of the free part.
    pub fn rank(&self) -> usize {
        self.smith().rank
    }

    /// Non-unit torsion invariants, monic, in divisibility order.
    pub fn torsion_invariants(&self) -> Vec<RatPoly> {
        self.smith().torsion.clone()
    }

    pub fn smith_form(&self) -> &SmithForm {
        &self.smith().form
    }

    /// Canonical reduced coordinates of an element.
    pub fn reduce_coords(&self, coords: &[RatPoly]) -> Vec<RatPoly> {
        let k = self.labels.len();
        assert_eq!(coords.len(), k, "coordinate width mismatch");
        if self.relations.is_empty() {
            return coords.to_vec();
        }
        let data = self.smith();
        let v = &data.form.v;
        let vi = &data.form.v_inv;
        // transformed coordinates c·V
        let mut t = vec![RatPoly::zero(); k];
        for j in 0..k {
            for i in 0..k {
                if !coords[i].is_zero() && !v[i][j].is_zero() {
                    t[j] = &t[j] + &(&coords[i] * &v[i][j]);
                }
            }
        }
        for (i, d) in data.form.diag.iter().enumerate() {
            if !d.is_zero() {
                t[i] = t[i].rem(d);
            }
        }
        // back to the original generators: (c·V mod S)·V⁻¹
        let mut out = vec![RatPoly::zero(); k];
        for j in 0..k {
            for i in 0..k {
                if !t[i].is_zero() && !vi[i][j].is_zero() {
                    out[j] = &out[j] + &(&t[i] * &vi[i][j]);
                }
            }
        }
        out
    }

    pub fn element(self: &Arc<Self>, coords: Vec<RatPoly>) -> ModuleElement {
        let coords = self.reduce_coords(&coords);
        ModuleElement { module: self.clone(), coords }
    }

    pub fn generator(self: &Arc<Self>, i: usize) -> ModuleElement {
        let mut coords = vec![RatPoly::zero(); self.labels.len()];
        coords[i] = RatPoly::one();
        self.element(coords)
    }

    pub fn zero(self: &Arc<Self>) -> ModuleElement {
        self.element(vec![RatPoly::zero(); self.labels.len()])
    }

    /// All generators as elements.
    pub fn generators(self: &Arc<Self>) -> Vec<ModuleElement> {
        (0..self.labels.len()).map(|i| self.generator(i)).collect()
    }

    /// Degree bound of the canonical form in coordinate `i`: torsion
    /// coordinates are reduced below the degree of their diagonal
    /// invariant, free coordinates are unbounded (`None`).
    ///
    /// This is a bound in the *transformed* basis; as a conservative basis
    /// for capped searches we expose only whether the module has torsion.
    pub fn is_torsion_free(&self) -> bool {
        self.smith().form.nonzero_diagonal_count() == 0
    }

    /// Present the quotient of this module by a submodule. The quotient
    /// keeps the same generators; the submodule rows become relations.
    pub fn quotient(self: &Arc<Self>, w: &Submodule) -> QuotientModule {
        assert!(
            Arc::ptr_eq(&w.home, self) || w.home.as_ref() == self.as_ref(),
            "submodule of a different module"
        );
        let mut relations = self.relations.clone();
        for row in &w.rows {
            relations.push(row.clone());
        }
        let module = PresentedModule::new(self.labels.clone(), relations);
        QuotientModule { base: self.clone(), module }
    }
}

/// Quotient `M/W` with its projection and section maps.
#[derive(Clone, Debug)]
pub struct QuotientModule {
    pub base: Arc<PresentedModule>,
    pub module: Arc<PresentedModule>,
}

impl QuotientModule {
    pub fn project(&self, e: &ModuleElement) -> ModuleElement {
        assert!(e.is_in(&self.base), "projection of foreign element");
        self.module.element(e.coords.clone())
    }

    /// Canonical section: reinterpret the canonical quotient representative
    /// in the base module. Satisfies `project ∘ section = id`.
    pub fn section(&self, q: &ModuleElement) -> ModuleElement {
        assert!(q.is_in(&self.module), "section of foreign element");
        self.base.element(q.coords.clone())
    }
}

/// An element of a [`PresentedModule`], stored in canonical reduced form.
#[derive(Clone)]
pub struct ModuleElement {
    module: Arc<PresentedModule>,
    coords: Vec<RatPoly>,
}

impl PartialEq for ModuleElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.module.as_ref() == other.module.as_ref()
    }
}
impl Eq for ModuleElement {}

impl ModuleElement {
    pub fn module(&self) -> &Arc<PresentedModule> {
        &self.module
    }

    pub fn coords(&self) -> &[RatPoly] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_in(&self, m: &Arc<PresentedModule>) -> bool {
        Arc::ptr_eq(&self.module, m) || self.module.as_ref() == m.as_ref()
    }

    fn assert_same(&self, other: &ModuleElement) {
        assert!(
            self.is_in(&other.module),
            "elements live in different modules"
        );
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        self.assert_same(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        self.module.element(coords)
    }

    pub fn sub(&self, other: &ModuleElement) -> ModuleElement {
        self.assert_same(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        self.module.element(coords)
    }

    pub fn neg(&self) -> ModuleElement {
        self.module
            .element(self.coords.iter().map(|c| -c).collect())
    }

    /// Multiply by a polynomial in `∂`.
    pub fn scale_poly(&self, p: &RatPoly) -> ModuleElement {
        self.module
            .element(self.coords.iter().map(|c| c * p).collect())
    }

    pub fn scale_rat(&self, r: &Rat) -> ModuleElement {
        self.module
            .element(self.coords.iter().map(|c| c.scale(r)).collect())
    }

    /// Apply `∂`.
    pub fn apply_del(&self) -> ModuleElement {
        self.scale_poly(&RatPoly::var())
    }

    /// True if some nonzero multiple of the element vanishes.
    pub fn is_torsion(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        match self.annihilator() {
            Some(p) => !p.is_zero(),
            None => false,
        }
    }

    /// Monic generator of the annihilator ideal `{p : p·e = 0}`, `None` if
    /// the annihilator is zero (the element has a free component).
    pub fn annihilator(&self) -> Option<RatPoly> {
        if self.is_zero() {
            return Some(RatPoly::one());
        }
        let data = self.module.smith();
        let k = self.coords.len();
        let v = &data.form.v;
        let mut t = vec![RatPoly::zero(); k];
        for j in 0..k {
            for i in 0..k {
                if !self.coords[i].is_zero() && !v[i][j].is_zero() {
                    t[j] = &t[j] + &(&self.coords[i] * &v[i][j]);
                }
            }
        }
        let diag = &data.form.diag;
        let mut ann = RatPoly::one();
        for (i, ti) in t.iter().enumerate() {
            if ti.is_zero() {
                continue;
            }
            let d = diag.get(i).cloned().unwrap_or_else(RatPoly::zero);
            if d.is_zero() {
                return None; // free coordinate: no torsion
            }
            let g = d.gcd(ti);
            let (need, r) = d.div_rem(&g);
            debug_assert!(r.is_zero());
            ann = ann.lcm(&need);
        }
        Some(ann.monic())
    }
}

impl fmt::Display for ModuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_element(&self.coords, self.module.labels()))
    }
}

impl fmt::Debug for ModuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Render coordinates against generator labels in the CLI expression syntax.
pub fn format_element(coords: &[RatPoly], labels: &[String]) -> String {
    let mut out = String::new();
    let mut first = true;
    for (c, label) in coords.iter().zip(labels) {
        if c.is_zero() {
            continue;
        }
        let rendered = render_coeff_times(c, label);
        if first {
            out.push_str(&rendered);
            first = false;
        } else if let Some(rest) = rendered.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(&rendered);
        }
    }
    if first {
        out.push('0');
    }
    out
}

fn render_coeff_times(c: &RatPoly, label: &str) -> String {
    use num_traits::Signed;
    if c.is_constant() {
        let v = c.constant_term();
        if v.is_one() {
            return label.to_string();
        }
        if (-v.clone()).is_one() {
            return format!("-{label}");
        }
        let num = v.numer().to_string();
        return if v.denom().is_one() {
            format!("{num}*{label}")
        } else {
            format!("{num}/{}*{label}", v.denom())
        };
    }
    let body = format!("{}", c.display("D"));
    let single_term = c.coeffs().iter().filter(|x| !x.is_zero()).count() == 1;
    if single_term {
        if c.leading_coeff().is_negative() {
            // move the sign out front for readability
            let pos = std::ops::Neg::neg(c);
            return format!("-{}*{label}", pos.display("D"));
        }
        format!("{body}*{label}")
    } else {
        format!("({body})*{label}")
    }
}

/// An `H`-submodule of a presented module, stored as the canonical
/// triangular echelon form of its coordinate lattice (which always includes
/// the relation rows of the home module).
#[derive(Clone)]
pub struct Submodule {
    home: Arc<PresentedModule>,
    /// Echelon rows, pivots monic, sorted by pivot column.
    rows: PolyMat,
    pivot_cols: Vec<usize>,
    /// `rows[i] = Σ_j transform[i][j] · stacked[j]` where `stacked` is
    /// `[user generators..., relations...]`.
    transform: PolyMat,
}

impl Submodule {
    /// Smallest submodule containing the given elements (their `H`-span).
    pub fn span(home: &Arc<PresentedModule>, elements: &[ModuleElement]) -> Submodule {
        for e in elements {
            assert!(e.is_in(home), "element of a different module");
        }
        let stacked: PolyMat = elements.iter().map(|e| e.coords.clone()).collect();
        Submodule::from_stacked(home, stacked)
    }

    fn from_stacked(home: &Arc<PresentedModule>, mut stacked: PolyMat) -> Submodule {
        for row in home.relations() {
            stacked.push(row.clone());
        }
        let (rows, pivot_cols, transform) = echelonize(&stacked, home.generator_count());
        Submodule { home: home.clone(), rows, pivot_cols, transform }
    }

    pub fn zero(home: &Arc<PresentedModule>) -> Submodule {
        Submodule::span(home, &[])
    }

    pub fn full(home: &Arc<PresentedModule>) -> Submodule {
        let gens = home.generators();
        Submodule::span(home, &gens)
    }

    pub fn home(&self) -> &Arc<PresentedModule> {
        &self.home
    }

    /// Echelon rows of the coordinate lattice (including relation rows).
    pub fn rows(&self) -> &PolyMat {
        &self.rows
    }

    /// Canonical generators: the echelon rows that are nonzero as elements
    /// of the home module.
    pub fn generators(&self) -> Vec<ModuleElement> {
        self.rows
            .iter()
            .map(|r| self.home.element(r.clone()))
            .filter(|e| !e.is_zero())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.generators().is_empty()
    }

    /// Reduce an element's coordinates against the echelon rows; the result
    /// is zero iff the element belongs to the submodule. Additive and
    /// idempotent.
    fn reduce_raw(&self, coords: &[RatPoly]) -> (Vec<RatPoly>, Vec<RatPoly>) {
        let mut v = coords.to_vec();
        let mut combo = vec![RatPoly::zero(); self.rows.len()];
        for (ridx, (&pc, row)) in self.pivot_cols.iter().zip(&self.rows).enumerate() {
            if v[pc].is_zero() {
                continue;
            }
            let (q, r) = v[pc].div_rem(&row[pc]);
            if q.is_zero() {
                debug_assert_eq!(r, v[pc]);
                continue;
            }
            for j in 0..v.len() {
                let d = &q * &row[j];
                v[j] = &v[j] - &d;
            }
            combo[ridx] = q;
        }
        (v, combo)
    }

    pub fn contains(&self, e: &ModuleElement) -> bool {
        assert!(e.is_in(&self.home), "element of a different module");
        let (r, _) = self.reduce_raw(e.coords());
        r.iter().all(|c| c.is_zero())
    }

    /// Canonical representative of `e + W`.
    pub fn reduce(&self, e: &ModuleElement) -> ModuleElement {
        assert!(e.is_in(&self.home), "element of a different module");
        let (r, _) = self.reduce_raw(e.coords());
        // representative is canonical in the home module as well
        self.home.element(r)
    }

    /// Express a member as a combination of the given basis elements modulo
    /// the home relations: returns `c` with `e ≡ Σ cᵢ·basisᵢ`. `None` if
    /// `e` is not in the span of the basis.
    pub fn express_over(
        home: &Arc<PresentedModule>,
        basis: &[ModuleElement],
        e: &ModuleElement,
    ) -> Option<Vec<RatPoly>> {
        let w = Submodule::span(home, basis);
        let (r, combo) = w.reduce_raw(e.coords());
        if !r.iter().all(|c| c.is_zero()) {
            return None;
        }
        // combo is over echelon rows; push through the transform to the
        // stacked [basis; relations] rows and keep the basis part
        let mut out = vec![RatPoly::zero(); basis.len()];
        for (ridx, q) in combo.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            for (j, t) in w.transform[ridx].iter().enumerate() {
                if j < basis.len() && !t.is_zero() {
                    out[j] = &out[j] + &(q * t);
                }
            }
        }
        Some(out)
    }

    pub fn sum(&self, other: &Submodule) -> Submodule {
        let mut stacked = self.rows.clone();
        stacked.extend(other.rows.iter().cloned());
        Submodule::from_stacked(&self.home, stacked)
    }

    /// Intersection of two submodules, via a syzygy computation on the
    /// stacked lattices.
    pub fn intersect(&self, other: &Submodule) -> Submodule {
        let a = &self.rows;
        let b = &other.rows;
        if a.is_empty() || b.is_empty() {
            return Submodule::zero(&self.home);
        }
        let mut stacked: PolyMat = a.clone();
        stacked.extend(b.iter().cloned());
        let kernel = smith::left_kernel(&stacked);
        let mut gens = vec![];
        for w in kernel {
            // u·A where u is the first block of the kernel row
            let mut coords = vec![RatPoly::zero(); self.home.generator_count()];
            for (i, arow) in a.iter().enumerate() {
                if w[i].is_zero() {
                    continue;
                }
                for j in 0..coords.len() {
                    coords[j] = &coords[j] + &(&w[i] * &arow[j]);
                }
            }
            let e = self.home.element(coords);
            if !e.is_zero() {
                gens.push(e);
            }
        }
        Submodule::span(&self.home, &gens)
    }

    pub fn equals(&self, other: &Submodule) -> bool {
        self.rows == other.rows
    }

    pub fn contains_sub(&self, other: &Submodule) -> bool {
        other
            .rows
            .iter()
            .all(|r| {
                let (red, _) = self.reduce_raw(r);
                red.iter().all(|c| c.is_zero())
            })
    }

    /// Rank of the submodule as an abstract module.
    pub fn module_rank(&self) -> usize {
        lattice_rank(&self.rows) - lattice_rank(self.home.relations())
    }

    /// Present the submodule abstractly: returns the presentation and the
    /// images of its generators inside the home module.
    pub fn presented(&self) -> (Arc<PresentedModule>, Vec<ModuleElement>) {
        let gens = self.generators();
        let presentation = present_with_images(&self.home, &gens);
        (presentation, gens)
    }
}

impl fmt::Debug for Submodule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators().iter().map(|g| g.to_string()).collect();
        write!(f, "span{{{}}}", gens.join(", "))
    }
}

/// A subquotient `W/V` of a presented module, presented abstractly and
/// equipped with lift and projection maps.
#[derive(Clone)]
pub struct Subquotient {
    big: Submodule,
    small: Submodule,
    module: Arc<PresentedModule>,
    lifts: Vec<ModuleElement>,
    row_to_gen: Vec<Option<usize>>,
}

impl Subquotient {
    pub fn new(big: Submodule, small: Submodule) -> crate::error::Result<Subquotient> {
        if !big.contains_sub(&small) {
            return Err(crate::error::Error::Invariant(
                "subquotient denominator is not contained in the numerator".into(),
            ));
        }
        let home = big.home().clone();
        let mut lifts = vec![];
        let mut row_to_gen = vec![];
        for row in big.rows() {
            let e = home.element(row.clone());
            if e.is_zero() {
                row_to_gen.push(None);
            } else {
                row_to_gen.push(Some(lifts.len()));
                lifts.push(e);
            }
        }
        let q = lifts.len();
        // relations: syzygies of the lifts modulo home relations, plus the
        // expressions of the denominator generators over the lifts
        let mut stacked: PolyMat = lifts.iter().map(|g| g.coords().to_vec()).collect();
        stacked.extend(home.relations().iter().cloned());
        let mut relations: PolyMat = smith::left_kernel(&stacked)
            .into_iter()
            .map(|w| w[..q].to_vec())
            .filter(|r| r.iter().any(|c| !c.is_zero()))
            .collect();
        for g in small.generators() {
            let c = Submodule::express_over(&home, &lifts, &g).ok_or_else(|| {
                crate::error::Error::Invariant("denominator generator escapes the numerator".into())
            })?;
            if c.iter().any(|x| !x.is_zero()) {
                relations.push(c);
            }
        }
        let labels = (0..q).map(|i| format!("w{i}")).collect();
        let module = PresentedModule::new(labels, relations);
        Ok(Subquotient { big, small, module, lifts, row_to_gen })
    }

    /// Quotient of the whole module: `M / V`.
    pub fn of_quotient(home: &Arc<PresentedModule>, small: Submodule) -> crate::error::Result<Subquotient> {
        Subquotient::new(Submodule::full(home), small)
    }

    pub fn module(&self) -> &Arc<PresentedModule> {
        &self.module
    }

    pub fn big(&self) -> &Submodule {
        &self.big
    }

    pub fn small(&self) -> &Submodule {
        &self.small
    }

    pub fn home(&self) -> &Arc<PresentedModule> {
        self.big.home()
    }

    /// Image in the home module of an abstract element (a canonical lift).
    pub fn lift(&self, e: &ModuleElement) -> ModuleElement {
        assert!(e.is_in(&self.module), "lift of foreign element");
        let mut out = self.home().zero();
        for (c, g) in e.coords().iter().zip(&self.lifts) {
            if !c.is_zero() {
                out = out.add(&g.scale_poly(c));
            }
        }
        out
    }

    /// Project a home element lying in the numerator onto the subquotient.
    pub fn project(&self, e: &ModuleElement) -> crate::error::Result<ModuleElement> {
        assert!(e.is_in(self.home()), "projection of foreign element");
        let (rest, combo) = self.big.reduce_raw(e.coords());
        if !rest.iter().all(|c| c.is_zero()) {
            return Err(crate::error::Error::NotStable(format!(
                "element {e} is not in the numerator of the subquotient"
            )));
        }
        let mut coords = vec![RatPoly::zero(); self.lifts.len()];
        for (ridx, q) in combo.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            if let Some(g) = self.row_to_gen[ridx] {
                coords[g] = &coords[g] + q;
            }
        }
        Ok(self.module.element(coords))
    }

    /// Lift a submodule of the abstract presentation back to the home module
    /// (the result contains the denominator).
    pub fn lift_submodule(&self, w: &Submodule) -> Submodule {
        let mut gens: Vec<ModuleElement> = w.generators().iter().map(|g| self.lift(g)).collect();
        gens.extend(self.small.generators());
        Submodule::span(self.home(), &gens)
    }

    /// Project a submodule of the home module contained in the numerator.
    pub fn project_submodule(&self, w: &Submodule) -> crate::error::Result<Submodule> {
        let mut gens = vec![];
        for g in w.generators() {
            gens.push(self.project(&g)?);
        }
        Ok(Submodule::span(&self.module, &gens))
    }
}

/// Present the span of `gens` abstractly, with one abstract generator per
/// given element and relations the full syzygy module.
pub fn present_with_images(
    home: &Arc<PresentedModule>,
    gens: &[ModuleElement],
) -> Arc<PresentedModule> {
    let q = gens.len();
    if q == 0 {
        return PresentedModule::new(vec![], vec![]);
    }
    let mut stacked: PolyMat = gens.iter().map(|g| g.coords().to_vec()).collect();
    stacked.extend(home.relations().iter().cloned());
    let kernel = smith::left_kernel(&stacked);
    let relations: PolyMat = kernel
        .into_iter()
        .map(|w| w[..q].to_vec())
        .filter(|r| r.iter().any(|c| !c.is_zero()))
        .collect();
    let labels = (0..q).map(|i| format!("w{i}")).collect();
    PresentedModule::new(labels, relations)
}

/// Rank over the fraction field of the row span of a polynomial matrix.
pub fn lattice_rank(rows: &PolyMat) -> usize {
    if rows.is_empty() {
        return 0;
    }
    smith::smith_normal_form(rows).nonzero_diagonal_count()
}

/// Row echelon form over `k[∂]` with monic pivots, entries above each pivot
/// reduced, rows sorted by pivot column; returns (rows, pivot columns,
/// transform over the input rows). Zero rows are dropped.
fn echelonize(input: &PolyMat, cols: usize) -> (PolyMat, Vec<usize>, PolyMat) {
    let n = input.len();
    let mut work: Vec<(Vec<RatPoly>, Vec<RatPoly>)> = input
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut t = vec![RatPoly::zero(); n];
            t[i] = RatPoly::one();
            (r.clone(), t)
        })
        .collect();
    let mut out: Vec<(Vec<RatPoly>, Vec<RatPoly>, usize)> = vec![];

    for c in 0..cols {
        loop {
            let mut cands: Vec<usize> = (0..work.len())
                .filter(|&i| leading_col(&work[i].0) == Some(c))
                .collect();
            if cands.is_empty() {
                break;
            }
            // minimal degree pivot at this column, ties by position
            cands.sort_by_key(|&i| (work[i].0[c].degree_i64(), i));
            let p = cands[0];
            let mut again = false;
            for &i in &cands[1..] {
                let (q, _r) = work[i].0[c].div_rem(&work[p].0[c]);
                row_combine(&mut work, i, p, &q);
                if leading_col(&work[i].0) == Some(c) {
                    again = true;
                }
            }
            if !again {
                let (row, tr) = work.remove(p);
                out.push((row, tr, c));
                break;
            }
        }
    }

    // normalize pivots monic and reduce entries above pivots
    let mut rows: PolyMat = vec![];
    let mut pivots: Vec<usize> = vec![];
    let mut transform: PolyMat = vec![];
    out.sort_by_key(|&(_, _, c)| c);
    for (mut row, mut tr, c) in out {
        let lc = row[c].leading_coeff();
        if !lc.is_one() {
            let inv = Rat::one() / lc;
            for x in row.iter_mut() {
                *x = x.scale(&inv);
            }
            for x in tr.iter_mut() {
                *x = x.scale(&inv);
            }
        }
        rows.push(row);
        pivots.push(c);
        transform.push(tr);
    }
    // inter-reduce: entries of earlier rows at later pivot columns
    for j in 0..rows.len() {
        for i in 0..j {
            let pc = pivots[j];
            if rows[i][pc].is_zero() {
                continue;
            }
            let (q, _r) = rows[i][pc].div_rem(&rows[j][pc]);
            if q.is_zero() {
                continue;
            }
            for col in 0..cols {
                let d = &q * &rows[j][col];
                rows[i][col] = &rows[i][col] - &d;
            }
            for col in 0..transform[0].len() {
                let d = &q * &transform[j][col];
                transform[i][col] = &transform[i][col] - &d;
            }
        }
    }
    (rows, pivots, transform)
}

fn leading_col(row: &[RatPoly]) -> Option<usize> {
    row.iter().position(|c| !c.is_zero())
}

fn row_combine(
    work: &mut [(Vec<RatPoly>, Vec<RatPoly>)],
    i: usize,
    p: usize,
    q: &RatPoly,
) {
    if q.is_zero() {
        return;
    }
    let (prow, ptr) = (work[p].0.clone(), work[p].1.clone());
    let (row, tr) = &mut work[i];
    for j in 0..row.len() {
        let d = q * &prow[j];
        row[j] = &row[j] - &d;
    }
    for j in 0..tr.len() {
        let d = q * &ptr[j];
        tr[j] = &tr[j] - &d;
    }
}
