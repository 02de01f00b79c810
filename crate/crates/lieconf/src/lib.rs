//! Exact-arithmetic structure theory for Lie conformal algebras over `k[∂]`
//! and finite vertex algebras.
//!
//! The crate is organised in layers:
//!
//! * [`poly`] / [`hopf`] — rational polynomial arithmetic in one and two
//!   variables, and the Hopf-algebra operations of `k[∂]` (coproduct,
//!   antipode, Fourier transform, straightening).
//! * [`module`] — finitely generated `k[∂]`-modules presented by relation
//!   matrices, Smith normal form, submodules and quotients.
//! * [`conformal`] — λ-bracket structures: axiom checking, derived and
//!   central series, subalgebra generation, centre and normalizer.
//! * [`repweight`] — weight vectors, Lie-theorem filtrations, generalized
//!   weight decompositions, singularity, Engel criterion.
//! * [`modify`] — the modification algorithm turning a solvable
//!   one-generated subalgebra into a nilpotent one.
//! * [`vertex`] — finite vertex algebras: n-th products, axiom checks,
//!   the λ-bracket functor, inner automorphisms and the root-space
//!   decomposition pipeline.
//! * [`textio`] / [`report`] — the definition-file format and the JSON
//!   reports used by the `lieconf` command-line tool.

pub mod conformal;
pub mod error;
pub mod hopf;
pub mod linalg;
pub mod modify;
pub mod module;
pub mod pencil;
pub mod poly;
pub mod report;
pub mod repweight;
pub mod smith;
pub mod textio;
pub mod vertex;

pub use conformal::{CapConfig, CapStatus, ConformalAlgebra, LambdaElement};
pub use error::Error;
pub use module::{ModuleElement, PresentedModule, Submodule};
pub use poly::{BiPoly, Rat, RatPoly};
pub use repweight::{Decomposition, LambdaAction, LieFiltration, Weight, WeightFiltration};
