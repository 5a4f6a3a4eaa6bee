//! Module algebras, free modules over them, and the classical/deformed
//! "world" that selects which product is in force.
//!
//! Two concrete module algebras are provided:
//!
//! * polynomials `K[x1..xn]` on which the PBW generators act as partial
//!   derivatives, and
//! * functions on a finite group on which the group algebra acts by right
//!   translation, `(g |> f)(x) = f(x g)`.
//!
//! Every module in scope is free with a finite basis; coefficients live in
//! the algebra, and tensor products over the algebra are again free on the
//! product basis, with the Hopf action spread over slots by the coproduct.
//!
//! A [`World`] bundles a Hopf structure (classical or twisted), an optional
//! twist for the products, and an R-matrix.  All products — on the algebra,
//! on modules, on tensor products — are requested through the world, so a
//! single check implementation covers both the classical and the deformed
//! instance of each law.

use crate::check::{CheckReport, Witness};
use crate::error::Error;
use crate::hopf::{
    iterated_coproduct, Backend, ClassicalHopf, HopfElement, HopfHandle, HopfOps, HopfRef, Word,
};
use crate::scalar::{join_terms, term_pieces, Scalar};
use crate::twist::{tensor_legs, DeformedRef, RMatrix, Twist};
use num::BigRational;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

/// A basis monomial of a module algebra: an exponent vector for polynomials,
/// or a point-mass index for functions on a finite set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mono {
    Exp(Vec<u32>),
    Point(usize),
}

#[derive(Debug, PartialEq, Eq)]
pub enum AlgebraKind {
    Poly { vars: Vec<String> },
    FinFun { points: Vec<String> },
}

/// A module algebra: a commutative algebra with a fixed action of the Hopf
/// algebra's basis words on its monomials.
#[derive(Debug, PartialEq, Eq)]
pub struct Algebra {
    hopf: HopfRef,
    kind: AlgebraKind,
    /// Functions only: `translate[g][p]` = index of `p * g^{-1}`, so that
    /// basis word `g` sends the point mass at `p` to the one at `p * g^{-1}`.
    translate: Vec<Vec<usize>>,
}

pub type AlgebraRef = Arc<Algebra>;

impl Algebra {
    /// Polynomials `K[vars]` with the `i`-th PBW generator acting as the
    /// partial derivative in the `i`-th variable.
    pub fn poly(hopf: &HopfRef, vars: Vec<String>) -> Result<AlgebraRef, Error> {
        match &hopf.backend {
            Backend::AbelianPbw { generators } if generators.len() == vars.len() => {
                Ok(Arc::new(Algebra {
                    hopf: hopf.clone(),
                    kind: AlgebraKind::Poly { vars },
                    translate: Vec::new(),
                }))
            }
            Backend::AbelianPbw { generators } => Err(Error::Invalid(format!(
                "need one variable per generator ({} generators, {} variables)",
                generators.len(),
                vars.len()
            ))),
            _ => Err(Error::Invalid(
                "polynomial algebra requires a PBW backend".into(),
            )),
        }
    }

    /// Functions on the finite group underlying a group-algebra backend,
    /// acted on by right translation.  Requires a genuine group basis:
    /// single-term products and antipodes with coefficient 1.
    pub fn fin_fun(hopf: &HopfRef) -> Result<AlgebraRef, Error> {
        let tables = match &hopf.backend {
            Backend::FiniteDim(t) => t,
            _ => Err(Error::Invalid(
                "function algebra requires a finite-dimensional backend".into(),
            ))?,
        };
        let n = tables.names.len();
        let one = Scalar::one(hopf.order);
        let single = |terms: &HopfElement| -> Result<usize, Error> {
            let terms: Vec<_> = terms.terms().collect();
            match terms.as_slice() {
                [(Word::Basis(k), c)] if **c == one => Ok(*k),
                _ => Err(Error::Invalid(
                    "translation action requires a group basis".into(),
                )),
            }
        };
        let mut translate = vec![vec![0usize; n]; n];
        for g in 0..n {
            let g_inv = single(&HopfElement::basis(hopf, g).antipode())?;
            for p in 0..n {
                translate[g][p] =
                    single(&HopfElement::basis(hopf, p).mul(&HopfElement::basis(hopf, g_inv)))?;
            }
        }
        Ok(Arc::new(Algebra {
            hopf: hopf.clone(),
            kind: AlgebraKind::FinFun {
                points: tables.names.clone(),
            },
            translate,
        }))
    }

    pub fn hopf(&self) -> &HopfRef {
        &self.hopf
    }

    pub fn order(&self) -> usize {
        self.hopf.order
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn same(a: &AlgebraRef, b: &AlgebraRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }

    /// Number of variables (polynomials) or points (functions).
    pub fn dimension_hint(&self) -> usize {
        match &self.kind {
            AlgebraKind::Poly { vars } => vars.len(),
            AlgebraKind::FinFun { points } => points.len(),
        }
    }

    pub fn mono_name(&self, m: &Mono) -> String {
        match (&self.kind, m) {
            (AlgebraKind::Poly { vars }, Mono::Exp(exps)) => {
                let parts: Vec<String> = vars
                    .iter()
                    .zip(exps)
                    .filter(|(_, e)| **e > 0)
                    .map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
                    .collect();
                if parts.is_empty() {
                    String::new()
                } else {
                    parts.join("*")
                }
            }
            (AlgebraKind::FinFun { points }, Mono::Point(p)) => format!("@{}", points[*p]),
            _ => panic!("monomial does not belong to this algebra"),
        }
    }

    /// Product of two basis monomials; `None` when it vanishes (distinct
    /// point masses multiply to zero).
    pub fn mono_mul(&self, a: &Mono, b: &Mono) -> Option<Mono> {
        match (a, b) {
            (Mono::Exp(x), Mono::Exp(y)) => {
                Some(Mono::Exp(x.iter().zip(y).map(|(p, q)| p + q).collect()))
            }
            (Mono::Point(p), Mono::Point(q)) => (p == q).then(|| Mono::Point(*p)),
            _ => panic!("mixed monomial kinds"),
        }
    }

    pub fn unit_mono(&self) -> Option<Mono> {
        match &self.kind {
            AlgebraKind::Poly { vars } => Some(Mono::Exp(vec![0; vars.len()])),
            AlgebraKind::FinFun { .. } => None,
        }
    }
}

/// An element of a module algebra in canonical form: a sorted monomial map
/// with nonzero scalar coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraElement {
    alg: AlgebraRef,
    terms: BTreeMap<Mono, Scalar>,
}

impl AlgebraElement {
    pub fn zero(alg: &AlgebraRef) -> Self {
        AlgebraElement {
            alg: alg.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// The algebra unit: the empty monomial (polynomials) or the sum of all
    /// point masses (functions).
    pub fn one(alg: &AlgebraRef) -> Self {
        let order = alg.order();
        match &alg.kind {
            AlgebraKind::Poly { vars } => Self::monomial(
                alg,
                Mono::Exp(vec![0; vars.len()]),
                Scalar::one(order),
            ),
            AlgebraKind::FinFun { points } => Self::from_terms(
                alg,
                (0..points.len()).map(|p| (Mono::Point(p), Scalar::one(order))),
            ),
        }
    }

    pub fn monomial(alg: &AlgebraRef, m: Mono, c: Scalar) -> Self {
        Self::from_terms(alg, [(m, c)])
    }

    /// The `i`-th variable (polynomial algebras).
    pub fn var(alg: &AlgebraRef, i: usize) -> Self {
        match &alg.kind {
            AlgebraKind::Poly { vars } => {
                let mut exps = vec![0; vars.len()];
                exps[i] = 1;
                Self::monomial(alg, Mono::Exp(exps), Scalar::one(alg.order()))
            }
            _ => panic!("variables exist only in polynomial algebras"),
        }
    }

    /// The point mass at the `i`-th point (function algebras).
    pub fn point(alg: &AlgebraRef, i: usize) -> Self {
        match &alg.kind {
            AlgebraKind::FinFun { .. } => {
                Self::monomial(alg, Mono::Point(i), Scalar::one(alg.order()))
            }
            _ => panic!("point masses exist only in function algebras"),
        }
    }

    pub fn from_terms(alg: &AlgebraRef, terms: impl IntoIterator<Item = (Mono, Scalar)>) -> Self {
        let mut map: BTreeMap<Mono, Scalar> = BTreeMap::new();
        for (m, c) in terms {
            let entry = map
                .entry(m)
                .or_insert_with(|| Scalar::zero(alg.order()));
            *entry = &*entry + &c;
        }
        map.retain(|_, c| !c.is_zero());
        AlgebraElement {
            alg: alg.clone(),
            terms: map,
        }
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.alg
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        assert!(Algebra::same(&self.alg, &other.alg), "mixed algebras");
        Self::from_terms(
            &self.alg,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AlgebraElement {
        AlgebraElement {
            alg: self.alg.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> AlgebraElement {
        Self::from_terms(
            &self.alg,
            self.terms.iter().map(|(m, c)| (m.clone(), c * s)),
        )
    }

    /// The classical (undeformed, commutative) product.
    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        assert!(Algebra::same(&self.alg, &other.alg), "mixed algebras");
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for (n, d) in &other.terms {
                if let Some(p) = self.alg.mono_mul(m, n) {
                    out.push((p, c * d));
                }
            }
        }
        Self::from_terms(&self.alg, out)
    }

    /// Partial derivative in the `i`-th variable (polynomial algebras).
    pub fn partial(&self, i: usize) -> AlgebraElement {
        let order = self.alg.order();
        let out = self.terms.iter().filter_map(|(m, c)| match m {
            Mono::Exp(exps) if exps[i] > 0 => {
                let mut e = exps.clone();
                e[i] -= 1;
                let factor = Scalar::from_ratio(exps[i] as i64, 1, order);
                Some((Mono::Exp(e), c * &factor))
            }
            Mono::Exp(_) => None,
            Mono::Point(_) => panic!("partial derivative on a function algebra"),
        });
        Self::from_terms(&self.alg, out.collect::<Vec<_>>())
    }

    fn word_act(&self, w: &Word) -> AlgebraElement {
        match (&self.alg.kind, w) {
            (AlgebraKind::Poly { .. }, Word::Monomial(exps)) => {
                let mut out = self.clone();
                for (i, e) in exps.iter().enumerate() {
                    for _ in 0..*e {
                        out = out.partial(i);
                    }
                }
                out
            }
            (AlgebraKind::FinFun { .. }, Word::Basis(g)) => {
                let moved = self.terms.iter().map(|(m, c)| match m {
                    Mono::Point(p) => (Mono::Point(self.alg.translate[*g][*p]), c.clone()),
                    _ => unreachable!(),
                });
                Self::from_terms(&self.alg, moved.collect::<Vec<_>>())
            }
            _ => panic!("word does not match the algebra's backend"),
        }
    }

    /// The Hopf action on the algebra (word action extended linearly).
    pub fn act(&self, xi: &HopfElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero(&self.alg);
        for (w, c) in xi.terms() {
            out = out.add(&self.word_act(w).scale(c));
        }
        out
    }

    /// Least `h`-power with a nonzero coefficient anywhere, if any.
    pub fn h_valuation(&self) -> Option<usize> {
        self.terms.values().filter_map(|c| c.h_valuation()).min()
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self
            .terms
            .iter()
            .map(|(m, c)| term_pieces(c, &self.alg.mono_name(m)));
        write!(f, "{}", join_terms(parts))
    }
}

/// How the Hopf algebra acts on a module's basis vectors.
///
/// Coefficients then ride along by the coproduct rule: primitive generators
/// differentiate coefficients (derivation form), finite-dimensional basis
/// words split by their coproduct over basis vector and coefficient.
#[derive(Debug, PartialEq, Eq)]
pub enum SpaceAction {
    /// `matrices[i][j][k]`: coefficient of `e_k` in (generator `i`) `|> e_j`.
    Derivation(Vec<Vec<Vec<AlgebraElement>>>),
    /// `matrices[w][j][k]`: coefficient of `e_k` in (basis word `w`) `|> e_j`.
    Table(Vec<Vec<Vec<AlgebraElement>>>),
}

/// A free module over a module algebra with a finite ordered basis and a
/// Hopf action.  Tensor products over the algebra are flattened: `factors`
/// lists the leaf spaces, and the basis is their product basis in row-major
/// order.
#[derive(Debug, PartialEq, Eq)]
pub struct Space {
    algebra: AlgebraRef,
    basis: Vec<String>,
    action: SpaceAction,
    factors: Vec<SpaceRef>,
}

pub type SpaceRef = Arc<Space>;

impl Space {
    /// A free module with explicit basis names and action.
    pub fn free(
        algebra: &AlgebraRef,
        basis: Vec<String>,
        action: SpaceAction,
    ) -> Result<SpaceRef, Error> {
        let rank = basis.len();
        if rank == 0 {
            return Err(Error::Invalid("a module needs at least one basis vector".into()));
        }
        let (rows, expected) = match (&action, &algebra.hopf().backend) {
            (SpaceAction::Derivation(m), Backend::AbelianPbw { generators }) => {
                (m, generators.len())
            }
            (SpaceAction::Table(m), Backend::FiniteDim(t)) => (m, t.names.len()),
            _ => {
                return Err(Error::Invalid(
                    "module action form does not match the backend".into(),
                ))
            }
        };
        if rows.len() != expected || rows.iter().any(|r| r.len() != rank)
            || rows.iter().flatten().any(|v| v.len() != rank)
        {
            return Err(Error::BadTable("module action has wrong shape".into()));
        }
        Ok(Arc::new(Space {
            algebra: algebra.clone(),
            basis,
            action,
            factors: Vec::new(),
        }))
    }

    /// The algebra viewed as the rank-1 free module over itself, with the
    /// action on the basis vector given by the counit.
    pub fn line(algebra: &AlgebraRef) -> SpaceRef {
        let hopf = algebra.hopf();
        let action = match &hopf.backend {
            Backend::AbelianPbw { generators } => SpaceAction::Derivation(vec![
                vec![vec![AlgebraElement::zero(algebra)]];
                generators.len()
            ]),
            Backend::FiniteDim(t) => SpaceAction::Table(
                (0..t.names.len())
                    .map(|i| {
                        let eps = HopfElement::basis(hopf, i).counit();
                        vec![vec![AlgebraElement::one(algebra).scale(&eps)]]
                    })
                    .collect(),
            ),
        };
        Arc::new(Space {
            algebra: algebra.clone(),
            basis: vec!["1".into()],
            action,
            factors: Vec::new(),
        })
    }

    /// Leaf factor list: the space itself when atomic.
    pub fn leaves(self_: &SpaceRef) -> Vec<SpaceRef> {
        if self_.factors.is_empty() {
            vec![self_.clone()]
        } else {
            self_.factors.clone()
        }
    }

    /// Tensor product over the algebra, flattened to leaf factors, with the
    /// derived action on the product basis.
    pub fn tensor(parts: &[SpaceRef]) -> SpaceRef {
        let leaves: Vec<SpaceRef> = parts.iter().flat_map(Space::leaves).collect();
        assert!(!leaves.is_empty());
        if leaves.len() == 1 {
            return leaves.into_iter().next().unwrap();
        }
        let algebra = leaves[0].algebra.clone();
        assert!(
            leaves.iter().all(|l| Algebra::same(&l.algebra, &algebra)),
            "tensor factors over different algebras"
        );
        let dims: Vec<usize> = leaves.iter().map(|l| l.basis.len()).collect();
        let total: usize = dims.iter().product();
        let basis: Vec<String> = (0..total)
            .map(|i| {
                unrank(&dims, i)
                    .iter()
                    .zip(&leaves)
                    .map(|(j, l)| l.basis[*j].clone())
                    .collect::<Vec<_>>()
                    .join("(x)")
            })
            .collect();
        let hopf = algebra.hopf().clone();
        let action = match &hopf.backend {
            Backend::AbelianPbw { generators } => {
                // Primitive generators act as derivations across slots.
                let mut mats = Vec::with_capacity(generators.len());
                for i in 0..generators.len() {
                    let mut rows = Vec::with_capacity(total);
                    for src in 0..total {
                        let tuple = unrank(&dims, src);
                        let mut row = vec![AlgebraElement::zero(&algebra); total];
                        for (slot, leaf) in leaves.iter().enumerate() {
                            let leaf_mat = match &leaf.action {
                                SpaceAction::Derivation(m) => m,
                                _ => unreachable!(),
                            };
                            for (k, entry) in leaf_mat[i][tuple[slot]].iter().enumerate() {
                                if entry.is_zero() {
                                    continue;
                                }
                                let mut dst = tuple.clone();
                                dst[slot] = k;
                                let dst = rank_of(&dims, &dst);
                                row[dst] = row[dst].add(entry);
                            }
                        }
                        rows.push(row);
                    }
                    mats.push(rows);
                }
                SpaceAction::Derivation(mats)
            }
            Backend::FiniteDim(t) => {
                // Spread each basis word over the slots by its iterated
                // coproduct, multiplying the leaf-table coefficients.
                let classical = ClassicalHopf(hopf.clone());
                let n_words = t.names.len();
                let mut mats = Vec::with_capacity(n_words);
                for wi in 0..n_words {
                    let spread = iterated_coproduct(
                        &classical,
                        &HopfElement::basis(&hopf, wi),
                        leaves.len(),
                    );
                    let mut rows = vec![vec![AlgebraElement::zero(&algebra); total]; total];
                    for (words, c) in spread.terms() {
                        for src in 0..total {
                            let tuple = unrank(&dims, src);
                            // accumulate tensor products of leaf-table rows
                            let mut partial: Vec<(Vec<usize>, AlgebraElement)> = vec![(
                                Vec::new(),
                                AlgebraElement::one(&algebra).scale(c),
                            )];
                            for (slot, leaf) in leaves.iter().enumerate() {
                                let leaf_mat = match &leaf.action {
                                    SpaceAction::Table(m) => m,
                                    _ => unreachable!(),
                                };
                                let g = match &words[slot] {
                                    Word::Basis(g) => *g,
                                    _ => unreachable!(),
                                };
                                let mut next = Vec::new();
                                for (prefix, coeff) in &partial {
                                    for (k, entry) in leaf_mat[g][tuple[slot]].iter().enumerate() {
                                        if entry.is_zero() {
                                            continue;
                                        }
                                        let mut p = prefix.clone();
                                        p.push(k);
                                        next.push((p, coeff.mul(entry)));
                                    }
                                }
                                partial = next;
                            }
                            for (dst_tuple, coeff) in partial {
                                let dst = rank_of(&dims, &dst_tuple);
                                rows[src][dst] = rows[src][dst].add(&coeff);
                            }
                        }
                    }
                    mats.push(rows);
                }
                SpaceAction::Table(mats)
            }
        };
        Arc::new(Space {
            algebra,
            basis,
            action,
            factors: leaves,
        })
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.algebra
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_name(&self, j: usize) -> &str {
        &self.basis[j]
    }

    pub fn same(a: &SpaceRef, b: &SpaceRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

fn unrank(dims: &[usize], mut i: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for slot in (0..dims.len()).rev() {
        out[slot] = i % dims[slot];
        i /= dims[slot];
    }
    out
}

fn rank_of(dims: &[usize], tuple: &[usize]) -> usize {
    let mut out = 0;
    for (slot, d) in dims.iter().enumerate() {
        out = out * d + tuple[slot];
    }
    out
}

/// An element of a free module: one algebra coefficient per basis vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleElement {
    space: SpaceRef,
    coeffs: Vec<AlgebraElement>,
}

impl ModuleElement {
    pub fn zero(space: &SpaceRef) -> Self {
        ModuleElement {
            space: space.clone(),
            coeffs: vec![AlgebraElement::zero(&space.algebra); space.rank()],
        }
    }

    pub fn basis_vector(space: &SpaceRef, j: usize) -> Self {
        let mut out = Self::zero(space);
        out.coeffs[j] = AlgebraElement::one(&space.algebra);
        out
    }

    pub fn from_coeffs(space: &SpaceRef, coeffs: Vec<AlgebraElement>) -> Self {
        assert_eq!(coeffs.len(), space.rank(), "coefficient count != rank");
        ModuleElement {
            space: space.clone(),
            coeffs,
        }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn coeff(&self, j: usize) -> &AlgebraElement {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(AlgebraElement::is_zero)
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        assert!(Space::same(&self.space, &other.space), "mixed spaces");
        ModuleElement {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &ModuleElement) -> ModuleElement {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModuleElement {
        ModuleElement {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(AlgebraElement::neg).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> ModuleElement {
        ModuleElement {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| a.scale(s)).collect(),
        }
    }

    /// Classical (commutative) module scaling by an algebra element.
    pub fn mul_alg(&self, a: &AlgebraElement) -> ModuleElement {
        ModuleElement {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c.mul(a)).collect(),
        }
    }

    fn generator_act(&self, i: usize) -> ModuleElement {
        let mats = match &self.space.action {
            SpaceAction::Derivation(m) => m,
            _ => panic!("generator action on a table-backed module"),
        };
        let mut out = Self::zero(&self.space);
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, entry) in mats[i][j].iter().enumerate() {
                if !entry.is_zero() {
                    out.coeffs[k] = out.coeffs[k].add(&entry.mul(a));
                }
            }
            out.coeffs[j] = out.coeffs[j].add(&a.partial(i));
        }
        out
    }

    fn word_act(&self, w: &Word) -> ModuleElement {
        match w {
            Word::Monomial(exps) => {
                let mut out = self.clone();
                for (i, e) in exps.iter().enumerate() {
                    for _ in 0..*e {
                        out = out.generator_act(i);
                    }
                }
                out
            }
            Word::Basis(_) => {
                let mats = match &self.space.action {
                    SpaceAction::Table(m) => m,
                    _ => panic!("table action on a derivation-backed module"),
                };
                let hopf = self.space.algebra.hopf();
                let spread = HopfElement::from_word(hopf, w.clone()).coproduct();
                let mut out = Self::zero(&self.space);
                for (words, c) in spread.terms() {
                    let g = match &words[0] {
                        Word::Basis(g) => *g,
                        _ => unreachable!(),
                    };
                    let second = HopfElement::from_word(hopf, words[1].clone());
                    for (j, a) in self.coeffs.iter().enumerate() {
                        if a.is_zero() {
                            continue;
                        }
                        let moved = a.act(&second);
                        for (k, entry) in mats[g][j].iter().enumerate() {
                            if !entry.is_zero() {
                                out.coeffs[k] =
                                    out.coeffs[k].add(&entry.mul(&moved).scale(c));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// The classical Hopf action: basis action combined with the coefficient
    /// action by the coproduct rule.
    pub fn act(&self, xi: &HopfElement) -> ModuleElement {
        let mut out = Self::zero(&self.space);
        for (w, c) in xi.terms() {
            out = out.add(&self.word_act(w).scale(c));
        }
        out
    }

    pub fn h_valuation(&self) -> Option<usize> {
        self.coeffs.iter().filter_map(|a| a.h_valuation()).min()
    }
}

impl fmt::Display for ModuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alg = &self.space.algebra;
        let mut parts = Vec::new();
        for (j, a) in self.coeffs.iter().enumerate() {
            for (m, c) in a.terms() {
                let mono = alg.mono_name(m);
                let atom = if mono.is_empty() {
                    self.space.basis_name(j).to_string()
                } else {
                    format!("{mono}*{}", self.space.basis_name(j))
                };
                parts.push(term_pieces(c, &atom));
            }
        }
        write!(f, "{}", join_terms(parts.into_iter()))
    }
}

/// A tensor over the scalars `K` (not over the algebra): each leg carries a
/// basis vector of its space together with one algebra monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KTensor {
    spaces: Vec<SpaceRef>,
    terms: BTreeMap<Vec<(usize, Mono)>, Scalar>,
}

impl KTensor {
    pub fn zero(spaces: Vec<SpaceRef>) -> Self {
        assert!(!spaces.is_empty());
        KTensor {
            spaces,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        spaces: Vec<SpaceRef>,
        terms: impl IntoIterator<Item = (Vec<(usize, Mono)>, Scalar)>,
    ) -> Self {
        let mut out = Self::zero(spaces);
        for (legs, c) in terms {
            assert_eq!(legs.len(), out.spaces.len(), "leg count != space count");
            out.insert(legs, c);
        }
        out
    }

    fn insert(&mut self, legs: Vec<(usize, Mono)>, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(legs.clone())
            .or_insert_with(|| Scalar::zero(c.order()));
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&legs);
        }
    }

    /// Outer product of module elements, one per leg.
    pub fn from_elements(parts: &[ModuleElement]) -> Self {
        assert!(!parts.is_empty());
        let spaces: Vec<SpaceRef> = parts.iter().map(|p| p.space.clone()).collect();
        let order = spaces[0].algebra.order();
        let mut rows: Vec<(Vec<(usize, Mono)>, Scalar)> = vec![(Vec::new(), Scalar::one(order))];
        for p in parts {
            let mut next = Vec::new();
            for (prefix, c) in &rows {
                for (j, a) in p.coeffs.iter().enumerate() {
                    for (m, d) in a.terms() {
                        let mut legs = prefix.clone();
                        legs.push((j, m.clone()));
                        next.push((legs, c * d));
                    }
                }
            }
            rows = next;
        }
        Self::from_terms(spaces, rows)
    }

    /// Canonical over-K representative of an over-A element: coefficients are
    /// parked on the last leg, earlier legs carry the bare basis vector
    /// (times the algebra unit, expanded when the unit is a sum).
    pub fn from_module(v: &ModuleElement) -> Self {
        let leaves = Space::leaves(&v.space);
        let parts_template: Vec<Vec<Mono>> = leaves
            .iter()
            .map(|l| match l.algebra.unit_mono() {
                Some(m) => vec![m],
                None => (0..l.algebra.dimension_hint()).map(Mono::Point).collect(),
            })
            .collect();
        let dims: Vec<usize> = leaves.iter().map(|l| l.rank()).collect();
        let alg = &v.space.algebra;
        let order = alg.order();
        let mut out = Self::zero(leaves.clone());
        for (flat, a) in v.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let tuple = unrank(&dims, flat);
            // expand unit monomials on all legs but the last
            let mut rows: Vec<(Vec<(usize, Mono)>, Scalar)> =
                vec![(Vec::new(), Scalar::one(order))];
            for (slot, choices) in parts_template.iter().enumerate().take(leaves.len() - 1) {
                let mut next = Vec::new();
                for (prefix, c) in &rows {
                    for m in choices {
                        let mut legs = prefix.clone();
                        legs.push((tuple[slot], m.clone()));
                        next.push((legs, c.clone()));
                    }
                }
                rows = next;
            }
            let last = leaves.len() - 1;
            for (prefix, c) in rows {
                for (m, d) in a.terms() {
                    let mut legs = prefix.clone();
                    legs.push((tuple[last], m.clone()));
                    out.insert(legs, &c * d);
                }
            }
        }
        out
    }

    pub fn spaces(&self) -> &[SpaceRef] {
        &self.spaces
    }

    pub fn rank(&self) -> usize {
        self.spaces.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<(usize, Mono)>, &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &KTensor) -> KTensor {
        let mut out = self.clone();
        for (legs, c) in &other.terms {
            out.insert(legs.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &KTensor) -> KTensor {
        self.add(&other.scale_rat(&BigRational::from_integer((-1).into())))
    }

    fn scale_rat(&self, r: &BigRational) -> KTensor {
        KTensor {
            spaces: self.spaces.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c.scale(r)))
                .collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> KTensor {
        let mut out = Self::zero(self.spaces.clone());
        for (legs, c) in &self.terms {
            out.insert(legs.clone(), c * s);
        }
        out
    }

    /// Act with a Hopf element on a single leg (the classical action of that
    /// leg's space).
    pub fn act_leg(&self, leg: usize, xi: &HopfElement) -> KTensor {
        let mut out = Self::zero(self.spaces.clone());
        let space = &self.spaces[leg];
        for (legs, c) in &self.terms {
            let (j, m) = &legs[leg];
            let mut v = ModuleElement::zero(space);
            v.coeffs[*j] = AlgebraElement::monomial(&space.algebra, m.clone(), c.clone());
            let moved = v.act(xi);
            for (k, a) in moved.coeffs.iter().enumerate() {
                for (m2, c2) in a.terms() {
                    let mut new_legs = legs.clone();
                    new_legs[leg] = (k, m2.clone());
                    out.insert(new_legs, c2.clone());
                }
            }
        }
        out
    }

    /// Act on a block of adjacent legs, spreading `xi` by the iterated
    /// coproduct of the supplied structure.
    pub fn act_block(&self, block: Range<usize>, xi: &HopfElement, ops: &dyn HopfOps) -> KTensor {
        let k = block.len();
        assert!(k >= 1, "empty block");
        if k == 1 {
            return self.act_leg(block.start, xi);
        }
        let spread = iterated_coproduct(ops, xi, k);
        let hopf = ops.hopf();
        let mut out = Self::zero(self.spaces.clone());
        for (words, c) in spread.terms() {
            let mut cur = self.scale(c);
            for (offset, w) in words.iter().enumerate() {
                cur = cur.act_leg(block.start + offset, &HopfElement::from_word(hopf, w.clone()));
            }
            out = out.add(&cur);
        }
        out
    }

    /// Multiply an algebra element into one leg (classical product).
    pub fn mul_leg(&self, leg: usize, a: &AlgebraElement) -> KTensor {
        let alg = &self.spaces[leg].algebra;
        let mut out = Self::zero(self.spaces.clone());
        for (legs, c) in &self.terms {
            let (j, m) = &legs[leg];
            for (n, d) in a.terms() {
                if let Some(p) = alg.mono_mul(m, n) {
                    let mut new_legs = legs.clone();
                    new_legs[leg] = (*j, p);
                    out.insert(new_legs, c * d);
                }
            }
        }
        out
    }

    /// Reorder legs: leg `j` of the result is leg `perm[j]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> KTensor {
        assert_eq!(perm.len(), self.rank());
        let spaces = perm.iter().map(|&p| self.spaces[p].clone()).collect();
        let mut out = Self::zero(spaces);
        for (legs, c) in &self.terms {
            let new_legs = perm.iter().map(|&p| legs[p].clone()).collect();
            out.insert(new_legs, c.clone());
        }
        out
    }

    /// Quotient to the tensor product over the algebra: multiply out all leg
    /// monomials alongside the product basis vector.
    pub fn project_classical(&self) -> ModuleElement {
        let target = Space::tensor(&self.spaces);
        let dims: Vec<usize> = self
            .spaces
            .iter()
            .flat_map(Space::leaves)
            .map(|l| l.rank())
            .collect();
        let alg = target.algebra().clone();
        let mut out = ModuleElement::zero(&target);
        for (legs, c) in &self.terms {
            let mut tuple = Vec::new();
            let mut coeff = AlgebraElement::one(&alg).scale(c);
            for (leg, space) in legs.iter().zip(&self.spaces) {
                // a composite leg contributes its whole index tuple
                let leaf_dims: Vec<usize> =
                    Space::leaves(space).iter().map(|l| l.rank()).collect();
                tuple.extend(unrank(&leaf_dims, leg.0));
                coeff = coeff.mul(&AlgebraElement::monomial(
                    &alg,
                    leg.1.clone(),
                    Scalar::one(alg.order()),
                ));
            }
            if coeff.is_zero() {
                continue;
            }
            let flat = rank_of(&dims, &tuple);
            out.coeffs[flat] = out.coeffs[flat].add(&coeff);
        }
        out
    }
}

impl fmt::Display for KTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.terms.iter().map(|(legs, c)| {
            let body = legs
                .iter()
                .zip(&self.spaces)
                .map(|((j, m), s)| {
                    let mono = s.algebra.mono_name(m);
                    if mono.is_empty() {
                        s.basis_name(*j).to_string()
                    } else {
                        format!("{mono}*{}", s.basis_name(*j))
                    }
                })
                .collect::<Vec<_>>()
                .join(" (x) ");
            term_pieces(c, &format!("({body})"))
        });
        write!(f, "{}", join_terms(parts))
    }
}

/// A working context: the Hopf structure in force, the optional twist that
/// turns products into star products, and the R-matrix controlling braidings.
///
/// The classical world has no twist and the trivial R-matrix; the deformed
/// world carries the twist and (by default) the R-matrix induced by it.
/// Check routines take a world so the same law is verified classically and
/// after deformation by the same code.
#[derive(Clone)]
pub struct World {
    ops: HopfHandle,
    twist: Option<Twist>,
    rmatrix: RMatrix,
}

impl World {
    pub fn classical(hopf: &HopfRef) -> World {
        World {
            ops: Arc::new(ClassicalHopf(hopf.clone())),
            twist: None,
            rmatrix: RMatrix::trivial(hopf),
        }
    }

    /// The deformed world of a twisted structure, with `R = F_21 F^{-1}`.
    pub fn deformed(d: &DeformedRef) -> World {
        let rmatrix =
            crate::twist::r_matrix_from_twist(d.twist(), &RMatrix::trivial(d.twist().hopf()));
        let ops: HopfHandle = d.clone();
        World {
            ops,
            twist: Some(d.twist().clone()),
            rmatrix,
        }
    }

    /// Same structure and products, but a different R-matrix (used to show
    /// that braided laws fail with the wrong braiding).
    pub fn with_rmatrix(&self, rmatrix: RMatrix) -> World {
        World {
            ops: self.ops.clone(),
            twist: self.twist.clone(),
            rmatrix,
        }
    }

    pub fn ops(&self) -> &dyn HopfOps {
        &*self.ops
    }

    pub fn handle(&self) -> &HopfHandle {
        &self.ops
    }

    pub fn hopf(&self) -> &HopfRef {
        self.ops.hopf()
    }

    pub fn twist(&self) -> Option<&Twist> {
        self.twist.as_ref()
    }

    pub fn is_deformed(&self) -> bool {
        self.twist.is_some()
    }

    pub fn rmatrix(&self) -> &RMatrix {
        &self.rmatrix
    }

    fn twist_inv_legs(&self) -> Option<Vec<(HopfElement, HopfElement, Scalar)>> {
        self.twist.as_ref().map(|t| tensor_legs(&t.f_inv))
    }

    /// The algebra product of this world: classical, or the star product
    /// `a * b = sum (fbar^a |> a)(fbar_a |> b)`.
    pub fn alg_mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        match self.twist_inv_legs() {
            None => a.mul(b),
            Some(legs) => {
                let mut out = AlgebraElement::zero(a.algebra());
                for (w1, w2, c) in &legs {
                    out = out.add(&a.act(w1).mul(&b.act(w2)).scale(c));
                }
                out
            }
        }
    }

    /// Left module product `a . v` of this world.
    pub fn left_mul(&self, a: &AlgebraElement, v: &ModuleElement) -> ModuleElement {
        match self.twist_inv_legs() {
            None => v.mul_alg(a),
            Some(legs) => {
                let mut out = ModuleElement::zero(v.space());
                for (w1, w2, c) in &legs {
                    out = out.add(&v.act(w2).mul_alg(&a.act(w1)).scale(c));
                }
                out
            }
        }
    }

    /// Right module product `v . a` of this world.
    pub fn right_mul(&self, v: &ModuleElement, a: &AlgebraElement) -> ModuleElement {
        match self.twist_inv_legs() {
            None => v.mul_alg(a),
            Some(legs) => {
                let mut out = ModuleElement::zero(v.space());
                for (w1, w2, c) in &legs {
                    out = out.add(&v.act(w1).mul_alg(&a.act(w2)).scale(c));
                }
                out
            }
        }
    }

    /// Tensor product over the algebra in this world.  Deformed tensor
    /// products are stored through their classical normal form: the twist
    /// inverse is applied to the factors and the result is the classical
    /// tensor product of the dressed factors.
    pub fn tensor_a(&self, v: &ModuleElement, w: &ModuleElement) -> ModuleElement {
        match self.twist_inv_legs() {
            None => classical_tensor(v, w),
            Some(legs) => {
                let mut out = None;
                for (w1, w2, c) in &legs {
                    let term = classical_tensor(&v.act(w1), &w.act(w2)).scale(c);
                    out = Some(match out {
                        None => term,
                        Some(prev) => term.add(&prev),
                    });
                }
                out.expect("twist has at least one term")
            }
        }
    }

    /// Quotient an over-K tensor to the over-A tensor product of this world.
    /// Classically this multiplies the legs out; in the deformed world the
    /// legs are first dressed with the twist inverse, one boundary at a time
    /// from the left.
    pub fn project(&self, t: &KTensor) -> ModuleElement {
        let mut cur = t.clone();
        if let Some(tw) = &self.twist {
            let classical = ClassicalHopf(self.hopf().clone());
            let legs = tensor_legs(&tw.f_inv);
            for j in 1..t.rank() {
                let mut next = KTensor::zero(cur.spaces().to_vec());
                for (w1, w2, c) in &legs {
                    next = next.add(
                        &cur.act_block(0..j, w1, &classical)
                            .act_leg(j, w2)
                            .scale(c),
                    );
                }
                cur = next;
            }
        }
        cur.project_classical()
    }

    /// Section of [`World::project`]: lift an over-A element to an over-K
    /// tensor on the leaf factors.  In the deformed world the classical lift
    /// is dressed with the twist, boundaries applied right to left.
    pub fn lift(&self, v: &ModuleElement) -> KTensor {
        let mut cur = KTensor::from_module(v);
        if let Some(tw) = &self.twist {
            let classical = ClassicalHopf(self.hopf().clone());
            let legs = tensor_legs(&tw.f);
            for j in (1..cur.rank()).rev() {
                let mut next = KTensor::zero(cur.spaces().to_vec());
                for (w1, w2, c) in &legs {
                    next = next.add(
                        &cur.act_block(0..j, w1, &classical)
                            .act_leg(j, w2)
                            .scale(c),
                    );
                }
                cur = next;
            }
        }
        cur
    }
}

/// Classical tensor product over the algebra into the flattened target space.
pub fn classical_tensor(v: &ModuleElement, w: &ModuleElement) -> ModuleElement {
    let target = Space::tensor(&[v.space().clone(), w.space().clone()]);
    let wr = w.space().rank();
    let mut out = ModuleElement::zero(&target);
    for (j1, a1) in v.coeffs().iter().enumerate() {
        if a1.is_zero() {
            continue;
        }
        for (j2, a2) in w.coeffs().iter().enumerate() {
            if a2.is_zero() {
                continue;
            }
            let flat = j1 * wr + j2;
            out.coeffs[flat] = out.coeffs[flat].add(&a1.mul(a2));
        }
    }
    out
}

/// Verify the module-algebra laws for the world's product: associativity,
/// unitality, that the Hopf action is an action, and that it spreads over
/// products by the world's coproduct.
pub fn module_algebra_check(
    world: &World,
    alg: &AlgebraRef,
    hopf_probes: &[HopfElement],
    alg_probes: &[AlgebraElement],
) -> CheckReport {
    let ops = world.ops();
    let one = AlgebraElement::one(alg);
    let mut report = CheckReport::new();

    let pairs = alg_probes.len() * alg_probes.len();
    report.run("assoc", pairs * alg_probes.len(), || {
        for a in alg_probes {
            for b in alg_probes {
                let ab = world.alg_mul(a, b);
                for c in alg_probes {
                    let lhs = world.alg_mul(&ab, c);
                    let rhs = world.alg_mul(a, &world.alg_mul(b, c));
                    if lhs != rhs {
                        return Some(Witness::new(
                            format!("a = {a}, b = {b}, c = {c}"),
                            &lhs,
                            &rhs,
                        ));
                    }
                }
            }
        }
        None
    });

    report.run("unit", alg_probes.len(), || {
        alg_probes.iter().find_map(|a| {
            let l = world.alg_mul(&one, a);
            let r = world.alg_mul(a, &one);
            if &l != a {
                return Some(Witness::new(format!("1 * ({a})"), &l, a));
            }
            if &r != a {
                return Some(Witness::new(format!("({a}) * 1"), &r, a));
            }
            None
        })
    });

    report.run("action.assoc", hopf_probes.len() * hopf_probes.len(), || {
        for xi in hopf_probes {
            for zeta in hopf_probes {
                for a in alg_probes {
                    let lhs = a.act(zeta).act(xi);
                    let rhs = a.act(&xi.mul(zeta));
                    if lhs != rhs {
                        return Some(Witness::new(
                            format!("xi = {xi}, zeta = {zeta}, a = {a}"),
                            &lhs,
                            &rhs,
                        ));
                    }
                }
            }
        }
        None
    });

    report.run("action.unit", alg_probes.len(), || {
        let unit = HopfElement::one(alg.hopf());
        alg_probes.iter().find_map(|a| {
            let l = a.act(&unit);
            (&l != a).then(|| Witness::new(format!("1_H |> ({a})"), &l, a))
        })
    });

    report.run("covariance", hopf_probes.len() * pairs, || {
        for xi in hopf_probes {
            let spread = ops.coproduct(xi);
            for a in alg_probes {
                for b in alg_probes {
                    let lhs = world.alg_mul(a, b).act(xi);
                    let mut rhs = AlgebraElement::zero(alg);
                    for (words, c) in spread.terms() {
                        let xa = a.act(&HopfElement::from_word(alg.hopf(), words[0].clone()));
                        let xb = b.act(&HopfElement::from_word(alg.hopf(), words[1].clone()));
                        rhs = rhs.add(&world.alg_mul(&xa, &xb).scale(c));
                    }
                    if lhs != rhs {
                        return Some(Witness::new(
                            format!("xi = {xi}, a = {a}, b = {b}"),
                            &lhs,
                            &rhs,
                        ));
                    }
                }
            }
        }
        None
    });

    report.run("unit.act", hopf_probes.len(), || {
        hopf_probes.iter().find_map(|xi| {
            let lhs = one.act(xi);
            let rhs = one.scale(&xi.counit());
            (lhs != rhs).then(|| Witness::new(format!("xi = {xi}"), &lhs, &rhs))
        })
    });

    report
}

/// Verify that the world's product is quasi-commutative with respect to its
/// R-matrix: `a b = (Rbar^a |> b)(Rbar_a |> a)`.
pub fn quasi_commutativity_check(world: &World, alg_probes: &[AlgebraElement]) -> CheckReport {
    let legs = world.rmatrix().inverse_legs();
    let mut report = CheckReport::new();
    report.run(
        "quasicomm",
        alg_probes.len() * alg_probes.len(),
        || {
            for a in alg_probes {
                for b in alg_probes {
                    let lhs = world.alg_mul(a, b);
                    let mut rhs = AlgebraElement::zero(a.algebra());
                    for (r1, r2, c) in &legs {
                        rhs = rhs.add(&world.alg_mul(&b.act(r1), &a.act(r2)).scale(c));
                    }
                    if lhs != rhs {
                        return Some(Witness::new(format!("a = {a}, b = {b}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );
    report
}

/// Verify that twisting the star product back with the twist itself recovers
/// the classical product: `a b = sum (f^a |> a) * (f_a |> b)`.
pub fn star_dequantize_check(world: &World, alg_probes: &[AlgebraElement]) -> CheckReport {
    let mut report = CheckReport::new();
    let Some(tw) = world.twist() else {
        report.skip("dequantize", "needs a deformed world");
        return report;
    };
    let legs = tensor_legs(&tw.f);
    report.run(
        "dequantize",
        alg_probes.len() * alg_probes.len(),
        || {
            for a in alg_probes {
                for b in alg_probes {
                    let lhs = a.mul(b);
                    let mut rhs = AlgebraElement::zero(a.algebra());
                    for (w1, w2, c) in &legs {
                        rhs = rhs.add(&world.alg_mul(&a.act(w1), &b.act(w2)).scale(c));
                    }
                    if lhs != rhs {
                        return Some(Witness::new(format!("a = {a}, b = {b}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );
    report
}

/// Verify the bimodule laws of the world's module products over its algebra
/// product, the Hopf action on the module, and its covariance.
pub fn module_check(
    world: &World,
    hopf_probes: &[HopfElement],
    alg_probes: &[AlgebraElement],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let ops = world.ops();
    let hopf = world.hopf().clone();
    let mut report = CheckReport::new();

    report.run("action.assoc", hopf_probes.len() * hopf_probes.len(), || {
        for xi in hopf_probes {
            for zeta in hopf_probes {
                for v in elem_probes {
                    let lhs = v.act(zeta).act(xi);
                    let rhs = v.act(&xi.mul(zeta));
                    if lhs != rhs {
                        return Some(Witness::new(
                            format!("xi = {xi}, zeta = {zeta}, v = {v}"),
                            &lhs,
                            &rhs,
                        ));
                    }
                }
            }
        }
        None
    });

    report.run("action.unit", elem_probes.len(), || {
        let unit = HopfElement::one(&hopf);
        elem_probes.iter().find_map(|v| {
            let l = v.act(&unit);
            (&l != v).then(|| Witness::new(format!("1_H |> ({v})"), &l, v))
        })
    });

    report.run("unit", elem_probes.len(), || {
        let one = AlgebraElement::one(elem_probes[0].space().algebra());
        elem_probes.iter().find_map(|v| {
            let l = world.left_mul(&one, v);
            let r = world.right_mul(v, &one);
            if &l != v {
                return Some(Witness::new(format!("1 . ({v})"), &l, v));
            }
            if &r != v {
                return Some(Witness::new(format!("({v}) . 1"), &r, v));
            }
            None
        })
    });

    report.run(
        "assoc.left",
        alg_probes.len() * alg_probes.len() * elem_probes.len(),
        || {
            for a in alg_probes {
                for b in alg_probes {
                    let ab = world.alg_mul(a, b);
                    for v in elem_probes {
                        let lhs = world.left_mul(a, &world.left_mul(b, v));
                        let rhs = world.left_mul(&ab, v);
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("a = {a}, b = {b}, v = {v}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "assoc.right",
        alg_probes.len() * alg_probes.len() * elem_probes.len(),
        || {
            for a in alg_probes {
                for b in alg_probes {
                    let ab = world.alg_mul(a, b);
                    for v in elem_probes {
                        let lhs = world.right_mul(&world.right_mul(v, a), b);
                        let rhs = world.right_mul(v, &ab);
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("a = {a}, b = {b}, v = {v}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "bimodule",
        alg_probes.len() * alg_probes.len() * elem_probes.len(),
        || {
            for a in alg_probes {
                for b in alg_probes {
                    for v in elem_probes {
                        let lhs = world.right_mul(&world.left_mul(a, v), b);
                        let rhs = world.left_mul(a, &world.right_mul(v, b));
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("a = {a}, b = {b}, v = {v}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "covariance.left",
        hopf_probes.len() * alg_probes.len() * elem_probes.len(),
        || {
            for xi in hopf_probes {
                let spread = ops.coproduct(xi);
                for a in alg_probes {
                    for v in elem_probes {
                        let lhs = world.left_mul(a, v).act(xi);
                        let mut rhs = ModuleElement::zero(v.space());
                        for (words, c) in spread.terms() {
                            let xa = a.act(&HopfElement::from_word(&hopf, words[0].clone()));
                            let xv = v.act(&HopfElement::from_word(&hopf, words[1].clone()));
                            rhs = rhs.add(&world.left_mul(&xa, &xv).scale(c));
                        }
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("xi = {xi}, a = {a}, v = {v}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "covariance.right",
        hopf_probes.len() * alg_probes.len() * elem_probes.len(),
        || {
            for xi in hopf_probes {
                let spread = ops.coproduct(xi);
                for a in alg_probes {
                    for v in elem_probes {
                        let lhs = world.right_mul(v, a).act(xi);
                        let mut rhs = ModuleElement::zero(v.space());
                        for (words, c) in spread.terms() {
                            let xv = v.act(&HopfElement::from_word(&hopf, words[0].clone()));
                            let xa = a.act(&HopfElement::from_word(&hopf, words[1].clone()));
                            rhs = rhs.add(&world.right_mul(&xv, &xa).scale(c));
                        }
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("xi = {xi}, a = {a}, v = {v}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );

    report
}

/// Verify quasi-commutativity between the world's algebra and module
/// products: `a . v = (Rbar^a |> v) . (Rbar_a |> a)`.
pub fn module_quasi_commutativity_check(
    world: &World,
    alg_probes: &[AlgebraElement],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let legs = world.rmatrix().inverse_legs();
    let mut report = CheckReport::new();
    report.run(
        "quasicomm.module",
        alg_probes.len() * elem_probes.len(),
        || {
            for a in alg_probes {
                for v in elem_probes {
                    let lhs = world.left_mul(a, v);
                    let mut rhs = ModuleElement::zero(v.space());
                    for (r1, r2, c) in &legs {
                        rhs = rhs.add(&world.right_mul(&v.act(r1), &a.act(r2)).scale(c));
                    }
                    if lhs != rhs {
                        return Some(Witness::new(format!("a = {a}, v = {v}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );
    report
}

/// Verify that the world's module products dequantize: the classical scaling
/// is recovered from the deformed one through the twist.
pub fn module_dequantize_check(
    world: &World,
    alg_probes: &[AlgebraElement],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    let Some(tw) = world.twist() else {
        report.skip("dequantize.module", "needs a deformed world");
        return report;
    };
    let legs = tensor_legs(&tw.f);
    report.run(
        "dequantize.module",
        alg_probes.len() * elem_probes.len(),
        || {
            for a in alg_probes {
                for v in elem_probes {
                    let lhs = v.mul_alg(a);
                    let mut rhs = ModuleElement::zero(v.space());
                    for (w1, w2, c) in &legs {
                        rhs = rhs.add(&world.left_mul(&a.act(w1), &v.act(w2)).scale(c));
                    }
                    if lhs != rhs {
                        return Some(Witness::new(format!("a = {a}, v = {v}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );
    report
}

/// Verify that the world's tensor product over the algebra is well defined
/// on the quotient — `(v . a) (x) w = v (x) (a . w)` — and associative on
/// flattened spaces.
pub fn tensor_quotient_check(
    world: &World,
    v_probes: &[ModuleElement],
    alg_probes: &[AlgebraElement],
    w_probes: &[ModuleElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    report.run(
        "quotient",
        v_probes.len() * alg_probes.len() * w_probes.len(),
        || {
            for v in v_probes {
                for a in alg_probes {
                    for w in w_probes {
                        let lhs = world.tensor_a(&world.right_mul(v, a), w);
                        let rhs = world.tensor_a(v, &world.left_mul(a, w));
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("v = {v}, a = {a}, w = {w}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );
    report.run(
        "assoc",
        v_probes.len() * w_probes.len() * w_probes.len(),
        || {
            for u in v_probes {
                for v in w_probes {
                    for w in w_probes {
                        let lhs = world.tensor_a(&world.tensor_a(u, v), w);
                        let rhs = world.tensor_a(u, &world.tensor_a(v, w));
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("u = {u}, v = {v}, w = {w}"),
                                &lhs,
                                &rhs,
                            ));
                        }
                    }
                }
            }
            None
        },
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::{default_probes, FiniteDimTables, HopfAlgebra};
    use crate::scalar::rat;
    use crate::twist::DeformedHopf;
    use proptest::prelude::*;

    fn pbw2(order: usize) -> HopfRef {
        HopfAlgebra::abelian_pbw(vec!["X1".into(), "X2".into()], order)
    }

    fn poly2(order: usize) -> AlgebraRef {
        Algebra::poly(&pbw2(order), vec!["x1".into(), "x2".into()]).unwrap()
    }

    fn moyal_world(order: usize) -> (AlgebraRef, World) {
        let alg = poly2(order);
        let h = alg.hopf().clone();
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let t = crate::hopf::HopfTensor::from_legs(&[x1, x2]).scale(&Scalar::h_power(1, order));
        let tw = Twist::new(
            crate::hopf::HopfTensor::exp(&t).unwrap(),
            crate::hopf::HopfTensor::exp(&t.scale(&-&Scalar::one(order))).unwrap(),
        );
        let d: DeformedRef = Arc::new(DeformedHopf::new(tw));
        (alg, World::deformed(&d))
    }

    fn klein() -> HopfRef {
        let mul = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
        HopfAlgebra::finite_dim(FiniteDimTables::group_algebra(names, mul, 0), 0).unwrap()
    }

    fn klein_world() -> (AlgebraRef, World) {
        let h = klein();
        let alg = Algebra::fin_fun(&h).unwrap();
        let one = HopfElement::one(&h);
        let u = HopfElement::basis(&h, 1);
        let w = HopfElement::basis(&h, 2);
        let half = Scalar::from_ratio(1, 2, 0);
        let f = crate::hopf::HopfTensor::from_legs(&[one.clone(), one.clone()])
            .add(&crate::hopf::HopfTensor::from_legs(&[one.clone(), w.clone()]))
            .add(&crate::hopf::HopfTensor::from_legs(&[u.clone(), one]))
            .sub(&crate::hopf::HopfTensor::from_legs(&[u, w]))
            .scale(&half);
        let tw = Twist::new(f.clone(), f);
        let d: DeformedRef = Arc::new(DeformedHopf::new(tw));
        (alg, World::deformed(&d))
    }

    /// Rank-2 module over the plane: `X1 |> e1 = e2`, everything else kills
    /// the basis.
    fn moyal_module(alg: &AlgebraRef) -> SpaceRef {
        let zero = AlgebraElement::zero(alg);
        let one = AlgebraElement::one(alg);
        let action = SpaceAction::Derivation(vec![
            vec![vec![zero.clone(), one], vec![zero.clone(), zero.clone()]],
            vec![
                vec![zero.clone(), zero.clone()],
                vec![zero.clone(), zero.clone()],
            ],
        ]);
        Space::free(alg, vec!["e1".into(), "e2".into()], action).unwrap()
    }

    fn poly_probes(alg: &AlgebraRef) -> Vec<AlgebraElement> {
        let x1 = AlgebraElement::var(alg, 0);
        let x2 = AlgebraElement::var(alg, 1);
        vec![
            AlgebraElement::one(alg),
            x1.clone(),
            x2.clone(),
            x1.mul(&x2),
            x1.mul(&x1).add(&x2.scale(&Scalar::from_ratio(3, 1, alg.order()))),
        ]
    }

    #[test]
    fn polynomial_product_and_display() {
        let alg = poly2(1);
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let p = x1.mul(&x1).mul(&x2).add(&AlgebraElement::one(&alg).scale(&Scalar::h_power(1, 1)));
        assert_eq!(p.to_string(), "h + x1^2*x2");
    }

    #[test]
    fn partial_action_uses_falling_factorials() {
        let alg = poly2(0);
        let h = alg.hopf().clone();
        let x1 = AlgebraElement::var(&alg, 0);
        let cube = x1.mul(&x1).mul(&x1);
        let xi = HopfElement::from_word(&h, Word::Monomial(vec![2, 0]));
        assert_eq!(
            cube.act(&xi),
            x1.scale(&Scalar::from_ratio(6, 1, 0))
        );
        let x2 = AlgebraElement::var(&alg, 1);
        let mixed = HopfElement::from_word(&h, Word::Monomial(vec![1, 1]));
        assert_eq!(x1.mul(&x2).act(&mixed), AlgebraElement::one(&alg));
    }

    #[test]
    fn translation_action_matches_hand_values() {
        let h = klein();
        let alg = Algebra::fin_fun(&h).unwrap();
        let u = HopfElement::basis(&h, 1);
        // u |> point(1) = point(1 * u^-1) = point(u)
        assert_eq!(
            AlgebraElement::point(&alg, 0).act(&u),
            AlgebraElement::point(&alg, 1)
        );
        // translation fixes the constant function
        assert_eq!(
            AlgebraElement::one(&alg).act(&u),
            AlgebraElement::one(&alg)
        );
        let world = World::classical(&h);
        let points: Vec<_> = (0..4).map(|p| AlgebraElement::point(&alg, p)).collect();
        let probes = default_probes(&h, 0);
        let report = module_algebra_check(&world, &alg, &probes, &points);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn moyal_star_product_frozen_values() {
        let (alg, world) = moyal_world(2);
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let minus_h = AlgebraElement::one(&alg).scale(&Scalar::monomial(rat(-1, 1), 1, 2));
        assert_eq!(world.alg_mul(&x1, &x2), x1.mul(&x2).add(&minus_h));
        assert_eq!(world.alg_mul(&x2, &x1), x1.mul(&x2));
        // the commutator is a central constant of order h
        let comm = world.alg_mul(&x1, &x2).sub(&world.alg_mul(&x2, &x1));
        assert_eq!(comm, minus_h);
        assert_eq!(comm.h_valuation(), Some(1));
    }

    #[test]
    fn klein_star_product_frozen_values() {
        let (alg, world) = klein_world();
        let d1 = AlgebraElement::point(&alg, 0);
        let du = AlgebraElement::point(&alg, 1);
        let half = Scalar::from_ratio(1, 2, 0);
        assert_eq!(world.alg_mul(&d1, &du), du.scale(&half));
        assert_eq!(world.alg_mul(&du, &d1), d1.scale(&half));
        // noncommutative already at order zero, yet quasi-commutative for R
        let report = quasi_commutativity_check(
            &world,
            &(0..4)
                .map(|p| AlgebraElement::point(&alg, p))
                .collect::<Vec<_>>(),
        );
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn moyal_star_laws_and_dequantization() {
        let (alg, world) = moyal_world(2);
        let probes = poly_probes(&alg);
        let hprobes = default_probes(alg.hopf(), 2);
        let report = module_algebra_check(&world, &alg, &hprobes, &probes);
        assert!(report.passed(), "{report}");
        let report = quasi_commutativity_check(&world, &probes);
        assert!(report.passed(), "{report}");
        let report = star_dequantize_check(&world, &probes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn trivial_r_matrix_breaks_star_quasi_commutativity_at_order_h() {
        let (alg, world) = moyal_world(2);
        let bad = world.with_rmatrix(RMatrix::trivial(alg.hopf()));
        let probes = poly_probes(&alg);
        let report = quasi_commutativity_check(&bad, &probes);
        assert!(!report.passed());
        // with the trivial braiding the defect is the star commutator: order h
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let defect = bad.alg_mul(&x1, &x2).sub(&bad.alg_mul(&x2, &x1));
        assert_eq!(defect.h_valuation(), Some(1));
    }

    #[test]
    fn tensor_space_derives_actions() {
        let alg = poly2(1);
        let v = moyal_module(&alg);
        let line = Space::line(&alg);
        let vw = Space::tensor(&[v.clone(), line.clone()]);
        assert_eq!(vw.rank(), 2);
        assert_eq!(vw.basis_name(0), "e1(x)1");
        // X1 |> (x1 e1 (x) 1) = x1 e2 (x) 1 + e1 (x) 1  (matrix part + Leibniz)
        let h = alg.hopf().clone();
        let x1p = AlgebraElement::var(&alg, 0);
        let e1 = ModuleElement::from_coeffs(
            &vw,
            vec![x1p.clone(), AlgebraElement::zero(&alg)],
        );
        let moved = e1.act(&HopfElement::generator(&h, 0));
        let expected = ModuleElement::from_coeffs(&vw, vec![AlgebraElement::one(&alg), x1p]);
        assert_eq!(moved, expected);
    }

    #[test]
    fn module_laws_classical_and_star() {
        let (alg, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let probes = poly_probes(&alg);
        let hprobes = default_probes(alg.hopf(), 2);
        let x1 = AlgebraElement::var(&alg, 0);
        let elems = vec![
            ModuleElement::basis_vector(&v, 0),
            ModuleElement::basis_vector(&v, 1).mul_alg(&x1),
            ModuleElement::basis_vector(&v, 0)
                .add(&ModuleElement::basis_vector(&v, 1).mul_alg(&probes[3])),
        ];
        let classical = World::classical(alg.hopf());
        for w in [&classical, &world] {
            let report = module_check(w, &hprobes, &probes, &elems);
            assert!(report.passed(), "{report}");
            let report = module_quasi_commutativity_check(w, &probes, &elems);
            assert!(report.passed(), "{report}");
        }
        let report = module_dequantize_check(&world, &probes, &elems);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn klein_module_laws() {
        let (alg, world) = klein_world();
        let zero = AlgebraElement::zero(&alg);
        let one = AlgebraElement::one(&alg);
        // u swaps the basis, w negates the swap; consistent abelian action
        let id = vec![
            vec![one.clone(), zero.clone()],
            vec![zero.clone(), one.clone()],
        ];
        let swap = vec![
            vec![zero.clone(), one.clone()],
            vec![one.clone(), zero.clone()],
        ];
        let neg_swap = vec![
            vec![zero.clone(), one.neg()],
            vec![one.neg(), zero.clone()],
        ];
        let neg_id = vec![
            vec![one.neg(), zero.clone()],
            vec![zero.clone(), one.neg()],
        ];
        let v = Space::free(
            &alg,
            vec!["e1".into(), "e2".into()],
            SpaceAction::Table(vec![id, swap, neg_swap, neg_id]),
        )
        .unwrap();
        let points: Vec<_> = (0..4).map(|p| AlgebraElement::point(&alg, p)).collect();
        let hprobes = default_probes(alg.hopf(), 0);
        let elems = vec![
            ModuleElement::basis_vector(&v, 0),
            ModuleElement::basis_vector(&v, 1).mul_alg(&points[2]),
        ];
        for w in [&World::classical(alg.hopf()), &world] {
            let report = module_check(w, &hprobes, &points, &elems);
            assert!(report.passed(), "{report}");
        }
        let report = module_quasi_commutativity_check(&world, &points, &elems);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn tensor_quotient_and_associativity() {
        let (alg, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let v_probes = vec![
            ModuleElement::basis_vector(&v, 0).mul_alg(&x1),
            ModuleElement::basis_vector(&v, 1),
        ];
        let w_probes = vec![
            ModuleElement::basis_vector(&Space::line(&alg), 0).mul_alg(&x2),
            ModuleElement::basis_vector(&Space::line(&alg), 0).mul_alg(&x1.mul(&x1)),
        ];
        let alg_probes = vec![x1.clone(), x1.mul(&x2)];
        for w in [&World::classical(alg.hopf()), &world] {
            let report = tensor_quotient_check(w, &v_probes, &alg_probes, &w_probes);
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn project_lift_roundtrip() {
        let (alg, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let vw = Space::tensor(&[v.clone(), Space::line(&alg)]);
        let elem = ModuleElement::from_coeffs(&vw, vec![x1.mul(&x2), x2.clone()]);
        for w in [&World::classical(alg.hopf()), &world] {
            assert_eq!(w.project(&w.lift(&elem)), elem);
        }
        // three factors
        let vvw = Space::tensor(&[v.clone(), v.clone(), Space::line(&alg)]);
        let elem3 = ModuleElement::from_coeffs(
            &vvw,
            (0..4)
                .map(|i| {
                    if i == 1 {
                        x1.clone()
                    } else if i == 2 {
                        x2.mul(&x2)
                    } else {
                        AlgebraElement::zero(&alg)
                    }
                })
                .collect(),
        );
        for w in [&World::classical(alg.hopf()), &world] {
            assert_eq!(w.project(&w.lift(&elem3)), elem3);
        }
    }

    #[test]
    fn klein_project_lift_roundtrip() {
        let (alg, world) = klein_world();
        let vw = Space::tensor(&[Space::line(&alg), Space::line(&alg)]);
        let elem = ModuleElement::from_coeffs(
            &vw,
            vec![AlgebraElement::point(&alg, 1).add(&AlgebraElement::point(&alg, 2))],
        );
        for w in [&World::classical(alg.hopf()), &world] {
            assert_eq!(w.project(&w.lift(&elem)), elem);
        }
    }

    #[test]
    fn block_action_spreads_by_coproduct() {
        let (alg, _world) = moyal_world(1);
        let h = alg.hopf().clone();
        let v = moyal_module(&alg);
        let x1 = AlgebraElement::var(&alg, 0);
        let e1x1 = ModuleElement::basis_vector(&v, 0).mul_alg(&x1);
        let e2 = ModuleElement::basis_vector(&v, 1);
        let t = KTensor::from_elements(&[e1x1.clone(), e2.clone()]);
        let classical = ClassicalHopf(h.clone());
        let moved = t.act_block(0..2, &HopfElement::generator(&h, 0), &classical);
        // X1 acts as a derivation across the two legs
        let expected = KTensor::from_elements(&[e1x1.act(&HopfElement::generator(&h, 0)), e2]);
        assert_eq!(moved, expected);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn star_product_is_associative_on_random_polynomials(
            coeffs in proptest::collection::vec((-3i64..4, 0u32..3, 0u32..3), 1..4),
            more in proptest::collection::vec((-3i64..4, 0u32..3, 0u32..3), 1..4),
            third in proptest::collection::vec((-3i64..4, 0u32..3, 0u32..3), 1..4),
        ) {
            let (alg, world) = moyal_world(2);
            let build = |terms: &[(i64, u32, u32)]| {
                AlgebraElement::from_terms(
                    &alg,
                    terms.iter().map(|(c, e1, e2)| {
                        (Mono::Exp(vec![*e1, *e2]), Scalar::from_ratio(*c, 1, 2))
                    }),
                )
            };
            let a = build(&coeffs);
            let b = build(&more);
            let c = build(&third);
            let lhs = world.alg_mul(&world.alg_mul(&a, &b), &c);
            let rhs = world.alg_mul(&a, &world.alg_mul(&b, &c));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
