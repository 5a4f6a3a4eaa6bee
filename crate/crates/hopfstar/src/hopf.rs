//! Hopf algebras over `K = Q[h]/(h^{N+1})`: backends, elements, tensor powers
//! and a structural axiom checker.
//!
//! Two backends cover every instance in scope:
//!
//! * **Finite-dimensional**: a finite basis with explicit structure-constant
//!   tables for product, coproduct, counit and antipode (e.g. the group
//!   algebra of `Z2 x Z2`).
//! * **Abelian PBW**: finitely many pairwise-commuting primitive generators
//!   `X1..Xm`; elements are polynomials in the generators, the coproduct is
//!   determined by `Delta(Xi) = Xi (x) 1 + 1 (x) Xi`, the counit kills the
//!   generators, and the antipode negates them (so it acts as `(-1)^degree`
//!   on monomials).
//!
//! [`HopfTensor`] holds elements of `H^{(x) r}` for `r <= 4` as sums of basis
//! words with one coefficient per term, multiplied leg-wise.  All structure
//! maps on tensors are expressed through a small set of leg operations
//! (coproduct of a leg, antipode of a leg, contraction of adjacent legs,
//! permutation, embedding), which the twist and braiding layers reuse.
//!
//! The deformed structure `H^F` implements the same [`HopfOps`] interface, so
//! [`hopf_check`] verifies the classical and the twisted structure with the
//! same code.

use crate::check::{CheckReport, Witness};
use crate::error::Error;
use crate::scalar::{join_terms, term_pieces, Scalar};
use num::{BigInt, BigRational, One};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Basis word of a Hopf algebra: a table index for the finite-dimensional
/// backend, or an exponent vector of a generator monomial for the PBW one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Word {
    Basis(usize),
    Monomial(Vec<u32>),
}

/// Structure-constant tables of a finite-dimensional Hopf algebra.
///
/// All scalars must share the ambient truncation order.  Sparse sums are
/// stored as `(index, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDimTables {
    pub names: Vec<String>,
    /// `product[i][j]` = coefficients of `b_i * b_j`.
    pub product: Vec<Vec<Vec<(usize, Scalar)>>>,
    /// Coefficients of the unit element `1_H`.
    pub unit: Vec<(usize, Scalar)>,
    /// `coproduct[i]` = terms of `Delta(b_i)` as `(j, k, c)` meaning `c * b_j (x) b_k`.
    pub coproduct: Vec<Vec<(usize, usize, Scalar)>>,
    pub counit: Vec<Scalar>,
    /// `antipode[i]` = coefficients of `S(b_i)`.
    pub antipode: Vec<Vec<(usize, Scalar)>>,
}

impl FiniteDimTables {
    /// Group algebra `K[G]` from a multiplication table: group-like coproduct,
    /// counit 1, antipode = group inverse.
    pub fn group_algebra(names: Vec<String>, mul: Vec<Vec<usize>>, order: usize) -> Self {
        let n = names.len();
        let unit_idx = 0; // convention: first element is the group identity
        let mut inverse = vec![0usize; n];
        for g in 0..n {
            inverse[g] = (0..n).find(|&k| mul[g][k] == unit_idx).expect("group inverse");
        }
        FiniteDimTables {
            names,
            product: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| vec![(mul[i][j], Scalar::one(order))])
                        .collect()
                })
                .collect(),
            unit: vec![(unit_idx, Scalar::one(order))],
            coproduct: (0..n).map(|i| vec![(i, i, Scalar::one(order))]).collect(),
            counit: vec![Scalar::one(order); n],
            antipode: (0..n)
                .map(|i| vec![(inverse[i], Scalar::one(order))])
                .collect(),
        }
    }

    /// Structural sanity: table shapes, index ranges and truncation orders.
    pub fn validate(&self, order: usize) -> Result<(), Error> {
        let n = self.names.len();
        let dim_ok = self.product.len() == n
            && self.coproduct.len() == n
            && self.counit.len() == n
            && self.antipode.len() == n
            && self.product.iter().all(|row| row.len() == n);
        if !dim_ok {
            return Err(Error::BadTable("table dimensions disagree with basis size".into()));
        }
        let mut scalars: Vec<&Scalar> = self.counit.iter().collect();
        let mut indices: Vec<usize> = Vec::new();
        for (k, c) in &self.unit {
            indices.push(*k);
            scalars.push(c);
        }
        for row in &self.product {
            for cell in row {
                for (k, c) in cell {
                    indices.push(*k);
                    scalars.push(c);
                }
            }
        }
        for cell in &self.coproduct {
            for (j, k, c) in cell {
                indices.push(*j);
                indices.push(*k);
                scalars.push(c);
            }
        }
        for cell in &self.antipode {
            for (k, c) in cell {
                indices.push(*k);
                scalars.push(c);
            }
        }
        if indices.into_iter().any(|k| k >= n) {
            return Err(Error::BadTable("basis index out of range".into()));
        }
        if scalars.into_iter().any(|s| s.order() != order) {
            return Err(Error::BadTable("table coefficient at wrong truncation order".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    FiniteDim(FiniteDimTables),
    /// Pairwise-commuting primitive generators, named.
    AbelianPbw { generators: Vec<String> },
}

/// A Hopf algebra backend together with the ambient truncation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfAlgebra {
    pub backend: Backend,
    pub order: usize,
}

pub type HopfRef = Arc<HopfAlgebra>;

fn binomial(n: u32, k: u32) -> BigRational {
    let mut out = BigInt::one();
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from(out)
}

impl HopfAlgebra {
    pub fn finite_dim(tables: FiniteDimTables, order: usize) -> Result<HopfRef, Error> {
        tables.validate(order)?;
        Ok(Arc::new(HopfAlgebra {
            backend: Backend::FiniteDim(tables),
            order,
        }))
    }

    pub fn abelian_pbw(generators: Vec<String>, order: usize) -> HopfRef {
        Arc::new(HopfAlgebra {
            backend: Backend::AbelianPbw { generators },
            order,
        })
    }

    /// Two handles denote the same algebra (pointer or structural equality).
    pub fn same(a: &HopfRef, b: &HopfRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }

    pub fn word_name(&self, w: &Word) -> String {
        match (&self.backend, w) {
            (Backend::FiniteDim(t), Word::Basis(i)) => t.names[*i].clone(),
            (Backend::AbelianPbw { generators }, Word::Monomial(exps)) => {
                let parts: Vec<String> = generators
                    .iter()
                    .zip(exps)
                    .filter(|(_, e)| **e > 0)
                    .map(|(g, e)| if *e == 1 { g.clone() } else { format!("{g}^{e}") })
                    .collect();
                if parts.is_empty() {
                    String::new()
                } else {
                    parts.join("*")
                }
            }
            _ => panic!("basis word does not belong to this backend"),
        }
    }

    fn word_mul(&self, a: &Word, b: &Word) -> Vec<(Word, Scalar)> {
        match (&self.backend, a, b) {
            (Backend::FiniteDim(t), Word::Basis(i), Word::Basis(j)) => t.product[*i][*j]
                .iter()
                .map(|(k, c)| (Word::Basis(*k), c.clone()))
                .collect(),
            (Backend::AbelianPbw { .. }, Word::Monomial(x), Word::Monomial(y)) => {
                let exps = x.iter().zip(y).map(|(p, q)| p + q).collect();
                vec![(Word::Monomial(exps), Scalar::one(self.order))]
            }
            _ => panic!("basis word does not belong to this backend"),
        }
    }

    fn unit_terms(&self) -> Vec<(Word, Scalar)> {
        match &self.backend {
            Backend::FiniteDim(t) => t
                .unit
                .iter()
                .map(|(k, c)| (Word::Basis(*k), c.clone()))
                .collect(),
            Backend::AbelianPbw { generators } => vec![(
                Word::Monomial(vec![0; generators.len()]),
                Scalar::one(self.order),
            )],
        }
    }

    fn word_coproduct(&self, w: &Word) -> Vec<(Word, Word, Scalar)> {
        match (&self.backend, w) {
            (Backend::FiniteDim(t), Word::Basis(i)) => t.coproduct[*i]
                .iter()
                .map(|(j, k, c)| (Word::Basis(*j), Word::Basis(*k), c.clone()))
                .collect(),
            (Backend::AbelianPbw { .. }, Word::Monomial(exps)) => {
                // Delta is an algebra map and the generators are primitive, so
                // Delta(X^a) = prod_i (Xi (x) 1 + 1 (x) Xi)^{a_i}
                //            = sum_{b <= a} prod_i C(a_i, b_i) X^b (x) X^{a-b}.
                let mut out = Vec::new();
                let mut split = vec![0u32; exps.len()];
                loop {
                    let mut coeff = BigRational::one();
                    for (a, b) in exps.iter().zip(&split) {
                        coeff *= binomial(*a, *b);
                    }
                    let rest: Vec<u32> = exps.iter().zip(&split).map(|(a, b)| a - b).collect();
                    out.push((
                        Word::Monomial(split.clone()),
                        Word::Monomial(rest),
                        Scalar::from_rational(coeff, self.order),
                    ));
                    // advance the componentwise counter `split <= exps`
                    let mut i = 0;
                    loop {
                        if i == split.len() {
                            return out;
                        }
                        if split[i] < exps[i] {
                            split[i] += 1;
                            break;
                        }
                        split[i] = 0;
                        i += 1;
                    }
                }
            }
            _ => panic!("basis word does not belong to this backend"),
        }
    }

    fn word_counit(&self, w: &Word) -> Scalar {
        match (&self.backend, w) {
            (Backend::FiniteDim(t), Word::Basis(i)) => t.counit[*i].clone(),
            (Backend::AbelianPbw { .. }, Word::Monomial(exps)) => {
                if exps.iter().all(|e| *e == 0) {
                    Scalar::one(self.order)
                } else {
                    Scalar::zero(self.order)
                }
            }
            _ => panic!("basis word does not belong to this backend"),
        }
    }

    fn word_antipode(&self, w: &Word) -> Vec<(Word, Scalar)> {
        match (&self.backend, w) {
            (Backend::FiniteDim(t), Word::Basis(i)) => t.antipode[*i]
                .iter()
                .map(|(k, c)| (Word::Basis(*k), c.clone()))
                .collect(),
            (Backend::AbelianPbw { .. }, Word::Monomial(exps)) => {
                let degree: u32 = exps.iter().sum();
                let sign = if degree % 2 == 0 {
                    Scalar::one(self.order)
                } else {
                    -&Scalar::one(self.order)
                };
                vec![(Word::Monomial(exps.clone()), sign)]
            }
            _ => panic!("basis word does not belong to this backend"),
        }
    }
}

/// Element of `H` in canonical form: sorted basis words, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfElement {
    hopf: HopfRef,
    terms: BTreeMap<Word, Scalar>,
}

impl HopfElement {
    pub fn zero(hopf: &HopfRef) -> Self {
        HopfElement {
            hopf: hopf.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(hopf: &HopfRef) -> Self {
        HopfElement::from_terms(hopf, hopf.unit_terms())
    }

    pub fn from_word(hopf: &HopfRef, w: Word) -> Self {
        HopfElement::from_terms(hopf, vec![(w, Scalar::one(hopf.order))])
    }

    /// The `i`-th PBW generator.
    pub fn generator(hopf: &HopfRef, i: usize) -> Self {
        match &hopf.backend {
            Backend::AbelianPbw { generators } => {
                let mut exps = vec![0u32; generators.len()];
                exps[i] = 1;
                HopfElement::from_word(hopf, Word::Monomial(exps))
            }
            _ => panic!("generator() requires the PBW backend"),
        }
    }

    /// The `i`-th basis element of a finite-dimensional backend.
    pub fn basis(hopf: &HopfRef, i: usize) -> Self {
        match &hopf.backend {
            Backend::FiniteDim(t) => {
                assert!(i < t.names.len(), "basis index out of range");
                HopfElement::from_word(hopf, Word::Basis(i))
            }
            _ => panic!("basis() requires the finite-dimensional backend"),
        }
    }

    pub fn from_terms(hopf: &HopfRef, terms: impl IntoIterator<Item = (Word, Scalar)>) -> Self {
        let mut map: BTreeMap<Word, Scalar> = BTreeMap::new();
        for (w, c) in terms {
            let entry = map.entry(w).or_insert_with(|| Scalar::zero(hopf.order));
            *entry += &c;
        }
        map.retain(|_, c| !c.is_zero());
        HopfElement {
            hopf: hopf.clone(),
            terms: map,
        }
    }

    pub fn hopf(&self) -> &HopfRef {
        &self.hopf
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &HopfElement) -> HopfElement {
        assert!(HopfAlgebra::same(&self.hopf, &other.hopf), "backend mismatch");
        HopfElement::from_terms(
            &self.hopf,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(w, c)| (w.clone(), c.clone())),
        )
    }

    pub fn sub(&self, other: &HopfElement) -> HopfElement {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> HopfElement {
        self.scale_map(|c| -c)
    }

    pub fn scale(&self, s: &Scalar) -> HopfElement {
        self.scale_map(|c| c * s)
    }

    fn scale_map(&self, f: impl Fn(&Scalar) -> Scalar) -> HopfElement {
        HopfElement::from_terms(
            &self.hopf,
            self.terms.iter().map(|(w, c)| (w.clone(), f(c))),
        )
    }

    /// Product in `H` (bilinear extension of the backend word product).
    pub fn mul(&self, other: &HopfElement) -> HopfElement {
        assert!(HopfAlgebra::same(&self.hopf, &other.hopf), "backend mismatch");
        let mut acc: Vec<(Word, Scalar)> = Vec::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let c = ca * cb;
                for (w, cw) in self.hopf.word_mul(wa, wb) {
                    acc.push((w, &c * &cw));
                }
            }
        }
        HopfElement::from_terms(&self.hopf, acc)
    }

    /// Counit (same for the classical and any twisted structure).
    pub fn counit(&self) -> Scalar {
        let mut out = Scalar::zero(self.hopf.order);
        for (w, c) in &self.terms {
            out += &(c * &self.hopf.word_counit(w));
        }
        out
    }

    /// Classical antipode from the backend.
    pub fn antipode(&self) -> HopfElement {
        let mut acc = Vec::new();
        for (w, c) in &self.terms {
            for (w2, c2) in self.hopf.word_antipode(w) {
                acc.push((w2, c * &c2));
            }
        }
        HopfElement::from_terms(&self.hopf, acc)
    }

    /// Classical coproduct from the backend.
    pub fn coproduct(&self) -> HopfTensor {
        let mut acc = Vec::new();
        for (w, c) in &self.terms {
            for (w1, w2, c2) in self.hopf.word_coproduct(w) {
                acc.push((vec![w1, w2], c * &c2));
            }
        }
        HopfTensor::from_terms(&self.hopf, 2, acc)
    }
}

impl fmt::Display for HopfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered = self
            .terms
            .iter()
            .map(|(w, c)| term_pieces(c, &self.hopf.word_name(w)));
        write!(f, "{}", join_terms(rendered))
    }
}

/// Element of `H^{(x) rank}` as a sum of coefficient-carrying basis-word
/// tuples, in canonical form.  Multiplication is leg-wise:
/// `(a (x) b)(a' (x) b') = aa' (x) bb'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfTensor {
    hopf: HopfRef,
    rank: usize,
    terms: BTreeMap<Vec<Word>, Scalar>,
}

impl HopfTensor {
    pub fn zero(hopf: &HopfRef, rank: usize) -> Self {
        assert!((1..=4).contains(&rank), "tensor rank out of range");
        HopfTensor {
            hopf: hopf.clone(),
            rank,
            terms: BTreeMap::new(),
        }
    }

    /// `1 (x) ... (x) 1`.
    pub fn identity(hopf: &HopfRef, rank: usize) -> Self {
        HopfTensor::from_legs(&vec![HopfElement::one(hopf); rank])
    }

    pub fn from_terms(
        hopf: &HopfRef,
        rank: usize,
        terms: impl IntoIterator<Item = (Vec<Word>, Scalar)>,
    ) -> Self {
        assert!((1..=4).contains(&rank), "tensor rank out of range");
        let mut map: BTreeMap<Vec<Word>, Scalar> = BTreeMap::new();
        for (legs, c) in terms {
            assert_eq!(legs.len(), rank, "term with wrong number of legs");
            let entry = map.entry(legs).or_insert_with(|| Scalar::zero(hopf.order));
            *entry += &c;
        }
        map.retain(|_, c| !c.is_zero());
        HopfTensor {
            hopf: hopf.clone(),
            rank,
            terms: map,
        }
    }

    /// Expand a pure tensor of elements into canonical term form.
    pub fn from_legs(legs: &[HopfElement]) -> Self {
        assert!(!legs.is_empty());
        let hopf = legs[0].hopf().clone();
        let mut acc: Vec<(Vec<Word>, Scalar)> = vec![(Vec::new(), Scalar::one(hopf.order))];
        for leg in legs {
            assert!(HopfAlgebra::same(&hopf, leg.hopf()), "backend mismatch");
            let mut next = Vec::new();
            for (prefix, c) in &acc {
                for (w, cw) in leg.terms() {
                    let mut legs2 = prefix.clone();
                    legs2.push(w.clone());
                    next.push((legs2, c * cw));
                }
            }
            acc = next;
        }
        HopfTensor::from_terms(&hopf, legs.len(), acc)
    }

    pub fn hopf(&self) -> &HopfRef {
        &self.hopf
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Word>, &Scalar)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &HopfTensor) -> HopfTensor {
        assert_eq!(self.rank, other.rank, "tensor rank mismatch");
        HopfTensor::from_terms(
            &self.hopf,
            self.rank,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(l, c)| (l.clone(), c.clone())),
        )
    }

    pub fn sub(&self, other: &HopfTensor) -> HopfTensor {
        self.add(&other.scale_map(|c| -c))
    }

    pub fn scale(&self, s: &Scalar) -> HopfTensor {
        self.scale_map(|c| c * s)
    }

    fn scale_map(&self, f: impl Fn(&Scalar) -> Scalar) -> HopfTensor {
        HopfTensor::from_terms(
            &self.hopf,
            self.rank,
            self.terms.iter().map(|(l, c)| (l.clone(), f(c))),
        )
    }

    /// Leg-wise product.  Each pair of terms multiplies leg by leg; leg
    /// products are expanded through the backend.
    pub fn mul(&self, other: &HopfTensor) -> HopfTensor {
        assert_eq!(self.rank, other.rank, "tensor rank mismatch");
        assert!(HopfAlgebra::same(&self.hopf, &other.hopf), "backend mismatch");
        let mut acc: Vec<(Vec<Word>, Scalar)> = Vec::new();
        for (la, ca) in &self.terms {
            for (lb, cb) in &other.terms {
                // expand prod_i (la_i * lb_i), each factor a sum of words
                let mut partial: Vec<(Vec<Word>, Scalar)> = vec![(Vec::new(), ca * cb)];
                for (wa, wb) in la.iter().zip(lb) {
                    let factors = self.hopf.word_mul(wa, wb);
                    let mut next = Vec::new();
                    for (prefix, c) in &partial {
                        for (w, cw) in &factors {
                            let mut legs = prefix.clone();
                            legs.push(w.clone());
                            next.push((legs, c * cw));
                        }
                    }
                    partial = next;
                }
                acc.extend(partial);
            }
        }
        HopfTensor::from_terms(&self.hopf, self.rank, acc)
    }

    /// Reorder legs: result leg `j` is the current leg `perm[j]`.
    /// `F.permute(&[1, 0])` is the flip `F_21`.
    pub fn permute(&self, perm: &[usize]) -> HopfTensor {
        assert_eq!(perm.len(), self.rank, "permutation arity mismatch");
        HopfTensor::from_terms(
            &self.hopf,
            self.rank,
            self.terms.iter().map(|(legs, c)| {
                let new_legs: Vec<Word> = perm.iter().map(|&i| legs[i].clone()).collect();
                (new_legs, c.clone())
            }),
        )
    }

    /// Embed into a higher rank, placing current legs at `positions` (in
    /// order) and the unit on every other leg: `F.embed(3, &[0, 2])` is
    /// `F_13`.
    pub fn embed(&self, rank: usize, positions: &[usize]) -> HopfTensor {
        assert_eq!(positions.len(), self.rank, "embedding arity mismatch");
        let one = HopfElement::one(&self.hopf);
        let mut out = HopfTensor::zero(&self.hopf, rank);
        for (legs, c) in &self.terms {
            let mut slot: Vec<HopfElement> = vec![one.clone(); rank];
            for (leg, &pos) in legs.iter().zip(positions) {
                slot[pos] = HopfElement::from_word(&self.hopf, leg.clone());
            }
            out = out.add(&HopfTensor::from_legs(&slot).scale(c));
        }
        out
    }

    /// Apply the coproduct of `ops` to one leg, raising the rank by one.
    pub fn coproduct_leg(&self, leg: usize, ops: &dyn HopfOps) -> HopfTensor {
        let mut acc: Vec<(Vec<Word>, Scalar)> = Vec::new();
        for (legs, c) in &self.terms {
            let delta = ops.coproduct(&HopfElement::from_word(&self.hopf, legs[leg].clone()));
            for (dlegs, dc) in delta.terms() {
                let mut new_legs = legs.clone();
                new_legs.splice(leg..=leg, dlegs.iter().cloned());
                acc.push((new_legs, c * dc));
            }
        }
        HopfTensor::from_terms(&self.hopf, self.rank + 1, acc)
    }

    /// Apply the counit to one leg, lowering the rank by one.  The counit is
    /// unchanged by twisting, so no structure argument is needed.
    pub fn counit_leg(&self, leg: usize) -> HopfTensor {
        assert!(self.rank >= 2, "counit_leg needs rank >= 2");
        let mut acc: Vec<(Vec<Word>, Scalar)> = Vec::new();
        for (legs, c) in &self.terms {
            let eps = self.hopf.word_counit(&legs[leg]);
            let mut new_legs = legs.clone();
            new_legs.remove(leg);
            acc.push((new_legs, c * &eps));
        }
        HopfTensor::from_terms(&self.hopf, self.rank - 1, acc)
    }

    /// Apply the antipode of `ops` to one leg.
    pub fn antipode_leg(&self, leg: usize, ops: &dyn HopfOps) -> HopfTensor {
        let mut acc: Vec<(Vec<Word>, Scalar)> = Vec::new();
        for (legs, c) in &self.terms {
            let s = ops.antipode(&HopfElement::from_word(&self.hopf, legs[leg].clone()));
            for (w, cw) in s.terms() {
                let mut new_legs = legs.clone();
                new_legs[leg] = w.clone();
                acc.push((new_legs, c * cw));
            }
        }
        HopfTensor::from_terms(&self.hopf, self.rank, acc)
    }

    /// Multiply legs `leg` and `leg + 1` together, lowering the rank by one.
    pub fn contract(&self, leg: usize) -> HopfTensor {
        assert!(self.rank >= 2 && leg + 1 < self.rank, "contract out of range");
        let mut acc: Vec<(Vec<Word>, Scalar)> = Vec::new();
        for (legs, c) in &self.terms {
            for (w, cw) in self.hopf.word_mul(&legs[leg], &legs[leg + 1]) {
                let mut new_legs = legs.clone();
                new_legs[leg] = w;
                new_legs.remove(leg + 1);
                acc.push((new_legs, c * &cw));
            }
        }
        HopfTensor::from_terms(&self.hopf, self.rank - 1, acc)
    }

    /// Collapse a rank-1 tensor back to an element.
    pub fn into_element(&self) -> HopfElement {
        assert_eq!(self.rank, 1, "into_element needs rank 1");
        HopfElement::from_terms(
            &self.hopf,
            self.terms.iter().map(|(l, c)| (l[0].clone(), c.clone())),
        )
    }

    /// Smallest h-power appearing in any coefficient; `None` for zero.
    pub fn h_valuation(&self) -> Option<usize> {
        self.terms
            .values()
            .filter_map(Scalar::h_valuation)
            .min()
    }

    /// `exp(t) = sum_k t^k / k!`, truncated.  Requires every coefficient of
    /// `t` to vanish at `h^0` so the series terminates within the truncation
    /// order.
    pub fn exp(t: &HopfTensor) -> Result<HopfTensor, Error> {
        if !t.is_zero() && t.h_valuation() == Some(0) {
            return Err(Error::ExpNotNilpotent);
        }
        let n = t.hopf.order;
        let mut acc = HopfTensor::identity(&t.hopf, t.rank);
        let mut power = HopfTensor::identity(&t.hopf, t.rank);
        for k in 1..=n {
            power = power
                .mul(t)
                .scale(&Scalar::from_rational(BigRational::new(BigInt::one(), BigInt::from(k as i64)), n));
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power);
        }
        Ok(acc)
    }
}

impl fmt::Display for HopfTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered = self.terms.iter().map(|(legs, c)| {
            let atoms: Vec<String> = legs
                .iter()
                .map(|w| {
                    let s = self.hopf.word_name(w);
                    if s.is_empty() {
                        "1".to_string()
                    } else {
                        s
                    }
                })
                .collect();
            let atom = format!("({})", atoms.join(" (x) "));
            term_pieces(c, &atom)
        });
        write!(f, "{}", join_terms(rendered))
    }
}

/// The structure maps of a Hopf algebra, abstracted so the classical algebra
/// and any twisted version expose one interface.  Product, unit and counit
/// are untouched by twisting and default to the backend operations.
pub trait HopfOps: Send + Sync {
    fn hopf(&self) -> &HopfRef;
    fn coproduct(&self, a: &HopfElement) -> HopfTensor;
    fn antipode(&self, a: &HopfElement) -> HopfElement;
    fn counit(&self, a: &HopfElement) -> Scalar {
        a.counit()
    }
    fn mul(&self, a: &HopfElement, b: &HopfElement) -> HopfElement {
        a.mul(b)
    }
    /// Short label for reports ("H", "H^F").
    fn label(&self) -> String;
}

/// The undeformed structure: backend coproduct and antipode.
#[derive(Clone)]
pub struct ClassicalHopf(pub HopfRef);

impl HopfOps for ClassicalHopf {
    fn hopf(&self) -> &HopfRef {
        &self.0
    }
    fn coproduct(&self, a: &HopfElement) -> HopfTensor {
        a.coproduct()
    }
    fn antipode(&self, a: &HopfElement) -> HopfElement {
        a.antipode()
    }
    fn label(&self) -> String {
        "H".to_string()
    }
}

/// Shared handle to a Hopf structure (classical or twisted).
pub type HopfHandle = Arc<dyn HopfOps>;

/// `Delta^(k-1)(xi)` as a rank-`k` tensor, using the coproduct of `ops`
/// (classical or twisted).  `k = 1` returns `xi` as a rank-1 tensor.
pub fn iterated_coproduct(ops: &dyn HopfOps, xi: &HopfElement, k: usize) -> HopfTensor {
    assert!((1..=4).contains(&k), "iterated coproduct rank out of range");
    let mut out = HopfTensor::from_legs(std::slice::from_ref(xi));
    for _ in 1..k {
        out = out.coproduct_leg(0, ops);
    }
    out
}

/// Probe elements for a backend: every basis word (finite-dimensional), or
/// every generator monomial of total degree `<= max_degree` (PBW).
pub fn default_probes(hopf: &HopfRef, max_degree: u32) -> Vec<HopfElement> {
    match &hopf.backend {
        Backend::FiniteDim(t) => (0..t.names.len())
            .map(|i| HopfElement::from_word(hopf, Word::Basis(i)))
            .collect(),
        Backend::AbelianPbw { generators } => {
            let m = generators.len();
            let mut out = Vec::new();
            let mut exps = vec![0u32; m];
            loop {
                if exps.iter().sum::<u32>() <= max_degree {
                    out.push(HopfElement::from_word(hopf, Word::Monomial(exps.clone())));
                }
                let mut i = 0;
                loop {
                    if i == m {
                        return out;
                    }
                    if exps[i] < max_degree {
                        exps[i] += 1;
                        break;
                    }
                    exps[i] = 0;
                    i += 1;
                }
            }
        }
    }
}

fn first_witness<'a, I, F>(inputs: I, mut body: F) -> Option<Witness>
where
    I: IntoIterator<Item = &'a HopfElement>,
    F: FnMut(&HopfElement) -> Option<Witness>,
{
    inputs.into_iter().find_map(|x| body(x))
}

/// Verify the Hopf algebra axioms and their standard consequences for the
/// given structure on the given probes.  Pairwise laws run over all probe
/// pairs; product associativity runs over triples of a capped probe prefix
/// (for a finite-dimensional backend with basis probes this is exhaustive and
/// constitutes a proof).
pub fn hopf_check(ops: &dyn HopfOps, probes: &[HopfElement]) -> CheckReport {
    let hopf = ops.hopf();
    let one = HopfElement::one(hopf);
    let unit1 = HopfTensor::from_legs(std::slice::from_ref(&one));
    let mut report = CheckReport::new();
    let n = probes.len();

    report.run("coassoc", n, || {
        first_witness(probes, |xi| {
            let t = ops.coproduct(xi);
            let lhs = t.coproduct_leg(0, ops);
            let rhs = t.coproduct_leg(1, ops);
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("counit.left", n, || {
        first_witness(probes, |xi| {
            let lhs = ops.coproduct(xi).counit_leg(0);
            let rhs = HopfTensor::from_legs(std::slice::from_ref(xi));
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("counit.right", n, || {
        first_witness(probes, |xi| {
            let lhs = ops.coproduct(xi).counit_leg(1);
            let rhs = HopfTensor::from_legs(std::slice::from_ref(xi));
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("antipode.left", n, || {
        first_witness(probes, |xi| {
            // mu (S (x) id) Delta(xi) = eps(xi) 1
            let lhs = ops.coproduct(xi).antipode_leg(0, ops).contract(0);
            let rhs = unit1.scale(&ops.counit(xi));
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("antipode.right", n, || {
        first_witness(probes, |xi| {
            let lhs = ops.coproduct(xi).antipode_leg(1, ops).contract(0);
            let rhs = unit1.scale(&ops.counit(xi));
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    // Pairwise laws.
    let pair_witness = |f: &mut dyn FnMut(&HopfElement, &HopfElement) -> Option<Witness>| {
        for a in probes {
            for b in probes {
                if let Some(w) = f(a, b) {
                    return Some(w);
                }
            }
        }
        None
    };

    report.run("coproduct.hom", n * n, || {
        pair_witness(&mut |a, b| {
            let lhs = ops.coproduct(&ops.mul(a, b));
            let rhs = ops.coproduct(a).mul(&ops.coproduct(b));
            (lhs != rhs).then(|| Witness::new(format!("{a} ; {b}"), &lhs, &rhs))
        })
    });

    report.run("counit.hom", n * n, || {
        pair_witness(&mut |a, b| {
            let lhs = ops.counit(&ops.mul(a, b));
            let rhs = &ops.counit(a) * &ops.counit(b);
            (lhs != rhs).then(|| Witness::new(format!("{a} ; {b}"), &lhs, &rhs))
        })
    });

    report.run("antipode.antihom", n * n, || {
        pair_witness(&mut |a, b| {
            let lhs = ops.antipode(&ops.mul(a, b));
            let rhs = ops.mul(&ops.antipode(b), &ops.antipode(a));
            (lhs != rhs).then(|| Witness::new(format!("{a} ; {b}"), &lhs, &rhs))
        })
    });

    report.run("antipode.flip", n, || {
        first_witness(probes, |xi| {
            // (S (x) S) Delta(xi) = flip(Delta(S(xi)))
            let lhs = ops
                .coproduct(xi)
                .antipode_leg(0, ops)
                .antipode_leg(1, ops);
            let rhs = ops.coproduct(&ops.antipode(xi)).permute(&[1, 0]);
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("antipode.counit", n, || {
        first_witness(probes, |xi| {
            let lhs = ops.counit(&ops.antipode(xi));
            let rhs = ops.counit(xi);
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    // Unit laws.
    report.run("unit.laws", 1, || {
        let d1 = ops.coproduct(&one);
        let id2 = HopfTensor::identity(hopf, 2);
        if d1 != id2 {
            return Some(Witness::new(&one, &d1, &id2).with_note("coproduct of unit"));
        }
        if !ops.counit(&one).is_one() {
            return Some(Witness::new(&one, ops.counit(&one), "1").with_note("counit of unit"));
        }
        let s1 = ops.antipode(&one);
        if s1 != one {
            return Some(Witness::new(&one, &s1, &one).with_note("antipode of unit"));
        }
        None
    });

    // Product associativity and unitality over a capped probe prefix; for a
    // finite-dimensional backend probed on its full basis this is exhaustive.
    let cap = probes.len().min(8);
    let assoc_probes = &probes[..cap];
    report.run("product.assoc", cap * cap * cap, || {
        for a in assoc_probes {
            for b in assoc_probes {
                for c in assoc_probes {
                    let lhs = ops.mul(&ops.mul(a, b), c);
                    let rhs = ops.mul(a, &ops.mul(b, c));
                    if lhs != rhs {
                        return Some(Witness::new(format!("{a} ; {b} ; {c}"), &lhs, &rhs));
                    }
                }
            }
        }
        None
    });

    report.run("product.unit", n, || {
        first_witness(probes, |xi| {
            let l = ops.mul(&one, xi);
            let r = ops.mul(xi, &one);
            (l != *xi || r != *xi).then(|| Witness::new(xi, &l, &r))
        })
    });

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    pub(crate) fn klein_group() -> HopfRef {
        // Z2 x Z2 = {1, u, w, uw} with table indices 0..4.
        let mul = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
        HopfAlgebra::finite_dim(FiniteDimTables::group_algebra(names, mul, 0), 0).unwrap()
    }

    fn pbw2(order: usize) -> HopfRef {
        HopfAlgebra::abelian_pbw(vec!["X1".into(), "X2".into()], order)
    }

    #[test]
    fn klein_products_fold_to_identity() {
        let h = klein_group();
        let u = HopfElement::basis(&h, 1);
        assert_eq!(u.mul(&u), HopfElement::one(&h));
        let w = HopfElement::basis(&h, 2);
        assert_eq!(u.mul(&w), HopfElement::basis(&h, 3));
        assert_eq!(u.counit(), Scalar::one(0));
        assert_eq!(u.antipode(), u);
    }

    #[test]
    fn pbw_coproduct_of_square_is_binomial() {
        let h = pbw2(2);
        let x1 = HopfElement::generator(&h, 0);
        let sq = x1.mul(&x1);
        let delta = sq.coproduct();
        // Delta(X1^2) = X1^2 (x) 1 + 2 X1 (x) X1 + 1 (x) X1^2
        let one = HopfElement::one(&h);
        let expected = HopfTensor::from_legs(&[sq.clone(), one.clone()])
            .add(&HopfTensor::from_legs(&[x1.clone(), x1.clone()]).scale(&Scalar::from_int(2, 2)))
            .add(&HopfTensor::from_legs(&[one, sq]));
        assert_eq!(delta, expected);
    }

    #[test]
    fn pbw_antipode_is_sign_by_degree() {
        let h = pbw2(1);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        assert_eq!(x1.antipode(), x1.neg());
        // S(X1*X2) = S(X2) S(X1) = X1*X2 (even degree)
        let m = x1.mul(&x2);
        assert_eq!(m.antipode(), m);
        assert_eq!(m.counit(), Scalar::zero(1));
    }

    #[test]
    fn tensor_legwise_product_matches_pure_tensor_expansion() {
        let h = pbw2(2);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let one = HopfElement::one(&h);
        let a = x1.add(&one);
        let b = x2.scale(&Scalar::h_power(1, 2));
        let c = x2.sub(&x1);
        let d = one.clone();
        // (a (x) b)(c (x) d) = ac (x) bd
        let lhs = HopfTensor::from_legs(&[a.clone(), b.clone()])
            .mul(&HopfTensor::from_legs(&[c.clone(), d.clone()]));
        let rhs = HopfTensor::from_legs(&[a.mul(&c), b.mul(&d)]);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn embed_and_permute_place_legs() {
        let h = pbw2(1);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let one = HopfElement::one(&h);
        let t = HopfTensor::from_legs(&[x1.clone(), x2.clone()]);
        assert_eq!(
            t.embed(3, &[0, 2]),
            HopfTensor::from_legs(&[x1.clone(), one.clone(), x2.clone()])
        );
        assert_eq!(t.permute(&[1, 0]), HopfTensor::from_legs(&[x2, x1]));
    }

    #[test]
    fn exponential_requires_nilpotency_and_truncates() {
        let h = pbw2(2);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let t = HopfTensor::from_legs(&[x1.clone(), x2.clone()]).scale(&Scalar::h_power(1, 2));
        let e = HopfTensor::exp(&t).unwrap();
        // exp(h X1 (x) X2) = 1(x)1 + h X1 (x) X2 + h^2/2 X1^2 (x) X2^2
        let expected = HopfTensor::identity(&h, 2)
            .add(&t)
            .add(
                &HopfTensor::from_legs(&[x1.mul(&x1), x2.mul(&x2)])
                    .scale(&Scalar::monomial(rat(1, 2), 2, 2)),
            );
        assert_eq!(e, expected);
        let bad = HopfTensor::from_legs(&[x1, x2]);
        assert!(HopfTensor::exp(&bad).is_err());
    }

    #[test]
    fn axioms_hold_for_both_backends() {
        let h = klein_group();
        let probes = default_probes(&h, 0);
        let report = hopf_check(&ClassicalHopf(h), &probes);
        assert!(report.passed(), "klein axioms:\n{report}");

        let h = pbw2(3);
        let probes = default_probes(&h, 3);
        let report = hopf_check(&ClassicalHopf(h), &probes);
        assert!(report.passed(), "pbw axioms:\n{report}");
    }

    #[test]
    fn corrupted_antipode_table_fails_with_witness() {
        let mul = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
        let mut tables = FiniteDimTables::group_algebra(names, mul, 0);
        // S(u) := w is wrong for this group.
        tables.antipode[1] = vec![(2, Scalar::one(0))];
        let h = HopfAlgebra::finite_dim(tables, 0).unwrap();
        let probes = default_probes(&h, 0);
        let report = hopf_check(&ClassicalHopf(h), &probes);
        assert!(!report.passed());
        let failing = report.failures().next().unwrap();
        match &failing.status {
            crate::check::CheckStatus::Fail(w) => {
                assert!(!w.lhs.is_empty() && !w.rhs.is_empty());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn probe_enumeration_is_degree_bounded() {
        let h = pbw2(0);
        let probes = default_probes(&h, 2);
        // monomials in 2 generators of degree <= 2: 1, X1, X2, X1^2, X1X2, X2^2
        assert_eq!(probes.len(), 6);
    }

    #[test]
    fn display_uses_scenario_literal_syntax() {
        let h = pbw2(2);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let e = x1
            .mul(&x1)
            .mul(&x2)
            .scale(&Scalar::from_ratio(3, 2, 2))
            .add(&x1.scale(&Scalar::h_power(1, 2)));
        assert_eq!(e.to_string(), "h*X1 + 3/2*X1^2*X2");
        let t = HopfTensor::from_legs(&[x1.clone(), HopfElement::one(&h)]);
        assert_eq!(t.to_string(), "(X1 (x) 1)");
    }
}
