//! Module maps as first-class values, the adjoint Hopf action on them, the
//! deformation map on operators, braided tensor products of operators, and
//! the commuting-square checks tying them together.
//!
//! A [`Hom`] is a `K`-linear map between module elements, carried as a
//! closure with its domain, codomain and a display label.  Equality of
//! operators is always extensional on probe elements.
//!
//! The adjoint action dresses an operator on both sides,
//! `xi |>> P = (xi_1 |>) o P o (S(xi_2) |>)`, with coproduct and antipode
//! taken from the world, so the same code gives the classical and the
//! deformed adjoint.  The deformation map
//! `D(P) = sum (fbar^a |>> P) o (fbar_a |>)` turns classical operators into
//! deformed ones; its inverse is built the same way from the inverse twist
//! over the twisted structure.  Star composition and the four algebra
//! products on operators are the twisted transports of composition and
//! multiplication.
//!
//! The braided tensor product of operators,
//! `P (x)_R Q = (P o (Rbar^a |>)) (x) (Rbar_a |>> Q)`, is built over `K` and
//! pushed to tensor products over the algebra through the world's lift and
//! projection.  [`rtensor_diagram_check`] verifies that deforming the factors
//! and then tensoring with the deformed braiding equals deforming the
//! braided tensor of the dressed factors — the commuting square — and
//! supports deliberately broken variants for fault demonstrations.

use crate::check::{CheckReport, Witness};
use crate::hopf::HopfElement;
use crate::modalg::{AlgebraElement, KTensor, ModuleElement, Space, SpaceRef, World};
use crate::scalar::Scalar;
use crate::twist::tensor_legs;
use std::fmt;
use std::sync::Arc;

type HomFn = dyn Fn(&ModuleElement) -> ModuleElement + Send + Sync;

/// A `K`-linear map between free modules, with display label.
#[derive(Clone)]
pub struct Hom {
    dom: SpaceRef,
    cod: SpaceRef,
    label: String,
    f: Arc<HomFn>,
}

impl fmt::Debug for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hom({})", self.label)
    }
}

impl fmt::Display for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Hom {
    pub fn from_fn(
        dom: &SpaceRef,
        cod: &SpaceRef,
        label: impl Into<String>,
        f: impl Fn(&ModuleElement) -> ModuleElement + Send + Sync + 'static,
    ) -> Hom {
        Hom {
            dom: dom.clone(),
            cod: cod.clone(),
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn apply(&self, v: &ModuleElement) -> ModuleElement {
        assert!(
            Space::same(v.space(), &self.dom),
            "operator {} applied outside its domain",
            self.label
        );
        (self.f)(v)
    }

    pub fn dom(&self) -> &SpaceRef {
        &self.dom
    }

    pub fn cod(&self) -> &SpaceRef {
        &self.cod
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Hom {
        self.label = label.into();
        self
    }

    pub fn identity(space: &SpaceRef) -> Hom {
        Self::from_fn(space, space, "id", |v| v.clone())
    }

    pub fn zero(dom: &SpaceRef, cod: &SpaceRef) -> Hom {
        let cod2 = cod.clone();
        Self::from_fn(dom, cod, "0", move |_| ModuleElement::zero(&cod2))
    }

    /// Right-A-linear map from a matrix: `entries[j]` is the coefficient
    /// vector of the image of the `j`-th basis vector.
    pub fn matrix(
        dom: &SpaceRef,
        cod: &SpaceRef,
        entries: Vec<Vec<AlgebraElement>>,
        label: impl Into<String>,
    ) -> Hom {
        assert_eq!(entries.len(), dom.rank(), "one column per basis vector");
        assert!(entries.iter().all(|col| col.len() == cod.rank()));
        let cod2 = cod.clone();
        Self::from_fn(dom, cod, label, move |v| {
            let mut out = ModuleElement::zero(&cod2);
            for (j, a) in v.coeffs().iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (k, entry) in entries[j].iter().enumerate() {
                    if !entry.is_zero() {
                        let mut coeffs: Vec<AlgebraElement> = out.coeffs().to_vec();
                        coeffs[k] = coeffs[k].add(&entry.mul(a));
                        out = ModuleElement::from_coeffs(&cod2, coeffs);
                    }
                }
            }
            out
        })
    }

    /// The classical Hopf action as an operator.
    pub fn act_op(space: &SpaceRef, xi: &HopfElement) -> Hom {
        let xi = xi.clone();
        let label = format!("({xi}) |>");
        Self::from_fn(space, space, label, move |v| v.act(&xi))
    }

    /// The world's left multiplication by `a` as an operator.
    pub fn left_mul_op(world: &World, space: &SpaceRef, a: &AlgebraElement) -> Hom {
        let world = world.clone();
        let a = a.clone();
        let label = if world.is_deformed() {
            format!("l*[{a}]")
        } else {
            format!("l[{a}]")
        };
        Self::from_fn(space, space, label, move |v| world.left_mul(&a, v))
    }

    pub fn compose(&self, other: &Hom) -> Hom {
        assert!(
            Space::same(&other.cod, &self.dom),
            "composition domain mismatch: {} o {}",
            self.label,
            other.label
        );
        let f = self.clone();
        let g = other.clone();
        let label = format!("({} o {})", self.label, other.label);
        Self::from_fn(&other.dom, &self.cod, label, move |v| f.apply(&g.apply(v)))
    }

    pub fn add(&self, other: &Hom) -> Hom {
        assert!(Space::same(&self.dom, &other.dom) && Space::same(&self.cod, &other.cod));
        let f = self.clone();
        let g = other.clone();
        let label = format!("({} + {})", self.label, other.label);
        Self::from_fn(&self.dom, &self.cod, label, move |v| {
            f.apply(v).add(&g.apply(v))
        })
    }

    pub fn scale(&self, s: &Scalar) -> Hom {
        let f = self.clone();
        let s = s.clone();
        let label = format!("({s})*{}", self.label);
        Self::from_fn(&self.dom, &self.cod, label, move |v| f.apply(v).scale(&s))
    }

    pub fn sum(parts: &[Hom]) -> Hom {
        assert!(!parts.is_empty());
        parts[1..]
            .iter()
            .fold(parts[0].clone(), |acc, p| acc.add(p))
    }
}

/// Extensional comparison on probes; `None` means they agree everywhere.
pub fn homs_agree(p: &Hom, q: &Hom, probes: &[ModuleElement]) -> Option<Witness> {
    probes.iter().find_map(|v| {
        let lhs = p.apply(v);
        let rhs = q.apply(v);
        (lhs != rhs).then(|| {
            Witness::new(format!("v = {v}"), &lhs, &rhs)
                .with_note(format!("lhs op {p}, rhs op {q}"))
        })
    })
}

/// The world's adjoint action on an operator:
/// `xi |>> P = sum (xi_1 |>) o P o (S(xi_2) |>)`.
pub fn adjoint(world: &World, xi: &HopfElement, p: &Hom) -> Hom {
    let spread = world.ops().coproduct(xi);
    let hopf = world.hopf().clone();
    let mut pieces = Vec::new();
    for (words, c) in spread.terms() {
        let w1 = HopfElement::from_word(&hopf, words[0].clone());
        let w2 = world
            .ops()
            .antipode(&HopfElement::from_word(&hopf, words[1].clone()));
        let piece = Hom::act_op(&p.cod, &w1)
            .compose(p)
            .compose(&Hom::act_op(&p.dom, &w2))
            .scale(c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("(({xi}) |>> {p})"))
}

/// The deformation map on operators,
/// `D(P) = sum (fbar^a |>> P) o (fbar_a |>)` with the classical adjoint.
pub fn deform_hom(world: &World, p: &Hom) -> Hom {
    let tw = world.twist().expect("deforming an operator needs a twist");
    let classical = World::classical(world.hopf());
    let mut pieces = Vec::new();
    for (w1, w2, c) in tensor_legs(&tw.f_inv) {
        let piece = adjoint(&classical, &w1, p)
            .compose(&Hom::act_op(&p.dom, &w2))
            .scale(&c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("D[{p}]"))
}

/// Inverse of [`deform_hom`]: the same construction through the inverse
/// twist over the twisted structure.
pub fn deform_hom_inv(world: &World, q: &Hom) -> Hom {
    let tw = world.twist().expect("undeforming an operator needs a twist");
    let mut pieces = Vec::new();
    for (w1, w2, c) in tensor_legs(&tw.f) {
        let piece = adjoint(world, &w1, q)
            .compose(&Hom::act_op(&q.dom, &w2))
            .scale(&c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("D^-1[{q}]"))
}

/// Star composition: `P o* Q = sum (fbar^a |>> P) o (fbar_a |>> Q)` with the
/// classical adjoint.
pub fn star_compose(world: &World, p: &Hom, q: &Hom) -> Hom {
    let tw = world.twist().expect("star composition needs a twist");
    let classical = World::classical(world.hopf());
    let mut pieces = Vec::new();
    for (w1, w2, c) in tensor_legs(&tw.f_inv) {
        let piece = adjoint(&classical, &w1, p)
            .compose(&adjoint(&classical, &w2, q))
            .scale(&c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("({p} o* {q})"))
}

/// Star module structure on operators: `a * P = sum l[fbar^a |> a] o
/// (fbar_a |>> P)` and `P * a = sum (fbar^a |>> P) o l[fbar_a |> a]`, with
/// classical multiplication operators and the classical adjoint.
pub fn star_hom_left(world: &World, a: &AlgebraElement, p: &Hom) -> Hom {
    let tw = world.twist().expect("star module structure needs a twist");
    let classical = World::classical(world.hopf());
    let mut pieces = Vec::new();
    for (w1, w2, c) in tensor_legs(&tw.f_inv) {
        let piece = Hom::left_mul_op(&classical, &p.cod, &a.act(&w1))
            .compose(&adjoint(&classical, &w2, p))
            .scale(&c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("({a}) * {p}"))
}

pub fn star_hom_right(world: &World, p: &Hom, a: &AlgebraElement) -> Hom {
    let tw = world.twist().expect("star module structure needs a twist");
    let classical = World::classical(world.hopf());
    let mut pieces = Vec::new();
    for (w1, w2, c) in tensor_legs(&tw.f_inv) {
        let piece = adjoint(&classical, &w1, p)
            .compose(&Hom::left_mul_op(&classical, &p.dom, &a.act(&w2)))
            .scale(&c);
        pieces.push(piece);
    }
    Hom::sum(&pieces).relabel(format!("{p} * ({a})"))
}

type KHomFn = dyn Fn(&KTensor) -> KTensor + Send + Sync;

/// A `K`-linear map between over-K tensors.
#[derive(Clone)]
pub struct KHom {
    dom: Vec<SpaceRef>,
    cod: Vec<SpaceRef>,
    label: String,
    f: Arc<KHomFn>,
}

impl fmt::Display for KHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl KHom {
    pub fn from_fn(
        dom: Vec<SpaceRef>,
        cod: Vec<SpaceRef>,
        label: impl Into<String>,
        f: impl Fn(&KTensor) -> KTensor + Send + Sync + 'static,
    ) -> KHom {
        KHom {
            dom,
            cod,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn apply(&self, t: &KTensor) -> KTensor {
        assert_eq!(t.rank(), self.dom.len(), "operator {} rank mismatch", self.label);
        (self.f)(t)
    }

    pub fn dom(&self) -> &[SpaceRef] {
        &self.dom
    }

    pub fn compose(&self, other: &KHom) -> KHom {
        let f = self.clone();
        let g = other.clone();
        let label = format!("({} o {})", self.label, other.label);
        KHom::from_fn(other.dom.clone(), self.cod.clone(), label, move |t| {
            f.apply(&g.apply(t))
        })
    }

    pub fn add(&self, other: &KHom) -> KHom {
        let f = self.clone();
        let g = other.clone();
        let label = format!("({} + {})", self.label, other.label);
        KHom::from_fn(self.dom.clone(), self.cod.clone(), label, move |t| {
            f.apply(t).add(&g.apply(t))
        })
    }

    pub fn scale(&self, s: &Scalar) -> KHom {
        let f = self.clone();
        let s = s.clone();
        let label = format!("({s})*{}", self.label);
        KHom::from_fn(self.dom.clone(), self.cod.clone(), label, move |t| {
            f.apply(t).scale(&s)
        })
    }

    pub fn sum(parts: &[KHom]) -> KHom {
        assert!(!parts.is_empty());
        parts[1..]
            .iter()
            .fold(parts[0].clone(), |acc, p| acc.add(p))
    }

    pub fn relabel(mut self, label: impl Into<String>) -> KHom {
        self.label = label.into();
        self
    }
}

/// `xi` acting on every leg of a tensor, spread by the world's coproduct.
pub fn act_all_legs(world: &World, xi: &HopfElement, t: &KTensor) -> KTensor {
    t.act_block(0..t.rank(), xi, world.ops())
}

/// The world's adjoint action on a tensor operator.
pub fn adjoint_k(world: &World, xi: &HopfElement, p: &KHom) -> KHom {
    let spread = world.ops().coproduct(xi);
    let hopf = world.hopf().clone();
    let world2 = world.clone();
    let p2 = p.clone();
    let terms: Vec<(HopfElement, HopfElement, Scalar)> = spread
        .terms()
        .map(|(words, c)| {
            (
                HopfElement::from_word(&hopf, words[0].clone()),
                world.ops().antipode(&HopfElement::from_word(&hopf, words[1].clone())),
                c.clone(),
            )
        })
        .collect();
    let label = format!("(({xi}) |>> {p})");
    KHom::from_fn(p.dom.clone(), p.cod.clone(), label, move |t| {
        let mut out = None;
        for (w1, w2, c) in &terms {
            let term = act_all_legs(&world2, w1, &p2.apply(&act_all_legs(&world2, w2, t)))
                .scale(c);
            out = Some(match out {
                None => term,
                Some(prev) => term.add(&prev),
            });
        }
        out.expect("coproduct has at least one term")
    })
}

/// Braided tensor product of operators over `K`:
/// `(P (x)_R Q)(v (x) w) = sum P(Rbar^a |> v) (x) (Rbar_a |>> Q)(w)`.
pub fn rtensor_k(world: &World, p: &Hom, q: &Hom) -> KHom {
    let legs = world.rmatrix().inverse_legs();
    let p2 = p.clone();
    let dressed: Vec<(HopfElement, Hom, Scalar)> = legs
        .into_iter()
        .map(|(r1, r2, c)| (r1, adjoint(world, &r2, q), c))
        .collect();
    let dom = vec![p.dom.clone(), q.dom.clone()];
    let cod = vec![p.cod.clone(), q.cod.clone()];
    let label = format!("({p} (x)_R {q})");
    KHom::from_fn(dom, cod, label, move |t| {
        let mut out = None;
        for (r1, q_dressed, c) in &dressed {
            let moved = t.act_leg(0, r1);
            let term = apply_two_legs(&p2, q_dressed, &moved).scale(c);
            out = Some(match out {
                None => term,
                Some(prev) => term.add(&prev),
            });
        }
        out.expect("R-matrix has at least one term")
    })
}

/// Apply `p` to the first leg and `q` to the second, term by term.
fn apply_two_legs(p: &Hom, q: &Hom, t: &KTensor) -> KTensor {
    let mut out = None;
    for (legs, c) in t.terms() {
        let alg_p = p.dom().algebra();
        let alg_q = q.dom().algebra();
        let mut v = ModuleElement::zero(p.dom());
        {
            let mut coeffs = v.coeffs().to_vec();
            coeffs[legs[0].0] = AlgebraElement::monomial(alg_p, legs[0].1.clone(), c.clone());
            v = ModuleElement::from_coeffs(p.dom(), coeffs);
        }
        let mut w = ModuleElement::zero(q.dom());
        {
            let mut coeffs = w.coeffs().to_vec();
            coeffs[legs[1].0] = AlgebraElement::monomial(
                alg_q,
                legs[1].1.clone(),
                Scalar::one(c.order()),
            );
            w = ModuleElement::from_coeffs(q.dom(), coeffs);
        }
        let term = KTensor::from_elements(&[p.apply(&v), q.apply(&w)]);
        out = Some(match out {
            None => term,
            Some(prev) => term.add(&prev),
        });
    }
    out.unwrap_or_else(|| KTensor::zero(vec![p.cod().clone(), q.cod().clone()]))
}

/// Braided tensor product over the algebra: act on the classical normal form
/// through the world's lift and projection.  The two factor domains must
/// split the lifted legs as `p` on the leaves of its domain and `q` on the
/// rest.
pub fn rtensor_a(world: &World, p: &Hom, q: &Hom) -> Hom {
    let dom = Space::tensor(&[p.dom.clone(), q.dom.clone()]);
    let cod = Space::tensor(&[p.cod.clone(), q.cod.clone()]);
    let split = Space::leaves(&p.dom).len();
    let world2 = world.clone();
    let k = rtensor_k(world, p, q);
    let label = format!("({p} (x)_R {q})");
    let p_dom = p.dom.clone();
    let q_dom = q.dom.clone();
    Hom::from_fn(&dom, &cod, label, move |z| {
        let lifted = world2.lift(z);
        // group the lifted leaves back into the two factor legs
        let grouped = group_legs(&lifted, &p_dom, &q_dom, split);
        world2.project(&k.apply(&grouped))
    })
}

/// Merge the first `split` legs into one leg of space `left` and the rest
/// into one leg of space `right` (no coefficient movement: pure regrouping).
fn group_legs(t: &KTensor, left: &SpaceRef, right: &SpaceRef, split: usize) -> KTensor {
    let l_dims: Vec<usize> = Space::leaves(left).iter().map(|s| s.rank()).collect();
    let r_dims: Vec<usize> = Space::leaves(right).iter().map(|s| s.rank()).collect();
    let alg = left.algebra().clone();
    let spaces = vec![left.clone(), right.clone()];
    let mut out = KTensor::zero(spaces);
    for (legs, c) in t.terms() {
        let (l_idx, l_mono) = fold_block(&alg, &legs[..split], &l_dims);
        let (r_idx, r_mono) = fold_block(&alg, &legs[split..], &r_dims);
        if let (Some(lm), Some(rm)) = (l_mono, r_mono) {
            out = out.add(&KTensor::from_terms(
                vec![left.clone(), right.clone()],
                [(vec![(l_idx, lm), (r_idx, rm)], c.clone())],
            ));
        }
    }
    out
}

/// Combine a run of legs into a single composite-leg index and monomial
/// (product of the leg monomials; `None` if it vanishes).
fn fold_block(
    alg: &crate::modalg::AlgebraRef,
    legs: &[(usize, crate::modalg::Mono)],
    dims: &[usize],
) -> (usize, Option<crate::modalg::Mono>) {
    let mut idx = 0;
    let mut mono: Option<crate::modalg::Mono> = None;
    for (slot, (j, m)) in legs.iter().enumerate() {
        idx = idx * dims[slot] + j;
        mono = match mono {
            None => Some(m.clone()),
            Some(prev) => alg.mono_mul(&prev, m),
        };
        if mono.is_none() {
            break;
        }
    }
    (idx, mono)
}

/// Apply a module map to a run of tensor legs: the legs in `range` are
/// folded into one element of the map's domain through the world's
/// projection, the map is applied, and the image is expanded back into the
/// leaves of its codomain through the world's lift.  Using the world's
/// conversions (rather than the classical ones) keeps the block application
/// consistent with the star structure in deformed worlds.
pub fn apply_on_block(
    world: &World,
    t: &KTensor,
    range: std::ops::Range<usize>,
    hom: &Hom,
) -> KTensor {
    let block_spaces: Vec<SpaceRef> = t.spaces()[range.clone()].to_vec();
    let cod_leaves = Space::leaves(hom.cod());
    let mut out_spaces: Vec<SpaceRef> = t.spaces()[..range.start].to_vec();
    out_spaces.extend(cod_leaves);
    out_spaces.extend_from_slice(&t.spaces()[range.end..]);
    let mut out = KTensor::zero(out_spaces.clone());
    for (legs, c) in t.terms() {
        let block = KTensor::from_terms(
            block_spaces.clone(),
            [(legs[range.clone()].to_vec(), c.clone())],
        );
        let image = hom.apply(&world.project(&block));
        if image.is_zero() {
            continue;
        }
        for (ilegs, ic) in world.lift(&image).terms() {
            let mut new_legs: Vec<(usize, crate::modalg::Mono)> =
                legs[..range.start].to_vec();
            new_legs.extend(ilegs.iter().cloned());
            new_legs.extend_from_slice(&legs[range.end..]);
            out = out.add(&KTensor::from_terms(
                out_spaces.clone(),
                [(new_legs, ic.clone())],
            ));
        }
    }
    out
}

/// Verify that the world's adjoint action is a Hopf action on operators and
/// spreads over composition by the world's coproduct.
pub fn adjoint_check(
    world: &World,
    hopf_probes: &[HopfElement],
    ops: &[Hom],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let hopf = world.hopf().clone();
    let mut report = CheckReport::new();

    report.run("action", hopf_probes.len() * hopf_probes.len() * ops.len(), || {
        for xi in hopf_probes {
            for zeta in hopf_probes {
                for p in ops {
                    let lhs = adjoint(world, xi, &adjoint(world, zeta, p));
                    let rhs = adjoint(world, &xi.mul(zeta), p);
                    if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                        return Some(w.with_note(format!("xi = {xi}, zeta = {zeta}")));
                    }
                }
            }
        }
        None
    });

    report.run("unit", ops.len(), || {
        let unit = HopfElement::one(&hopf);
        ops.iter()
            .find_map(|p| homs_agree(&adjoint(world, &unit, p), p, elem_probes))
    });

    report.run(
        "compose",
        hopf_probes.len() * ops.len() * ops.len(),
        || {
            for xi in hopf_probes {
                let spread = world.ops().coproduct(xi);
                for p in ops {
                    for q in ops {
                        let lhs = adjoint(world, xi, &p.compose(q));
                        let mut pieces = Vec::new();
                        for (words, c) in spread.terms() {
                            let w1 = HopfElement::from_word(&hopf, words[0].clone());
                            let w2 = HopfElement::from_word(&hopf, words[1].clone());
                            pieces.push(
                                adjoint(world, &w1, p)
                                    .compose(&adjoint(world, &w2, q))
                                    .scale(c),
                            );
                        }
                        let rhs = Hom::sum(&pieces);
                        if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                            return Some(w.with_note(format!("xi = {xi}")));
                        }
                    }
                }
            }
            None
        },
    );

    report
}

/// Verify the structural laws of the deformation map on operators.
pub fn deform_hom_check(
    world: &World,
    hopf_probes: &[HopfElement],
    ops: &[Hom],
    alg_probes: &[AlgebraElement],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    if world.twist().is_none() {
        report.skip("df", "needs a deformed world");
        return report;
    }
    let classical = World::classical(world.hopf());
    let space = ops[0].dom().clone();

    report.run("identity", 1, || {
        let id = Hom::identity(&space);
        homs_agree(&deform_hom(world, &id), &id, elem_probes)
    });

    report.run("leftmul.star", alg_probes.len(), || {
        // D takes classical multiplication operators to star ones
        alg_probes.iter().find_map(|a| {
            let lhs = deform_hom(world, &Hom::left_mul_op(&classical, &space, a));
            let rhs = Hom::left_mul_op(world, &space, a);
            homs_agree(&lhs, &rhs, elem_probes)
        })
    });

    report.run("compose", ops.len() * ops.len(), || {
        for p in ops {
            for q in ops {
                let lhs = deform_hom(world, &star_compose(world, p, q));
                let rhs = deform_hom(world, p).compose(&deform_hom(world, q));
                if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                    return Some(w);
                }
            }
        }
        None
    });

    report.run("module.left", alg_probes.len() * ops.len(), || {
        for a in alg_probes {
            for p in ops {
                let lhs = deform_hom(world, &star_hom_left(world, a, p));
                let rhs = Hom::left_mul_op(world, &space, a).compose(&deform_hom(world, p));
                if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                    return Some(w.with_note(format!("a = {a}")));
                }
            }
        }
        None
    });

    report.run("module.right", alg_probes.len() * ops.len(), || {
        for a in alg_probes {
            for p in ops {
                let lhs = deform_hom(world, &star_hom_right(world, p, a));
                let rhs = deform_hom(world, p).compose(&Hom::left_mul_op(world, &space, a));
                if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                    return Some(w.with_note(format!("a = {a}")));
                }
            }
        }
        None
    });

    report.run("adjoint", hopf_probes.len() * ops.len(), || {
        for xi in hopf_probes {
            for p in ops {
                let lhs = deform_hom(world, &adjoint(&classical, xi, p));
                let rhs = adjoint(world, xi, &deform_hom(world, p));
                if let Some(w) = homs_agree(&lhs, &rhs, elem_probes) {
                    return Some(w.with_note(format!("xi = {xi}")));
                }
            }
        }
        None
    });

    report.run("rightlinear", ops.len() * alg_probes.len(), || {
        // right-A-linear inputs become right-linear for the star structure
        for p in ops {
            let dp = deform_hom(world, p);
            for a in alg_probes {
                for v in elem_probes {
                    let lhs = dp.apply(&world.right_mul(v, a));
                    let rhs = world.right_mul(&dp.apply(v), a);
                    if lhs != rhs {
                        return Some(
                            Witness::new(format!("v = {v}, a = {a}"), &lhs, &rhs)
                                .with_note(format!("op {dp}")),
                        );
                    }
                }
            }
        }
        None
    });

    report.run("inverse", ops.len(), || {
        ops.iter().find_map(|p| {
            let back = deform_hom_inv(world, &deform_hom(world, p));
            homs_agree(&back, p, elem_probes)
        })
    });

    report
}

/// Verify the dual-module structure after deformation: the deformed dual
/// basis functionals are right-linear for the star structure, and their
/// pairing with the basis is invertible to leading order in `h` (checked by
/// exact Gaussian elimination over `Q` at the base point).
pub fn dual_check(
    world: &World,
    space: &SpaceRef,
    alg_probes: &[AlgebraElement],
    elem_probes: &[ModuleElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    if world.twist().is_none() {
        report.skip("dual", "needs a deformed world");
        return report;
    }
    let alg = space.algebra().clone();
    let line = Space::line(&alg);
    let duals: Vec<Hom> = (0..space.rank())
        .map(|i| {
            let line2 = line.clone();
            Hom::from_fn(space, &line, format!("eps{}", i + 1), move |v| {
                ModuleElement::from_coeffs(&line2, vec![v.coeff(i).clone()])
            })
        })
        .collect();

    let deformed: Vec<Hom> = duals.iter().map(|d| deform_hom(world, d)).collect();

    report.run(
        "rightlinear",
        deformed.len() * alg_probes.len() * elem_probes.len(),
        || {
            for dp in &deformed {
                for a in alg_probes {
                    for v in elem_probes {
                        let lhs = dp.apply(&world.right_mul(v, a));
                        let rhs = world.right_mul(&dp.apply(v), a);
                        if lhs != rhs {
                            return Some(
                                Witness::new(format!("v = {v}, a = {a}"), &lhs, &rhs)
                                    .with_note(format!("functional {dp}")),
                            );
                        }
                    }
                }
            }
            None
        },
    );

    report.run("pairing", space.rank() * space.rank(), || {
        // the leading-order pairing matrix must have full rank at every
        // evaluation point of the coefficient algebra
        let n = space.rank();
        let pairing: Vec<Vec<AlgebraElement>> = deformed
            .iter()
            .map(|dp| {
                (0..n)
                    .map(|j| dp.apply(&ModuleElement::basis_vector(space, j)).coeff(0).clone())
                    .collect()
            })
            .collect();
        let eval_points: Vec<crate::modalg::Mono> = match alg.kind() {
            crate::modalg::AlgebraKind::Poly { vars } => {
                vec![crate::modalg::Mono::Exp(vec![0; vars.len()])]
            }
            crate::modalg::AlgebraKind::FinFun { points } => {
                (0..points.len()).map(crate::modalg::Mono::Point).collect()
            }
        };
        for point in eval_points {
            let mut matrix: Vec<Vec<num::BigRational>> = pairing
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|a| {
                            a.terms()
                                .find(|(m, _)| **m == point)
                                .map(|(_, c)| c.coeff(0).clone())
                                .unwrap_or_else(|| num::BigRational::from_integer(0.into()))
                        })
                        .collect()
                })
                .collect();
            if rank_q(&mut matrix) != n {
                return Some(
                    Witness::new(
                        format!("pairing at {}", alg.mono_name(&point)),
                        "rank deficient",
                        "full rank",
                    )
                    .with_note("leading order in the deformation parameter"),
                );
            }
        }
        None
    });

    report
}

/// Rank of a rational matrix by Gaussian elimination (destructive).
fn rank_q(m: &mut [Vec<num::BigRational>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let zero = num::BigRational::from_integer(0.into());
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let Some(pivot) = (row..rows).find(|&r| m[r][col] != zero) else {
            continue;
        };
        m.swap(row, pivot);
        let p = m[row][col].clone();
        for r in 0..rows {
            if r != row && m[r][col] != zero {
                let factor = &m[r][col] / &p;
                for c in col..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

/// Verify the braided tensor product of operators: agreement with its
/// braiding form, covariance, the composition law, and the over-A version
/// (skipped when the world's product is not quasi-commutative).
pub fn rtensor_check(
    world: &World,
    p_ops: &[Hom],
    q_ops: &[Hom],
    hopf_probes: &[HopfElement],
    v_probes: &[ModuleElement],
    w_probes: &[ModuleElement],
    alg_probes: &[AlgebraElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    let pair_tensors: Vec<KTensor> = v_probes
        .iter()
        .flat_map(|v| {
            w_probes
                .iter()
                .map(|w| KTensor::from_elements(&[v.clone(), w.clone()]))
                .collect::<Vec<_>>()
        })
        .collect();

    report.run("form", p_ops.len() * q_ops.len(), || {
        // (P (x)_R Q) = (P (x) id) o tau o (Q (x) id) o tau^-1
        for p in p_ops {
            for q in q_ops {
                let direct = rtensor_k(world, p, q);
                for t in &pair_tensors {
                    let lhs = direct.apply(t);
                    let unbraided = crate::braid::tau_k_inv(world, t, 1);
                    let q_first = apply_two_legs(q, &Hom::identity(p.dom()), &unbraided);
                    let back = crate::braid::tau_k(world, &q_first, 1);
                    let rhs = apply_two_legs(p, &Hom::identity(q.cod()), &back);
                    if lhs != rhs {
                        return Some(
                            Witness::new(format!("t = {t}"), &lhs, &rhs)
                                .with_note(format!("ops {p}, {q}")),
                        );
                    }
                }
            }
        }
        None
    });

    report.run(
        "covariance",
        hopf_probes.len() * p_ops.len() * q_ops.len(),
        || {
            let hopf = world.hopf().clone();
            for xi in hopf_probes {
                let spread = world.ops().coproduct(xi);
                for p in p_ops {
                    for q in q_ops {
                        let lhs = adjoint_k(world, xi, &rtensor_k(world, p, q));
                        let mut pieces = Vec::new();
                        for (words, c) in spread.terms() {
                            let w1 = HopfElement::from_word(&hopf, words[0].clone());
                            let w2 = HopfElement::from_word(&hopf, words[1].clone());
                            pieces.push(
                                rtensor_k(
                                    world,
                                    &adjoint(world, &w1, p),
                                    &adjoint(world, &w2, q),
                                )
                                .scale(c),
                            );
                        }
                        let rhs = KHom::sum(&pieces);
                        for t in &pair_tensors {
                            let l = lhs.apply(t);
                            let r = rhs.apply(t);
                            if l != r {
                                return Some(
                                    Witness::new(format!("t = {t}"), &l, &r)
                                        .with_note(format!("xi = {xi}, ops {p}, {q}")),
                                );
                            }
                        }
                    }
                }
            }
            None
        },
    );

    report.run("composition", p_ops.len() * q_ops.len(), || {
        // (P' (x)_R Q') o (P (x)_R Q) = (P' o (Rbar^a |>> P)) (x)_R ((Rbar_a |>> Q') o Q)
        for (pi, p) in p_ops.iter().enumerate() {
            for (qi, q) in q_ops.iter().enumerate() {
                let p2 = &p_ops[(pi + 1) % p_ops.len()];
                let q2 = &q_ops[(qi + 1) % q_ops.len()];
                let lhs = rtensor_k(world, p2, q2).compose(&rtensor_k(world, p, q));
                let mut pieces = Vec::new();
                for (r1, r2, c) in world.rmatrix().inverse_legs() {
                    pieces.push(
                        rtensor_k(
                            world,
                            &p2.compose(&adjoint(world, &r1, p)),
                            &adjoint(world, &r2, q2).compose(q),
                        )
                        .scale(&c),
                    );
                }
                let rhs = KHom::sum(&pieces);
                for t in &pair_tensors {
                    let l = lhs.apply(t);
                    let r = rhs.apply(t);
                    if l != r {
                        return Some(
                            Witness::new(format!("t = {t}"), &l, &r)
                                .with_note(format!("ops {p}, {q}, {p2}, {q2}")),
                        );
                    }
                }
            }
        }
        None
    });

    // over-A version: requires a quasi-commutative product
    let quasi = quasi_commutativity_holds(world, alg_probes);
    if !quasi {
        report.skip(
            "overA",
            "precondition failed: the world's product is not quasi-commutative for its R-matrix",
        );
    } else {
        report.run(
            "overA",
            p_ops.len() * q_ops.len() * v_probes.len() * alg_probes.len(),
            || {
                for p in p_ops {
                    for q in q_ops {
                        let op = rtensor_a(world, p, q);
                        for v in v_probes {
                            for a in alg_probes {
                                for w in w_probes {
                                    let lhs =
                                        op.apply(&world.tensor_a(&world.right_mul(v, a), w));
                                    let rhs =
                                        op.apply(&world.tensor_a(v, &world.left_mul(a, w)));
                                    if lhs != rhs {
                                        return Some(
                                            Witness::new(
                                                format!("v = {v}, a = {a}, w = {w}"),
                                                &lhs,
                                                &rhs,
                                            )
                                            .with_note(format!("op {op}")),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                None
            },
        );
    }

    report
}

fn quasi_commutativity_holds(world: &World, alg_probes: &[AlgebraElement]) -> bool {
    crate::modalg::quasi_commutativity_check(world, alg_probes).passed()
}

/// Which edge of the commuting square to corrupt, for fault demonstrations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramFault {
    None,
    /// Omit the twist dressing of the factor operators on the classical edge.
    OmitDressing,
    /// Use the trivial braiding instead of the deformed one on the top edge.
    TrivialRTop,
}

/// Verify the commuting square for the braided tensor product of operators:
/// deforming the factors and tensoring with the deformed braiding equals
/// deforming the braided tensor of the twist-dressed factors, both over `K`
/// and over the algebra.
pub fn rtensor_diagram_check(
    world: &World,
    p: &Hom,
    q: &Hom,
    v_probes: &[ModuleElement],
    w_probes: &[ModuleElement],
    fault: DiagramFault,
) -> CheckReport {
    let mut report = CheckReport::new();
    let Some(tw) = world.twist() else {
        report.skip("diagram", "needs a deformed world");
        return report;
    };
    let classical = World::classical(world.hopf());
    let top_world = match fault {
        DiagramFault::TrivialRTop => {
            world.with_rmatrix(crate::twist::RMatrix::trivial(world.hopf()))
        }
        _ => world.clone(),
    };

    // bottom edge: sum_a (fbar^a |>> P) (x)_R (fbar_a |>> Q), then deform
    let bottom: Vec<(Hom, Hom, Scalar)> = match fault {
        DiagramFault::OmitDressing => vec![(
            p.clone(),
            q.clone(),
            Scalar::one(world.hopf().order),
        )],
        _ => tensor_legs(&tw.f_inv)
            .into_iter()
            .map(|(w1, w2, c)| {
                (
                    adjoint(&classical, &w1, p),
                    adjoint(&classical, &w2, q),
                    c,
                )
            })
            .collect(),
    };

    let dp = deform_hom(world, p);
    let dq = deform_hom(world, q);

    report.run("overK", v_probes.len() * w_probes.len(), || {
        let phi = |t: &KTensor| -> KTensor {
            let mut out = None;
            for (w1, w2, c) in tensor_legs(&tw.f_inv) {
                let term = t.act_leg(0, &w1).act_leg(1, &w2).scale(&c);
                out = Some(match out {
                    None => term,
                    Some(prev) => term.add(&prev),
                });
            }
            out.expect("twist has at least one term")
        };
        let lhs_op = rtensor_k(&top_world, &dp, &dq);
        let rhs_pieces: Vec<KHom> = bottom
            .iter()
            .map(|(bp, bq, c)| rtensor_k(&classical, bp, bq).scale(c))
            .collect();
        let rhs_op = KHom::sum(&rhs_pieces);
        for v in v_probes {
            for w in w_probes {
                let t = KTensor::from_elements(&[v.clone(), w.clone()]);
                let lhs = phi(&lhs_op.apply(&t));
                // deform the bottom operator: D(T)(s) = sum (fbar^a |>> T)(fbar_a |> s)
                let mut rhs = None;
                for (w1, w2, c) in tensor_legs(&tw.f_inv) {
                    let term = adjoint_k(&classical, &w1, &rhs_op)
                        .apply(&act_all_legs(&classical, &w2, &phi(&t)))
                        .scale(&c);
                    rhs = Some(match rhs {
                        None => term,
                        Some(prev) => term.add(&prev),
                    });
                }
                let rhs = rhs.unwrap();
                if lhs != rhs {
                    return Some(Witness::new(format!("v = {v}, w = {w}"), &lhs, &rhs));
                }
            }
        }
        None
    });

    report.run("overA", v_probes.len() * w_probes.len(), || {
        let lhs_op = rtensor_a(&top_world, &dp, &dq);
        let rhs_pieces: Vec<Hom> = bottom
            .iter()
            .map(|(bp, bq, c)| rtensor_a(&classical, bp, bq).scale(c))
            .collect();
        let rhs_op = deform_hom(world, &Hom::sum(&rhs_pieces));
        for v in v_probes {
            for w in w_probes {
                let z = world.tensor_a(v, w);
                let lhs = lhs_op.apply(&z);
                let rhs = rhs_op.apply(&z);
                if lhs != rhs {
                    return Some(Witness::new(format!("v = {v}, w = {w}"), &lhs, &rhs));
                }
            }
        }
        None
    });

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::default_probes;
    use crate::modalg::{AlgebraElement, ModuleElement, Space};
    use crate::scalar::rat;
    use crate::testkit::*;

    fn sample_ops(space: &SpaceRef, alg: &crate::modalg::AlgebraRef) -> Vec<Hom> {
        let x1 = AlgebraElement::var(alg, 0);
        let x2 = AlgebraElement::var(alg, 1);
        let zero = AlgebraElement::zero(alg);
        let one = AlgebraElement::one(alg);
        vec![
            Hom::matrix(
                space,
                space,
                vec![vec![zero.clone(), one.clone()], vec![x1.clone(), zero.clone()]],
                "P1",
            ),
            Hom::matrix(
                space,
                space,
                vec![vec![x2.clone(), zero.clone()], vec![zero.clone(), one.clone()]],
                "P2",
            ),
        ]
    }

    #[test]
    fn deformed_multiplication_operator_is_the_star_product() {
        let (alg, _d, world) = moyal_world(2);
        let line = Space::line(&alg);
        let x1 = AlgebraElement::var(&alg, 0);
        let x2 = AlgebraElement::var(&alg, 1);
        let classical = World::classical(alg.hopf());
        let l = Hom::left_mul_op(&classical, &line, &x1);
        let dl = deform_hom(&world, &l);
        let v = ModuleElement::basis_vector(&line, 0).mul_alg(&x2);
        // x1 * x2 = x1 x2 - h
        let expected = ModuleElement::basis_vector(&line, 0).mul_alg(
            &x1.mul(&x2)
                .add(&AlgebraElement::one(&alg).scale(&crate::scalar::Scalar::monomial(
                    rat(-1, 1),
                    1,
                    2,
                ))),
        );
        assert_eq!(dl.apply(&v), expected);
    }

    #[test]
    fn adjoint_laws_classical_and_deformed() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let ops = sample_ops(&v, &alg);
        let probes = module_probes(&v);
        let hprobes = default_probes(alg.hopf(), 2);
        for w in [&World::classical(alg.hopf()), &world] {
            let report = adjoint_check(w, &hprobes, &ops, &probes);
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn deformation_map_laws_on_the_plane() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let ops = sample_ops(&v, &alg);
        let probes = module_probes(&v);
        let hprobes = default_probes(alg.hopf(), 1);
        let aprobes = vec![
            AlgebraElement::var(&alg, 0),
            AlgebraElement::var(&alg, 1).mul(&AlgebraElement::var(&alg, 0)),
        ];
        let report = deform_hom_check(&world, &hprobes, &ops, &aprobes, &probes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn deformation_map_laws_for_klein() {
        let (alg, _d, world) = klein_world();
        let v = klein_module(&alg);
        let zero = AlgebraElement::zero(&alg);
        let one = AlgebraElement::one(&alg);
        let d2 = AlgebraElement::point(&alg, 2);
        let ops = vec![
            Hom::matrix(
                &v,
                &v,
                vec![vec![zero.clone(), one.clone()], vec![one.clone(), zero.clone()]],
                "Q1",
            ),
            Hom::matrix(
                &v,
                &v,
                vec![vec![d2.clone(), zero.clone()], vec![zero.clone(), one.clone()]],
                "Q2",
            ),
        ];
        let probes = module_probes(&v);
        let hprobes = default_probes(alg.hopf(), 0);
        let aprobes = point_probes(&alg);
        let report = deform_hom_check(&world, &hprobes, &ops, &aprobes, &probes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn dual_module_checks_pass() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let aprobes = vec![AlgebraElement::var(&alg, 0)];
        let probes = module_probes(&v);
        let report = dual_check(&world, &v, &aprobes, &probes);
        assert!(report.passed(), "{report}");

        let (kalg, _kd, kworld) = klein_world();
        let kv = klein_module(&kalg);
        let kaprobes = vec![AlgebraElement::point(&kalg, 1)];
        let kprobes = module_probes(&kv);
        let report = dual_check(&kworld, &kv, &kaprobes, &kprobes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn rtensor_laws_deformed_and_classical() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let ops = sample_ops(&v, &alg);
        let vp = vec![
            ModuleElement::basis_vector(&v, 0).mul_alg(&AlgebraElement::var(&alg, 0)),
            ModuleElement::basis_vector(&v, 1),
        ];
        let wp = vec![ModuleElement::basis_vector(&v, 0)
            .add(&ModuleElement::basis_vector(&v, 1).mul_alg(&AlgebraElement::var(&alg, 1)))];
        let hprobes = default_probes(alg.hopf(), 1);
        let aprobes = vec![AlgebraElement::var(&alg, 0)];
        for w in [&World::classical(alg.hopf()), &world] {
            let report = rtensor_check(w, &ops, &ops, &hprobes, &vp, &wp, &aprobes);
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn rtensor_diagram_commutes_and_faults_are_detected() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let ops = sample_ops(&v, &alg);
        let vp = vec![
            ModuleElement::basis_vector(&v, 0).mul_alg(&AlgebraElement::var(&alg, 0)),
            ModuleElement::basis_vector(&v, 1),
        ];
        let wp = vec![ModuleElement::basis_vector(&v, 0).mul_alg(&AlgebraElement::var(&alg, 1))];
        let good = rtensor_diagram_check(&world, &ops[0], &ops[1], &vp, &wp, DiagramFault::None);
        assert!(good.passed(), "{good}");
        let bad = rtensor_diagram_check(
            &world,
            &ops[0],
            &ops[1],
            &vp,
            &wp,
            DiagramFault::OmitDressing,
        );
        assert!(!bad.passed());
        let bad =
            rtensor_diagram_check(&world, &ops[0], &ops[1], &vp, &wp, DiagramFault::TrivialRTop);
        assert!(!bad.passed());
    }
}
