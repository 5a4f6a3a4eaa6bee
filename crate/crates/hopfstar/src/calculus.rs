//! Exterior calculus over a polynomial module algebra: the graded modules of
//! differential forms, the exterior derivative, and the classical and star
//! wedge products.
//!
//! Degree-`n` forms are the free module with basis the sorted wedge words in
//! the generators' differentials; the Hopf generators annihilate the
//! differentials and act on coefficients, so the action matrices are zero
//! and [`ModuleElement::act`] does the right thing unchanged.
//!
//! The exterior derivative inserts each differential with the sign of the
//! transpositions needed to keep the wedge word sorted.  [`Calculus::wedge`]
//! dresses the factors with the world's inverse twist legs before the
//! classical wedge, so the same call computes the undeformed product in a
//! classical world and the star wedge in a deformed one.  The checks verify
//! that the derivative squares to zero, commutes with the Hopf action, and
//! satisfies the graded Leibniz rule for the world's wedge — the derivative
//! itself needs no deformation — together with associativity, unitality,
//! covariance, and graded quasi-commutativity for the world's braiding.

use crate::check::{CheckReport, Witness};
use crate::error::Error;
use crate::hopf::HopfElement;
use crate::modalg::{AlgebraElement, AlgebraKind, AlgebraRef, ModuleElement, Space, SpaceRef, World};
use crate::twist::tensor_legs;

/// The tower of form modules over one polynomial algebra.
pub struct Calculus {
    alg: AlgebraRef,
    spaces: Vec<SpaceRef>,
    sets: Vec<Vec<Vec<usize>>>,
}

impl Calculus {
    pub fn new(alg: &AlgebraRef) -> Result<Calculus, Error> {
        let AlgebraKind::Poly { vars } = alg.kind() else {
            return Err(Error::Invalid(
                "exterior calculus needs a polynomial algebra".into(),
            ));
        };
        let m = vars.len();
        let mut spaces = Vec::new();
        let mut sets = Vec::new();
        for n in 0..=m {
            let level = subsets(m, n);
            let basis: Vec<String> = level
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        "1".into()
                    } else {
                        s.iter()
                            .map(|&i| format!("d{}", vars[i]))
                            .collect::<Vec<_>>()
                            .join("^")
                    }
                })
                .collect();
            let rank = basis.len();
            let zeros = vec![
                vec![vec![AlgebraElement::zero(alg); rank]; rank];
                m
            ];
            spaces.push(Space::free(alg, basis, crate::modalg::SpaceAction::Derivation(zeros))?);
            sets.push(level);
        }
        Ok(Calculus {
            alg: alg.clone(),
            spaces,
            sets,
        })
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.alg
    }

    /// Highest form degree (= number of generators).
    pub fn top(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn omega(&self, n: usize) -> &SpaceRef {
        &self.spaces[n]
    }

    pub fn degree_of(&self, space: &SpaceRef) -> Option<usize> {
        self.spaces.iter().position(|s| Space::same(s, space))
    }

    fn set_index(&self, n: usize, set: &[usize]) -> usize {
        self.sets[n]
            .iter()
            .position(|s| s == set)
            .expect("wedge word outside the basis")
    }

    /// One form of degree `n`: coefficient `a` on the wedge word `set`.
    pub fn form(&self, n: usize, set: &[usize], a: &AlgebraElement) -> ModuleElement {
        let j = self.set_index(n, set);
        let mut coeffs = vec![AlgebraElement::zero(&self.alg); self.spaces[n].rank()];
        coeffs[j] = a.clone();
        ModuleElement::from_coeffs(&self.spaces[n], coeffs)
    }

    /// Exterior derivative; `None` on top-degree forms, whose image module
    /// is zero.
    pub fn d(&self, w: &ModuleElement) -> Option<ModuleElement> {
        let n = self
            .degree_of(w.space())
            .expect("form belongs to this calculus");
        if n == self.top() {
            return None;
        }
        let target = &self.spaces[n + 1];
        let mut coeffs = vec![AlgebraElement::zero(&self.alg); target.rank()];
        for (j, a) in w.coeffs().iter().enumerate() {
            let set = &self.sets[n][j];
            for i in 0..self.top() {
                if set.contains(&i) {
                    continue;
                }
                let da = a.partial(i);
                if da.is_zero() {
                    continue;
                }
                let pos = set.iter().filter(|&&k| k < i).count();
                let mut merged = set.clone();
                merged.insert(pos, i);
                let k = self.set_index(n + 1, &merged);
                let term = if pos % 2 == 0 { da } else { da.neg() };
                coeffs[k] = coeffs[k].add(&term);
            }
        }
        Some(ModuleElement::from_coeffs(target, coeffs))
    }

    /// Classical wedge product; `None` when the degrees overflow the top.
    pub fn wedge_classical(
        &self,
        w: &ModuleElement,
        e: &ModuleElement,
    ) -> Option<ModuleElement> {
        let p = self.degree_of(w.space()).expect("left form degree");
        let q = self.degree_of(e.space()).expect("right form degree");
        if p + q > self.top() {
            return None;
        }
        let target = &self.spaces[p + q];
        let mut coeffs = vec![AlgebraElement::zero(&self.alg); target.rank()];
        for (j, a) in w.coeffs().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, b) in e.coeffs().iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let Some((merged, odd)) = merge_sets(&self.sets[p][j], &self.sets[q][k]) else {
                    continue;
                };
                let idx = self.set_index(p + q, &merged);
                let ab = a.mul(b);
                let term = if odd { ab.neg() } else { ab };
                coeffs[idx] = coeffs[idx].add(&term);
            }
        }
        Some(ModuleElement::from_coeffs(target, coeffs))
    }

    /// The world's wedge product: inverse-twist legs dress the factors
    /// before the classical wedge.  Classical worlds reduce to
    /// [`Calculus::wedge_classical`].
    pub fn wedge(&self, world: &World, w: &ModuleElement, e: &ModuleElement) -> Option<ModuleElement> {
        let Some(tw) = world.twist() else {
            return self.wedge_classical(w, e);
        };
        let mut out: Option<ModuleElement> = None;
        for (w1, w2, c) in tensor_legs(&tw.f_inv) {
            let piece = self.wedge_classical(&w.act(&w1), &e.act(&w2))?.scale(&c);
            out = Some(match out {
                None => piece,
                Some(prev) => prev.add(&piece),
            });
        }
        out
    }
}

/// All size-`n` subsets of `0..m`, lexicographically.
fn subsets(m: usize, n: usize) -> Vec<Vec<usize>> {
    subsets_from(0, m, n)
}

fn subsets_from(start: usize, m: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in start..m {
        for mut rest in subsets_from(first + 1, m, n - 1) {
            let mut s = vec![first];
            s.append(&mut rest);
            out.push(s);
        }
    }
    out
}

/// Merge two sorted disjoint wedge words; the flag is the sign parity of the
/// merge.  `None` when they share a differential.
fn merge_sets(s: &[usize], t: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut inversions = 0;
    for &x in s {
        if t.contains(&x) {
            return None;
        }
        inversions += t.iter().filter(|&&y| y < x).count();
    }
    let mut merged: Vec<usize> = s.iter().chain(t.iter()).copied().collect();
    merged.sort_unstable();
    Some((merged, inversions % 2 == 1))
}

/// Verify the calculus against the world's wedge: derivative structure,
/// graded multiplicative laws, covariance, and graded quasi-commutativity.
pub fn calculus_check(
    world: &World,
    calc: &Calculus,
    hopf_probes: &[HopfElement],
    form_probes: &[ModuleElement],
) -> CheckReport {
    let mut report = CheckReport::new();
    let deg = |w: &ModuleElement| calc.degree_of(w.space()).expect("probe degree");
    let top = calc.top();

    report.run("d.squared", form_probes.len(), || {
        for w in form_probes {
            if deg(w) + 2 > top {
                continue;
            }
            let dd = calc.d(&calc.d(w).unwrap()).unwrap();
            if !dd.is_zero() {
                return Some(Witness::new(format!("w = {w}"), &dd, "0"));
            }
        }
        None
    });

    report.run("d.covariance", hopf_probes.len() * form_probes.len(), || {
        for xi in hopf_probes {
            for w in form_probes {
                if deg(w) == top {
                    continue;
                }
                let lhs = calc.d(&w.act(xi)).unwrap();
                let rhs = calc.d(w).unwrap().act(xi);
                if lhs != rhs {
                    return Some(
                        Witness::new(format!("w = {w}"), &lhs, &rhs)
                            .with_note(format!("xi = {xi}")),
                    );
                }
            }
        }
        None
    });

    report.run("wedge.unit", form_probes.len(), || {
        let one = ModuleElement::basis_vector(calc.omega(0), 0);
        for w in form_probes {
            let left = calc.wedge(world, &one, w).unwrap();
            let right = calc.wedge(world, w, &one).unwrap();
            if &left != w {
                return Some(Witness::new(format!("w = {w}"), &left, w));
            }
            if &right != w {
                return Some(Witness::new(format!("w = {w}"), &right, w));
            }
        }
        None
    });

    report.run(
        "wedge.assoc",
        form_probes.len() * form_probes.len() * form_probes.len(),
        || {
            for u in form_probes {
                for v in form_probes {
                    for w in form_probes {
                        if deg(u) + deg(v) + deg(w) > top {
                            continue;
                        }
                        let lhs = calc
                            .wedge(world, &calc.wedge(world, u, v).unwrap(), w)
                            .unwrap();
                        let rhs = calc
                            .wedge(world, u, &calc.wedge(world, v, w).unwrap())
                            .unwrap();
                        if lhs != rhs {
                            return Some(
                                Witness::new(format!("u = {u}, v = {v}, w = {w}"), &lhs, &rhs),
                            );
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "wedge.covariance",
        hopf_probes.len() * form_probes.len() * form_probes.len(),
        || {
            let hopf = world.hopf().clone();
            for xi in hopf_probes {
                let spread = world.ops().coproduct(xi);
                for v in form_probes {
                    for w in form_probes {
                        if deg(v) + deg(w) > top {
                            continue;
                        }
                        let lhs = calc.wedge(world, v, w).unwrap().act(xi);
                        let mut rhs = ModuleElement::zero(calc.omega(deg(v) + deg(w)));
                        for (words, c) in spread.terms() {
                            let w1 = HopfElement::from_word(&hopf, words[0].clone());
                            let w2 = HopfElement::from_word(&hopf, words[1].clone());
                            rhs = rhs.add(
                                &calc
                                    .wedge(world, &v.act(&w1), &w.act(&w2))
                                    .unwrap()
                                    .scale(c),
                            );
                        }
                        if lhs != rhs {
                            return Some(
                                Witness::new(format!("v = {v}, w = {w}"), &lhs, &rhs)
                                    .with_note(format!("xi = {xi}")),
                            );
                        }
                    }
                }
            }
            None
        },
    );

    report.run(
        "wedge.graded",
        form_probes.len() * form_probes.len(),
        || {
            for v in form_probes {
                for w in form_probes {
                    let (p, q) = (deg(v), deg(w));
                    if p + q > top {
                        continue;
                    }
                    let lhs = calc.wedge(world, v, w).unwrap();
                    let mut rhs = ModuleElement::zero(calc.omega(p + q));
                    for (r1, r2, c) in world.rmatrix().inverse_legs() {
                        rhs = rhs.add(
                            &calc
                                .wedge(world, &w.act(&r1), &v.act(&r2))
                                .unwrap()
                                .scale(&c),
                        );
                    }
                    if p * q % 2 == 1 {
                        rhs = rhs.neg();
                    }
                    if lhs != rhs {
                        return Some(Witness::new(format!("v = {v}, w = {w}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );

    report.run(
        "d.leibniz",
        form_probes.len() * form_probes.len(),
        || {
            for v in form_probes {
                for w in form_probes {
                    let (p, q) = (deg(v), deg(w));
                    if p + q >= top {
                        continue;
                    }
                    let lhs = calc.d(&calc.wedge(world, v, w).unwrap()).unwrap();
                    let left = calc.wedge(world, &calc.d(v).unwrap(), w).unwrap();
                    let mut right = calc.wedge(world, v, &calc.d(w).unwrap()).unwrap();
                    if p % 2 == 1 {
                        right = right.neg();
                    }
                    let rhs = left.add(&right);
                    if lhs != rhs {
                        return Some(Witness::new(format!("v = {v}, w = {w}"), &lhs, &rhs));
                    }
                }
            }
            None
        },
    );

    report
}
