//! Braidings induced by an R-matrix.
//!
//! On a tensor over `K`, the braiding swaps two adjacent blocks of legs while
//! acting with the legs of `R^{-1}`:
//!
//! `tau(v (x) w) = (Rbar^a |> w) (x) (Rbar_a |> v)`.
//!
//! A block of several legs receives its R-leg through the iterated coproduct
//! of the world's Hopf structure, so the same routine computes the braiding
//! of composite objects.  On tensor products over the algebra, the braiding
//! is computed through the world's lift and projection, which makes it the
//! deformed braiding when the world carries a twist.
//!
//! [`braid_check`] verifies invertibility, the two hexagon decompositions of
//! block braidings (the representation-level face of quasitriangularity),
//! and well-definedness on the quotient over the algebra.

use crate::check::{CheckReport, Witness};
use crate::modalg::{AlgebraElement, KTensor, ModuleElement, World};

/// Braid the leg blocks `[start..mid)` and `[mid..end)`, leaving other legs
/// untouched.  The second block receives the first leg of each `R^{-1}` term,
/// the first block the second leg, and the blocks then swap places.
pub fn tau_k_at(world: &World, t: &KTensor, start: usize, mid: usize, end: usize) -> KTensor {
    assert!(start < mid && mid < end && end <= t.rank(), "bad block bounds");
    let perm: Vec<usize> = (0..start)
        .chain(mid..end)
        .chain(start..mid)
        .chain(end..t.rank())
        .collect();
    let mut out = None;
    for (r1, r2, c) in world.rmatrix().inverse_legs() {
        let term = t
            .act_block(mid..end, &r1, world.ops())
            .act_block(start..mid, &r2, world.ops())
            .permute(&perm)
            .scale(&c);
        out = Some(match out {
            None => term,
            Some(prev) => term.add(&prev),
        });
    }
    out.expect("R-matrix has at least one term")
}

/// Inverse braiding on the blocks `[start..mid)` and `[mid..end)`:
/// `tau_inv(w (x) v) = (R_a |> v) (x) (R^a |> w)`.
pub fn tau_k_inv_at(world: &World, t: &KTensor, start: usize, mid: usize, end: usize) -> KTensor {
    assert!(start < mid && mid < end && end <= t.rank(), "bad block bounds");
    let perm: Vec<usize> = (0..start)
        .chain(mid..end)
        .chain(start..mid)
        .chain(end..t.rank())
        .collect();
    let mut out = None;
    for (r1, r2, c) in world.rmatrix().legs() {
        let term = t
            .act_block(mid..end, &r2, world.ops())
            .act_block(start..mid, &r1, world.ops())
            .permute(&perm)
            .scale(&c);
        out = Some(match out {
            None => term,
            Some(prev) => term.add(&prev),
        });
    }
    out.expect("R-matrix has at least one term")
}

/// Braid an over-K tensor into two blocks at `split`.
pub fn tau_k(world: &World, t: &KTensor, split: usize) -> KTensor {
    tau_k_at(world, t, 0, split, t.rank())
}

pub fn tau_k_inv(world: &World, t: &KTensor, split: usize) -> KTensor {
    tau_k_inv_at(world, t, 0, split, t.rank())
}

/// Braiding on the tensor product over the algebra: lift, braid the leaf
/// blocks `[0..split)` and `[split..)`, project back.
pub fn tau_a(world: &World, v: &ModuleElement, split: usize) -> ModuleElement {
    world.project(&tau_k(world, &world.lift(v), split))
}

pub fn tau_a_inv(world: &World, v: &ModuleElement, split: usize) -> ModuleElement {
    world.project(&tau_k_inv(world, &world.lift(v), split))
}

/// Verify the braiding laws on concrete probe elements.
pub fn braid_check(
    world: &World,
    v_probes: &[ModuleElement],
    w_probes: &[ModuleElement],
    u_probes: &[ModuleElement],
    alg_probes: &[AlgebraElement],
) -> CheckReport {
    let mut report = CheckReport::new();

    report.run("inverse", v_probes.len() * w_probes.len(), || {
        for v in v_probes {
            for w in w_probes {
                let t = KTensor::from_elements(&[v.clone(), w.clone()]);
                let back = tau_k_inv(world, &tau_k(world, &t, 1), 1);
                if back != t {
                    return Some(Witness::new(format!("v = {v}, w = {w}"), &back, &t));
                }
                let x = world.tensor_a(v, w);
                let round = tau_a_inv(world, &tau_a(world, &x, 1), 1);
                if round != x {
                    return Some(
                        Witness::new(format!("v = {v}, w = {w}"), &round, &x)
                            .with_note("over the algebra"),
                    );
                }
            }
        }
        None
    });

    report.run(
        "relations.left",
        v_probes.len() * w_probes.len() * u_probes.len(),
        || {
            for v in v_probes {
                for w in w_probes {
                    for u in u_probes {
                        let t = KTensor::from_elements(&[v.clone(), w.clone(), u.clone()]);
                        // braid the block (v,w) past u in one move...
                        let lhs = tau_k_at(world, &t, 0, 2, 3);
                        // ...or leg by leg, inner first
                        let rhs =
                            tau_k_at(world, &tau_k_at(world, &t, 1, 2, 3), 0, 1, 2);
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("v = {v}, w = {w}, u = {u}"),
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
        "relations.right",
        v_probes.len() * w_probes.len() * u_probes.len(),
        || {
            for v in v_probes {
                for w in w_probes {
                    for u in u_probes {
                        let t = KTensor::from_elements(&[v.clone(), w.clone(), u.clone()]);
                        // braid v past the block (w,u) in one move...
                        let lhs = tau_k_at(world, &t, 0, 1, 3);
                        // ...or leg by leg, outer first
                        let rhs =
                            tau_k_at(world, &tau_k_at(world, &t, 0, 1, 2), 1, 2, 3);
                        if lhs != rhs {
                            return Some(Witness::new(
                                format!("v = {v}, w = {w}, u = {u}"),
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
        "welldefined",
        v_probes.len() * alg_probes.len() * w_probes.len(),
        || {
            for v in v_probes {
                for a in alg_probes {
                    for w in w_probes {
                        let s1 = KTensor::from_elements(&[world.right_mul(v, a), w.clone()]);
                        let s2 = KTensor::from_elements(&[v.clone(), world.left_mul(a, w)]);
                        let lhs = world.project(&tau_k(world, &s1, 1));
                        let rhs = world.project(&tau_k(world, &s2, 1));
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

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modalg::{AlgebraElement, ModuleElement, Space, World};
    use crate::scalar::{rat, Scalar};
    use crate::testkit::*;
    use crate::twist::RMatrix;

    #[test]
    fn deformed_flip_of_coordinates_picks_up_a_constant() {
        let (alg, _d, world) = moyal_world(2);
        let line = Space::line(&alg);
        let x1 = ModuleElement::basis_vector(&line, 0).mul_alg(&AlgebraElement::var(&alg, 0));
        let x2 = ModuleElement::basis_vector(&line, 0).mul_alg(&AlgebraElement::var(&alg, 1));
        let t = KTensor::from_elements(&[x1.clone(), x2.clone()]);
        let braided = tau_k(&world, &t, 1);
        // tau(x1 (x) x2) = x2 (x) x1 - h (1 (x) 1)
        let expected = KTensor::from_elements(&[x2, x1]).add(
            &KTensor::from_elements(&[
                ModuleElement::basis_vector(&line, 0),
                ModuleElement::basis_vector(&line, 0),
            ])
            .scale(&Scalar::monomial(rat(-1, 1), 1, 2)),
        );
        assert_eq!(braided, expected);
    }

    #[test]
    fn classical_braiding_is_the_flip() {
        let (alg, _d, _world) = moyal_world(1);
        let world = World::classical(alg.hopf());
        let v = moyal_module(&alg);
        let e1x = ModuleElement::basis_vector(&v, 0).mul_alg(&AlgebraElement::var(&alg, 0));
        let e2 = ModuleElement::basis_vector(&v, 1);
        let t = KTensor::from_elements(&[e1x.clone(), e2.clone()]);
        assert_eq!(tau_k(&world, &t, 1), KTensor::from_elements(&[e2, e1x]));
    }

    #[test]
    fn braid_laws_hold_in_the_deformed_plane() {
        let (alg, _d, world) = moyal_world(2);
        let v = moyal_module(&alg);
        let line = Space::line(&alg);
        let vp = module_probes(&v);
        let wp = vec![
            ModuleElement::basis_vector(&line, 0).mul_alg(&AlgebraElement::var(&alg, 1)),
            ModuleElement::basis_vector(&line, 0),
        ];
        let up =
            vec![ModuleElement::basis_vector(&v, 1).mul_alg(&AlgebraElement::var(&alg, 0))];
        let ap = poly_probes(&alg);
        let report = braid_check(&world, &vp, &wp, &up, &ap);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn braid_laws_hold_for_the_klein_function_algebra() {
        let (alg, _d, world) = klein_world();
        let v = klein_module(&alg);
        let vp = module_probes(&v);
        let wp = vec![
            ModuleElement::basis_vector(&v, 0).mul_alg(&AlgebraElement::point(&alg, 1)),
            ModuleElement::basis_vector(&v, 1),
        ];
        let up = vec![ModuleElement::basis_vector(&v, 0)];
        let ap = point_probes(&alg);
        let report = braid_check(&world, &vp, &wp, &up, &ap);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn trivial_braiding_in_the_deformed_world_is_not_well_defined() {
        let (alg, _d, world) = moyal_world(2);
        let bad = world.with_rmatrix(RMatrix::trivial(alg.hopf()));
        let line = Space::line(&alg);
        let vp =
            vec![ModuleElement::basis_vector(&line, 0).mul_alg(&AlgebraElement::var(&alg, 0))];
        let wp = vec![ModuleElement::basis_vector(&line, 0)];
        let ap = vec![AlgebraElement::var(&alg, 1)];
        let report = braid_check(&bad, &vp, &wp, &vp, &ap);
        assert!(!report.passed());
        let entry = report.entry("welldefined").unwrap();
        assert!(!entry.passed());
    }
}
