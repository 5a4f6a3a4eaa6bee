//! Twists, the twisted Hopf structure `H^F`, dequantization, and R-matrices.
//!
//! A twist is an invertible `F` in `H (x) H` satisfying the cocycle condition
//! `F_12 (Delta (x) id)F = F_23 (id (x) Delta)F` and the counit normalization
//! `(eps (x) id)F = 1 = (id (x) eps)F`.  Twisting keeps product, unit and
//! counit, conjugates the coproduct, `Delta^F = F Delta(.) F^{-1}`, and
//! conjugates the antipode, `S^F = chi S(.) chi^{-1}`, by the element
//! `chi = f^a S(f_a)` built from the legs of `F` (summation over the leg
//! index `a` is implicit in that notation).  `chi` is always computed and the
//! antipode always conjugates, even when `chi` turns out central or 1.
//!
//! `F^{-1}` is in turn a twist of `H^F`, and twisting `H^F` by it returns
//! `H`; [`dequantize_check`] verifies this on probes.
//!
//! An R-matrix for a structure intertwines the coproduct with its opposite,
//! `Delta^cop = R Delta(.) R^{-1}`; quasitriangularity and the induced
//! Yang-Baxter relation are verified, not assumed.  Twisting transports R:
//! `R^F = F_21 R F^{-1}`, with inverse `F R^{-1} (F^{-1})_21`.

use crate::check::{CheckReport, Witness};
use crate::hopf::{HopfElement, HopfOps, HopfRef, HopfTensor};
use std::sync::Arc;

/// An invertible element of `H (x) H` with its inverse stored explicitly.
///
/// Construction does not validate the twist equations: [`Twist::validate`]
/// reports on them, and deliberately broken twists are used to demonstrate
/// failing checks.  The deformation theorems hold only for validated twists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Twist {
    pub f: HopfTensor,
    pub f_inv: HopfTensor,
}

impl Twist {
    pub fn new(f: HopfTensor, f_inv: HopfTensor) -> Self {
        assert_eq!(f.rank(), 2, "twist must have rank 2");
        assert_eq!(f_inv.rank(), 2, "twist inverse must have rank 2");
        Twist { f, f_inv }
    }

    /// The trivial twist `1 (x) 1`.
    pub fn trivial(hopf: &HopfRef) -> Self {
        let id = HopfTensor::identity(hopf, 2);
        Twist {
            f: id.clone(),
            f_inv: id,
        }
    }

    pub fn hopf(&self) -> &HopfRef {
        self.f.hopf()
    }

    /// Verify invertibility, the 2-cocycle condition (an exact rank-3 tensor
    /// identity) and the counit normalization against the classical structure.
    pub fn validate(&self) -> CheckReport {
        let hopf = self.hopf().clone();
        let classical = crate::hopf::ClassicalHopf(hopf.clone());
        let id2 = HopfTensor::identity(&hopf, 2);
        let id1 = HopfTensor::identity(&hopf, 1);
        let mut report = CheckReport::new();

        report.run("invertible", 1, || {
            let left = self.f.mul(&self.f_inv);
            let right = self.f_inv.mul(&self.f);
            if left != id2 {
                return Some(Witness::new("F * F^-1", &left, &id2));
            }
            if right != id2 {
                return Some(Witness::new("F^-1 * F", &right, &id2));
            }
            None
        });

        report.run("cocycle", 1, || {
            let lhs = self
                .f
                .embed(3, &[0, 1])
                .mul(&self.f.coproduct_leg(0, &classical));
            let rhs = self
                .f
                .embed(3, &[1, 2])
                .mul(&self.f.coproduct_leg(1, &classical));
            (lhs != rhs).then(|| {
                Witness::new("F_12 (Delta(x)id)F vs F_23 (id(x)Delta)F", &lhs, &rhs)
            })
        });

        report.run("normalization", 1, || {
            let left = self.f.counit_leg(0);
            let right = self.f.counit_leg(1);
            if left != id1 {
                return Some(Witness::new("(eps (x) id) F", &left, &id1));
            }
            if right != id1 {
                return Some(Witness::new("(id (x) eps) F", &right, &id1));
            }
            None
        });

        report
    }
}

/// The twisted Hopf structure `H^F`: same algebra, conjugated coproduct and
/// antipode.  Implements [`HopfOps`] so every structural computation (axiom
/// checks, leg operations, further twisting) runs against it unchanged.
pub struct DeformedHopf {
    base: HopfRef,
    twist: Twist,
    chi: HopfElement,
    chi_inv: HopfElement,
}

impl DeformedHopf {
    /// Build `H^F`.  Precondition: `twist.validate()` passes; this is not
    /// re-checked here so that broken twists can be run through the checkers
    /// to demonstrate failures.
    pub fn new(twist: Twist) -> Self {
        let base = twist.hopf().clone();
        let classical = crate::hopf::ClassicalHopf(base.clone());
        // chi = f^a S(f_a): antipode on the second leg, then multiply legs.
        let chi = twist
            .f
            .antipode_leg(1, &classical)
            .contract(0)
            .into_element();
        // chi^-1 = S(fbar^a) fbar_a from the legs of F^-1.
        let chi_inv = twist
            .f_inv
            .antipode_leg(0, &classical)
            .contract(0)
            .into_element();
        DeformedHopf {
            base,
            twist,
            chi,
            chi_inv,
        }
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn chi(&self) -> &HopfElement {
        &self.chi
    }

    pub fn chi_inv(&self) -> &HopfElement {
        &self.chi_inv
    }
}

impl HopfOps for DeformedHopf {
    fn hopf(&self) -> &HopfRef {
        &self.base
    }

    fn coproduct(&self, a: &HopfElement) -> HopfTensor {
        self.twist.f.mul(&a.coproduct()).mul(&self.twist.f_inv)
    }

    fn antipode(&self, a: &HopfElement) -> HopfElement {
        self.chi.mul(&a.antipode()).mul(&self.chi_inv)
    }

    fn label(&self) -> String {
        "H^F".to_string()
    }
}

/// Verify that `chi * chi^-1 = 1` and that the deformed structure satisfies
/// the Hopf axioms on the probes (runs [`crate::hopf::hopf_check`] against
/// `H^F`).
pub fn deformed_structure_check(d: &DeformedHopf, probes: &[HopfElement]) -> CheckReport {
    let mut report = CheckReport::new();
    let one = HopfElement::one(&d.base);
    report.run("chi.invertible", 1, || {
        let p = d.chi.mul(&d.chi_inv);
        let q = d.chi_inv.mul(&d.chi);
        if p != one {
            return Some(Witness::new("chi * chi^-1", &p, &one));
        }
        if q != one {
            return Some(Witness::new("chi^-1 * chi", &q, &one));
        }
        None
    });
    report.merge(crate::hopf::hopf_check(d, probes));
    report
}

/// Verify dequantization: `F^{-1}` is a twist of `H^F`, and twisting `H^F`
/// by it recovers the classical coproduct and antipode on the probes.
pub fn dequantize_check(d: &DeformedHopf, probes: &[HopfElement]) -> CheckReport {
    let hopf = d.base.clone();
    let id1 = HopfTensor::identity(&hopf, 1);
    let id2 = HopfTensor::identity(&hopf, 2);
    let f = &d.twist.f;
    let f_inv = &d.twist.f_inv;
    let mut report = CheckReport::new();

    report.run("inverse.invertible", 1, || {
        let left = f_inv.mul(f);
        let right = f.mul(f_inv);
        if left != id2 {
            return Some(Witness::new("F^-1 * F", &left, &id2));
        }
        if right != id2 {
            return Some(Witness::new("F * F^-1", &right, &id2));
        }
        None
    });

    // Cocycle condition for F^-1 over the *deformed* coproduct.
    report.run("inverse.cocycle", 1, || {
        let lhs = f_inv.embed(3, &[0, 1]).mul(&f_inv.coproduct_leg(0, d));
        let rhs = f_inv.embed(3, &[1, 2]).mul(&f_inv.coproduct_leg(1, d));
        (lhs != rhs).then(|| {
            Witness::new(
                "F^-1_12 (Delta^F (x) id)F^-1 vs F^-1_23 (id (x) Delta^F)F^-1",
                &lhs,
                &rhs,
            )
        })
    });

    report.run("inverse.normalization", 1, || {
        let left = f_inv.counit_leg(0);
        let right = f_inv.counit_leg(1);
        if left != id1 {
            return Some(Witness::new("(eps (x) id) F^-1", &left, &id1));
        }
        if right != id1 {
            return Some(Witness::new("(id (x) eps) F^-1", &right, &id1));
        }
        None
    });

    report.run("roundtrip.coproduct", probes.len(), || {
        probes.iter().find_map(|xi| {
            let lhs = f_inv.mul(&d.coproduct(xi)).mul(f);
            let rhs = xi.coproduct();
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("roundtrip.antipode", probes.len(), || {
        // chi' built from F^-1 over H^F; conjugating S^F by it must give S.
        let chi2 = f_inv.antipode_leg(1, d).contract(0).into_element();
        let chi2_inv = f.antipode_leg(0, d).contract(0).into_element();
        probes.iter().find_map(|xi| {
            let lhs = chi2.mul(&d.antipode(xi)).mul(&chi2_inv);
            let rhs = xi.antipode();
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report
}

/// An R-matrix with its inverse stored explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RMatrix {
    pub r: HopfTensor,
    pub r_inv: HopfTensor,
}

impl RMatrix {
    pub fn new(r: HopfTensor, r_inv: HopfTensor) -> Self {
        assert_eq!(r.rank(), 2, "R-matrix must have rank 2");
        assert_eq!(r_inv.rank(), 2, "R-matrix inverse must have rank 2");
        RMatrix { r, r_inv }
    }

    /// The trivial R-matrix `1 (x) 1` (the classical, symmetric case).
    pub fn trivial(hopf: &HopfRef) -> Self {
        let id = HopfTensor::identity(hopf, 2);
        RMatrix {
            r: id.clone(),
            r_inv: id,
        }
    }

    pub fn hopf(&self) -> &HopfRef {
        self.r.hopf()
    }

    /// `R_21 = R^{-1}` — the triangular (involutive braiding) case.
    pub fn is_triangular(&self) -> bool {
        self.r.permute(&[1, 0]) == self.r_inv
    }

    /// Legs of `R^{-1}` as `(first, second, coeff)` element pairs, for
    /// consumers that sum over `Rbar^a (x) Rbar_a`.
    pub fn inverse_legs(&self) -> Vec<(HopfElement, HopfElement, crate::scalar::Scalar)> {
        tensor_legs(&self.r_inv)
    }

    /// Legs of `R` as `(first, second, coeff)` element pairs.
    pub fn legs(&self) -> Vec<(HopfElement, HopfElement, crate::scalar::Scalar)> {
        tensor_legs(&self.r)
    }
}

/// Split a rank-2 tensor into `(first-leg, second-leg, coefficient)` triples,
/// one per canonical term.
pub fn tensor_legs(t: &HopfTensor) -> Vec<(HopfElement, HopfElement, crate::scalar::Scalar)> {
    assert_eq!(t.rank(), 2);
    let hopf = t.hopf();
    t.terms()
        .map(|(legs, c)| {
            (
                HopfElement::from_word(hopf, legs[0].clone()),
                HopfElement::from_word(hopf, legs[1].clone()),
                c.clone(),
            )
        })
        .collect()
}

/// Transport an R-matrix along a twist: `R^F = F_21 R F^{-1}`.
pub fn r_matrix_from_twist(twist: &Twist, base: &RMatrix) -> RMatrix {
    let f21 = twist.f.permute(&[1, 0]);
    let f_inv21 = twist.f_inv.permute(&[1, 0]);
    RMatrix {
        r: f21.mul(&base.r).mul(&twist.f_inv),
        r_inv: twist.f.mul(&base.r_inv).mul(&f_inv21),
    }
}

/// Verify the R-matrix laws for the given Hopf structure: invertibility,
/// intertwining of the opposite coproduct, both quasitriangularity relations,
/// the induced Yang-Baxter equation, counit collapse, the antipode relation
/// `(S (x) id)R = R^{-1}` (with the antipode of the same structure), and
/// triangularity.
pub fn r_matrix_check(ops: &dyn HopfOps, rm: &RMatrix, probes: &[HopfElement]) -> CheckReport {
    let hopf = rm.hopf().clone();
    let id2 = HopfTensor::identity(&hopf, 2);
    let id1 = HopfTensor::identity(&hopf, 1);
    let mut report = CheckReport::new();

    report.run("invertible", 1, || {
        let left = rm.r.mul(&rm.r_inv);
        let right = rm.r_inv.mul(&rm.r);
        if left != id2 {
            return Some(Witness::new("R * R^-1", &left, &id2));
        }
        if right != id2 {
            return Some(Witness::new("R^-1 * R", &right, &id2));
        }
        None
    });

    report.run("quasi.cocommutative", probes.len(), || {
        probes.iter().find_map(|xi| {
            let lhs = ops.coproduct(xi).permute(&[1, 0]).mul(&rm.r);
            let rhs = rm.r.mul(&ops.coproduct(xi));
            (lhs != rhs).then(|| Witness::new(xi, &lhs, &rhs))
        })
    });

    report.run("quasitriangular.left", 1, || {
        // (Delta (x) id) R = R_13 R_23
        let lhs = rm.r.coproduct_leg(0, ops);
        let rhs = rm.r.embed(3, &[0, 2]).mul(&rm.r.embed(3, &[1, 2]));
        (lhs != rhs).then(|| Witness::new("(Delta (x) id) R", &lhs, &rhs))
    });

    report.run("quasitriangular.right", 1, || {
        // (id (x) Delta) R = R_13 R_12
        let lhs = rm.r.coproduct_leg(1, ops);
        let rhs = rm.r.embed(3, &[0, 2]).mul(&rm.r.embed(3, &[0, 1]));
        (lhs != rhs).then(|| Witness::new("(id (x) Delta) R", &lhs, &rhs))
    });

    report.run("yang.baxter", 1, || {
        let r12 = rm.r.embed(3, &[0, 1]);
        let r13 = rm.r.embed(3, &[0, 2]);
        let r23 = rm.r.embed(3, &[1, 2]);
        let lhs = r12.mul(&r13).mul(&r23);
        let rhs = r23.mul(&r13).mul(&r12);
        (lhs != rhs).then(|| Witness::new("R_12 R_13 R_23 vs R_23 R_13 R_12", &lhs, &rhs))
    });

    report.run("counit", 1, || {
        let left = rm.r.counit_leg(0);
        let right = rm.r.counit_leg(1);
        if left != id1 {
            return Some(Witness::new("(eps (x) id) R", &left, &id1));
        }
        if right != id1 {
            return Some(Witness::new("(id (x) eps) R", &right, &id1));
        }
        None
    });

    report.run("antipode", 1, || {
        let lhs = rm.r.antipode_leg(0, ops);
        (lhs != rm.r_inv).then(|| Witness::new("(S (x) id) R", &lhs, &rm.r_inv))
    });

    report.run("triangular", 1, || {
        let flip = rm.r.permute(&[1, 0]);
        (flip != rm.r_inv).then(|| Witness::new("R_21", &flip, &rm.r_inv))
    });

    report
}

/// Shared handle for twisted structures.
pub type DeformedRef = Arc<DeformedHopf>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::{
        default_probes, ClassicalHopf, FiniteDimTables, HopfAlgebra, HopfElement, HopfTensor,
    };
    use crate::scalar::{rat, Scalar};

    fn pbw2(order: usize) -> HopfRef {
        HopfAlgebra::abelian_pbw(vec!["X1".into(), "X2".into()], order)
    }

    /// `F = exp(h theta X1 (x) X2)` with `theta = 1`.
    fn moyal_twist(order: usize) -> Twist {
        let h = pbw2(order);
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let t = HopfTensor::from_legs(&[x1, x2]).scale(&Scalar::h_power(1, order));
        Twist::new(
            HopfTensor::exp(&t).unwrap(),
            HopfTensor::exp(&t.scale(&-&Scalar::one(order))).unwrap(),
        )
    }

    pub(crate) fn klein_group() -> HopfRef {
        let mul = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
        HopfAlgebra::finite_dim(FiniteDimTables::group_algebra(names, mul, 0), 0).unwrap()
    }

    /// The bicharacter twist on `K[Z2 x Z2]`:
    /// `F = 1/2 (1(x)1 + 1(x)w + u(x)1 - u(x)w)`, its own inverse.
    pub(crate) fn klein_twist(h: &HopfRef) -> Twist {
        let one = HopfElement::one(h);
        let u = HopfElement::basis(h, 1);
        let w = HopfElement::basis(h, 2);
        let half = Scalar::from_ratio(1, 2, 0);
        let f = HopfTensor::from_legs(&[one.clone(), one.clone()])
            .add(&HopfTensor::from_legs(&[one.clone(), w.clone()]))
            .add(&HopfTensor::from_legs(&[u.clone(), one]))
            .sub(&HopfTensor::from_legs(&[u, w]))
            .scale(&half);
        Twist::new(f.clone(), f)
    }

    #[test]
    fn trivial_twist_validates() {
        let h = pbw2(2);
        assert!(Twist::trivial(&h).validate().passed());
    }

    #[test]
    fn moyal_twist_validates_and_matches_exponential_oracle() {
        let tw = moyal_twist(3);
        let report = tw.validate();
        assert!(report.passed(), "{report}");

        // Independent oracle for the cocycle: with primitive commuting
        // generators both sides equal a single rank-3 exponential.
        let h = tw.hopf().clone();
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let one = HopfElement::one(&h);
        let hpow = Scalar::h_power(1, 3);
        let sum = HopfTensor::from_legs(&[x1.clone(), x2.clone(), one.clone()])
            .add(&HopfTensor::from_legs(&[x1.clone(), one.clone(), x2.clone()]))
            .add(&HopfTensor::from_legs(&[one, x1, x2]))
            .scale(&hpow);
        let oracle = HopfTensor::exp(&sum).unwrap();
        let classical = ClassicalHopf(h);
        let lhs = tw.f.embed(3, &[0, 1]).mul(&tw.f.coproduct_leg(0, &classical));
        assert_eq!(lhs, oracle);
        let rhs = tw.f.embed(3, &[1, 2]).mul(&tw.f.coproduct_leg(1, &classical));
        assert_eq!(rhs, oracle);
    }

    #[test]
    fn truncated_twist_without_corrections_fails_cocycle_at_order_two() {
        // F = 1(x)1 + h X1 (x) X1 is not a cocycle; the defect enters at h^2.
        let h = pbw2(2);
        let x1 = HopfElement::generator(&h, 0);
        let t = HopfTensor::from_legs(&[x1.clone(), x1.clone()]).scale(&Scalar::h_power(1, 2));
        let f = HopfTensor::identity(&h, 2).add(&t);
        // genuine inverse: geometric series of the nilpotent part
        let f_inv = HopfTensor::identity(&h, 2).sub(&t).add(&t.mul(&t));
        let tw = Twist::new(f, f_inv);
        let report = tw.validate();
        assert!(report.entry("invertible").unwrap().passed());
        assert!(!report.entry("cocycle").unwrap().passed());

        let classical = ClassicalHopf(h);
        let lhs = tw.f.embed(3, &[0, 1]).mul(&tw.f.coproduct_leg(0, &classical));
        let rhs = tw.f.embed(3, &[1, 2]).mul(&tw.f.coproduct_leg(1, &classical));
        assert_eq!(lhs.sub(&rhs).h_valuation(), Some(2));
    }

    #[test]
    fn moyal_chi_is_exponential_of_minus_h_x1x2() {
        let tw = moyal_twist(3);
        let d = DeformedHopf::new(tw);
        let h = d.hopf().clone();
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let x1x2 = x1.mul(&x2);
        // chi = sum_k (-h)^k/k! (X1 X2)^k, frozen through order 3
        let expected = HopfElement::one(&h)
            .add(&x1x2.scale(&Scalar::monomial(rat(-1, 1), 1, 3)))
            .add(&x1x2.mul(&x1x2).scale(&Scalar::monomial(rat(1, 2), 2, 3)))
            .add(
                &x1x2
                    .mul(&x1x2)
                    .mul(&x1x2)
                    .scale(&Scalar::monomial(rat(-1, 6), 3, 3)),
            );
        assert_eq!(*d.chi(), expected);
        assert_eq!(d.chi().mul(d.chi_inv()), HopfElement::one(&h));
        // chi is central here, so S^F = S even though chi != 1.
        assert_eq!(d.antipode(&x1), x1.antipode());
    }

    #[test]
    fn moyal_deformed_coproduct_keeps_generators_primitive() {
        let tw = moyal_twist(3);
        let d = DeformedHopf::new(tw);
        let h = d.hopf().clone();
        let x1 = HopfElement::generator(&h, 0);
        assert_eq!(d.coproduct(&x1), x1.coproduct());
    }

    #[test]
    fn moyal_deformed_structure_and_dequantization_pass() {
        let tw = moyal_twist(2);
        let d = DeformedHopf::new(tw);
        let probes = default_probes(d.hopf(), 3);
        let report = deformed_structure_check(&d, &probes);
        assert!(report.passed(), "{report}");
        let report = dequantize_check(&d, &probes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn corrupted_inverse_fails_dequantization_with_witness() {
        let mut tw = moyal_twist(2);
        // damage F^-1 at top order
        let h = tw.hopf().clone();
        let x1 = HopfElement::generator(&h, 0);
        tw.f_inv = tw
            .f_inv
            .add(&HopfTensor::from_legs(&[x1.clone(), x1]).scale(&Scalar::h_power(2, 2)));
        let d = DeformedHopf::new(tw);
        let probes = default_probes(d.hopf(), 2);
        let report = dequantize_check(&d, &probes);
        assert!(!report.passed());
        assert!(!report.entry("inverse.invertible").unwrap().passed());
    }

    #[test]
    fn klein_chi_is_half_sum_with_sign() {
        let h = klein_group();
        let tw = klein_twist(&h);
        assert!(tw.validate().passed());
        let d = DeformedHopf::new(tw);
        // chi = 1/2 (1 + u + w - uw), its own inverse
        let half = Scalar::from_ratio(1, 2, 0);
        let expected = HopfElement::one(&h)
            .add(&HopfElement::basis(&h, 1))
            .add(&HopfElement::basis(&h, 2))
            .sub(&HopfElement::basis(&h, 3))
            .scale(&half);
        assert_eq!(*d.chi(), expected);
        assert_eq!(*d.chi_inv(), expected);
        let probes = default_probes(&h, 0);
        assert!(deformed_structure_check(&d, &probes).passed());
        assert!(dequantize_check(&d, &probes).passed());
    }

    #[test]
    fn moyal_r_matrix_is_antisymmetric_exponential_and_triangular() {
        let tw = moyal_twist(3);
        let h = tw.hopf().clone();
        let rm = r_matrix_from_twist(&tw, &RMatrix::trivial(&h));
        // Oracle: with commuting legs, R^F = F_21 F^-1 = exp(h(X2(x)X1 - X1(x)X2)).
        let x1 = HopfElement::generator(&h, 0);
        let x2 = HopfElement::generator(&h, 1);
        let arg = HopfTensor::from_legs(&[x2.clone(), x1.clone()])
            .sub(&HopfTensor::from_legs(&[x1, x2]))
            .scale(&Scalar::h_power(1, 3));
        assert_eq!(rm.r, HopfTensor::exp(&arg).unwrap());
        assert!(rm.is_triangular());

        let d = DeformedHopf::new(tw);
        let probes = default_probes(&h, 3);
        let report = r_matrix_check(&d, &rm, &probes);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn klein_r_matrix_checks_pass() {
        let h = klein_group();
        let tw = klein_twist(&h);
        let rm = r_matrix_from_twist(&tw, &RMatrix::trivial(&h));
        assert!(rm.is_triangular());
        let d = DeformedHopf::new(tw);
        let probes = default_probes(&h, 0);
        let report = r_matrix_check(&d, &rm, &probes);
        assert!(report.passed(), "{report}");
        // the twist is genuinely noncocommutative-looking: R^F != 1 (x) 1
        assert_ne!(rm.r, HopfTensor::identity(&h, 2));
    }

    #[test]
    fn trivial_r_matrix_passes_classical_checks() {
        let h = pbw2(2);
        let rm = RMatrix::trivial(&h);
        let probes = default_probes(&h, 2);
        let report = r_matrix_check(&ClassicalHopf(h), &rm, &probes);
        assert!(report.passed(), "{report}");
    }
}
