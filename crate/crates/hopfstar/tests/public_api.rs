//! Drives the whole deformation pipeline from outside the crate: every
//! structure a consumer needs — Hopf algebras on both backends, twists,
//! deformed worlds, module algebras, operator deformation, calculi, and
//! connections — must be constructible and checkable through the public
//! surface alone, and the headline example values must be reproducible.

use std::sync::Arc;

use hopfstar::calculus::{calculus_check, Calculus};
use hopfstar::check::{CheckReport, CheckStatus};
use hopfstar::connection::{leibniz_check, Connection};
use hopfstar::homdef::{adjoint_check, deform_hom_check, Hom};
use hopfstar::hopf::{
    default_probes, hopf_check, FiniteDimTables, HopfAlgebra, HopfElement, HopfTensor,
};
use hopfstar::modalg::{
    module_check, quasi_commutativity_check, Algebra, AlgebraElement, ModuleElement, Space, World,
};
use hopfstar::scalar::Scalar;
use hopfstar::twist::{
    deformed_structure_check, r_matrix_check, DeformedHopf, DeformedRef, Twist,
};

const ORDER: usize = 2;

fn assert_all_pass(report: &CheckReport, label: &str) {
    assert!(!report.entries.is_empty(), "{label}: empty report");
    for entry in &report.entries {
        assert!(
            matches!(entry.status, CheckStatus::Pass),
            "{label}: entry `{}` did not pass: {:?}",
            entry.name,
            entry.status
        );
    }
}

#[test]
fn polynomial_pipeline_is_drivable_from_outside() {
    let hopf = HopfAlgebra::abelian_pbw(vec!["X1".into(), "X2".into()], ORDER);
    let x1 = HopfElement::generator(&hopf, 0);
    let x2 = HopfElement::generator(&hopf, 1);
    let hopf_probes = default_probes(&hopf, 2);
    let classical = World::classical(&hopf);
    assert_all_pass(&hopf_check(classical.ops(), &hopf_probes), "hopf axioms");

    let h = Scalar::h_power(1, ORDER);
    let step = HopfTensor::from_legs(&[x1.clone(), x2.clone()]);
    let twist = Twist::new(
        HopfTensor::exp(&step.scale(&h)).expect("nilpotent exponent"),
        HopfTensor::exp(&step.scale(&-&h)).expect("nilpotent exponent"),
    );
    assert_all_pass(&twist.validate(), "twist laws");

    let deformed: DeformedRef = Arc::new(DeformedHopf::new(twist));
    assert_all_pass(
        &deformed_structure_check(&deformed, &hopf_probes),
        "twisted structure",
    );

    let world = World::deformed(&deformed);
    assert_all_pass(
        &r_matrix_check(world.ops(), world.rmatrix(), &hopf_probes),
        "induced R-matrix",
    );

    let alg = Algebra::poly(&hopf, vec!["x1".into(), "x2".into()]).expect("polynomial algebra");
    let a1 = AlgebraElement::var(&alg, 0);
    let a2 = AlgebraElement::var(&alg, 1);
    let product = a1.mul(&a2);

    // The first-order correction of the star product on coordinates.
    let star = world.alg_mul(&a1, &a2);
    let expected = product.sub(&AlgebraElement::one(&alg).scale(&h));
    assert!(
        star.sub(&expected).is_zero(),
        "x1 * x2 should deform to x1*x2 - h, got {star:?}"
    );

    let alg_probes = [
        AlgebraElement::one(&alg),
        a1.clone(),
        a2.clone(),
        a1.mul(&a1),
        product.clone(),
    ];
    assert_all_pass(
        &quasi_commutativity_check(&world, &alg_probes),
        "braided commutativity",
    );

    let line = Space::line(&alg);
    let e = ModuleElement::basis_vector(&line, 0);
    let elem_probes = [e.clone(), e.mul_alg(&a1), e.mul_alg(&product)];
    assert_all_pass(
        &module_check(&world, &hopf_probes, &alg_probes, &elem_probes),
        "deformed bimodule",
    );

    let ops = [
        Hom::left_mul_op(&classical, &line, &a1),
        Hom::left_mul_op(&classical, &line, &a2),
        Hom::left_mul_op(&classical, &line, &product.add(&AlgebraElement::one(&alg))),
    ];
    assert_all_pass(
        &adjoint_check(&world, &hopf_probes, &ops, &elem_probes),
        "adjoint action",
    );
    assert_all_pass(
        &deform_hom_check(&world, &hopf_probes, &ops, &alg_probes, &elem_probes),
        "operator deformation",
    );

    let calc = Arc::new(Calculus::new(&alg).expect("differential calculus"));
    let mut form_probes = Vec::new();
    for degree in 0..=calc.top() {
        let space = calc.omega(degree);
        for j in 0..space.rank() {
            form_probes.push(ModuleElement::basis_vector(space, j));
            form_probes.push(ModuleElement::basis_vector(space, j).mul_alg(&a1));
        }
    }
    assert_all_pass(
        &calculus_check(&world, &calc, &hopf_probes, &form_probes),
        "deformed calculus",
    );

    let target = Space::tensor(&[line.clone(), calc.omega(1).clone()]);
    let images = vec![ModuleElement::basis_vector(&target, 0).mul_alg(&a1)];
    let conn = Connection::new(&calc, &line, images).expect("connection");
    assert_all_pass(
        &leibniz_check(
            &classical,
            &calc,
            &conn.as_hom("conn"),
            &alg_probes,
            &elem_probes,
        ),
        "connection Leibniz",
    );
}

#[test]
fn finite_backend_is_drivable_from_outside() {
    // Klein four-group: every element is its own inverse.
    let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
    let mul = vec![
        vec![0, 1, 2, 3],
        vec![1, 0, 3, 2],
        vec![2, 3, 0, 1],
        vec![3, 2, 1, 0],
    ];
    let tables = FiniteDimTables::group_algebra(names, mul, 0);
    let hopf = HopfAlgebra::finite_dim(tables, 0).expect("group algebra");
    let hopf_probes = default_probes(&hopf, 1);
    let classical = World::classical(&hopf);
    assert_all_pass(&hopf_check(classical.ops(), &hopf_probes), "hopf axioms");

    // Self-inverse bicharacter twist (1/2)(1x1 + 1xw + ux1 - uxw).
    let half = Scalar::from_ratio(1, 2, 0);
    let leg = |i: usize, j: usize, sign: i64| {
        HopfTensor::from_legs(&[HopfElement::basis(&hopf, i), HopfElement::basis(&hopf, j)])
            .scale(&half.scale(&hopfstar::scalar::rat(sign, 1)))
    };
    let f = leg(0, 0, 1).add(&leg(0, 2, 1)).add(&leg(1, 0, 1)).add(&leg(1, 2, -1));
    let twist = Twist::new(f.clone(), f);
    assert_all_pass(&twist.validate(), "twist laws");

    let deformed: DeformedRef = Arc::new(DeformedHopf::new(twist));
    let world = World::deformed(&deformed);
    assert_all_pass(
        &r_matrix_check(world.ops(), world.rmatrix(), &hopf_probes),
        "induced R-matrix",
    );

    // The function algebra on the group becomes noncommutative: the star
    // product of the indicator functions at 1 and u collapses to half the
    // indicator at u.
    let alg = Algebra::fin_fun(&hopf).expect("function algebra");
    let d1 = AlgebraElement::point(&alg, 0);
    let du = AlgebraElement::point(&alg, 1);
    let star = world.alg_mul(&d1, &du);
    assert!(
        star.sub(&du.scale(&half)).is_zero(),
        "delta_1 * delta_u should be (1/2) delta_u, got {star:?}"
    );

    let alg_probes = [AlgebraElement::one(&alg), d1, du];
    assert_all_pass(
        &quasi_commutativity_check(&world, &alg_probes),
        "braided commutativity",
    );
}
