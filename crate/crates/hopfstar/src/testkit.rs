//! Shared fixtures for the crate's unit tests: the deformed plane with the
//! exponential twist, the Klein-group function algebra with the bicharacter
//! twist, and small modules over each.

use crate::hopf::{FiniteDimTables, HopfAlgebra, HopfElement, HopfRef, HopfTensor};
use crate::modalg::{Algebra, AlgebraElement, AlgebraRef, ModuleElement, Space, SpaceAction, SpaceRef, World};
use crate::scalar::Scalar;
use crate::twist::{DeformedHopf, DeformedRef, Twist};
use std::sync::Arc;

pub fn pbw2(order: usize) -> HopfRef {
    HopfAlgebra::abelian_pbw(vec!["X1".into(), "X2".into()], order)
}

/// `F = exp(h X1 (x) X2)` over the two-generator PBW backend.
pub fn moyal_twist(order: usize) -> Twist {
    let h = pbw2(order);
    let x1 = HopfElement::generator(&h, 0);
    let x2 = HopfElement::generator(&h, 1);
    let t = HopfTensor::from_legs(&[x1, x2]).scale(&Scalar::h_power(1, order));
    Twist::new(
        HopfTensor::exp(&t).unwrap(),
        HopfTensor::exp(&t.scale(&-&Scalar::one(order))).unwrap(),
    )
}

/// Deformed plane: `K[x1, x2]` with the exponential twist, as (algebra,
/// deformed structure, deformed world).
pub fn moyal_world(order: usize) -> (AlgebraRef, DeformedRef, World) {
    let tw = moyal_twist(order);
    let alg = Algebra::poly(tw.hopf(), vec!["x1".into(), "x2".into()]).unwrap();
    let d: DeformedRef = Arc::new(DeformedHopf::new(tw));
    let world = World::deformed(&d);
    (alg, d, world)
}

pub fn klein_group() -> HopfRef {
    let mul = vec![
        vec![0, 1, 2, 3],
        vec![1, 0, 3, 2],
        vec![2, 3, 0, 1],
        vec![3, 2, 1, 0],
    ];
    let names = vec!["1".into(), "u".into(), "w".into(), "uw".into()];
    HopfAlgebra::finite_dim(FiniteDimTables::group_algebra(names, mul, 0), 0).unwrap()
}

/// The bicharacter twist `F = 1/2 (1(x)1 + 1(x)w + u(x)1 - u(x)w)`, its own
/// inverse.
pub fn klein_twist(h: &HopfRef) -> Twist {
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

/// Functions on the Klein group with the bicharacter twist.
pub fn klein_world() -> (AlgebraRef, DeformedRef, World) {
    let h = klein_group();
    let alg = Algebra::fin_fun(&h).unwrap();
    let d: DeformedRef = Arc::new(DeformedHopf::new(klein_twist(&h)));
    let world = World::deformed(&d);
    (alg, d, world)
}

/// Rank-2 module over the plane with `X1 |> e1 = e2` and all other basis
/// actions zero.
pub fn moyal_module(alg: &AlgebraRef) -> SpaceRef {
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

/// Rank-2 Klein-group module: `u` swaps the basis, `w` negates the swap.
pub fn klein_module(alg: &AlgebraRef) -> SpaceRef {
    let zero = AlgebraElement::zero(alg);
    let one = AlgebraElement::one(alg);
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
    Space::free(
        alg,
        vec!["e1".into(), "e2".into()],
        SpaceAction::Table(vec![id, swap, neg_swap, neg_id]),
    )
    .unwrap()
}

/// A handful of polynomial probes of mixed degree.
pub fn poly_probes(alg: &AlgebraRef) -> Vec<AlgebraElement> {
    let x1 = AlgebraElement::var(alg, 0);
    let x2 = AlgebraElement::var(alg, 1);
    vec![
        AlgebraElement::one(alg),
        x1.clone(),
        x2.clone(),
        x1.mul(&x2),
        x1.mul(&x1)
            .add(&x2.scale(&Scalar::from_ratio(3, 1, alg.order()))),
    ]
}

/// All four point masses.
pub fn point_probes(alg: &AlgebraRef) -> Vec<AlgebraElement> {
    (0..4).map(|p| AlgebraElement::point(alg, p)).collect()
}

/// A few elements of a rank-2 module mixing both basis vectors.
pub fn module_probes(space: &SpaceRef) -> Vec<ModuleElement> {
    let alg = space.algebra().clone();
    let e1 = ModuleElement::basis_vector(space, 0);
    let e2 = ModuleElement::basis_vector(space, 1);
    let scale = match alg.unit_mono() {
        Some(_) => AlgebraElement::var(&alg, 0),
        None => AlgebraElement::point(&alg, 2),
    };
    vec![e1.clone(), e2.mul_alg(&scale), e1.add(&e2)]
}
