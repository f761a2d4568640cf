//! Hand-checked small instances with known answers.

use lqn_core::classifier::{classify, Form, Status};
use lqn_core::nilpotency::{
    all_x_nilpotent, classify_nilpotent_2dim_m3, fasoli_alpha, fasoli_beta, gerstenhaber_check, strict_triangularize,
    subspace_all_nilpotent, Budget, Certification, M3Class, Method, XNilpotency,
};
use lqn_core::operator::compose_is_zero;
use lqn_core::space::{is_locally_linearly_dependent, local_dimension};
use lqn_core::{ElementaryOperator, Matrix, OperatorSpace, Scalar};

fn e(d: usize, i: usize, j: usize) -> Matrix {
    Matrix::unit(d, i, j)
}

fn m_ii(d: usize) -> ElementaryOperator {
    ElementaryOperator::single(Matrix::identity(d), Matrix::identity(d)).unwrap()
}

/// `u = (E₁₁, E₂₁, E₃₁)`, `v = (E₂₂, E₁₁ + E₂₃, −E₁₂)`: Gram
/// `[[0, E₂₁, 0], [E₁₁, 0, E₂₁], [0, −E₁₁, 0]]`.
fn form_ii() -> ElementaryOperator {
    let u = [e(3, 0, 0), e(3, 1, 0), e(3, 2, 0)];
    let v = [e(3, 1, 1), &e(3, 0, 0) + &e(3, 1, 2), -&e(3, 0, 1)];
    ElementaryOperator::new(3, u.into_iter().zip(v).collect()).unwrap()
}

#[test]
fn form_ii_specimen_quantities() {
    let phi = form_ii();
    assert_eq!(phi.minimal_length().length, 3);
    let l = local_dimension(&phi.left_space(), 1, 50).unwrap();
    assert!(l.exact);
    assert_eq!(l.value, 3);
    assert_eq!(phi.v_space().dim(), 2);
    assert!(phi.sum_bi_ai().is_zero());
    let g = phi.gram();
    assert!(g.block(0, 0).is_zero());
    assert_eq!(g.block(0, 1), &e(3, 1, 0));
    assert_eq!(g.block(1, 0), &e(3, 0, 0));
    assert_eq!(g.block(2, 1), &-&e(3, 0, 0));
}

#[test]
fn form_ii_specimen_classifies_special_ii() {
    let v = classify(&form_ii(), &Budget::default(), 1).unwrap();
    assert_eq!(v.status, Status::Lqn);
    assert!(matches!(v.form, Some(Form::SpecialII { .. })), "{:?}", v.form);
    assert_eq!(v.evidence.exponent, Some(5));
}

#[test]
fn cancelling_pairs_have_length_zero() {
    let id = Matrix::identity(2);
    let phi = ElementaryOperator::new(2, vec![(id.clone(), id.clone()), (id.clone(), -&id)]).unwrap();
    assert_eq!(phi.minimal_length().length, 0);
    assert!(phi.is_zero_map());
}

#[test]
fn square_zero_single_pair() {
    let phi = ElementaryOperator::single(e(2, 0, 1), e(2, 0, 1)).unwrap();
    assert_eq!(phi.left_space().dim(), 1);
    assert_eq!(phi.right_space().dim(), 1);
    assert_eq!(phi.v_space().dim(), 0);
    assert!(phi.gram().block(0, 0).is_zero());
    assert!(phi.sum_bi_ai().is_zero());
    let v = classify(&phi, &Budget::default(), 1).unwrap();
    assert_eq!(v.status, Status::Lqn);
    match all_x_nilpotent(&phi, &Budget::default(), 1).unwrap() {
        XNilpotency::Certified(Certification::Structure { exponent, .. }) => assert_eq!(exponent, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn identity_pair_is_refuted_with_identity_witness() {
    let phi = m_ii(3);
    assert_eq!(phi.gram().block(0, 0), &Matrix::identity(3));
    let v = classify(&phi, &Budget::default(), 1).unwrap();
    assert_eq!(v.status, Status::NotLqn);
    assert_eq!(v.witness, Some(Matrix::identity(3)));
    assert!(!compose_is_zero(&phi, &phi, None).unwrap());
    assert!(compose_is_zero(&ElementaryOperator::zero(2), &ElementaryOperator::zero(2), None).unwrap());
}

#[test]
fn adjoint_flip_is_an_involution() {
    let phi = form_ii();
    let flipped = phi.adjoint_flip();
    assert_eq!(flipped.pairs()[0].a, phi.pairs()[0].b);
    assert_eq!(flipped.adjoint_flip(), phi);
}

#[test]
fn local_dimension_examples() {
    let s = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 1, 1)]).unwrap();
    assert!(!is_locally_linearly_dependent(&s, 1, 10).unwrap().dependent);
    let one = Scalar::one();
    assert_eq!(s.evaluate_dim(&[one.clone(), one]).unwrap(), 2);
    let dep = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 0, 1)]).unwrap();
    let r = is_locally_linearly_dependent(&dep, 1, 10).unwrap();
    assert!(r.dependent && r.local.exact);
    assert_eq!(r.local.value, 1);
    let zero = OperatorSpace::zero(3);
    assert_eq!(local_dimension(&zero, 1, 10).unwrap().value, 0);
}

#[test]
fn strictly_upper_m3_is_certified_and_attains_the_bound() {
    let s = OperatorSpace::span(3, &[e(3, 0, 1), e(3, 0, 2), e(3, 1, 2)]).unwrap();
    let r = subspace_all_nilpotent(&s, &Budget::default(), 1).unwrap();
    assert!(r.all_nilpotent);
    assert_eq!(r.method, Method::ExactGrid);
    let b = gerstenhaber_check(&r).unwrap();
    assert_eq!((b.bound, b.attained), (3, true));
    let flag = strict_triangularize(&s).unwrap();
    let std: Vec<Vec<Scalar>> = (0..3).map(|i| Matrix::identity(3).column(i)).collect();
    assert_eq!(flag.vectors, std);
}

#[test]
fn diagonal_unit_has_itself_as_counterexample() {
    let s = OperatorSpace::span(2, &[e(2, 0, 0)]).unwrap();
    let r = subspace_all_nilpotent(&s, &Budget::default(), 1).unwrap();
    assert!(!r.all_nilpotent);
    assert_eq!(r.counterexample, Some(e(2, 0, 0)));
}

#[test]
fn special_family_and_triangular_pair_in_m3() {
    let f = OperatorSpace::span(3, &[fasoli_alpha(), fasoli_beta()]).unwrap();
    let r = subspace_all_nilpotent(&f, &Budget::default(), 1).unwrap();
    assert!(r.all_nilpotent);
    assert!(!gerstenhaber_check(&r).unwrap().attained);
    assert!(matches!(classify_nilpotent_2dim_m3(&f, 1).unwrap(), M3Class::SpecialForm { .. }));
    let t = OperatorSpace::span(3, &[e(3, 0, 1), e(3, 0, 2)]).unwrap();
    assert!(matches!(classify_nilpotent_2dim_m3(&t, 1).unwrap(), M3Class::Triangularizable(_)));
}

#[test]
fn length_four_is_unsupported() {
    let pairs = vec![
        (e(3, 0, 0), e(3, 0, 0)),
        (e(3, 0, 1), e(3, 1, 0)),
        (e(3, 1, 1), e(3, 2, 2)),
        (e(3, 2, 0), e(3, 1, 2)),
    ];
    let phi = ElementaryOperator::new(3, pairs).unwrap();
    let err = classify(&phi, &Budget::default(), 1).unwrap_err();
    assert!(matches!(err, lqn_core::Error::Unsupported(_)), "{err}");
}
