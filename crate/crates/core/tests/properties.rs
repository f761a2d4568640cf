use lqn_core::classifier::{classify, Status};
use lqn_core::generate::{generate, GeneratorForm};
use lqn_core::nilpotency::Budget;
use lqn_core::{char_poly, verify_certificate, ElementaryOperator, Matrix, Scalar};
use proptest::prelude::*;

fn scalar() -> impl Strategy<Value = Scalar> {
    (-40i64..40, 1i64..12, -40i64..40, 1i64..12).prop_map(|(a, b, c, d)| {
        &Scalar::ratio(a, b) + &(&Scalar::ratio(c, d) * &Scalar::i())
    })
}

fn int_matrix(d: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-5i64..=5, d * d)
        .prop_map(move |v| Matrix::new(d, d, v.into_iter().map(Scalar::from_i64).collect()).unwrap())
}

fn operator(d: usize, n: usize) -> impl Strategy<Value = ElementaryOperator> {
    proptest::collection::vec((int_matrix(d), int_matrix(d)), n)
        .prop_map(move |pairs| ElementaryOperator::new(d, pairs).unwrap())
}

fn eval_poly(coeffs: &[Scalar], m: &Matrix) -> Matrix {
    let d = m.rows();
    coeffs.iter().rev().fold(Matrix::zeros(d, d), |acc, c| &(&acc * m) + &Matrix::identity(d).scale(c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_json_round_trip(x in scalar()) {
        let s = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(serde_json::from_str::<Scalar>(&s).unwrap(), x);
    }

    #[test]
    fn matrix_json_round_trip(m in int_matrix(3), x in scalar()) {
        let m = m.scale(&x);
        let s = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<Matrix>(&s).unwrap(), m);
    }

    #[test]
    fn cayley_hamilton(m in int_matrix(4)) {
        let p = char_poly(&m).unwrap();
        prop_assert_eq!(p.degree(), Some(4));
        prop_assert!(eval_poly(p.coeffs(), &m).is_zero());
    }

    #[test]
    fn char_poly_is_similarity_invariant(m in int_matrix(3), p in int_matrix(3)) {
        prop_assume!(p.rank() == 3);
        let q = p.inverse().unwrap();
        prop_assert_eq!(char_poly(&(&(&p * &m) * &q)).unwrap(), char_poly(&m).unwrap());
    }

    #[test]
    fn minimal_length_preserves_the_map(phi in operator(3, 4)) {
        let r = phi.minimal_length();
        prop_assert!(r.operator.same_map(&phi));
        prop_assert!(r.length <= 4);
        prop_assert!(r.operator.is_length_reduced());
        prop_assert_eq!(r.length, phi.coefficient_matrix().rank());
    }

    #[test]
    fn operator_json_round_trip(phi in operator(2, 3)) {
        let s = serde_json::to_string(&phi).unwrap();
        prop_assert_eq!(serde_json::from_str::<ElementaryOperator>(&s).unwrap(), phi);
    }

    #[test]
    fn random_operators_classify_and_verify(phi in operator(2, 2), seed in 0u64..1000) {
        let v = classify(&phi, &Budget::default(), seed).unwrap();
        let r = verify_certificate(&phi, &v);
        prop_assert!(r.ok, "{:?}", r.failure);
        if v.status == Status::Lqn {
            prop_assert!(phi.sum_bi_ai().is_zero());
        }
    }
}

#[test]
fn generated_forms_verify() {
    let budget = Budget::default();
    for form in GeneratorForm::ALL {
        for seed in 1..=6 {
            let n = if form == GeneratorForm::Random { 1 + seed as usize % 3 } else { 3 };
            let d = form.min_dim(n) + seed as usize % 2;
            let phi = generate(form, n, d, seed).unwrap();
            let v = classify(&phi, &budget, seed).unwrap();
            let expected = match form {
                GeneratorForm::I | GeneratorForm::II | GeneratorForm::III => Status::Lqn,
                _ => Status::NotLqn,
            };
            assert_eq!(v.status, expected, "{form} seed {seed}");
            let r = verify_certificate(&phi, &v);
            assert!(r.ok, "{form} seed {seed}: {:?}", r.failure);
        }
    }
}

#[test]
fn generation_is_deterministic() {
    for form in GeneratorForm::ALL {
        let d = form.min_dim(3);
        assert_eq!(generate(form, 3, d, 42).unwrap(), generate(form, 3, d, 42).unwrap());
    }
}

#[test]
fn verdict_json_round_trip() {
    let phi = generate(GeneratorForm::III, 3, 4, 5).unwrap();
    let v = classify(&phi, &Budget::default(), 5).unwrap();
    let s = serde_json::to_string(&v).unwrap();
    let back: lqn_core::classifier::ClassificationVerdict = serde_json::from_str(&s).unwrap();
    assert_eq!(back, v);
}
