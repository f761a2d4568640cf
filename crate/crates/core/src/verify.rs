//! Independent re-check of a classification verdict.
//!
//! Only exact arithmetic primitives are used here: products of matrices,
//! row reduction, characteristic polynomials and the grid enumeration. None
//! of the flag, conjugator or witness searches are called.

use crate::classifier::{ClassificationVerdict, Form, Status};
use crate::grid::Layer;
use crate::matrix::{Matrix, Vector};
use crate::operator::ElementaryOperator;
use crate::poly::char_poly;
use crate::scalar::Scalar;

/// Outcome of [`verify_certificate`]; `failure` names the first failed check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub ok: bool,
    pub failure: Option<String>,
}

impl VerifyReport {
    fn pass() -> Self {
        Self { ok: true, failure: None }
    }
}

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn verify_certificate(phi: &ElementaryOperator, verdict: &ClassificationVerdict) -> VerifyReport {
    match check(phi, verdict) {
        Ok(()) => VerifyReport::pass(),
        Err(msg) => VerifyReport { ok: false, failure: Some(msg) },
    }
}

fn check(phi: &ElementaryOperator, v: &ClassificationVerdict) -> Check {
    match v.status {
        Status::Unknown => {
            ensure(v.form.is_none(), || "Unknown verdict carries a form".into())?;
            ensure(v.representation.is_none(), || "Unknown verdict carries a representation".into())?;
            ensure(
                v.witness.is_none() && v.witness_image.is_none() && v.witness_char_poly.is_none(),
                || "Unknown verdict carries a witness".into(),
            )
        }
        Status::NotLqn => {
            ensure(v.form.is_none(), || "NotLQN verdict carries a form".into())?;
            ensure(v.representation.is_none(), || "NotLQN verdict carries a representation".into())?;
            check_witness(phi, v)
        }
        Status::Lqn => {
            ensure(
                v.witness.is_none() && v.witness_image.is_none() && v.witness_char_poly.is_none(),
                || "LQN verdict carries a witness".into(),
            )?;
            let form = v.form.as_ref().ok_or("LQN verdict without a form")?;
            check_representation(phi, v, form)
        }
    }
}

fn pairs(phi: &ElementaryOperator) -> (Vec<Matrix>, Vec<Matrix>) {
    (phi.left(), phi.right())
}

fn apply(u: &[Matrix], v: &[Matrix], x: &Matrix) -> Matrix {
    let d = x.rows();
    let mut acc = Matrix::zeros(d, d);
    for (a, b) in u.iter().zip(v) {
        acc = &acc + &(&(a * x) * b);
    }
    acc
}

fn unit_images(u: &[Matrix], v: &[Matrix], d: usize) -> Vec<Matrix> {
    (0..d * d).map(|k| apply(u, v, &Matrix::unit(d, k / d, k % d))).collect()
}

fn check_witness(phi: &ElementaryOperator, v: &ClassificationVerdict) -> Check {
    let d = phi.dim();
    let x = v.witness.as_ref().ok_or("witness missing")?;
    let image = v.witness_image.as_ref().ok_or("witness_image missing")?;
    let stored = v.witness_char_poly.as_ref().ok_or("witness_char_poly missing")?;
    ensure(x.shape() == (d, d), || format!("witness has shape {:?}, expected {d}x{d}", x.shape()))?;
    let (u, w) = pairs(phi);
    let images = unit_images(&u, &w, d);
    let cols: Vec<Vector> = images.iter().map(Matrix::vectorize).collect();
    let pivots = Matrix::from_columns(&cols).map_err(|e| e.to_string())?.rref().1;
    for k in 0..d * d {
        if !pivots.contains(&k) && !x.get(k / d, k % d).is_zero() {
            return Err(format!(
                "witness entry ({},{}) lies outside the independent unit-image positions",
                k / d + 1,
                k % d + 1
            ));
        }
    }
    let computed = apply(&u, &w, x);
    ensure(&computed == image, || "witness_image differs from φ(witness)".into())?;
    let cp = char_poly(&computed).map_err(|e| e.to_string())?;
    ensure(&cp == stored, || format!("witness_char_poly mismatch: recomputed {cp}"))?;
    ensure(!cp.is_pure_power(), || format!("witness image is nilpotent (char poly λ^{d})"))
}

fn check_representation(phi: &ElementaryOperator, v: &ClassificationVerdict, form: &Form) -> Check {
    let d = phi.dim();
    let rep = v.representation.as_ref().ok_or("LQN verdict without a representation")?;
    ensure(rep.dim == d, || format!("representation dim {} differs from instance dim {d}", rep.dim))?;
    ensure(rep.u.len() == rep.v.len(), || "representation has unequal u/v counts".into())?;
    let n = rep.u.len();
    for m in rep.u.iter().chain(&rep.v) {
        ensure(m.shape() == (d, d), || "representation coefficient has the wrong shape".into())?;
    }
    let (a, b) = pairs(phi);
    ensure(unit_images(&rep.u, &rep.v, d) == unit_images(&a, &b, d), || {
        "representation does not reconstruct the operator on matrix units".into()
    })?;
    check_conjugator(phi, rep)?;

    let gram = |i: usize, j: usize| &rep.v[i] * &rep.u[j];
    match form {
        Form::PatternI => {
            for i in 0..n {
                for j in 0..=i {
                    ensure(gram(i, j).is_zero(), || format!("pattern (i): block ({},{}) v{}u{} is nonzero", i + 1, j + 1, i + 1, j + 1))?;
                }
            }
            Ok(())
        }
        Form::Length2Zeros => {
            ensure(n == 2, || format!("Length2-Zeros needs 2 pairs, found {n}"))?;
            ensure(gram(0, 0).is_zero(), || "ba ≠ 0".into())?;
            ensure(gram(1, 1).is_zero(), || "dc ≠ 0".into())?;
            ensure(gram(0, 1).is_zero(), || "bc ≠ 0".into())
        }
        Form::SpecialII { zeta0, zeta1, f } => {
            ensure(n == 3, || format!("Special-II needs 3 pairs, found {n}"))?;
            for vec in [zeta0, zeta1, f] {
                ensure(vec.len() == d, || "parameter vector has the wrong length".into())?;
            }
            ensure(rank(&[zeta0.clone(), zeta1.clone()]) == 2, || "zeta0, zeta1 are linearly dependent".into())?;
            ensure(f.iter().any(|x| !x.is_zero()), || "f is zero".into())?;
            let a = Matrix::outer(zeta0, f);
            let b = Matrix::outer(zeta1, f);
            special_blocks(&gram, d, &a, &b)
        }
        Form::SpecialIII { zeta0, f, g } => {
            ensure(n == 3, || format!("Special-III needs 3 pairs, found {n}"))?;
            for vec in [zeta0, f, g] {
                ensure(vec.len() == d, || "parameter vector has the wrong length".into())?;
            }
            ensure(rank(&[f.clone(), g.clone()]) == 2, || "f, g are linearly dependent".into())?;
            ensure(zeta0.iter().any(|x| !x.is_zero()), || "zeta0 is zero".into())?;
            let a = Matrix::outer(zeta0, f);
            let b = Matrix::outer(zeta0, g);
            special_blocks(&gram, d, &a, &b)
        }
        Form::DimV1Block { r } => check_dim_v1(rep, *r),
    }
}

/// `u = aP`, `v = P⁻¹b` against the minimal-length reduction of the instance.
fn check_conjugator(phi: &ElementaryOperator, rep: &crate::Representation) -> Check {
    let reduced = phi.minimal_length().operator;
    let n = rep.u.len();
    ensure(reduced.n_pairs() == n, || {
        format!("representation has {n} pairs but the operator has length {}", reduced.n_pairs())
    })?;
    if n == 0 {
        return ensure(rep.p.is_none(), || "P given for the zero operator".into());
    }
    let p = rep.p.as_ref().ok_or("conjugator P missing")?;
    ensure(p.shape() == (n, n), || format!("P has shape {:?}, expected {n}x{n}", p.shape()))?;
    let p_inv = p.inverse().map_err(|_| "P is singular".to_string())?;
    let (a, b) = pairs(&reduced);
    let d = phi.dim();
    for j in 0..n {
        let mut uj = Matrix::zeros(d, d);
        let mut vj = Matrix::zeros(d, d);
        for k in 0..n {
            uj.add_scaled(p.get(k, j), &a[k]);
            vj.add_scaled(p_inv.get(j, k), &b[k]);
        }
        ensure(uj == rep.u[j], || format!("u{} differs from Σ P_k{} a_k", j + 1, j + 1))?;
        ensure(vj == rep.v[j], || format!("v{} differs from Σ (P⁻¹)_{}k b_k", j + 1, j + 1))?;
    }
    Ok(())
}

/// Gram `[[0, B, 0], [A, 0, B], [0, −A, 0]]`.
fn special_blocks(gram: &dyn Fn(usize, usize) -> Matrix, d: usize, a: &Matrix, b: &Matrix) -> Check {
    let z = Matrix::zeros(d, d);
    let neg_a = -a;
    let expected = [[&z, b, &z], [a, &z, b], [&z, &neg_a, &z]];
    for i in 0..3 {
        for j in 0..3 {
            ensure(&gram(i, j) == expected[i][j], || {
                format!("block equation v{}u{} fails", i + 1, j + 1)
            })?;
        }
    }
    Ok(())
}

fn rank(vs: &[Vector]) -> usize {
    Matrix::from_columns(vs).map(|m| m.rank()).unwrap_or(0)
}

fn check_dim_v1(rep: &crate::Representation, r: usize) -> Check {
    let n = rep.u.len();
    let d = rep.dim;
    ensure(r >= 1 && r <= n, || format!("r = {r} outside 1..={n}"))?;
    let blocks: Vec<Matrix> = (0..n * n).map(|k| &rep.v[k / n] * &rep.u[k % n]).collect();
    let w = blocks.iter().find(|m| !m.is_zero()).ok_or("all Gram blocks vanish")?;
    let pos = w.entries().iter().position(|x| !x.is_zero()).expect("nonzero");
    for (k, blk) in blocks.iter().enumerate() {
        let (i, j) = (k / n, k % n);
        let c = blk.entries()[pos].checked_div(&w.entries()[pos]).expect("nonzero pivot");
        ensure(*blk == w.scale(&c), || format!("block v{}u{} is not a multiple of W", i + 1, j + 1))?;
        let must_vanish = j >= r || (i < r && i >= j);
        ensure(!must_vanish || c.is_zero(), || format!("block v{}u{} must vanish in the r = {r} shape", i + 1, j + 1))?;
    }
    let ldim = local_rank(&rep.u, d);
    ensure(ldim == r, || format!("lDim L = {ldim}, certificate states r = {r}"))
}

/// `max_ζ rank[u₁ζ … u_nζ]`; a nonzero `s×s` minor is homogeneous of degree
/// `s` in ζ, so it is nonzero somewhere on grid layer `s`.
fn local_rank(u: &[Matrix], d: usize) -> usize {
    let ceiling = u.len().min(d);
    let mut best = 0;
    for s in 1..=ceiling {
        for alpha in Layer::new(d, s) {
            let zeta: Vector = alpha.iter().map(|&a| Scalar::from_i64(a as i64)).collect();
            let cols: Vec<Vector> = u.iter().map(|m| m.mul_vec(&zeta).expect("d columns")).collect();
            best = best.max(rank(&cols));
            if best == ceiling {
                return best;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify, structure_dim_v1};
    use crate::nilpotency::Budget;

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(d, i, j)
    }

    fn specimen_ii() -> ElementaryOperator {
        let u = [e(3, 0, 0), e(3, 1, 0), e(3, 2, 0)];
        let v = [e(3, 1, 1), &e(3, 0, 0) + &e(3, 1, 2), -&e(3, 0, 1)];
        ElementaryOperator::new(3, u.into_iter().zip(v).collect()).unwrap()
    }

    #[test]
    fn valid_special_ii_passes_and_tampering_fails() {
        let phi = specimen_ii();
        let v = classify(&phi, &Budget::default(), 1).unwrap();
        assert_eq!(verify_certificate(&phi, &v), VerifyReport::pass());

        let mut bad = v.clone();
        if let Some(Form::SpecialII { zeta1, .. }) = &mut bad.form {
            zeta1[0] = &zeta1[0] + &Scalar::one();
        }
        let report = verify_certificate(&phi, &bad);
        assert!(!report.ok);
        assert!(report.failure.unwrap().contains("block equation"));
    }

    #[test]
    fn nilpotent_witness_is_rejected() {
        let phi = ElementaryOperator::single(Matrix::identity(2), Matrix::identity(2)).unwrap();
        let v = classify(&phi, &Budget::default(), 1).unwrap();
        assert_eq!(v.status, Status::NotLqn);
        assert!(verify_certificate(&phi, &v).ok);
        let mut bad = v.clone();
        let x = e(2, 0, 1);
        bad.witness = Some(x.clone());
        bad.witness_image = Some(x.clone());
        bad.witness_char_poly = Some(char_poly(&x).unwrap());
        let report = verify_certificate(&phi, &bad);
        assert!(!report.ok);
        assert!(report.failure.unwrap().contains("nilpotent"));
    }

    #[test]
    fn dim_v1_certificate_checks_r() {
        let phi = ElementaryOperator::new(3, vec![(e(3, 0, 0), e(3, 0, 1)), (e(3, 1, 1), e(3, 0, 2))]).unwrap();
        let v = structure_dim_v1(&phi, &Budget::default(), 2).unwrap();
        assert!(verify_certificate(&phi, &v).ok);
        let mut bad = v.clone();
        bad.form = Some(Form::DimV1Block { r: 1 });
        assert!(!verify_certificate(&phi, &bad).ok);
    }
}
