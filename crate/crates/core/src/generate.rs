//! Seeded specimen generators. Each builds structured coefficients in closed
//! form and then scrambles the representation by a random invertible `P₀`, so
//! the returned pairs show none of the structure directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};
use crate::operator::ElementaryOperator;
use crate::random::{derive_seed, Sampler};

/// Entry height of generated integer data.
const HEIGHT: u64 = 3;
const ATTEMPTS: u64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorForm {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
    #[serde(rename = "iii")]
    III,
    /// Special-family Gram shape with rank-two blocks: passes the trace
    /// condition yet is not locally nilpotent.
    #[serde(rename = "remark45")]
    RankTwoGram,
    #[serde(rename = "random")]
    Random,
}

impl GeneratorForm {
    pub const ALL: [GeneratorForm; 5] =
        [GeneratorForm::I, GeneratorForm::II, GeneratorForm::III, GeneratorForm::RankTwoGram, GeneratorForm::Random];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorForm::I => "i",
            GeneratorForm::II => "ii",
            GeneratorForm::III => "iii",
            GeneratorForm::RankTwoGram => "remark45",
            GeneratorForm::Random => "random",
        }
    }

    /// Smallest feasible `d` for length `n`.
    pub fn min_dim(self, n: usize) -> usize {
        match self {
            GeneratorForm::I => n + 1,
            GeneratorForm::II => 3,
            GeneratorForm::III | GeneratorForm::RankTwoGram => 4,
            // Length is the rank of a tensor in M_d ⊗ M_d, so at most d².
            GeneratorForm::Random => (1..).find(|d| d * d >= n).expect("unbounded"),
        }
    }
}

impl fmt::Display for GeneratorForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GeneratorForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown generator form {s:?}; expected i, ii, iii, remark45 or random")))
    }
}

/// A length-`n` operator on `M_d` of the requested shape, fully determined by
/// `(form, n, d, seed)`.
pub fn generate(form: GeneratorForm, n: usize, d: usize, seed: u64) -> Result<ElementaryOperator> {
    check_feasible(form, n, d)?;
    for attempt in 0..ATTEMPTS {
        let mut s = Sampler::new(derive_seed(seed, attempt), HEIGHT)?;
        let (u, v) = match form {
            GeneratorForm::I => pattern_i(&mut s, n, d),
            GeneratorForm::II => special_ii(&mut s, d),
            GeneratorForm::III => special_iii(&mut s, d),
            GeneratorForm::RankTwoGram => match rank_two_gram(&mut s, d) {
                Some(uv) => uv,
                None => continue,
            },
            GeneratorForm::Random => (0..n).map(|_| (s.integer_matrix(d, d), s.integer_matrix(d, d))).unzip(),
        };
        let op = ElementaryOperator::new(d, u.into_iter().zip(v).collect())?;
        if !op.is_length_reduced() {
            continue;
        }
        let (p0, _) = s.invertible_matrix(n);
        let rep = op.similarity_transform(&p0)?;
        return rep.to_operator();
    }
    Err(Error::Inconsistency(format!("no length-{n} {form} instance after {ATTEMPTS} attempts")))
}

fn check_feasible(form: GeneratorForm, n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Dimension("length must be at least 1".into()));
    }
    if matches!(form, GeneratorForm::II | GeneratorForm::III | GeneratorForm::RankTwoGram) && n != 3 {
        return Err(Error::Dimension(format!("form {form} has length 3, not {n}")));
    }
    let min = form.min_dim(n);
    if d < min {
        return Err(Error::Dimension(format!("form {form} with length {n} needs d >= {min}, got {d}")));
    }
    Ok(())
}

/// `uⱼ = Q·Aⱼ`, `vᵢ = Bᵢ·Q⁻¹` where `Aⱼ` lives in rows `≤ j` and `Bᵢ` in
/// columns `> i`, so `vᵢuⱼ = BᵢAⱼ = 0` for `i ≥ j`.
fn pattern_i(s: &mut Sampler, n: usize, d: usize) -> (Vec<Matrix>, Vec<Matrix>) {
    let (q, q_inv) = s.invertible_matrix(d);
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for j in 0..n {
        let mut a = s.integer_matrix(d, d);
        for r in j + 1..d {
            for c in 0..d {
                a.set(r, c, crate::Scalar::zero());
            }
        }
        u.push(&q * &a);
    }
    for i in 0..n {
        let mut b = s.integer_matrix(d, d);
        for r in 0..d {
            for c in 0..=i {
                b.set(r, c, crate::Scalar::zero());
            }
        }
        v.push(&b * &q_inv);
    }
    (u, v)
}

fn independent_pair(s: &mut Sampler, d: usize) -> (Vector, Vector) {
    loop {
        let a = s.integer_vector(d);
        let b = s.integer_vector(d);
        if crate::matrix::vectors_rank(&[a.clone(), b.clone()]) == 2 {
            return (a, b);
        }
    }
}

fn nonzero_vector(s: &mut Sampler, d: usize) -> Vector {
    loop {
        let a = s.integer_vector(d);
        if !crate::matrix::is_zero_vector(&a) {
            return a;
        }
    }
}

/// `uₖ = wₖ⊗f + yₖ`, `vᵢ = Σⱼ Tᵢⱼ⊗Lⱼ` with `Lⱼwₖ = δⱼₖ`, `Lⱼyₖ = 0` and
/// `T = [[0, ζ₁, 0], [ζ₀, 0, ζ₁], [0, −ζ₀, 0]]`, so `vᵢuₖ = Tᵢₖ⊗f`.
fn special_ii(s: &mut Sampler, d: usize) -> (Vec<Matrix>, Vec<Matrix>) {
    let (q, q_inv) = s.invertible_matrix(d);
    let (z0, z1) = independent_pair(s, d);
    let f = nonzero_vector(s, d);
    let l: Vec<Vector> = (0..3).map(|j| q_inv.row(j)).collect();
    let u = (0..3)
        .map(|k| {
            let mut uk = Matrix::outer(&q.column(k), &f);
            for m in 3..d {
                uk = &uk + &Matrix::outer(&q.column(m), &s.integer_vector(d));
            }
            uk
        })
        .collect();
    let neg_z0: Vector = z0.iter().map(|x| -x).collect();
    let v = vec![
        Matrix::outer(&z1, &l[1]),
        &Matrix::outer(&z0, &l[0]) + &Matrix::outer(&z1, &l[2]),
        Matrix::outer(&neg_z0, &l[1]),
    ];
    (u, v)
}

/// `vᵢ = ζ₀⊗hᵢ`, `u₁ = k₂⊗f`, `u₂ = k₁⊗g − k₃⊗f`, `u₃ = k₂⊗g` (plus `k₄`
/// terms) with `hᵢkⱼ = δᵢⱼ`.
fn special_iii(s: &mut Sampler, d: usize) -> (Vec<Matrix>, Vec<Matrix>) {
    let (k, k_inv) = s.invertible_matrix(d);
    let z0 = nonzero_vector(s, d);
    let (f, g) = independent_pair(s, d);
    let kc = |j: usize| k.column(j);
    let mut u = vec![
        Matrix::outer(&kc(1), &f),
        &Matrix::outer(&kc(0), &g) - &Matrix::outer(&kc(2), &f),
        Matrix::outer(&kc(1), &g),
    ];
    for uj in &mut u {
        for m in 3..d {
            *uj = &*uj + &Matrix::outer(&kc(m), &s.integer_vector(d));
        }
    }
    let v = (0..3).map(|i| Matrix::outer(&z0, &k_inv.row(i))).collect();
    (u, v)
}

/// Special-family Gram pattern with rank-two blocks:
/// `u₁ = Q₁C₁Y`, `u₂ = Q₂Y`, `u₃ = Q₁C₃Y`, `v₂ = M·R₁`, `v₁ = M·C₃·R₂`,
/// `v₃ = −M·C₁·R₂`, where `Q₁, Q₂` are column pairs of `Q` and `R₁, R₂` the
/// matching row pairs of `Q⁻¹`. Then `v₂u₁ = MC₁Y`, `v₂u₃ = v₁u₂ = MC₃Y`,
/// `v₃u₂ = −MC₁Y` and every other product vanishes.
fn rank_two_gram(s: &mut Sampler, d: usize) -> Option<(Vec<Matrix>, Vec<Matrix>)> {
    let (q, q_inv) = s.invertible_matrix(d);
    let cols = |r: std::ops::Range<usize>| Matrix::from_columns(&r.map(|j| q.column(j)).collect::<Vec<_>>()).expect("d rows");
    let rows = |r: std::ops::Range<usize>| Matrix::from_rows(r.map(|i| q_inv.row(i)).collect()).expect("d columns");
    let (q1, q2) = (cols(0..2), cols(2..4));
    let (r1, r2) = (rows(0..2), rows(2..4));
    let (c1, _) = s.invertible_matrix(2);
    let (c3, _) = s.invertible_matrix(2);
    let m = s.integer_matrix(d, 2);
    let y = s.integer_matrix(2, d);
    let a_block = &(&m * &c1) * &y;
    let b_block = &(&m * &c3) * &y;
    if a_block.rank() < 2 || b_block.rank() < 2 {
        return None;
    }
    let u = vec![&(&q1 * &c1) * &y, &q2 * &y, &(&q1 * &c3) * &y];
    let v = vec![&(&m * &c3) * &r2, &m * &r1, -&(&(&m * &c1) * &r2)];
    Some((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilpotency::fasoli_alpha;

    #[test]
    fn generators_have_the_requested_length() {
        for (form, n, d) in [
            (GeneratorForm::I, 3, 4),
            (GeneratorForm::I, 1, 2),
            (GeneratorForm::II, 3, 3),
            (GeneratorForm::II, 3, 5),
            (GeneratorForm::III, 3, 4),
            (GeneratorForm::RankTwoGram, 3, 4),
            (GeneratorForm::Random, 2, 3),
        ] {
            let op = generate(form, n, d, 7).unwrap();
            assert_eq!(op.minimal_length().length, n, "{form} n={n} d={d}");
            assert_eq!(op, generate(form, n, d, 7).unwrap());
        }
    }

    #[test]
    fn infeasible_parameters() {
        assert!(matches!(generate(GeneratorForm::II, 3, 2, 1), Err(Error::Dimension(_))));
        assert!(matches!(generate(GeneratorForm::III, 3, 3, 1), Err(Error::Dimension(_))));
        assert!(matches!(generate(GeneratorForm::I, 3, 3, 1), Err(Error::Dimension(_))));
        assert!(matches!(generate(GeneratorForm::II, 2, 4, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_two_gram_has_special_pattern_with_rank_two_blocks() {
        let mut s = Sampler::new(5, HEIGHT).unwrap();
        let (u, v) = loop {
            if let Some(uv) = rank_two_gram(&mut s, 4) {
                break uv;
            }
        };
        let g = ElementaryOperator::new(4, u.into_iter().zip(v).collect()).unwrap().gram();
        let pattern = fasoli_alpha();
        for i in 0..3 {
            for j in 0..3 {
                let blk = g.block(i, j);
                if pattern.get(i, j).is_zero() && !(i == 0 && j == 1 || i == 1 && j == 2) {
                    assert!(blk.is_zero(), "block ({i},{j})");
                }
            }
        }
        assert_eq!(g.block(0, 1), g.block(1, 2));
        assert_eq!(*g.block(2, 1), -g.block(1, 0));
        assert!(g.block(1, 0).rank() >= 2);
    }

    #[test]
    fn parse_names() {
        for f in GeneratorForm::ALL {
            assert_eq!(f.name().parse::<GeneratorForm>().unwrap(), f);
        }
        assert!("iv".parse::<GeneratorForm>().is_err());
    }
}
