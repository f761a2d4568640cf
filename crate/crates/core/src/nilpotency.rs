//! Nilpotency at three levels: one matrix, every element of a matrix space,
//! and `φ(x)` for every `x`.
//!
//! "Every element of `span{T₁..T_k}` is nilpotent" is the polynomial identity
//! `tr((Σ tᵢTᵢ)^p) ≡ 0` for `p = 1..m`. Each trace power is homogeneous of
//! degree `p`, so it is tested exactly on the layer `{α : |α| = p}` (see
//! [`crate::grid`]). Integer points keep the arithmetic in machine words for
//! real generators, with a big-integer fallback on overflow.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{layers_size, Layer};
use crate::matrix::{Matrix, Vector};
use crate::operator::{ElementaryOperator, GramMatrix};
use crate::poly::{char_poly, Polynomial};
use crate::random::{derive_seed, Sampler, DEFAULT_HEIGHT};
use crate::scalar::Scalar;
use crate::space::{independent_prefix, OperatorSpace};

/// Work limits for the exact and randomized tiers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest number of grid points evaluated in exact mode.
    pub grid_points: u64,
    /// Samples drawn by randomized fallbacks.
    pub trials: usize,
    /// Entry height of random samples.
    pub height: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { grid_points: 1_000_000, trials: 200, height: DEFAULT_HEIGHT }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactGrid,
    Randomized,
}

/// `char_poly(m) = λ^d`.
pub fn is_nilpotent(m: &Matrix) -> Result<bool> {
    Ok(char_poly(m)?.is_pure_power())
}

/// Point count of the exact test for `k` generators of size `m`.
pub fn grid_cost(k: usize, m: usize) -> u64 {
    layers_size(k, m)
}

pub(crate) enum LayerOutcome {
    Clean { points: u64 },
    Found { alpha: Vec<usize>, points: u64 },
}

/// Exact test of `tr((Σ αᵢGᵢ)^p) = 0` on every layer `p = 1..=max_p`; stops
/// at the first nonzero point in layer order.
pub(crate) fn layer_search(gens: &[Matrix], m: usize, max_p: usize) -> LayerOutcome {
    let eval = Evaluator::new(gens, m);
    let mut points = 0u64;
    for p in 1..=max_p {
        for alpha in Layer::new(gens.len(), p) {
            points += 1;
            if eval.trace_power_nonzero(&signed(&alpha), Powers::Exactly(p)) {
                return LayerOutcome::Found { alpha, points };
            }
        }
    }
    LayerOutcome::Clean { points }
}

/// Exact integer images of the generators when all entries are real.
struct Evaluator<'a> {
    m: usize,
    gens: &'a [Matrix],
    small: Option<Vec<Vec<i128>>>,
    big: Option<Vec<Vec<BigInt>>>,
}

/// Which trace powers of `X = Σ cᵢGᵢ` to test.
#[derive(Clone, Copy)]
enum Powers {
    /// `tr(X^p)` only.
    Exactly(usize),
    /// `tr(X^q)` for every `q ≤ p`; all vanish iff `X` is nilpotent when `p = m`.
    UpTo(usize),
}

impl Powers {
    fn max(self) -> usize {
        match self {
            Powers::Exactly(p) | Powers::UpTo(p) => p,
        }
    }

    fn checks(self, q: usize) -> bool {
        match self {
            Powers::Exactly(p) => q == p,
            Powers::UpTo(_) => true,
        }
    }
}

impl<'a> Evaluator<'a> {
    fn new(gens: &'a [Matrix], m: usize) -> Self {
        let real = gens.iter().all(|g| g.entries().iter().all(Scalar::is_real));
        if !real {
            return Self { m, gens, small: None, big: None };
        }
        // Common denominator: scaling every generator by it leaves the
        // vanishing of each homogeneous trace power unchanged.
        let mut den = BigInt::from(1);
        for g in gens {
            for x in g.entries() {
                den = den.lcm(x.re.denom());
            }
        }
        let big: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|g| g.entries().iter().map(|x| x.re.numer() * (&den / x.re.denom())).collect())
            .collect();
        let small = big
            .iter()
            .map(|g| g.iter().map(ToPrimitive::to_i128).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>();
        Self { m, gens, small, big: Some(big) }
    }

    fn trace_power_nonzero(&self, coeffs: &[i64], powers: Powers) -> bool {
        if let Some(small) = &self.small {
            if let Some(v) = int_trace_powers(small, self.m, coeffs, powers) {
                return v;
            }
        }
        if let Some(big) = &self.big {
            return int_trace_powers(big, self.m, coeffs, powers).expect("big integers do not overflow");
        }
        let x = combine(self.gens, self.m, coeffs);
        let mut y = x.clone();
        for q in 1..=powers.max() {
            if q > 1 {
                y = &y * &x;
            }
            if powers.checks(q) && !y.trace().expect("square").is_zero() {
                return true;
            }
        }
        false
    }
}

fn combine(gens: &[Matrix], m: usize, coeffs: &[i64]) -> Matrix {
    let mut x = Matrix::zeros(m, m);
    for (g, &a) in gens.iter().zip(coeffs) {
        if a != 0 {
            x.add_scaled(&Scalar::from_i64(a), g);
        }
    }
    x
}

fn signed(alpha: &[usize]) -> Vec<i64> {
    alpha.iter().map(|&a| a as i64).collect()
}

/// Some tested `tr(X^q) ≠ 0` for `X = Σ cᵢGᵢ`; `None` on overflow.
fn int_trace_powers<T>(gens: &[Vec<T>], m: usize, coeffs: &[i64], powers: Powers) -> Option<bool>
where
    T: Clone + Zero + CheckedAdd + CheckedMul + From<i64>,
{
    let mut x = vec![T::zero(); m * m];
    for (g, &a) in gens.iter().zip(coeffs) {
        if a == 0 {
            continue;
        }
        let a = T::from(a);
        for (xe, ge) in x.iter_mut().zip(g) {
            *xe = xe.checked_add(&ge.checked_mul(&a)?)?;
        }
    }
    let p = powers.max();
    // y = X^(q-1); tr(X^q) = Σ y_ij x_ji.
    let mut y: Option<Vec<T>> = None;
    for q in 1..=p {
        if powers.checks(q) {
            let mut tr = T::zero();
            match &y {
                None => {
                    for i in 0..m {
                        tr = tr.checked_add(&x[i * m + i])?;
                    }
                }
                Some(y) => {
                    for i in 0..m {
                        for j in 0..m {
                            tr = tr.checked_add(&y[i * m + j].checked_mul(&x[j * m + i])?)?;
                        }
                    }
                }
            }
            if !tr.is_zero() {
                return Some(true);
            }
        }
        if q == p {
            break;
        }
        y = Some(match y {
            None => x.clone(),
            Some(y) => {
                let mut next = vec![T::zero(); m * m];
                for i in 0..m {
                    for k in 0..m {
                        let yik = &y[i * m + k];
                        if yik.is_zero() {
                            continue;
                        }
                        for j in 0..m {
                            let t = yik.checked_mul(&x[k * m + j])?;
                            next[i * m + j] = next[i * m + j].checked_add(&t)?;
                        }
                    }
                }
                next
            }
        });
    }
    Some(false)
}

/// Seeded search for a non-nilpotent `Σ tᵢGᵢ`; returns coefficients, the
/// element and the 1-based trial index.
pub(crate) fn random_search(
    gens: &[Matrix],
    m: usize,
    trials: usize,
    seed: u64,
    height: u64,
) -> Result<Option<(Vector, Matrix, usize)>> {
    let mut sampler = Sampler::new(seed, height)?;
    for t in 1..=trials {
        let coeffs = sampler.vector(gens.len());
        let mut x = Matrix::zeros(m, m);
        for (c, g) in coeffs.iter().zip(gens) {
            x.add_scaled(c, g);
        }
        if !is_nilpotent(&x)? {
            return Ok(Some((coeffs, x, t)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilpotentSpaceReport {
    pub space: OperatorSpace,
    pub all_nilpotent: bool,
    pub method: Method,
    /// An element of the space whose characteristic polynomial is not `λ^m`.
    pub counterexample: Option<Matrix>,
    /// Grid points or random samples evaluated.
    pub evaluations: u64,
}

/// Decides whether every element of `space` is nilpotent.
pub fn subspace_all_nilpotent(space: &OperatorSpace, budget: &Budget, seed: u64) -> Result<NilpotentSpaceReport> {
    let m = space.ambient_dim();
    let gens = space.basis();
    let mut report = NilpotentSpaceReport {
        space: space.clone(),
        all_nilpotent: true,
        method: Method::ExactGrid,
        counterexample: None,
        evaluations: 0,
    };
    if gens.is_empty() {
        return Ok(report);
    }
    if grid_cost(gens.len(), m) <= budget.grid_points {
        match layer_search(gens, m, m) {
            LayerOutcome::Clean { points } => report.evaluations = points,
            LayerOutcome::Found { alpha, points } => {
                report.evaluations = points;
                report.all_nilpotent = false;
                report.counterexample = Some(combine(gens, m, &signed(&alpha)));
            }
        }
    } else {
        report.method = Method::Randomized;
        let found = random_search(gens, m, budget.trials, derive_seed(seed, 0x5b), budget.height)?;
        report.evaluations = budget.trials as u64;
        if let Some((_, x, t)) = found {
            report.evaluations = t as u64;
            report.all_nilpotent = false;
            report.counterexample = Some(x);
        }
    }
    if let Some(x) = &report.counterexample {
        if is_nilpotent(x)? {
            return Err(Error::Inconsistency("reported counterexample is nilpotent".into()));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GerstenhaberBound {
    pub dim: usize,
    pub bound: usize,
    pub attained: bool,
}

/// `dim N ≤ m(m−1)/2` for a space already shown to be nilpotent.
pub fn gerstenhaber_check(report: &NilpotentSpaceReport) -> Result<GerstenhaberBound> {
    if !report.all_nilpotent {
        return Err(Error::Contract("the space contains a non-nilpotent element".into()));
    }
    let m = report.space.ambient_dim();
    let bound = m * m.saturating_sub(1) / 2;
    let dim = report.space.dim();
    if dim > bound {
        return Err(Error::Inconsistency(format!(
            "nilpotent space of dimension {dim} exceeds the bound {bound} for {m}x{m} matrices"
        )));
    }
    Ok(GerstenhaberBound { dim, bound, attained: dim == bound })
}

/// Independent vectors `v₁..v_m` with `T·span(v₁..v_k) ⊆ span(v₁..v_{k−1})` for
/// every `T` of the space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub vectors: Vec<Vector>,
}

impl Flag {
    /// The matrix whose columns are the flag vectors.
    pub fn matrix(&self) -> Result<Matrix> {
        Matrix::from_columns(&self.vectors)
    }

    /// Machine check of the flag invariant against the given matrices.
    pub fn verify(&self, mats: &[Matrix]) -> bool {
        let Some(first) = self.vectors.first() else { return true };
        let m = first.len();
        if self.vectors.len() != m || crate::matrix::vectors_rank(&self.vectors) != m {
            return false;
        }
        for t in mats {
            for k in 0..m {
                let Ok(img) = t.mul_vec(&self.vectors[k]) else { return false };
                let mut prefix = self.vectors[..k].to_vec();
                let before = crate::matrix::vectors_rank(&prefix);
                prefix.push(img);
                if crate::matrix::vectors_rank(&prefix) != before {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("no common invariant vector at stage {stage}")]
pub struct NotTriangularizable {
    /// 1-based stage whose quotient had no common kernel vector.
    pub stage: usize,
    /// Flag prefix built before the failure.
    pub partial: Vec<Vector>,
}

/// Common-kernel recursion: at stage `k`, choose `v ∉ S = span(v₁..v_{k−1})`
/// with `Tv ∈ S` for all `T`.
pub fn strict_triangularize(space: &OperatorSpace) -> std::result::Result<Flag, NotTriangularizable> {
    strict_flag(space.ambient_dim(), space.basis())
}

pub(crate) fn strict_flag(m: usize, mats: &[Matrix]) -> std::result::Result<Flag, NotTriangularizable> {
    let mut flag: Vec<Vector> = Vec::with_capacity(m);
    while flag.len() < m {
        // Rows of `proj` span the annihilator of S (plain transpose: kernel of Sᵀ).
        let proj = if flag.is_empty() {
            Matrix::identity(m)
        } else {
            let s = Matrix::from_columns(&flag).expect("equal lengths");
            let rows = s.transpose().kernel_basis();
            Matrix::from_rows(rows).expect("equal lengths")
        };
        let mut stacked: Vec<Vec<Scalar>> = Vec::new();
        for t in mats {
            stacked.extend((&proj * t).to_rows());
        }
        if stacked.is_empty() {
            stacked.push(vec![Scalar::zero(); m]);
        }
        let kernel = Matrix::from_rows(stacked).expect("equal lengths").kernel_basis();
        let base = crate::matrix::vectors_rank(&flag);
        let next = kernel.into_iter().find(|v| {
            let mut probe = flag.clone();
            probe.push(v.clone());
            crate::matrix::vectors_rank(&probe) > base
        });
        match next {
            Some(v) => flag.push(v),
            None => return Err(NotTriangularizable { stage: flag.len() + 1, partial: flag }),
        }
    }
    Ok(Flag { vectors: flag })
}

/// `E₂₁ − E₃₂`.
pub fn fasoli_alpha() -> Matrix {
    Matrix::from_i64(&[&[0, 0, 0], &[1, 0, 0], &[0, -1, 0]])
}

/// `E₁₂ + E₂₃`.
pub fn fasoli_beta() -> Matrix {
    Matrix::from_i64(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]])
}

/// Membership in `span{E₂₁ − E₃₂, E₁₂ + E₂₃}`.
pub fn in_fasoli_family(m: &Matrix) -> bool {
    if m.shape() != (3, 3) {
        return false;
    }
    let z = |i, j| m.get(i, j).is_zero();
    z(0, 0) && z(0, 2) && z(1, 1) && z(2, 0) && z(2, 2) && m.get(0, 1) == m.get(1, 2) && *m.get(1, 0) == -m.get(2, 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum M3Class {
    Triangularizable(Flag),
    /// `P⁻¹·alpha·P = E₂₁ − E₃₂` and `P⁻¹·beta·P = E₁₂ + E₂₃`, and `{alpha, beta}` is a basis.
    SpecialForm { alpha: Matrix, beta: Matrix, p: Matrix },
}

const M3_ATTEMPTS: usize = 64;

/// The dichotomy for two-dimensional nilpotent spaces of 3×3 matrices.
pub fn classify_nilpotent_2dim_m3(space: &OperatorSpace, seed: u64) -> Result<M3Class> {
    if space.ambient_dim() != 3 || space.dim() != 2 {
        return Err(Error::Contract(format!(
            "expected a 2-dimensional space of 3x3 matrices, got dimension {} in M_{}",
            space.dim(),
            space.ambient_dim()
        )));
    }
    let report = subspace_all_nilpotent(space, &Budget::default(), seed)?;
    if !report.all_nilpotent {
        return Err(Error::Contract("the space contains a non-nilpotent element".into()));
    }
    if let Ok(flag) = strict_triangularize(space) {
        return Ok(M3Class::Triangularizable(flag));
    }
    let x = space.basis();
    let mut candidates: Vec<(Matrix, Matrix)> =
        vec![(x[0].clone(), x[1].clone()), (x[1].clone(), x[0].clone()), (&x[0] + &x[1], x[1].clone())];
    let mut sampler = Sampler::new(derive_seed(seed, 0xfa5), 20)?;
    for _ in 0..M3_ATTEMPTS {
        let c = sampler.vector(4);
        let a = &x[0].scale(&c[0]) + &x[1].scale(&c[1]);
        let b = &x[0].scale(&c[2]) + &x[1].scale(&c[3]);
        candidates.push((a, b));
    }
    for (a, b) in candidates {
        if let Some(found) = fasoli_conjugator(x, &a, &b) {
            return Ok(found);
        }
    }
    Err(Error::Inconsistency(
        "nilpotent non-triangularizable 2-dimensional space was not matched to the special family".into(),
    ))
}

/// `P = [p₁, Ap₁, −A²p₁]` with `p₁ ∈ ker B`, accepted when it conjugates the
/// whole space onto the special family.
fn fasoli_conjugator(basis: &[Matrix], a: &Matrix, b: &Matrix) -> Option<M3Class> {
    let ker = b.kernel_basis();
    if ker.len() != 1 {
        return None;
    }
    let p1 = ker[0].clone();
    let p2 = a.mul_vec(&p1).ok()?;
    let p3: Vector = a.mul_vec(&p2).ok()?.iter().map(|x| -x).collect();
    let p = Matrix::from_columns(&[p1, p2, p3]).ok()?;
    let p_inv = p.inverse().ok()?;
    let conj = |m: &Matrix| &(&p_inv * m) * &p;
    if !basis.iter().all(|m| in_fasoli_family(&conj(m))) {
        return None;
    }
    let alpha = &(&p * &fasoli_alpha()) * &p_inv;
    let beta = &(&p * &fasoli_beta()) * &p_inv;
    Some(M3Class::SpecialForm { alpha, beta, p })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTriangular {
    /// Columns are the flag of the coefficient space in `ℂⁿ`.
    pub p: Matrix,
    /// `P⁻¹GP`, zero on and below the block diagonal.
    pub gram: GramMatrix,
}

/// Flag search on the coefficient space of the Gram matrix: the stage-`k`
/// vector `w` satisfies `Σⱼ wⱼ(bᵢaⱼ) ∈ span` of earlier stages for all `i`.
pub fn block_strict_triangularize(g: &GramMatrix) -> std::result::Result<BlockTriangular, NotTriangularizable> {
    let n = g.n();
    if n == 0 {
        return Ok(BlockTriangular { p: Matrix::zeros(0, 0), gram: g.clone() });
    }
    let cs = g.coefficient_space();
    let flag = strict_flag(n, cs.basis())?;
    let p = flag.matrix().expect("n vectors of length n");
    let gram = g.similarity(&p).expect("flag vectors are independent");
    debug_assert!(gram.is_strictly_upper());
    Ok(BlockTriangular { p, gram })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    PatternI,
    SpecialII,
    SpecialIII,
    DimV1Block,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "kebab-case")]
pub enum Certification {
    /// `φ(x)^exponent = 0` for all `x` by the shape of a representation.
    Structure { form: StructureKind, exponent: usize },
    /// Every trace power vanishes on the complete grid.
    ExactGrid { points: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Matrix,
    pub image: Matrix,
    pub char_poly: Polynomial,
    /// 1-based sample index for randomized hits.
    pub trial: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum XNilpotency {
    Certified(Certification),
    Refuted(Witness),
    ProbablyNilpotent { trials: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Structure, then exact grid, then sampling.
    Full,
    /// Random `x` only.
    SamplingOnly,
}

/// Is `φ(x)` nilpotent for every `x`?
pub fn all_x_nilpotent(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<XNilpotency> {
    all_x_nilpotent_with(phi, budget, seed, Mode::Full)
}

pub fn all_x_nilpotent_with(phi: &ElementaryOperator, budget: &Budget, seed: u64, mode: Mode) -> Result<XNilpotency> {
    if mode == Mode::SamplingOnly {
        return sample_witness(phi, budget.trials, seed, budget.height);
    }
    let reduced = phi.minimal_length().operator;
    if let Some((form, exponent)) = crate::classifier::structural_certificate(&reduced, seed)? {
        return Ok(XNilpotency::Certified(Certification::Structure { form, exponent }));
    }
    match witness_search(&reduced, budget, seed)? {
        WitnessSearch::Found(w) => Ok(XNilpotency::Refuted(w)),
        WitnessSearch::GridClean { points } => Ok(XNilpotency::Certified(Certification::ExactGrid { points })),
        WitnessSearch::Exhausted { trials } => Ok(XNilpotency::ProbablyNilpotent { trials }),
    }
}

/// Pure sampling over integer `x ∈ M_d` with entries in `[-height, height]`,
/// with no structural shortcut.
pub fn sample_witness(phi: &ElementaryOperator, trials: usize, seed: u64, height: u64) -> Result<XNilpotency> {
    let d = phi.dim();
    let mut sampler = Sampler::new(derive_seed(seed, 0x0a), height)?;
    // φ(x) = Σ x_kl φ(E_kl): one integer evaluator over the unit images.
    let units = phi.unit_images();
    let eval = Evaluator::new(&units, d);
    let h = i64::try_from(height).map_err(|_| Error::Domain("height exceeds i64".into()))?;
    for t in 1..=trials {
        let coeffs = sampler.integer_coefficients(d * d, h);
        if eval.trace_power_nonzero(&coeffs, Powers::UpTo(d)) {
            let x = Matrix::new(d, d, coeffs.iter().map(|&c| Scalar::from_i64(c)).collect())?;
            let image = phi.apply(&x)?;
            let cp = char_poly(&image)?;
            if cp.is_pure_power() {
                return Err(Error::Inconsistency("trace power nonzero but char poly is λ^d".into()));
            }
            return Ok(XNilpotency::Refuted(Witness { x, image, char_poly: cp, trial: Some(t) }));
        }
    }
    Ok(XNilpotency::ProbablyNilpotent { trials })
}

pub(crate) enum WitnessSearch {
    Found(Witness),
    GridClean { points: u64 },
    Exhausted { trials: usize },
}

/// The independent matrix-unit images of `φ` and their positions `(k, l)`.
pub(crate) fn image_basis(phi: &ElementaryOperator) -> (Vec<(usize, usize)>, Vec<Matrix>) {
    let d = phi.dim();
    let images = phi.unit_images();
    let idx = independent_prefix(&images, Matrix::vectorize);
    let units = idx.iter().map(|&i| (i / d, i % d)).collect();
    let basis = idx.into_iter().map(|i| images[i].clone()).collect();
    (units, basis)
}

/// Exact witness search over the image space `φ(M_d)`: seeded samples
/// first, then the complete grid when it fits the budget. Witnesses are
/// supported on the positions of the independent matrix-unit images.
pub(crate) fn witness_search(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<WitnessSearch> {
    let d = phi.dim();
    let (units, basis) = image_basis(phi);
    if basis.is_empty() {
        return Ok(WitnessSearch::GridClean { points: 0 });
    }
    let to_x = |coeffs: &[Scalar]| {
        let mut x = Matrix::zeros(d, d);
        for (&(k, l), c) in units.iter().zip(coeffs) {
            x.set(k, l, c.clone());
        }
        x
    };
    let sampled = random_search(&basis, d, budget.trials, derive_seed(seed, 0x3c), budget.height)?;
    if let Some((coeffs, image, t)) = sampled {
        let x = to_x(&coeffs);
        return Ok(WitnessSearch::Found(checked_witness(phi, x, image, Some(t))?));
    }
    if grid_cost(basis.len(), d) <= budget.grid_points {
        return match layer_search(&basis, d, d) {
            LayerOutcome::Clean { points } => Ok(WitnessSearch::GridClean { points }),
            LayerOutcome::Found { alpha, .. } => {
                let coeffs: Vec<Scalar> = alpha.iter().map(|&a| Scalar::from_i64(a as i64)).collect();
                let x = to_x(&coeffs);
                let image = combine(&basis, d, &signed(&alpha));
                Ok(WitnessSearch::Found(checked_witness(phi, x, image, None)?))
            }
        };
    }
    Ok(WitnessSearch::Exhausted { trials: budget.trials })
}

fn checked_witness(phi: &ElementaryOperator, x: Matrix, image: Matrix, trial: Option<usize>) -> Result<Witness> {
    if phi.apply(&x)? != image {
        return Err(Error::Inconsistency("witness image does not match φ(x)".into()));
    }
    let cp = char_poly(&image)?;
    if cp.is_pure_power() {
        return Err(Error::Inconsistency("witness image is nilpotent".into()));
    }
    Ok(Witness { x, image, char_poly: cp, trial })
}

/// Rewrites `x` as the matrix supported on the independent matrix-unit
/// positions with the same image `φ(x)`, and checks it is a witness.
pub fn canonical_witness(phi: &ElementaryOperator, x: &Matrix) -> Result<Witness> {
    let d = phi.dim();
    let image = phi.apply(x)?;
    let (units, basis) = image_basis(phi);
    let cols: Vec<Vector> = basis.iter().map(Matrix::vectorize).collect();
    let mut canon = Matrix::zeros(d, d);
    if !cols.is_empty() {
        let coords = Matrix::from_columns(&cols)?
            .solve(&image.vectorize())?
            .ok_or_else(|| Error::Inconsistency("φ(x) outside the span of the unit images".into()))?;
        for (&(k, l), c) in units.iter().zip(coords) {
            canon.set(k, l, c);
        }
    }
    checked_witness(phi, canon, image, None)
}

/// Which hypothesis or product failed in [`graded_product_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GradedFailure {
    /// `φⱼ(x)φᵢ(y) ≠ 0` with `j ≥ i` (0-based part indices).
    Hypothesis { j: usize, i: usize, x: Matrix, y: Matrix },
    /// `∏ φ(x_t) ≠ 0` for this probe tuple.
    Product { tuple: Vec<Matrix> },
}

/// Checks `φⱼ(x)φᵢ(y) = 0` for all `j ≥ i` exactly on matrix units, then that
/// `φ(x₁)⋯φ(x_{n+1}) = 0` for `φ = Σ parts` on probe tuples. Tuple `t` is
/// `(probes[t], probes[t+1], …)` cyclically.
pub fn graded_product_check(
    parts: &[ElementaryOperator],
    probes: &[Matrix],
) -> Result<std::result::Result<(), GradedFailure>> {
    let Some(first) = parts.first() else { return Ok(Ok(())) };
    let d = first.dim();
    if parts.iter().any(|p| p.dim() != d) {
        return Err(Error::Shape("parts act on different algebras".into()));
    }
    let images: Vec<Vec<Matrix>> = parts.iter().map(ElementaryOperator::unit_images).collect();
    for j in 0..parts.len() {
        for i in 0..=j {
            for (xi, x) in images[j].iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (yi, y) in images[i].iter().enumerate() {
                    if !(x * y).is_zero() {
                        return Ok(Err(GradedFailure::Hypothesis {
                            j,
                            i,
                            x: Matrix::unit(d, xi / d, xi % d),
                            y: Matrix::unit(d, yi / d, yi % d),
                        }));
                    }
                }
            }
        }
    }
    let mut phi = first.clone();
    for p in &parts[1..] {
        phi = phi.plus(p)?;
    }
    let len = parts.len() + 1;
    for t in 0..probes.len() {
        let tuple: Vec<Matrix> = (0..len).map(|s| probes[(t + s) % probes.len()].clone()).collect();
        let mut acc = Matrix::identity(d);
        for x in &tuple {
            acc = &acc * &phi.apply(x)?;
        }
        if !acc.is_zero() {
            return Ok(Err(GradedFailure::Product { tuple }));
        }
    }
    Ok(Ok(()))
}

/// `φ(x)^k`.
pub fn phi_power(phi: &ElementaryOperator, x: &Matrix, k: u32) -> Result<Matrix> {
    phi.apply(x)?.pow(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(m: usize, mats: &[Matrix]) -> OperatorSpace {
        OperatorSpace::span(m, mats).unwrap()
    }

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(d, i, j)
    }

    fn strictly_upper(m: usize) -> OperatorSpace {
        let mut mats = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                mats.push(e(m, i, j));
            }
        }
        space(m, &mats)
    }

    fn fasoli() -> OperatorSpace {
        space(3, &[fasoli_alpha(), fasoli_beta()])
    }

    #[test]
    fn is_nilpotent_examples() {
        assert!(is_nilpotent(&e(3, 0, 2)).unwrap());
        assert!(!is_nilpotent(&Matrix::identity(3)).unwrap());
        assert!(is_nilpotent(&Matrix::from_i64(&[&[0, 1, 0], &[1, 0, 1], &[0, -1, 0]])).unwrap());
    }

    #[test]
    fn subspace_examples() {
        let b = Budget::default();
        let r = subspace_all_nilpotent(&strictly_upper(3), &b, 1).unwrap();
        assert!(r.all_nilpotent);
        assert_eq!(r.method, Method::ExactGrid);

        let r = subspace_all_nilpotent(&space(3, &[e(3, 0, 0)]), &b, 1).unwrap();
        assert!(!r.all_nilpotent);
        assert_eq!(r.counterexample, Some(e(3, 0, 0)));

        let r = subspace_all_nilpotent(&fasoli(), &b, 1).unwrap();
        assert!(r.all_nilpotent);
        assert_eq!(r.method, Method::ExactGrid);

        // E12 and E21 are nilpotent; their sum is not.
        let r = subspace_all_nilpotent(&space(2, &[e(2, 0, 1), e(2, 1, 0)]), &b, 1).unwrap();
        assert!(!r.all_nilpotent);
        assert!(!is_nilpotent(&r.counterexample.unwrap()).unwrap());
    }

    #[test]
    fn randomized_fallback_is_recorded() {
        let b = Budget { grid_points: 1, ..Budget::default() };
        let r = subspace_all_nilpotent(&strictly_upper(3), &b, 4).unwrap();
        assert_eq!(r.method, Method::Randomized);
        assert!(r.all_nilpotent);
        let r = subspace_all_nilpotent(&space(2, &[e(2, 0, 1), e(2, 1, 0)]), &b, 4).unwrap();
        assert!(!r.all_nilpotent);
    }

    #[test]
    fn gerstenhaber_examples() {
        let b = Budget::default();
        let r = subspace_all_nilpotent(&strictly_upper(3), &b, 1).unwrap();
        let g = gerstenhaber_check(&r).unwrap();
        assert!(g.attained);
        let r = subspace_all_nilpotent(&fasoli(), &b, 1).unwrap();
        assert!(!gerstenhaber_check(&r).unwrap().attained);
        // Strictly upper plus anything else is 4-dimensional and refuted.
        let mut mats = strictly_upper(3).basis().to_vec();
        mats.push(e(3, 2, 0));
        let r = subspace_all_nilpotent(&space(3, &mats), &b, 1).unwrap();
        assert!(!r.all_nilpotent);
        assert!(matches!(gerstenhaber_check(&r), Err(Error::Contract(_))));
    }

    #[test]
    fn strict_triangularize_examples() {
        let f = strict_triangularize(&strictly_upper(3)).unwrap();
        assert_eq!(f.vectors, (0..3).map(|i| crate::matrix::standard_basis_vector(3, i)).collect::<Vec<_>>());
        assert!(f.verify(strictly_upper(3).basis()));

        let err = strict_triangularize(&fasoli()).unwrap_err();
        assert_eq!(err.stage, 1);

        let f = strict_triangularize(&OperatorSpace::zero(2)).unwrap();
        assert_eq!(f.vectors.len(), 2);
        assert!(f.verify(&[]));
    }

    #[test]
    fn conjugated_triangular_space_recovers_a_flag() {
        let mut s = Sampler::new(9, 5).unwrap();
        let (q, q_inv) = s.invertible_matrix(4);
        let mats: Vec<Matrix> = strictly_upper(4).basis().iter().map(|m| &(&q_inv * m) * &q).collect();
        let sp = space(4, &mats);
        let f = strict_triangularize(&sp).unwrap();
        assert!(f.verify(sp.basis()));
    }

    #[test]
    fn m3_dichotomy_examples() {
        let tri = space(3, &[e(3, 0, 1), e(3, 0, 2)]);
        assert!(matches!(classify_nilpotent_2dim_m3(&tri, 1).unwrap(), M3Class::Triangularizable(_)));

        match classify_nilpotent_2dim_m3(&fasoli(), 1).unwrap() {
            M3Class::SpecialForm { p, alpha, beta } => {
                assert_eq!(p, Matrix::identity(3));
                assert_eq!(alpha, fasoli_alpha());
                assert_eq!(beta, fasoli_beta());
            }
            other => panic!("{other:?}"),
        }

        for seed in 0..10 {
            let mut s = Sampler::new(seed, 6).unwrap();
            let (q, q_inv) = s.invertible_matrix(3);
            let c = s.vector(4);
            let a = &fasoli_alpha().scale(&c[0]) + &fasoli_beta().scale(&c[1]);
            let b = &fasoli_alpha().scale(&c[2]) + &fasoli_beta().scale(&c[3]);
            let Ok(sp) = OperatorSpace::span(3, &[&(&q_inv * &a) * &q, &(&q_inv * &b) * &q]) else { continue };
            if sp.dim() != 2 {
                continue;
            }
            match classify_nilpotent_2dim_m3(&sp, seed).unwrap() {
                M3Class::SpecialForm { p, alpha, beta } => {
                    let p_inv = p.inverse().unwrap();
                    assert_eq!(&(&p_inv * &alpha) * &p, fasoli_alpha());
                    assert_eq!(&(&p_inv * &beta) * &p, fasoli_beta());
                    assert!(sp.contains(&alpha).unwrap() && sp.contains(&beta).unwrap());
                }
                other => panic!("seed {seed}: {other:?}"),
            }
        }

        assert!(matches!(
            classify_nilpotent_2dim_m3(&strictly_upper(3), 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn graded_examples() {
        let single = ElementaryOperator::single(e(2, 0, 1), e(2, 0, 1)).unwrap();
        let probes = vec![Matrix::from_i64(&[&[1, 2], &[3, 4]]), Matrix::identity(2)];
        assert_eq!(graded_product_check(&[single], &probes).unwrap(), Ok(()));

        let id = ElementaryOperator::single(Matrix::identity(2), Matrix::identity(2)).unwrap();
        assert!(matches!(
            graded_product_check(&[id], &probes).unwrap(),
            Err(GradedFailure::Hypothesis { .. })
        ));
    }

    #[test]
    fn all_x_examples() {
        let b = Budget::default();
        let phi = ElementaryOperator::single(e(2, 0, 1), e(2, 0, 1)).unwrap();
        assert_eq!(
            all_x_nilpotent(&phi, &b, 1).unwrap(),
            XNilpotency::Certified(Certification::Structure { form: StructureKind::PatternI, exponent: 2 })
        );
        let id = ElementaryOperator::single(Matrix::identity(2), Matrix::identity(2)).unwrap();
        match all_x_nilpotent(&id, &b, 1).unwrap() {
            XNilpotency::Refuted(w) => assert!(!w.char_poly.is_pure_power()),
            other => panic!("{other:?}"),
        }
        match all_x_nilpotent_with(&id, &b, 1, Mode::SamplingOnly).unwrap() {
            XNilpotency::Refuted(w) => assert_eq!(w.trial, Some(1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_witness_keeps_image() {
        let id = ElementaryOperator::single(e(2, 0, 0), Matrix::identity(2)).unwrap();
        let x = Matrix::from_i64(&[&[3, 0], &[7, 1]]);
        let w = canonical_witness(&id, &x).unwrap();
        assert_eq!(w.image, id.apply(&x).unwrap());
        assert!(w.x.get(1, 0).is_zero());
    }

    #[test]
    fn integer_path_matches_exact_path() {
        let gens = vec![
            Matrix::from_i64(&[&[0, 1], &[0, 0]]).scale(&Scalar::ratio(1, 3)),
            Matrix::from_i64(&[&[0, 0], &[1, 0]]),
        ];
        assert!(matches!(layer_search(&gens, 2, 2), LayerOutcome::Found { .. }));
        let complex = vec![e(2, 0, 1).scale(&Scalar::i()), e(2, 1, 0)];
        assert!(matches!(layer_search(&complex, 2, 2), LayerOutcome::Found { .. }));
        let nil = vec![e(3, 0, 1).scale(&Scalar::i()), e(3, 1, 2)];
        assert!(matches!(layer_search(&nil, 3, 3), LayerOutcome::Clean { .. }));
    }
}
