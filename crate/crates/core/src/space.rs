//! Finite-dimensional subspaces of `L(ℂ^d)`: spans, evaluation at vectors,
//! local dimension, separating vectors and rank-one factorization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::grid::{layers_size, Layer};
use crate::matrix::{is_zero_vector, vectors_rank, Matrix, Vector};
use crate::random::{derive_seed, Sampler, DEFAULT_HEIGHT};
use crate::scalar::Scalar;

/// Largest number of grid points the exact local-dimension mode will evaluate.
pub const EXACT_LOCAL_DIM_POINTS: u64 = 5_000;

/// A subspace of `d×d` matrices held by a linearly independent basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceWire", into = "SpaceWire")]
pub struct OperatorSpace {
    ambient_dim: usize,
    basis: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceWire {
    dim: usize,
    basis: Vec<Matrix>,
}

impl TryFrom<SpaceWire> for OperatorSpace {
    type Error = Error;
    fn try_from(w: SpaceWire) -> Result<Self> {
        let space = OperatorSpace::span(w.dim, &w.basis)?;
        if space.dim() != w.basis.len() {
            return Err(Error::Basis("serialized basis is linearly dependent".into()));
        }
        Ok(space)
    }
}

impl From<OperatorSpace> for SpaceWire {
    fn from(s: OperatorSpace) -> Self {
        SpaceWire { dim: s.ambient_dim, basis: s.basis }
    }
}

impl OperatorSpace {
    /// Span of `mats`, keeping the earliest-index independent generators.
    pub fn span(ambient_dim: usize, mats: &[Matrix]) -> Result<Self> {
        if let Some(bad) = mats.iter().find(|m| m.shape() != (ambient_dim, ambient_dim)) {
            return Err(Error::Shape(format!(
                "generator of shape {:?} in a space of {ambient_dim}x{ambient_dim} matrices",
                bad.shape()
            )));
        }
        let basis = independent_prefix(mats, Matrix::vectorize)
            .into_iter()
            .map(|i| mats[i].clone())
            .collect();
        Ok(Self { ambient_dim, basis })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: Vec::new() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    /// Coefficients of `m` in the basis, if `m` lies in the space.
    pub fn coordinates(&self, m: &Matrix) -> Result<Option<Vector>> {
        if m.shape() != (self.ambient_dim, self.ambient_dim) {
            return Err(Error::Shape("matrix does not live in the ambient algebra".into()));
        }
        if self.basis.is_empty() {
            return Ok(m.is_zero().then(Vec::new));
        }
        let cols: Vec<Vector> = self.basis.iter().map(Matrix::vectorize).collect();
        Matrix::from_columns(&cols)?.solve(&m.vectorize())
    }

    pub fn contains(&self, m: &Matrix) -> Result<bool> {
        Ok(self.coordinates(m)?.is_some())
    }

    /// `Σ cᵢ Tᵢ`.
    pub fn combination(&self, coeffs: &[Scalar]) -> Result<Matrix> {
        if coeffs.len() != self.basis.len() {
            return Err(Error::Shape("coefficient count differs from dimension".into()));
        }
        let mut acc = Matrix::zeros(self.ambient_dim, self.ambient_dim);
        for (c, t) in coeffs.iter().zip(&self.basis) {
            acc.add_scaled(c, t);
        }
        Ok(acc)
    }

    /// Reduced basis of `Vζ = span{Tζ}`.
    pub fn evaluate(&self, zeta: &[Scalar]) -> Result<Vec<Vector>> {
        let images = self.images(zeta)?;
        Ok(independent_prefix(&images, Clone::clone)
            .into_iter()
            .map(|i| images[i].clone())
            .collect())
    }

    /// `dim Vζ`.
    pub fn evaluate_dim(&self, zeta: &[Scalar]) -> Result<usize> {
        Ok(vectors_rank(&self.images(zeta)?))
    }

    fn images(&self, zeta: &[Scalar]) -> Result<Vec<Vector>> {
        if zeta.len() != self.ambient_dim {
            return Err(Error::Shape(format!(
                "vector of length {} in ambient dimension {}",
                zeta.len(),
                self.ambient_dim
            )));
        }
        self.basis.iter().map(|t| t.mul_vec(zeta)).collect()
    }

    /// Upper limit on `dim Vζ`.
    fn local_ceiling(&self) -> usize {
        self.dim().min(self.ambient_dim)
    }

    fn exact_mode_points(&self) -> u64 {
        layers_size(self.ambient_dim, self.local_ceiling())
    }
}

/// Indices of the earliest linearly independent items.
pub(crate) fn independent_prefix<T>(items: &[T], vectorize: impl Fn(&T) -> Vector) -> Vec<usize> {
    if items.is_empty() {
        return Vec::new();
    }
    let cols: Vec<Vector> = items.iter().map(vectorize).collect();
    match Matrix::from_columns(&cols) {
        Ok(m) => m.rref().1,
        Err(_) => Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalDimResult {
    pub value: usize,
    /// `ζ` with `dim Vζ = value`.
    pub witness: Vector,
    /// Always true: the witness re-verifies the lower bound.
    pub certified_lower_bound: bool,
    /// True when the whole deterministic grid was evaluated, so `value` is lDim exactly.
    pub exact: bool,
    pub trials_used: usize,
}

/// Local dimension `max_ζ dim Vζ`.
///
/// Exact mode evaluates every point of the homogeneous grid layers
/// `1..=min(dim V, d)`: each `r×r` minor of `[T₁ζ … T_kζ]` is homogeneous of
/// degree `r` in ζ, so a nonzero minor is nonzero at some point of layer `r`.
/// Larger instances fall back to `trials` seeded samples.
pub fn local_dimension(space: &OperatorSpace, seed: u64, trials: usize) -> Result<LocalDimResult> {
    let d = space.ambient_dim();
    let ceiling = space.local_ceiling();
    let mut best = LocalDimResult {
        value: 0,
        witness: vec![Scalar::zero(); d],
        certified_lower_bound: true,
        exact: false,
        trials_used: 0,
    };
    if ceiling == 0 {
        best.exact = true;
        return Ok(best);
    }
    if space.exact_mode_points() <= EXACT_LOCAL_DIM_POINTS {
        'layers: for p in 1..=ceiling {
            for alpha in Layer::new(d, p) {
                best.trials_used += 1;
                let zeta: Vector = alpha.iter().map(|&a| Scalar::from_i64(a as i64)).collect();
                let r = space.evaluate_dim(&zeta)?;
                if r > best.value {
                    best.value = r;
                    best.witness = zeta;
                    if r == ceiling {
                        break 'layers;
                    }
                }
            }
        }
        best.exact = true;
        return Ok(best);
    }
    if trials == 0 {
        return Err(Error::Domain("local_dimension needs at least one trial".into()));
    }
    let mut sampler = Sampler::new(derive_seed(seed, 0x1d1), DEFAULT_HEIGHT)?;
    for _ in 0..trials {
        best.trials_used += 1;
        let zeta = sampler.vector(d);
        let r = space.evaluate_dim(&zeta)?;
        if r > best.value {
            best.value = r;
            best.witness = zeta;
            if r == ceiling {
                // The ceiling is an upper bound, so this sample is conclusive.
                best.exact = true;
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceReport {
    pub dependent: bool,
    pub local: LocalDimResult,
}

/// `lDim V < dim V`. A `false` answer is always proven by `local.witness`;
/// a `true` answer is proven when `local.exact` holds.
pub fn is_locally_linearly_dependent(space: &OperatorSpace, seed: u64, trials: usize) -> Result<DependenceReport> {
    let local = local_dimension(space, seed, trials)?;
    Ok(DependenceReport { dependent: local.value < space.dim(), local })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("no simultaneous separating vector after {trials} trials; space {failing} stayed below its local dimension")]
pub struct SeparatingNotFound {
    pub best: Vector,
    pub failing: usize,
    pub trials: usize,
}

/// ζ with `dim Vᵢζ = lDim Vᵢ` for every space.
pub fn simultaneous_separating_vector(
    spaces: &[OperatorSpace],
    seed: u64,
    trials: usize,
) -> Result<std::result::Result<Vector, SeparatingNotFound>> {
    let Some(first) = spaces.first() else {
        return Err(Error::Domain("no spaces given".into()));
    };
    let d = first.ambient_dim();
    if spaces.iter().any(|s| s.ambient_dim() != d) {
        return Err(Error::Shape("spaces live in different ambient algebras".into()));
    }
    let targets = spaces
        .iter()
        .enumerate()
        .map(|(i, s)| local_dimension(s, derive_seed(seed, i as u64), trials.max(1)).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;

    let mut sampler = Sampler::new(derive_seed(seed, 0x5e9), DEFAULT_HEIGHT)?;
    let mut best = (vec![Scalar::zero(); d], 0usize, 0usize);
    for _ in 0..trials {
        let zeta = sampler.vector(d);
        let mut ok = 0;
        for (s, &t) in spaces.iter().zip(&targets) {
            if s.evaluate_dim(&zeta)? == t {
                ok += 1;
            } else {
                break;
            }
        }
        if ok == spaces.len() {
            return Ok(Ok(zeta));
        }
        if ok >= best.1 {
            best = (zeta, ok, ok);
        }
    }
    Ok(Err(SeparatingNotFound { best: best.0, failing: best.2, trials }))
}

/// `ξ·fᵀ` with the first nonzero entry of `f` equal to one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankOne {
    pub column: Vector,
    pub functional: Vector,
}

impl RankOne {
    pub fn to_matrix(&self) -> Matrix {
        Matrix::outer(&self.column, &self.functional)
    }
}

pub fn rank_one_factor(m: &Matrix) -> Result<RankOne> {
    let rank = m.rank();
    if rank != 1 {
        return Err(Error::Rank(rank));
    }
    let row = (0..m.rows())
        .map(|i| m.row(i))
        .find(|r| !is_zero_vector(r))
        .expect("rank one has a nonzero row");
    let lead_idx = row.iter().position(|x| !x.is_zero()).expect("nonzero row");
    let lead_inv = row[lead_idx].inv().expect("nonzero");
    let functional: Vector = row.iter().map(|x| x * &lead_inv).collect();
    let column = m.column(lead_idx);
    Ok(RankOne { column, functional })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatSpaceReport {
    /// Largest rank of `ζ̂ : T ↦ Tζ` over the probes.
    pub max_rank: usize,
    pub local: LocalDimResult,
    pub within_bound: bool,
}

/// Rank of each evaluation map `ζ̂` against the local dimension.
/// An exactly known local dimension that a probe exceeds is an inconsistency.
pub fn hat_space(space: &OperatorSpace, probes: &[Vector], seed: u64, trials: usize) -> Result<HatSpaceReport> {
    let local = local_dimension(space, seed, trials)?;
    let mut max_rank = 0;
    for z in probes {
        // rank ζ̂ = dim of its image = dim Vζ.
        max_rank = max_rank.max(space.evaluate_dim(z)?);
    }
    let within_bound = max_rank <= local.value;
    if !within_bound && local.exact {
        return Err(Error::Inconsistency(format!(
            "evaluation map of rank {max_rank} exceeds the exact local dimension {}",
            local.value
        )));
    }
    Ok(HatSpaceReport { max_rank, local, within_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::standard_basis_vector;

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(d, i, j)
    }

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| Scalar::from_i64(x)).collect()
    }

    #[test]
    fn reduce_basis_examples() {
        let e11 = e(2, 0, 0);
        assert_eq!(OperatorSpace::span(2, &[e11.clone(), e11.scale(&Scalar::from_i64(2))]).unwrap().dim(), 1);
        let e12 = e(2, 0, 1);
        let s = OperatorSpace::span(2, &[e11.clone(), e12.clone(), &e11 + &e12]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis(), &[e11, e12]);
        assert_eq!(OperatorSpace::span(2, &[]).unwrap().dim(), 0);
    }

    #[test]
    fn span_rejects_wrong_shape() {
        assert!(matches!(OperatorSpace::span(2, &[Matrix::zeros(3, 3)]), Err(Error::Shape(_))));
    }

    #[test]
    fn evaluate_examples() {
        let s = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 1, 0)]).unwrap();
        assert_eq!(s.evaluate(&v(&[1, 0])).unwrap().len(), 2);
        let t = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 0, 1)]).unwrap();
        assert_eq!(t.evaluate_dim(&v(&[3, -5])).unwrap(), 1);
        assert_eq!(s.evaluate_dim(&v(&[0, 0])).unwrap(), 0);
        assert!(matches!(s.evaluate(&v(&[1])), Err(Error::Shape(_))));
    }

    #[test]
    fn local_dimension_examples() {
        let t = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 0, 1)]).unwrap();
        let r = local_dimension(&t, 1, 10).unwrap();
        assert_eq!(r.value, 1);
        assert!(r.exact);

        let diag = OperatorSpace::span(3, &[e(3, 0, 0), e(3, 1, 1), e(3, 2, 2)]).unwrap();
        let r = local_dimension(&diag, 1, 10).unwrap();
        assert_eq!(r.value, 3);
        assert_eq!(r.witness, v(&[1, 1, 1]));
        assert_eq!(diag.evaluate_dim(&r.witness).unwrap(), 3);

        let z = local_dimension(&OperatorSpace::zero(3), 1, 10).unwrap();
        assert_eq!(z.value, 0);
    }

    #[test]
    fn local_dependence_examples() {
        let t = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 0, 1)]).unwrap();
        assert!(is_locally_linearly_dependent(&t, 0, 10).unwrap().dependent);
        let d = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 1, 1)]).unwrap();
        let r = is_locally_linearly_dependent(&d, 0, 10).unwrap();
        assert!(!r.dependent);
        assert_eq!(r.local.witness, v(&[1, 1]));
        let id = OperatorSpace::span(2, &[Matrix::identity(2)]).unwrap();
        assert!(!is_locally_linearly_dependent(&id, 0, 10).unwrap().dependent);
    }

    #[test]
    fn separating_vectors() {
        let a = OperatorSpace::span(2, &[e(2, 0, 0)]).unwrap();
        let z = simultaneous_separating_vector(&[a.clone()], 3, 10).unwrap().unwrap();
        assert!(!z[0].is_zero());
        let b = OperatorSpace::span(2, &[e(2, 1, 1)]).unwrap();
        let z = simultaneous_separating_vector(&[a.clone(), b.clone()], 3, 10).unwrap().unwrap();
        assert_eq!(a.evaluate_dim(&z).unwrap(), 1);
        assert_eq!(b.evaluate_dim(&z).unwrap(), 1);
        let dims = OperatorSpace::span(3, &[e(3, 0, 0)]).unwrap();
        assert!(simultaneous_separating_vector(&[a, dims], 3, 10).is_err());
    }

    #[test]
    fn rank_one_examples() {
        let r = rank_one_factor(&e(3, 1, 2)).unwrap();
        assert_eq!(r.column, standard_basis_vector(3, 1));
        assert_eq!(r.functional, standard_basis_vector(3, 2));

        let m = Matrix::from_i64(&[&[2, 4], &[1, 2]]);
        let r = rank_one_factor(&m).unwrap();
        assert_eq!(r.column, v(&[2, 1]));
        assert_eq!(r.functional, v(&[1, 2]));
        assert_eq!(r.to_matrix(), m);

        assert_eq!(rank_one_factor(&Matrix::identity(2)), Err(Error::Rank(2)));
        assert_eq!(rank_one_factor(&Matrix::zeros(2, 2)), Err(Error::Rank(0)));
    }

    #[test]
    fn hat_space_examples() {
        let probes: Vec<Vector> = (0..3).map(|i| standard_basis_vector(3, i)).collect();
        let t = OperatorSpace::span(3, &[e(3, 0, 0), e(3, 0, 1)]).unwrap();
        assert_eq!(hat_space(&t, &probes, 0, 10).unwrap().max_rank, 1);
        assert_eq!(hat_space(&OperatorSpace::zero(3), &probes, 0, 10).unwrap().max_rank, 0);
        let diag = OperatorSpace::span(3, &[e(3, 0, 0), e(3, 1, 1), e(3, 2, 2)]).unwrap();
        let mut p = probes.clone();
        p.push(v(&[1, 1, 1]));
        let r = hat_space(&diag, &p, 0, 10).unwrap();
        assert_eq!(r.max_rank, 3);
        assert!(r.within_bound);
    }

    #[test]
    fn serialization_round_trip() {
        let s = OperatorSpace::span(2, &[e(2, 0, 0), e(2, 1, 0)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"dim":2,"basis":"#));
        assert_eq!(serde_json::from_str::<OperatorSpace>(&json).unwrap(), s);
        let dup = r#"{"dim":1,"basis":[[["1","0"]],[["2","0"]]]}"#;
        assert!(serde_json::from_str::<OperatorSpace>(dup).is_err());
    }
}
