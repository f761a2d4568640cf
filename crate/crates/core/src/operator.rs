//! Elementary operators `φ(x) = Σ aᵢ x bᵢ` on `M_d(ℂ)` and their representations.
//!
//! Two representations `(a, b)` and `(u, v)` of the same operator with the
//! same minimal length are related by an invertible scalar `P`:
//! `uⱼ = Σₖ Pₖⱼ aₖ`, `vᵢ = Σₖ (P⁻¹)ᵢₖ bₖ`, and their Gram matrices by the
//! blockwise similarity `(vᵢuⱼ) = P⁻¹ (bᵢaⱼ) P`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};
use crate::scalar::Scalar;
use crate::space::{independent_prefix, OperatorSpace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub a: Matrix,
    pub b: Matrix,
}

/// `Σ M_{aᵢ,bᵢ}` over `M_d`. An empty pair list is the explicit zero operator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OperatorWire", into = "OperatorWire")]
pub struct ElementaryOperator {
    dim: usize,
    pairs: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorWire {
    dim: usize,
    pairs: Vec<Pair>,
}

impl TryFrom<OperatorWire> for ElementaryOperator {
    type Error = Error;
    fn try_from(w: OperatorWire) -> Result<Self> {
        if w.pairs.is_empty() {
            return Ok(ElementaryOperator::zero(w.dim));
        }
        ElementaryOperator::new(w.dim, w.pairs.into_iter().map(|p| (p.a, p.b)).collect())
    }
}

impl From<ElementaryOperator> for OperatorWire {
    fn from(op: ElementaryOperator) -> Self {
        OperatorWire { dim: op.dim, pairs: op.pairs }
    }
}

impl ElementaryOperator {
    pub fn new(dim: usize, pairs: Vec<(Matrix, Matrix)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("ambient dimension must be positive".into()));
        }
        if pairs.is_empty() {
            return Err(Error::Contract(
                "an elementary operator needs at least one pair; use ElementaryOperator::zero".into(),
            ));
        }
        for (i, (a, b)) in pairs.iter().enumerate() {
            if a.shape() != (dim, dim) || b.shape() != (dim, dim) {
                return Err(Error::Shape(format!(
                    "pair {i} has shapes {:?}/{:?}, expected {dim}x{dim}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(Self { dim, pairs: pairs.into_iter().map(|(a, b)| Pair { a, b }).collect() })
    }

    /// The zero operator in its empty reduced form.
    pub fn zero(dim: usize) -> Self {
        Self { dim, pairs: Vec::new() }
    }

    /// `M_{a,b}`.
    pub fn single(a: Matrix, b: Matrix) -> Result<Self> {
        let d = a.rows();
        Self::new(d, vec![(a, b)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_zero_form(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn left(&self) -> Vec<Matrix> {
        self.pairs.iter().map(|p| p.a.clone()).collect()
    }

    pub fn right(&self) -> Vec<Matrix> {
        self.pairs.iter().map(|p| p.b.clone()).collect()
    }

    /// `Σ aᵢ x bᵢ`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::Shape(format!(
                "argument is {:?}, operator acts on {}x{}",
                x.shape(),
                self.dim,
                self.dim
            )));
        }
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for p in &self.pairs {
            let t = &(&p.a * x) * &p.b;
            acc = &acc + &t;
        }
        Ok(acc)
    }

    /// `φ(E_{kl})` for all matrix units, row-major in `(k, l)`.
    pub fn unit_images(&self) -> Vec<Matrix> {
        let d = self.dim;
        (0..d * d)
            .map(|idx| {
                let mut acc = Matrix::zeros(d, d);
                let (k, l) = (idx / d, idx % d);
                for p in &self.pairs {
                    // a E_{kl} b = (a e_k)(b^T e_l)^T
                    let col = p.a.column(k);
                    let row = p.b.row(l);
                    acc = &acc + &Matrix::outer(&col, &row);
                }
                acc
            })
            .collect()
    }

    /// Equality as maps on `M_d`, decided on the matrix units.
    pub fn same_map(&self, other: &ElementaryOperator) -> bool {
        self.dim == other.dim && self.unit_images() == other.unit_images()
    }

    pub fn is_zero_map(&self) -> bool {
        self.unit_images().iter().all(Matrix::is_zero)
    }

    /// Coefficient tensor `Σ vec(aᵢ) vec(bᵢ)ᵀ` (d²×d²); its rank is the length.
    pub fn coefficient_matrix(&self) -> Matrix {
        let dd = self.dim * self.dim;
        let mut c = Matrix::zeros(dd, dd);
        for p in &self.pairs {
            c = &c + &Matrix::outer(&p.a.vectorize(), &p.b.vectorize());
        }
        c
    }

    /// Minimal length and a representation attaining it with independent
    /// `{uᵢ}` and `{vᵢ}`.
    pub fn minimal_length(&self) -> Reduced {
        // Independent left coefficients, absorbing the dependent ones into the right side.
        let step = fold_dependent(&self.left(), &self.right());
        // Same on the right; the left combination stays independent because the
        // kept and dropped index sets are disjoint.
        let (v, u) = fold_dependent(&step.1, &step.0);
        if v.is_empty() {
            return Reduced { length: 0, operator: ElementaryOperator::zero(self.dim) };
        }
        let operator = ElementaryOperator {
            dim: self.dim,
            pairs: u.into_iter().zip(v).map(|(a, b)| Pair { a, b }).collect(),
        };
        Reduced { length: operator.n_pairs(), operator }
    }

    pub fn is_length_reduced(&self) -> bool {
        let n = self.n_pairs();
        independent_prefix(&self.left(), Matrix::vectorize).len() == n
            && independent_prefix(&self.right(), Matrix::vectorize).len() == n
    }

    /// `L(φ) = span{aᵢ}`.
    pub fn left_space(&self) -> OperatorSpace {
        OperatorSpace::span(self.dim, &self.left()).expect("shapes checked at construction")
    }

    /// `R(φ) = span{bᵢ}`.
    pub fn right_space(&self) -> OperatorSpace {
        OperatorSpace::span(self.dim, &self.right()).expect("shapes checked at construction")
    }

    /// `V(φ) = span{bᵢaⱼ}`.
    pub fn v_space(&self) -> OperatorSpace {
        OperatorSpace::span(self.dim, self.gram().blocks()).expect("shapes checked at construction")
    }

    pub fn gram(&self) -> GramMatrix {
        let n = self.n_pairs();
        let mut blocks = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                blocks.push(&self.pairs[i].b * &self.pairs[j].a);
            }
        }
        GramMatrix { n, dim: self.dim, blocks }
    }

    /// `Σ bᵢaᵢ`.
    pub fn sum_bi_ai(&self) -> Matrix {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for p in &self.pairs {
            acc = &acc + &(&p.b * &p.a);
        }
        acc
    }

    /// `φ* = Σ M_{bᵢ,aᵢ}`.
    pub fn adjoint_flip(&self) -> ElementaryOperator {
        ElementaryOperator {
            dim: self.dim,
            pairs: self.pairs.iter().map(|p| Pair { a: p.b.clone(), b: p.a.clone() }).collect(),
        }
    }

    /// Sum of two operators as the concatenation of their pairs.
    pub fn plus(&self, other: &ElementaryOperator) -> Result<ElementaryOperator> {
        if self.dim != other.dim {
            return Err(Error::Shape("operators on different algebras".into()));
        }
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Ok(ElementaryOperator { dim: self.dim, pairs })
    }

    /// New coefficients `uⱼ = Σₖ Pₖⱼ aₖ`, `vᵢ = Σₖ (P⁻¹)ᵢₖ bₖ`.
    pub fn similarity_transform(&self, p: &Matrix) -> Result<Representation> {
        let n = self.n_pairs();
        if p.shape() != (n, n) {
            return Err(Error::Shape(format!("P must be {n}x{n}, got {:?}", p.shape())));
        }
        let p_inv = p.inverse()?;
        let a = self.left();
        let b = self.right();
        let u = (0..n).map(|j| combine(self.dim, &a, &p.column(j))).collect();
        let v = (0..n).map(|i| combine(self.dim, &b, &p_inv.row(i))).collect();
        Ok(Representation { dim: self.dim, u, v, p: Some(p.clone()) })
    }

    /// Representation whose left coefficients are the given basis of `L(φ)`.
    pub fn change_left_basis(&self, new_left: &[Matrix]) -> Result<Representation> {
        let n = self.n_pairs();
        let a = self.left();
        if independent_prefix(&a, Matrix::vectorize).len() != n {
            return Err(Error::Precondition("left coefficients are not independent; reduce the operator first".into()));
        }
        if new_left.len() != n {
            return Err(Error::Basis(format!("{} matrices given, L(φ) has dimension {n}", new_left.len())));
        }
        let cols: Vec<Vector> = a.iter().map(Matrix::vectorize).collect();
        let a_mat = Matrix::from_columns(&cols)?;
        let mut p_cols = Vec::with_capacity(n);
        for (j, u) in new_left.iter().enumerate() {
            if u.shape() != (self.dim, self.dim) {
                return Err(Error::Shape(format!("basis element {j} has the wrong shape")));
            }
            let coords = a_mat
                .solve(&u.vectorize())?
                .ok_or_else(|| Error::Basis(format!("element {j} is not in L(φ)")))?;
            p_cols.push(coords);
        }
        let p = Matrix::from_columns(&p_cols)?;
        self.similarity_transform(&p).map_err(|e| match e {
            Error::Singular => Error::Basis("given matrices are linearly dependent".into()),
            other => other,
        })
    }

    /// Matrix of `φ(x)` on `L(φ)ζ` in the basis `{aⱼζ}`: entry `(i,j)` is the
    /// scalar λ with `x bᵢ aⱼ ζ = λ ζ`.
    pub fn local_matrix(&self, zeta: &[Scalar], x: &Matrix) -> Result<Matrix> {
        let d = self.dim;
        if zeta.len() != d {
            return Err(Error::Shape(format!("ζ has length {}, expected {d}", zeta.len())));
        }
        if x.shape() != (d, d) {
            return Err(Error::Shape("x has the wrong shape".into()));
        }
        let n = self.n_pairs();
        let a_zeta: Vec<Vector> = self.pairs.iter().map(|p| p.a.mul_vec(zeta)).collect::<Result<_>>()?;
        if crate::matrix::vectors_rank(&a_zeta) != n {
            return Err(Error::Precondition("{a_j ζ} is linearly dependent".into()));
        }
        let pivot = zeta
            .iter()
            .position(|z| !z.is_zero())
            .ok_or_else(|| Error::Precondition("ζ is zero".into()))?;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let xb = x * &self.pairs[i].b;
            for j in 0..n {
                let w = xb.mul_vec(&a_zeta[j])?;
                let lambda = w[pivot].checked_div(&zeta[pivot]).expect("pivot nonzero");
                let on_line = w.iter().zip(zeta).all(|(wi, zi)| *wi == &lambda * zi);
                if !on_line {
                    return Err(Error::Precondition(format!(
                        "x b_{} a_{} ζ is not a multiple of ζ",
                        i + 1,
                        j + 1
                    )));
                }
                out.set(i, j, lambda);
            }
        }
        Ok(out)
    }
}

/// Keeps the earliest independent `primary` items and folds each dependent one,
/// `pₖ = Σ λₖₛ pₛ`, into the partner list: `qₛ += λₖₛ qₖ`.
fn fold_dependent(primary: &[Matrix], partner: &[Matrix]) -> (Vec<Matrix>, Vec<Matrix>) {
    if primary.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let cols: Vec<Vector> = primary.iter().map(Matrix::vectorize).collect();
    let m = Matrix::from_columns(&cols).expect("equal lengths");
    let (r, pivots) = m.rref();
    let kept_primary: Vec<Matrix> = pivots.iter().map(|&k| primary[k].clone()).collect();
    let mut kept_partner: Vec<Matrix> = pivots.iter().map(|&k| partner[k].clone()).collect();
    for k in 0..primary.len() {
        if pivots.contains(&k) {
            continue;
        }
        // Column k of the RREF holds its coordinates on the pivot columns.
        for (s, _) in pivots.iter().enumerate() {
            let lambda = r.get(s, k);
            if !lambda.is_zero() {
                kept_partner[s].add_scaled(lambda, &partner[k]);
            }
        }
    }
    (kept_primary, kept_partner)
}

fn combine(d: usize, mats: &[Matrix], coeffs: &[Scalar]) -> Matrix {
    let mut acc = Matrix::zeros(d, d);
    for (c, m) in coeffs.iter().zip(mats) {
        acc.add_scaled(c, m);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    pub length: usize,
    /// Zero form (no pairs) when `length == 0`.
    pub operator: ElementaryOperator,
}

/// `ψ(φ(E_{kl})) = 0` on every basis element (default: all matrix units).
pub fn compose_is_zero(psi: &ElementaryOperator, phi: &ElementaryOperator, basis: Option<&[Matrix]>) -> Result<bool> {
    if psi.dim != phi.dim {
        return Err(Error::Shape("operators on different algebras".into()));
    }
    let images = match basis {
        Some(b) => b.iter().map(|x| phi.apply(x)).collect::<Result<Vec<_>>>()?,
        None => phi.unit_images(),
    };
    for y in &images {
        if !psi.apply(y)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The `n×n` array of `d×d` blocks `bᵢaⱼ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramMatrix {
    n: usize,
    dim: usize,
    blocks: Vec<Matrix>,
}

impl GramMatrix {
    pub fn from_blocks(n: usize, dim: usize, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.len() != n * n || blocks.iter().any(|b| b.shape() != (dim, dim)) {
            return Err(Error::Shape("Gram blocks do not form an n×n array of d×d matrices".into()));
        }
        Ok(Self { n, dim, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Zero-based block `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> &Matrix {
        &self.blocks[i * self.n + j]
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    /// Blockwise `P⁻¹ G P`.
    pub fn similarity(&self, p: &Matrix) -> Result<GramMatrix> {
        let n = self.n;
        if p.shape() != (n, n) {
            return Err(Error::Shape("P has the wrong size".into()));
        }
        let p_inv = p.inverse()?;
        let mut blocks = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Matrix::zeros(self.dim, self.dim);
                for k in 0..n {
                    if p_inv.get(i, k).is_zero() {
                        continue;
                    }
                    for l in 0..n {
                        let c = p_inv.get(i, k) * p.get(l, j);
                        acc.add_scaled(&c, self.block(k, l));
                    }
                }
                blocks.push(acc);
            }
        }
        Ok(GramMatrix { n, dim: self.dim, blocks })
    }

    /// The `n×n` scalar matrix `((bᵢaⱼ)_{kl})ᵢⱼ` for one entry position `(k, l)`.
    pub fn entry_slice(&self, k: usize, l: usize) -> Matrix {
        let data = self.blocks.iter().map(|b| b.get(k, l).clone()).collect();
        Matrix::new(self.n, self.n, data).expect("n*n blocks")
    }

    /// Span of all entry slices: the subspace `{(ω(bᵢaⱼ))ᵢⱼ : ω ∈ M_d*}` of `M_n`.
    /// It has the dimension of `V(φ)` and moves by `P⁻¹(·)P` under a change of
    /// representation; a flag for it in `ℂⁿ` is exactly a block triangularization
    /// of the Gram matrix.
    pub fn coefficient_space(&self) -> OperatorSpace {
        let slices: Vec<Matrix> = (0..self.dim * self.dim)
            .map(|idx| self.entry_slice(idx / self.dim, idx % self.dim))
            .collect();
        OperatorSpace::span(self.n, &slices).expect("n×n slices")
    }

    /// `(vᵢuⱼ) = 0` for all `i ≥ j`.
    pub fn is_strictly_upper(&self) -> bool {
        (0..self.n).all(|i| (0..=i).all(|j| self.block(i, j).is_zero()))
    }
}

/// Coefficients `(u, v)` of an operator, optionally with the scalar `P`
/// relating them to a source representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub dim: usize,
    pub u: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub p: Option<Matrix>,
}

impl Representation {
    pub fn to_operator(&self) -> Result<ElementaryOperator> {
        if self.u.is_empty() {
            return Ok(ElementaryOperator::zero(self.dim));
        }
        if self.u.len() != self.v.len() {
            return Err(Error::Shape("u and v have different lengths".into()));
        }
        ElementaryOperator::new(self.dim, self.u.iter().cloned().zip(self.v.iter().cloned()).collect())
    }

    pub fn gram(&self) -> Result<GramMatrix> {
        Ok(self.to_operator()?.gram())
    }

    /// `Σ M_{uᵢ,vᵢ} = φ` on all matrix units.
    pub fn reconstructs(&self, phi: &ElementaryOperator) -> Result<bool> {
        Ok(self.to_operator()?.same_map(phi))
    }

    /// Checks `uⱼ = Σ Pₖⱼ aₖ` and `vᵢ = Σ (P⁻¹)ᵢₖ bₖ` against a source.
    pub fn matches_transform(&self, source: &ElementaryOperator) -> Result<bool> {
        let Some(p) = &self.p else { return Ok(true) };
        let expect = source.similarity_transform(p)?;
        Ok(expect.u == self.u && expect.v == self.v)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepresentationWire {
    dim: usize,
    pairs: Vec<Pair>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<Matrix>,
}

impl Serialize for Representation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RepresentationWire {
            dim: self.dim,
            pairs: self.u.iter().zip(&self.v).map(|(a, b)| Pair { a: a.clone(), b: b.clone() }).collect(),
            p: self.p.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Representation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = RepresentationWire::deserialize(d)?;
        if w.pairs.iter().any(|p| p.a.shape() != (w.dim, w.dim) || p.b.shape() != (w.dim, w.dim)) {
            return Err(serde::de::Error::custom("representation coefficient has the wrong shape"));
        }
        let (u, v) = w.pairs.into_iter().map(|p| (p.a, p.b)).unzip();
        Ok(Representation { dim: w.dim, u, v, p: w.p })
    }
}
