//! Local nilpotency of operators of length at most three.
//!
//! The decision runs on the coefficient space `N_G` of the Gram matrix (see
//! [`GramMatrix::coefficient_space`]), which moves by similarity under a change
//! of representation:
//!
//! * a strict flag for `N_G` is a block triangularization of the Gram matrix,
//!   i.e. a representation with `vᵢuⱼ = 0` for `i ≥ j`;
//! * otherwise, for length three, `N_G` must be a conjugate of the special
//!   two-dimensional family of 3×3 nilpotents and the two Gram blocks it
//!   exposes must span a space of rank-one matrices (shared functional or
//!   shared column);
//! * anything else is not locally nilpotent, and an exact witness `x` is
//!   searched for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{vectors_rank, Matrix, Vector};
use crate::nilpotency::{
    block_strict_triangularize, canonical_witness, classify_nilpotent_2dim_m3, strict_flag,
    subspace_all_nilpotent, witness_search, Budget, M3Class, StructureKind, Witness, WitnessSearch,
};
use crate::operator::{compose_is_zero, ElementaryOperator, Representation};
use crate::random::{derive_seed, Sampler};
use crate::scalar::Scalar;
use crate::space::{local_dimension, rank_one_factor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "LQN")]
    Lqn,
    #[serde(rename = "NotLQN")]
    NotLqn,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Form {
    PatternI,
    /// Gram `[[0, ζ₁⊗f, 0], [ζ₀⊗f, 0, ζ₁⊗f], [0, −ζ₀⊗f, 0]]`.
    SpecialII { zeta0: Vector, zeta1: Vector, f: Vector },
    /// Gram `[[0, ζ₀⊗g, 0], [ζ₀⊗f, 0, ζ₀⊗g], [0, −ζ₀⊗f, 0]]`.
    SpecialIII { zeta0: Vector, f: Vector, g: Vector },
    /// Two pairs `(a,b), (c,d)` with `ba = dc = bc = 0`.
    Length2Zeros,
    /// Gram `cᵢⱼ·W` with `(cᵢⱼ) = [[T, 0], [*, 0]]`, `T` strictly upper of order `r`.
    DimV1Block { r: usize },
}

impl Form {
    pub fn label(&self) -> &'static str {
        match self {
            Form::PatternI => "Pattern-I",
            Form::SpecialII { .. } => "Special-II",
            Form::SpecialIII { .. } => "Special-III",
            Form::Length2Zeros => "Length2-Zeros",
            Form::DimV1Block { .. } => "DimV1-Block",
        }
    }

    /// Exponent `k` with `φ(x)^k = 0` for all `x`, given a representation of length `n`.
    pub fn exponent(&self, n: usize) -> usize {
        match self {
            Form::PatternI | Form::Length2Zeros => n + 1,
            Form::SpecialII { .. } | Form::SpecialIII { .. } => 5,
            Form::DimV1Block { r } => r + 2,
        }
    }

    pub fn kind(&self) -> StructureKind {
        match self {
            Form::PatternI | Form::Length2Zeros => StructureKind::PatternI,
            Form::SpecialII { .. } => StructureKind::SpecialII,
            Form::SpecialIII { .. } => StructureKind::SpecialIII,
            Form::DimV1Block { .. } => StructureKind::DimV1Block,
        }
    }
}

/// Informational record of how a verdict was reached.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub branch: String,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldim_l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldim_v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_space_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<usize>,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub grid_points: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationVerdict {
    pub status: Status,
    pub form: Option<Form>,
    /// Relative to the minimal-length reduction of the classified operator.
    pub representation: Option<Representation>,
    pub witness: Option<Matrix>,
    pub witness_image: Option<Matrix>,
    pub witness_char_poly: Option<crate::Polynomial>,
    pub evidence: Evidence,
}

impl ClassificationVerdict {
    fn lqn(form: Form, representation: Representation, mut evidence: Evidence) -> Self {
        evidence.exponent = Some(form.exponent(representation.u.len()));
        Self {
            status: Status::Lqn,
            form: Some(form),
            representation: Some(representation),
            witness: None,
            witness_image: None,
            witness_char_poly: None,
            evidence,
        }
    }

    fn not_lqn(w: Witness, mut evidence: Evidence) -> Self {
        if let Some(t) = w.trial {
            evidence.trials = evidence.trials.max(t);
        }
        Self {
            status: Status::NotLqn,
            form: None,
            representation: None,
            witness: Some(w.x),
            witness_image: Some(w.image),
            witness_char_poly: Some(w.char_poly),
            evidence,
        }
    }

    fn unknown(evidence: Evidence) -> Self {
        Self {
            status: Status::Unknown,
            form: None,
            representation: None,
            witness: None,
            witness_image: None,
            witness_char_poly: None,
            evidence,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta1: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictWire {
    status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    representation: Option<Representation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness_image: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness_char_poly: Option<crate::Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<Parameters>,
    evidence: Evidence,
}

impl Serialize for ClassificationVerdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let parameters = self.form.as_ref().and_then(|f| match f {
            Form::SpecialII { zeta0, zeta1, f } => Some(Parameters {
                zeta0: Some(zeta0.clone()),
                zeta1: Some(zeta1.clone()),
                f: Some(f.clone()),
                ..Parameters::default()
            }),
            Form::SpecialIII { zeta0, f, g } => Some(Parameters {
                zeta0: Some(zeta0.clone()),
                f: Some(f.clone()),
                g: Some(g.clone()),
                ..Parameters::default()
            }),
            Form::DimV1Block { r } => Some(Parameters { r: Some(*r), ..Parameters::default() }),
            Form::PatternI | Form::Length2Zeros => None,
        });
        VerdictWire {
            status: self.status,
            form: self.form.as_ref().map(|f| f.label().to_string()),
            representation: self.representation.clone(),
            witness: self.witness.clone(),
            witness_image: self.witness_image.clone(),
            witness_char_poly: self.witness_char_poly.clone(),
            parameters,
            evidence: self.evidence.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassificationVerdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = VerdictWire::deserialize(d)?;
        let params_given = w.parameters.is_some();
        let p = w.parameters.unwrap_or_default();
        let need = |v: Option<Vector>, name: &str| v.ok_or_else(|| D::Error::custom(format!("missing parameter {name}")));
        let form = match w.form.as_deref() {
            None => None,
            Some(label) => {
                let (allowed, form): (&[&str], Form) = match label {
                    "Pattern-I" => (&[], Form::PatternI),
                    "Length2-Zeros" => (&[], Form::Length2Zeros),
                    "Special-II" => (
                        &["zeta0", "zeta1", "f"],
                        Form::SpecialII {
                            zeta0: need(p.zeta0.clone(), "zeta0")?,
                            zeta1: need(p.zeta1.clone(), "zeta1")?,
                            f: need(p.f.clone(), "f")?,
                        },
                    ),
                    "Special-III" => (
                        &["zeta0", "f", "g"],
                        Form::SpecialIII {
                            zeta0: need(p.zeta0.clone(), "zeta0")?,
                            f: need(p.f.clone(), "f")?,
                            g: need(p.g.clone(), "g")?,
                        },
                    ),
                    "DimV1-Block" => (
                        &["r"],
                        Form::DimV1Block { r: p.r.ok_or_else(|| D::Error::custom("missing parameter r"))? },
                    ),
                    other => return Err(D::Error::custom(format!("unknown form {other:?}"))),
                };
                let present = [
                    ("zeta0", p.zeta0.is_some()),
                    ("zeta1", p.zeta1.is_some()),
                    ("f", p.f.is_some()),
                    ("g", p.g.is_some()),
                    ("r", p.r.is_some()),
                ];
                if let Some((name, _)) = present.iter().find(|(n, there)| *there && !allowed.contains(n)) {
                    return Err(D::Error::custom(format!("parameter {name} does not belong to form {label}")));
                }
                Some(form)
            }
        };
        if form.is_none() && params_given {
            return Err(D::Error::custom("parameters given without a form"));
        }
        Ok(ClassificationVerdict {
            status: w.status,
            form,
            representation: w.representation,
            witness: w.witness,
            witness_image: w.witness_image,
            witness_char_poly: w.witness_char_poly,
            evidence: w.evidence,
        })
    }
}

/// `Σ bᵢaᵢ = 0`.
pub fn necessary_trace_condition(phi: &ElementaryOperator) -> bool {
    phi.sum_bi_ai().is_zero()
}

/// Classifies an operator of length at most three.
pub fn classify(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let reduced = phi.minimal_length();
    match reduced.length {
        0..=2 => classify_reduced_short(&reduced.operator, budget, seed),
        3 => classify_reduced3(&reduced.operator, budget, seed),
        n => Err(Error::Unsupported(format!("length {n} exceeds the supported maximum of 3"))),
    }
}

pub fn classify_length2(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let reduced = phi.minimal_length();
    if reduced.length > 2 {
        return Err(Error::Contract(format!("operator has length {}, expected at most 2", reduced.length)));
    }
    classify_reduced_short(&reduced.operator, budget, seed)
}

pub fn classify_length3(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let reduced = phi.minimal_length();
    if reduced.length != 3 {
        return Err(Error::Contract(format!("operator has length {}, expected 3", reduced.length)));
    }
    classify_reduced3(&reduced.operator, budget, seed)
}

fn base_evidence(op: &ElementaryOperator, seed: u64, budget: &Budget) -> Result<Evidence> {
    let mut ev = Evidence { length: op.n_pairs(), ..Evidence::default() };
    if op.is_zero_form() {
        ev.ldim_l = Some(0);
        ev.dim_v = Some(0);
        ev.ldim_v = Some(0);
        return Ok(ev);
    }
    let l = local_dimension(&op.left_space(), derive_seed(seed, 1), budget.trials)?;
    let v = op.v_space();
    let lv = local_dimension(&v, derive_seed(seed, 2), budget.trials)?;
    ev.ldim_l = Some(l.value);
    ev.dim_v = Some(v.dim());
    ev.ldim_v = Some(lv.value);
    if !l.exact || !lv.exact {
        ev.notes.push("local dimensions are sampled lower bounds".into());
    }
    Ok(ev)
}

/// `x = S*` for `S = Σbᵢaᵢ ≠ 0` gives `tr φ(x) = tr(S*S) > 0`.
fn trace_witness(op: &ElementaryOperator) -> Result<Option<Witness>> {
    let s = op.sum_bi_ai();
    if s.is_zero() {
        return Ok(None);
    }
    canonical_witness(op, &s.adjoint()).map(Some)
}

fn refute_by_search(op: &ElementaryOperator, budget: &Budget, seed: u64, mut ev: Evidence) -> Result<ClassificationVerdict> {
    match witness_search(op, budget, derive_seed(seed, 7))? {
        WitnessSearch::Found(w) => {
            ev.trials = w.trial.unwrap_or(budget.trials);
            Ok(ClassificationVerdict::not_lqn(w, ev))
        }
        WitnessSearch::GridClean { points } => {
            ev.grid_points = points;
            ev.notes.push("complete grid found no witness although the structure is not recognized".into());
            Ok(ClassificationVerdict::unknown(ev))
        }
        WitnessSearch::Exhausted { trials } => {
            ev.trials = trials;
            ev.notes.push("witness search exhausted the budget".into());
            Ok(ClassificationVerdict::unknown(ev))
        }
    }
}

fn classify_reduced_short(op: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let mut ev = base_evidence(op, seed, budget)?;
    let n = op.n_pairs();
    if n == 0 {
        ev.branch = "zero-operator".into();
        let rep = Representation { dim: op.dim(), u: vec![], v: vec![], p: None };
        return Ok(ClassificationVerdict::lqn(Form::PatternI, rep, ev));
    }
    if let Some(w) = trace_witness(op)? {
        ev.branch = "trace-condition".into();
        return Ok(ClassificationVerdict::not_lqn(w, ev));
    }
    if let Ok(bt) = block_strict_triangularize(&op.gram()) {
        ev.branch = "block-flag".into();
        if n == 1 {
            return Ok(ClassificationVerdict::lqn(Form::PatternI, op.similarity_transform(&bt.p)?, ev));
        }
        // (a,b) = (u₂,v₂), (c,d) = (u₁,v₁): ba = v₂u₂, dc = v₁u₁, bc = v₂u₁.
        let swap = Matrix::from_i64(&[&[0, 1], &[1, 0]]);
        let rep = op.similarity_transform(&(&bt.p * &swap))?;
        return Ok(ClassificationVerdict::lqn(Form::Length2Zeros, rep, ev));
    }
    ev.branch = "no-block-flag".into();
    refute_by_search(op, budget, seed, ev)
}

/// Forms (ii)/(iii) for a length-three operator whose Gram admits no block flag.
pub(crate) enum Special {
    Form(Form, Representation),
    /// The coefficient space is the special family, but the exposed blocks are not rank-one compatible.
    NotRankOne,
    /// The coefficient space is not a conjugate of the special family.
    NotSpecial { coefficient_dim: usize },
}

pub(crate) fn special_form(op: &ElementaryOperator, seed: u64) -> Result<Special> {
    let ns = op.gram().coefficient_space();
    let coefficient_dim = ns.dim();
    if op.n_pairs() != 3 || coefficient_dim != 2 {
        return Ok(Special::NotSpecial { coefficient_dim });
    }
    if !subspace_all_nilpotent(&ns, &Budget::default(), seed)?.all_nilpotent {
        return Ok(Special::NotSpecial { coefficient_dim });
    }
    let p = match classify_nilpotent_2dim_m3(&ns, derive_seed(seed, 3))? {
        M3Class::SpecialForm { p, .. } => p,
        M3Class::Triangularizable(_) => return Ok(Special::NotSpecial { coefficient_dim }),
    };
    let rep = op.similarity_transform(&p)?;
    let g = rep.gram()?;
    let a = g.block(1, 0);
    let b = g.block(0, 1);
    let form = match (rank_one_factor(a), rank_one_factor(b)) {
        (Ok(ra), Ok(rb)) => {
            if ra.functional == rb.functional {
                Some(Form::SpecialII { zeta0: ra.column, zeta1: rb.column, f: ra.functional })
            } else {
                proportional(&rb.column, &ra.column).map(|lambda| Form::SpecialIII {
                    zeta0: ra.column.clone(),
                    f: ra.functional.clone(),
                    g: rb.functional.iter().map(|x| x * &lambda).collect(),
                })
            }
        }
        _ => None,
    };
    Ok(match form {
        Some(f) => Special::Form(f, rep),
        None => Special::NotRankOne,
    })
}

/// `λ` with `x = λ·y`, if any (`y ≠ 0`).
fn proportional(x: &[Scalar], y: &[Scalar]) -> Option<Scalar> {
    let k = y.iter().position(|c| !c.is_zero())?;
    let lambda = x[k].checked_div(&y[k])?;
    x.iter().zip(y).all(|(a, b)| *a == &lambda * b).then_some(lambda)
}

fn classify_reduced3(op: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let mut ev = base_evidence(op, seed, budget)?;
    if let Some(w) = trace_witness(op)? {
        ev.branch = "trace-condition".into();
        return Ok(ClassificationVerdict::not_lqn(w, ev));
    }
    let g = op.gram();
    if let Ok(bt) = block_strict_triangularize(&g) {
        ev.branch = "block-flag".into();
        let rep = op.similarity_transform(&bt.p)?;
        return Ok(ClassificationVerdict::lqn(Form::PatternI, rep, ev));
    }
    match special_form(op, seed)? {
        Special::Form(form, rep) => {
            ev.branch = "special-family".into();
            ev.coefficient_space_dim = Some(2);
            Ok(ClassificationVerdict::lqn(form, rep, ev))
        }
        Special::NotRankOne => {
            ev.branch = "special-family-not-rank-one".into();
            ev.coefficient_space_dim = Some(2);
            refute_by_search(op, budget, seed, ev)
        }
        Special::NotSpecial { coefficient_dim } => {
            ev.branch = "coefficient-space-not-special".into();
            ev.coefficient_space_dim = Some(coefficient_dim);
            refute_by_search(op, budget, seed, ev)
        }
    }
}

/// Pattern-(i) representation from a block flag of the Gram matrix.
pub fn construct_triangular_rep(phi: &ElementaryOperator) -> Option<Representation> {
    let op = phi.minimal_length().operator;
    let n = op.n_pairs();
    let bt = block_strict_triangularize(&op.gram()).ok()?;
    debug_assert!(op.v_space().dim() <= n * n.saturating_sub(1) / 2);
    op.similarity_transform(&bt.p).ok()
}

const DIMV1_ZETA_ATTEMPTS: usize = 64;
const DIMV1_PROBES: usize = 8;

/// Structure of an operator with `dim V(φ) = 1`.
pub fn structure_dim_v1(phi: &ElementaryOperator, budget: &Budget, seed: u64) -> Result<ClassificationVerdict> {
    let op = phi.minimal_length().operator;
    let v = op.v_space();
    if v.dim() != 1 {
        return Err(Error::Contract(format!("dim V(φ) = {}, expected 1", v.dim())));
    }
    let d = op.dim();
    let n = op.n_pairs();
    let w = v.basis()[0].clone();
    let mut ev = base_evidence(&op, seed, budget)?;
    ev.branch = "dim-v-one".into();

    let l = local_dimension(&op.left_space(), derive_seed(seed, 1), budget.trials)?;
    if !l.exact {
        ev.notes.push("lDim L(φ) could not be computed exactly".into());
        return Ok(ClassificationVerdict::unknown(ev));
    }
    let r = l.value;
    let good = |z: &Vector| -> Result<bool> {
        let az: Vec<Vector> = op.pairs().iter().map(|p| p.a.mul_vec(z)).collect::<Result<_>>()?;
        Ok(vectors_rank(&az) == r && !crate::matrix::is_zero_vector(&w.mul_vec(z)?))
    };
    let mut zeta = None;
    if good(&l.witness)? {
        zeta = Some(l.witness.clone());
    } else {
        let mut s = Sampler::new(derive_seed(seed, 0xd1), budget.height)?;
        for _ in 0..DIMV1_ZETA_ATTEMPTS {
            let z = s.vector(d);
            if good(&z)? {
                zeta = Some(z);
                break;
            }
        }
    }
    let Some(zeta) = zeta else {
        ev.notes.push("no vector with full local rank and Wζ ≠ 0 found".into());
        return Ok(ClassificationVerdict::unknown(ev));
    };

    // P₁: r independent aᵢζ first, then a basis of {c : Σ cₖ aₖζ = 0}.
    let az: Vec<Vector> = op.pairs().iter().map(|p| p.a.mul_vec(&zeta)).collect::<Result<_>>()?;
    let az_mat = Matrix::from_columns(&az)?;
    let (_, pivots) = az_mat.rref();
    let mut cols: Vec<Vector> = pivots.iter().map(|&i| crate::matrix::standard_basis_vector(n, i)).collect();
    cols.extend(az_mat.kernel_basis());
    let p1 = Matrix::from_columns(&cols)?;
    let c = scalar_coefficients(&op.gram().similarity(&p1)?, &w)?;
    for i in 0..n {
        for j in r..n {
            if !c.get(i, j).is_zero() {
                return Err(Error::Inconsistency("R(φ) does not vanish on the trailing coefficients".into()));
            }
        }
    }
    let t_data: Vec<Scalar> = (0..r * r).map(|idx| c.get(idx / r, idx % r).clone()).collect();
    let t = Matrix::new(r, r, t_data)?;
    let q = match strict_flag(r, std::slice::from_ref(&t)) {
        Ok(flag) => flag.matrix()?,
        Err(_) => {
            // x = ζ⊗h with h(Wζ) = 1 acts on span{uⱼζ} by T.
            ev.branch = "dim-v-one-not-nilpotent".into();
            let wz = w.mul_vec(&zeta)?;
            let k = wz.iter().position(|x| !x.is_zero()).expect("Wζ ≠ 0");
            let mut h = vec![Scalar::zero(); d];
            h[k] = wz[k].inv().expect("nonzero");
            let witness = canonical_witness(&op, &Matrix::outer(&zeta, &h))?;
            return Ok(ClassificationVerdict::not_lqn(witness, ev));
        }
    };
    let mut p2 = Matrix::identity(n);
    for i in 0..r {
        for j in 0..r {
            p2.set(i, j, q.get(i, j).clone());
        }
    }
    let rep = op.similarity_transform(&(&p1 * &p2))?;

    if !compose_is_zero(&op.adjoint_flip(), &op, None)? {
        return Err(Error::Inconsistency("φ*φ ≠ 0 for a dim V = 1 block form".into()));
    }
    let mut s = Sampler::new(derive_seed(seed, 0xd2), budget.height)?;
    for _ in 0..DIMV1_PROBES {
        let x = s.matrix(d, d);
        if !op.apply(&x)?.pow((r + 2) as u32)?.is_zero() {
            return Err(Error::Inconsistency(format!("φ(x)^{} ≠ 0 for a dim V = 1 block form", r + 2)));
        }
    }
    Ok(ClassificationVerdict::lqn(Form::DimV1Block { r }, rep, ev))
}

/// `(cᵢⱼ)` with `Gᵢⱼ = cᵢⱼ·W`.
fn scalar_coefficients(g: &crate::GramMatrix, w: &Matrix) -> Result<Matrix> {
    let n = g.n();
    let pos = w.entries().iter().position(|x| !x.is_zero()).ok_or(Error::Precondition("W is zero".into()))?;
    let (pi, pj) = (pos / w.cols(), pos % w.cols());
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let block = g.block(i, j);
            let cij = block.get(pi, pj).checked_div(w.get(pi, pj)).expect("nonzero pivot");
            if *block != w.scale(&cij) {
                return Err(Error::Inconsistency("Gram block is not a multiple of W".into()));
            }
            c.set(i, j, cij);
        }
    }
    Ok(c)
}

/// Structural proof of local nilpotency with its exponent, if one applies.
/// `op` must be length-reduced.
pub fn structural_certificate(op: &ElementaryOperator, seed: u64) -> Result<Option<(StructureKind, usize)>> {
    let n = op.n_pairs();
    if n == 0 {
        return Ok(Some((StructureKind::PatternI, 1)));
    }
    let mut best: Option<(StructureKind, usize)> = None;
    let mut offer = |kind, exp| {
        if best.is_none_or(|(_, e)| exp < e) {
            best = Some((kind, exp));
        }
    };
    if block_strict_triangularize(&op.gram()).is_ok() {
        offer(StructureKind::PatternI, n + 1);
    }
    if op.v_space().dim() == 1 {
        let v = structure_dim_v1(op, &Budget::default(), seed)?;
        if let Some(form) = v.form.filter(|_| v.status == Status::Lqn) {
            offer(form.kind(), form.exponent(n));
        }
    }
    if n == 3 {
        if let Special::Form(form, _) = special_form(op, seed)? {
            offer(form.kind(), form.exponent(n));
        }
    }
    Ok(best)
}

/// `rank(φ(x)²)`.
pub fn dim_phi_x_squared_range(phi: &ElementaryOperator, x: &Matrix) -> Result<usize> {
    Ok(phi.apply(x)?.pow(2)?.rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(d, i, j)
    }

    pub(crate) fn form_ii_specimen() -> ElementaryOperator {
        let u = [e(3, 0, 0), e(3, 1, 0), e(3, 2, 0)];
        let v = [e(3, 1, 1), &e(3, 0, 0) + &e(3, 1, 2), -&e(3, 0, 1)];
        ElementaryOperator::new(3, u.into_iter().zip(v).collect()).unwrap()
    }

    pub(crate) fn form_iii_specimen() -> ElementaryOperator {
        let u = [e(4, 1, 0), &e(4, 2, 0) + &e(4, 3, 1), e(4, 1, 1)];
        let v = [e(4, 0, 3), e(4, 0, 1), -&e(4, 0, 2)];
        ElementaryOperator::new(4, u.into_iter().zip(v).collect()).unwrap()
    }

    #[test]
    fn trace_condition_examples() {
        let id = ElementaryOperator::single(Matrix::identity(2), Matrix::identity(2)).unwrap();
        assert!(!necessary_trace_condition(&id));
        assert!(necessary_trace_condition(&form_iii_specimen()));
        assert!(necessary_trace_condition(&form_ii_specimen()));
    }

    #[test]
    fn length2_examples() {
        let b = Budget::default();
        let phi = ElementaryOperator::single(e(2, 0, 1), e(2, 0, 1)).unwrap();
        let v = classify_length2(&phi, &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);
        assert_eq!(v.form, Some(Form::PatternI));

        let phi = ElementaryOperator::new(2, vec![(e(2, 0, 0), e(2, 1, 1)), (e(2, 1, 1), e(2, 0, 0))]).unwrap();
        let v = classify_length2(&phi, &b, 1).unwrap();
        assert_eq!(v.status, Status::NotLqn);
        let x = v.witness.unwrap();
        assert!(!crate::char_poly(&phi.apply(&x).unwrap()).unwrap().is_pure_power());

        let v = classify_length2(&ElementaryOperator::zero(3), &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);

        // a = E11, b = E22, c = E12, d = E23: ba = dc = bc = 0.
        let phi = ElementaryOperator::new(3, vec![(e(3, 0, 0), e(3, 1, 1)), (e(3, 0, 1), e(3, 1, 2))]).unwrap();
        let v = classify_length2(&phi, &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);
        assert_eq!(v.form, Some(Form::Length2Zeros));
        let rep = v.representation.unwrap();
        assert!(rep.reconstructs(&phi).unwrap());
        assert!((&rep.v[0] * &rep.u[0]).is_zero());
        assert!((&rep.v[1] * &rep.u[1]).is_zero());
        assert!((&rep.v[0] * &rep.u[1]).is_zero());

        let three = form_ii_specimen();
        assert!(matches!(classify_length2(&three, &b, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn specimens_classify_to_special_forms() {
        let b = Budget::default();
        let v = classify_length3(&form_ii_specimen(), &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);
        assert!(matches!(v.form, Some(Form::SpecialII { .. })), "{:?}", v.form);
        assert_eq!(v.evidence.ldim_l, Some(3));
        assert_eq!(v.evidence.dim_v, Some(2));

        let v = classify_length3(&form_iii_specimen(), &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);
        match v.form {
            Some(Form::SpecialIII { zeta0, f, g }) => {
                assert_eq!(vectors_rank(&[f, g]), 2);
                assert!(!crate::matrix::is_zero_vector(&zeta0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn triangular_rep_examples() {
        assert!(construct_triangular_rep(&form_ii_specimen()).is_none());
        let phi = ElementaryOperator::single(e(2, 0, 1), e(2, 0, 1)).unwrap();
        let rep = construct_triangular_rep(&phi).unwrap();
        assert!((&rep.v[0] * &rep.u[0]).is_zero());
    }

    #[test]
    fn dim_v1_examples() {
        let b = Budget::default();
        // u = (E11, E22), v = (E12, E13): the only nonzero product is v₁u₂ = E12.
        let phi = ElementaryOperator::new(3, vec![(e(3, 0, 0), e(3, 0, 1)), (e(3, 1, 1), e(3, 0, 2))]).unwrap();
        assert_eq!(phi.v_space().dim(), 1);
        let v = structure_dim_v1(&phi, &b, 1).unwrap();
        assert_eq!(v.status, Status::Lqn);
        let Some(Form::DimV1Block { r }) = v.form else { panic!("{:?}", v.form) };
        assert_eq!(r, 2);
        assert!(v.representation.unwrap().reconstructs(&phi).unwrap());

        assert!(matches!(structure_dim_v1(&ElementaryOperator::zero(2), &b, 1), Err(Error::Contract(_))));

        // Single pair with rank-one ba ≠ 0: not locally nilpotent.
        let phi = ElementaryOperator::single(e(2, 0, 0), e(2, 0, 0)).unwrap();
        let v = structure_dim_v1(&phi, &b, 1).unwrap();
        assert_eq!(v.status, Status::NotLqn);
        assert!(!v.witness_char_poly.unwrap().is_pure_power());
    }

    #[test]
    fn phi_squared_range() {
        let phi = form_ii_specimen();
        assert_eq!(dim_phi_x_squared_range(&phi, &Matrix::zeros(3, 3)).unwrap(), 0);
        let mut s = Sampler::new(3, 10).unwrap();
        for _ in 0..10 {
            assert!(dim_phi_x_squared_range(&phi, &s.matrix(3, 3)).unwrap() <= 3);
        }
    }

    #[test]
    fn verdict_round_trip() {
        let v = classify_length3(&form_ii_specimen(), &Budget::default(), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains(r#""form":"Special-II""#));
        assert!(json.contains(r#""parameters":{"zeta0""#));
        let back: ClassificationVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
