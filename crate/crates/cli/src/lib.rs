//! File formats and command implementations behind the `lqn` binary.
//!
//! Every command is a plain function returning a value plus an [`Exit`]
//! code, so the binary only parses flags and writes output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use lqn_core::classifier::{self, ClassificationVerdict, Status};
use lqn_core::generate::{self, GeneratorForm};
use lqn_core::nilpotency::{self, Budget, Mode, XNilpotency};
use lqn_core::space::{local_dimension, LocalDimResult};
use lqn_core::{ElementaryOperator, Error, Matrix, Polynomial, Vector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1";

/// Process exit codes. No other codes are emitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Refuted = 1,
    BadInput = 2,
    Unknown = 3,
    Unsupported = 4,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self { exit, message: message.into() }
    }

    fn bad_input(message: impl Into<String>) -> Self {
        Self::new(Exit::BadInput, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Unsupported(_) => Exit::Unsupported,
            Error::Contract(_) | Error::Inconsistency(_) => Exit::Unknown,
            _ => Exit::BadInput,
        };
        Self::new(exit, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: String,
    pub operator: ElementaryOperator,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl InstanceFile {
    pub fn new(operator: ElementaryOperator, metadata: BTreeMap<String, serde_json::Value>) -> Self {
        Self { schema_version: SCHEMA_VERSION.into(), operator, metadata }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let inst: Self = serde_json::from_str(text).map_err(|e| CliError::bad_input(format!("instance: {e}")))?;
        if inst.schema_version != SCHEMA_VERSION {
            return Err(CliError::bad_input(format!(
                "instance: unsupported schema_version {:?} (expected \"1\")",
                inst.schema_version
            )));
        }
        Ok(inst)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read(path)?)
    }

    /// `sha256:` plus the hex SHA-256 of the compact canonical JSON.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub schema_version: String,
    pub instance_digest: String,
    pub verdict: ClassificationVerdict,
    pub toolchain: String,
}

impl CertificateFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::new(Exit::Refuted, format!("certificate: {e}")))
    }
}

pub fn toolchain() -> String {
    format!("lqn {}", env!("CARGO_PKG_VERSION"))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Debug, Serialize)]
pub struct SpaceSummary {
    pub dim: usize,
    pub local_dim: usize,
    pub local_dim_exact: bool,
    pub witness: Vector,
}

impl SpaceSummary {
    fn new(dim: usize, r: LocalDimResult) -> Self {
        Self { dim, local_dim: r.value, local_dim_exact: r.exact, witness: r.witness }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub dim: usize,
    pub length: usize,
    pub left: SpaceSummary,
    pub right: SpaceSummary,
    pub products: SpaceSummary,
    pub sum_b_a: Matrix,
    pub sum_b_a_zero: bool,
    /// Blocks `bᵢaⱼ` of the minimal-length representation, row-major.
    pub gram: Vec<Vec<Matrix>>,
}

pub fn cmd_analyze(inst: &InstanceFile, seed: u64, trials: usize) -> CliResult<AnalyzeReport> {
    let reduced = inst.operator.minimal_length();
    let phi = &reduced.operator;
    let summary = |space: lqn_core::OperatorSpace, tag: u64| -> CliResult<SpaceSummary> {
        let r = local_dimension(&space, seed.wrapping_add(tag), trials.max(1))?;
        Ok(SpaceSummary::new(space.dim(), r))
    };
    let gram = phi.gram();
    let n = gram.n();
    let sum = phi.sum_bi_ai();
    Ok(AnalyzeReport {
        dim: phi.dim(),
        length: reduced.length,
        left: summary(phi.left_space(), 1)?,
        right: summary(phi.right_space(), 2)?,
        products: summary(phi.v_space(), 3)?,
        sum_b_a_zero: sum.is_zero(),
        sum_b_a: sum,
        gram: (0..n).map(|i| (0..n).map(|j| gram.block(i, j).clone()).collect()).collect(),
    })
}

pub fn render_analyze(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dimension d     {}", r.dim);
    let _ = writeln!(s, "length          {}", r.length);
    for (name, sp) in [("L(phi)", &r.left), ("R(phi)", &r.right), ("V(phi)", &r.products)] {
        let _ = writeln!(
            s,
            "{name:<15} dim {}  lDim {}{}  at {}",
            sp.dim,
            sp.local_dim,
            if sp.local_dim_exact { "" } else { " (lower bound)" },
            vector_str(&sp.witness)
        );
    }
    let _ = writeln!(s, "sum b_i a_i     {}", if r.sum_b_a_zero { "0" } else { "nonzero" });
    if !r.sum_b_a_zero {
        s.push_str(&indent(&r.sum_b_a.to_string()));
    }
    for (i, row) in r.gram.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            let _ = writeln!(s, "gram block v{}u{}", i + 1, j + 1);
            s.push_str(&indent(&m.to_string()));
        }
    }
    s
}

fn vector_str(v: &[lqn_core::Scalar]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

fn indent(block: &str) -> String {
    block.lines().map(|l| format!("    {l}\n")).collect()
}

// --------------------------------------------------------------- classify

pub fn exit_for(status: Status) -> Exit {
    match status {
        Status::Lqn => Exit::Success,
        Status::NotLqn => Exit::Refuted,
        Status::Unknown => Exit::Unknown,
    }
}

pub fn cmd_classify(inst: &InstanceFile, budget: &Budget, seed: u64) -> CliResult<(CertificateFile, Exit)> {
    let verdict = classifier::classify(&inst.operator, budget, seed)?;
    let exit = exit_for(verdict.status);
    let cert = CertificateFile {
        schema_version: SCHEMA_VERSION.into(),
        instance_digest: inst.digest(),
        verdict,
        toolchain: toolchain(),
    };
    Ok((cert, exit))
}

pub fn render_verdict(v: &ClassificationVerdict) -> String {
    let mut s = String::new();
    let status = match v.status {
        Status::Lqn => "LQN",
        Status::NotLqn => "NotLQN",
        Status::Unknown => "Unknown",
    };
    let _ = writeln!(s, "status          {status}");
    if let Some(f) = &v.form {
        let _ = writeln!(s, "form            {}", f.label());
    }
    let _ = writeln!(s, "branch          {}", v.evidence.branch);
    let _ = writeln!(s, "length          {}", v.evidence.length);
    if let Some(e) = v.evidence.exponent {
        let _ = writeln!(s, "exponent        phi(x)^{e} = 0");
    }
    if let Some(rep) = &v.representation {
        for (i, (u, w)) in rep.u.iter().zip(&rep.v).enumerate() {
            let _ = writeln!(s, "u{}", i + 1);
            s.push_str(&indent(&u.to_string()));
            let _ = writeln!(s, "v{}", i + 1);
            s.push_str(&indent(&w.to_string()));
        }
    }
    if let (Some(x), Some(cp)) = (&v.witness, &v.witness_char_poly) {
        let _ = writeln!(s, "witness x");
        s.push_str(&indent(&x.to_string()));
        let _ = writeln!(s, "char poly of phi(x): {cp}");
    }
    for note in &v.evidence.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

// --------------------------------------------------------------- generate

pub fn cmd_generate(form: GeneratorForm, n: usize, dim: usize, seed: u64) -> CliResult<InstanceFile> {
    let phi = generate::generate(form, n, dim, seed)?;
    let mut meta = BTreeMap::new();
    meta.insert("generator".into(), serde_json::Value::from(form.name()));
    meta.insert("n".into(), serde_json::Value::from(n));
    meta.insert("dim".into(), serde_json::Value::from(dim));
    meta.insert("seed".into(), serde_json::Value::from(seed));
    meta.insert("toolchain".into(), serde_json::Value::from(toolchain()));
    Ok(InstanceFile::new(phi, meta))
}

// ----------------------------------------------------------------- verify

/// `Ok` iff the digest matches and the verdict re-verifies.
pub fn cmd_verify(inst: &InstanceFile, cert: &CertificateFile) -> CliResult<()> {
    if cert.schema_version != SCHEMA_VERSION {
        return Err(CliError::new(
            Exit::Refuted,
            format!("certificate: unsupported schema_version {:?}", cert.schema_version),
        ));
    }
    let digest = inst.digest();
    if cert.instance_digest != digest {
        return Err(CliError::new(
            Exit::Refuted,
            format!("digest mismatch: certificate has {}, instance is {digest}", cert.instance_digest),
        ));
    }
    let report = lqn_core::verify_certificate(&inst.operator, &cert.verdict);
    match report.failure {
        None if report.ok => Ok(()),
        failure => Err(CliError::new(
            Exit::Refuted,
            failure.unwrap_or_else(|| "verification failed".into()),
        )),
    }
}

/// Parses both files and verifies; instance problems exit 2, certificate
/// problems exit 1.
pub fn verify_files(instance: &Path, certificate: &Path) -> CliResult<()> {
    let inst = InstanceFile::load(instance)?;
    let text = std::fs::read_to_string(certificate)
        .map_err(|e| CliError::new(Exit::Refuted, format!("{}: {e}", certificate.display())))?;
    cmd_verify(&inst, &CertificateFile::parse(&text)?)
}

// ----------------------------------------------------------------- oracle

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub trials: usize,
    pub seed: u64,
    pub witness_found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub char_poly: Option<Polynomial>,
}

/// Pure random sampling over `x`; no structural shortcut.
pub fn cmd_oracle(inst: &InstanceFile, trials: usize, seed: u64) -> CliResult<(OracleReport, Exit)> {
    let budget = Budget { trials, ..Budget::default() };
    let outcome = nilpotency::all_x_nilpotent_with(&inst.operator, &budget, seed, Mode::SamplingOnly)?;
    let mut report = OracleReport {
        trials,
        seed,
        witness_found: false,
        trial: None,
        witness: None,
        image: None,
        char_poly: None,
    };
    match outcome {
        XNilpotency::Refuted(w) => {
            report.witness_found = true;
            report.trial = w.trial;
            report.witness = Some(w.x);
            report.image = Some(w.image);
            report.char_poly = Some(w.char_poly);
            Ok((report, Exit::Refuted))
        }
        _ => Ok((report, Exit::Success)),
    }
}

pub fn render_oracle(r: &OracleReport) -> String {
    let mut s = String::new();
    match (&r.witness, &r.char_poly) {
        (Some(x), Some(cp)) => {
            let _ = writeln!(s, "witness found at trial {}", r.trial.unwrap_or(0));
            s.push_str(&indent(&x.to_string()));
            let _ = writeln!(s, "char poly of phi(x): {cp}");
        }
        _ => {
            let _ = writeln!(s, "no witness in {} trials (seed {})", r.trials, r.seed);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_instance() -> InstanceFile {
        let phi = ElementaryOperator::single(Matrix::identity(2), Matrix::identity(2)).unwrap();
        InstanceFile::new(phi, BTreeMap::new())
    }

    #[test]
    fn digest_is_stable_and_whitespace_insensitive() {
        let inst = identity_instance();
        let pretty = to_json(&inst);
        let reparsed = InstanceFile::parse(&pretty).unwrap();
        assert_eq!(inst.digest(), reparsed.digest());
        assert!(inst.digest().starts_with("sha256:"));
    }

    #[test]
    fn wrong_schema_and_unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::to_value(identity_instance()).unwrap();
        v["schema_version"] = "2".into();
        assert_eq!(InstanceFile::parse(&v.to_string()).unwrap_err().exit, Exit::BadInput);
        v["schema_version"] = "1".into();
        v["extra"] = 1.into();
        assert_eq!(InstanceFile::parse(&v.to_string()).unwrap_err().exit, Exit::BadInput);
    }

    #[test]
    fn identity_classifies_not_lqn_and_verifies() {
        let inst = identity_instance();
        let (cert, exit) = cmd_classify(&inst, &Budget::default(), 1).unwrap();
        assert_eq!(exit, Exit::Refuted);
        cmd_verify(&inst, &cert).unwrap();
        let mut bad = cert.clone();
        bad.instance_digest.push('0');
        assert!(cmd_verify(&inst, &bad).unwrap_err().message.contains("digest"));
    }
}
