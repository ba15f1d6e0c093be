//! Sparse Pauli-word operators and the dense linear-algebra kernel.
//!
//! Qubit `0` is the leftmost tensor factor, so it maps to the most
//! significant bit of a computational-basis index.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register handled by the dense carrier.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Coefficients smaller than this are dropped during normalization.
pub const COEFF_EPS: f64 = 1e-14;

/// Tolerance on `‖u†u − I‖_F` accepted by [`DenseOperator::conjugate`].
pub const UNITARY_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::Invalid(format!("unknown Pauli letter `{other}`"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; absent qubits carry the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    n_qubits: usize,
    letters: BTreeMap<usize, Pauli>,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            letters: BTreeMap::new(),
        }
    }

    pub fn new<I>(n_qubits: usize, letters: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        if n_qubits == 0 {
            return Err(Error::Invalid("a word needs at least one qubit".into()));
        }
        let mut map = BTreeMap::new();
        for (q, p) in letters {
            if q >= n_qubits {
                return Err(Error::Invalid(format!(
                    "qubit index {q} out of range for {n_qubits} qubits"
                )));
            }
            if map.insert(q, p).is_some() {
                return Err(Error::Invalid(format!("qubit {q} listed twice")));
            }
        }
        Ok(Self {
            n_qubits,
            letters: map,
        })
    }

    /// Word with a single letter. Panics if `qubit >= n_qubits`.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Self {
        Self::new(n_qubits, [(qubit, p)]).expect("qubit index in range")
    }

    /// Same letter on every listed qubit. Panics on out-of-range indices.
    pub fn uniform(n_qubits: usize, qubits: &[usize], p: Pauli) -> Self {
        Self::new(n_qubits, qubits.iter().map(|&q| (q, p))).expect("qubit indices in range")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn letters(&self) -> &BTreeMap<usize, Pauli> {
        &self.letters
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        self.letters.get(&qubit).copied()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    /// Word on a larger register; existing letters keep their indices.
    pub fn embed(&self, n_total: usize) -> Result<Self> {
        if n_total < self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed {} qubits into {n_total}",
                self.n_qubits
            )));
        }
        Ok(Self {
            n_qubits: n_total,
            letters: self.letters.clone(),
        })
    }

    /// Bit masks `(x, z)` of the word: `P|b⟩ = i^{#Y} (−1)^{|b ∧ z|} |b ⊕ x⟩`.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for (&q, &p) in &self.letters {
            let bit = 1usize << (self.n_qubits - 1 - q);
            match p {
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    fn from_masks(n_qubits: usize, x: usize, z: usize) -> Self {
        let mut letters = BTreeMap::new();
        for q in 0..n_qubits {
            let bit = 1usize << (n_qubits - 1 - q);
            let p = match (x & bit != 0, z & bit != 0) {
                (false, false) => continue,
                (true, false) => Pauli::X,
                (false, true) => Pauli::Z,
                (true, true) => Pauli::Y,
            };
            letters.insert(q, p);
        }
        Self { n_qubits, letters }
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        for (i, (q, p)) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.as_char(), q)?;
        }
        Ok(())
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => C1,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Real linear combination of Pauli words, kept normalized: sorted, no
/// duplicate words, no coefficients below [`COEFF_EPS`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliWord)>,
}

impl OperatorSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn new<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliWord)>,
    {
        if n_qubits == 0 {
            return Err(Error::Invalid("an operator needs at least one qubit".into()));
        }
        let mut acc: BTreeMap<PauliWord, f64> = BTreeMap::new();
        for (c, w) in terms {
            if w.n_qubits != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "word on {} qubits in a {n_qubits}-qubit sum",
                    w.n_qubits
                )));
            }
            if !c.is_finite() {
                return Err(Error::Invalid(format!("non-finite coefficient {c}")));
            }
            *acc.entry(w).or_insert(0.0) += c;
        }
        Ok(Self::from_map(n_qubits, acc))
    }

    fn from_map(n_qubits: usize, acc: BTreeMap<PauliWord, f64>) -> Self {
        let terms = acc
            .into_iter()
            .filter(|(_, c)| c.abs() >= COEFF_EPS)
            .map(|(w, c)| (c, w))
            .collect();
        Self { n_qubits, terms }
    }

    pub fn term(c: f64, word: PauliWord) -> Self {
        let n = word.n_qubits;
        Self::new(n, [(c, word)]).expect("consistent width")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliWord)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &PauliWord) -> f64 {
        self.terms
            .binary_search_by(|(_, w)| w.cmp(word))
            .map(|i| self.terms[i].0)
            .unwrap_or(0.0)
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coefficient_diff(&self, other: &OperatorSum) -> f64 {
        let diff = self.clone() - other.clone();
        diff.terms.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.n_qubits, self.terms.iter().map(|(c, w)| (c * s, w.clone())))
            .expect("scaling keeps width")
    }

    /// Same operator on a larger register, acting as identity on the new qubits.
    pub fn embed(&self, n_total: usize) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| Ok((*c, w.embed(n_total)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_total, terms)
    }

    /// Sum of `|c|`, an upper bound on the spectral norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        self.to_dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DenseOperator> {
        check_limit(self.n_qubits, limit)?;
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, w) in &self.terms {
            let (x, z, ny) = w.masks();
            let base = i_pow(ny) * *c;
            for b in 0..dim {
                let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(b ^ x, b)] += base * sign;
            }
        }
        Ok(DenseOperator {
            matrix: m,
            n_qubits: self.n_qubits,
        })
    }
}

impl Add for OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: OperatorSum) -> OperatorSum {
        assert_eq!(self.n_qubits, rhs.n_qubits, "operator widths differ");
        let n = self.n_qubits;
        OperatorSum::new(n, self.terms.into_iter().chain(rhs.terms)).expect("same width")
    }
}

impl Sub for OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: OperatorSum) -> OperatorSum {
        self + (-rhs)
    }
}

impl Neg for OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        self.scale(-1.0)
    }
}

impl Mul<f64> for OperatorSum {
    type Output = OperatorSum;
    fn mul(self, s: f64) -> OperatorSum {
        self.scale(s)
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{w}")?;
        }
        Ok(())
    }
}

fn check_limit(n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        Err(Error::DimensionLimit { n_qubits, limit })
    } else {
        Ok(())
    }
}

/// Dense `2^n × 2^n` complex matrix on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
    n_qubits: usize,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim == 0 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} is not a qubit operator",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_limit(n_qubits, DEFAULT_DENSE_LIMIT)?;
        Ok(Self { matrix, n_qubits })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            matrix: DMatrix::identity(d, d),
            n_qubits,
        }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            matrix: DMatrix::zeros(d, d),
            n_qubits,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            n_qubits: self.n_qubits,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * Complex64::new(s, 0.0),
            n_qubits: self.n_qubits,
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            matrix: &self.matrix * s,
            n_qubits: self.n_qubits,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.frobenius_norm() == 0.0 {
            return 0.0;
        }
        if self.hermitian_deviation() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0) {
            let eig = self.matrix.clone().symmetric_eigen();
            return eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .fold(0.0f64, |m, v| m.max(*v))
    }

    /// `‖a − a†‖_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖u†u − I‖_F`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let dev = self.unitarity_deviation();
        if dev > tol {
            Err(Error::NotUnitary(dev))
        } else {
            Ok(())
        }
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL * self.frobenius_norm().max(1.0) {
            Err(Error::NotHermitian(dev))
        } else {
            Ok(())
        }
    }

    fn same_dim(&self, other: &DenseOperator) -> Result<()> {
        if self.dim() != other.dim() {
            Err(Error::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )))
        } else {
            Ok(())
        }
    }

    /// `u† a u`, rejecting `u` when `‖u†u − I‖_F > 1e−10`.
    pub fn conjugate(&self, u: &DenseOperator) -> Result<DenseOperator> {
        self.same_dim(u)?;
        u.ensure_unitary(UNITARY_TOL)?;
        Ok(self.conjugate_unchecked(u))
    }

    pub(crate) fn conjugate_unchecked(&self, u: &DenseOperator) -> DenseOperator {
        Self {
            matrix: u.matrix.adjoint() * &self.matrix * &u.matrix,
            n_qubits: self.n_qubits,
        }
    }

    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        Self {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            n_qubits: self.n_qubits,
        }
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            n_qubits: self.n_qubits + other.n_qubits,
        }
    }

    /// `self ⊗ I` on `n_total` qubits; a no-op when the widths agree.
    pub fn lift(&self, n_total: usize) -> Result<DenseOperator> {
        match n_total.cmp(&self.n_qubits) {
            std::cmp::Ordering::Equal => Ok(self.clone()),
            std::cmp::Ordering::Less => Err(Error::DimensionMismatch(format!(
                "cannot lift {} qubits into {n_total}",
                self.n_qubits
            ))),
            std::cmp::Ordering::Greater => {
                check_limit(n_total, DEFAULT_DENSE_LIMIT)?;
                Ok(self.kron(&DenseOperator::identity(n_total - self.n_qubits)))
            }
        }
    }

    /// `exp(−i·a·t)` for Hermitian `a`.
    pub fn matrix_exp(&self, t: f64) -> Result<DenseOperator> {
        Ok(Spectral::new(self)?.exp(t))
    }

    /// Coefficients `tr(P_w a)/2^n` over all `4^n` Pauli words.
    pub fn pauli_coefficients(&self) -> Result<OperatorSum> {
        self.ensure_hermitian()?;
        let n = self.n_qubits;
        let dim = self.dim();
        let mut terms = Vec::new();
        for x in 0..dim {
            for z in 0..dim {
                let ny = (x & z).count_ones();
                // tr(P a) = Σ_b P[b^x, b] a[b, b^x]
                let mut acc = C0;
                for b in 0..dim {
                    let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += self.matrix[(b, b ^ x)] * sign;
                }
                let c = (i_pow(ny) * acc).re / dim as f64;
                if c.abs() >= COEFF_EPS {
                    terms.push((c, PauliWord::from_masks(n, x, z)));
                }
            }
        }
        OperatorSum::new(n, terms)
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator {
            matrix: &self.matrix + &rhs.matrix,
            n_qubits: self.n_qubits,
        }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator {
            matrix: &self.matrix - &rhs.matrix,
            n_qubits: self.n_qubits,
        }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        DenseOperator {
            matrix: &self.matrix * &rhs.matrix,
            n_qubits: self.n_qubits,
        }
    }
}

/// Eigendecomposition of a Hermitian operator, reused for repeated
/// exponentials `exp(−i·a·t)`.
#[derive(Debug, Clone)]
pub struct Spectral {
    vectors: DMatrix<Complex64>,
    values: Vec<f64>,
    n_qubits: usize,
}

impl Spectral {
    pub fn new(a: &DenseOperator) -> Result<Self> {
        a.ensure_hermitian()?;
        // symmetrize so the solver sees an exactly Hermitian input
        let h = (&a.matrix + a.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        Ok(Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
            n_qubits: a.n_qubits,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn exp(&self, t: f64) -> DenseOperator {
        let mut scaled = self.vectors.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * t);
            let col = self.vectors.column(j) * phase;
            scaled.set_column(j, &col);
        }
        DenseOperator {
            matrix: scaled * self.vectors.adjoint(),
            n_qubits: self.n_qubits,
        }
    }
}

/// Operator file format: `{"n_qubits": n, "terms": [{"coeff": c, "word": {"0": "X"}}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_version: Option<u32>,
    pub n_qubits: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: f64,
    pub word: BTreeMap<String, String>,
}

impl OperatorSum {
    pub fn to_record(&self) -> OperatorRecord {
        OperatorRecord {
            format_version: Some(crate::FORMAT_VERSION),
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|(c, w)| TermRecord {
                    coeff: *c,
                    word: w
                        .letters
                        .iter()
                        .map(|(q, p)| (q.to_string(), p.as_char().to_string()))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &OperatorRecord) -> Result<Self> {
        if let Some(v) = rec.format_version {
            crate::check_format_version(v)?;
        }
        let terms = rec
            .terms
            .iter()
            .map(|t| {
                let letters = t
                    .word
                    .iter()
                    .map(|(q, p)| {
                        let q: usize = q
                            .parse()
                            .map_err(|_| Error::Invalid(format!("bad qubit index `{q}`")))?;
                        Ok((q, Pauli::parse(p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((t.coeff, PauliWord::new(rec.n_qubits, letters)?))
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorSum::new(rec.n_qubits, terms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("operator records serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: OperatorRecord = serde_json::from_str(s)?;
        Self::from_record(&rec)
    }
}
