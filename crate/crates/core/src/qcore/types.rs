//! Validated quantum objects. Constructors reject inputs that violate their
//! invariants; nothing is silently renormalized.

use super::matrix::{
    dagger, hermiticity_deviation, identity, max_abs_diff, outer, CMat, CVec, C64,
};
use super::spectral::{eig_herm_unchecked, lambda_min};
use crate::error::{Error, Result};

pub const STATE_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const KET_NORM_TOL: f64 = 1e-12;

fn check_dims(dim: usize, subsystem_dims: &[usize]) -> Result<()> {
    if subsystem_dims.is_empty() || subsystem_dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid("subsystem dimensions must be positive"));
    }
    let product: usize = subsystem_dims.iter().product();
    if product != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: product,
        });
    }
    Ok(())
}

/// Normalized pure state vector with subsystem bookkeeping.
#[derive(Debug, Clone)]
pub struct Ket {
    amplitudes: CVec,
    dims: Vec<usize>,
}

impl Ket {
    pub fn new(amplitudes: CVec, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > KET_NORM_TOL {
            return Err(Error::InvalidState(format!("ket norm² = {norm2}")));
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn from_real(amps: &[f64], dims: Vec<usize>) -> Result<Self> {
        Self::new(CVec::from_iterator(amps.len(), amps.iter().map(|&a| C64::new(a, 0.0))), dims)
    }

    /// Computational basis ket `index` in a single subsystem of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for dim {dim}")));
        }
        Self::new(super::matrix::basis(dim, index), vec![dim])
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: outer(&self.amplitudes),
            dims: self.dims.clone(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMat,
    dims: Vec<usize>,
}

impl DensityOperator {
    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerance(matrix, dims, STATE_TOL)
    }

    pub fn with_tolerance(matrix: CMat, dims: Vec<usize>, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        check_dims(matrix.nrows(), &dims)?;
        let herm = hermiticity_deviation(&matrix);
        if herm > tol {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace = {tr}")));
        }
        let min = lambda_min(&matrix);
        if min < -tol {
            return Err(Error::InvalidState(format!("min eigenvalue = {min:.3e}")));
        }
        Ok(Self { matrix, dims })
    }

    /// Single-subsystem state.
    pub fn single(matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim) * C64::new(1.0 / dim as f64, 0.0),
            dims: vec![dim],
        }
    }

    /// Internal constructor for results that are valid by construction.
    pub(crate) fn from_trusted(matrix: CMat, dims: Vec<usize>) -> Self {
        Self { matrix, dims }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn purity(&self) -> f64 {
        super::matrix::trace_prod_re(&self.matrix, &self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_herm_unchecked(&self.matrix).values
    }

    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(self.dim(), &dims)?;
        Ok(Self {
            matrix: self.matrix.clone(),
            dims,
        })
    }
}

#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    matrix: CMat,
}

impl UnitaryOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("unitary must be square"));
        }
        let dev = max_abs_diff(&(matrix.adjoint() * &matrix), &identity(matrix.nrows()));
        if dev > UNITARY_TOL {
            return Err(Error::InvalidUnitary { deviation: dev });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: identity(dim) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `self · other` (other acts first).
    pub fn compose(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn as_channel(&self) -> QuantumChannel {
        QuantumChannel {
            in_dim: self.dim(),
            out_dim: self.dim(),
            kraus: vec![self.matrix.clone()],
        }
    }
}

/// CPTP map in Kraus form, `ρ ↦ Σ KᵢρKᵢ†`.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMat>,
}

impl QuantumChannel {
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let (out_dim, in_dim) = first.shape();
        if kraus.iter().any(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::InvalidChannel("Kraus operators differ in shape".into()));
        }
        let mut sum = CMat::zeros(in_dim, in_dim);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &identity(in_dim));
        if dev > STATE_TOL {
            return Err(Error::InvalidChannel(format!(
                "Σ K†K deviates from identity by {dev:.3e}"
            )));
        }
        let ch = Self {
            in_dim,
            out_dim,
            kraus,
        };
        let min = lambda_min(&ch.choi());
        if min < -STATE_TOL {
            return Err(Error::InvalidChannel(format!("Choi min eigenvalue {min:.3e}")));
        }
        Ok(ch)
    }

    /// Stinespring form: isometry `V: C^in → C^out ⊗ C^anc` followed by
    /// discarding the ancilla (out index major).
    pub fn from_isometry(v: &CMat, out_dim: usize, anc_dim: usize) -> Result<Self> {
        if v.nrows() != out_dim * anc_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim * anc_dim,
                actual: v.nrows(),
            });
        }
        let in_dim = v.ncols();
        let kraus = (0..anc_dim)
            .map(|a| CMat::from_fn(out_dim, in_dim, |o, i| v[(o * anc_dim + a, i)]))
            .collect();
        Self::from_kraus(kraus)
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOperator::identity(dim).as_channel()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// Applies the map to an operator on the input space.
    pub fn apply_matrix(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * rho * dagger(k);
        }
        out
    }

    /// Adjoint (Heisenberg-picture) map `X ↦ Σ Kᵢ†XKᵢ`.
    pub fn apply_adjoint(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += dagger(k) * x * k;
        }
        out
    }

    /// Choi matrix `Σᵢⱼ Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, output factor first.
    pub fn choi(&self) -> CMat {
        let (din, dout) = (self.in_dim, self.out_dim);
        let mut j = CMat::zeros(dout * din, dout * din);
        for k in &self.kraus {
            // vec-like column (K ⊗ I)|Φ⟩ with |Φ⟩ = Σ|i⟩|i⟩
            let col = CVec::from_fn(dout * din, |r, _| {
                let (o, i) = (r / din, r % din);
                k[(o, i)]
            });
            j += &col * col.adjoint();
        }
        j
    }
}

/// Positive operator-valued measure.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<CMat>,
}

impl Povm {
    pub fn new(effects: Vec<CMat>) -> Result<Self> {
        Self::with_tolerance(effects, STATE_TOL)
    }

    pub fn with_tolerance(effects: Vec<CMat>, tol: f64) -> Result<Self> {
        let dim = effects
            .first()
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?
            .nrows();
        let mut sum = CMat::zeros(dim, dim);
        for (b, e) in effects.iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(Error::InvalidPovm(format!("effect {b} has wrong shape")));
            }
            let herm = hermiticity_deviation(e);
            if herm > tol {
                return Err(Error::InvalidPovm(format!(
                    "effect {b} not Hermitian ({herm:.3e})"
                )));
            }
            let min = lambda_min(e);
            if min < -tol {
                return Err(Error::InvalidPovm(format!(
                    "effect {b} has eigenvalue {min:.3e}"
                )));
            }
            sum += e;
        }
        let dev = max_abs_diff(&sum, &identity(dim));
        if dev > tol {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self { effects })
    }

    /// Binary POVM {P, I − P}.
    pub fn binary(p: &CMat) -> Result<Self> {
        let id = identity(p.nrows());
        Self::new(vec![p.clone(), id - p])
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn effect(&self, b: usize) -> &CMat {
        &self.effects[b]
    }
}

/// Hermitian observable.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    matrix: CMat,
}

impl HermitianObservable {
    pub const TOL: f64 = 1e-12;

    pub fn new(matrix: CMat) -> Result<Self> {
        let dev = hermiticity_deviation(&matrix);
        if dev > Self::TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self { matrix })
    }

    /// Accepts matrices that are Hermitian to `tol` and symmetrizes them.
    pub fn symmetrized(matrix: &CMat, tol: f64) -> Result<Self> {
        let dev = hermiticity_deviation(matrix);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self {
            matrix: super::matrix::hermitize(matrix),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{c, diag, from_real_rows};

    #[test]
    fn density_rejects_bad_trace() {
        assert!(DensityOperator::single(diag(&[0.5, 0.4])).is_err());
    }

    #[test]
    fn density_rejects_negative_eigenvalue() {
        assert!(DensityOperator::single(diag(&[1.2, -0.2])).is_err());
    }

    #[test]
    fn ket_rejects_unnormalized() {
        assert!(Ket::from_real(&[1.0, 1.0], vec![2]).is_err());
    }

    #[test]
    fn unitary_check() {
        let h = from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]) * c(std::f64::consts::FRAC_1_SQRT_2);
        assert!(UnitaryOperator::new(h).is_ok());
        assert!(UnitaryOperator::new(diag(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn non_trace_preserving_kraus_rejected() {
        assert!(QuantumChannel::from_kraus(vec![diag(&[1.0, 0.5])]).is_err());
    }

    #[test]
    fn povm_must_sum_to_identity() {
        assert!(Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 0.9])]).is_err());
        assert!(Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).is_ok());
    }

    #[test]
    fn choi_of_identity_is_unnormalized_bell_projector() {
        let j = QuantumChannel::identity(2).choi();
        assert!((j[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((j[(0, 3)].re - 1.0).abs() < 1e-15);
        assert!((j.trace().re - 2.0).abs() < 1e-15);
    }
}
