//! Composite-system operations: tensor products, partial traces, channel
//! application and the Born rule.

use super::matrix::{identity, kron, trace_prod_re, CMat, CVec};
use super::types::{DensityOperator, Ket, Povm, QuantumChannel};
use crate::error::{Error, Result};

/// A factor in a tensor product. All factors of one product must be the
/// same kind.
#[derive(Debug, Clone)]
pub enum Factor {
    Ket(Ket),
    Operator { matrix: CMat, dims: Vec<usize> },
}

impl Factor {
    pub fn operator(matrix: CMat) -> Self {
        let d = matrix.nrows();
        Factor::Operator {
            matrix,
            dims: vec![d],
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            Factor::Ket(k) => k.dims(),
            Factor::Operator { dims, .. } => dims,
        }
    }
}

impl From<&DensityOperator> for Factor {
    fn from(rho: &DensityOperator) -> Self {
        Factor::Operator {
            matrix: rho.matrix().clone(),
            dims: rho.dims().to_vec(),
        }
    }
}

/// Kronecker product in left-to-right order with concatenated subsystem dims.
pub fn tensor(factors: &[Factor]) -> Result<Factor> {
    let first = factors
        .first()
        .ok_or_else(|| Error::invalid("tensor needs at least one factor"))?;
    match first {
        Factor::Ket(_) => {
            let mut amps = CVec::from_element(1, super::matrix::ONE);
            let mut dims = Vec::new();
            for f in factors {
                let Factor::Ket(k) = f else {
                    return Err(Error::MixedTensorKinds);
                };
                amps = amps.kronecker(k.amplitudes());
                dims.extend_from_slice(k.dims());
            }
            Ok(Factor::Ket(Ket::new(amps, dims)?))
        }
        Factor::Operator { .. } => {
            let mut mat = identity(1);
            let mut dims = Vec::new();
            for f in factors {
                let Factor::Operator { matrix, dims: d } = f else {
                    return Err(Error::MixedTensorKinds);
                };
                mat = kron(&mat, matrix);
                dims.extend_from_slice(d);
            }
            Ok(Factor::Operator { matrix: mat, dims })
        }
    }
}

/// Tensor product of density operators.
pub fn tensor_states(states: &[&DensityOperator]) -> Result<DensityOperator> {
    let factors: Vec<Factor> = states.iter().map(|s| Factor::from(*s)).collect();
    match tensor(&factors)? {
        Factor::Operator { matrix, dims } => Ok(DensityOperator::from_trusted(matrix, dims)),
        Factor::Ket(_) => unreachable!("operator factors give an operator"),
    }
}

fn split_index(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = idx % d;
        idx /= d;
    }
}

/// Traces out every subsystem not listed in `keep`, for a raw matrix with
/// the given subsystem dims. Kept subsystems retain their original order.
pub fn partial_trace_matrix(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let n = dims.len();
    if keep.is_empty() {
        return Err(Error::invalid("keep set must be nonempty"));
    }
    for &k in keep {
        if k >= n {
            return Err(Error::InvalidSubsystem { index: k, count: n });
        }
    }
    let total: usize = dims.iter().product();
    if total != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: total,
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();

    // (kept flat index, traced flat index) per full index
    let mut digits = vec![0usize; n];
    let decomposed: Vec<(usize, usize)> = (0..total)
        .map(|idx| {
            split_index(idx, dims, &mut digits);
            let mut kf = 0;
            for &k in &kept {
                kf = kf * dims[k] + digits[k];
            }
            let mut tf = 0;
            for &t in &traced {
                tf = tf * dims[t] + digits[t];
            }
            (kf, tf)
        })
        .collect();

    let mut out = CMat::zeros(out_dim, out_dim);
    for r in 0..total {
        let (kr, tr) = decomposed[r];
        for c in 0..total {
            let (kc, tc) = decomposed[c];
            if tr == tc {
                out[(kr, kc)] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Reduced state on the subsystems in `keep`.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let out = partial_trace_matrix(rho.matrix(), rho.dims(), keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let dims = kept.iter().map(|&k| rho.dims()[k]).collect();
    Ok(DensityOperator::from_trusted(out, dims))
}

/// Embeds `op` acting on subsystem `on` into the full space.
pub fn embed(op: &CMat, dims: &[usize], on: usize) -> CMat {
    let before: usize = dims[..on].iter().product();
    let after: usize = dims[on + 1..].iter().product();
    kron(&kron(&identity(before), op), &identity(after))
}

/// Applies `ch` to subsystem `on` of `rho`, identity elsewhere.
pub fn apply_channel(ch: &QuantumChannel, rho: &DensityOperator, on: usize) -> Result<DensityOperator> {
    let dims = rho.dims();
    if on >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: on,
            count: dims.len(),
        });
    }
    if dims[on] != ch.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.in_dim(),
            actual: dims[on],
        });
    }
    let mut new_dims = dims.to_vec();
    new_dims[on] = ch.out_dim();
    let total: usize = new_dims.iter().product();
    let mut out = CMat::zeros(total, total);
    for k in ch.kraus() {
        let big = embed(k, dims, on);
        out += &big * rho.matrix() * big.adjoint();
    }
    Ok(DensityOperator::from_trusted(out, new_dims))
}

/// Outcome distribution `p_b = Tr(ρ M_b)`.
pub fn born(rho: &DensityOperator, m: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: rho.dim(),
        });
    }
    Ok(m
        .effects()
        .iter()
        .map(|e| trace_prod_re(rho.matrix(), e))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{c, diag, max_abs_diff};
    use crate::qcore::states::phi_plus;

    #[test]
    fn identity_tensor_identity() {
        let f = tensor(&[Factor::operator(identity(2)), Factor::operator(identity(2))]).unwrap();
        let Factor::Operator { matrix, dims } = f else { panic!() };
        assert_eq!(max_abs_diff(&matrix, &identity(4)), 0.0);
        assert_eq!(dims, vec![2, 2]);
    }

    #[test]
    fn ket_zero_tensor_one_is_e1() {
        let f = tensor(&[
            Factor::Ket(Ket::basis(2, 0).unwrap()),
            Factor::Ket(Ket::basis(2, 1).unwrap()),
        ])
        .unwrap();
        let Factor::Ket(k) = f else { panic!() };
        assert_eq!(k.amplitudes()[1].re, 1.0);
        assert_eq!(k.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn dims_multiply() {
        let a = Factor::Operator {
            matrix: identity(2),
            dims: vec![2],
        };
        let b = Factor::Operator {
            matrix: identity(4),
            dims: vec![4],
        };
        let f = tensor(&[a, b]).unwrap();
        assert_eq!(f.dims(), &[2, 4]);
        let Factor::Operator { matrix, .. } = f else { panic!() };
        assert_eq!(matrix.nrows(), 8);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let r = tensor(&[Factor::Ket(Ket::basis(2, 0).unwrap()), Factor::operator(identity(2))]);
        assert!(matches!(r, Err(Error::MixedTensorKinds)));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = phi_plus(2).to_density();
        let a = partial_trace(&rho, &[0]).unwrap();
        assert!(max_abs_diff(a.matrix(), &(identity(2) * c(0.5))) < 1e-15);
    }

    #[test]
    fn product_state_marginal() {
        let ra = DensityOperator::single(diag(&[0.7, 0.3])).unwrap();
        let rb = DensityOperator::single(diag(&[0.1, 0.2, 0.7])).unwrap();
        let prod = tensor_states(&[&ra, &rb]).unwrap();
        let back = partial_trace(&prod, &[0]).unwrap();
        assert!(max_abs_diff(back.matrix(), ra.matrix()) < 1e-15);
        assert!((back.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_subsystem_rejected() {
        let rho = phi_plus(2).to_density();
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn channel_dim_mismatch() {
        let rho = phi_plus(2).to_density();
        assert!(apply_channel(&QuantumChannel::identity(3), &rho, 0).is_err());
    }

    #[test]
    fn maximally_mixed_born() {
        let rho = DensityOperator::maximally_mixed(2);
        let m = Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        let p = born(&rho, &m).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }
}
