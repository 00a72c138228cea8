//! Frequently used states and random sampling helpers.

use rand::Rng;

use super::matrix::{gaussian, outer, CMat, CVec, Field, C64};
use super::types::{DensityOperator, Ket};

/// `|φ_d⟩ = Σᵢ |ii⟩/√d` on two subsystems of dimension `d`.
pub fn phi_plus(d: usize) -> Ket {
    let s = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = s;
    }
    Ket::new(v, vec![d, d]).expect("normalized by construction")
}

/// Haar-random unit vector in the requested field.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize, field: Field) -> CVec {
    let g = gaussian(rng, dim, 1, field);
    let v = g.column(0).into_owned();
    let n = v.norm();
    v.map(|z| z / C64::new(n, 0.0))
}

/// Random mixed state `GG†/Tr(GG†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, field: Field) -> DensityOperator {
    let g = gaussian(rng, dim, dim, field);
    let m: CMat = &g * g.adjoint();
    let tr = m.trace();
    let m = super::matrix::hermitize(&(m / tr));
    DensityOperator::from_trusted(m, vec![dim])
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize, field: Field) -> DensityOperator {
    DensityOperator::from_trusted(outer(&random_unit_vector(rng, dim, field)), vec![dim])
}
