//! Printed decoding measurements for the four-dimensional-entanglement
//! strategy, reproduced verbatim (4-decimal entries, 1/√2 components exact).
//!
//! Known misprint: the first eigenvector of `M2` has entries 0.0337 and
//! 0.0227 at positions 2 and 7 although the block structure of `M2` forces
//! them to be equal.

use std::f64::consts::FRAC_1_SQRT_2 as S;

use crate::qcore::matrix::{from_real_rows, CMat};

pub const EIGENVALUE_PATTERN: [f64; 8] = [-1.0, -1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 1.0];

#[rustfmt::skip]
const M1: [[f64; 8]; 8] = [
    [ 0.3536, 0.0, -0.1464,  0.0,  0.0,  0.8536, 0.0,  0.3536],
    [ 0.0,    0.5,  0.0,     0.0,  0.0,  0.0,    0.5,  0.0   ],
    [-0.1464, 0.0, -0.3536,  0.0,  0.0, -0.3536, 0.0,  0.8536],
    [ 0.0,    0.0,  0.0,    -0.5, -0.5,  0.0,    0.0,  0.0   ],
    [ 0.0,    0.0,  0.0,    -0.5, -0.5,  0.0,    0.0,  0.0   ],
    [ 0.8536, 0.0, -0.3536,  0.0,  0.0, -0.3536, 0.0, -0.1464],
    [ 0.0,    0.5,  0.0,     0.0,  0.0,  0.0,    0.5,  0.0   ],
    [ 0.3536, 0.0,  0.8536,  0.0,  0.0, -0.1464, 0.0,  0.3536],
];

#[rustfmt::skip]
const M2: [[f64; 8]; 8] = [
    [-0.3536, 0.0, -0.1464,  0.0,  0.0,  0.8536, 0.0, -0.3536],
    [ 0.0,   -0.5,  0.0,     0.0,  0.0,  0.0,   -0.5,  0.0   ],
    [-0.1464, 0.0,  0.3536,  0.0,  0.0,  0.3536, 0.0,  0.8536],
    [ 0.0,    0.0,  0.0,     0.5,  0.5,  0.0,    0.0,  0.0   ],
    [ 0.0,    0.0,  0.0,     0.5,  0.5,  0.0,    0.0,  0.0   ],
    [ 0.8536, 0.0,  0.3536,  0.0,  0.0,  0.3536, 0.0, -0.1464],
    [ 0.0,   -0.5,  0.0,     0.0,  0.0,  0.0,   -0.5,  0.0   ],
    [-0.3536, 0.0,  0.8536,  0.0,  0.0, -0.1464, 0.0, -0.3536],
];

#[rustfmt::skip]
const M1_EIGENVECTORS: [[f64; 8]; 8] = [
    [ 0.2895, 0.0,   -0.5804, -0.2332, -0.2332, -0.6497,  0.0,     0.2201],
    [ 0.4636, 0.0,    0.3675,  0.3395,  0.3395, -0.5035,  0.0,    -0.4073],
    [ 0.1564, 0.0,    0.4526, -0.5747, -0.5747, -0.0338,  0.0,    -0.33  ],
    [ 0.0,    0.0,    0.0,     S,      -S,       0.0,     0.0,     0.0   ],
    [ 0.0,    S,      0.0,     0.0,     0.0,     0.0,    -S,       0.0   ],
    [-0.4730, 0.5312, 0.2332,  0.0,     0.0,    -0.3737,  0.5312,  0.1339],
    [ 0.5440, 0.4667,-0.2591,  0.0,     0.0,     0.4260,  0.4667, -0.1411],
    [ 0.3964,-0.0066, 0.4491,  0.0,     0.0,     0.0462, -0.0066,  0.7993],
];

#[rustfmt::skip]
const M2_EIGENVECTORS: [[f64; 8]; 8] = [
    [ 0.8032, 0.0337, 0.2070,  0.0,     0.0,    -0.5562,  0.0227,  0.0399],
    [ 0.1760, 0.0022,-0.5295,  0.0,     0.0,     0.1162,  0.0022,  0.8217],
    [ 0.0263,-0.7067, 0.0050,  0.0,     0.0,    -0.0175, -0.7067,  0.0039],
    [ 0.0,    0.0,    0.0,     S,      -S,       0.0,     0.0,     0.0   ],
    [ 0.0,    S,      0.0,     0.0,     0.0,     0.0,    -S,       0.0   ],
    [ 0.0325, 0.0,    0.0049,  0.7059,  0.7059,  0.0480,  0.0,    -0.0106],
    [ 0.4306, 0.0,   -0.6273, -0.0237, -0.0237,  0.3492,  0.0,    -0.5459],
    [-0.3697, 0.0,   -0.5322,  0.0345,  0.0345, -0.7433,  0.0,    -0.1586],
];

#[rustfmt::skip]
const MP_VECTORS: [[f64; 8]; 8] = [
    [0.0, 0.0, 0.0, S,   S,  0.0, 0.0, 0.0],
    [0.0, S,   0.0, 0.0, 0.0, 0.0, -S, 0.0],
    [S,   0.0, 0.0, 0.0, 0.0, S,   0.0, 0.0],
    [0.0, 0.0, 0.0, S,  -S,  0.0, 0.0, 0.0],
    [0.0, S,   0.0, 0.0, 0.0, 0.0, S,   0.0],
    [S,   0.0, 0.0, 0.0, 0.0, -S,  0.0, 0.0],
    [0.0, 0.0, S,   0.0, 0.0, 0.0, 0.0, S  ],
    [0.0, 0.0, S,   0.0, 0.0, 0.0, 0.0, -S ],
];

/// The printed measurement constants.
#[derive(Debug, Clone)]
pub struct MeasurementFixtures {
    pub m1: CMat,
    pub m2: CMat,
    /// Rows are eigenvectors, listed with eigenvalues [`EIGENVALUE_PATTERN`].
    pub m1_eigenvectors: Vec<[f64; 8]>,
    pub m2_eigenvectors: Vec<[f64; 8]>,
    /// Rank-1 projector directions of the flag measurement, in printed order.
    pub mp_vectors: Vec<[f64; 8]>,
}

fn to_mat(rows: &[[f64; 8]; 8]) -> CMat {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    from_real_rows(&refs)
}

pub fn printed_measurement_fixtures() -> MeasurementFixtures {
    MeasurementFixtures {
        m1: to_mat(&M1),
        m2: to_mat(&M2),
        m1_eigenvectors: M1_EIGENVECTORS.to_vec(),
        m2_eigenvectors: M2_EIGENVECTORS.to_vec(),
        mp_vectors: MP_VECTORS.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_entries() {
        let f = printed_measurement_fixtures();
        assert_eq!(f.m1[(0, 5)].re, 0.8536);
        assert_eq!(f.m1_eigenvectors[3], [0.0, 0.0, 0.0, S, -S, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn flag_vectors_orthonormal() {
        let f = printed_measurement_fixtures();
        for (i, a) in f.mp_vectors.iter().enumerate() {
            for (j, b) in f.mp_vectors.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "({i},{j}) -> {dot}");
            }
        }
    }
}
