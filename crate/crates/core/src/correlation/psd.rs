use nalgebra::DMatrix;

use super::{sym_eigen, CorrelationKind, CorrelationMatrix};
use crate::error::Result;

/// Eigenvalues of a smoothed matrix are clipped from below at this value.
pub const PSD_EIGEN_FLOOR: f64 = 1e-6;

/// Clip eigenvalues at [`PSD_EIGEN_FLOOR`], reconstruct and rescale to a unit
/// diagonal. Matrices whose spectrum already clears the floor come back
/// unchanged. Rescaling can pull the smallest eigenvalue a hair under the
/// floor, so clip-and-rescale repeats until it holds.
pub fn nearest_psd(m: &DMatrix<f64>, kind: CorrelationKind) -> Result<CorrelationMatrix> {
    let mut current = m.clone();
    crate::linalg::symmetrize(&mut current);
    for _ in 0..50 {
        let eig = sym_eigen(&current)?;
        let smallest = eig.values[eig.values.len() - 1];
        if smallest >= PSD_EIGEN_FLOOR - 1e-9 {
            break;
        }
        let clipped = eig.values.map(|v| v.max(PSD_EIGEN_FLOOR));
        let rebuilt = &eig.vectors * DMatrix::from_diagonal(&clipped) * eig.vectors.transpose();
        let p = rebuilt.nrows();
        let scale: Vec<f64> = (0..p).map(|i| 1.0 / rebuilt[(i, i)].sqrt()).collect();
        current = DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else {
                rebuilt[(i, j)] * scale[i] * scale[j]
            }
        });
        crate::linalg::symmetrize(&mut current);
    }
    let p = current.nrows();
    for i in 0..p {
        current[(i, i)] = 1.0;
    }
    Ok(CorrelationMatrix::from_parts_unchecked(current, kind))
}
