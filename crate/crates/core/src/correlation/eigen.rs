use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `V diag(values) V'`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymEigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("eigendecomposition needs a square matrix".into()));
    }
    let scale = m.amax().max(1.0);
    let asym = crate::linalg::asymmetry(m);
    if asym > 1e-8 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut sym = m.clone();
    crate::linalg::symmetrize(&mut sym);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_two_by_two() {
        let e = sym_eigen(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
        let e = sym_eigen(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
            let m = &a + a.transpose();
            let e = sym_eigen(&m).unwrap();
            assert!((e.reconstruct() - &m).amax() < 1e-8);
            assert!(e.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
            let vtv = e.vectors.transpose() * &e.vectors;
            assert!((vtv - DMatrix::identity(8, 8)).amax() < 1e-10);
        }
    }
}
