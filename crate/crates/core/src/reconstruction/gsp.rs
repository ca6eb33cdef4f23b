use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Diagnostics, QuerySet, ReconstructionMethod, ReconstructionOutcome};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Noise variance of the exact queries; the estimator treats Gram matrices
/// with smallest eigenvalue below it as singular.
pub const GSP_NOISE_REG: f64 = 1e-6;

/// The `|F|` lowest-frequency Laplacian eigenpairs, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// `n × |F|`, orthonormal columns.
    pub vectors: DMatrix<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn num_frequencies(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Dense eigendecomposition of the Laplacian of the undirected view of `g`
/// (`A` itself when undirected, `A + Aᵀ` when directed).
pub fn build_spectral_basis(g: &Graph<f64>, num_frequencies: usize) -> Result<SpectralBasis> {
    let n = g.n();
    if num_frequencies == 0 || num_frequencies > n {
        return Err(Error::Validation(format!("number of frequencies must lie in 1..={n}")));
    }
    let sym = if g.is_directed() { g.symmetrized() } else { g.clone() };
    let dense = sym.laplacian().to_dense();
    let l = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let eig = SymmetricEigen::try_new(l, f64::EPSILON, 0).ok_or_else(|| Error::Eigen("no convergence".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    order.truncate(num_frequencies);
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, num_frequencies, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok(SpectralBasis { eigenvalues, vectors })
}

/// Best linear unbiased estimate from exact samples. With noise covariance
/// `εI` it is the least-squares fit `U_F (U_Xᵀ U_X)⁻¹ U_Xᵀ s_X`.
pub fn gsp_reconstruct(basis: &SpectralBasis, q: &QuerySet, noise_reg: f64) -> Result<ReconstructionOutcome> {
    let n = basis.n();
    let f = basis.num_frequencies();
    q.check_graph(n)?;
    if q.len() < f {
        return Err(Error::Validation(format!("{} samples cannot resolve {f} frequencies", q.len())));
    }
    if !(noise_reg > 0.0) {
        return Err(Error::Validation("noise regularization must be positive".into()));
    }
    let u_x = basis.vectors.select_rows(q.selected());
    let gram = u_x.transpose() * &u_x;
    let lambda_min = SymmetricEigen::new(gram.clone()).eigenvalues.min();
    let recovery_condition = (1.0 - lambda_min).max(0.0).sqrt();
    if !(lambda_min > noise_reg) {
        return Err(Error::SamplingSetDegenerate);
    }
    let rhs = u_x.transpose() * DVector::from_column_slice(q.values());
    let coeffs = gram.cholesky().ok_or(Error::SamplingSetDegenerate)?.solve(&rhs);
    let s_hat = (&basis.vectors * coeffs).as_slice().to_vec();
    let diagnostics = Diagnostics { recovery_condition: Some(recovery_condition), ..Diagnostics::default() };
    ReconstructionOutcome::new(s_hat, ReconstructionMethod::Gsp, q, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph<f64> {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], false).unwrap()
    }

    #[test]
    fn k3_spectrum() {
        let b = build_spectral_basis(&k3(), 3).unwrap();
        for (got, want) in b.eigenvalues.iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let gram = b.vectors.transpose() * &b.vectors;
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        for i in 0..3 {
            assert!((b.vectors[(i, 0)].abs() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_signal_from_one_sample() {
        let b = build_spectral_basis(&k3(), 1).unwrap();
        let q = QuerySet::new(3, vec![(1, 0.4)]).unwrap();
        let out = gsp_reconstruct(&b, &q, GSP_NOISE_REG).unwrap();
        for &v in out.s_hat.values() {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        let b = build_spectral_basis(&k3(), 3).unwrap();
        let q = QuerySet::new(3, vec![(0, 1.0), (1, 0.0)]).unwrap();
        assert!(matches!(gsp_reconstruct(&b, &q, GSP_NOISE_REG), Err(Error::Validation(_))));
    }

    #[test]
    fn bad_frequency_count() {
        assert!(build_spectral_basis(&k3(), 0).is_err());
        assert!(build_spectral_basis(&k3(), 4).is_err());
    }
}
