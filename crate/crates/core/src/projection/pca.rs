//! Principal component projection onto two axes.

use nalgebra::{DMatrix, SymmetricEigen};

use super::ProjectionError;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub coords: Vec<[f64; 2]>,
    /// Variance along each of the two components (divisor `n - 1`).
    pub explained_variance: [f64; 2],
    /// Per-component share of the total variance; 0 when the data has none.
    pub explained_variance_ratio: [f64; 2],
    /// Unit loading vectors of the two components.
    pub components: [Vec<f64>; 2],
}

/// Centers the rows and projects them onto the top two eigenvectors of the
/// sample covariance. Each component's sign makes its largest-magnitude
/// loading positive.
pub fn pca_2d(vectors: &[Vec<f64>]) -> Result<PcaResult, ProjectionError> {
    let n = vectors.len();
    if n < 2 {
        return Err(ProjectionError::TooFewPoints { n, min: 2 });
    }
    let d = vectors[0].len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(ProjectionError::Dimension { index: i, len: v.len(), expected: d });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProjectionError::NonFinite { index: i });
        }
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| vectors[i][j]);
    for j in 0..d {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().sum();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut variance = [0.0; 2];
    for (c, &idx) in order.iter().take(2).enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > col[best].abs() { i } else { best });
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        components[c] = col;
        variance[c] = eig.eigenvalues[idx].max(0.0);
    }
    let coords = (0..n)
        .map(|i| {
            let row = x.row(i);
            let p = |c: &Vec<f64>| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [p(&components[0]), p(&components[1])]
        })
        .collect();
    let ratio = if total > 0.0 {
        [variance[0] / total, variance[1] / total]
    } else {
        [0.0, 0.0]
    };
    Ok(PcaResult {
        coords,
        explained_variance: variance,
        explained_variance_ratio: ratio,
        components,
    })
}
