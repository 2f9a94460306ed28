//! Small dense helpers built on nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Relative cutoff below which a singular value counts as zero.
pub fn rank_tolerance() -> f64 {
    f64::EPSILON.sqrt()
}

/// Singular values and right singular vectors, sorted by decreasing singular value.
///
/// `right` has one column per returned singular value (thin decomposition).
pub struct SortedSvd {
    pub singular: Vec<f64>,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return SortedSvd {
            singular: Vec::new(),
            left: DMatrix::zeros(m.nrows(), 0),
            right: DMatrix::zeros(m.ncols(), 0),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular = order.iter().map(|&i| svd.singular_values[i]).collect();
    let left = DMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]);
    let right = DMatrix::from_fn(m.ncols(), k, |r, c| vt[(order[c], r)]);
    SortedSvd {
        singular,
        left,
        right,
    }
}

/// Numerical rank with the cutoff `σ_k < σ_max · √ε`.
pub fn numerical_rank(singular: &[f64]) -> usize {
    let smax = singular.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = smax * rank_tolerance();
    singular.iter().filter(|&&s| s >= cut).count()
}

/// Orthonormal basis of the kernel of a symmetric projector (eigenvalue-one eigenvectors).
pub fn projector_range_basis(p: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let eig = nalgebra::SymmetricEigen::new(p.clone());
    let mut cols: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &ev)| ev > 0.5)
        .map(|(i, &ev)| (ev, eig.eigenvectors.column(i).into_owned()))
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    cols.into_iter()
        .map(|(_, mut v)| {
            // fix the sign so the first significant entry is positive
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            v
        })
        .collect()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_svd_orders_descending() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let s = sorted_svd(&m);
        assert_eq!(s.singular, vec![3.0, 1.0]);
        assert!((s.right[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_counts_with_relative_cutoff() {
        assert_eq!(numerical_rank(&[1.0, 1e-9]), 1);
        assert_eq!(numerical_rank(&[1.0, 1e-7]), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0]), 0);
        assert_eq!(numerical_rank(&[]), 0);
    }
}
