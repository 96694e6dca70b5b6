//! Pseudo-inverse with an explicit rank test.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Moore-Penrose pseudo-inverse by SVD.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> PseudoInverse {
    let svd = m.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_TOL * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let mut singular_values: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let matrix = svd
        .pseudo_inverse(cutoff.max(f64::MIN_POSITIVE))
        .expect("SVD was computed with both U and V^T");
    singular_values.sort_by(|a, b| b.total_cmp(a));
    PseudoInverse {
        matrix,
        singular_values,
        rank,
    }
}

/// Pseudo-inverse of a matrix that must have full column rank.
pub fn full_column_rank_pinv(m: &DMatrix<f64>) -> Result<PseudoInverse> {
    let p = pseudo_inverse(m);
    if p.rank < m.ncols() {
        return Err(Error::RankDeficient { rank: p.rank });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_least_squares_solution() {
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let h = nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let p = full_column_rank_pinv(&f).unwrap();
        let x = &p.matrix * h;
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert_eq!(p.rank, 2);
    }

    #[test]
    fn flags_rank_deficiency() {
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        assert_eq!(
            full_column_rank_pinv(&f).unwrap_err(),
            Error::RankDeficient { rank: 1 }
        );
        let zero = DMatrix::<f64>::zeros(4, 2);
        assert_eq!(pseudo_inverse(&zero).rank, 0);
    }
}
