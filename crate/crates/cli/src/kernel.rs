use wlmetric_core::Matrix;

use crate::distance::DistanceMatrix;
use crate::error::{HarnessError, Result};

/// Entrywise `exp(-γ d)`. The result may be indefinite; no correction is applied.
pub fn kernel_export(dm: &DistanceMatrix, gamma: f64) -> Result<Matrix> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(HarnessError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let d = dm.entries();
    Ok(Matrix::from_fn(d.rows(), d.cols(), |i, j| (-gamma * d[(i, j)]).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distances_give_ones() {
        let dm = DistanceMatrix::from_entries(Matrix::zeros(3, 3), None).unwrap();
        assert!(kernel_export(&dm, 2.0).unwrap().as_slice().iter().all(|&v| v == 1.0));
        assert!(kernel_export(&dm, 0.0).is_err());
        assert!(kernel_export(&dm, f64::NAN).is_err());
    }
}
