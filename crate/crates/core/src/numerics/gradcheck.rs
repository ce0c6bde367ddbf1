use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_FD_EPS: f64 = 1e-5;

/// Central-difference gradient of `loss` at `params`.
///
/// Each coordinate costs two evaluations of `loss`. `eps` must lie in
/// `[1e-7, 1e-4]`.
pub fn finite_diff_grad<T, F>(mut loss: F, params: &Matrix<T>, eps: T) -> Result<Matrix<T>>
where
    T: Scalar,
    F: FnMut(&Matrix<T>) -> T,
{
    if !(eps >= T::lit(1e-7) && eps <= T::lit(1e-4)) {
        return Err(Error::invalid(format!("finite-difference eps {eps} outside [1e-7, 1e-4]")));
    }
    let mut probe = params.clone();
    let mut grad = Matrix::zeros(params.rows(), params.cols());
    let two_eps = eps + eps;
    for i in 0..params.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + eps;
        let up = loss(&probe);
        probe.as_mut_slice()[i] = orig - eps;
        let down = loss(&probe);
        probe.as_mut_slice()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteAt { coordinate: i });
        }
        grad.as_mut_slice()[i] = (up - down) / two_eps;
    }
    Ok(grad)
}

/// Largest coordinatewise `|a - n| / max(|a|, |n|, floor)`.
pub fn max_relative_error<T: Scalar>(analytic: &Matrix<T>, numeric: &Matrix<T>, floor: T) -> T {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .fold(T::zero(), |acc, (&a, &n)| {
            let denom = a.abs().max(n.abs()).max(floor);
            acc.max((a - n).abs() / denom)
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Matrix<f64> {
        Matrix::column(xs.to_vec())
    }

    #[test]
    fn sum_of_squares() {
        let g = finite_diff_grad(|p| p.squared_norm(), &v(&[1.0, 2.0]), 1e-5).unwrap();
        assert!((g.get(0, 0) - 2.0).abs() < 1e-6);
        assert!((g.get(1, 0) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function() {
        let g = finite_diff_grad(|_| 3.5, &v(&[1.0, -2.0, 0.0]), 1e-5).unwrap();
        assert!(g.as_slice().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn bilinear() {
        let f = |p: &Matrix<f64>| p.get(0, 0) * p.get(1, 0);
        let g = finite_diff_grad(f, &v(&[3.0, 5.0]), 1e-5).unwrap();
        assert!((g.get(0, 0) - 5.0).abs() < 1e-6);
        assert!((g.get(1, 0) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_reports_coordinate() {
        let f = |p: &Matrix<f64>| if p.get(1, 0) > 1.0 { f64::NAN } else { 0.0 };
        let err = finite_diff_grad(f, &v(&[0.0, 1.0]), 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFiniteAt { coordinate: 1 }));
    }

    #[test]
    fn eps_range_enforced() {
        assert!(finite_diff_grad(|_| 0.0, &v(&[1.0]), 1e-2).is_err());
    }
}
