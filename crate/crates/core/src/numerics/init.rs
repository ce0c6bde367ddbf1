use rand::Rng;

use super::{Matrix, RngSeed};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitScheme {
    Zeros,
    /// Uniform on `[-a, a]`.
    Uniform(f64),
    /// Uniform on `[-b, b]` with `b = sqrt(6 / (rows + cols))`.
    Xavier,
}

pub fn init_matrix<T: Scalar>(
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    seed: RngSeed,
) -> Result<Matrix<T>> {
    init_matrix_with(rows, cols, scheme, &mut seed.rng())
}

pub fn init_matrix_with<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    scheme: InitScheme,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "cannot initialize a {rows}x{cols} matrix"
        )));
    }
    let bound = match scheme {
        InitScheme::Zeros => return Ok(Matrix::zeros(rows, cols)),
        InitScheme::Uniform(a) if !(a > 0.0 && a.is_finite()) => {
            return Err(Error::invalid(format!("uniform bound must be positive, got {a}")));
        }
        InitScheme::Uniform(a) => a,
        InitScheme::Xavier => (6.0 / (rows + cols) as f64).sqrt(),
    };
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.gen_range(-bound..=bound)))
        .collect();
    Matrix::new(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_scheme() {
        let m: Matrix<f64> = init_matrix(2, 2, InitScheme::Zeros, RngSeed(3)).unwrap();
        assert_eq!(m.as_slice(), &[0.0; 4]);
    }

    #[test]
    fn uniform_within_bounds() {
        let m: Matrix<f64> = init_matrix(3, 4, InitScheme::Uniform(0.1), RngSeed(11)).unwrap();
        assert!(m.as_slice().iter().all(|x| (-0.1..=0.1).contains(x)));
    }

    #[test]
    fn xavier_is_deterministic_and_bounded() {
        let a: Matrix<f64> = init_matrix(3, 4, InitScheme::Xavier, RngSeed(5)).unwrap();
        let b: Matrix<f64> = init_matrix(3, 4, InitScheme::Xavier, RngSeed(5)).unwrap();
        let bits = |m: &Matrix<f64>| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(a.as_slice().iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let r: Result<Matrix<f64>> = init_matrix(0, 3, InitScheme::Xavier, RngSeed(1));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        let r: Result<Matrix<f64>> = init_matrix(2, 3, InitScheme::Uniform(0.0), RngSeed(1));
        assert!(r.is_err());
    }
}
