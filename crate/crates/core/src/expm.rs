//! Real matrix exponential by scaling and squaring with a degree-13 Padé core.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Computes `exp(a)` for a square real matrix.
///
/// The matrix is scaled by `2^-s` so its 1-norm falls below the Padé(13)
/// accuracy bound, the rational approximant is evaluated with one linear
/// solve, and the result is squared `s` times.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::config("matrix exponential requires a square matrix"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow);
    }

    let norm = one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-squarings);

    let b = &PADE_13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &scaled * inner_u;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or(Error::NumericalOverflow)?;
    for _ in 0..squarings {
        result = &result * &result;
    }

    if result.iter().all(|v| v.is_finite()) {
        Ok(result)
    } else {
        Err(Error::NumericalOverflow)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_gives_identity() {
        let e = expm(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.5, 12.0]));
        let e = expm(&a).unwrap();
        for (i, x) in [-3.0f64, 0.5, 12.0].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() <= 1e-13 * x.exp());
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 2.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        let a = DMatrix::from_element(2, 2, 1e300);
        assert!(matches!(expm(&a), Err(Error::NumericalOverflow)));
    }
}
