//! Matrix permanents.
//!
//! Bosonic transition amplitudes are permanents of sub-matrices of the mode
//! unitary. [`permanent`] uses Ryser's inclusion-exclusion formula walked in
//! Gray-code order, so each subset differs from the previous one by a single
//! column and the row sums are updated in `O(n)`. [`permanent_naive`] sums over
//! all `n!` permutations and is kept as a reference.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Permanent by Ryser's formula with Gray-code subset iteration.
///
/// The empty matrix has permanent 1.
pub fn permanent(matrix: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = square_dim(matrix)?;
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    assert!(n < 63, "permanent dimension {n} too large");

    // perm(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let bit = 1u64 << col;
        gray ^= bit;
        if gray & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += matrix[(i, col)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= matrix[(i, col)];
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Permanent by direct expansion over all permutations.
pub fn permanent_naive(matrix: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = square_dim(matrix)?;
    let mut used = vec![false; n];
    Ok(expand(matrix, 0, &mut used))
}

fn expand(matrix: &DMatrix<Complex64>, row: usize, used: &mut [bool]) -> Complex64 {
    let n = used.len();
    if row == n {
        return Complex64::new(1.0, 0.0);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for col in 0..n {
        if !used[col] {
            used[col] = true;
            sum += matrix[(row, col)] * expand(matrix, row + 1, used);
            used[col] = false;
        }
    }
    sum
}

fn square_dim(matrix: &DMatrix<Complex64>) -> Result<usize> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}
