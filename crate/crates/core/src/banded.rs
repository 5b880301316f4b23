//! Complex pentadiagonal solver for the implicit time stepper.
//!
//! Row i of the matrix reads
//!
//! ```text
//! l2[i-2] x[i-2] + l1[i-1] x[i-1] + d0[i] x[i] + u1[i] x[i+1] + u2[i] x[i+2]
//! ```
//!
//! so the diagonal arrays have lengths n, n-1 and n-2. Elimination without
//! pivoting: the stepper's matrices are strongly diagonally dominant
//! (2/dt on the diagonal against O(1/dx^2) off it).

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn solve_pentadiagonal(
    l2: &[Complex64],
    l1: &[Complex64],
    d0: &[Complex64],
    u1: &[Complex64],
    u2: &[Complex64],
    rhs: &mut [Complex64],
) -> Result<()> {
    let n = rhs.len();
    if n < 4 {
        return Err(Error::LinearSolve(format!("system size {n} < 4")));
    }
    assert_eq!(d0.len(), n);
    assert_eq!(l1.len(), n - 1);
    assert_eq!(u1.len(), n - 1);
    assert_eq!(l2.len(), n - 2);
    assert_eq!(u2.len(), n - 2);

    let mut al = vec![Complex64::ZERO; n - 1];
    let mut be = vec![Complex64::ZERO; n - 2];
    let mut ze = vec![Complex64::ZERO; n];
    let mut ga = vec![Complex64::ZERO; n];
    let mut mu = vec![Complex64::ZERO; n];

    let check = |m: Complex64, i: usize| -> Result<Complex64> {
        if m.norm_sqr() < f64::MIN_POSITIVE {
            Err(Error::LinearSolve(format!("vanishing pivot at row {i}")))
        } else {
            Ok(m)
        }
    };

    mu[0] = check(d0[0], 0)?;
    al[0] = u1[0] / mu[0];
    be[0] = u2[0] / mu[0];
    ze[0] = rhs[0] / mu[0];

    ga[1] = l1[0];
    mu[1] = check(d0[1] - al[0] * ga[1], 1)?;
    al[1] = (u1[1] - be[0] * ga[1]) / mu[1];
    be[1] = u2[1] / mu[1];
    ze[1] = (rhs[1] - ze[0] * ga[1]) / mu[1];

    for i in 2..n - 2 {
        ga[i] = l1[i - 1] - al[i - 2] * l2[i - 2];
        mu[i] = check(d0[i] - be[i - 2] * l2[i - 2] - al[i - 1] * ga[i], i)?;
        al[i] = (u1[i] - be[i - 1] * ga[i]) / mu[i];
        be[i] = u2[i] / mu[i];
        ze[i] = (rhs[i] - ze[i - 2] * l2[i - 2] - ze[i - 1] * ga[i]) / mu[i];
    }

    ga[n - 2] = l1[n - 3] - al[n - 4] * l2[n - 4];
    mu[n - 2] = check(
        d0[n - 2] - be[n - 4] * l2[n - 4] - al[n - 3] * ga[n - 2],
        n - 2,
    )?;
    al[n - 2] = (u1[n - 2] - be[n - 3] * ga[n - 2]) / mu[n - 2];
    ze[n - 2] = (rhs[n - 2] - ze[n - 4] * l2[n - 4] - ze[n - 3] * ga[n - 2]) / mu[n - 2];

    ga[n - 1] = l1[n - 2] - al[n - 3] * l2[n - 3];
    mu[n - 1] = check(
        d0[n - 1] - be[n - 3] * l2[n - 3] - al[n - 2] * ga[n - 1],
        n - 1,
    )?;
    ze[n - 1] = (rhs[n - 1] - ze[n - 3] * l2[n - 3] - ze[n - 2] * ga[n - 1]) / mu[n - 1];

    rhs[n - 1] = ze[n - 1];
    rhs[n - 2] = ze[n - 2] - rhs[n - 1] * al[n - 2];
    for i in (0..n - 2).rev() {
        rhs[i] = ze[i] - rhs[i + 1] * al[i] - rhs[i + 2] * be[i];
    }
    Ok(())
}
