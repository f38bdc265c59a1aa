//! Shipped example forms used by the experiments and the command line.

use crate::forms::{FibrationMode, IntPolynomial, VariableSplit};

fn var(n: usize, i: usize) -> IntPolynomial {
    IntPolynomial::var(n, i)
}

fn prod(n: usize, idx: &[usize]) -> IntPolynomial {
    idx.iter().fold(IntPolynomial::constant(n, 1), |acc, &i| &acc * &var(n, i))
}

/// Quadratic forms Q_1, …, Q_5 in three parameters with Q_1 = y_1² − y_2² − y_3².
pub fn linear_fibre_quadrics(n: usize, y: [usize; 3]) -> Vec<IntPolynomial> {
    let s = |a: usize, b: usize| prod(n, &[y[a], y[b]]);
    vec![
        &(&s(0, 0) - &s(1, 1)) - &s(2, 2),
        &s(0, 1) + &s(2, 2),
        &s(1, 1) + &s(0, 2),
        &s(1, 2) - &s(0, 0),
        &(&s(0, 0) + &s(1, 2)) + &s(0, 1),
    ]
}

/// Member t of the linear-fibre family in n = 8 variables:
/// C = Σ_{i ≤ 5} x_i Q_i(y) + y_1³ + t y_2³ + y_3³ − y_1 y_2 y_3,
/// with x = (z_1, …, z_5) and y = (z_6, z_7, z_8).
pub fn linear_fibre_family(t: i64) -> (IntPolynomial, VariableSplit) {
    reduced_linear_fibre_family(t, 5)
}

/// The family with only the first `nx` of the Q_i, used where brute force
/// over all variables must stay small.
pub fn reduced_linear_fibre_family(t: i64, nx: usize) -> (IntPolynomial, VariableSplit) {
    let n = nx + 3;
    let y = [nx, nx + 1, nx + 2];
    let qs = linear_fibre_quadrics(n, y);
    let mut c = IntPolynomial::zero(n);
    for (i, q) in qs.iter().take(nx).enumerate() {
        c = &c + &(&var(n, i) * q);
    }
    let r = &(&(&prod(n, &[y[0]; 3]) + &prod(n, &[y[1]; 3]).scale(&t.into())) + &prod(n, &[y[2]; 3]))
        - &prod(n, &[y[0], y[1], y[2]]);
    c = &c + &r;
    (c, VariableSplit::leading(nx, n, FibrationMode::PiPrime))
}
