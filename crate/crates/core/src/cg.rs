//! Jacobi-preconditioned conjugate gradient for matrix-free symmetric
//! positive (semi-)definite operators.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn true_residual<F: FnMut(&[f64], &mut [f64])>(op: &mut F, b: &[f64], x: &[f64], r: &mut [f64]) {
    op(x, r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
}

/// Solves `A x = b` from `x0`, stopping once the true relative residual is at
/// most `tol`. The recurrence residual drifts from the true one in long runs,
/// so the iteration is restarted from the current iterate whenever the
/// recurrence claims convergence; a restart that fails to halve the true
/// residual ends the solve. Returns the best iterate seen; callers judge
/// convergence on their own certificate.
pub(crate) fn solve<F>(
    mut op: F,
    b: &[f64],
    x0: Vec<f64>,
    diagonal: &[f64],
    tol: f64,
    max_iters: usize,
) -> CgOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
        };
    }
    let inv_diag: Vec<f64> = diagonal
        .iter()
        .map(|&d| if d > 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    true_residual(&mut op, b, &x, &mut r);
    let mut residual = norm(&r) / b_norm;
    let mut best_x = x.clone();
    let mut best = residual;

    while residual > tol && iterations < max_iters {
        let target = 0.5 * tol * b_norm;
        z.iter_mut().zip(&r).zip(&inv_diag).for_each(|((zi, ri), di)| *zi = ri * di);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);

        while iterations < max_iters {
            op(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
            iterations += 1;
            if norm(&r) <= target {
                break;
            }
            z.iter_mut().zip(&r).zip(&inv_diag).for_each(|((zi, ri), di)| *zi = ri * di);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }

        true_residual(&mut op, b, &x, &mut r);
        let previous = residual;
        residual = norm(&r) / b_norm;
        if residual < best {
            best = residual;
            best_x.copy_from_slice(&x);
        }
        if residual > 0.5 * previous {
            break;
        }
    }

    CgOutcome {
        x: best_x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn solves_small_spd_system() {
        let m = DMatrix::from_fn(12, 12, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let a = &m * m.transpose() + DMatrix::identity(12, 12);
        let x_true = DVector::from_fn(12, |i, _| i as f64 - 3.0);
        let b = &a * &x_true;
        let diag: Vec<f64> = (0..12).map(|i| a[(i, i)]).collect();
        let out = solve(
            |x, y| y.copy_from_slice((&a * DVector::from_column_slice(x)).as_slice()),
            b.as_slice(),
            vec![0.0; 12],
            &diag,
            1e-12,
            1000,
        );
        for (xi, ti) in out.x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = solve(|x, y| y.copy_from_slice(x), &[0.0; 3], vec![1.0; 3], &[1.0; 3], 1e-10, 10);
        assert_eq!((out.x, out.iterations), (vec![0.0; 3], 0));
    }

    #[test]
    fn reports_non_convergence() {
        let out = solve(
            |x, y| y.iter_mut().zip(x).enumerate().for_each(|(i, (yi, xi))| *yi = (i + 1) as f64 * xi),
            &[1.0; 50],
            vec![0.0; 50],
            &[1.0; 50],
            1e-14,
            3,
        );
        assert_eq!(out.iterations, 3);
        let r: f64 = out.x.iter().enumerate().map(|(i, x)| (1.0 - (i + 1) as f64 * x).powi(2)).sum();
        assert!(r.sqrt() / 50f64.sqrt() > 1e-14);
    }
}
