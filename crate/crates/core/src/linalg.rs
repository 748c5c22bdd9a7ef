//! Small dense linear algebra: Cholesky with a relative pivot threshold,
//! SPD inversion, and the power method for the leading eigenvalue.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative Cholesky pivot threshold: a pivot must exceed this fraction of
/// the largest diagonal entry.
pub const SINGULAR_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

fn check_square_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let q = a.nrows();
    for i in 0..q {
        for j in (i + 1)..q {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
///
/// Fails with [`Error::Singular`] carrying the index of the first pivot
/// `a_kk - Σ_j L_kj²` that does not exceed `tol · max_k a_kk`.
pub fn cholesky(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_square_symmetric(a)?;
    let q = a.nrows();
    let max_diag = (0..q).map(|k| a[(k, k)]).fold(f64::NEG_INFINITY, f64::max);
    let threshold = tol * max_diag.max(0.0);
    let mut l = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let mut pivot = a[(k, k)];
        for j in 0..k {
            pivot -= l[(k, j)] * l[(k, j)];
        }
        if !(pivot > threshold) || max_diag <= 0.0 {
            return Err(Error::Singular { pivot: k, value: pivot });
        }
        let root = pivot.sqrt();
        l[(k, k)] = root;
        for i in (k + 1)..q {
            let mut s = a[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)];
            }
            l[(i, k)] = s / root;
        }
    }
    Ok(l)
}

/// `A = L D Lᵀ` with unit lower-triangular `L`; fails like [`cholesky`] when
/// a pivot `d_k` does not exceed `tol · max_k a_kk`.
pub fn ldl(a: &DMatrix<f64>, tol: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_square_symmetric(a)?;
    let q = a.nrows();
    let max_diag = (0..q).map(|k| a[(k, k)]).fold(f64::NEG_INFINITY, f64::max);
    let threshold = tol * max_diag.max(0.0);
    let mut l = DMatrix::<f64>::identity(q, q);
    let mut d = vec![0.0; q];
    for k in 0..q {
        let mut pivot = a[(k, k)];
        for j in 0..k {
            pivot -= l[(k, j)] * l[(k, j)] * d[j];
        }
        if !(pivot > threshold) || max_diag <= 0.0 {
            return Err(Error::Singular { pivot: k, value: pivot });
        }
        d[k] = pivot;
        for i in (k + 1)..q {
            let mut s = a[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)] * d[j];
            }
            l[(i, k)] = s / pivot;
        }
    }
    Ok((l, d))
}

/// Inverse of a symmetric positive-definite matrix from its `L D Lᵀ`
/// factorization (pivots are the squared Cholesky pivots, so the singularity
/// rule is the same). The result is exactly symmetric.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (l, d) = ldl(a, SINGULAR_TOL)?;
    let q = l.nrows();
    // W = L⁻¹ (unit lower triangular) by forward substitution.
    let mut w = DMatrix::<f64>::identity(q, q);
    for c in 0..q {
        for i in (c + 1)..q {
            let mut s = 0.0;
            for j in c..i {
                s -= l[(i, j)] * w[(j, c)];
            }
            w[(i, c)] = s;
        }
    }
    // A⁻¹ = Wᵀ D⁻¹ W
    let mut inv = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        for j in i..q {
            let mut s = 0.0;
            for k in j..q {
                s += w[(k, i)] * w[(k, j)] / d[k];
            }
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    Ok(inv)
}

/// Leading eigenvalue of a symmetric matrix with nonnegative entries, by the
/// power method.
///
/// The iteration runs on `B + cI` with `c` half the largest absolute row sum,
/// which keeps the Perron root strictly dominant even for bipartite supports
/// (where `-λ₁` is also an eigenvalue of `B`). The start vector is all ones
/// plus a fixed deterministic perturbation. Iteration stops once the residual
/// `‖Bv − λv‖` drops below `rel_tol · |λ|`, which bounds the distance from
/// `λ` to the spectrum.
pub fn largest_eigenvalue(b: &DMatrix<f64>, rel_tol: f64, max_iter: usize) -> Result<f64> {
    check_square_symmetric(b)?;
    let q = b.nrows();
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); q];
    let mut row_bound = 0.0f64;
    for i in 0..q {
        let mut row_sum = 0.0;
        for j in 0..q {
            let v = b[(i, j)];
            if v != 0.0 {
                entries[i].push((j, v));
                row_sum += v.abs();
            }
        }
        row_bound = row_bound.max(row_sum);
    }
    if row_bound == 0.0 {
        return Ok(0.0);
    }
    let shift = 0.5 * row_bound;

    let apply = |v: &[f64], out: &mut [f64]| {
        for (i, row) in entries.iter().enumerate() {
            out[i] = row.iter().map(|&(j, w)| w * v[j]).sum();
        }
    };

    let mut v: Vec<f64> = (0..q).map(|i| 1.0 + 0.01 * ((i * 7919 % 101) as f64 / 101.0)).collect();
    normalize(&mut v);
    let mut bv = vec![0.0; q];
    for _ in 0..max_iter {
        apply(&v, &mut bv);
        let lambda: f64 = v.iter().zip(&bv).map(|(a, b)| a * b).sum();
        let residual = v
            .iter()
            .zip(&bv)
            .map(|(x, y)| (y - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= rel_tol * lambda.abs() {
            return Ok(lambda);
        }
        for (x, y) in v.iter_mut().zip(&bv) {
            *x = y + shift * *x;
        }
        normalize(&mut v);
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {max_iter} iterations"
    )))
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}
