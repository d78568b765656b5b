//! Dense kernels: linear solves, spectral-radius bounds for nonnegative
//! matrices, Neumann sums and limits of row-stochastic powers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{period, strongly_connected_components};

pub type DenseMatrix = DMatrix<f64>;

/// `||AX - B||_inf <= SOLVE_RESIDUAL_TOL * (1 + ||B||_inf)` for every solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
pub const POWER_ITERATION_TOL: f64 = 1e-10;
pub const POWER_ITERATION_MAX_ITER: usize = 100_000;
pub const NEUMANN_TOL: f64 = 1e-10;

/// Maximum absolute row sum.
pub fn inf_norm(m: &DenseMatrix) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves `AX = B` by LU with partial pivoting and one refinement step.
pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("A is {}x{}", a.nrows(), a.ncols())));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!("A has {} rows, B has {}", a.nrows(), b.nrows())));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(b.clone());
    }
    let scale = a.amax();
    if scale == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let lu = a.clone().lu();
    let pivot_floor = n as f64 * f64::EPSILON * scale;
    if lu.u().diagonal().iter().any(|d| d.abs() <= pivot_floor) {
        return Err(Error::SingularMatrix);
    }
    let mut x = lu.solve(b).ok_or(Error::SingularMatrix)?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let residual = inf_norm(&(a * &x - b));
    if !(residual <= SOLVE_RESIDUAL_TOL * (1.0 + inf_norm(b))) {
        return Err(Error::SingularMatrix);
    }
    Ok(x)
}

pub fn solve_vec(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let x = solve(a, &DenseMatrix::from_column_slice(b.len(), 1, b))?;
    Ok(x.column(0).iter().copied().collect())
}

fn sparsity(m: &DenseMatrix) -> Vec<Vec<usize>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).collect())
        .collect()
}

/// Upper estimate of the spectral radius of a nonnegative square matrix.
///
/// The radius is the largest over the irreducible diagonal blocks. Each block
/// is shifted by the identity (which makes it primitive) and iterated from
/// the all-ones vector until the Collatz-Wielandt bracket
/// `min (Ax)_i/x_i <= rho + 1 <= max (Ax)_i/x_i` is narrower than `tol`.
pub fn spectral_radius_bound(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("M is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Precondition("spectral_radius_bound needs a finite nonnegative matrix".into()));
    }
    let mut rho: f64 = 0.0;
    for block in strongly_connected_components(&sparsity(m)) {
        if block.len() == 1 {
            rho = rho.max(m[(block[0], block[0])]);
            continue;
        }
        let k = block.len();
        let a = DenseMatrix::from_fn(k, k, |i, j| {
            m[(block[i], block[j])] + if i == j { 1.0 } else { 0.0 }
        });
        let mut x = nalgebra::DVector::from_element(k, 1.0);
        let mut converged = None;
        for _ in 0..max_iter {
            let y = &a * &x;
            let (lo, hi) = y
                .iter()
                .zip(x.iter())
                .map(|(yi, xi)| yi / xi)
                .fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
            if hi - lo <= tol {
                converged = Some(hi - 1.0);
                break;
            }
            x = &y / y.max();
        }
        rho = rho.max(converged.ok_or(Error::NoConvergence(max_iter))?);
    }
    Ok(rho.max(0.0))
}

/// `sum_k M^k`, truncated once the remainder is provably below `tol` in the
/// infinity norm. Partial sums are doubled (`S_{2K+1} = S_K + M^{K+1} S_K`).
pub fn neumann_sum(m: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("M is {}x{}", m.nrows(), m.ncols())));
    }
    let rho = spectral_radius_bound(&m.abs(), POWER_ITERATION_TOL, POWER_ITERATION_MAX_ITER)?;
    if rho >= 1.0 {
        return Err(Error::SpectralRadius(rho));
    }
    let n = m.nrows();
    let mut sum = DenseMatrix::identity(n, n);
    let mut power = m.clone();
    for _ in 0..64 {
        let p = inf_norm(&power);
        // (I - M)^{-1} - S_K = M^{K+1} (I - M)^{-1}, and
        // ||(I - M)^{-1}|| <= ||S_K|| / (1 - ||M^{K+1}||)
        if p < 1.0 && p * inf_norm(&sum) / (1.0 - p) <= tol {
            return Ok(sum);
        }
        sum += &power * &sum;
        power = &power * &power;
        if !power.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence(64))
}

/// `lim_k W^k` for a row-stochastic `W`, computed structurally.
///
/// Closed classes of the chain (the iSCCs of the opinion digraph) contribute
/// their stationary distribution; every other row mixes those distributions
/// with its absorption probabilities. Fails with [`Error::PeriodicIscc`] when
/// a closed class is periodic, since the powers then oscillate.
pub fn stochastic_power_limit(w: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    if !w.is_square() {
        return Err(Error::Dimension(format!("W is {}x{}", w.nrows(), w.ncols())));
    }
    let n = w.nrows();
    for (i, row) in w.row_iter().enumerate() {
        if row.iter().any(|&x| x < 0.0) || (row.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::NotRowStochastic { row: i, sum: row.sum() });
        }
    }
    // chain moves from i to j with probability w_ij
    let adjacency = sparsity(w);
    let mut closed: Vec<Vec<usize>> = strongly_connected_components(&adjacency)
        .into_iter()
        .filter(|c| c.iter().all(|&i| adjacency[i].iter().all(|j| c.contains(j))))
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    closed.sort_unstable_by_key(|c| c[0]);

    let periodic: Vec<Vec<usize>> = closed
        .iter()
        .filter(|c| period(&adjacency, c) != Some(1))
        .cloned()
        .collect();
    if !periodic.is_empty() {
        return Err(Error::PeriodicIscc(periodic));
    }

    let mut class_of = vec![usize::MAX; n];
    for (k, c) in closed.iter().enumerate() {
        for &i in c {
            class_of[i] = k;
        }
    }
    let mut limit = DenseMatrix::zeros(n, n);
    let mut stationary = Vec::with_capacity(closed.len());
    for c in &closed {
        let k = c.len();
        // pi (I - W_C) = 0 with the last equation swapped for sum(pi) = 1
        let mut a = DenseMatrix::from_fn(k, k, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - w[(c[j], c[i])]
        });
        a.row_mut(k - 1).fill(1.0);
        let mut rhs = vec![0.0; k];
        rhs[k - 1] = 1.0;
        let pi = solve_vec(&a, &rhs)?;
        for &i in c {
            for (idx, &j) in c.iter().enumerate() {
                limit[(i, j)] = pi[idx];
            }
        }
        stationary.push(pi);
    }

    let transient: Vec<usize> = (0..n).filter(|&i| class_of[i] == usize::MAX).collect();
    if !transient.is_empty() {
        let t = transient.len();
        let a = DenseMatrix::from_fn(t, t, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - w[(transient[i], transient[j])]
        });
        let b = DenseMatrix::from_fn(t, closed.len(), |i, k| {
            closed[k].iter().map(|&j| w[(transient[i], j)]).sum()
        });
        let absorb = solve(&a, &b)?;
        for (ti, &i) in transient.iter().enumerate() {
            for (k, c) in closed.iter().enumerate() {
                for (idx, &j) in c.iter().enumerate() {
                    limit[(i, j)] = absorb[(ti, k)] * stationary[k][idx];
                }
            }
        }
    }

    let residual = inf_norm(&(w * &limit - &limit));
    if residual > tol {
        return Err(Error::Residual(residual));
    }
    Ok(limit)
}
