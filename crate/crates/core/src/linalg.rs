//! Symmetric tridiagonal matrices and the solvers the P1 forms need.
//!
//! Every matrix assembled on a 1D P1 mesh is symmetric tridiagonal, so the
//! generalized eigenproblem `S x = mu K x` is handled with Sturm counts on
//! `S - mu K` (exact inertia by Sylvester's law) followed by shift-invert
//! iteration for the eigenvector. A dense route through nalgebra serves as
//! an independent check on small systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `a A + b B`.
    pub fn combine(&self, a: f64, other: &SymTridiag, b: f64) -> SymTridiag {
        SymTridiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `D A D` for a diagonal `D`.
    pub fn congruence(&self, d: &[f64]) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(d).map(|(a, s)| a * s * s).collect(),
            off: self
                .off
                .iter()
                .enumerate()
                .map(|(i, a)| a * d[i] * d[i + 1])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }

    /// Number of eigenvalues strictly below `shift` (Sturm sequence).
    pub fn count_below(&self, shift: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.max_abs().max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut pivot = 1.0;
        for i in 0..self.len() {
            let coupling = if i > 0 {
                self.off[i - 1] * self.off[i - 1] / pivot
            } else {
                0.0
            };
            pivot = self.diag[i] - shift - coupling;
            if pivot.abs() < tiny {
                pivot = -tiny;
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Direct solve of a (possibly indefinite) tridiagonal system by Gaussian
/// elimination with partial pivoting.
pub fn solve_tridiagonal(a: &SymTridiag, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::SolveFailed(format!(
            "right-hand side has length {} for a system of size {n}",
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // Rows hold (sub, diag, sup, sup2) after elimination.
    let mut sub: Vec<f64> = std::iter::once(0.0).chain(a.off.iter().copied()).collect();
    let mut dia = a.diag.clone();
    let mut sup: Vec<f64> = a.off.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut sup2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for i in 0..n.saturating_sub(1) {
        if sub[i + 1].abs() > dia[i].abs() {
            // swap rows i and i + 1
            let (d0, s0, t0) = (dia[i], sup[i], sup2[i]);
            dia[i] = sub[i + 1];
            sup[i] = dia[i + 1];
            sup2[i] = sup[i + 1];
            sub[i + 1] = d0;
            dia[i + 1] = s0;
            sup[i + 1] = t0;
            b.swap(i, i + 1);
        }
        if dia[i].abs() <= f64::EPSILON * scale * 1e-6 {
            return Err(Error::Singular);
        }
        let factor = sub[i + 1] / dia[i];
        dia[i + 1] -= factor * sup[i];
        sup[i + 1] -= factor * sup2[i];
        b[i + 1] -= factor * b[i];
        sub[i + 1] = 0.0;
    }
    if dia[n - 1].abs() <= f64::EPSILON * scale * 1e-6 {
        return Err(Error::Singular);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= sup[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= sup2[i] * x[i + 2];
        }
        x[i] = acc / dia[i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ConjugateGradient,
    Direct,
}

/// Jacobi-preconditioned conjugate gradients for an SPD tridiagonal system.
/// The flag reports whether the relative residual reached `tol`.
pub fn pcg(a: &SymTridiag, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats, bool)> {
    let n = a.len();
    if a.diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Singular);
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|d| 1.0 / d).collect();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        let stats = SolveStats {
            method: SolveMethod::ConjugateGradient,
            iterations: 0,
            relative_residual: 0.0,
        };
        return Ok((x, stats, true));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / b_norm;
        if rel <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // true residual, not the recursively updated one
    let ax = a.mul_vec(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>()) / b_norm;
    rel = rel.max(true_rel);
    let stats = SolveStats {
        method: SolveMethod::ConjugateGradient,
        iterations,
        relative_residual: rel,
    };
    Ok((x, stats, rel <= tol))
}

/// Tolerance for symmetric positive definite solves.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Solves an SPD tridiagonal system with preconditioned CG; when CG stalls
/// short of the tolerance the direct elimination result is used instead.
pub fn solve_spd(a: &SymTridiag, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
    let max_iter = (4 * a.len()).max(100);
    let (x, stats, ok) = pcg(a, b, SOLVE_TOLERANCE, max_iter)?;
    if ok {
        return Ok((x, stats));
    }
    let x = solve_tridiagonal(a, b)?;
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let ax = a.mul_vec(&x);
    let rel = norm(&b.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>()) / b_norm;
    Ok((
        x,
        SolveStats {
            method: SolveMethod::Direct,
            iterations: stats.iterations,
            relative_residual: rel,
        },
    ))
}

/// Which end of the pencil spectrum to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Largest,
    Smallest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub bisection_steps: usize,
    pub iterations: usize,
    /// `||S x - mu K x|| / ||K x||`.
    pub residual: f64,
}

/// Rayleigh-quotient tolerance and iteration cap for the pencil solver.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
pub const EIGEN_MAX_ITER: usize = 10_000;

/// Extreme eigenpair of the pencil `S x = mu K x` with `K` SPD.
///
/// The eigenvalue is bracketed by bisection on Sturm counts of
/// `D (S - mu K) D` (`D = diag(K)^{-1/2}`), then refined with shift-invert
/// iteration from the all-ones vector until the Rayleigh quotient settles
/// to `EIGEN_TOLERANCE`.
pub fn pencil_extreme(s: &SymTridiag, k: &SymTridiag, which: Extreme) -> Result<EigenPair> {
    let n = k.len();
    if s.len() != n || n == 0 {
        return Err(Error::InvalidArgument("pencil dimensions differ".into()));
    }
    if k.diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Singular);
    }
    let sign = match which {
        Extreme::Largest => 1.0,
        Extreme::Smallest => -1.0,
    };
    let scaling: Vec<f64> = k.diag.iter().map(|d| d.sqrt().recip()).collect();
    let ks = k.congruence(&scaling);
    let ss = s.congruence(&scaling).combine(sign, &SymTridiag::zeros(n), 0.0);

    if ks.count_below(0.0) > 0 {
        return Err(Error::Singular);
    }
    let s_scale = ss.max_abs();
    let ones = vec![1.0; n];
    if s_scale == 0.0 {
        let residual = 0.0;
        return Ok(EigenPair {
            value: 0.0,
            vector: unscale(&ones, &scaling),
            bisection_steps: 0,
            iterations: 0,
            residual,
        });
    }

    // #{mu_i > t} = #negative eigenvalues of t K - S.
    let count_above = |t: f64| ks.combine(t, &ss, -1.0).count_below(0.0);

    let rq = ss.bilinear(&ones, &ones) / ks.bilinear(&ones, &ones);
    let mut lo = rq;
    let mut hi = rq.abs().max(s_scale);
    let mut steps = 0;
    while count_above(hi) > 0 {
        hi *= 2.0;
        steps += 1;
        if !hi.is_finite() || steps > 2000 {
            return Err(Error::EigenNonConvergence {
                iterations: steps,
                estimate: hi,
            });
        }
    }
    if count_above(lo) == 0 {
        // the Rayleigh quotient of the start vector already attains the top
        hi = lo;
    }
    while hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(s_scale * 1e-12) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_above(mid) > 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }

    // Shift slightly above the top eigenvalue so the system stays regular.
    let gap = 1e-9 * hi.abs().max(s_scale * 1e-6);
    let mut shift = hi + gap;
    let mut x = ones.clone();
    normalize_k(&mut x, &ks);
    let mut value = ss.bilinear(&x, &x);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < EIGEN_MAX_ITER {
        let shifted = ss.combine(1.0, &ks, -shift);
        let rhs = ks.mul_vec(&x);
        let y = match solve_tridiagonal(&shifted, &rhs) {
            Ok(y) => y,
            Err(Error::Singular) => {
                shift += gap;
                continue;
            }
            Err(e) => return Err(e),
        };
        x = y;
        normalize_k(&mut x, &ks);
        iterations += 1;
        let next = ss.bilinear(&x, &x);
        residual = pencil_residual(&ss, &ks, &x, next);
        let settled = (next - value).abs() <= EIGEN_TOLERANCE * next.abs().max(s_scale * 1e-12);
        value = next;
        if settled && residual <= EIGEN_TOLERANCE {
            break;
        }
    }
    if !(residual <= EIGEN_TOLERANCE) {
        return Err(Error::EigenNonConvergence {
            iterations,
            estimate: sign * value,
        });
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let vector = unscale(&x, &scaling);
    let value = s.bilinear(&vector, &vector) / k.bilinear(&vector, &vector);
    Ok(EigenPair {
        value,
        vector,
        bisection_steps: steps,
        iterations,
        residual,
    })
}

fn normalize_k(x: &mut [f64], k: &SymTridiag) {
    let nrm = k.bilinear(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
}

fn unscale(x: &[f64], scaling: &[f64]) -> Vec<f64> {
    x.iter().zip(scaling).map(|(v, d)| v * d).collect()
}

fn pencil_residual(s: &SymTridiag, k: &SymTridiag, x: &[f64], mu: f64) -> f64 {
    let sx = s.mul_vec(x);
    let kx = k.mul_vec(x);
    let r: Vec<f64> = sx.iter().zip(&kx).map(|(a, b)| a - mu * b).collect();
    norm(&r) / norm(&kx).max(f64::MIN_POSITIVE)
}

/// Largest size accepted by the dense routines.
pub const DENSE_LIMIT: usize = 200;

/// All pencil eigenvalues, ascending, through a dense Cholesky reduction.
pub fn dense_pencil_eigenvalues(s: &SymTridiag, k: &SymTridiag) -> Result<Vec<f64>> {
    let n = k.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense route limited to {DENSE_LIMIT} unknowns, got {n}"
        )));
    }
    let chol = k.to_dense().cholesky().ok_or(Error::Singular)?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::Singular)?;
    let c = &l_inv * s.to_dense() * l_inv.transpose();
    let sym = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(values)
}

/// Dense LU solve; reference route for small systems.
pub fn dense_solve(a: &SymTridiag, b: &[f64]) -> Result<Vec<f64>> {
    if a.len() > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense route limited to {DENSE_LIMIT} unknowns, got {}",
            a.len()
        )));
    }
    let x = a
        .to_dense()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or(Error::Singular)?;
    Ok(x.iter().copied().collect())
}
