//! Internal Hamiltonian application kernels shared by the engines.
//!
//! Lattice Hamiltonians here are real symmetric. Tridiagonal ones (the
//! common case: nearest-neighbor hopping plus a site ramp) get dedicated
//! O(N) matrix-vector and O(N^2) commutator paths; anything denser falls
//! back to general matrix products.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) enum HamOp {
    Tri { diag: Vec<f64>, hop: Vec<f64> },
    Dense(Array2<C64>),
}

impl HamOp {
    pub fn new(h: &Array2<f64>) -> Result<Self> {
        let (rows, cols) = h.dim();
        if rows != cols || rows == 0 {
            return Err(Error::InvalidSpec(format!(
                "Hamiltonian must be square and nonempty, got {rows}x{cols}"
            )));
        }
        for ((i, j), &v) in h.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "Hamiltonian entry ({i},{j}) is not finite"
                )));
            }
            // Exact symmetry, not approximate: engines rely on Hermiticity
            // to preserve norm and trace, and a symmetric builder costs
            // nothing. Callers with roundoff-asymmetric matrices must
            // symmetrize before handing them over.
            if h[[j, i]] != v {
                return Err(Error::InvalidSpec(format!(
                    "Hamiltonian is not symmetric at ({i},{j})"
                )));
            }
        }
        let tridiagonal = h
            .indexed_iter()
            .all(|((i, j), &v)| i.abs_diff(j) <= 1 || v == 0.0);
        if tridiagonal {
            let n = rows;
            let diag = (0..n).map(|i| h[[i, i]]).collect();
            let hop = (0..n - 1).map(|i| h[[i, i + 1]]).collect();
            Ok(HamOp::Tri { diag, hop })
        } else {
            Ok(HamOp::Dense(h.mapv(|v| C64::new(v, 0.0))))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            HamOp::Tri { diag, .. } => diag.len(),
            HamOp::Dense(h) => h.nrows(),
        }
    }

    /// Largest Gershgorin disk radius + center magnitude; cheap spectral
    /// bound used for step-size selection.
    pub fn gershgorin(&self) -> f64 {
        match self {
            HamOp::Tri { diag, hop } => {
                let n = diag.len();
                (0..n)
                    .map(|i| {
                        let left = if i > 0 { hop[i - 1].abs() } else { 0.0 };
                        let right = if i + 1 < n { hop[i].abs() } else { 0.0 };
                        diag[i].abs() + left + right
                    })
                    .fold(0.0, f64::max)
            }
            HamOp::Dense(h) => {
                let n = h.nrows();
                (0..n)
                    .map(|i| (0..n).map(|j| h[[i, j]].norm()).sum())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// out = H x.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        match self {
            HamOp::Tri { diag, hop } => {
                let n = diag.len();
                for i in 0..n {
                    let mut acc = x[i] * diag[i];
                    if i > 0 {
                        acc += x[i - 1] * hop[i - 1];
                    }
                    if i + 1 < n {
                        acc += x[i + 1] * hop[i];
                    }
                    out[i] = acc;
                }
            }
            HamOp::Dense(h) => {
                let n = h.nrows();
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += h[[i, j]] * x[j];
                    }
                    out[i] = acc;
                }
            }
        }
    }

    /// out = (H + diag(extra)) x; the instantaneous-noise Hamiltonian.
    pub fn apply_with_diag(&self, x: &[C64], extra: &[f64], out: &mut [C64]) {
        self.apply(x, out);
        for i in 0..out.len() {
            out[i] += x[i] * extra[i];
        }
    }

    /// out = H rho - rho H. `rho` and `out` are standard-layout N x N.
    pub fn commutator_into(&self, rho: &Array2<C64>, out: &mut Array2<C64>) {
        match self {
            HamOp::Tri { diag, hop } => {
                let n = diag.len();
                let r = rho.as_slice().expect("rho must be standard layout");
                let o = out.as_slice_mut().expect("out must be standard layout");
                for i in 0..n {
                    let row = i * n;
                    let up = row.wrapping_sub(n);
                    let down = row + n;
                    for j in 0..n {
                        let mut acc = r[row + j] * (diag[i] - diag[j]);
                        if i > 0 {
                            acc += r[up + j] * hop[i - 1];
                        }
                        if i + 1 < n {
                            acc += r[down + j] * hop[i];
                        }
                        if j > 0 {
                            acc -= r[row + j - 1] * hop[j - 1];
                        }
                        if j + 1 < n {
                            acc -= r[row + j + 1] * hop[j];
                        }
                        o[row + j] = acc;
                    }
                }
            }
            HamOp::Dense(h) => {
                out.assign(&(h.dot(rho) - rho.dot(h)));
            }
        }
    }
}

/// Number of sites counted as "boundary" for leakage monitoring: the top
/// tenth of the lattice, at least one site.
pub(crate) fn boundary_site_count(n: usize) -> usize {
    (n / 10).max(1)
}

/// Total population in the boundary region. The lattice truncates a
/// semi-infinite system, so anything here signals truncation error.
pub(crate) fn boundary_leakage(populations: &[f64]) -> f64 {
    let n = populations.len();
    let b = boundary_site_count(n);
    populations[n - b..].iter().sum()
}
