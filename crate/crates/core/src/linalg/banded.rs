use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Hermitian matrix with `bw` sub-diagonals, lower band stored row by row.
#[derive(Debug, Clone)]
pub struct BandedHermitian<T: Scalar> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedHermitian<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Entry `(i, j)` of the full matrix (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> T {
        if j <= i {
            if i - j > self.bw {
                T::zero()
            } else {
                self.data[self.idx(i, j)]
            }
        } else {
            self.get(j, i).conj()
        }
    }

    /// Adds `v` to entry `(i, j)` and `conj(v)` to `(j, i)`. Diagonal entries
    /// must be real.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c, v) = if j <= i { (i, j, v) } else { (j, i, v.conj()) };
        assert!(r - c <= self.bw, "entry ({r}, {c}) outside bandwidth {}", self.bw);
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (r, c, v) = if j <= i { (i, j, v) } else { (j, i, v.conj()) };
        assert!(r - c <= self.bw, "entry ({r}, {c}) outside bandwidth {}", self.bw);
        let k = self.idx(r, c);
        self.data[k] = v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[self.idx(i, j0)..=self.idx(i, i)];
            let mut acc = T::zero();
            for (off, a) in row.iter().enumerate() {
                let j = j0 + off;
                acc += *a * x[j];
                if j != i {
                    y[j] += a.conj() * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// Largest absolute deviation from Hermitian symmetry of the stored
    /// diagonal (off-diagonal symmetry holds by construction).
    pub fn diagonal_imaginary_defect(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let d = self.data[self.idx(i, i)];
                (d - d.conj()).norm_sqr().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Cholesky factor of `A - shift·I`; fails with the offending pivot when
    /// the shifted matrix is not positive definite.
    pub fn cholesky(&self, shift: f64) -> Result<BandCholesky<T>> {
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..self.n {
            let d = self.idx(i, i);
            l[d] -= T::from_real(shift);
        }
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                // Σ_{k0 <= k < j} L_ik conj(L_jk)
                let mut s = l[i * w + (j + bw - i)];
                if k0 < j {
                    let ri = &l[i * w + (k0 + bw - i)..i * w + (j + bw - i)];
                    let rj = &l[j * w + (k0 + bw - j)..j * w + bw];
                    for (a, b) in ri.iter().zip(rj) {
                        s -= *a * b.conj();
                    }
                }
                if j < i {
                    let ljj = l[j * w + bw].re();
                    l[i * w + (j + bw - i)] = s.scale(1.0 / ljj);
                } else {
                    let pivot = s.re();
                    if !(pivot > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot });
                    }
                    l[i * w + bw] = T::from_real(pivot.sqrt());
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bw,
            data: l,
        })
    }
}

/// Lower-triangular band factor `L` with `A - σI = L L^H`.
#[derive(Debug, Clone)]
pub struct BandCholesky<T: Scalar> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandCholesky<T> {
    /// Overwrites `b` with `(L L^H)^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let w = self.bw + 1;
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let row = &self.data[i * w + (j0 + bw - i)..i * w + bw];
            let mut s = b[i];
            for (a, y) in row.iter().zip(&b[j0..i]) {
                s -= *a * *y;
            }
            b[i] = s.scale(1.0 / self.data[i * w + bw].re());
        }
        for i in (0..self.n).rev() {
            let xi = b[i].scale(1.0 / self.data[i * w + bw].re());
            b[i] = xi;
            let j0 = i.saturating_sub(bw);
            let row = &self.data[i * w + (j0 + bw - i)..i * w + bw];
            for (a, y) in row.iter().zip(&mut b[j0..i]) {
                *y -= a.conj() * xi;
            }
        }
    }

    /// `Π L_ii²`, i.e. `det(A - σI)`, as a logarithm.
    pub fn log_det(&self) -> f64 {
        let w = self.bw + 1;
        (0..self.n)
            .map(|i| 2.0 * self.data[i * w + self.bw].re().ln())
            .sum()
    }
}
