//! Dense exact-rational matrices.
//!
//! Gaussian elimination is performed over the rationals with exact
//! first-nonzero pivoting; there are no tolerances anywhere. Matrices are
//! immutable values and every operation returns a new value.

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("ragged rows: row {row} has {got} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A rows × cols matrix of [`Rational`] entries in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<Rational>,
}

/// Exact solution set of `m·x = v`: one particular solution plus a basis of
/// the kernel of `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<Rational>,
    pub kernel: Vec<Vec<Rational>>,
}

impl QMatrix {
    pub fn new(nrows: usize, ncols: usize, entries: Vec<Rational>) -> Result<Self, MatrixError> {
        if entries.len() != nrows * ncols {
            return Err(MatrixError::EntryCount {
                expected: nrows * ncols,
                got: entries.len(),
            });
        }
        Ok(QMatrix {
            nrows,
            ncols,
            entries,
        })
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        QMatrix {
            nrows,
            ncols,
            entries: vec![Rational::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, MatrixError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(MatrixError::RaggedRows {
                    row: i,
                    expected: ncols,
                    got: r.len(),
                });
            }
        }
        Ok(QMatrix {
            nrows,
            ncols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entry(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.ncols + c]
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.entries.chunks(self.ncols.max(1))
    }

    pub fn transpose(&self) -> QMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.ncols {
            for r in 0..self.nrows {
                entries.push(self.entry(r, c).clone());
            }
        }
        QMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            entries,
        }
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, MatrixError> {
        if v.len() != self.ncols {
            return Err(MatrixError::DimensionMismatch(format!(
                "matrix has {} columns, vector has {} entries",
                self.ncols,
                v.len()
            )));
        }
        Ok((0..self.nrows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Rational>()
            })
            .collect())
    }

    /// Reduced row echelon form together with the pivot column indices.
    /// The rank is the number of pivots.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m: Vec<Vec<Rational>> = (0..self.nrows).map(|r| self.row(r).to_vec()).collect();
        let pivots = rref_in_place(&mut m, self.ncols);
        let out = QMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: m.into_iter().flatten().collect(),
        };
        (out, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis of the right kernel `{x : m·x = 0}`.
    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        kernel_from_rref(&r, &pivots, self.ncols)
    }

    /// Solves `m·x = v` exactly. `Ok(None)` signals that `v` is outside the
    /// column span.
    pub fn solve_affine(&self, rhs: &[Rational]) -> Result<Option<AffineSolution>, MatrixError> {
        if rhs.len() != self.nrows {
            return Err(MatrixError::DimensionMismatch(format!(
                "matrix has {} rows, right-hand side has {} entries",
                self.nrows,
                rhs.len()
            )));
        }
        let mut m: Vec<Vec<Rational>> = (0..self.nrows)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.push(rhs[r].clone());
                row
            })
            .collect();
        let pivots = rref_in_place(&mut m, self.ncols + 1);
        if pivots.contains(&self.ncols) {
            return Ok(None);
        }
        let mut particular = vec![Rational::zero(); self.ncols];
        for (k, &pc) in pivots.iter().enumerate() {
            particular[pc] = m[k][self.ncols].clone();
        }
        // The left block of the augmented rref is the rref of `self` when the
        // system is consistent, so the kernel can be read off directly.
        let left = QMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: m
                .into_iter()
                .flat_map(|row| row.into_iter().take(self.ncols))
                .collect(),
        };
        let kernel = kernel_from_rref(&left, &pivots, self.ncols);
        Ok(Some(AffineSolution { particular, kernel }))
    }
}

fn rref_in_place(m: &mut [Vec<Rational>], ncols: usize) -> Vec<usize> {
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(pr) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].recip();
        for x in m[r][c..].iter_mut() {
            *x *= &inv;
        }
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let factor = std::mem::take(&mut m[i][c]);
                let (pivot_row, target_row) = if i < r {
                    let (lo, hi) = m.split_at_mut(r);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = m.split_at_mut(i);
                    (&lo[r], &mut hi[0])
                };
                for (t, p) in target_row[c + 1..].iter_mut().zip(&pivot_row[c + 1..]) {
                    *t -= &factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn kernel_from_rref(r: &QMatrix, pivots: &[usize], ncols: usize) -> Vec<Vec<Rational>> {
    let mut basis = Vec::new();
    for f in 0..ncols {
        if pivots.contains(&f) {
            continue;
        }
        let mut v = vec![Rational::zero(); ncols];
        v[f] = Rational::one();
        for (k, &pc) in pivots.iter().enumerate() {
            v[pc] = -r.entry(k, f);
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn qi(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn rref_identity_is_fixed() {
        let id = QMatrix::identity(3);
        let (r, pivots) = id.rref();
        assert_eq!(r, id);
        assert_eq!(pivots, vec![0, 1, 2]);
        assert_eq!(id.rank(), 3);
    }

    #[test]
    fn rref_zero_matrix() {
        let z = QMatrix::zero(2, 2);
        let (r, pivots) = z.rref();
        assert_eq!(r, z);
        assert!(pivots.is_empty());
    }

    #[test]
    fn rref_is_idempotent_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let nrows = rng.gen_range(1..5);
            let ncols = rng.gen_range(1..5);
            let entries: Vec<Rational> = (0..nrows * ncols)
                .map(|_| qi(rng.gen_range(-4i64..=4)))
                .collect();
            let m = QMatrix::new(nrows, ncols, entries).unwrap();
            let (r1, p1) = m.rref();
            let (r2, p2) = r1.rref();
            assert_eq!(r1, r2);
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let id = QMatrix::identity(3);
        let v = vec![q(1, 2), qi(-3), qi(0)];
        let sol = id.solve_affine(&v).unwrap().unwrap();
        assert_eq!(sol.particular, v);
        assert!(sol.kernel.is_empty());
    }

    #[test]
    fn solve_underdetermined_row() {
        // [1 1]·x = [2]
        let m = QMatrix::from_rows(vec![vec![qi(1), qi(1)]]).unwrap();
        let sol = m.solve_affine(&[qi(2)]).unwrap().unwrap();
        assert_eq!(sol.particular, vec![qi(2), qi(0)]);
        assert_eq!(sol.kernel.len(), 1);
        // kernel spans (1, -1)
        let k = &sol.kernel[0];
        assert_eq!(&k[0] + &k[1], Rational::zero());
        assert!(!k[0].is_zero());
    }

    #[test]
    fn solve_detects_inconsistent_system() {
        let m = QMatrix::from_rows(vec![vec![qi(1), qi(1)], vec![qi(2), qi(2)]]).unwrap();
        assert!(m.solve_affine(&[qi(1), qi(3)]).unwrap().is_none());
    }

    #[test]
    fn solutions_satisfy_the_system_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 30 {
            let nrows = rng.gen_range(1..5);
            let ncols = rng.gen_range(1..5);
            let entries: Vec<Rational> = (0..nrows * ncols)
                .map(|_| qi(rng.gen_range(-3i64..=3)))
                .collect();
            let m = QMatrix::new(nrows, ncols, entries).unwrap();
            let rhs: Vec<Rational> = (0..nrows).map(|_| qi(rng.gen_range(-3i64..=3))).collect();
            if let Some(sol) = m.solve_affine(&rhs).unwrap() {
                assert_eq!(m.mul_vec(&sol.particular).unwrap(), rhs);
                for k in &sol.kernel {
                    let image = m.mul_vec(k).unwrap();
                    assert!(image.iter().all(Rational::is_zero));
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn transpose_round_trip() {
        let m = QMatrix::from_rows(vec![vec![qi(1), qi(2), qi(3)], vec![qi(4), qi(5), qi(6)]])
            .unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().entry(2, 1), &qi(6));
    }
}
