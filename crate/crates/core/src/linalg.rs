//! Sparse storage and banded direct factorizations.
//!
//! Lexicographically ordered finite-difference operators have bandwidth equal
//! to the product of the interior node counts of all but the slowest axis,
//! so banded Cholesky (SPD systems) and banded LU with partial pivoting
//! (indefinite or nonsymmetric Jacobians) are exact, cheap and deterministic
//! at the grid sizes this crate targets.

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is singular at column {0}")]
    Singular(usize),
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Rows given as `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let start = col.len();
            for (j, v) in row {
                assert!(j < n, "column {j} out of range");
                if col.len() > start && *col.last().unwrap() == j {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()]
            .iter()
            .copied()
            .zip(self.val[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n);
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).collect();
                r.push((i, d[i]));
                r
            })
            .collect();
        CsrMatrix::from_rows(self.n, rows)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).filter(|&(j, _)| j == i).map(|(_, v)| v).sum())
            .collect()
    }

    /// Restriction to the given (sorted, distinct) index set.
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter(|&(j, _)| map[j] != usize::MAX)
                    .map(|(j, v)| (map[j], v))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(keep.len(), rows)
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Lower bound on the spectrum of a symmetric matrix from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d += v;
                    } else {
                        off += v.abs();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}

/// `L L^T` factorization of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // row i stores L[i][i-bw..=i] at offsets 0..=bw
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<BandedCholesky, LinalgError> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let bw = kl.max(ku);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[i * w + (j + bw - i)] += v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = l[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in jlo..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let r = i * w + bw - i;
            let mut s = b[i];
            for k in lo..i {
                s -= self.l[r + k] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * w + bw];
            let lo = i.saturating_sub(bw);
            let r = i * w + bw - i;
            let bi = b[i];
            for k in lo..i {
                b[k] -= self.l[r + k] * bi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Banded LU with partial pivoting (LAPACK `gbtf2` layout, column major).
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ldab
    }

    pub fn factor(a: &CsrMatrix) -> Result<BandedLu, LinalgError> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
            piv: vec![0; n],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                let k = lu.at(i, j);
                lu.ab[k] += v;
            }
        }
        let reach = kl + ku;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = j;
            let mut best = lu.ab[lu.at(j, j)].abs();
            for i in j + 1..=j + km {
                let v = lu.ab[lu.at(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.piv[j] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular(j));
            }
            let cmax = (j + reach).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    let (x, y) = (lu.at(j, c), lu.at(p, c));
                    lu.ab.swap(x, y);
                }
            }
            let d = lu.ab[lu.at(j, j)];
            for i in j + 1..=j + km {
                let k = lu.at(i, j);
                lu.ab[k] /= d;
            }
            for c in j + 1..=cmax {
                let t = lu.ab[lu.at(j, c)];
                if t != 0.0 {
                    for i in j + 1..=j + km {
                        let m = lu.ab[lu.at(i, j)];
                        let k = lu.at(i, c);
                        lu.ab[k] -= m * t;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            for i in j + 1..=j + km {
                b[i] -= self.ab[self.at(i, j)] * bj;
            }
        }
        let reach = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.ab[self.at(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(reach)..j {
                b[i] -= self.ab[self.at(i, j)] * bj;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
