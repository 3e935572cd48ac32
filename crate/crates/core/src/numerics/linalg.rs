use super::NumericsError;

/// Relative pivot floor below which a matrix is declared not positive definite.
const SPD_PIVOT_TOLERANCE: f64 = 1e-12;

/// Relative residual pivot below which a column counts as collinear with
/// the columns kept before it.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-9;

/// Dense symmetric matrix stored in full row-major form.
///
/// Writes go through [`SymMatrix::set`], which mirrors the entry, so both
/// triangles always agree.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from the lower triangle of `rows`; the upper triangle is ignored.
    pub fn from_lower(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    /// Adds `value` to entry (i, j) and its mirror (once when i == j).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let v = self.get(i, j) + value;
        self.set(i, j, v);
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// Lower Cholesky factor, row-major `n*n`.
    fn cholesky(&self) -> Result<Vec<f64>, NumericsError> {
        let n = self.n;
        let floor = SPD_PIVOT_TOLERANCE * self.max_diagonal();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(l)
    }

    /// Inverse of an SPD matrix via its Cholesky factor.
    pub fn inverse_spd(&self) -> Result<SymMatrix, NumericsError> {
        let n = self.n;
        let l = self.cholesky()?;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[col] = 1.0;
            let x = cholesky_solve(&l, n, &e);
            for row in col..n {
                inv.set(row, col, x[row]);
            }
        }
        Ok(inv)
    }
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    // L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // L' x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solves `a·x = b` for symmetric positive definite `a`.
///
/// Fails with [`NumericsError::NotPositiveDefinite`] when a Cholesky pivot
/// drops to `1e-12` times the largest diagonal entry or below.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if a.dim() != b.len() {
        return Err(NumericsError::DimensionMismatch {
            matrix: a.dim(),
            vector: b.len(),
        });
    }
    let l = a.cholesky()?;
    Ok(cholesky_solve(&l, a.dim(), b))
}

/// Column partition produced by [`pivoted_rank_factor`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankFactor {
    pub kept: Vec<usize>,
    pub omitted: Vec<usize>,
}

/// Greedy in-order Cholesky of the Gram matrix of `columns`.
///
/// Column `j` is kept when its residual pivot, after projecting out the
/// columns already kept, exceeds `1e-9` times its own squared norm. Earlier
/// columns win ties, so of two identical columns the second is dropped.
/// An all-zero column is always omitted.
pub fn pivoted_rank_factor(columns: &[Vec<f64>]) -> RankFactor {
    let p = columns.len();
    let gram = |a: usize, b: usize| -> f64 {
        columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum()
    };

    let mut out = RankFactor::default();
    // rows of L for kept columns, indexed by position in `out.kept`
    let mut l_rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let diag = gram(j, j);
        let mut row = Vec::with_capacity(out.kept.len() + 1);
        for (pos, &k) in out.kept.iter().enumerate() {
            let mut s = gram(j, k);
            for m in 0..pos {
                s -= row[m] * l_rows[pos][m];
            }
            row.push(s / l_rows[pos][pos]);
        }
        let residual = diag - row.iter().map(|v| v * v).sum::<f64>();
        if diag > 0.0 && residual > COLLINEARITY_TOLERANCE * diag {
            row.push(residual.sqrt());
            l_rows.push(row);
            out.kept.push(j);
        } else {
            out.omitted.push(j);
        }
    }
    out
}
