//! Dense exact linear algebra over a [`FieldCtx`].
//!
//! Everything here is Gaussian elimination in one costume or another; the
//! repair engines lean on [`Factored`] to reuse one elimination across many
//! right-hand sides.

use super::{FieldCtx, FieldElement, FieldError};

/// Dense row-major matrix of field elements.
#[derive(Clone, Debug)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zero(ctx: &FieldCtx, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ctx.zero(); rows * cols],
        }
    }

    pub fn identity(ctx: &FieldCtx, n: usize) -> Self {
        let mut m = Self::zero(ctx, n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &FieldElement {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, ctx: &FieldCtx, x: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut acc = ctx.zero();
                for c in 0..self.cols {
                    let term = ctx.mul(self.get(r, c), &x[c]);
                    acc = ctx.add(&acc, &term);
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, ctx: &FieldCtx, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zero(ctx, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if ctx.is_zero(a) {
                    continue;
                }
                for c in 0..other.cols {
                    let term = ctx.mul(a, other.get(k, c));
                    let cur = ctx.add(out.get(r, c), &term);
                    out.set(r, c, cur);
                }
            }
        }
        out
    }
}

/// Solves A x = y exactly for a rectangular A with unique solution. Reports
/// the true rank when the system is underdetermined, and inconsistency when
/// no solution exists.
pub fn solve_linear(
    ctx: &FieldCtx,
    a: &Matrix,
    rhs: &[FieldElement],
) -> Result<Vec<FieldElement>, FieldError> {
    assert_eq!(rhs.len(), a.rows, "rhs length must match row count");
    let rows = a.rows;
    let cols = a.cols;
    let mut m = a.clone();
    let mut b = rhs.to_vec();
    // pivot_of_col[c] = row holding the pivot for column c
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| !ctx.is_zero(m.get(r, col))) else {
            continue;
        };
        if pr != rank {
            for c in 0..cols {
                let tmp = m.get(pr, c).clone();
                m.set(pr, c, m.get(rank, c).clone());
                m.set(rank, c, tmp);
            }
            b.swap(pr, rank);
        }
        let pinv = ctx.inv(m.get(rank, col)).expect("pivot is nonzero");
        for r in (rank + 1)..rows {
            if ctx.is_zero(m.get(r, col)) {
                continue;
            }
            let f = ctx.mul(m.get(r, col), &pinv);
            for c in col..cols {
                let term = ctx.mul(&f, m.get(rank, c));
                let v = ctx.sub(m.get(r, c), &term);
                m.set(r, c, v);
            }
            let term = ctx.mul(&f, &b[rank]);
            b[r] = ctx.sub(&b[r], &term);
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }
    for r in rank..rows {
        if !ctx.is_zero(&b[r]) {
            return Err(FieldError::Inconsistent);
        }
    }
    if rank < cols {
        return Err(FieldError::Underdetermined {
            rank,
            unknowns: cols,
        });
    }
    // Back-substitution; every column has a pivot, in column order.
    let mut x = vec![ctx.zero(); cols];
    for col in (0..cols).rev() {
        let r = pivot_of_col[col].expect("full column rank");
        let mut acc = b[r].clone();
        for c in (col + 1)..cols {
            let term = ctx.mul(m.get(r, c), &x[c]);
            acc = ctx.sub(&acc, &term);
        }
        let pinv = ctx.inv(m.get(r, col)).expect("pivot is nonzero");
        x[col] = ctx.mul(&acc, &pinv);
    }
    Ok(x)
}

/// Inverts a square matrix by Gauss-Jordan elimination.
pub fn invert(ctx: &FieldCtx, a: &Matrix) -> Result<Matrix, FieldError> {
    assert_eq!(a.rows, a.cols, "invert needs a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = Matrix::identity(ctx, n);
    for col in 0..n {
        let Some(pr) = (col..n).find(|&r| !ctx.is_zero(m.get(r, col))) else {
            // Count the remaining independent columns for the rank report.
            let rank = col + residual_rank(ctx, &m, col);
            return Err(FieldError::Singular { rank });
        };
        if pr != col {
            for c in 0..n {
                let tmp = m.get(pr, c).clone();
                m.set(pr, c, m.get(col, c).clone());
                m.set(col, c, tmp);
                let tmp = inv.get(pr, c).clone();
                inv.set(pr, c, inv.get(col, c).clone());
                inv.set(col, c, tmp);
            }
        }
        let pinv = ctx.inv(m.get(col, col)).expect("pivot is nonzero");
        for c in 0..n {
            let v = ctx.mul(m.get(col, c), &pinv);
            m.set(col, c, v);
            let v = ctx.mul(inv.get(col, c), &pinv);
            inv.set(col, c, v);
        }
        for r in 0..n {
            if r == col || ctx.is_zero(m.get(r, col)) {
                continue;
            }
            let f = m.get(r, col).clone();
            for c in 0..n {
                let term = ctx.mul(&f, m.get(col, c));
                let v = ctx.sub(m.get(r, c), &term);
                m.set(r, c, v);
                let term = ctx.mul(&f, inv.get(col, c));
                let v = ctx.sub(inv.get(r, c), &term);
                inv.set(r, c, v);
            }
        }
    }
    Ok(inv)
}

/// Rank of the submatrix below and right of the stalled pivot position.
fn residual_rank(ctx: &FieldCtx, m: &Matrix, from: usize) -> usize {
    let mut work = m.clone();
    let mut rank = 0;
    let mut row = from;
    for col in (from + 1)..work.cols {
        let Some(pr) = (row..work.rows).find(|&r| !ctx.is_zero(work.get(r, col))) else {
            continue;
        };
        for c in 0..work.cols {
            let tmp = work.get(pr, c).clone();
            work.set(pr, c, work.get(row, c).clone());
            work.set(row, c, tmp);
        }
        let pinv = ctx.inv(work.get(row, col)).expect("pivot is nonzero");
        for r in (row + 1)..work.rows {
            if ctx.is_zero(work.get(r, col)) {
                continue;
            }
            let f = ctx.mul(work.get(r, col), &pinv);
            for c in col..work.cols {
                let term = ctx.mul(&f, work.get(row, c));
                let v = ctx.sub(work.get(r, c), &term);
                work.set(r, c, v);
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// LU factorization with partial pivoting, for solving many right-hand sides
/// against one square matrix.
#[derive(Debug)]
pub struct Factored {
    n: usize,
    lu: Matrix,
    perm: Vec<usize>,
}

pub fn factor(ctx: &FieldCtx, a: &Matrix) -> Result<Factored, FieldError> {
    assert_eq!(a.rows, a.cols, "factor needs a square matrix");
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let Some(pr) = (col..n).find(|&r| !ctx.is_zero(lu.get(r, col))) else {
            let rank = col + residual_rank(ctx, &lu, col);
            return Err(FieldError::Singular { rank });
        };
        if pr != col {
            for c in 0..n {
                let tmp = lu.get(pr, c).clone();
                lu.set(pr, c, lu.get(col, c).clone());
                lu.set(col, c, tmp);
            }
            perm.swap(pr, col);
        }
        let pinv = ctx.inv(lu.get(col, col)).expect("pivot is nonzero");
        for r in (col + 1)..n {
            if ctx.is_zero(lu.get(r, col)) {
                continue;
            }
            let f = ctx.mul(lu.get(r, col), &pinv);
            lu.set(r, col, f.clone());
            for c in (col + 1)..n {
                let term = ctx.mul(&f, lu.get(col, c));
                let v = ctx.sub(lu.get(r, c), &term);
                lu.set(r, c, v);
            }
        }
    }
    Ok(Factored { n, lu, perm })
}

impl Factored {
    pub fn solve(&self, ctx: &FieldCtx, rhs: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        // Forward substitution on the permuted rhs (L has unit diagonal).
        let mut y: Vec<FieldElement> = (0..n).map(|i| rhs[self.perm[i]].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let term = ctx.mul(self.lu.get(i, j), &y[j]);
                y[i] = ctx.sub(&y[i], &term);
            }
        }
        // Back substitution through U.
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let term = ctx.mul(self.lu.get(i, j), &y[j]);
                y[i] = ctx.sub(&y[i], &term);
            }
            let d = ctx.inv(self.lu.get(i, i)).expect("factor kept pivots nonzero");
            y[i] = ctx.mul(&y[i], &d);
        }
        y
    }
}
