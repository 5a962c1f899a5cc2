//! Minimal symmetric sparse matrix support: triplet assembly into CSR and
//! a conjugate-gradient solver.

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Converts (row, col, value) triplets into CSR, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![0.0; triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let k = cursor[r];
            col_idx[k] = c;
            values[k] = v;
            cursor[r] += 1;
        }
        // sort each row and merge duplicates
        let mut row_ptr = vec![0usize; n + 1];
        let mut out_col = Vec::with_capacity(col_idx.len());
        let mut out_val = Vec::with_capacity(values.len());
        for r in 0..n {
            let (lo, hi) = (counts[r], counts[r + 1]);
            let mut row: Vec<(usize, f64)> = col_idx[lo..hi]
                .iter()
                .copied()
                .zip(values[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if out_col.len() > row_ptr[r] && *out_col.last().unwrap() == c {
                    *out_val.last_mut().unwrap() += v;
                } else {
                    out_col.push(c);
                    out_val.push(v);
                }
            }
            row_ptr[r + 1] = out_col.len();
        }
        Csr {
            n,
            row_ptr,
            col_idx: out_col,
            values: out_val,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for symmetric positive definite systems. Returns the
/// iteration count on convergence of the relative residual below `tol`.
pub fn cg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Option<usize> {
    let n = a.n;
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    for iter in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            return Some(iter);
        }
        a.mul_vec(&p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rs.sqrt() <= tol * b_norm {
        Some(max_iter)
    } else {
        None
    }
}
