//! Test-only helpers: an independent dense GP oracle.

#![allow(dead_code)]

/// Squared-exponential kernel written out directly.
pub fn se(a: &[f64], b: &[f64], sv: f64, ls: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..a.len() {
        let d = (a[k] - b[k]) / ls[k];
        r2 += d * d;
    }
    sv * (-0.5 * r2).exp()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        let pivot_row = a[col].clone();
        for (row, r) in a.iter_mut().enumerate() {
            let f = r[col];
            if row != col && f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Posterior mean and covariance from the textbook formulas with an explicit inverse.
pub fn dense_posterior(
    xs: &[Vec<f64>],
    ys: &[f64],
    noise: f64,
    sv: f64,
    ls: &[f64],
    prior_mean: f64,
    test: &[Vec<f64>],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = xs.len();
    let m = test.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            gram[i][j] = se(&xs[i], &xs[j], sv, ls) + if i == j { noise * noise } else { 0.0 };
        }
    }
    let inv = invert(&gram);
    let cross: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| se(&xs[i], &test[j], sv, ls)).collect())
        .collect();
    let mut mean = vec![prior_mean; m];
    for j in 0..m {
        for i in 0..n {
            for k in 0..n {
                mean[j] += cross[i][j] * inv[i][k] * (ys[k] - prior_mean);
            }
        }
    }
    let mut cov = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut c = se(&test[a], &test[b], sv, ls);
            for i in 0..n {
                for k in 0..n {
                    c -= cross[i][a] * inv[i][k] * cross[k][b];
                }
            }
            cov[a][b] = c;
        }
    }
    (mean, cov)
}

pub fn rel_norm_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
