//! Central finite-difference stencils for mixed partial derivatives up to
//! total order 4, with order-scaled steps so truncation and round-off stay
//! balanced at 64-bit precision.

use num_complex::Complex64;

/// Default step for a per-variable derivative order (index = order).
pub fn default_step(order: usize) -> f64 {
    match order {
        0 => 0.0,
        1 => 1e-5,
        2 => 1e-4,
        3 => 1e-3,
        4 => 6e-3,
        _ => 2e-2,
    }
}

/// Central-difference stencil (offsets in units of h, weights in 1/h^k).
fn stencil(order: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    match order {
        0 => (vec![0.0], vec![1.0]),
        1 => (vec![-1.0, 1.0], vec![-0.5 / h, 0.5 / h]),
        2 => (vec![-1.0, 0.0, 1.0], vec![1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)]),
        3 => {
            let h3 = h * h * h;
            (
                vec![-2.0, -1.0, 1.0, 2.0],
                vec![-0.5 / h3, 1.0 / h3, -1.0 / h3, 0.5 / h3],
            )
        }
        4 => {
            let h4 = h * h * h * h;
            (
                vec![-2.0, -1.0, 0.0, 1.0, 2.0],
                vec![1.0 / h4, -4.0 / h4, 6.0 / h4, -4.0 / h4, 1.0 / h4],
            )
        }
        _ => panic!("finite differences supported up to order 4 per variable"),
    }
}

/// Mixed partial `d^alpha f` at `z` by a tensor product of central stencils.
/// The step defaults to [`default_step`] of the total order unless `h`
/// overrides it.
pub fn fd_derivative(
    f: &dyn Fn(&[f64]) -> Complex64,
    z: &[f64],
    alpha: &[usize],
    h: Option<f64>,
) -> Complex64 {
    debug_assert_eq!(z.len(), alpha.len());
    let total: usize = alpha.iter().sum();
    if total == 0 {
        return f(z);
    }
    let h = h.unwrap_or_else(|| default_step(total));
    // accumulate the tensor-product stencil recursively over variables
    let stencils: Vec<(Vec<f64>, Vec<f64>)> = alpha.iter().map(|&k| stencil(k, h)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut point = z.to_vec();
    let mut idx = vec![0usize; z.len()];
    'outer: loop {
        let mut w = 1.0;
        for (v, &i) in idx.iter().enumerate() {
            point[v] = z[v] + stencils[v].0[i] * h;
            w *= stencils[v].1[i];
        }
        acc += f(&point) * w;
        for v in (0..z.len()).rev() {
            idx[v] += 1;
            if idx[v] < stencils[v].0.len() {
                continue 'outer;
            }
            idx[v] = 0;
            if v == 0 {
                break 'outer;
            }
        }
    }
    acc
}

/// All multi-indices over `n` variables with total order in `[lo, hi]`.
pub fn multi_indices(n: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(cur: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() - 1 {
            cur[pos] = remaining;
            out.push(cur.clone());
            return;
        }
        for k in 0..=remaining {
            cur[pos] = k;
            rec(cur, pos + 1, remaining - k, out);
        }
    }
    for total in lo..=hi {
        rec(&mut cur, 0, total, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_matches_polynomial_derivatives() {
        // f(x, y) = x^3 y^2
        let f = |z: &[f64]| Complex64::new(z[0].powi(3) * z[1].powi(2), 0.0);
        let z = [1.2f64, -0.7];
        let cases: Vec<(Vec<usize>, f64)> = vec![
            (vec![1, 0], 3.0 * z[0].powi(2) * z[1].powi(2)),
            (vec![0, 2], 2.0 * z[0].powi(3)),
            (vec![2, 1], 6.0 * z[0] * 2.0 * z[1]),
            (vec![3, 1], 6.0 * 2.0 * z[1]),
            (vec![2, 2], 6.0 * z[0] * 2.0),
        ];
        for (alpha, expect) in cases {
            let got = fd_derivative(&f, &z, &alpha, None).re;
            assert!(
                (got - expect).abs() <= 1e-4 * expect.abs().max(1.0),
                "alpha {alpha:?}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn multi_index_count() {
        // n = 2: orders 0..=4 -> 1 + 2 + 3 + 4 + 5 = 15
        assert_eq!(multi_indices(2, 0, 4).len(), 15);
        assert_eq!(multi_indices(4, 2, 2).len(), 10);
    }
}
