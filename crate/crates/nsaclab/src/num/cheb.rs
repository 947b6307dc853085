//! Chebyshev collocation on an interval: Gauss-Lobatto nodes, differentiation
//! matrices and barycentric interpolation. Used by the boundary-value solvers
//! for the transition-layer ODEs.

use nalgebra::DMatrix;

/// Chebyshev-Gauss-Lobatto nodes mapped to `[a, b]`, ordered increasing.
pub fn lobatto_nodes(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|j| {
            let t = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            // t runs 1 -> -1; flip so the output is increasing.
            0.5 * (a + b) - 0.5 * (b - a) * t
        })
        .collect()
}

/// First-order spectral differentiation matrix on the nodes of
/// [`lobatto_nodes`] (standard Trefethen construction with the
/// negative-sum trick for the diagonal).
pub fn diff_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let c = |j: usize| -> f64 {
        if j == 0 || j == n - 1 {
            2.0
        } else {
            1.0
        }
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / (nodes[i] - nodes[j]);
            }
        }
    }
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                row_sum += d[(i, j)];
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Barycentric weights for Chebyshev-Gauss-Lobatto nodes (increasing order).
fn bary_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                w *= 0.5;
            }
            w
        })
        .collect()
}

/// Barycentric evaluation of the interpolant through `(nodes, values)` at `x`.
pub fn bary_eval(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    let w = bary_weights(n);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let dx = x - nodes[j];
        if dx.abs() < 1e-14 {
            return values[j];
        }
        let t = w[j] / dx;
        num += t * values[j];
        den += t;
    }
    num / den
}

/// Clenshaw-Curtis quadrature weights for the Lobatto nodes on `[a, b]`
/// (increasing node order).
pub fn clenshaw_curtis_weights(n: usize, a: f64, b: f64) -> Vec<f64> {
    let m = n - 1;
    let mut w = vec![0.0; n];
    for j in 0..n {
        let theta = std::f64::consts::PI * j as f64 / m as f64;
        let mut s = 1.0;
        let kmax = m / 2;
        for k in 1..=kmax {
            let factor = if 2 * k == m { 1.0 } else { 2.0 };
            s -= factor * (2.0 * k as f64 * theta).cos() / (4.0 * k.pow(2) as f64 - 1.0);
        }
        let cj = if j == 0 || j == m { 1.0 } else { 2.0 };
        w[j] = cj * s / m as f64;
    }
    // Nodes were flipped to increasing order; weights are symmetric anyway.
    let scale = 0.5 * (b - a);
    w.iter_mut().for_each(|x| *x *= scale);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_polynomials_exactly() {
        let nodes = lobatto_nodes(12, -1.0, 2.0);
        let d = diff_matrix(&nodes);
        let vals: Vec<f64> = nodes.iter().map(|&x| x.powi(5) - 2.0 * x).collect();
        let v = nalgebra::DVector::from_vec(vals);
        let dv = &d * &v;
        for (i, &x) in nodes.iter().enumerate() {
            let exact = 5.0 * x.powi(4) - 2.0;
            assert!((dv[i] - exact).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn barycentric_interpolates_smooth_function() {
        let nodes = lobatto_nodes(48, -3.0, 3.0);
        let vals: Vec<f64> = nodes.iter().map(|&x| x.tanh()).collect();
        for &x in &[-2.3, -0.11, 0.0, 1.77] {
            // interpolation error of tanh at 48 nodes is ~1e-11
            assert!((bary_eval(&nodes, &vals, x) - x.tanh()).abs() < 1e-9);
        }
    }

    #[test]
    fn clenshaw_curtis_integrates() {
        let n = 33;
        let nodes = lobatto_nodes(n, 0.0, std::f64::consts::PI);
        let w = clenshaw_curtis_weights(n, 0.0, std::f64::consts::PI);
        let integral: f64 = nodes.iter().zip(&w).map(|(&x, &wi)| x.sin() * wi).sum();
        assert!((integral - 2.0).abs() < 1e-12);
    }
}
