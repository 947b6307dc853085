//! Local polynomial interpolation on uniform grids.

/// Cubic (4-point, Lagrange) interpolation of `values` sampled at
/// `x_i = x0 + i h`, evaluated at `x`. Clamps the stencil at the ends.
pub fn cubic_uniform(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 4);
    let t = (x - x0) / h;
    let i1 = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
    let base = i1 - 1;
    let s = t - i1 as f64; // in [0,1] away from the ends
    let f = &values[base..base + 4];
    let c0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let c1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let c2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let c3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    c0 * f[0] + c1 * f[1] + c2 * f[2] + c3 * f[3]
}

/// 6-point (quintic Lagrange) interpolation on a uniform grid; order-6
/// accuracy away from the clamped ends.
pub fn quintic_uniform(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 6);
    let t = (x - x0) / h;
    let i1 = (t.floor() as isize).clamp(2, n as isize - 4) as usize;
    let base = i1 - 2;
    let s = t - i1 as f64;
    let f = &values[base..base + 6];
    // Lagrange basis at offsets -2..3
    let mut acc = 0.0;
    for (k, &fk) in f.iter().enumerate() {
        let xk = k as f64 - 2.0;
        let mut w = 1.0;
        for m in 0..6 {
            if m != k {
                let xm = m as f64 - 2.0;
                w *= (s - xm) / (xk - xm);
            }
        }
        acc += w * fk;
    }
    acc
}

/// Periodic cubic interpolation: `values[i]` at `x_i = i h` on a ring of
/// period `n*h`.
pub fn cubic_periodic(values: &[f64], h: f64, x: f64) -> f64 {
    let n = values.len() as isize;
    let period = n as f64 * h;
    let mut t = (x / h) % n as f64;
    if t < 0.0 {
        t += n as f64;
    }
    let i1 = t.floor() as isize;
    let s = t - i1 as f64;
    let idx = |k: isize| -> f64 {
        let mut i = (i1 + k) % n;
        if i < 0 {
            i += n;
        }
        values[i as usize]
    };
    let _ = period;
    let f = [idx(-1), idx(0), idx(1), idx(2)];
    let c0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let c1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let c2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let c3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    c0 * f[0] + c1 * f[1] + c2 * f[2] + c3 * f[3]
}

/// Separable bicubic interpolation on a periodic `nx x ny` grid with spacings
/// `hx, hy` (row-major, index `i*ny + j`).
pub fn bicubic_periodic(values: &[f64], nx: usize, ny: usize, hx: f64, hy: f64, x: f64, y: f64) -> f64 {
    let tx = {
        let mut t = (x / hx) % nx as f64;
        if t < 0.0 {
            t += nx as f64;
        }
        t
    };
    let i1 = tx.floor() as isize;
    let sx = tx - i1 as f64;
    let wrap = |i: isize, n: usize| -> usize {
        let mut v = i % n as isize;
        if v < 0 {
            v += n as isize;
        }
        v as usize
    };
    let mut rows = [0.0; 4];
    for (r, off) in (-1..=2).enumerate() {
        let i = wrap(i1 + off, nx);
        let row = &values[i * ny..(i + 1) * ny];
        rows[r] = cubic_periodic(row, hy, y);
    }
    let s = sx;
    let c0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let c1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let c2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let c3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    c0 * rows[0] + c1 * rows[1] + c2 * rows[2] + c3 * rows[3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let h = 0.25;
        let x0 = -1.0;
        let f = |x: f64| 2.0 * x.powi(3) - x + 0.5;
        let vals: Vec<f64> = (0..17).map(|i| f(x0 + i as f64 * h)).collect();
        for &x in &[-0.93, 0.0, 0.61, 2.2] {
            assert!((cubic_uniform(&vals, x0, h, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_cubic_fourth_order() {
        let f = |x: f64| (x).sin();
        let mut errs = vec![];
        for &n in &[32usize, 64] {
            let h = 2.0 * std::f64::consts::PI / n as f64;
            let vals: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
            let err = (0..200)
                .map(|k| {
                    let x = k as f64 * 0.031;
                    (cubic_periodic(&vals, h, x) - f(x)).abs()
                })
                .fold(0.0_f64, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }
}
