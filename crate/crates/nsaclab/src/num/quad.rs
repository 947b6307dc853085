//! Quadrature on uniform grids.
//!
//! For smooth integrands that decay exponentially toward both ends of the
//! truncated line, the plain trapezoid rule is spectrally accurate
//! (Euler-Maclaurin: all boundary corrections are exponentially small), so it
//! is the workhorse for the profile-type integrals. Cumulative (prefix)
//! integrals use a 4th-order composite Simpson variant.

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Cumulative integral `F_i = int_{x_0}^{x_i} f` on a uniform grid, 4th order.
///
/// Even prefixes use composite Simpson; odd prefixes close with a cubic
/// (Simpson 3/8-style) correction over the last three panels so the order is
/// uniform in `i`.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    // First node: cubic through the first four points (or quadratic if short).
    out[1] = if n >= 4 {
        h / 24.0 * (9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3])
    } else {
        h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2])
    };
    for i in 2..n {
        // Simpson step over [x_{i-2}, x_i] added to the prefix at i-2.
        out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
    }
    // Odd prefixes currently lag by one panel of accuracy; rebuild them from
    // the even neighbor with a 3-point (order-4) half step.
    for i in (1..n).skip(1).step_by(2) {
        if i + 1 < n {
            out[i] = out[i + 1] - h / 12.0 * (5.0 * values[i + 1] + 8.0 * values[i] - values[i - 1]);
        } else {
            out[i] = out[i - 1] + h / 12.0 * (5.0 * values[i] + 8.0 * values[i - 1] - values[i - 2]);
        }
    }
    out
}

/// Least-squares line fit `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (a + b * x)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (a, b, r2)
}
