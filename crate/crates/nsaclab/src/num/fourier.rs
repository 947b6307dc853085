//! Periodic spectral differentiation in 1D and 2D, plus the cosine transform
//! used by the staggered-grid Poisson solver.
//!
//! Conventions: a real sequence of length `n` sampled at `x_j = j/n` on the
//! unit torus has wavenumbers `k = 0, 1, ..., n/2, -(n/2-1), ..., -1` and the
//! derivative multiplier is `2*pi*i*k` (per unit parameter length). Even `n`
//! zeroes the Nyquist mode of odd derivatives.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Process-wide FFT plan cache. rustfft plans are cheap to share and the
/// solvers hit the same handful of sizes over and over.
struct PlanCache {
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

fn plans() -> &'static Mutex<PlanCache> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            fwd: HashMap::new(),
            inv: HashMap::new(),
        })
    })
}

pub fn fft_forward(n: usize) -> Arc<dyn Fft<f64>> {
    let mut cache = plans().lock().unwrap();
    cache
        .fwd
        .entry(n)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(n))
        .clone()
}

pub fn fft_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    let mut cache = plans().lock().unwrap();
    cache
        .inv
        .entry(n)
        .or_insert_with(|| FftPlanner::new().plan_fft_inverse(n))
        .clone()
}

/// Signed integer wavenumber for bin `j` of an `n`-point transform.
#[inline]
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Forward transform of real data (unnormalized, rustfft convention).
pub fn dft(data: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(data.len()).process(&mut buf);
    buf
}

/// Inverse transform back to real samples, dividing by `n` and dropping the
/// imaginary roundoff.
pub fn idft_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|z| z.re / n as f64).collect()
}

/// Spectral derivative of order `order` of a periodic sequence sampled on a
/// uniform grid over a period of length `period`.
pub fn deriv_periodic(data: &[f64], order: u32, period: f64) -> Vec<f64> {
    let n = data.len();
    let mut hat = dft(data);
    for (j, z) in hat.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        // Nyquist mode of an odd derivative has no consistent real signal.
        if order % 2 == 1 && n % 2 == 0 && j == n / 2 {
            *z = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, 2.0 * PI * k as f64 / period);
        *z *= ik.powu(order);
    }
    idft_real(hat)
}

/// Evaluate the trigonometric interpolant of periodic samples at arbitrary
/// parameter `s` in period-1 coordinates (along with as many derivatives as
/// requested). Direct summation; fine for the interface sizes used here.
pub fn trig_eval(data: &[f64], s: f64, derivative: u32) -> f64 {
    let n = data.len();
    let hat = dft(data);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, z) in hat.iter().enumerate() {
        let k = wavenumber(j, n);
        if derivative % 2 == 1 && n % 2 == 0 && j == n / 2 {
            continue;
        }
        let ik = Complex64::new(0.0, 2.0 * PI * k as f64);
        let phase = Complex64::new(0.0, 2.0 * PI * k as f64 * s).exp();
        acc += z * ik.powu(derivative) * phase;
    }
    acc.re / n as f64
}

/// Precomputed spectral evaluator for one periodic sequence: keeps the
/// coefficients so repeated off-grid evaluations skip the forward FFT.
#[derive(Clone)]
pub struct TrigSeries {
    hat: Vec<Complex64>,
}

impl TrigSeries {
    pub fn new(data: &[f64]) -> Self {
        Self { hat: dft(data) }
    }

    pub fn len(&self) -> usize {
        self.hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hat.is_empty()
    }

    pub fn eval(&self, s: f64, derivative: u32) -> f64 {
        let n = self.hat.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, z) in self.hat.iter().enumerate() {
            let k = wavenumber(j, n);
            if derivative % 2 == 1 && n % 2 == 0 && j == n / 2 {
                continue;
            }
            let ik = Complex64::new(0.0, 2.0 * PI * k as f64);
            let phase = Complex64::new(0.0, 2.0 * PI * k as f64 * s).exp();
            acc += z * ik.powu(derivative) * phase;
        }
        acc.re / n as f64
    }
}

/// Resample a periodic sequence onto `m` uniform nodes by zero padding or
/// truncating its spectrum.
pub fn resample_periodic(data: &[f64], m: usize) -> Vec<f64> {
    let n = data.len();
    if n == m {
        return data.to_vec();
    }
    let hat = dft(data);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let keep = (n.min(m)) / 2;
    for j in 0..=keep {
        if j < hat.len() && j < out.len() {
            out[j] = hat[j];
        }
    }
    for j in 1..=keep {
        if j < hat.len() && j < out.len() {
            out[m - j] = hat[n - j];
        }
    }
    // Nyquist of the source has no unambiguous image; drop it when shrinking.
    if m < n && m % 2 == 0 {
        out[m / 2] = Complex64::new(0.0, 0.0);
    }
    let mut v = idft_real(out);
    let scale = m as f64 / n as f64;
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

// ------------------------------ 2D transforms ------------------------------

/// Complex 2D FFT workspace for an `nx x ny` grid stored row-major
/// (index `i*ny + j`, `i` the x index).
pub struct Fft2 {
    pub nx: usize,
    pub ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            fwd_x: fft_forward(nx),
            inv_x: fft_inverse(nx),
            fwd_y: fft_forward(ny),
            inv_y: fft_inverse(ny),
        }
    }

    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        assert_eq!(data.len(), self.nx * self.ny);
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_inplace(&mut buf);
        buf
    }

    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        // Rows along y are contiguous.
        for row in buf.chunks_exact_mut(self.ny) {
            self.fwd_y.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.nx];
        for j in 0..self.ny {
            for i in 0..self.nx {
                col[i] = buf[i * self.ny + j];
            }
            self.fwd_x.process(&mut col);
            for i in 0..self.nx {
                buf[i * self.ny + j] = col[i];
            }
        }
    }

    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        for row in buf.chunks_exact_mut(self.ny) {
            self.inv_y.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.nx];
        for j in 0..self.ny {
            for i in 0..self.nx {
                col[i] = buf[i * self.ny + j];
            }
            self.inv_x.process(&mut col);
            for i in 0..self.nx {
                buf[i * self.ny + j] = col[i];
            }
        }
        let scale = 1.0 / (self.nx * self.ny) as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse_inplace(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }
}

// ------------------------------ DCT (type II/III) --------------------------

/// DCT-II of `x` (unnormalized): `X_k = sum_j x_j cos(pi k (j+1/2) / n)`.
/// Realized through a length-2n complex FFT of the even extension.
pub fn dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut ext = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 0..n {
        ext[j] = Complex64::new(x[j], 0.0);
        ext[2 * n - 1 - j] = Complex64::new(x[j], 0.0);
    }
    fft_forward(2 * n).process(&mut ext);
    (0..n)
        .map(|k| {
            let w = Complex64::new(0.0, -PI * k as f64 / (2.0 * n as f64)).exp();
            0.5 * (w * ext[k]).re
        })
        .collect()
}

/// Inverse of [`dct2`] with the matching normalization:
/// `x_j = (X_0 + 2 sum_{k>=1} X_k cos(pi k (j+1/2)/n)) / n`.
///
/// Construction: the even extension used by the forward transform has the
/// length-2n spectrum `Y_k = 2 exp(i pi k/(2n)) X_k` (zero Nyquist bin,
/// Hermitian mirror), so one inverse FFT undoes it.
pub fn dct3(xhat: &[f64]) -> Vec<f64> {
    let n = xhat.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for k in 0..n {
        let w = Complex64::new(0.0, PI * k as f64 / (2.0 * n as f64)).exp();
        buf[k] = w * Complex64::new(2.0 * xhat[k], 0.0);
    }
    for k in 1..n {
        buf[2 * n - k] = buf[k].conj();
    }
    fft_inverse(2 * n).process(&mut buf);
    (0..n).map(|j| buf[j].re / (2.0 * n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_sine_is_exact() {
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        let f: Vec<f64> = xs.iter().map(|&x| (2.0 * PI * 3.0 * x).sin()).collect();
        let df = deriv_periodic(&f, 1, 1.0);
        for (j, &x) in xs.iter().enumerate() {
            let exact = 2.0 * PI * 3.0 * (2.0 * PI * 3.0 * x).cos();
            assert!((df[j] - exact).abs() < 1e-10, "j={j}");
        }
    }

    #[test]
    fn trig_eval_matches_grid() {
        let n = 32;
        let f: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                (2.0 * PI * x).cos() + 0.3 * (2.0 * PI * 5.0 * x).sin()
            })
            .collect();
        let series = TrigSeries::new(&f);
        for j in 0..n {
            let s = j as f64 / n as f64;
            assert!((series.eval(s, 0) - f[j]).abs() < 1e-12);
        }
        // Off-grid value against the analytic expression.
        let s = 0.137;
        let exact = (2.0 * PI * s).cos() + 0.3 * (2.0 * PI * 5.0 * s).sin();
        assert!((series.eval(s, 0) - exact).abs() < 1e-12);
    }

    #[test]
    fn dct_roundtrip_and_direct_formula() {
        let x: Vec<f64> = (0..13).map(|i| (i as f64 * 0.7).sin() + 0.2).collect();
        let n = x.len();
        let xhat = dct2(&x);
        // Direct O(n^2) evaluation.
        for k in 0..n {
            let direct: f64 = (0..n)
                .map(|j| x[j] * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            assert!((xhat[k] - direct).abs() < 1e-10, "k={k}");
        }
        let back = dct3(&xhat);
        for j in 0..n {
            assert!((back[j] - x[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn fft2_roundtrip() {
        let nx = 12;
        let ny = 20;
        let data: Vec<f64> = (0..nx * ny).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let plan = Fft2::new(nx, ny);
        let hat = plan.forward(&data);
        let back = plan.inverse_real(hat);
        for i in 0..nx * ny {
            assert!((back[i] - data[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn resample_preserves_low_modes() {
        let n = 32;
        let f: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                1.0 + (2.0 * PI * x).cos() - 0.5 * (2.0 * PI * 3.0 * x).sin()
            })
            .collect();
        let g = resample_periodic(&f, 48);
        for j in 0..48 {
            let x = j as f64 / 48.0;
            let exact = 1.0 + (2.0 * PI * x).cos() - 0.5 * (2.0 * PI * 3.0 * x).sin();
            assert!((g[j] - exact).abs() < 1e-10);
        }
    }
}
