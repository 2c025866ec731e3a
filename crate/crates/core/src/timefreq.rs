//! Discrete Fourier tools for τ-periodic sample series: trigonometric
//! interpolation and spectral differentiation in time.
//!
//! A radix-2 FFT covers the power-of-two sample counts used by default;
//! other lengths fall back to the direct transform.

use std::f64::consts::PI;

/// In-place complex radix-2 FFT (forward, no normalization).
fn fft_radix2(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (ar, ai) = (re[i + k], im[i + k]);
                let (br, bi) = (re[i + k + len / 2], im[i + k + len / 2]);
                let (tr, ti) = (br * cr - bi * ci, br * ci + bi * cr);
                re[i + k] = ar + tr;
                im[i + k] = ai + ti;
                re[i + k + len / 2] = ar - tr;
                im[i + k + len / 2] = ai - ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Inverse complex DFT via the conjugation trick (any length).
fn idft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    if n.is_power_of_two() {
        let mut cr = re.to_vec();
        let mut ci: Vec<f64> = im.iter().map(|v| -v).collect();
        fft_radix2(&mut cr, &mut ci);
        let nf = n as f64;
        (cr.iter().map(|v| v / nf).collect(), ci.iter().map(|v| -v / nf).collect())
    } else {
        let mut or_ = vec![0.0; n];
        let mut oi = vec![0.0; n];
        for j in 0..n {
            let (mut ar, mut ai) = (0.0, 0.0);
            for m in 0..n {
                let ang = 2.0 * PI * (m * j % n) as f64 / n as f64;
                let (c, s) = (ang.cos(), ang.sin());
                ar += re[m] * c - im[m] * s;
                ai += re[m] * s + im[m] * c;
            }
            or_[j] = ar / n as f64;
            oi[j] = ai / n as f64;
        }
        (or_, oi)
    }
}

/// Forward DFT of real samples: X_m = Σ_j x_j e^{−2πi m j / n}.
pub fn dft_real(samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    if n.is_power_of_two() {
        let mut re = samples.to_vec();
        let mut im = vec![0.0; n];
        fft_radix2(&mut re, &mut im);
        (re, im)
    } else {
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for m in 0..n {
            let (mut ar, mut ai) = (0.0, 0.0);
            for (j, &x) in samples.iter().enumerate() {
                let ang = -2.0 * PI * (m * j % n) as f64 / n as f64;
                ar += x * ang.cos();
                ai += x * ang.sin();
            }
            re[m] = ar;
            im[m] = ai;
        }
        (re, im)
    }
}

/// Fourier-coefficient view of a real τ-periodic series sampled uniformly.
///
/// Evaluation and differentiation are exact for band-limited signals and
/// spectrally accurate for smooth ones.
#[derive(Debug, Clone)]
pub struct PeriodicSeries {
    n: usize,
    tau: f64,
    /// a_0, and (a_m, b_m) pairs so that
    /// x(t) = a_0 + Σ a_m cos(mωt) + b_m sin(mωt) (+ Nyquist cosine term).
    a: Vec<f64>,
    b: Vec<f64>,
    /// Raw spectrum, kept for fast on-grid derivatives.
    spec_re: Vec<f64>,
    spec_im: Vec<f64>,
}

impl PeriodicSeries {
    /// From samples x_j = x(j τ / n).
    pub fn from_samples(samples: &[f64], tau: f64) -> Self {
        let n = samples.len();
        let (re, im) = dft_real(samples);
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        a[0] = re[0] / n as f64;
        for m in 1..=half {
            if 2 * m == n {
                a[m] = re[m] / n as f64; // Nyquist term (cosine only)
            } else {
                a[m] = 2.0 * re[m] / n as f64;
                b[m] = -2.0 * im[m] / n as f64;
            }
        }
        Self { n, tau, a, b, spec_re: re, spec_im: im }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let omega = 2.0 * PI / self.tau;
        let mut acc = self.a[0];
        for m in 1..self.a.len() {
            let ang = omega * m as f64 * t;
            acc += self.a[m] * ang.cos() + self.b[m] * ang.sin();
        }
        acc
    }

    /// p-th time derivative, evaluated spectrally.
    pub fn eval_derivative(&self, t: f64, p: u32) -> f64 {
        let omega = 2.0 * PI / self.tau;
        let mut acc = if p == 0 { self.a[0] } else { 0.0 };
        for m in 1..self.a.len() {
            let w = omega * m as f64;
            let ang = w * t;
            // rotate (a cos + b sin) by p quarter turns and scale by w^p
            let (mut ca, mut cb) = (self.a[m], self.b[m]);
            for _ in 0..p {
                let (na, nb) = (cb * w, -ca * w);
                ca = na;
                cb = nb;
            }
            acc += ca * ang.cos() + cb * ang.sin();
        }
        acc
    }

    /// Derivative values back on the original sample grid, by spectral
    /// multiplication and inverse transform.
    pub fn derivative_samples(&self, p: u32) -> Vec<f64> {
        let n = self.n;
        let omega = 2.0 * PI / self.tau;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for m in 0..n {
            // signed frequency of bin m; the Nyquist bin of an even-order
            // derivative keeps its cosine character, odd orders drop it
            let f = if 2 * m < n {
                m as f64
            } else if 2 * m == n {
                if p % 2 == 1 {
                    0.0
                } else {
                    m as f64
                }
            } else {
                m as f64 - n as f64
            };
            let w = omega * f;
            // multiply by (i w)^p
            let (mut cr, mut ci) = (self.spec_re[m], self.spec_im[m]);
            for _ in 0..p {
                let (nr, ni) = (-w * ci, w * cr);
                cr = nr;
                ci = ni;
            }
            if 2 * m == n && p % 2 == 1 {
                cr = 0.0;
                ci = 0.0;
            }
            re[m] = cr;
            im[m] = ci;
        }
        idft(&re, &im).0
    }

    /// Cosine coefficient of harmonic m (a_0 is the mean).
    pub fn coeff_a(&self, m: usize) -> f64 {
        self.a.get(m).copied().unwrap_or(0.0)
    }

    /// Sine coefficient of harmonic m.
    pub fn coeff_b(&self, m: usize) -> f64 {
        self.b.get(m).copied().unwrap_or(0.0)
    }
}
