//! Iterative radix-2 FFT on `Complex64` buffers whose length is a power of two.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;

fn bit_reverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
}

fn transform(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
    bit_reverse(buf);
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        // Twiddles computed directly rather than by recurrence to keep the
        // rounding error flat in n.
        let tw: Vec<Complex64> =
            (0..half).map(|k| Complex64::new((ang * k as f64).cos(), (ang * k as f64).sin())).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * tw[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Forward transform, `X_k = sum_j x_j exp(-2 pi i jk / n)`.
pub fn forward(buf: &mut [Complex64]) {
    transform(buf, -1.0);
}

/// Inverse transform including the `1/n` normalization.
pub fn inverse(buf: &mut [Complex64]) {
    transform(buf, 1.0);
    let s = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Angular frequency of bin `k` for an `n`-point transform with spacing `dt`.
#[inline]
pub fn angular_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * core::f64::consts::PI * signed / (n as f64 * dt)
}
