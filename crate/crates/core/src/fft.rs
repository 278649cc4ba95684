//! Iterative radix-2 FFT.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// In-place DFT `X_k = Σ_j x_j e^{∓2πi jk/n}` (minus sign for `inverse = false`).
/// The inverse transform is unnormalized.
pub fn fft_in_place(data: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(
            "fft length",
            "must be a nonzero power of two",
        ));
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = ang * k as f64;
                let w = Complex64::new(libm::cos(a), libm::sin(a));
                let u = data[start + k];
                let v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn matches_naive_dft() {
        let n = 32;
        let x: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(libm::sin(j as f64 * 0.7), libm::cos(j as f64 * 1.3) + 0.2))
            .collect();
        let mut y = x.clone();
        fft_in_place(&mut y, false).unwrap();
        for k in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                let a = -2.0 * PI * (j * k) as f64 / n as f64;
                s += xj * Complex64::new(libm::cos(a), libm::sin(a));
            }
            assert!((s - y[k]).norm() < 1e-12);
        }
        fft_in_place(&mut y, true).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut v = alloc::vec![Complex64::new(0.0, 0.0); 12];
        assert!(fft_in_place(&mut v, false).is_err());
    }
}
