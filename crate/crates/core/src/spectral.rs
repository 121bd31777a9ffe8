//! FFT plumbing shared by the multiplier and convolution operators.
//!
//! The forward transform uses the kernel `e^{-2πi x·ξ}` on the periodised
//! box, so frequencies sit on the dual lattice `k / (2L)`. Indices at or
//! above `N/2` map to negative frequencies.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::{GridFunction, GridSpec, Point};

/// In-place DFT over a square `size^dim` array stored row-major. The inverse
/// is normalised by `size^-dim`.
pub fn fft_in_place(data: &mut [Complex64], size: usize, dim: usize, inverse: bool) {
    debug_assert_eq!(data.len(), size.pow(dim as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    };
    // rows
    for row in data.chunks_exact_mut(size) {
        fft.process(row);
    }
    if dim == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); size];
        for c in 0..size {
            for r in 0..size {
                column[r] = data[r * size + c];
            }
            fft.process(&mut column);
            for r in 0..size {
                data[r * size + c] = column[r];
            }
        }
    }
    if inverse {
        let scale = 1.0 / (size.pow(dim as u32) as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Frequency of DFT index `k` on an axis of `size` cells of width `h`.
pub fn frequency(k: usize, size: usize, spacing: f64) -> f64 {
    let period = size as f64 * spacing;
    let signed = if k < size / 2 {
        k as f64
    } else {
        k as f64 - size as f64
    };
    signed / period
}

/// Frequencies of one axis of `spec`, in DFT order.
pub fn axis_frequencies(spec: &GridSpec) -> Vec<f64> {
    let n = spec.points_per_axis();
    (0..n).map(|k| frequency(k, n, spec.spacing())).collect()
}

/// Multiplies the periodic DFT of `f` by `symbol(ξ)` and transforms back.
///
/// At the Nyquist index the symbol is averaged over both signs of that
/// frequency component, so real, even symbols map real data to real data.
pub fn apply_symbol(f: &GridFunction, symbol: impl Fn(&Point) -> Complex64) -> GridFunction {
    let spec = *f.spec();
    let n = spec.points_per_axis();
    let dim = spec.dim();
    let freqs = axis_frequencies(&spec);
    let nyquist = n / 2;
    let mut data = f.values().to_vec();
    fft_in_place(&mut data, n, dim, false);
    for (flat, v) in data.iter_mut().enumerate() {
        let m = spec.multi_index(flat);
        let mut xi = [0.0; 2];
        let mut nyq_axes = [false; 2];
        for axis in 0..dim {
            xi[axis] = freqs[m[axis]];
            nyq_axes[axis] = m[axis] == nyquist;
        }
        let m_val = if nyq_axes.iter().any(|&b| b) {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut count = 0.0;
            for mask in 0..(1usize << dim) {
                let mut q = xi;
                let mut skip = false;
                for axis in 0..dim {
                    if (mask >> axis) & 1 == 1 {
                        if nyq_axes[axis] {
                            q[axis] = -q[axis];
                        } else {
                            skip = true;
                        }
                    }
                }
                if !skip {
                    acc += symbol(&q);
                    count += 1.0;
                }
            }
            acc / count
        } else {
            symbol(&xi)
        };
        *v *= m_val;
    }
    fft_in_place(&mut data, n, dim, true);
    GridFunction::from_parts(spec, data)
}

/// The spectrum of a function zero-padded to twice the box, ready to be
/// convolved with several kernels.
pub struct PaddedSpectrum {
    spec: GridSpec,
    size: usize,
    spectrum: Vec<Complex64>,
}

impl PaddedSpectrum {
    pub fn new(f: &GridFunction) -> Self {
        Self::from_values(f.spec(), f.values())
    }

    pub fn from_real(spec: &GridSpec, values: &[f64]) -> Self {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_values(spec, &c)
    }

    fn from_values(spec: &GridSpec, values: &[Complex64]) -> Self {
        let n = spec.points_per_axis();
        let size = 2 * n;
        let dim = spec.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); size.pow(dim as u32)];
        for (flat, v) in values.iter().enumerate() {
            let m = spec.multi_index(flat);
            let idx = if dim == 1 { m[0] } else { m[0] * size + m[1] };
            data[idx] = *v;
        }
        fft_in_place(&mut data, size, dim, false);
        Self {
            spec: *spec,
            size,
            spectrum: data,
        }
    }

    /// `out(x_i) = Σ_j kernel(x_i - x_j) f(x_j)` over the grid, without
    /// periodisation. The kernel is queried at every lattice offset `d·h`
    /// with `|d_k| < N`; the caller folds any cell volume into it.
    pub fn convolve(&self, kernel: impl Fn(&Point) -> Complex64) -> Vec<Complex64> {
        let n = self.spec.points_per_axis() as i64;
        let size = self.size;
        let dim = self.spec.dim();
        let h = self.spec.spacing();
        let signed = |k: usize| -> i64 {
            let k = k as i64;
            if k < n {
                k
            } else {
                k - 2 * n
            }
        };
        let mut kern = vec![Complex64::new(0.0, 0.0); size.pow(dim as u32)];
        for (idx, slot) in kern.iter_mut().enumerate() {
            let (a, b) = if dim == 1 { (idx, 0) } else { (idx / size, idx % size) };
            let da = signed(a);
            let db = if dim == 1 { 0 } else { signed(b) };
            if da == -n || db == -n {
                continue;
            }
            *slot = kernel(&[da as f64 * h, db as f64 * h]);
        }
        fft_in_place(&mut kern, size, dim, false);
        for (k, s) in kern.iter_mut().zip(&self.spectrum) {
            *k *= s;
        }
        fft_in_place(&mut kern, size, dim, true);
        let nn = self.spec.points_per_axis();
        (0..self.spec.len())
            .map(|flat| {
                let m = self.spec.multi_index(flat);
                if dim == 1 {
                    kern[m[0]]
                } else {
                    kern[m[0] * size + m[1]]
                }
            })
            .take(nn.pow(dim as u32))
            .collect()
    }
}

/// Linear (non-periodic) convolution of `f` with `kernel` over lattice offsets.
pub fn linear_convolve(f: &GridFunction, kernel: impl Fn(&Point) -> Complex64) -> GridFunction {
    let values = PaddedSpectrum::new(f).convolve(kernel);
    GridFunction::from_parts(*f.spec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(f: &GridFunction, kernel: impl Fn(&Point) -> Complex64) -> Vec<Complex64> {
        let spec = f.spec();
        (0..spec.len())
            .map(|i| {
                let xi = spec.node(i);
                (0..spec.len())
                    .map(|j| {
                        let xj = spec.node(j);
                        kernel(&[xi[0] - xj[0], xi[1] - xj[1]]) * f.value(j)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn linear_convolution_matches_direct_sum() {
        for dim in [1, 2] {
            let spec = GridSpec::new(dim, 1.0, 8).unwrap();
            let f = GridFunction::from_fn(spec, |p| Complex64::new(p[0] - 0.3 * p[1], p[1] * p[0])).unwrap();
            let k = |d: &Point| Complex64::new((-d[0] * d[0] - 2.0 * d[1] * d[1]).exp(), d[0]);
            let fast = linear_convolve(&f, k);
            let slow = direct(&f, k);
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn unit_symbol_is_identity() {
        let spec = GridSpec::new(2, 2.0, 16).unwrap();
        let f = GridFunction::from_fn(spec, |p| Complex64::new((p[0] * 3.0).sin(), p[1])).unwrap();
        let g = apply_symbol(&f, |_| Complex64::new(1.0, 0.0));
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let spec = GridSpec::new(1, 2.0, 32).unwrap();
        // frequency 3/(2L) = 0.75
        let f = GridFunction::from_fn(spec, |p| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.75 * p[0])
        })
        .unwrap();
        let g = apply_symbol(&f, |xi| Complex64::new(xi[0], 0.0));
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a * 0.75 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frequency_layout() {
        let spec = GridSpec::new(1, 4.0, 8).unwrap();
        let f = axis_frequencies(&spec);
        assert_eq!(f, vec![0.0, 0.125, 0.25, 0.375, -0.5, -0.375, -0.25, -0.125]);
    }
}
