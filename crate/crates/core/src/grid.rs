//! Uniform grids, sampled functions, the unitary Fourier convention and
//! polynomial weights shared by every other module.
//!
//! Conventions fixed repo-wide:
//!   * spatial samples `x_j = -L/2 + j*dx`, `j in [0, M)`, `dx = L/M`;
//!   * frequency samples `xi_k = k/L`, `k in [-M/2, M/2)`;
//!   * Wigner-frequency samples `xi_k = k/(2L)` over the doubled index
//!     range `k in [-M, M)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// Uniform 1-D grid on the window `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    extent: f64,
    points: usize,
}

impl Grid1D {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points < 4 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "point count must be even and >= 4, got {points}"
            )));
        }
        Ok(Grid1D { extent, points })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// `x_j = -L/2 + j*dx`.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.extent + j as f64 * self.spacing()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Frequency sample `xi_k = k/L` with `k = a - M/2` for array index `a`.
    pub fn freq(&self, a: usize) -> f64 {
        (a as f64 - self.points as f64 / 2.0) / self.extent
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.points).map(|a| self.freq(a)).collect()
    }

    /// Grid of the Fourier transform under the repo convention: spacing
    /// `1/L`, extent `M/L`. Applying `fourier` twice lands back here.
    pub fn dual(&self) -> Grid1D {
        Grid1D {
            extent: self.points as f64 / self.extent,
            points: self.points,
        }
    }
}

/// Phase-space lattice: spatial axis plus the two frequency conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    space: Grid1D,
}

impl PhaseSpaceGrid {
    pub fn new(space: Grid1D) -> Self {
        PhaseSpaceGrid { space }
    }

    pub fn space(&self) -> Grid1D {
        self.space
    }

    /// Standard frequency axis `xi_k = k/L`, `k in [-M/2, M/2)`.
    pub fn freq(&self, a: usize) -> f64 {
        self.space.freq(a)
    }

    pub fn freq_spacing(&self) -> f64 {
        1.0 / self.space.extent()
    }

    /// Wigner-frequency axis `xi_k = k/(2L)`, `k in [-M, M)` (index `b in [0, 2M)`).
    pub fn wigner_freq(&self, b: usize) -> f64 {
        (b as f64 - self.space.points() as f64) / (2.0 * self.space.extent())
    }

    pub fn wigner_freq_spacing(&self) -> f64 {
        1.0 / (2.0 * self.space.extent())
    }

    pub fn wigner_points(&self) -> usize {
        2 * self.space.points()
    }

    /// Central fundamental period of the Wigner axis: `k in [-M/2, M/2)`
    /// at spacing `1/(2L)`. The discrete Wigner transform is periodic with
    /// period `M/(2L)`, so this window carries all the information; it is
    /// also the frequency axis of the 4-D kernel tensors.
    pub fn kernel_freq(&self, c: usize) -> f64 {
        (c as f64 - self.space.points() as f64 / 2.0) / (2.0 * self.space.extent())
    }

    /// Offset of the central window inside the doubled Wigner axis.
    pub fn central_window_offset(&self) -> usize {
        self.space.points() / 2
    }
}

/// Complex samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl SampledFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.points(),
                values.len()
            )));
        }
        Ok(SampledFunction { grid, values, label: label.into() })
    }

    pub fn from_fn(grid: Grid1D, label: impl Into<String>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.points()).map(|j| f(grid.x(j))).collect();
        SampledFunction { grid, values, label: label.into() }
    }

    pub fn from_real_fn(grid: Grid1D, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, label, |x| Complex64::new(f(x), 0.0))
    }

    /// Discrete L^2 norm with cell measure `dx`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `<f, g> = dx * sum f_j conj(g_j)` (conjugate-linear in `g`).
    pub fn inner(&self, other: &SampledFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product on different grids".into()));
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.spacing())
    }

    /// Largest |value| on the outermost sample of the window; test inputs
    /// are required to decay below a declared tolerance here.
    pub fn boundary_magnitude(&self) -> f64 {
        let m = self.values.len();
        self.values[0].norm().max(self.values[m - 1].norm())
    }

    /// Band-limited (trigonometric) evaluation at an arbitrary point.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let hat = fourier(self);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, v) in hat.values.iter().enumerate() {
            let xi = self.grid.freq(a);
            acc += v * Complex64::from_polar(1.0, TAU * x * xi);
        }
        acc / self.grid.extent()
    }
}

/// Complex samples of a 2-variable function on a product grid,
/// row-major in the first variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction2 {
    pub grid_x: Grid1D,
    pub grid_y: Grid1D,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl SampledFunction2 {
    pub fn from_fn(
        grid_x: Grid1D,
        grid_y: Grid1D,
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Self {
        let mut values = Vec::with_capacity(grid_x.points() * grid_y.points());
        for j in 0..grid_x.points() {
            for l in 0..grid_y.points() {
                values.push(f(grid_x.x(j), grid_y.x(l)));
            }
        }
        SampledFunction2 { grid_x, grid_y, values, label: label.into() }
    }

    pub fn outer(f: &SampledFunction, g_conj: &SampledFunction) -> SampledFunction2 {
        // f (x) conj(g)
        let mut values = Vec::with_capacity(f.values.len() * g_conj.values.len());
        for a in &f.values {
            for b in &g_conj.values {
                values.push(a * b.conj());
            }
        }
        SampledFunction2 {
            grid_x: f.grid,
            grid_y: g_conj.grid,
            values,
            label: format!("{} (x) conj({})", f.label, g_conj.label),
        }
    }

    pub fn value(&self, j: usize, l: usize) -> Complex64 {
        self.values[j * self.grid_y.points() + l]
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid_x.spacing()
            * self.grid_y.spacing()
            * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sqrt()
    }
}

/// Polynomial weight `v_s(z) = <z>^s = (1+|z|^2)^(s/2)`.
pub fn weight_eval(z: &[f64], s: f64) -> f64 {
    let norm_sqr: f64 = z.iter().map(|t| t * t).sum();
    (1.0 + norm_sqr).powf(s / 2.0)
}

/// Unitary Fourier transform on the grid:
/// `fhat(xi_k) = dx * sum_j f(x_j) e^{-2 pi i x_j xi_k}`.
pub fn fourier(f: &SampledFunction) -> SampledFunction {
    let m = f.grid.points();
    let dx = f.grid.spacing();
    let mut out = Vec::with_capacity(m);
    for a in 0..m {
        let xi = f.grid.freq(a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in f.values.iter().enumerate() {
            let x = f.grid.x(j);
            acc += v * Complex64::from_polar(1.0, -TAU * x * xi);
        }
        out.push(acc * dx);
    }
    SampledFunction {
        grid: f.grid.dual(),
        values: out,
        label: format!("F[{}]", f.label),
    }
}

/// Inverse of [`fourier`]: `f(x_j) = (1/L) sum_k fhat(xi_k) e^{2 pi i x_j xi_k}`
/// where `L` is the extent of the original (dual) grid.
pub fn fourier_inverse(fhat: &SampledFunction) -> SampledFunction {
    let g = fhat.grid.dual();
    let m = g.points();
    let dxi = fhat.grid.spacing();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let x = g.x(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, v) in fhat.values.iter().enumerate() {
            let xi = fhat.grid.x(a);
            acc += v * Complex64::from_polar(1.0, TAU * x * xi);
        }
        out.push(acc * dxi);
    }
    SampledFunction {
        grid: g,
        values: out,
        label: format!("Finv[{}]", fhat.label),
    }
}

/// `sup_z (v_s * v_s)(z) / v_s(z)` over a product lattice in dimension `2d`
/// (`n = 2d` axes, `points` samples per axis over `[-extent/2, extent/2)`).
///
/// The discrete convolution carries the cell measure; it is evaluated by
/// zero-padded FFT, which matches the direct sum up to rounding. The ratio
/// stays bounded under grid refinement exactly when `s < -2d`; divergence
/// shows up as growth with the extent and is reported, never thrown.
pub fn weight_convolution_ratio(s: f64, n_axes: usize, extent: f64, points: usize) -> f64 {
    assert!(n_axes >= 1 && n_axes <= 4, "supported lattice dimension is 1..=4");
    let m = points;
    let h = extent / m as f64;
    let cell = h.powi(n_axes as i32);
    let coord = |idx: usize| -> f64 { -0.5 * extent + idx as f64 * h };

    // v_s sampled on the lattice, and its linear self-convolution via a
    // zero-padded FFT per axis.
    let padded = 2 * m;
    let total: usize = padded.pow(n_axes as u32);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let strides: Vec<usize> = (0..n_axes)
        .map(|ax| padded.pow((n_axes - 1 - ax) as u32))
        .collect();
    let mut idx = vec![0usize; n_axes];
    'fill: loop {
        let z: Vec<f64> = idx.iter().map(|&i| coord(i)).collect();
        let flat: usize = idx.iter().zip(&strides).map(|(&i, &st)| i * st).sum();
        buf[flat] = Complex64::new(weight_eval(&z, s), 0.0);
        for ax in (0..n_axes).rev() {
            idx[ax] += 1;
            if idx[ax] < m {
                continue 'fill;
            }
            idx[ax] = 0;
            if ax == 0 {
                break 'fill;
            }
        }
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(padded);
    let inv = planner.plan_fft_inverse(padded);
    // FFT along each axis, square, inverse FFT along each axis.
    let fft_axis = |data: &mut [Complex64], plan: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        let lanes = total / padded;
        for ax in 0..n_axes {
            let stride = strides[ax];
            let mut scratch = vec![Complex64::new(0.0, 0.0); padded];
            for lane in 0..lanes {
                // Decompose lane index into coordinates of the other axes.
                let mut rem = lane;
                let mut base = 0usize;
                for other in 0..n_axes {
                    if other == ax {
                        continue;
                    }
                    let extent_o = padded;
                    let c = rem % extent_o;
                    rem /= extent_o;
                    base += c * strides[other];
                }
                for i in 0..padded {
                    scratch[i] = data[base + i * stride];
                }
                plan.process(&mut scratch);
                for i in 0..padded {
                    data[base + i * stride] = scratch[i];
                }
            }
        }
    };
    fft_axis(&mut buf, &fwd);
    for v in buf.iter_mut() {
        *v = *v * *v;
    }
    fft_axis(&mut buf, &inv);
    let norm = 1.0 / total as f64;

    // (v*v)(z_i + z_j) lands at padded index i + j; lattice point with
    // index vector q corresponds to z = 2*(-extent/2) + q*h.
    let mut sup = 0.0f64;
    let mut idx = vec![0usize; n_axes];
    'scan: loop {
        // restrict the ratio to z on the original lattice: q = i + j with
        // z(q) = coord(i) + coord(j); take q so that z lies in the window.
        let z: Vec<f64> = idx.iter().map(|&i| 2.0 * coord(0) + (i as f64) * h).collect();
        if z.iter().all(|t| t.abs() <= 0.5 * extent) {
            let flat: usize = idx.iter().zip(&strides).map(|(&i, &st)| i * st).sum();
            let conv = buf[flat].re * norm * cell;
            let ratio = conv / weight_eval(&z, s);
            if ratio > sup {
                sup = ratio;
            }
        }
        for ax in (0..n_axes).rev() {
            idx[ax] += 1;
            if idx[ax] < padded {
                continue 'scan;
            }
            idx[ax] = 0;
            if ax == 0 {
                break 'scan;
            }
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid1D) -> SampledFunction {
        SampledFunction::from_real_fn(grid, "gauss", |t| (-std::f64::consts::PI * t * t).exp())
    }

    #[test]
    fn make_grid_examples() {
        let g = Grid1D::new(16.0, 8).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(g.x(0), -8.0);
        assert_eq!(g.x(7), 6.0);

        let g = Grid1D::new(1.0, 4).unwrap();
        let f: Vec<f64> = g.freqs();
        assert_eq!(f, vec![-2.0, -1.0, 0.0, 1.0]);

        assert!(Grid1D::new(16.0, 7).is_err());
        assert!(Grid1D::new(16.0, 2).is_err());
        assert!(Grid1D::new(-1.0, 8).is_err());
    }

    #[test]
    fn weight_eval_examples() {
        assert_eq!(weight_eval(&[3.7, -0.2], 0.0), 1.0);
        assert!((weight_eval(&[3.0, 4.0], 2.0) - 26.0).abs() < 1e-12);
        assert_eq!(weight_eval(&[0.0, 0.0], -7.0), 1.0);
    }

    #[test]
    fn weight_submultiplicative() {
        // v_s(z+w) <= 2^{|s|/2} v_s(z) v_{|s|}(w) on a few lattice points.
        for s in [-4.0, -2.0, 2.0] {
            for (z, w) in [([1.0, -2.0], [0.5, 3.0]), ([0.0, 0.1], [-4.0, 2.0]), ([2.0, 2.0], [1.0, -1.0])] {
                let zw = [z[0] + w[0], z[1] + w[1]];
                let lhs = weight_eval(&zw, s);
                let rhs = 2f64.powf(s.abs() / 2.0) * weight_eval(&z, s) * weight_eval(&w, s.abs());
                assert!(lhs <= rhs * (1.0 + 1e-12), "s={s} z={z:?} w={w:?}");
            }
        }
    }

    #[test]
    fn fourier_gaussian_fixed_point() {
        let g = Grid1D::new(16.0, 256).unwrap();
        let f = gaussian(g);
        let fh = fourier(&f);
        let mut sup = 0.0f64;
        for a in 0..256 {
            let xi = g.freq(a);
            let expect = (-std::f64::consts::PI * xi * xi).exp();
            sup = sup.max((fh.values[a] - Complex64::new(expect, 0.0)).norm());
        }
        assert!(sup <= 1e-10, "sup err {sup}");
    }

    #[test]
    fn fourier_shift_theorem() {
        let g = Grid1D::new(16.0, 128).unwrap();
        let f = gaussian(g);
        let x0 = 3.0 * g.spacing();
        let shifted = crate::wigner::tf_shift(&f, x0, 0.0).unwrap();
        let lhs = fourier(&shifted);
        let rhs = fourier(&f);
        let mut sup = 0.0f64;
        for a in 0..128 {
            let xi = g.freq(a);
            let expect = rhs.values[a] * Complex64::from_polar(1.0, -TAU * x0 * xi);
            sup = sup.max((lhs.values[a] - expect).norm());
        }
        assert!(sup <= 1e-10, "sup err {sup}");
    }

    #[test]
    fn fourier_parseval_and_parity() {
        let g = Grid1D::new(16.0, 256).unwrap();
        let f = SampledFunction::from_fn(g, "chirped", |t| {
            Complex64::from_polar((-std::f64::consts::PI * t * t).exp(), 1.3 * t)
        });
        let fh = fourier(&f);
        assert!((fh.l2_norm() - f.l2_norm()).abs() <= 1e-10);

        let ff = fourier(&fh);
        let mut sup = 0.0f64;
        for j in 0..256usize {
            // fourier(fourier(f))(x_j) = f(-x_j); index M-j mod M.
            let l = (256 - j) % 256;
            sup = sup.max((ff.values[j] - f.values[l]).norm());
        }
        assert!(sup <= 1e-10, "parity err {sup}");
    }

    #[test]
    fn fourier_inverse_round_trip() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = gaussian(g);
        let back = fourier_inverse(&fourier(&f));
        let sup = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(sup <= 1e-12);
    }

    #[test]
    fn weight_convolution_ratio_matches_direct_sum() {
        // small-lattice brute-force oracle: linear convolution of windowed
        // samples, scanned over the same output points as the FFT path
        let (s, extent, m) = (-3.0, 8.0, 16usize);
        let h = extent / m as f64;
        let coord = |i: usize| -0.5 * extent + i as f64 * h;
        let mi = m as i64;
        let mut sup = 0.0f64;
        for q0 in 0..2 * mi {
            for q1 in 0..2 * mi {
                let z = [-extent + q0 as f64 * h, -extent + q1 as f64 * h];
                if z[0].abs() > 0.5 * extent || z[1].abs() > 0.5 * extent {
                    continue;
                }
                let mut conv = 0.0;
                for i in (q0 - mi + 1).max(0)..=q0.min(mi - 1) {
                    for j in (q1 - mi + 1).max(0)..=q1.min(mi - 1) {
                        let w = [coord(i as usize), coord(j as usize)];
                        let u = [coord((q0 - i) as usize), coord((q1 - j) as usize)];
                        conv += weight_eval(&w, s) * weight_eval(&u, s);
                    }
                }
                sup = sup.max(conv * h * h / weight_eval(&z, s));
            }
        }
        let fftd = weight_convolution_ratio(s, 2, extent, m);
        assert!((fftd - sup).abs() / sup <= 1e-10, "fft {fftd} direct {sup}");
    }

    #[test]
    fn weight_convolution_ratio_stability() {
        // s = -3, d = 1: finite and stable within 5% when L doubles.
        let r1 = weight_convolution_ratio(-3.0, 2, 32.0, 256);
        let r2 = weight_convolution_ratio(-3.0, 2, 64.0, 256);
        assert!(r1.is_finite() && r2.is_finite());
        assert!((r2 - r1).abs() / r1 <= 0.05, "r1={r1} r2={r2}");
    }

    #[test]
    fn weight_convolution_ratio_divergence_at_s0() {
        // s = 0: v_0 = 1 so the ratio is the lattice volume, ~ L^2 growth.
        let r1 = weight_convolution_ratio(0.0, 2, 16.0, 64);
        let r2 = weight_convolution_ratio(0.0, 2, 32.0, 128);
        assert!(r2 / r1 > 3.0 && r2 / r1 < 5.0, "growth {}", r2 / r1);
    }

    #[test]
    fn weight_convolution_ratio_d2_coarse() {
        let r = weight_convolution_ratio(-6.0, 4, 8.0, 12);
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn weight_convolution_ratio_monotone_in_s() {
        let mut prev = f64::INFINITY;
        for s in [-2.5, -3.0, -4.0, -6.0] {
            let r = weight_convolution_ratio(s, 2, 16.0, 64);
            assert!(r <= prev * (1.0 + 1e-12), "s={s} r={r} prev={prev}");
            prev = r;
        }
    }
}
