//! Deterministic test signals: shifted Gaussians, Hermite-type functions,
//! and seeded band-limited random trigonometric polynomials under a
//! Gaussian envelope.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid1D, SampledFunction, TAU};

/// `e^{-pi (t - x0)^2 / w^2} e^{2 pi i xi0 t}`, unnormalized.
pub fn gaussian(grid: Grid1D, x0: f64, xi0: f64, w: f64) -> SampledFunction {
    SampledFunction::from_fn(grid, format!("gauss({x0},{xi0},{w})"), |t| {
        let u = (t - x0) / w;
        Complex64::from_polar((-std::f64::consts::PI * u * u).exp(), TAU * xi0 * t)
    })
}

/// Hermite-type function: `H_n(sqrt(2 pi) t) e^{-pi t^2}` with the physicists'
/// Hermite polynomial, normalized to unit L^2 norm on the grid.
pub fn hermite_like(grid: Grid1D, n: usize) -> SampledFunction {
    let herm = |t: f64| -> f64 {
        let u = (2.0 * std::f64::consts::PI).sqrt() * t;
        let (mut h0, mut h1) = (1.0, 2.0 * u);
        match n {
            0 => h0,
            1 => h1,
            _ => {
                for k in 1..n {
                    let h2 = 2.0 * u * h1 - 2.0 * k as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1
            }
        }
    };
    let mut f = SampledFunction::from_real_fn(grid, format!("hermite({n})"), |t| {
        herm(t) * (-std::f64::consts::PI * t * t).exp()
    });
    let norm = f.l2_norm();
    for v in f.values.iter_mut() {
        *v /= norm;
    }
    f
}

/// Seeded random trigonometric polynomial under a Gaussian envelope:
/// `sum_j c_j e^{2 pi i b_j t} * e^{-pi t^2 / w^2}` with `|b_j| <= bandwidth`
/// and complex coefficients drawn from the unit square, normalized to unit
/// L^2 norm. Identical seeds give identical samples.
pub fn random_bandlimited(
    grid: Grid1D,
    seed: u64,
    n_modes: usize,
    bandwidth: f64,
    w: f64,
) -> SampledFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(Complex64, f64)> = (0..n_modes)
        .map(|_| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = rng.gen_range(-bandwidth..bandwidth);
            (c, b)
        })
        .collect();
    let mut f = SampledFunction::from_fn(grid, format!("randband(seed={seed})"), |t| {
        let env = (-std::f64::consts::PI * t * t / (w * w)).exp();
        modes
            .iter()
            .map(|(c, b)| c * Complex64::from_polar(1.0, TAU * b * t))
            .sum::<Complex64>()
            * env
    });
    let norm = f.l2_norm();
    for v in f.values.iter_mut() {
        *v /= norm;
    }
    f
}
