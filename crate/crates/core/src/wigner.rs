//! Cross-Wigner and tau-Wigner transforms, time-frequency shifts, the
//! concrete metaplectic building blocks and the symplectic matrix builders.
//!
//! The discrete Wigner rule substitutes `t = 2 s dx` so only on-lattice
//! samples are needed:
//!
//! `W(f,g)(x_j, xi) = 2 dx * sum_s f(x_j + s dx) conj(g(x_j - s dx)) e^{-4 pi i s dx xi}`
//!
//! evaluated on the Wigner-frequency axis `xi = k/(2L)`, `k in [-M, M)`,
//! with out-of-window samples treated as zero. The transform is periodic in
//! `k` with period `M`; norms and field comparisons therefore read the
//! central fundamental period `k in [-M/2, M/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{fourier, Grid1D, PhaseSpaceGrid, SampledFunction, SampledFunction2, TAU};

/// Complex field on a [`PhaseSpaceGrid`], `M x 2M` row-major over
/// (spatial index, Wigner-frequency index).
#[derive(Debug, Clone)]
pub struct WignerField {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<Complex64>,
    pub tau: f64,
    pub label: String,
}

impl WignerField {
    pub fn value(&self, j: usize, b: usize) -> Complex64 {
        self.values[j * self.grid.wigner_points() + b]
    }

    /// L^2 norm with cell measure `dx * 1/(2L)` over the central period.
    pub fn l2_norm(&self) -> f64 {
        let m = self.grid.space().points();
        let off = self.grid.central_window_offset();
        let mut acc = 0.0;
        for j in 0..m {
            for c in 0..m {
                acc += self.value(j, off + c).norm_sqr();
            }
        }
        (acc * self.grid.space().spacing() * self.grid.wigner_freq_spacing()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sup_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Values on the central fundamental period, `M x M` row-major.
    pub fn central_values(&self) -> Vec<Complex64> {
        let m = self.grid.space().points();
        let off = self.grid.central_window_offset();
        let mut out = Vec::with_capacity(m * m);
        for j in 0..m {
            for c in 0..m {
                out.push(self.value(j, off + c));
            }
        }
        out
    }
}

/// Time-frequency shift `pi(z)f(t) = e^{2 pi i xi0 t} f(t - x0)`.
///
/// `x0` is snapped to the nearest lattice point; the returned flag is true
/// when snapping moved it. The translation is circular, so the L^2 norm is
/// preserved exactly.
pub fn tf_shift(f: &SampledFunction, x0: f64, xi0: f64) -> Result<SampledFunction> {
    let (g, _snapped) = tf_shift_snapped(f, x0, xi0);
    Ok(g)
}

pub fn tf_shift_snapped(f: &SampledFunction, x0: f64, xi0: f64) -> (SampledFunction, bool) {
    let m = f.grid.points() as i64;
    let dx = f.grid.spacing();
    let steps = (x0 / dx).round();
    let snapped = (x0 - steps * dx).abs() > 1e-12 * dx.max(1.0);
    let steps = steps as i64;
    let mut values = Vec::with_capacity(f.values.len());
    for j in 0..m {
        let src = (j - steps).rem_euclid(m) as usize;
        let t = f.grid.x(j as usize);
        values.push(f.values[src] * Complex64::from_polar(1.0, TAU * xi0 * t));
    }
    (
        SampledFunction {
            grid: f.grid,
            values,
            label: format!("pi({x0},{xi0}){}", f.label),
        },
        snapped,
    )
}

/// Unit roots `e^{-2 pi i r / n}` for `r in [0, n)`.
pub(crate) fn unit_roots(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|r| Complex64::from_polar(1.0, -TAU * r as f64 / n as f64))
        .collect()
}

/// Cross-Wigner distribution of `f` and `g` on the shared grid.
pub fn cross_wigner(f: &SampledFunction, g: &SampledFunction) -> Result<WignerField> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch("cross_wigner requires a shared grid".into()));
    }
    let grid = PhaseSpaceGrid::new(f.grid);
    let m = f.grid.points();
    let dx = f.grid.spacing();
    let roots = unit_roots(m);
    let n = m as i64;

    let values: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|j| {
            let smax = j.min(m - 1 - j) as i64;
            // products h(s) = f(x_j + s dx) conj(g(x_j - s dx))
            let prods: Vec<Complex64> = (-smax..=smax)
                .map(|s| {
                    f.values[(j as i64 + s) as usize] * g.values[(j as i64 - s) as usize].conj()
                })
                .collect();
            let roots = roots.clone();
            (0..2 * m).map(move |b| {
                let k = b as i64 - n;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, h) in prods.iter().enumerate() {
                    let s = i as i64 - smax;
                    acc += h * roots[(s * k).rem_euclid(n) as usize];
                }
                acc * 2.0 * dx
            })
        })
        .collect();

    Ok(WignerField {
        grid,
        values,
        tau: 0.5,
        label: format!("W({},{})", f.label, g.label),
    })
}

/// tau-Wigner transform; off-lattice arguments are resolved by band-limited
/// (trigonometric) interpolation, so the result is spectrally accurate for
/// window-decaying inputs. `tau = 1/2` agrees with [`cross_wigner`] up to
/// the quadrature difference of the two rules.
pub fn tau_wigner(f: &SampledFunction, g: &SampledFunction, tau: f64) -> Result<WignerField> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch("tau_wigner requires a shared grid".into()));
    }
    let grid0 = f.grid;
    let m = grid0.points();
    let dx = grid0.spacing();
    let n2 = 2 * m as i64;

    // f shifted by tau*t_s and g shifted by -(1-tau)*t_s for every t_s = s dx,
    // evaluated through the Fourier side: shift by a multiplies fhat by
    // e^{2 pi i a xi}.
    let fh = fourier(f);
    let gh = fourier(g);
    // the window [x_0, x_{M-1}] outside of which samples are taken as zero,
    // matching the whole-step rule's index bounds
    let lo = grid0.x(0) - 1e-9;
    let hi = grid0.x(m - 1) + 1e-9;
    let shift_all = |hat: &SampledFunction, scale: f64| -> Vec<Vec<Complex64>> {
        (0..2 * m)
            .into_par_iter()
            .map(|si| {
                let s = si as i64 - m as i64;
                let a = scale * s as f64 * dx;
                let mut row = Vec::with_capacity(m);
                for j in 0..m {
                    let x = grid0.x(j);
                    let p = x + a;
                    if p < lo || p > hi {
                        row.push(Complex64::new(0.0, 0.0));
                        continue;
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, v) in hat.values.iter().enumerate() {
                        let xi = grid0.freq(k);
                        acc += v * Complex64::from_polar(1.0, TAU * p * xi);
                    }
                    row.push(acc / grid0.extent());
                }
                row
            })
            .collect()
    };
    let fsh = shift_all(&fh, tau);
    let gsh = shift_all(&gh, -(1.0 - tau));

    let roots2 = unit_roots(2 * m);
    let grid = PhaseSpaceGrid::new(grid0);
    let values: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|j| {
            let prods: Vec<Complex64> = (0..2 * m)
                .map(|si| fsh[si][j] * gsh[si][j].conj())
                .collect();
            let roots2 = roots2.clone();
            (0..2 * m).map(move |b| {
                let k = b as i64 - m as i64;
                let mut acc = Complex64::new(0.0, 0.0);
                for (si, h) in prods.iter().enumerate() {
                    let s = si as i64 - m as i64;
                    acc += h * roots2[(s * k).rem_euclid(n2) as usize];
                }
                acc * dx
            })
        })
        .collect();

    Ok(WignerField {
        grid,
        values,
        tau,
        label: format!("W_{tau}({},{})", f.label, g.label),
    })
}

/// `A_{1/2} F(x, xi) = int F(x + t/2, x - t/2) e^{-2 pi i xi t} dt` with the
/// same discrete rule as [`cross_wigner`].
pub fn apply_a_half(f2: &SampledFunction2) -> Result<WignerField> {
    if f2.grid_x != f2.grid_y {
        return Err(Error::GridMismatch("apply_a_half requires a square product grid".into()));
    }
    let g = f2.grid_x;
    let m = g.points();
    let dx = g.spacing();
    let roots = unit_roots(m);
    let n = m as i64;
    let values: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|j| {
            let smax = j.min(m - 1 - j) as i64;
            let prods: Vec<Complex64> = (-smax..=smax)
                .map(|s| f2.value((j as i64 + s) as usize, (j as i64 - s) as usize))
                .collect();
            let roots = roots.clone();
            (0..2 * m).map(move |b| {
                let k = b as i64 - n;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, h) in prods.iter().enumerate() {
                    let s = i as i64 - smax;
                    acc += h * roots[(s * k).rem_euclid(n) as usize];
                }
                acc * 2.0 * dx
            })
        })
        .collect();
    Ok(WignerField {
        grid: PhaseSpaceGrid::new(g),
        values,
        tau: 0.5,
        label: format!("A_half[{}]", f2.label),
    })
}

/// `A_{1/2}^{-1} G(x, xi) = int G(x/2 + xi/2, y) e^{2 pi i (x - xi) y} dy`,
/// with the spatial half-points of `G` filled by trigonometric interpolation
/// and the `y` integral read off the central Wigner period.
pub fn apply_a_half_inverse(field: &WignerField) -> SampledFunction2 {
    let g = field.grid.space();
    let m = g.points();
    let ext = g.extent();
    let off = field.grid.central_window_offset();

    // Spatial DFT of each central-period column, then evaluation on the
    // 2M-point half-step grid.
    let half = Grid1D::new(ext, 2 * m).expect("half grid");
    let cols: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|c| {
            let mut hat = vec![Complex64::new(0.0, 0.0); m];
            for (a, h) in hat.iter_mut().enumerate() {
                let mu = g.freq(a);
                for j in 0..m {
                    *h += field.value(j, off + c) * Complex64::from_polar(1.0, -TAU * g.x(j) * mu);
                }
            }
            (0..2 * m)
                .map(|p| {
                    let xp = half.x(p);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (a, h) in hat.iter().enumerate() {
                        acc += h * Complex64::from_polar(1.0, TAU * xp * g.freq(a));
                    }
                    acc * g.spacing() / ext
                })
                .collect()
        })
        .collect();

    let measure = field.grid.wigner_freq_spacing();
    let values: Vec<Complex64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let cols = &cols;
            (0..m).map(move |b| {
                // midpoint (u_a + v_b)/2 on the half grid
                let p = a + b;
                let diff = g.x(a) - g.x(b);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, col) in cols.iter().enumerate() {
                    let y = field.grid.kernel_freq(c);
                    acc += col[p] * Complex64::from_polar(1.0, TAU * diff * y);
                }
                acc * measure
            })
        })
        .collect();

    SampledFunction2 {
        grid_x: g,
        grid_y: g,
        values,
        label: format!("A_half_inv[{}]", field.label),
    }
}

/// Real symplectic matrix with a construction tag and certified invariants.
#[derive(Debug, Clone)]
pub struct SymplecticMatrix {
    pub mat: DMatrix<f64>,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticReport {
    pub kind: String,
    pub form_residual: f64,
    pub det_residual: f64,
}

pub fn standard_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

impl SymplecticMatrix {
    pub fn dim(&self) -> usize {
        self.mat.nrows() / 2
    }

    /// `max |A^T J A - J|` for the J of matching size.
    pub fn form_residual(&self) -> f64 {
        let j = standard_j(self.dim());
        let r = self.mat.transpose() * &j * &self.mat - &j;
        r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn report(&self) -> SymplecticReport {
        SymplecticReport {
            kind: self.kind.clone(),
            form_residual: self.form_residual(),
            det_residual: (self.mat.determinant() - 1.0).abs(),
        }
    }

    pub fn certify(&self) -> Result<()> {
        let rep = self.report();
        if rep.form_residual > 1e-12 || rep.det_residual > 1e-10 {
            return Err(Error::Precondition(format!(
                "matrix {} fails symplectic invariants: form {:.3e}, det {:.3e}",
                self.kind, rep.form_residual, rep.det_residual
            )));
        }
        Ok(())
    }
}

pub enum SymplecticKind<'a> {
    /// The standard symplectic form matrix.
    J { d: usize },
    /// Block `diag(L^{-1}, L^T)` for invertible `L`.
    DL { l: &'a DMatrix<f64> },
    /// Lower unitriangular `[[I, 0], [C, I]]` for symmetric `C`.
    VC { c: &'a DMatrix<f64> },
    /// The 4d x 4d matrix behind the tau-Wigner distribution.
    ATau { d: usize, tau: f64 },
    Product { a: &'a SymplecticMatrix, b: &'a SymplecticMatrix },
}

pub fn symplectic_builder(kind: SymplecticKind<'_>) -> Result<SymplecticMatrix> {
    let built = match kind {
        SymplecticKind::J { d } => SymplecticMatrix { mat: standard_j(d), kind: "J".into() },
        SymplecticKind::DL { l } => {
            let d = l.nrows();
            let linv = l
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidArgument("singular L in D_L".into()))?;
            let mut m = DMatrix::zeros(2 * d, 2 * d);
            m.view_mut((0, 0), (d, d)).copy_from(&linv);
            m.view_mut((d, d), (d, d)).copy_from(&l.transpose());
            SymplecticMatrix { mat: m, kind: "D_L".into() }
        }
        SymplecticKind::VC { c } => {
            let d = c.nrows();
            if (c - c.transpose()).iter().any(|v| v.abs() > 1e-12) {
                return Err(Error::InvalidArgument("asymmetric C in V_C".into()));
            }
            let mut m = DMatrix::identity(2 * d, 2 * d);
            m.view_mut((d, 0), (d, d)).copy_from(c);
            SymplecticMatrix { mat: m, kind: "V_C".into() }
        }
        SymplecticKind::ATau { d, tau } => {
            let mut m = DMatrix::zeros(4 * d, 4 * d);
            let id = DMatrix::<f64>::identity(d, d);
            m.view_mut((0, 0), (d, d)).copy_from(&((1.0 - tau) * &id));
            m.view_mut((0, d), (d, d)).copy_from(&(tau * &id));
            m.view_mut((d, 2 * d), (d, d)).copy_from(&(tau * &id));
            m.view_mut((d, 3 * d), (d, d)).copy_from(&(-(1.0 - tau) * &id));
            m.view_mut((2 * d, 2 * d), (d, d)).copy_from(&id);
            m.view_mut((2 * d, 3 * d), (d, d)).copy_from(&id);
            m.view_mut((3 * d, 0), (d, d)).copy_from(&(-&id));
            m.view_mut((3 * d, d), (d, d)).copy_from(&id);
            SymplecticMatrix { mat: m, kind: format!("A_{tau}") }
        }
        SymplecticKind::Product { a, b } => {
            if a.mat.ncols() != b.mat.nrows() {
                return Err(Error::InvalidArgument(format!(
                    "cannot multiply {}x{} by {}x{}",
                    a.mat.nrows(),
                    a.mat.ncols(),
                    b.mat.nrows(),
                    b.mat.ncols()
                )));
            }
            SymplecticMatrix {
                mat: &a.mat * &b.mat,
                kind: format!("{}*{}", a.kind, b.kind),
            }
        }
    };
    built.certify()?;
    Ok(built)
}
