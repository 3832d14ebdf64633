//! Real phase functions Φ(x, η) on ℝ^d × ℝ^d, tameness certification
//! (bounded derivatives of order ≥ 2 and a nondegenerate mixed Hessian), and
//! the induced canonical transformation χ solved by a damped Newton
//! iteration on x ↦ ∇_η Φ(x, η) = y, then ξ = ∇_x Φ(x, η).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{fd_derivative, multi_indices};
use crate::wigner::SymplecticMatrix;

/// A smooth real phase on ℝ^d_x × ℝ^d_η.
///
/// Closed-form gradients and Hessians are expected from implementors; the
/// trait supplies finite-difference fallbacks only for higher derivatives
/// during certification.
pub trait PhaseFn: Send + Sync {
    /// Dimension d of each of the x and η factors.
    fn dim(&self) -> usize;

    /// Φ(x, η).
    fn eval(&self, x: &[f64], eta: &[f64]) -> f64;

    /// ∇_x Φ.
    fn grad_x(&self, x: &[f64], eta: &[f64]) -> Vec<f64>;

    /// ∇_η Φ.
    fn grad_eta(&self, x: &[f64], eta: &[f64]) -> Vec<f64>;

    /// Full Hessian in the variable order (x_1..x_d, η_1..η_d).
    fn hessian(&self, x: &[f64], eta: &[f64]) -> DMatrix<f64>;

    /// Φ as a function of the joint variable z = (x, η) ∈ ℝ^{2d}.
    fn eval_joint(&self, z: &[f64]) -> f64 {
        let d = self.dim();
        self.eval(&z[..d], &z[d..])
    }
}

/// The mixed block ∂²Φ/∂η_i ∂x_j (rows η, columns x), the Newton Jacobian.
pub fn mixed_block(phase: &dyn PhaseFn, x: &[f64], eta: &[f64]) -> DMatrix<f64> {
    let d = phase.dim();
    let h = phase.hessian(x, eta);
    DMatrix::from_fn(d, d, |i, j| h[(d + i, j)])
}

/// Supremum bound for one derivative multi-index over the probe box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivBound {
    pub alpha: Vec<usize>,
    pub sup: f64,
}

/// Tameness certificate: derivative bounds for 2 ≤ |α| ≤ k_max and the
/// infimum of |det ∂²_{xη}Φ| over the probe box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TameReport {
    pub dim: usize,
    pub k_max: usize,
    pub box_radius: f64,
    pub probes_per_axis: usize,
    pub bounds: Vec<DerivBound>,
    pub delta_hat: f64,
    pub tame: bool,
}

/// Lattice of probe points over [-r, r]^n.
pub fn probe_box(n: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    assert!(per_axis >= 2);
    let step = 2.0 * r / (per_axis - 1) as f64;
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut t| {
            (0..n)
                .map(|_| {
                    let i = t % per_axis;
                    t /= per_axis;
                    -r + i as f64 * step
                })
                .collect()
        })
        .collect()
}

/// Certify tameness of a phase over a probe box.
///
/// Derivatives of order 2 come from the closed-form Hessian; orders 3..k_max
/// differentiate Hessian entries by central finite differences, which keeps
/// the stencil order (and round-off) low.
pub fn tame_certify(
    phase: &dyn PhaseFn,
    k_max: usize,
    box_radius: f64,
    probes_per_axis: usize,
) -> TameReport {
    assert!(k_max >= 2);
    let d = phase.dim();
    let n = 2 * d;
    let probes = probe_box(n, box_radius, probes_per_axis);

    let mut bounds = Vec::new();
    for alpha in multi_indices(n, 2, k_max) {
        let mut sup = 0.0f64;
        for z in &probes {
            let v = phase_derivative(phase, z, &alpha);
            sup = sup.max(v.abs());
        }
        bounds.push(DerivBound { alpha, sup });
    }

    let mut delta_hat = f64::INFINITY;
    for z in &probes {
        let b = mixed_block(phase, &z[..d], &z[d..]);
        delta_hat = delta_hat.min(b.determinant().abs());
    }

    let all_finite = bounds.iter().all(|b| b.sup.is_finite());
    let tame = all_finite && delta_hat > 1e-8;
    TameReport {
        dim: d,
        k_max,
        box_radius,
        probes_per_axis,
        bounds,
        delta_hat,
        tame,
    }
}

/// ∂^α Φ at z = (x, η) for |α| ≥ 2: peel two orders into a Hessian entry and
/// finite-difference the remainder.
fn phase_derivative(phase: &dyn PhaseFn, z: &[f64], alpha: &[usize]) -> f64 {
    let d = phase.dim();
    // pick the first two unit reductions
    let mut rem = alpha.to_vec();
    let mut picks = Vec::with_capacity(2);
    'outer: for _ in 0..2 {
        for (v, r) in rem.iter_mut().enumerate() {
            if *r > 0 {
                *r -= 1;
                picks.push(v);
                continue 'outer;
            }
        }
    }
    let (i, j) = (picks[0], picks[1]);
    let entry = move |w: &[f64]| {
        Complex64::new(phase.hessian(&w[..d], &w[d..])[(i, j)], 0.0)
    };
    fd_derivative(&entry, z, &rem, None).re
}

/// A phase together with its tameness certificate.
#[derive(Clone)]
pub struct TamePhase {
    pub phase: Arc<dyn PhaseFn>,
    pub label: String,
    pub cert: Option<TameReport>,
}

impl TamePhase {
    pub fn new(phase: Arc<dyn PhaseFn>, label: impl Into<String>) -> Self {
        Self {
            phase,
            label: label.into(),
            cert: None,
        }
    }

    /// Run (or re-run) certification and store the report.
    pub fn certify(&mut self, k_max: usize, box_radius: f64, probes_per_axis: usize) -> &TameReport {
        let report = tame_certify(self.phase.as_ref(), k_max, box_radius, probes_per_axis);
        self.cert = Some(report);
        self.cert.as_ref().unwrap()
    }

    pub fn require_tame(&self) -> Result<&TameReport> {
        match &self.cert {
            Some(r) if r.tame => Ok(r),
            Some(_) => Err(Error::Precondition(format!(
                "phase '{}' failed tameness certification",
                self.label
            ))),
            None => Err(Error::Precondition(format!(
                "phase '{}' has not been tame-certified",
                self.label
            ))),
        }
    }
}

/// Solve ∇_η Φ(x, η) = y for x by damped Newton from `x_init`, then return
/// (x, ξ) with ξ = ∇_x Φ(x, η). Errors if the phase is uncertified or the
/// iteration does not converge within 50 steps.
pub fn solve_canonical_map(
    tame: &TamePhase,
    y: &[f64],
    eta: &[f64],
    x_init: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    tame.require_tame()?;
    let phase = tame.phase.as_ref();
    let d = phase.dim();
    if y.len() != d || eta.len() != d || x_init.len() != d {
        return Err(Error::InvalidArgument(format!(
            "canonical map solve expects vectors of length {d}"
        )));
    }

    let residual = |x: &[f64]| -> DVector<f64> {
        let g = phase.grad_eta(x, eta);
        DVector::from_iterator(d, g.iter().zip(y).map(|(gi, yi)| gi - yi))
    };

    let mut x = DVector::from_column_slice(x_init);
    let mut r = residual(x.as_slice());
    for _ in 0..50 {
        if r.norm() <= tol {
            let xi = phase.grad_x(x.as_slice(), eta);
            return Ok((x.as_slice().to_vec(), xi));
        }
        let jac = mixed_block(phase, x.as_slice(), eta);
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::SolverDiverged("singular Newton Jacobian".into()))?;
        // damped update: halve until the residual actually decreases
        let mut lambda = 1.0;
        loop {
            let cand = &x - &step * lambda;
            let rc = residual(cand.as_slice());
            if rc.norm() <= (1.0 - 0.25 * lambda) * r.norm() || lambda < 1e-4 {
                x = cand;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
    }
    if r.norm() <= tol {
        let xi = phase.grad_x(x.as_slice(), eta);
        return Ok((x.as_slice().to_vec(), xi));
    }
    Err(Error::SolverDiverged(format!(
        "canonical map Newton residual {:.3e} after 50 iterations",
        r.norm()
    )))
}

type MapEval = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A canonical transformation χ: (y, η) ↦ (x, ξ) on phase space ℝ^{2d}.
#[derive(Clone)]
pub struct CanonicalMap {
    pub d: usize,
    pub label: String,
    eval: MapEval,
    inverse: Option<MapEval>,
}

impl CanonicalMap {
    pub fn from_closed_form(
        d: usize,
        label: impl Into<String>,
        eval: MapEval,
        inverse: Option<MapEval>,
    ) -> Self {
        Self {
            d,
            label: label.into(),
            eval,
            inverse,
        }
    }

    /// The map induced by a tame phase, backed by the Newton solver with the
    /// slice position as the initial guess.
    pub fn from_phase(tame: TamePhase, tol: f64) -> Result<Self> {
        tame.require_tame()?;
        let d = tame.phase.dim();
        let label = format!("chi[{}]", tame.label);
        let eval: MapEval = Arc::new(move |z: &[f64]| {
            let (y, eta) = z.split_at(d);
            let (x, xi) = solve_canonical_map(&tame, y, eta, y, tol)?;
            Ok(x.into_iter().chain(xi).collect())
        });
        Ok(Self {
            d,
            label,
            eval,
            inverse: None,
        })
    }

    pub fn with_inverse(mut self, inverse: MapEval) -> Self {
        self.inverse = Some(inverse);
        self
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != 2 * self.d {
            return Err(Error::InvalidArgument(format!(
                "map '{}' expects points in R^{}",
                self.label,
                2 * self.d
            )));
        }
        (self.eval)(z)
    }

    pub fn eval_inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.inverse {
            Some(inv) => inv(z),
            None => Err(Error::Precondition(format!(
                "map '{}' has no inverse registered",
                self.label
            ))),
        }
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// Jacobian dχ(z) by central differences.
    pub fn jacobian(&self, z: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = 2 * self.d;
        let mut cols = Vec::with_capacity(n);
        for v in 0..n {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[v] += h;
            zm[v] -= h;
            let fp = self.eval(&zp)?;
            let fm = self.eval(&zm)?;
            cols.push(
                fp.iter()
                    .zip(&fm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect::<Vec<f64>>(),
            );
        }
        Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }
}

/// Certification report for a canonical map over a probe box:
/// symplecticity of the Jacobian, bi-Lipschitz growth ratios, and the
/// infimum of |det ∂x/∂y| (the graph nondegeneracy constant).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapReport {
    pub dim: usize,
    pub box_radius: f64,
    pub probes_per_axis: usize,
    pub symplectic_residual: f64,
    pub growth_min: f64,
    pub growth_max: f64,
    pub graph_det_inf: f64,
    pub certified: bool,
}

/// Probe-based certification of a canonical map.
pub fn map_certify(
    map: &CanonicalMap,
    box_radius: f64,
    probes_per_axis: usize,
    fd_step: f64,
    residual_tol: f64,
) -> Result<MapReport> {
    let d = map.d;
    let n = 2 * d;
    let probes = probe_box(n, box_radius, probes_per_axis);

    let mut residual = 0.0f64;
    let mut graph_det = f64::INFINITY;
    let mut growth_min = f64::INFINITY;
    let mut growth_max = 0.0f64;

    for z in &probes {
        let jac = map.jacobian(z, fd_step)?;
        let sym = SymplecticMatrix {
            mat: jac.clone(),
            kind: "jacobian".into(),
        };
        residual = residual.max(sym.form_residual());
        let block = DMatrix::from_fn(d, d, |i, jx| jac[(i, jx)]);
        graph_det = graph_det.min(block.determinant().abs());

        let r = z.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r >= 0.5 * box_radius {
            let img = map.eval(z)?;
            let ri = img.iter().map(|t| t * t).sum::<f64>().sqrt();
            growth_min = growth_min.min((1.0 + ri) / (1.0 + r));
            growth_max = growth_max.max((1.0 + ri) / (1.0 + r));
        }
    }

    let certified = residual <= residual_tol
        && graph_det > 1e-8
        && growth_min > 0.0
        && growth_max.is_finite();
    Ok(MapReport {
        dim: d,
        box_radius,
        probes_per_axis,
        symplectic_residual: residual,
        growth_min,
        growth_max,
        graph_det_inf: graph_det,
        certified,
    })
}

// ---------------------------------------------------------------------------
// Concrete phases
// ---------------------------------------------------------------------------

/// Φ(x, η) = x·η, the identity operator's phase.
#[derive(Debug, Clone)]
pub struct BilinearPhase {
    pub d: usize,
}

impl PhaseFn for BilinearPhase {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64], eta: &[f64]) -> f64 {
        x.iter().zip(eta).map(|(a, b)| a * b).sum()
    }
    fn grad_x(&self, _x: &[f64], eta: &[f64]) -> Vec<f64> {
        eta.to_vec()
    }
    fn grad_eta(&self, x: &[f64], _eta: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn hessian(&self, _x: &[f64], _eta: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            if i < d && j == i + d || j < d && i == j + d {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Φ(x, η) = x·η − τ|η|², the free-particle propagator phase at time τ.
#[derive(Debug, Clone)]
pub struct FreeParticlePhase {
    pub d: usize,
    pub tau: f64,
}

impl PhaseFn for FreeParticlePhase {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64], eta: &[f64]) -> f64 {
        let xe: f64 = x.iter().zip(eta).map(|(a, b)| a * b).sum();
        let e2: f64 = eta.iter().map(|b| b * b).sum();
        xe - self.tau * e2
    }
    fn grad_x(&self, _x: &[f64], eta: &[f64]) -> Vec<f64> {
        eta.to_vec()
    }
    fn grad_eta(&self, x: &[f64], eta: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(eta)
            .map(|(a, b)| a - 2.0 * self.tau * b)
            .collect()
    }
    fn hessian(&self, _x: &[f64], _eta: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            if i < d && j == i + d || j < d && i == j + d {
                1.0
            } else if i >= d && i == j {
                -2.0 * self.tau
            } else {
                0.0
            }
        })
    }
}

/// Φ(x, η) = x·η + (c/2)|x|², a chirp-multiplier phase whose canonical map
/// is the vertical shear (y, η) ↦ (y, η + c·y).
#[derive(Debug, Clone)]
pub struct QuadraticPhase {
    pub d: usize,
    pub c: f64,
}

impl PhaseFn for QuadraticPhase {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64], eta: &[f64]) -> f64 {
        let xe: f64 = x.iter().zip(eta).map(|(a, b)| a * b).sum();
        let x2: f64 = x.iter().map(|a| a * a).sum();
        xe + 0.5 * self.c * x2
    }
    fn grad_x(&self, x: &[f64], eta: &[f64]) -> Vec<f64> {
        x.iter().zip(eta).map(|(a, b)| b + self.c * a).collect()
    }
    fn grad_eta(&self, x: &[f64], _eta: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn hessian(&self, _x: &[f64], _eta: &[f64]) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            if i < d && j == i + d || j < d && i == j + d {
                1.0
            } else if i < d && i == j {
                self.c
            } else {
                0.0
            }
        })
    }
}

/// Φ(x, η) = xη + ε sin(x) sin(η) in dimension one: tame for |ε| < 1 but
/// with no closed-form canonical map, exercising the Newton route.
#[derive(Debug, Clone)]
pub struct SinPerturbedPhase {
    pub eps: f64,
}

impl PhaseFn for SinPerturbedPhase {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64], eta: &[f64]) -> f64 {
        x[0] * eta[0] + self.eps * x[0].sin() * eta[0].sin()
    }
    fn grad_x(&self, x: &[f64], eta: &[f64]) -> Vec<f64> {
        vec![eta[0] + self.eps * x[0].cos() * eta[0].sin()]
    }
    fn grad_eta(&self, x: &[f64], eta: &[f64]) -> Vec<f64> {
        vec![x[0] + self.eps * x[0].sin() * eta[0].cos()]
    }
    fn hessian(&self, x: &[f64], eta: &[f64]) -> DMatrix<f64> {
        let e = self.eps;
        let (s, c) = (x[0].sin(), x[0].cos());
        let (se, ce) = (eta[0].sin(), eta[0].cos());
        let mixed = 1.0 + e * c * ce;
        DMatrix::from_row_slice(2, 2, &[-e * s * se, mixed, mixed, -e * s * se])
    }
}

/// Closed-form horizontal shear χ(y, η) = (y + c·η, η) in dimension one.
pub fn shear_map(c: f64, label: impl Into<String>) -> CanonicalMap {
    let fwd: MapEval = Arc::new(move |z: &[f64]| Ok(vec![z[0] + c * z[1], z[1]]));
    let inv: MapEval = Arc::new(move |z: &[f64]| Ok(vec![z[0] - c * z[1], z[1]]));
    CanonicalMap::from_closed_form(1, label, fwd, Some(inv))
}

/// Closed-form vertical shear χ(y, η) = (y, η + c·y) in dimension one.
pub fn vertical_shear_map(c: f64, label: impl Into<String>) -> CanonicalMap {
    let fwd: MapEval = Arc::new(move |z: &[f64]| Ok(vec![z[0], z[1] + c * z[0]]));
    let inv: MapEval = Arc::new(move |z: &[f64]| Ok(vec![z[0], z[1] - c * z[0]]));
    CanonicalMap::from_closed_form(1, label, fwd, Some(inv))
}

/// Identity map on ℝ^{2d}.
pub fn identity_map(d: usize) -> CanonicalMap {
    let fwd: MapEval = Arc::new(|z: &[f64]| Ok(z.to_vec()));
    let inv: MapEval = Arc::new(|z: &[f64]| Ok(z.to_vec()));
    CanonicalMap::from_closed_form(d, "identity", fwd, Some(inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn certified(phase: Arc<dyn PhaseFn>, label: &str) -> TamePhase {
        let mut p = TamePhase::new(phase, label);
        p.certify(4, 6.0, 9);
        p
    }

    #[test]
    fn bilinear_is_tame_with_unit_mixed_det() {
        let p = certified(Arc::new(BilinearPhase { d: 1 }), "bilinear");
        let r = p.cert.as_ref().unwrap();
        assert!(r.tame);
        assert!((r.delta_hat - 1.0).abs() < 1e-12);
        // all derivative sups of order >= 3 vanish; order 2 sup is 1
        let max2: f64 = r
            .bounds
            .iter()
            .filter(|b| b.alpha.iter().sum::<usize>() == 2)
            .map(|b| b.sup)
            .fold(0.0, f64::max);
        assert!((max2 - 1.0).abs() < 1e-10);
        let max34: f64 = r
            .bounds
            .iter()
            .filter(|b| b.alpha.iter().sum::<usize>() >= 3)
            .map(|b| b.sup)
            .fold(0.0, f64::max);
        assert!(max34 < 1e-6, "cubic+ bounds {max34}");
    }

    #[test]
    fn sin_perturbed_tameness_depends_on_eps() {
        let tame = certified(Arc::new(SinPerturbedPhase { eps: 0.25 }), "sin(0.25)");
        let r = tame.cert.as_ref().unwrap();
        assert!(r.tame);
        assert!(r.delta_hat >= 0.74 && r.delta_hat <= 0.76, "{}", r.delta_hat);

        // eps = 1 degenerates the mixed Hessian at (x, eta) = (pi, 0)
        let mut flat = TamePhase::new(Arc::new(SinPerturbedPhase { eps: 1.0 }), "sin(1)");
        flat.certify(2, PI, 5);
        assert!(!flat.cert.as_ref().unwrap().tame);
        assert!(flat.require_tame().is_err());
    }

    #[test]
    fn uncertified_phase_rejected_by_solver() {
        let p = TamePhase::new(Arc::new(BilinearPhase { d: 1 }), "bilinear");
        let err = solve_canonical_map(&p, &[0.3], &[0.1], &[0.3], 1e-12);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn newton_reproduces_free_particle_transport() {
        let tau = 0.3;
        let p = certified(Arc::new(FreeParticlePhase { d: 1, tau }), "free");
        for &(y, eta) in &[(0.7, -1.3), (-2.0, 0.5), (0.0, 2.0)] {
            let (x, xi) = solve_canonical_map(&p, &[y], &[eta], &[y], 1e-12).unwrap();
            assert!((x[0] - (y + 2.0 * tau * eta)).abs() < 1e-10);
            assert!((xi[0] - eta).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_matches_implicit_equation_for_sin_phase() {
        let p = certified(Arc::new(SinPerturbedPhase { eps: 0.25 }), "sin");
        let phase = p.phase.clone();
        for &(y, eta) in &[(1.1, 0.4), (-0.8, 2.2), (3.0, -1.5)] {
            let (x, xi) = solve_canonical_map(&p, &[y], &[eta], &[y], 1e-12).unwrap();
            let g = phase.grad_eta(&x, &[eta]);
            assert!((g[0] - y).abs() < 1e-11);
            let gx = phase.grad_x(&x, &[eta]);
            assert!((gx[0] - xi[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_phase_yields_vertical_shear() {
        let c = 0.8;
        let p = certified(Arc::new(QuadraticPhase { d: 1, c }), "quadratic");
        let chi = CanonicalMap::from_phase(p, 1e-12).unwrap();
        let img = chi.eval(&[1.5, -0.4]).unwrap();
        assert!((img[0] - 1.5).abs() < 1e-10);
        assert!((img[1] - (-0.4 + c * 1.5)).abs() < 1e-10);
    }

    #[test]
    fn map_certification_accepts_shears_and_newton_maps() {
        let shear = shear_map(0.6, "shear(0.6)");
        let r = map_certify(&shear, 4.0, 7, 1e-4, 1e-6).unwrap();
        assert!(r.certified, "{r:?}");
        assert!(r.symplectic_residual < 1e-9);
        assert!((r.graph_det_inf - 1.0).abs() < 1e-9);

        let p = certified(Arc::new(SinPerturbedPhase { eps: 0.25 }), "sin");
        let chi = CanonicalMap::from_phase(p, 1e-12).unwrap();
        let r = map_certify(&chi, 4.0, 7, 1e-4, 1e-6).unwrap();
        assert!(r.certified, "{r:?}");
        assert!(r.graph_det_inf > 0.5, "{}", r.graph_det_inf);
    }

    #[test]
    fn non_symplectic_map_rejected() {
        let bad: MapEval = Arc::new(|z: &[f64]| Ok(vec![2.0 * z[0], z[1]]));
        let m = CanonicalMap::from_closed_form(1, "stretch", bad, None);
        let r = map_certify(&m, 4.0, 5, 1e-4, 1e-6).unwrap();
        assert!(!r.certified);
        assert!(r.symplectic_residual > 0.5);
    }

    #[test]
    fn shear_inverse_round_trip() {
        let shear = shear_map(1.7, "shear");
        let z = [0.9, -2.3];
        let back = shear.eval_inverse(&shear.eval(&z).unwrap()).unwrap();
        assert!((back[0] - z[0]).abs() < 1e-14 && (back[1] - z[1]).abs() < 1e-14);
        assert!(identity_map(2).eval(&[1.0, 2.0, 3.0, 4.0]).unwrap() == vec![1.0, 2.0, 3.0, 4.0]);
    }
}
