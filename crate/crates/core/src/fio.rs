//! Oscillatory integral operators of type I,
//! `T f(x) = int e^{2 pi i Phi(x, xi)} sigma(x, xi) fhat(xi) dxi`,
//! and type II,
//! `T f(x) = int int e^{-2 pi i [Phi(y, xi) - x xi]} tau(y, xi) f(y) dy dxi`,
//! discretized on the shared grid conventions of [`crate::grid`]: the
//! frequency integral runs over the dual lattice `xi_k = (k - M/2)/L` with
//! measure `1/L`, the spatial integral over the sample lattice with measure
//! `dx`. Type II with `tau = conj(sigma)` is the exact discrete adjoint of
//! type I.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::grid::{fourier, Grid1D, SampledFunction, SampledFunction2, TAU};
use crate::phases::{CanonicalMap, PhaseFn, TamePhase};
use crate::symbols::SymbolFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Type1,
    Type2,
}

/// Serializable operator description resolved through the catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    /// Catalog phase spec, e.g. `free_particle:0.25`.
    pub phase: String,
    /// Catalog symbol spec, e.g. `gaussian` or `shubin_decay:-6`.
    pub symbol: String,
    /// Certification box half-width (default 6).
    #[serde(default = "default_cert_radius")]
    pub cert_radius: f64,
    /// Certification probes per axis (default 9).
    #[serde(default = "default_cert_probes")]
    pub cert_probes: usize,
}

fn default_cert_radius() -> f64 {
    6.0
}
fn default_cert_probes() -> usize {
    9
}

/// A ready-to-apply operator: certified phase, symbol, and the canonical
/// transformation when a closed form is registered.
pub struct FioOperator {
    pub kind: OperatorKind,
    pub tame: TamePhase,
    pub symbol: Arc<dyn SymbolFn>,
    pub closed_map: Option<CanonicalMap>,
    pub label: String,
}

/// Resolve a config against the catalog, certifying the phase up to fourth
/// derivatives over the configured box.
pub fn build_operator(catalog: &Catalog, config: &OperatorConfig) -> Result<FioOperator> {
    let entry = catalog.phase(&config.phase)?;
    let mut tame = entry.tame;
    tame.certify(4, config.cert_radius, config.cert_probes);
    tame.require_tame()?;
    let symbol = catalog.symbol(&config.symbol, 2 * tame.phase.dim())?;
    Ok(FioOperator {
        kind: config.kind,
        tame,
        symbol,
        closed_map: entry.closed_map,
        label: format!("{:?}[{},{}]", config.kind, config.phase, config.symbol),
    })
}

/// Apply a type-I operator:
/// `T f(x_j) = (1/L) sum_k e^{2 pi i Phi(x_j, xi_k)} sigma(x_j, xi_k) fhat(xi_k)`.
pub fn apply_fio1(op: &FioOperator, f: &SampledFunction) -> Result<SampledFunction> {
    if op.kind != OperatorKind::Type1 {
        return Err(Error::Precondition(format!(
            "'{}' is not a type-I operator",
            op.label
        )));
    }
    op.tame.require_tame()?;
    let g = f.grid;
    let m = g.points();
    let fh = fourier(f);
    let phase = op.tame.phase.as_ref();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let x = g.x(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in fh.values.iter().enumerate() {
            let xi = g.freq(k);
            let sym = op.symbol.eval(&[x, xi]);
            acc += Complex64::from_polar(1.0, TAU * phase.eval(&[x], &[xi])) * sym * v;
        }
        out.push(acc / g.extent());
    }
    SampledFunction::new(g, out, format!("{}[{}]", op.label, f.label))
}

/// Apply a type-II operator; the inner spatial sum is carried out first so
/// the cost stays `O(M^2)`:
/// `T f(x_j) = (1/L) sum_k e^{2 pi i x_j xi_k} A(k)` with
/// `A(k) = dx sum_l e^{-2 pi i Phi(y_l, xi_k)} tau(y_l, xi_k) f(y_l)`.
pub fn apply_fio2(op: &FioOperator, f: &SampledFunction) -> Result<SampledFunction> {
    if op.kind != OperatorKind::Type2 {
        return Err(Error::Precondition(format!(
            "'{}' is not a type-II operator",
            op.label
        )));
    }
    op.tame.require_tame()?;
    let g = f.grid;
    let m = g.points();
    let dx = g.spacing();
    let phase = op.tame.phase.as_ref();
    let mut inner = Vec::with_capacity(m);
    for k in 0..m {
        let xi = g.freq(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, v) in f.values.iter().enumerate() {
            let y = g.x(l);
            let sym = op.symbol.eval(&[y, xi]);
            acc += Complex64::from_polar(1.0, -TAU * phase.eval(&[y], &[xi])) * sym * v;
        }
        inner.push(acc * dx);
    }
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let x = g.x(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in inner.iter().enumerate() {
            let xi = g.freq(k);
            acc += a * Complex64::from_polar(1.0, TAU * x * xi);
        }
        out.push(acc / g.extent());
    }
    SampledFunction::new(g, out, format!("{}[{}]", op.label, f.label))
}

/// Apply whichever kind the operator is.
pub fn apply_fio(op: &FioOperator, f: &SampledFunction) -> Result<SampledFunction> {
    match op.kind {
        OperatorKind::Type1 => apply_fio1(op, f),
        OperatorKind::Type2 => apply_fio2(op, f),
    }
}

/// Kohn-Nirenberg quantization `a(x, D) f`: the type-I operator with the
/// bilinear phase, delegated verbatim so results are bit-identical.
pub fn kohn_nirenberg(symbol: Arc<dyn SymbolFn>, f: &SampledFunction) -> Result<SampledFunction> {
    let mut tame = TamePhase::new(
        Arc::new(crate::phases::BilinearPhase { d: 1 }),
        "kohn-nirenberg",
    );
    tame.certify(2, 4.0, 5);
    let op = FioOperator {
        kind: OperatorKind::Type1,
        tame,
        symbol,
        closed_map: None,
        label: "a(x,D)".into(),
    };
    apply_fio1(&op, f)
}

/// The Schwartz (integral) kernel `K(x, y)` on the product grid:
/// type I:  `K(x, y) = (1/L) sum_k e^{2 pi i (Phi(x, xi_k) - y xi_k)} sigma(x, xi_k)`
/// type II: `K(x, y) = (1/L) sum_k e^{-2 pi i (Phi(y, xi_k) - x xi_k)} tau(y, xi_k)`.
pub fn schwartz_kernel(op: &FioOperator, grid: Grid1D) -> Result<SampledFunction2> {
    op.tame.require_tame()?;
    let m = grid.points();
    let phase = op.tame.phase.as_ref();
    let mut values = Vec::with_capacity(m * m);
    for j in 0..m {
        let x = grid.x(j);
        for l in 0..m {
            let y = grid.x(l);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..m {
                let xi = grid.freq(k);
                let (arg, sym) = match op.kind {
                    OperatorKind::Type1 => {
                        (phase.eval(&[x], &[xi]) - y * xi, op.symbol.eval(&[x, xi]))
                    }
                    OperatorKind::Type2 => {
                        (-(phase.eval(&[y], &[xi]) - x * xi), op.symbol.eval(&[y, xi]))
                    }
                };
                acc += Complex64::from_polar(1.0, TAU * arg) * sym;
            }
            values.push(acc / grid.extent());
        }
    }
    Ok(SampledFunction2 {
        grid_x: grid,
        grid_y: grid,
        values,
        label: format!("K[{}]", op.label),
    })
}

/// `g(x_j) = dx sum_l K(x_j, y_l) f(y_l)`.
pub fn apply_schwartz_kernel(k: &SampledFunction2, f: &SampledFunction) -> Result<SampledFunction> {
    if k.grid_y != f.grid {
        return Err(Error::GridMismatch("kernel/input grid mismatch".into()));
    }
    let m = k.grid_x.points();
    let n = k.grid_y.points();
    let dx = k.grid_y.spacing();
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..n {
            acc += k.value(j, l) * f.values[l];
        }
        out.push(acc * dx);
    }
    SampledFunction::new(k.grid_x, out, format!("{}[{}]", k.label, f.label))
}

/// Pointwise complex conjugate of a symbol.
pub struct ConjSymbol {
    pub inner: Arc<dyn SymbolFn>,
}

impl SymbolFn for ConjSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, z: &[f64]) -> Complex64 {
        self.inner.eval(z).conj()
    }
    fn derivative(&self, z: &[f64], alpha: &[usize]) -> Complex64 {
        self.inner.derivative(z, alpha).conj()
    }
    fn order_hint(&self) -> Option<f64> {
        self.inner.order_hint()
    }
}

/// The adjoint operator: type I with symbol `sigma` maps to type II with
/// symbol `conj(sigma)` over the same phase, and vice versa. The pairing
/// `<T f, g> = <f, T* g>` then holds exactly on the grid.
pub fn adjoint_operator(op: &FioOperator) -> FioOperator {
    let kind = match op.kind {
        OperatorKind::Type1 => OperatorKind::Type2,
        OperatorKind::Type2 => OperatorKind::Type1,
    };
    FioOperator {
        kind,
        tame: op.tame.clone(),
        symbol: Arc::new(ConjSymbol {
            inner: op.symbol.clone(),
        }),
        closed_map: op.closed_map.clone(),
        label: format!("adj[{}]", op.label),
    }
}

// ---------------------------------------------------------------------------
// Doubled (tensorized) phases and symbols for the type-II kernel analysis
// ---------------------------------------------------------------------------

/// Which doubled phase to build from a base phase on ℝ^d × ℝ^d; all three
/// live on ℝ^{2d} × ℝ^{2d} with variables ((y1, y2), (xi1, xi2)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubledVariant {
    /// `Phi(y1, xi1) + y2·xi2`
    FirstFactor,
    /// `-Phi(y2, -xi2) + y1·xi1`
    SecondFactor,
    /// `Phi(y1, xi1) - Phi(y2, -xi2)`
    Difference,
}

pub struct DoubledPhase {
    pub base: Arc<dyn PhaseFn>,
    pub variant: DoubledVariant,
}

impl DoubledPhase {
    fn split<'a>(&self, v: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        v.split_at(self.base.dim())
    }
}

impl PhaseFn for DoubledPhase {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn eval(&self, y: &[f64], xi: &[f64]) -> f64 {
        let (y1, y2) = self.split(y);
        let (x1, x2) = self.split(xi);
        let neg_x2: Vec<f64> = x2.iter().map(|t| -t).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        match self.variant {
            DoubledVariant::FirstFactor => self.base.eval(y1, x1) + dot(y2, x2),
            DoubledVariant::SecondFactor => -self.base.eval(y2, &neg_x2) + dot(y1, x1),
            DoubledVariant::Difference => self.base.eval(y1, x1) - self.base.eval(y2, &neg_x2),
        }
    }

    fn grad_x(&self, y: &[f64], xi: &[f64]) -> Vec<f64> {
        let d = self.base.dim();
        let (y1, y2) = self.split(y);
        let (x1, x2) = self.split(xi);
        let neg_x2: Vec<f64> = x2.iter().map(|t| -t).collect();
        let mut out = vec![0.0; 2 * d];
        match self.variant {
            DoubledVariant::FirstFactor => {
                out[..d].copy_from_slice(&self.base.grad_x(y1, x1));
                out[d..].copy_from_slice(x2);
            }
            DoubledVariant::SecondFactor => {
                out[..d].copy_from_slice(x1);
                let g = self.base.grad_x(y2, &neg_x2);
                for (o, v) in out[d..].iter_mut().zip(g) {
                    *o = -v;
                }
            }
            DoubledVariant::Difference => {
                out[..d].copy_from_slice(&self.base.grad_x(y1, x1));
                let g = self.base.grad_x(y2, &neg_x2);
                for (o, v) in out[d..].iter_mut().zip(g) {
                    *o = -v;
                }
            }
        }
        out
    }

    fn grad_eta(&self, y: &[f64], xi: &[f64]) -> Vec<f64> {
        let d = self.base.dim();
        let (y1, y2) = self.split(y);
        let (x1, x2) = self.split(xi);
        let neg_x2: Vec<f64> = x2.iter().map(|t| -t).collect();
        let mut out = vec![0.0; 2 * d];
        match self.variant {
            DoubledVariant::FirstFactor => {
                out[..d].copy_from_slice(&self.base.grad_eta(y1, x1));
                out[d..].copy_from_slice(y2);
            }
            DoubledVariant::SecondFactor => {
                out[..d].copy_from_slice(y1);
                // d/dxi2 of -Phi(y2, -xi2) = +Phi_eta(y2, -xi2)
                out[d..].copy_from_slice(&self.base.grad_eta(y2, &neg_x2));
            }
            DoubledVariant::Difference => {
                out[..d].copy_from_slice(&self.base.grad_eta(y1, x1));
                out[d..].copy_from_slice(&self.base.grad_eta(y2, &neg_x2));
            }
        }
        out
    }

    fn hessian(&self, y: &[f64], xi: &[f64]) -> DMatrix<f64> {
        // variable order: (y1, y2, xi1, xi2); compose from the base Hessian
        // at (y1, xi1) and at (y2, -xi2) with the chain-rule signs.
        let d = self.base.dim();
        let (y1, y2) = self.split(y);
        let (x1, x2) = self.split(xi);
        let neg_x2: Vec<f64> = x2.iter().map(|t| -t).collect();
        let h1 = self.base.hessian(y1, x1);
        let h2 = self.base.hessian(y2, &neg_x2);
        let mut h = DMatrix::zeros(4 * d, 4 * d);
        // index blocks: y1 -> 0, y2 -> d, xi1 -> 2d, xi2 -> 3d
        let mut add = |row: usize, col: usize, i: usize, j: usize, v: f64| {
            h[(row + i, col + j)] += v;
            if row != col {
                h[(col + j, row + i)] += v;
            }
        };
        for i in 0..d {
            for j in 0..d {
                match self.variant {
                    DoubledVariant::FirstFactor => {
                        add(0, 0, i, j, h1[(i, j)]);
                        add(0, 2 * d, i, j, h1[(i, d + j)]);
                        add(2 * d, 2 * d, i, j, h1[(d + i, d + j)]);
                        if i == j {
                            add(d, 3 * d, i, j, 1.0);
                        }
                    }
                    DoubledVariant::SecondFactor => {
                        if i == j {
                            add(0, 2 * d, i, j, 1.0);
                        }
                        // -Phi(y2, -xi2): yy -> -Phi_xx, y xi2 -> +Phi_x eta,
                        // xi2 xi2 -> -Phi_eta eta
                        add(d, d, i, j, -h2[(i, j)]);
                        add(d, 3 * d, i, j, h2[(i, d + j)]);
                        add(3 * d, 3 * d, i, j, -h2[(d + i, d + j)]);
                    }
                    DoubledVariant::Difference => {
                        add(0, 0, i, j, h1[(i, j)]);
                        add(0, 2 * d, i, j, h1[(i, d + j)]);
                        add(2 * d, 2 * d, i, j, h1[(d + i, d + j)]);
                        add(d, d, i, j, -h2[(i, j)]);
                        add(d, 3 * d, i, j, h2[(i, d + j)]);
                        add(3 * d, 3 * d, i, j, -h2[(d + i, d + j)]);
                    }
                }
            }
        }
        h
    }
}

/// Doubled symbol `T(y1, y2, xi1, xi2) = tau(y1, xi1) conj(tau(y2, -xi2))`.
pub struct DoubledSymbol {
    pub base: Arc<dyn SymbolFn>,
}

impl SymbolFn for DoubledSymbol {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }
    fn eval(&self, z: &[f64]) -> Complex64 {
        let d = self.base.dim() / 2;
        // z = (y1, y2, xi1, xi2), each of length d
        let first: Vec<f64> = z[..d].iter().chain(&z[2 * d..3 * d]).copied().collect();
        let second: Vec<f64> = z[d..2 * d]
            .iter()
            .copied()
            .chain(z[3 * d..].iter().map(|t| -t))
            .collect();
        self.base.eval(&first) * self.base.eval(&second).conj()
    }
    fn order_hint(&self) -> Option<f64> {
        // the product of two copies doubles the order along the diagonal
        self.base.order_hint().map(|m| 2.0 * m)
    }
}

/// One-sided doubled symbols: `tau(y1, xi1) ⊗ 1` and `1 ⊗ conj(tau(y2, -xi2))`.
/// The constant factor 1 prevents any negative-order decay claim, so these
/// carry no order hint and certify only in the flat-weight class.
pub struct PartialDoubledSymbol {
    pub base: Arc<dyn SymbolFn>,
    pub second_factor: bool,
}

impl SymbolFn for PartialDoubledSymbol {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }
    fn eval(&self, z: &[f64]) -> Complex64 {
        let d = self.base.dim() / 2;
        if self.second_factor {
            let arg: Vec<f64> = z[d..2 * d]
                .iter()
                .copied()
                .chain(z[3 * d..].iter().map(|t| -t))
                .collect();
            self.base.eval(&arg).conj()
        } else {
            let arg: Vec<f64> = z[..d].iter().chain(&z[2 * d..3 * d]).copied().collect();
            self.base.eval(&arg)
        }
    }
}

/// The tensorized phase/symbol family of a type-II operator on ℝ^{4d}:
/// the two one-factor liftings, their difference phase, and the matching
/// symbols, all over variables (y1, y2, xi1, xi2).
pub struct TensorizedPair {
    /// `Phi(y1, xi1) + y2·xi2`
    pub phase_first: Arc<dyn PhaseFn>,
    /// `-Phi(y2, -xi2) + y1·xi1`
    pub phase_second: Arc<dyn PhaseFn>,
    /// `Phi(y1, xi1) - Phi(y2, -xi2)`
    pub phase_product: Arc<dyn PhaseFn>,
    /// `tau(y1, xi1) ⊗ 1`
    pub symbol_first: Arc<dyn SymbolFn>,
    /// `1 ⊗ conj(tau(y2, -xi2))`
    pub symbol_second: Arc<dyn SymbolFn>,
    /// `tau(y1, xi1) conj(tau(y2, -xi2))`
    pub symbol_product: Arc<dyn SymbolFn>,
}

/// Lift a certified phase/symbol pair to the doubled variables.
pub fn tensorize_type2(tame: &TamePhase, symbol: Arc<dyn SymbolFn>) -> Result<TensorizedPair> {
    tame.require_tame()?;
    if symbol.dim() != 2 * tame.phase.dim() {
        return Err(Error::InvalidArgument(
            "symbol dimension does not match the phase".into(),
        ));
    }
    let lift = |variant| -> Arc<dyn PhaseFn> {
        Arc::new(DoubledPhase {
            base: tame.phase.clone(),
            variant,
        })
    };
    Ok(TensorizedPair {
        phase_first: lift(DoubledVariant::FirstFactor),
        phase_second: lift(DoubledVariant::SecondFactor),
        phase_product: lift(DoubledVariant::Difference),
        symbol_first: Arc::new(PartialDoubledSymbol {
            base: symbol.clone(),
            second_factor: false,
        }),
        symbol_second: Arc::new(PartialDoubledSymbol {
            base: symbol.clone(),
            second_factor: true,
        }),
        symbol_product: Arc::new(DoubledSymbol { base: symbol }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::{FreeParticlePhase, SinPerturbedPhase};
    use crate::symbols::{GaussianSymbol, WeightSymbol};
    use crate::tame_certify_defaults;
    use crate::testfns::{gaussian, hermite_like, random_bandlimited};

    fn catalog() -> Catalog {
        Catalog::standard()
    }

    fn op(kind: OperatorKind, phase: &str, symbol: &str) -> FioOperator {
        build_operator(
            &catalog(),
            &OperatorConfig {
                kind,
                phase: phase.into(),
                symbol: symbol.into(),
                cert_radius: 6.0,
                cert_probes: 9,
            },
        )
        .unwrap()
    }

    #[test]
    fn identity_phase_unit_symbol_is_exact_identity() {
        let g = Grid1D::new(16.0, 128).unwrap();
        let f = random_bandlimited(g, 3, 6, 2.0, 1.5);
        let t = op(OperatorKind::Type1, "identity", "one");
        let out = apply_fio1(&t, &f).unwrap();
        let sup = f
            .values
            .iter()
            .zip(&out.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(sup <= 1e-11, "identity defect {sup}");
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = gaussian(g, 0.0, 0.0, 1.0);
        let t1 = op(OperatorKind::Type1, "identity", "one");
        let t2 = op(OperatorKind::Type2, "identity", "one");
        assert!(apply_fio2(&t1, &f).is_err());
        assert!(apply_fio1(&t2, &f).is_err());
    }

    #[test]
    fn operators_are_linear() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = random_bandlimited(g, 1, 4, 1.5, 1.2);
        let h = random_bandlimited(g, 2, 4, 1.5, 1.2);
        let t = op(OperatorKind::Type2, "free_particle:0.3", "gaussian");
        let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.1, 0.4));
        let mut comb = f.clone();
        for (v, w) in comb.values.iter_mut().zip(&h.values) {
            *v = a * *v + b * w;
        }
        let lhs = apply_fio2(&t, &comb).unwrap();
        let tf = apply_fio2(&t, &f).unwrap();
        let th = apply_fio2(&t, &h).unwrap();
        let sup = lhs
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - (a * tf.values[i] + b * th.values[i])).norm())
            .fold(0.0f64, f64::max);
        assert!(sup <= 1e-12, "linearity defect {sup}");
    }

    #[test]
    fn adjoint_pairing_is_exact() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = random_bandlimited(g, 5, 5, 2.0, 1.4);
        let h = random_bandlimited(g, 6, 5, 2.0, 1.4);
        let t = op(OperatorKind::Type1, "sin_perturbed:0.25", "gaussian");
        let tstar = adjoint_operator(&t);
        let lhs = apply_fio1(&t, &f).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&apply_fio2(&tstar, &h).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn schwartz_kernel_reproduces_direct_application() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = hermite_like(g, 2);
        for kind in [OperatorKind::Type1, OperatorKind::Type2] {
            let t = op(kind, "free_particle:0.25", "gaussian");
            let k = schwartz_kernel(&t, g).unwrap();
            let via_kernel = apply_schwartz_kernel(&k, &f).unwrap();
            let direct = apply_fio(&t, &f).unwrap();
            let sup = via_kernel
                .values
                .iter()
                .zip(&direct.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(sup <= 1e-10, "{kind:?} kernel defect {sup}");
        }
    }

    #[test]
    fn kohn_nirenberg_delegates_bit_identically() {
        let g = Grid1D::new(16.0, 64).unwrap();
        let f = random_bandlimited(g, 11, 5, 2.0, 1.3);
        let sym: Arc<dyn SymbolFn> = Arc::new(GaussianSymbol { dim: 2 });
        let kn = kohn_nirenberg(sym.clone(), &f).unwrap();
        let t = op(OperatorKind::Type1, "identity", "gaussian");
        let direct = apply_fio1(&t, &f).unwrap();
        assert_eq!(kn.values, direct.values);
    }

    #[test]
    fn doubled_phase_gradients_and_hessian_are_consistent() {
        let base: Arc<dyn PhaseFn> = Arc::new(SinPerturbedPhase { eps: 0.25 });
        for variant in [
            DoubledVariant::FirstFactor,
            DoubledVariant::SecondFactor,
            DoubledVariant::Difference,
        ] {
            let dp = DoubledPhase {
                base: base.clone(),
                variant,
            };
            let (y, xi) = ([0.7, -1.1], [0.4, 2.0]);
            // gradients against finite differences of eval
            let h = 1e-5;
            for v in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[v] += h;
                ym[v] -= h;
                let fd = (dp.eval(&yp, &xi) - dp.eval(&ym, &xi)) / (2.0 * h);
                assert!((dp.grad_x(&y, &xi)[v] - fd).abs() < 1e-8, "{variant:?} grad_x[{v}]");
                let mut xp = xi;
                let mut xm = xi;
                xp[v] += h;
                xm[v] -= h;
                let fd = (dp.eval(&y, &xp) - dp.eval(&y, &xm)) / (2.0 * h);
                assert!((dp.grad_eta(&y, &xi)[v] - fd).abs() < 1e-8, "{variant:?} grad_eta[{v}]");
            }
            // Hessian against finite differences of the gradients
            let hess = dp.hessian(&y, &xi);
            let joint = [y[0], y[1], xi[0], xi[1]];
            for a in 0..4 {
                for b in 0..4 {
                    let mut zp = joint;
                    let mut zm = joint;
                    zp[b] += h;
                    zm[b] -= h;
                    let grad = |z: &[f64; 4]| {
                        let g = [
                            dp.grad_x(&z[..2], &z[2..]),
                            dp.grad_eta(&z[..2], &z[2..]),
                        ];
                        [g[0][0], g[0][1], g[1][0], g[1][1]]
                    };
                    let fd = (grad(&zp)[a] - grad(&zm)[a]) / (2.0 * h);
                    assert!(
                        (hess[(a, b)] - fd).abs() < 1e-7,
                        "{variant:?} hessian ({a},{b}): {} vs {fd}",
                        hess[(a, b)]
                    );
                }
            }
        }
    }

    #[test]
    fn doubled_difference_phase_is_tame() {
        let base: Arc<dyn PhaseFn> = Arc::new(FreeParticlePhase { d: 1, tau: 0.4 });
        let dp = DoubledPhase {
            base,
            variant: DoubledVariant::Difference,
        };
        let report = tame_certify_defaults(&dp);
        assert!(report.tame, "{report:?}");
        // mixed det is the product of the two base mixed dets = 1
        assert!((report.delta_hat - 1.0).abs() < 1e-10);
    }

    #[test]
    fn doubled_symbol_is_the_stated_product() {
        let base: Arc<dyn SymbolFn> = Arc::new(WeightSymbol { dim: 2, m: -1.5 });
        let ds = DoubledSymbol { base: base.clone() };
        let z = [0.3, -0.9, 1.1, 0.6];
        let expect = base.eval(&[0.3, 1.1]) * base.eval(&[-0.9, -0.6]).conj();
        assert!((ds.eval(&z) - expect).norm() < 1e-15);
        assert_eq!(ds.dim(), 4);
    }
}
