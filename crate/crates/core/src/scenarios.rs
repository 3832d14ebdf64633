//! Reference verification scenarios at desk scale: each check runs a fixed
//! configuration, measures the relevant statistic against an independently
//! computed reference, and reports pass/fail with the measured values. The
//! CLI `verify` command and the acceptance suite both consume these.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::catalog::Catalog;
use crate::error::Result;
use crate::fio::{
    adjoint_operator, apply_fio, build_operator, tensorize_type2, FioOperator, OperatorConfig,
    OperatorKind,
};
use crate::grid::{Grid1D, PhaseSpaceGrid, SampledFunction, TAU};
use crate::kernel::{
    adjoint_kernel, compose_kernels, composed_operator_kernel, decay_report, ghost_mass_scenario,
    kernel_type1_direct, kernel_via_schwartz, l2_bound_check, localization_error_cells,
    DecayWeighting,
};
use crate::phases::{map_certify, mixed_block, shear_map, CanonicalMap};
use crate::testfns::{gaussian, hermite_like, random_bandlimited};
use crate::wigner::{cross_wigner, WignerField};

/// Outcome of one named scenario check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, serde_json::Value>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            passed: true,
            detail: String::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn record(&mut self, key: &str, value: serde_json::Value) {
        self.metrics.insert(key.into(), value);
    }

    fn gate(&mut self, ok: bool) {
        self.passed &= ok;
    }
}

/// The reference phase/symbol specs every kernel-level scenario covers.
pub const REFERENCE_PHASES: [&str; 4] = [
    "identity",
    "free_particle:0.5",
    "quadratic:0.5",
    "sin_perturbed:0.1",
];

fn build(catalog: &Catalog, kind: OperatorKind, phase: &str, symbol: &str) -> Result<FioOperator> {
    build_operator(
        catalog,
        &OperatorConfig {
            kind,
            phase: phase.into(),
            symbol: symbol.into(),
            cert_radius: 6.0,
            cert_probes: 9,
        },
    )
}

fn test_functions(grid: Grid1D) -> Vec<SampledFunction> {
    vec![
        gaussian(grid, 0.0, 0.0, 1.0),
        gaussian(grid, 0.5, -0.25, 0.8),
        hermite_like(grid, 1),
        hermite_like(grid, 2),
        random_bandlimited(grid, 11, 8, 2.0, 1.0),
    ]
}

/// Relative sup difference of two Wigner fields over the central period.
fn central_rel_sup(a: &WignerField, b: &WignerField) -> f64 {
    let m = a.grid.space().points();
    let off = a.grid.central_window_offset();
    let mut sup = 0.0f64;
    let mut peak = 0.0f64;
    for j in 0..m {
        for c in 0..m {
            sup = sup.max((a.value(j, off + c) - b.value(j, off + c)).norm());
            peak = peak.max(b.value(j, off + c).norm());
        }
    }
    sup / peak
}

// ---------------------------------------------------------------------------
// 1. Norm identity of the Wigner transform.
// ---------------------------------------------------------------------------

pub fn moyal_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("moyal");
    let grid = Grid1D::new(16.0, 256)?;
    let mut worst = 0.0f64;
    for f in test_functions(grid) {
        let w = cross_wigner(&f, &f)?;
        let n = f.l2_norm();
        let rel = (w.l2_norm() - n * n).abs() / (n * n);
        res.record(&format!("rel_err[{}]", f.label), json!(rel));
        worst = worst.max(rel);
    }
    res.gate(worst <= 1e-8);
    res.detail = format!("worst |(||Wf|| - ||f||^2)| / ||f||^2 = {worst:.3e} (tol 1e-8)");
    res.record("worst", json!(worst));
    Ok(res)
}

// ---------------------------------------------------------------------------
// 2. Gaussian Wigner closed form.
// ---------------------------------------------------------------------------

pub fn gaussian_wigner_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("gaussian-wigner");
    let grid = Grid1D::new(16.0, 256)?;
    let f = gaussian(grid, 0.0, 0.0, 1.0);
    let w = cross_wigner(&f, &f)?;
    let ps = w.grid;
    let m = grid.points();
    let off = ps.central_window_offset();
    let mut sup = 0.0f64;
    for j in 0..m {
        for b in off..off + m {
            let (x, xi) = (grid.x(j), ps.wigner_freq(b));
            let exact = 2.0f64.sqrt() * (-TAU * (x * x + xi * xi)).exp();
            sup = sup.max((w.value(j, b) - Complex64::new(exact, 0.0)).norm());
        }
    }
    res.gate(sup <= 1e-8);
    res.detail = format!("sup |W(gauss) - sqrt(2) e^(-2pi|z|^2)| = {sup:.3e} (tol 1e-8)");
    res.record("sup_err", json!(sup));
    Ok(res)
}

// ---------------------------------------------------------------------------
// 3. Free-particle transport constant, resolved by a ridge oracle.
// ---------------------------------------------------------------------------

pub fn transport_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("free-particle-transport");
    let catalog = Catalog::standard();
    let grid = Grid1D::new(16.0, 256)?;

    // ridge oracle: propagate a frequency-shifted Gaussian and locate the
    // Wigner peak; the spatial drift divides out to the shear constant.
    let xi0 = 0.75;
    let tau = 0.5;
    let op = build(&catalog, OperatorKind::Type1, &format!("free_particle:{tau}"), "one")?;
    let f = gaussian(grid, 0.0, xi0, 1.0);
    let w = cross_wigner(&apply_fio(&op, &f)?, &apply_fio(&op, &f)?)?;
    let off = w.grid.central_window_offset();
    let mut best = (0usize, 0usize, 0.0f64);
    for j in 0..grid.points() {
        for b in off..off + grid.points() {
            let v = w.value(j, b).norm();
            if v > best.2 {
                best = (j, b, v);
            }
        }
    }
    let (x_hat, xi_hat) = (grid.x(best.0), w.grid.wigner_freq(best.1));
    let c_hat = x_hat / (tau * xi_hat);
    res.record("ridge_c_hat", json!(c_hat));
    res.gate((c_hat - 2.0).abs() <= 0.15);

    // with c = 2 fixed, the transported closed form must match pointwise
    let c = 2.0;
    let mut worst = 0.0f64;
    for tau in [0.25, 0.5] {
        let op = build(&catalog, OperatorKind::Type1, &format!("free_particle:{tau}"), "one")?;
        let f = gaussian(grid, 0.0, 0.0, 1.0);
        let w = cross_wigner(&apply_fio(&op, &f)?, &apply_fio(&op, &f)?)?;
        let off = w.grid.central_window_offset();
        let mut sup = 0.0f64;
        for j in 0..grid.points() {
            for b in off..off + grid.points() {
                let (x, xi) = (grid.x(j), w.grid.wigner_freq(b));
                let shifted = x - c * tau * xi;
                let exact = 2.0f64.sqrt() * (-TAU * (shifted * shifted + xi * xi)).exp();
                sup = sup.max((w.value(j, b) - Complex64::new(exact, 0.0)).norm());
            }
        }
        res.record(&format!("sup_err[tau={tau}]"), json!(sup));
        worst = worst.max(sup);
    }
    res.gate(worst <= 1e-6);
    res.detail = format!(
        "ridge oracle resolves the shear to (y + 2*tau*eta, eta): c_hat = {c_hat:.4}; \
         the single-tau convention (y + tau*eta, eta) is rejected by the same oracle; \
         closed-form sup error {worst:.3e} (tol 1e-6)"
    );
    res.record("resolved_c", json!(c));
    Ok(res)
}

// ---------------------------------------------------------------------------
// 4. Route equivalence of the two kernel constructions.
// ---------------------------------------------------------------------------

pub fn route_equivalence_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("route-equivalence");
    let catalog = Catalog::standard();
    let grid = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);
    let mut detail = Vec::new();
    for phase in REFERENCE_PHASES {
        let tol = if phase.starts_with("sin_perturbed") { 1e-3 } else { 1e-6 };
        let op = build(&catalog, OperatorKind::Type1, phase, "gaussian")?;
        let ks = kernel_via_schwartz(&op, grid)?;
        let kd = kernel_type1_direct(&op, grid, 1e-14)?;
        let rel = kd.rel_sup_diff(&ks);
        res.record(&format!("rel_sup[{phase}]"), json!(rel));
        res.gate(rel <= tol);
        detail.push(format!("{phase}: {rel:.3e} (tol {tol:.0e})"));
    }
    res.detail = detail.join("; ");
    Ok(res)
}

// ---------------------------------------------------------------------------
// 5. Kernel action consistency on Wigner fields.
// ---------------------------------------------------------------------------

pub fn action_consistency_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("action-consistency");
    let catalog = Catalog::standard();
    let grid = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);
    let mut worst = 0.0f64;
    for phase in REFERENCE_PHASES {
        let op = build(&catalog, OperatorKind::Type1, phase, "gaussian")?;
        let k = kernel_via_schwartz(&op, grid)?;
        for f in test_functions(grid.space()) {
            let w = cross_wigner(&f, &f)?;
            let evolved = crate::kernel::evolve_wigner(&k, &w)?;
            let tf = apply_fio(&op, &f)?;
            let wtf = cross_wigner(&tf, &tf)?;
            let rel = central_rel_sup(&evolved, &wtf);
            res.record(&format!("rel_sup[{phase}][{}]", f.label), json!(rel));
            worst = worst.max(rel);
        }
    }
    res.gate(worst <= 1e-3);
    res.detail = format!("worst evolve-vs-transform rel sup = {worst:.3e} (tol 1e-3)");
    res.record("worst", json!(worst));
    Ok(res)
}

// ---------------------------------------------------------------------------
// 6. Off-graph decay: exponent monotonicity, floor, envelope stability.
// ---------------------------------------------------------------------------

pub fn decay_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("decay");
    let catalog = Catalog::standard();
    let base = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);
    let enlarged = PhaseSpaceGrid::new(Grid1D::new(6.0, 48)?);
    let mut p_hats = Vec::new();
    let mut detail = Vec::new();
    for (m, n) in [(-6.0, 2usize), (-8.0, 3), (-10.0, 4)] {
        let op = build(
            &catalog,
            OperatorKind::Type1,
            "sin_perturbed:0.1",
            &format!("shubin_decay:{m}"),
        )?;
        let chi = CanonicalMap::from_phase(op.tame.clone(), 1e-12)?;
        let k = kernel_type1_direct(&op, base, 1e-14)?;
        let rep = decay_report(&k, &chi, n, m, DecayWeighting::OutSpaceInFreq, 1e-12, None)?;
        let kb = kernel_type1_direct(&op, enlarged, 1e-14)?;
        let rep_b = decay_report(&kb, &chi, n, m, DecayWeighting::OutSpaceInFreq, 1e-12, None)?;
        let e_drift = (rep_b.e_hat - rep.e_hat).abs() / rep.e_hat;
        let floor = (-m - 2.0) - 2.0; // predicted exponent -m - 2d, slack 2, d = 1
        res.record(&format!("p_hat[m={m}]"), json!(rep.p_hat));
        res.record(&format!("e_hat[m={m}]"), json!(rep.e_hat));
        res.record(&format!("e_hat_drift[m={m}]"), json!(e_drift));
        res.gate(rep.p_hat >= floor);
        res.gate(e_drift <= 0.2);
        detail.push(format!(
            "m={m}: p_hat {:.2} (floor {floor}), envelope drift {:.1}%",
            rep.p_hat,
            100.0 * e_drift
        ));
        p_hats.push(rep.p_hat);
    }
    res.gate(p_hats[2] >= p_hats[1] && p_hats[1] >= p_hats[0]);
    res.detail = detail.join("; ");
    Ok(res)
}

// ---------------------------------------------------------------------------
// 7. Adjoint: kernel swap and inverse-graph localization.
// ---------------------------------------------------------------------------

pub fn adjoint_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("adjoint");
    let catalog = Catalog::standard();
    let grid = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);

    let t1 = build(&catalog, OperatorKind::Type1, "free_particle:0.5", "gaussian")?;
    let t2 = adjoint_operator(&t1);
    let swapped = adjoint_kernel(&kernel_via_schwartz(&t1, grid)?);
    let k2 = kernel_via_schwartz(&t2, grid)?;
    let rel = swapped.rel_sup_diff(&k2);
    res.record("swap_rel_sup", json!(rel));
    res.gate(rel <= 1e-6);

    // flat symbol: mass pinned on the inverse shear graph
    let flat = build(&catalog, OperatorKind::Type1, "free_particle:0.5", "one")?;
    let adj = adjoint_kernel(&kernel_via_schwartz(&flat, grid)?);
    let inv_map = shear_map(-1.0, "free_particle_inverse");
    let loc = localization_error_cells(&adj, &inv_map)?;
    res.record("inverse_graph_cells", json!(loc));
    res.gate(loc <= 2.0);
    res.detail = format!(
        "swap vs conjugate-symbol kernel rel sup {rel:.3e} (tol 1e-6); \
         inverse-graph localization {loc} cells (tol 2)"
    );
    Ok(res)
}

// ---------------------------------------------------------------------------
// 8. Composition of kernels vs the composed operator.
// ---------------------------------------------------------------------------

pub fn composition_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("composition");
    let catalog = Catalog::standard();
    let grid = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);
    // flat symbols keep the kernels pinned on their graphs, so the composed
    // kernel must sit on the summed shear; lattice-aligned shears keep the
    // discrete graph deltas free of off-lattice ringing
    let (tau1, tau2) = (0.5, 0.5);
    let op1 = build(&catalog, OperatorKind::Type1, &format!("free_particle:{tau1}"), "one")?;
    let op2 = build(&catalog, OperatorKind::Type1, &format!("free_particle:{tau2}"), "one")?;
    let pair = compose_kernels(
        &kernel_via_schwartz(&op1, grid)?,
        &kernel_via_schwartz(&op2, grid)?,
    )?;
    let combined = shear_map(2.0 * (tau1 + tau2), "combined_shear");
    let loc = localization_error_cells(&pair, &combined)?;
    res.record("combined_graph_cells", json!(loc));
    res.gate(loc <= 2.0);

    // decaying symbols make the two-step product quadrature well conditioned
    let op1 = build(&catalog, OperatorKind::Type1, "free_particle:0.25", "gaussian")?;
    let op2 = build(&catalog, OperatorKind::Type1, "free_particle:0.5", "gaussian")?;
    let pair = compose_kernels(
        &kernel_via_schwartz(&op1, grid)?,
        &kernel_via_schwartz(&op2, grid)?,
    )?;
    let one_shot = composed_operator_kernel(&op1, &op2, grid)?;
    let rel = pair.rel_sup_diff(&one_shot);
    res.record("one_shot_rel_sup", json!(rel));
    res.gate(rel <= 1e-3);
    res.detail = format!(
        "composed-kernel localization on the summed shear {loc} cells (tol 2); \
         vs one-shot composed operator rel sup {rel:.3e} (tol 1e-3)"
    );
    Ok(res)
}

// ---------------------------------------------------------------------------
// 9. Canonical-map certification for every reference phase.
// ---------------------------------------------------------------------------

pub fn map_certification_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("map-certification");
    let catalog = Catalog::standard();
    // closed-form mixed-Hessian lower bounds
    let delta_closed = [1.0, 1.0, 1.0, 0.9];
    let mut detail = Vec::new();
    for (phase, delta) in REFERENCE_PHASES.iter().zip(delta_closed) {
        let mut entry = catalog.phase(phase)?;
        entry.tame.certify(4, 6.0, 9);
        let map = CanonicalMap::from_phase(entry.tame.clone(), 1e-12)?;
        let rep = map_certify(&map, 3.0, 7, 1e-4, 1e-6)?;
        res.record(&format!("symplectic_residual[{phase}]"), json!(rep.symplectic_residual));
        res.record(&format!("graph_det_inf[{phase}]"), json!(rep.graph_det_inf));
        res.gate(rep.symplectic_residual <= 1e-6);
        res.gate(rep.graph_det_inf >= 0.9 * delta);
        detail.push(format!(
            "{phase}: residual {:.2e}, graph det {:.3} (floor {:.2})",
            rep.symplectic_residual,
            rep.graph_det_inf,
            0.9 * delta
        ));
    }
    res.detail = detail.join("; ");
    Ok(res)
}

// ---------------------------------------------------------------------------
// 10. Tensorized phases and symbols on the doubled variables.
// ---------------------------------------------------------------------------

pub fn tensorization_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("tensorization");
    let catalog = Catalog::standard();
    let op = build(&catalog, OperatorKind::Type2, "free_particle:0.5", "gaussian")?;
    let pair = tensorize_type2(&op.tame, op.symbol.clone())?;

    let report = crate::phases::tame_certify(pair.phase_product.as_ref(), 3, 4.0, 7);
    res.record("product_phase_delta_hat", json!(report.delta_hat));
    res.gate(report.tame);

    // mixed second-derivative block of the first-factor lifting: base block
    // at (y1, xi1), identity at (y2, xi2), zero across
    let mut block_err = 0.0f64;
    for p in [[0.3, -0.7, 0.4, 1.1], [0.0, 0.0, 0.0, 0.0], [1.2, 0.5, -0.9, 0.2]] {
        let (y, xi) = p.split_at(2);
        let block = mixed_block(pair.phase_first.as_ref(), y, xi);
        let base = mixed_block(op.tame.phase.as_ref(), &y[..1], &xi[..1]);
        block_err = block_err
            .max((block[(0, 0)] - base[(0, 0)]).abs())
            .max((block[(1, 1)] - 1.0).abs())
            .max(block[(0, 1)].abs())
            .max(block[(1, 0)].abs());
    }
    res.record("block_hessian_err", json!(block_err));
    res.gate(block_err <= 1e-10);

    // product symbol equals its defining pointwise product
    let mut prod_err = 0.0f64;
    for p in [[0.3, -0.7, 0.4, 1.1], [1.0, 1.0, -1.0, 0.5], [0.0, 2.0, -2.0, 0.0]] {
        let direct = op.symbol.eval(&[p[0], p[2]]) * op.symbol.eval(&[p[1], -p[3]]).conj();
        prod_err = prod_err.max((pair.symbol_product.eval(&p) - direct).norm());
    }
    res.record("product_symbol_err", json!(prod_err));
    res.gate(prod_err <= 1e-12);
    res.detail = format!(
        "product phase tame (delta_hat {:.3}); block-Hessian defect {block_err:.2e} (tol 1e-10); \
         product symbol defect {prod_err:.2e} (tol 1e-12)",
        report.delta_hat
    );
    Ok(res)
}

// ---------------------------------------------------------------------------
// 11. Operator-norm proxy stability across resolutions.
// ---------------------------------------------------------------------------

pub fn l2_stability_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("l2-stability");
    let catalog = Catalog::standard();
    let mut detail = Vec::new();
    let mut specs: Vec<(String, String)> = REFERENCE_PHASES
        .iter()
        .map(|p| (p.to_string(), "gaussian".to_string()))
        .collect();
    specs.push(("identity".into(), "shubin_decay:-6".into()));
    for (phase, symbol) in specs {
        let op = build(&catalog, OperatorKind::Type1, &phase, &symbol)?;
        let rep = l2_bound_check(&op, 16.0, &[64, 128, 256], 5, 23)?;
        res.record(&format!("drift[{phase}|{symbol}]"), json!(rep.drift));
        res.gate(rep.drift <= 0.05);
        detail.push(format!("{phase}|{symbol}: drift {:.2}%", 100.0 * rep.drift));
    }
    res.detail = detail.join("; ");
    Ok(res)
}

// ---------------------------------------------------------------------------
// 12. Ghost-mass comparison between symbol classes.
// ---------------------------------------------------------------------------

pub fn ghost_check() -> Result<CheckResult> {
    let mut res = CheckResult::new("ghost-mass");
    let catalog = Catalog::standard();
    let grid = PhaseSpaceGrid::new(Grid1D::new(4.0, 32)?);
    let decaying = build(&catalog, OperatorKind::Type1, "sin_perturbed:0.1", "gaussian")?;
    let flat = build(&catalog, OperatorKind::Type1, "sin_perturbed:0.1", "one")?;
    let chi = CanonicalMap::from_phase(decaying.tame.clone(), 1e-12)?;
    let rep = ghost_mass_scenario(&decaying, &flat, &chi, grid, 4.0)?;
    res.record("off_graph_fraction_decaying", json!(rep.fraction_a));
    res.record("off_graph_fraction_flat", json!(rep.fraction_b));
    res.gate(rep.fraction_a < rep.fraction_b);
    res.detail = format!(
        "off-graph mass fraction: decaying symbol {:.4}, flat symbol {:.4} (ordering asserted)",
        rep.fraction_a, rep.fraction_b
    );
    Ok(res)
}

/// Every check in presentation order.
pub fn all_checks() -> Vec<(&'static str, fn() -> Result<CheckResult>)> {
    vec![
        ("moyal", moyal_check),
        ("gaussian-wigner", gaussian_wigner_check),
        ("free-particle-transport", transport_check),
        ("route-equivalence", route_equivalence_check),
        ("action-consistency", action_consistency_check),
        ("decay", decay_check),
        ("adjoint", adjoint_check),
        ("composition", composition_check),
        ("map-certification", map_certification_check),
        ("tensorization", tensorization_check),
        ("l2-stability", l2_stability_check),
        ("ghost-mass", ghost_check),
    ]
}
