//! Scenario runner: every core operation behind a subcommand, with a JSON
//! config file, flag overrides, and deterministic artifacts (summary.json,
//! *.tensor, *.csv) under the output directory.
//!
//! Exit codes: 0 success, 1 assertion/runtime failure, 2 config error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use phaselab::catalog::Catalog;
use phaselab::error::Error;
use phaselab::fio::{
    adjoint_operator, apply_fio, build_operator, FioOperator, OperatorConfig, OperatorKind,
};
use phaselab::grid::{Grid1D, PhaseSpaceGrid};
use phaselab::kernel::{
    adjoint_kernel, compose_kernels, composed_operator_kernel, decay_report, kernel_type1_direct,
    kernel_type2_direct, kernel_via_schwartz, DecayWeighting, WignerKernel,
};
use phaselab::phases::{map_certify, CanonicalMap};
use phaselab::scenarios::{self, CheckResult};
use phaselab::symbols::{flat_certify, shubin_certify};
use phaselab::tensor::write_tensor;
use phaselab::testfns::gaussian;
use phaselab::wigner::cross_wigner;

#[derive(Parser)]
#[command(name = "phaselab", version, about = "Wigner-kernel scenario runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON config file; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for summary.json and artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the reproducible test-function generator
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap the worker-thread count
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Points per axis for function-level grids
    #[arg(long = "grid-M", global = true)]
    grid_m: Option<usize>,

    /// Points per axis for kernel grids (guarded at 48)
    #[arg(long = "kernel-M", global = true)]
    kernel_m: Option<usize>,

    /// Box extent: the spatial axis covers [-L/2, L/2)
    #[arg(long = "L", global = true)]
    l: Option<f64>,

    /// Half-order N of the off-graph decay envelope <z - chi(w)>^{-2N}
    #[arg(long = "N", global = true)]
    n: Option<usize>,

    /// Weight order m of the symbol class
    #[arg(long = "m", global = true, allow_hyphen_values = true)]
    m: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    /// oscillatory-integral slice quadrature (needs a decaying symbol)
    Direct,
    /// Wigner transform of the oversampled two-variable kernel
    Schwartz,
}

#[derive(Subcommand)]
enum Cmd {
    /// Wigner-transform checks: norm identity (tol 1e-8), Gaussian closed
    /// form (tol 1e-8), free-particle transport (tol 1e-6); emits ridge.csv
    Wigner,
    /// Build the kernel of the configured operator and export it
    Kernel {
        #[arg(long, value_enum, default_value = "schwartz")]
        route: Route,
    },
    /// Off-graph decay diagnostics for the configured operator; asserts the
    /// fitted exponent reaches (-m - 2d) - 2; emits bins and scatter CSVs
    Decay,
    /// Compose the two configured operators; asserts the kernel-side product
    /// matches the one-shot composed kernel within 1e-3
    Compose,
    /// Adjoint kernel swap; asserts agreement with the conjugate-symbol
    /// reverse-type kernel within 1e-6
    Adjoint,
    /// Certify a phase (tame bounds), a symbol (weight-class seminorms), or
    /// a canonical map (symplectic residual tol 1e-6)
    Certify {
        #[arg(long, conflicts_with_all = ["symbol", "map"])]
        phase: Option<String>,
        #[arg(long, conflicts_with = "map")]
        symbol: Option<String>,
        #[arg(long)]
        map: Option<String>,
    },
    /// Off-graph mass comparison between a decaying and a flat symbol
    Ghost,
    /// Run the full verification suite (one pass/fail line per check)
    Verify,
    /// List registered catalog phases and symbols
    ListCatalog,
}

/// On-disk config; every field optional, flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    phase: Option<String>,
    symbol: Option<String>,
    phase2: Option<String>,
    symbol2: Option<String>,
    kind: Option<String>,
    l: Option<f64>,
    grid_m: Option<usize>,
    kernel_m: Option<usize>,
    n: Option<usize>,
    m: Option<f64>,
    seed: Option<u64>,
    out: Option<String>,
}

/// Fully resolved run settings (defaults <- config file <- flags).
#[derive(Debug, Serialize)]
struct Settings {
    phase: String,
    symbol: String,
    phase2: String,
    symbol2: String,
    kind: String,
    l: f64,
    grid_m: usize,
    kernel_m: usize,
    n: usize,
    m: f64,
    seed: u64,
    out: PathBuf,
}

fn resolve(cli: &Cli) -> Result<Settings, String> {
    let file: FileConfig = match &cli.config {
        None => FileConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("cannot read {p:?}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("bad config {p:?}: {e}"))?
        }
    };
    let kind = file.kind.unwrap_or_else(|| "type1".into());
    if kind != "type1" && kind != "type2" {
        return Err(format!("bad config: kind must be type1 or type2, got '{kind}'"));
    }
    Ok(Settings {
        phase: file.phase.unwrap_or_else(|| "free_particle:0.5".into()),
        symbol: file.symbol.unwrap_or_else(|| "gaussian".into()),
        phase2: file.phase2.unwrap_or_else(|| "free_particle:0.25".into()),
        symbol2: file.symbol2.unwrap_or_else(|| "gaussian".into()),
        kind,
        l: cli.l.or(file.l).unwrap_or(4.0),
        grid_m: cli.grid_m.or(file.grid_m).unwrap_or(256),
        kernel_m: cli.kernel_m.or(file.kernel_m).unwrap_or(32),
        n: cli.n.or(file.n).unwrap_or(2),
        m: cli.m.or(file.m).unwrap_or(-6.0),
        seed: cli.seed.or(file.seed).unwrap_or(7),
        out: cli
            .out
            .clone()
            .or_else(|| file.out.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
    })
}

#[derive(Serialize)]
struct Summary {
    command: String,
    settings: Settings,
    tolerances: BTreeMap<String, f64>,
    checks: Vec<CheckResult>,
    artifacts: Vec<String>,
    passed: bool,
}

fn write_summary(out: &Path, summary: &Summary) -> phaselab::error::Result<()> {
    fs::create_dir_all(out)?;
    let mut bytes = serde_json::to_vec_pretty(summary)?;
    bytes.push(b'\n');
    fs::write(out.join("summary.json"), bytes)?;
    Ok(())
}

fn build_op(phase: &str, symbol: &str, kind: &str) -> phaselab::error::Result<FioOperator> {
    let catalog = Catalog::standard();
    build_operator(
        &catalog,
        &OperatorConfig {
            kind: if kind == "type2" { OperatorKind::Type2 } else { OperatorKind::Type1 },
            phase: phase.into(),
            symbol: symbol.into(),
            cert_radius: 6.0,
            cert_probes: 9,
        },
    )
}

fn kernel_by_route(op: &FioOperator, grid: PhaseSpaceGrid, route: Route) -> phaselab::error::Result<WignerKernel> {
    match route {
        Route::Schwartz => kernel_via_schwartz(op, grid),
        Route::Direct => match op.kind {
            OperatorKind::Type1 => kernel_type1_direct(op, grid, 1e-14),
            OperatorKind::Type2 => kernel_type2_direct(op, grid, 1e-14),
        },
    }
}

fn export_kernel(
    out: &Path,
    name: &str,
    kernel: &WignerKernel,
    provenance: serde_json::Value,
) -> phaselab::error::Result<String> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    let mut f = fs::File::create(&path)?;
    write_tensor(&mut f, &kernel.tensor, Some(provenance))?;
    Ok(name.to_string())
}

fn check_from(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
        metrics: BTreeMap::new(),
    }
}

fn run(cli: &Cli, s: Settings) -> phaselab::error::Result<Summary> {
    let mut summary = Summary {
        command: String::new(),
        tolerances: BTreeMap::new(),
        checks: Vec::new(),
        artifacts: Vec::new(),
        passed: true,
        settings: s,
    };
    let s = &summary.settings;

    match &cli.cmd {
        Cmd::Wigner => {
            summary.command = "wigner".into();
            summary.tolerances.insert("norm_identity_rel".into(), 1e-8);
            summary.tolerances.insert("gaussian_closed_form_sup".into(), 1e-8);
            summary.tolerances.insert("transport_sup".into(), 1e-6);
            summary.checks.push(scenarios::moyal_check()?);
            summary.checks.push(scenarios::gaussian_wigner_check()?);
            summary.checks.push(scenarios::transport_check()?);

            // ridge CSV: per-row Wigner peak of the propagated Gaussian
            let grid = Grid1D::new(s.l.max(16.0), s.grid_m)?;
            let op = build_op(&s.phase, "one", "type1")?;
            let tf = apply_fio(&op, &gaussian(grid, 0.0, 0.75, 1.0))?;
            let w = cross_wigner(&tf, &tf)?;
            let off = w.grid.central_window_offset();
            fs::create_dir_all(&s.out)?;
            let mut csv = fs::File::create(s.out.join("ridge.csv"))?;
            writeln!(csv, "x,xi_peak,amplitude")?;
            for j in 0..grid.points() {
                let mut best = (0usize, 0.0f64);
                for b in off..off + grid.points() {
                    let v = w.value(j, b).norm();
                    if v > best.1 {
                        best = (b, v);
                    }
                }
                writeln!(csv, "{},{},{}", grid.x(j), w.grid.wigner_freq(best.0), best.1)?;
            }
            summary.artifacts.push("ridge.csv".into());
        }

        Cmd::Kernel { route } => {
            summary.command = "kernel".into();
            let op = build_op(&s.phase, &s.symbol, &s.kind)?;
            let grid = PhaseSpaceGrid::new(Grid1D::new(s.l, s.kernel_m)?);
            let k = kernel_by_route(&op, grid, *route)?;
            let prov = json!({
                "phase": s.phase, "symbol": s.symbol, "kind": s.kind,
                "route": k.route, "L": s.l, "M": s.kernel_m,
            });
            summary.artifacts.push(export_kernel(&s.out, "kernel.tensor", &k, prov)?);
            summary.checks.push(check_from(
                "kernel-built",
                true,
                format!("route {}, sup |k| = {:.6e}", k.route, k.sup_norm()),
            ));
        }

        Cmd::Decay => {
            summary.command = "decay".into();
            summary.tolerances.insert("exponent_floor_slack".into(), 2.0);
            let symbol = if s.symbol == "gaussian" {
                format!("shubin_decay:{}", s.m)
            } else {
                s.symbol.clone()
            };
            let op = build_op(&s.phase, &symbol, &s.kind)?;
            let grid = PhaseSpaceGrid::new(Grid1D::new(s.l, s.kernel_m)?);
            let k = match op.kind {
                OperatorKind::Type1 => kernel_type1_direct(&op, grid, 1e-14)?,
                OperatorKind::Type2 => kernel_type2_direct(&op, grid, 1e-14)?,
            };
            let chi = CanonicalMap::from_phase(op.tame.clone(), 1e-12)?;
            let rep = decay_report(&k, &chi, s.n, s.m, DecayWeighting::OutSpaceInFreq, 1e-12, None)?;

            fs::create_dir_all(&s.out)?;
            fs::write(
                s.out.join("decay_report.json"),
                serde_json::to_vec_pretty(&rep)?,
            )?;
            let mut csv = fs::File::create(s.out.join("decay_bins.csv"))?;
            writeln!(csv, "log10_distance,log10_envelope")?;
            for (d, e) in &rep.bins {
                writeln!(csv, "{d},{e}")?;
            }
            // subsampled (distance, |k|) scatter for plotting
            let mut csv = fs::File::create(s.out.join("decay_scatter.csv"))?;
            writeln!(csv, "distance,abs_k")?;
            let m = k.points();
            let g = k.grid.space();
            for jx in 0..m {
                for cxi in (0..m).step_by(2) {
                    let z = k.z_point(jx, cxi);
                    for jy in (0..m).step_by(2) {
                        for ceta in (0..m).step_by(2) {
                            let w = [g.x(jy), k.grid.kernel_freq(ceta)];
                            let img = chi.eval(&w)?;
                            let d2 = (z[0] - img[0]).powi(2) + (z[1] - img[1]).powi(2);
                            let dist = (1.0 + d2).sqrt();
                            let v = k.tensor.get([jx, cxi, jy, ceta]).norm();
                            if v > 0.0 {
                                writeln!(csv, "{dist},{v}")?;
                            }
                        }
                    }
                }
            }
            summary.artifacts.extend([
                "decay_report.json".into(),
                "decay_bins.csv".into(),
                "decay_scatter.csv".into(),
            ]);
            let floor = (-s.m - 2.0) - 2.0;
            let ok = rep.p_hat >= floor;
            summary.checks.push(check_from(
                "decay-exponent-floor",
                ok,
                format!("fitted exponent {:.2} vs floor {floor:.2} (m = {})", rep.p_hat, s.m),
            ));
        }

        Cmd::Compose => {
            summary.command = "compose".into();
            summary.tolerances.insert("one_shot_rel_sup".into(), 1e-3);
            let op1 = build_op(&s.phase, &s.symbol, "type1")?;
            let op2 = build_op(&s.phase2, &s.symbol2, "type1")?;
            let grid = PhaseSpaceGrid::new(Grid1D::new(s.l, s.kernel_m)?);
            let pair = compose_kernels(
                &kernel_via_schwartz(&op1, grid)?,
                &kernel_via_schwartz(&op2, grid)?,
            )?;
            let one_shot = composed_operator_kernel(&op1, &op2, grid)?;
            let rel = pair.rel_sup_diff(&one_shot);
            let prov = json!({
                "phase": s.phase, "symbol": s.symbol,
                "phase2": s.phase2, "symbol2": s.symbol2,
                "route": "composed", "L": s.l, "M": s.kernel_m,
            });
            summary.artifacts.push(export_kernel(&s.out, "composed.tensor", &pair, prov)?);
            summary.checks.push(check_from(
                "composition-one-shot",
                rel <= 1e-3,
                format!("kernel product vs composed-operator kernel rel sup {rel:.3e} (tol 1e-3)"),
            ));
        }

        Cmd::Adjoint => {
            summary.command = "adjoint".into();
            summary.tolerances.insert("swap_rel_sup".into(), 1e-6);
            let op = build_op(&s.phase, &s.symbol, "type1")?;
            let grid = PhaseSpaceGrid::new(Grid1D::new(s.l, s.kernel_m)?);
            let adj = adjoint_kernel(&kernel_via_schwartz(&op, grid)?);
            let k2 = kernel_via_schwartz(&adjoint_operator(&op), grid)?;
            let rel = adj.rel_sup_diff(&k2);
            let prov = json!({
                "phase": s.phase, "symbol": s.symbol, "route": "adjoint-swap",
                "L": s.l, "M": s.kernel_m,
            });
            summary.artifacts.push(export_kernel(&s.out, "adjoint.tensor", &adj, prov)?);
            summary.checks.push(check_from(
                "adjoint-swap",
                rel <= 1e-6,
                format!("index swap vs conjugate-symbol reverse-type kernel rel sup {rel:.3e} (tol 1e-6)"),
            ));
        }

        Cmd::Certify { phase, symbol, map } => {
            summary.command = "certify".into();
            let catalog = Catalog::standard();
            fs::create_dir_all(&s.out)?;
            let report: serde_json::Value;
            if let Some(spec) = phase {
                let mut entry = catalog.phase(spec)?;
                let rep = entry.tame.certify(4, 6.0, 9).clone();
                summary.checks.push(check_from(
                    "phase-tame",
                    rep.tame,
                    format!("{spec}: delta_hat {:.4}, {} derivative bounds", rep.delta_hat, rep.bounds.len()),
                ));
                report = serde_json::to_value(&rep)?;
            } else if let Some(spec) = symbol {
                let sym = catalog.symbol(spec, 2)?;
                let rep = match sym.order_hint() {
                    Some(m) => shubin_certify(sym.as_ref(), spec, m, 2, 4.0, 7),
                    None => flat_certify(sym.as_ref(), spec, 2, 4.0, 7),
                };
                summary.checks.push(check_from(
                    "symbol-class",
                    rep.member,
                    format!("{spec}: order {:?}, {} seminorms, member = {}", rep.order, rep.entries.len(), rep.member),
                ));
                report = serde_json::to_value(&rep)?;
            } else if let Some(spec) = map {
                summary.tolerances.insert("symplectic_residual".into(), 1e-6);
                let mut entry = catalog.phase(spec)?;
                entry.tame.certify(4, 6.0, 9);
                let chi = CanonicalMap::from_phase(entry.tame.clone(), 1e-12)?;
                let rep = map_certify(&chi, 3.0, 7, 1e-4, 1e-6)?;
                summary.checks.push(check_from(
                    "map-certified",
                    rep.certified,
                    format!(
                        "{spec}: symplectic residual {:.3e}, graph det {:.4}",
                        rep.symplectic_residual, rep.graph_det_inf
                    ),
                ));
                report = serde_json::to_value(&rep)?;
            } else {
                return Err(Error::InvalidArgument(
                    "certify needs one of --phase, --symbol, --map".into(),
                ));
            }
            fs::write(s.out.join("certify.json"), serde_json::to_vec_pretty(&report)?)?;
            summary.artifacts.push("certify.json".into());
        }

        Cmd::Ghost => {
            summary.command = "ghost".into();
            summary.checks.push(scenarios::ghost_check()?);
        }

        Cmd::Verify => {
            summary.command = "verify".into();
            for (name, check) in scenarios::all_checks() {
                let res = check()?;
                println!("[{}] {name}: {}", if res.passed { "PASS" } else { "FAIL" }, res.detail);
                summary.checks.push(res);
            }
        }

        Cmd::ListCatalog => {
            summary.command = "list-catalog".into();
            let catalog = Catalog::standard();
            for e in catalog.list() {
                let param = if e.takes_param { " (takes a parameter)" } else { "" };
                println!("{} {}{param}: {}", e.kind, e.name, e.description);
            }
        }
    }

    summary.passed = summary.checks.iter().all(|c| c.passed);
    write_summary(&summary.settings.out, &summary)?;
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match resolve(&cli) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }
    match run(&cli, settings) {
        Ok(summary) if summary.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: one or more checks failed (see summary.json)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::UnknownCatalogEntry(_) | Error::Json(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
