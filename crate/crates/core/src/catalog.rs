//! Name-keyed registry of phases and symbols. Entries are registered as
//! builder closures behind trait objects and selected at runtime from
//! strings of the form `name` or `name:param`, so configs and the CLI share
//! one catalog.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phases::{
    identity_map, shear_map, vertical_shear_map, BilinearPhase, CanonicalMap, FreeParticlePhase,
    QuadraticPhase, SinPerturbedPhase, TamePhase,
};
use crate::symbols::{ConstantSymbol, GaussianSymbol, SinRadialSymbol, SymbolFn, WeightSymbol};

/// A phase picked from the catalog: the (uncertified) tame-phase wrapper and
/// its closed-form canonical map when one is known.
pub struct CatalogPhase {
    pub tame: TamePhase,
    pub closed_map: Option<CanonicalMap>,
}

type PhaseBuilder = Box<dyn Fn(Option<f64>) -> Result<CatalogPhase> + Send + Sync>;
type SymbolBuilder = Box<dyn Fn(Option<f64>, usize) -> Result<Arc<dyn SymbolFn>> + Send + Sync>;

struct PhaseEntry {
    builder: PhaseBuilder,
    takes_param: bool,
    description: &'static str,
}

struct SymbolEntry {
    builder: SymbolBuilder,
    takes_param: bool,
    description: &'static str,
}

/// Registry of named phase and symbol constructors.
pub struct Catalog {
    phases: BTreeMap<&'static str, PhaseEntry>,
    symbols: BTreeMap<&'static str, SymbolEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogListing {
    pub kind: String,
    pub name: String,
    pub takes_param: bool,
    pub description: String,
}

fn parse_spec(spec: &str) -> Result<(&str, Option<f64>)> {
    match spec.split_once(':') {
        None => Ok((spec, None)),
        Some((name, param)) => {
            let v: f64 = param.parse().map_err(|_| {
                Error::InvalidArgument(format!("bad parameter '{param}' in '{spec}'"))
            })?;
            Ok((name, Some(v)))
        }
    }
}

fn require_param(name: &str, p: Option<f64>) -> Result<f64> {
    p.ok_or_else(|| Error::InvalidArgument(format!("'{name}' requires a parameter, e.g. {name}:0.5")))
}

fn reject_param(name: &str, p: Option<f64>) -> Result<()> {
    if p.is_some() {
        return Err(Error::InvalidArgument(format!("'{name}' takes no parameter")));
    }
    Ok(())
}

impl Catalog {
    /// The standard catalog shipped with this crate.
    pub fn standard() -> Self {
        let mut phases: BTreeMap<&'static str, PhaseEntry> = BTreeMap::new();
        let mut symbols: BTreeMap<&'static str, SymbolEntry> = BTreeMap::new();

        phases.insert(
            "identity",
            PhaseEntry {
                takes_param: false,
                description: "x*eta; operator is the identity, map is the identity",
                builder: Box::new(|p| {
                    reject_param("identity", p)?;
                    Ok(CatalogPhase {
                        tame: TamePhase::new(Arc::new(BilinearPhase { d: 1 }), "identity"),
                        closed_map: Some(identity_map(1)),
                    })
                }),
            },
        );
        phases.insert(
            "free_particle",
            PhaseEntry {
                takes_param: true,
                description: "x*eta - tau*eta^2; map is the horizontal shear (y + 2*tau*eta, eta)",
                builder: Box::new(|p| {
                    let tau = require_param("free_particle", p)?;
                    Ok(CatalogPhase {
                        tame: TamePhase::new(
                            Arc::new(FreeParticlePhase { d: 1, tau }),
                            format!("free_particle:{tau}"),
                        ),
                        closed_map: Some(shear_map(
                            2.0 * tau,
                            format!("shear({})", 2.0 * tau),
                        )),
                    })
                }),
            },
        );
        phases.insert(
            "quadratic",
            PhaseEntry {
                takes_param: true,
                description: "x*eta + (c/2)*x^2; map is the vertical shear (y, eta + c*y)",
                builder: Box::new(|p| {
                    let c = require_param("quadratic", p)?;
                    Ok(CatalogPhase {
                        tame: TamePhase::new(
                            Arc::new(QuadraticPhase { d: 1, c }),
                            format!("quadratic:{c}"),
                        ),
                        closed_map: Some(vertical_shear_map(c, format!("vshear({c})"))),
                    })
                }),
            },
        );
        phases.insert(
            "sin_perturbed",
            PhaseEntry {
                takes_param: true,
                description: "x*eta + eps*sin(x)*sin(eta); tame for |eps| < 1, map via Newton",
                builder: Box::new(|p| {
                    let eps = require_param("sin_perturbed", p)?;
                    if eps.abs() >= 1.0 {
                        return Err(Error::InvalidArgument(format!(
                            "sin_perturbed requires |eps| < 1, got {eps}"
                        )));
                    }
                    Ok(CatalogPhase {
                        tame: TamePhase::new(
                            Arc::new(SinPerturbedPhase { eps }),
                            format!("sin_perturbed:{eps}"),
                        ),
                        closed_map: None,
                    })
                }),
            },
        );

        symbols.insert(
            "one",
            SymbolEntry {
                takes_param: false,
                description: "constant 1",
                builder: Box::new(|p, dim| {
                    reject_param("one", p)?;
                    Ok(Arc::new(ConstantSymbol {
                        dim,
                        value: Complex64::new(1.0, 0.0),
                    }))
                }),
            },
        );
        symbols.insert(
            "gaussian",
            SymbolEntry {
                takes_param: false,
                description: "exp(-pi*|z|^2)",
                builder: Box::new(|p, dim| {
                    reject_param("gaussian", p)?;
                    Ok(Arc::new(GaussianSymbol { dim }))
                }),
            },
        );
        symbols.insert(
            "shubin_decay",
            SymbolEntry {
                takes_param: true,
                description: "<z>^m = (1+|z|^2)^(m/2)",
                builder: Box::new(|p, dim| {
                    let m = require_param("shubin_decay", p)?;
                    Ok(Arc::new(WeightSymbol { dim, m }))
                }),
            },
        );
        symbols.insert(
            "sin_radial",
            SymbolEntry {
                takes_param: false,
                description: "sin(|z|^2); bounded but outside every certified class",
                builder: Box::new(|p, dim| {
                    reject_param("sin_radial", p)?;
                    Ok(Arc::new(SinRadialSymbol { dim }))
                }),
            },
        );

        Self { phases, symbols }
    }

    /// Build a phase from `name` or `name:param`.
    pub fn phase(&self, spec: &str) -> Result<CatalogPhase> {
        let (name, param) = parse_spec(spec)?;
        let entry = self
            .phases
            .get(name)
            .ok_or_else(|| Error::UnknownCatalogEntry(format!("phase '{name}'")))?;
        (entry.builder)(param)
    }

    /// Build a symbol on ℝ^dim from `name` or `name:param`.
    pub fn symbol(&self, spec: &str, dim: usize) -> Result<Arc<dyn SymbolFn>> {
        let (name, param) = parse_spec(spec)?;
        let entry = self
            .symbols
            .get(name)
            .ok_or_else(|| Error::UnknownCatalogEntry(format!("symbol '{name}'")))?;
        (entry.builder)(param, dim)
    }

    /// Serializable listing of every registered entry.
    pub fn list(&self) -> Vec<CatalogListing> {
        let mut out = Vec::new();
        for (name, e) in &self.phases {
            out.push(CatalogListing {
                kind: "phase".into(),
                name: (*name).into(),
                takes_param: e.takes_param,
                description: e.description.into(),
            });
        }
        for (name, e) in &self.symbols {
            out.push(CatalogListing {
                kind: "symbol".into(),
                name: (*name).into(),
                takes_param: e.takes_param,
                description: e.description.into(),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_lookup_and_param_parsing() {
        let cat = Catalog::standard();
        let fp = cat.phase("free_particle:0.25").unwrap();
        assert_eq!(fp.tame.phase.dim(), 1);
        assert!((fp.tame.phase.eval(&[1.0], &[2.0]) - (2.0 - 0.25 * 4.0)).abs() < 1e-15);
        let chi = fp.closed_map.unwrap();
        let img = chi.eval(&[1.0, 2.0]).unwrap();
        assert_eq!(img, vec![2.0, 2.0]); // y + 2*0.25*eta = 1 + 1

        assert!(cat.phase("free_particle").is_err());
        assert!(cat.phase("identity:3").is_err());
        assert!(cat.phase("nope").is_err());
        assert!(cat.phase("sin_perturbed:1.5").is_err());
        assert!(cat.phase("free_particle:abc").is_err());
    }

    #[test]
    fn symbol_lookup() {
        let cat = Catalog::standard();
        let w = cat.symbol("shubin_decay:-2", 2).unwrap();
        assert!((w.eval(&[0.0, 0.0]).re - 1.0).abs() < 1e-15);
        assert!((w.eval(&[3.0, 4.0]).re - 1.0 / 26.0).abs() < 1e-15);
        assert!(cat.symbol("gaussian", 4).is_ok());
        assert!(cat.symbol("shubin_decay", 2).is_err());
        assert!(cat.symbol("missing", 2).is_err());
    }

    #[test]
    fn listing_covers_all_entries() {
        let cat = Catalog::standard();
        let listing = cat.list();
        assert_eq!(listing.len(), 8);
        assert!(listing.iter().any(|e| e.kind == "phase" && e.name == "sin_perturbed"));
        assert!(listing.iter().any(|e| e.kind == "symbol" && e.name == "one"));
        // deterministic order for stable CLI output
        let names: Vec<_> = listing.iter().map(|e| e.name.clone()).collect();
        let mut sorted_phases: Vec<_> = names[..4].to_vec();
        sorted_phases.sort();
        assert_eq!(&names[..4], &sorted_phases[..]);
    }
}
