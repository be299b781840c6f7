use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::jacobi::{Precision, SparseSpec, SpecDocument};
use crate::sparsifier::{generate_spec, GapCertificate, GeneratedSpec, SparsifierConfig};

/// `[sparsifier]` section: the level count plus the search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsifierSection {
    pub levels: usize,
    #[serde(flatten)]
    pub config: SparsifierConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Grids {
    pub x: Vec<f64>,
    pub ab: Vec<[f64; 2]>,
    pub n: Vec<u64>,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Mode {
    pub compensated: bool,
    pub strip_checks: bool,
}

/// The structured text document shared by spec files, experiment configs
/// and sparsifier output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDocument {
    pub spec: SpecDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsifier: Option<SparsifierSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<GapCertificate>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub mode: Mode,
}

impl ExperimentDocument {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Document recording a generated spec and its certificates.
    pub fn from_generated(gen: &GeneratedSpec, levels: usize) -> Self {
        ExperimentDocument {
            spec: gen.spec.to_document(),
            sparsifier: Some(SparsifierSection {
                levels,
                config: gen.config.clone(),
            }),
            certificates: gen.certificates.clone(),
            grids: Grids::default(),
            outputs: Outputs::default(),
            mode: Mode::default(),
        }
    }
}

/// Where the operator comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecSource {
    Inline(SparseSpec),
    File(PathBuf),
    /// Sites placed by the sparsifier.
    Adaptive {
        document: SpecDocument,
        levels: usize,
        config: SparsifierConfig,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: SpecSource,
    pub x_list: Vec<f64>,
    pub ab_grid: Vec<(f64, f64)>,
    pub n_list: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub outputs: Outputs,
    pub compensated: bool,
    pub strip_checks: bool,
}

/// A spec ready for evaluation, with certificates when it was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSpec {
    pub spec: SparseSpec,
    pub generated: Option<GeneratedSpec>,
}

impl ExperimentConfig {
    pub fn new(spec: SparseSpec, x_list: Vec<f64>, ab_grid: Vec<(f64, f64)>, n_list: Vec<u64>) -> Self {
        ExperimentConfig {
            spec: SpecSource::Inline(spec),
            x_list,
            ab_grid,
            n_list,
            epsilons: Vec::new(),
            outputs: Outputs::default(),
            compensated: false,
            strip_checks: false,
        }
    }

    pub fn from_document(doc: &ExperimentDocument) -> Result<Self, HarnessError> {
        let spec = if doc.spec.is_adaptive() {
            let section = doc.sparsifier.clone().ok_or_else(|| {
                HarnessError::InvalidConfig("adaptive sites need a [sparsifier] section".into())
            })?;
            let mut config = section.config;
            config.strip_spot_check |= doc.mode.strip_checks;
            if doc.mode.compensated {
                config.precision = Precision::Compensated;
            }
            SpecSource::Adaptive {
                document: doc.spec.clone(),
                levels: section.levels,
                config,
            }
        } else {
            SpecSource::Inline(doc.spec.to_spec()?)
        };
        let cfg = ExperimentConfig {
            spec,
            x_list: doc.grids.x.clone(),
            ab_grid: doc.grids.ab.iter().map(|p| (p[0], p[1])).collect(),
            n_list: doc.grids.n.clone(),
            epsilons: doc.grids.epsilons.clone(),
            outputs: doc.outputs.clone(),
            compensated: doc.mode.compensated,
            strip_checks: doc.mode.strip_checks,
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_document(&ExperimentDocument::load(path)?)
    }

    pub fn precision(&self) -> Precision {
        if self.compensated {
            Precision::Compensated
        } else {
            Precision::Double
        }
    }

    /// All `x` in `(-2, 2)`, all `n ≥ 2`, `n_list` strictly increasing.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(x) = self.x_list.iter().find(|x| !(x.abs() < 2.0)) {
            return Err(HarnessError::InvalidConfig(format!("x = {x} outside (-2, 2)")));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(HarnessError::InvalidConfig(format!("order n = {n} below 2")));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::InvalidConfig("n_list must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn resolve_spec(&self) -> Result<ResolvedSpec, HarnessError> {
        match &self.spec {
            SpecSource::Inline(spec) => Ok(ResolvedSpec {
                spec: spec.clone(),
                generated: None,
            }),
            SpecSource::File(path) => {
                let doc = ExperimentDocument::load(path)?;
                Ok(ResolvedSpec {
                    spec: doc.spec.to_spec()?,
                    generated: None,
                })
            }
            SpecSource::Adaptive {
                document,
                levels,
                config,
            } => {
                let gen = generate_spec(&document.v_rule, *levels, config)?;
                Ok(ResolvedSpec {
                    spec: gen.spec.clone(),
                    generated: Some(gen),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
[spec]
N = [4, 40]
[spec.v_rule]
kind = "explicit"
values = [0.5, -0.25]

[grids]
x = [0.0, 0.5]
ab = [[0.0, 1.0], [-1.0, 1.0]]
n = [100, 1000]
epsilons = [0.1]

[outputs]
rows = "rows.csv"

[mode]
compensated = true
"#;

    #[test]
    fn parses_inline_document() {
        let doc = ExperimentDocument::from_toml(DOC).unwrap();
        let cfg = ExperimentConfig::from_document(&doc).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.ab_grid, vec![(0.0, 1.0), (-1.0, 1.0)]);
        assert_eq!(cfg.precision(), Precision::Compensated);
        assert_eq!(cfg.outputs.rows, Some(PathBuf::from("rows.csv")));
        let resolved = cfg.resolve_spec().unwrap();
        assert_eq!(resolved.spec.positions(), vec![4, 40]);
        let again = ExperimentDocument::from_toml(&doc.to_toml().unwrap()).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn adaptive_needs_sparsifier_section() {
        let text = "[spec]\nN = \"adaptive\"\n[spec.v_rule]\nkind = \"zero\"\n";
        let doc = ExperimentDocument::from_toml(text).unwrap();
        assert!(ExperimentConfig::from_document(&doc).is_err());
        let text = format!("{text}[sparsifier]\nlevels = 1\n");
        let doc = ExperimentDocument::from_toml(&text).unwrap();
        let cfg = ExperimentConfig::from_document(&doc).unwrap();
        assert!(matches!(cfg.spec, SpecSource::Adaptive { levels: 1, .. }));
    }

    #[test]
    fn validation() {
        let free = SparseSpec::free();
        let mut cfg = ExperimentConfig::new(free, vec![0.0], vec![(0.0, 0.0)], vec![10, 100]);
        cfg.validate().unwrap();
        cfg.n_list = vec![100, 10];
        assert!(cfg.validate().is_err());
        cfg.n_list = vec![1];
        assert!(cfg.validate().is_err());
        cfg.n_list = vec![10];
        cfg.x_list = vec![2.0];
        assert!(cfg.validate().is_err());
    }
}
