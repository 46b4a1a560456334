//! Scenario files: a single JSON document describing the ambient space, the
//! chart, the distribution split, an optional warp declaration, and the
//! sampling plan. Three scenarios ship with the crate and are also exposed
//! as builtins; see `scenarios/README.md` for the schema.

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::immersion::Chart;
use crate::numerics::{ToleranceProfile, Vector};
use crate::slant::DistributionSplit;
use crate::warped::WarpDeclaration;
use rand::Rng as _;
use rand::SeedableRng as _;
use serde::{Deserialize, Serialize};

pub const BUILTIN_PAPER_EXAMPLE: &str = include_str!("../scenarios/paper_example.json");
pub const BUILTIN_PAPER_EXAMPLE_FLAT: &str = include_str!("../scenarios/paper_example_flat.json");
pub const BUILTIN_KAHLER_PRODUCT: &str = include_str!("../scenarios/kahler_product.json");

/// Names accepted by `--builtin`.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "paper-example" => Some(BUILTIN_PAPER_EXAMPLE),
        "paper-example-flat" => Some(BUILTIN_PAPER_EXAMPLE_FLAT),
        "kahler-product" => Some(BUILTIN_KAHLER_PRODUCT),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["paper-example", "paper-example-flat", "kahler-product"];

fn default_counts() -> Vec<usize> {
    Vec::new()
}

/// One or many guard expressions; a point is admitted when all are positive.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GuardSpec {
    One(String),
    Many(Vec<String>),
}

impl GuardSpec {
    fn as_vec(&self) -> Vec<String> {
        match self {
            GuardSpec::One(s) => vec![s.clone()],
            GuardSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub n: usize,
    pub sigma: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub params: Vec<String>,
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_guard: Option<GuardSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    /// 1-based parameter indices of the base distribution.
    pub i1: Vec<usize>,
    /// 1-based parameter indices of the fiber distribution.
    pub i2: Vec<usize>,
    /// Declared closed form for `cos^2 theta_1`, cross-checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cos2_theta1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cos2_theta2: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WarpSpec {
    pub lambda: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplesSpec {
    pub mode: SampleMode,
    /// Per-parameter `[lo, hi]` ranges.
    pub ranges: Vec<[f64; 2]>,
    /// Per-parameter point counts (grid) or their product (random).
    #[serde(default = "default_counts")]
    pub counts: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Grid,
    Random,
}

/// Parsed scenario document (schema level).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub ambient: AmbientSpec,
    pub chart: ChartSpec,
    pub split: SplitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp: Option<WarpSpec>,
    pub samples: SamplesSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesSpec>,
}

/// Partial tolerance overrides carried by a scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_first: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_second: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

impl TolerancesSpec {
    pub fn apply(&self, base: ToleranceProfile) -> ToleranceProfile {
        ToleranceProfile {
            tol_first: self.tol_first.unwrap_or(base.tol_first),
            tol_second: self.tol_second.unwrap_or(base.tol_second),
            tol_eig: self.tol_eig.unwrap_or(base.tol_eig),
            fd_step: self.fd_step.unwrap_or(base.fd_step),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Schema {
            field: "scenario".into(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Canonical serialization used for the provenance hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serialization")
    }

    pub fn sha256(&self) -> String {
        use sha2::Digest as _;
        let mut hasher = sha2::Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Schema-level validation; expression contents are validated when the
    /// scenario is compiled.
    pub fn validate(&self) -> Result<()> {
        let m = self.chart.params.len();
        if self.ambient.n == 0 {
            return Err(Error::Schema {
                field: "ambient.n".into(),
                message: "complex dimension must be positive".into(),
            });
        }
        if m == 0 {
            return Err(Error::Schema {
                field: "chart.params".into(),
                message: "at least one parameter required".into(),
            });
        }
        for (i, p) in self.chart.params.iter().enumerate() {
            let expected = format!("u{}", i + 1);
            if *p != expected {
                return Err(Error::Schema {
                    field: format!("chart.params[{i}]"),
                    message: format!("parameters must be named in order; expected `{expected}`"),
                });
            }
        }
        if self.chart.components.len() != 2 * self.ambient.n {
            return Err(Error::Schema {
                field: "chart.components".into(),
                message: format!(
                    "expected {} components (ambient real dimension), got {}",
                    2 * self.ambient.n,
                    self.chart.components.len()
                ),
            });
        }
        for (name, list) in [("split.i1", &self.split.i1), ("split.i2", &self.split.i2)] {
            for &i in list {
                if i == 0 || i > m {
                    return Err(Error::Schema {
                        field: name.into(),
                        message: format!("index {i} out of range 1..={m}"),
                    });
                }
            }
        }
        if self.samples.ranges.len() != m {
            return Err(Error::Schema {
                field: "samples.ranges".into(),
                message: format!("expected {m} ranges, got {}", self.samples.ranges.len()),
            });
        }
        for (i, r) in self.samples.ranges.iter().enumerate() {
            if r[0] >= r[1] {
                return Err(Error::Schema {
                    field: format!("samples.ranges[{i}]"),
                    message: "range must satisfy lo < hi".into(),
                });
            }
        }
        if !self.samples.counts.is_empty() && self.samples.counts.len() != m {
            return Err(Error::Schema {
                field: "samples.counts".into(),
                message: format!(
                    "expected {m} counts (or none for the default), got {}",
                    self.samples.counts.len()
                ),
            });
        }
        Ok(())
    }

    /// Compile the scenario into executable geometry. `grid_override`
    /// replaces every per-parameter count; `invert_lambda` swaps the warping
    /// function for its reciprocal (negative control).
    pub fn compile(&self, grid_override: Option<usize>, invert_lambda: bool) -> Result<Compiled> {
        let space = AmbientSpace::new(self.ambient.n, &self.ambient.sigma)?;
        let m = self.chart.params.len();
        let guards = self
            .chart
            .domain_guard
            .as_ref()
            .map(|g| g.as_vec())
            .unwrap_or_default();
        let chart = Chart::new(m, &self.chart.components, &guards, 2 * self.ambient.n)?;
        let i1: Vec<usize> = self.split.i1.iter().map(|&i| i - 1).collect();
        let i2: Vec<usize> = self.split.i2.iter().map(|&i| i - 1).collect();
        let mut split = DistributionSplit::new(i1, i2, m)?;
        let names: Vec<String> = (1..=m).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        if let Some(src) = &self.split.cos2_theta1 {
            split.cos2_theta1 = Some(Expression::parse(src, &refs)?);
        }
        if let Some(src) = &self.split.cos2_theta2 {
            split.cos2_theta2 = Some(Expression::parse(src, &refs)?);
        }
        let warp = match &self.warp {
            Some(w) => {
                let decl = WarpDeclaration::new(&w.lambda, m, &split.i1)?;
                Some(if invert_lambda { decl.inverted() } else { decl })
            }
            None => None,
        };
        let profile = self
            .tolerances
            .clone()
            .unwrap_or_default()
            .apply(ToleranceProfile::default());
        profile.validate()?;
        let samples = self.sample_points(grid_override);
        Ok(Compiled {
            space,
            chart,
            split,
            warp,
            profile,
            samples,
        })
    }

    /// Deterministic sample sequence: a row-major grid (first parameter
    /// slowest) or a seeded uniform draw.
    fn sample_points(&self, grid_override: Option<usize>) -> Vec<Vector> {
        let m = self.chart.params.len();
        let counts: Vec<usize> = match grid_override {
            Some(n) => vec![n.max(1); m],
            None if self.samples.counts.is_empty() => vec![3; m],
            None => self.samples.counts.clone(),
        };
        match self.samples.mode {
            SampleMode::Grid => {
                let axes: Vec<Vec<f64>> = (0..m)
                    .map(|i| {
                        let [lo, hi] = self.samples.ranges[i];
                        let n = counts[i];
                        if n == 1 {
                            vec![0.5 * (lo + hi)]
                        } else {
                            (0..n)
                                .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                                .collect()
                        }
                    })
                    .collect();
                let total: usize = counts.iter().product();
                let mut out = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut u = Vector::zeros(m);
                    for i in (0..m).rev() {
                        u[i] = axes[i][rem % counts[i]];
                        rem /= counts[i];
                    }
                    out.push(u);
                }
                out
            }
            SampleMode::Random => {
                let total: usize = counts.iter().product();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.samples.seed);
                (0..total)
                    .map(|_| {
                        Vector::from_fn(m, |i, _| {
                            let [lo, hi] = self.samples.ranges[i];
                            rng.gen_range(lo..hi)
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Executable form of a scenario.
#[derive(Debug)]
pub struct Compiled {
    pub space: AmbientSpace,
    pub chart: Chart,
    pub split: DistributionSplit,
    pub warp: Option<WarpDeclaration>,
    pub profile: ToleranceProfile,
    pub samples: Vec<Vector>,
}
