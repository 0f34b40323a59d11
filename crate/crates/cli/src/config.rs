use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use weylzak::io::Dtype;
use weylzak::{GeneratorSpec, ZakLattice, DEFAULT_TAU, ORTHONORMAL_TOL};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub oracle: Oracle,
    #[serde(default)]
    pub outputs: Outputs,
    /// Test fixtures applied to the generator's Zak field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<Fixture>,
    /// Candidate function for `member`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<GeneratorSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketRoute {
    /// Fibre route when the dense Zak field would be large and is not needed.
    Auto,
    Zak,
    Fibres,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Sample step on every axis; `1 / step` is also the torus resolution in `xi`.
    pub step: f64,
    /// `eta` window `[-H, H)`.
    pub eta_half_width: usize,
    /// Zak truncation `|m| <= M`; the `xi` window is `[-(M + 1), M + 2)`.
    pub truncation: usize,
    /// Torus resolution in `xi'`; defaults to the next power of two `>= 2M + 1`.
    pub n_xi_prime: Option<usize>,
    pub lattice: ZakLattice,
    pub bracket_route: BracketRoute,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            step: 1.0 / 64.0,
            eta_half_width: 8,
            truncation: 9,
            n_xi_prime: None,
            lattice: ZakLattice::Full,
            bracket_route: BracketRoute::Auto,
        }
    }
}

impl Grids {
    pub fn per_unit(&self) -> usize {
        (1.0 / self.step).round() as usize
    }

    pub fn n_xi_prime(&self) -> usize {
        self.n_xi_prime.unwrap_or_else(|| (2 * self.truncation + 1).next_power_of_two())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Support threshold relative to the bracket maximum.
    pub tau: f64,
    pub orthonormal_tol: f64,
    /// Relative residual below which `member` accepts.
    pub member_tol: f64,
    /// Largest Gram/coefficient deviation accepted by `crosscheck`.
    pub crosscheck_tol: f64,
    /// Dyadic depth of the A2 scan.
    pub a2_depth: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau: DEFAULT_TAU, orthonormal_tol: ORTHONORMAL_TOL, member_tol: 1e-6, crosscheck_tol: 1e-4, a2_depth: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Oracle {
    pub radius: i64,
    pub enabled: bool,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { radius: 3, enabled: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    /// Each command writes into `<directory>/<command>` unless `--out` is given.
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Precision of binary containers.
    pub dtype: Dtype,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { directory: PathBuf::from("out"), formats: vec![Format::Json], dtype: Dtype::Complex64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    /// Zero the Zak field for `xi'` in `[lo, hi)`.
    pub zero_band: [f64; 2],
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: AnalysisConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grids;
        ensure!(g.step > 0.0 && g.step.is_finite(), "grids.step must be positive");
        let n = g.per_unit();
        ensure!(n > 0 && (g.step * n as f64 - 1.0).abs() < 1e-9, "grids.step must be 1/N for an integer N, got {}", g.step);
        ensure!(g.eta_half_width > 0, "grids.eta_half_width must be positive");
        ensure!(g.truncation > 0, "grids.truncation must be positive");
        ensure!(
            g.n_xi_prime() >= 2 * g.truncation + 1,
            "grids.n_xi_prime = {} is below 2M + 1 = {}",
            g.n_xi_prime(),
            2 * g.truncation + 1
        );
        if g.lattice == ZakLattice::Half && n % 2 != 0 {
            bail!("the half lattice needs an even number of nodes per unit");
        }
        let t = &self.thresholds;
        ensure!(t.tau > 0.0 && t.tau < 1.0, "thresholds.tau must lie in (0, 1)");
        ensure!(t.orthonormal_tol > 0.0 && t.member_tol > 0.0 && t.crosscheck_tol > 0.0, "tolerances must be positive");
        ensure!(self.oracle.radius >= 0, "oracle.radius must be nonnegative");
        if let Some(f) = &self.fixture {
            let [lo, hi] = f.zero_band;
            ensure!((0.0..=1.0).contains(&lo) && lo < hi && hi <= 1.0, "fixture.zero_band must satisfy 0 <= lo < hi <= 1");
        }
        Ok(())
    }

    /// SHA-256 of the normalised config, defaults filled in.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(&serde_json::to_value(self).expect("config serialises")).expect("value serialises");
        Sha256::digest(&canon).iter().map(|b| format!("{b:02x}")).collect()
    }
}
