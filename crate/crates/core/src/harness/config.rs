use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::field::make_field;
use crate::space::{PinSpec, MAX_SPACE_SIZE};
use crate::spectra::{Engine, Metric};

/// Point-set family drawn for each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `n` uniform points.
    Random,
    /// Random product set with `d` equal factor sizes `round(n^{1/d})`.
    Product,
    /// The whole space; the size axis is ignored.
    FullSpace,
    /// `{(t, i·t)}`; `d = 2` and `q ≡ 1 mod 4` only, size axis ignored.
    IsotropicLine,
    /// `{0, …, m−1}^d` with `m = round(n^{1/d})`.
    IntervalGrid,
}

impl Family {
    pub fn uses_size(self) -> bool {
        matches!(self, Family::Random | Family::Product | Family::IntervalGrid)
    }

    pub fn is_random(self) -> bool {
        matches!(self, Family::Random | Family::Product)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Random => "random",
            Family::Product => "product",
            Family::FullSpace => "full_space",
            Family::IsotropicLine => "isotropic_line",
            Family::IntervalGrid => "interval_grid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinPolicy {
    /// Every `(j, z)` with `1 ≤ j ≤ d`, `z ∈ F_q`.
    All,
    /// The pin chosen by `best_slice`.
    #[default]
    Best,
    Fixed(PinSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub count: u32,
    pub base: u64,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self { count: 1, base: 0 }
    }
}

/// Checks a sweep can run on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCheck {
    /// `cs_chain(E_z, E)` for pinned policies.
    CsChain,
    Identity,
    Bound,
    Distpinned,
    Dot,
    /// `best_slice`; ignores the pin policy.
    Corollary,
    IrThreshold,
    /// `check_sumproduct`; cells with `d ≠ 1` are skipped.
    Sumproduct,
}

impl SweepCheck {
    pub fn is_pinned(self) -> bool {
        matches!(self, SweepCheck::CsChain | SweepCheck::Identity | SweepCheck::Bound | SweepCheck::Distpinned | SweepCheck::Dot)
    }
}

impl fmt::Display for SweepCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

/// A sweep over fields × dimensions × sizes × seeds, loaded from TOML.
///
/// ```toml
/// fields = [[5, 1], [3, 2]]
/// dims = [2]
/// family = "random"
/// sizes = [10]
/// alphas = [1.0, 1.3333333333333333]
/// pins = "best"              # "all" | "best" | { fixed = { j = 2, z = 3 } }
/// metric = "distance"
/// engine = "direct"
/// checks = ["cs_chain", "distpinned"]
/// seeds = { count = 3, base = 0 }
/// output = "results.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub fields: Vec<(u32, u32)>,
    pub dims: Vec<usize>,
    pub family: Family,
    #[serde(default)]
    pub sizes: Vec<u64>,
    /// Each `α` adds the size `round(q^α)`; must lie in `(0, d]`.
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub pins: PinPolicy,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub checks: Vec<SweepCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Adds wall-clock seconds to each row; off by default so output stays
    /// byte-reproducible.
    #[serde(default)]
    pub record_timestamp: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        for &(p, k) in &self.fields {
            let field = make_field(p as u64, k)?;
            for &d in &self.dims {
                let size = (field.q() as u128).checked_pow(d as u32);
                if size.is_none_or(|s| s > MAX_SPACE_SIZE as u128) {
                    return Err(HarnessError::Config(format!("F_{}^{d} exceeds the space cap of {MAX_SPACE_SIZE} points", field.q())));
                }
            }
        }
        for &d in &self.dims {
            if d == 0 {
                return Err(HarnessError::Config("dimension 0 in dims".into()));
            }
            for &a in &self.alphas {
                if !(a > 0.0 && a <= d as f64) {
                    return Err(HarnessError::Config(format!("alpha {a} outside (0, {d}]")));
                }
            }
        }
        if let PinPolicy::Fixed(pin) = self.pins {
            if self.dims.iter().any(|&d| pin.j == 0 || pin.j > d) {
                return Err(HarnessError::Config(format!("fixed pin coordinate {} outside 1..=d", pin.j)));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding output location and
    /// timestamp switch; first 16 hex digits.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        canonical.record_timestamp = false;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Target sizes for `q` and `d`: absolute sizes first, then `round(q^α)`,
    /// duplicates removed in order.
    pub fn sizes_for(&self, q: u32, d: usize) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        let alpha_sizes = self.alphas.iter().map(|&a| ((q as f64).powf(a).round() as u64).min((q as u64).pow(d as u32)).max(1));
        for n in self.sizes.iter().copied().chain(alpha_sizes) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }
}
