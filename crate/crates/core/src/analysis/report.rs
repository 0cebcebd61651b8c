use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::space::PinSpec;
use crate::spectra::Metric;

/// Exact rational quantity, serialized as `"n/d"` (or `"n"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<i128>);

impl Rational {
    pub fn new(numer: i128, denom: i128) -> Self {
        Self(Ratio::new(numer, denom))
    }

    pub fn from_u128(numer: u128, denom: u128) -> Self {
        Self::new(numer as i128, denom as i128)
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed rational '{s}'");
        match s.split_once('/') {
            Some((n, d)) => {
                let d: i128 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Ok(Rational::new(n.trim().parse().map_err(|_| bad())?, d))
            }
            None => Ok(Rational::new(s.trim().parse().map_err(|_| bad())?, 1)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every quantity computed while checking one instance.
///
/// `flags` hold asserted checks; `observations` hold values that are logged
/// but never fail a run (the stated constants that do not follow from the
/// displayed bounds, premises, pin validity).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub check: String,
    pub metric: Option<Metric>,
    pub p: u32,
    pub k: u32,
    pub q: u32,
    pub d: usize,
    pub pin: Option<PinSpec>,
    pub size_e: u64,
    pub size_ez: u64,
    pub first_moment: Option<u128>,
    pub second_moment: Option<u128>,
    /// `|E_z|·|{(x, y, y') : form(x, y) = form(x, y')}|`, the right side
    /// of the Cauchy–Schwarz step.
    pub w_term: Option<u128>,
    pub main_term: Option<Rational>,
    pub r_term: Option<f64>,
    pub identity_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub a_term: Option<Rational>,
    pub b_term: Option<Rational>,
    pub kappa_paper: Option<u32>,
    pub kappa_emp: Option<f64>,
    pub support_size: Option<u64>,
    pub support_size_nonzero: Option<u64>,
    pub cs_lower_bound: Option<u128>,
    pub c: Option<Rational>,
    pub guarantee_derived: Option<Rational>,
    pub guarantee_paper_stated: Option<Rational>,
    pub flags: BTreeMap<String, bool>,
    pub observations: BTreeMap<String, bool>,
}

impl DiagnosticsReport {
    pub(crate) fn new(check: &str, p: u32, k: u32, d: usize) -> Self {
        Self { check: check.to_string(), p, k, q: p.pow(k), d, ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.flags.values().all(|&v| v)
    }

    pub fn failed_flags(&self) -> Vec<&str> {
        self.flags.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect()
    }

    pub(crate) fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub(crate) fn observe(&mut self, name: &str, value: bool) {
        self.observations.insert(name.to_string(), value);
    }

    /// Recomputes the inequality flags that depend only on stored
    /// quantities. Returns `(name, stored, recomputed)` for each.
    pub fn recheck(&self) -> Vec<(&'static str, Option<bool>, bool)> {
        let mut out = Vec::new();
        let q = self.q as i128;
        let qd = q.pow(self.d as u32);
        let mass = self.size_e as i128 * self.size_ez as i128;
        if let (Some(s1), Some(s2), Some(supp)) = (self.first_moment, self.second_moment, self.support_size) {
            out.push(("cs_chain", self.flags.get("cs_chain").copied(), s1 * s1 <= supp as u128 * s2));
        }
        if let (Some(s2), Some(kappa)) = (self.second_moment, self.kappa_paper) {
            let ok = q * s2 as i128 <= mass * mass + kappa as i128 * qd * mass;
            out.push(("second_moment_bound", self.flags.get("second_moment_bound").copied(), ok));
        }
        if let (Some(g), Some(supp)) = (self.guarantee_derived, self.support_size) {
            out.push(("derived_guarantee", self.flags.get("derived_guarantee").copied(), Rational::new(supp as i128, 1) >= g));
        }
        out
    }

    /// A single human-readable line per field, for CLI output.
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        let json = serde_json::to_value(self).expect("report serializes");
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                if v.is_null() {
                    continue;
                }
                let rendered = match &v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Object(inner) => inner.iter().map(|(a, b)| format!("{a}={b}")).collect::<Vec<_>>().join(" "),
                    other => other.to_string(),
                };
                lines.push(format!("{k}: {rendered}"));
            }
        }
        lines.push(format!("passed: {}", self.passed()));
        lines.join("\n")
    }
}
