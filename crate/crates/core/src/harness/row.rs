use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::{DiagnosticsReport, Rational};
use crate::spectra::{Engine, Metric};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    /// Every asserted flag held.
    Pass,
    /// At least one asserted flag failed.
    Fail,
    /// The check does not apply to this cell (even characteristic, zero pin,
    /// empty set, wrong dimension).
    Skipped,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::Skipped => "skipped",
        })
    }
}

/// One flattened [`DiagnosticsReport`] plus provenance. Field order is the
/// CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_hash: String,
    pub cell_id: String,
    pub check: String,
    pub status: RowStatus,
    pub seed: u64,
    pub engine: Engine,
    pub code_version: String,
    pub timestamp: Option<u64>,
    pub p: u32,
    pub k: u32,
    pub q: u32,
    pub d: usize,
    pub family: String,
    pub target_size: Option<u64>,
    pub pin_j: Option<usize>,
    pub pin_z: Option<u32>,
    pub metric: Option<Metric>,
    pub size_e: u64,
    pub size_ez: u64,
    pub first_moment: Option<u128>,
    pub second_moment: Option<u128>,
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
    /// `name=0|1` pairs joined by `;`, sorted by name.
    pub flags: String,
    pub observations: String,
    pub error: Option<String>,
}

fn join_flags(map: &std::collections::BTreeMap<String, bool>) -> String {
    map.iter().map(|(k, v)| format!("{k}={}", *v as u8)).collect::<Vec<_>>().join(";")
}

/// Provenance shared by every row of one cell.
#[derive(Debug, Clone)]
pub(crate) struct Provenance {
    pub config_hash: String,
    pub cell_id: String,
    pub seed: u64,
    pub engine: Engine,
    pub timestamp: Option<u64>,
    pub family: String,
    pub target_size: Option<u64>,
}

impl ResultRow {
    pub(crate) fn from_report(prov: &Provenance, report: &DiagnosticsReport) -> Self {
        let status = if report.passed() { RowStatus::Pass } else { RowStatus::Fail };
        ResultRow {
            config_hash: prov.config_hash.clone(),
            cell_id: prov.cell_id.clone(),
            check: report.check.clone(),
            status,
            seed: prov.seed,
            engine: prov.engine,
            code_version: CODE_VERSION.to_string(),
            timestamp: prov.timestamp,
            p: report.p,
            k: report.k,
            q: report.q,
            d: report.d,
            family: prov.family.clone(),
            target_size: prov.target_size,
            pin_j: report.pin.map(|p| p.j),
            pin_z: report.pin.map(|p| p.z.0),
            metric: report.metric,
            size_e: report.size_e,
            size_ez: report.size_ez,
            first_moment: report.first_moment,
            second_moment: report.second_moment,
            w_term: report.w_term,
            main_term: report.main_term,
            r_term: report.r_term,
            identity_residual: report.identity_residual,
            tolerance: report.tolerance,
            a_term: report.a_term,
            b_term: report.b_term,
            kappa_paper: report.kappa_paper,
            kappa_emp: report.kappa_emp,
            support_size: report.support_size,
            support_size_nonzero: report.support_size_nonzero,
            cs_lower_bound: report.cs_lower_bound,
            c: report.c,
            guarantee_derived: report.guarantee_derived,
            guarantee_paper_stated: report.guarantee_paper_stated,
            flags: join_flags(&report.flags),
            observations: join_flags(&report.observations),
            error: None,
        }
    }

    /// A row recording that `report.check` could not run on this cell.
    pub(crate) fn not_run(prov: &Provenance, report: &DiagnosticsReport, status: RowStatus, error: String) -> Self {
        let mut row = Self::from_report(prov, report);
        row.status = status;
        row.error = Some(error);
        row
    }

    pub fn passed(&self) -> bool {
        self.status != RowStatus::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_follow_field_order() {
        let mut report = DiagnosticsReport::new("cs_chain", 5, 1, 2);
        report.first_moment = Some(u128::MAX);
        report.c = Some(Rational::new(3, 2));
        report.flag("b", true);
        report.flag("a", false);
        let prov = Provenance {
            config_hash: "h".into(),
            cell_id: "c".into(),
            seed: 1,
            engine: Engine::Direct,
            timestamp: None,
            family: "random".into(),
            target_size: Some(10),
        };
        let row = ResultRow::from_report(&prov, &report);
        assert_eq!(row.status, RowStatus::Fail);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("config_hash,cell_id,check,status,seed,engine,code_version,timestamp,p,k,q,d,"));
        assert!(header.ends_with(",flags,observations,error"));
        let line = lines.next().unwrap();
        assert!(line.contains(&u128::MAX.to_string()));
        assert!(line.contains(",3/2,"));
        assert!(line.contains("a=0;b=1"));

        let mut r = csv::Reader::from_reader(text.as_bytes());
        let back: ResultRow = r.deserialize().next().unwrap().unwrap();
        assert_eq!(back, row);
    }
}
