//! CSV, JSON and gnuplot writers.
//!
//! CSV and JSON carry the same numbers: both use shortest round-trip
//! formatting, so parsing either gives back the in-memory `f64` bit-exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::casimir::Magnetization;
use crate::materials::MaterialPreset;
use crate::sweep::{Axis, RowStatus, SweepPlan, SweepRow};

pub const SCHEMA_VERSION: &str = "1";
pub const CSV_HEADER: &str = "Nz,E_sum(meV),E_int(meV),E_cas(meV),C_b(meV),b,err(meV),flags";
pub const MAGNETIZATION_HEADER: &str =
    "Nz,M_cas(meV/meV),M_cas_half_step(meV/meV),M_cas_err(meV/meV),M_bulk(meV/meV),M_bulk_err(meV/meV),h_step(meV)";
pub const TRUNCATION_MARKER: &str = "# truncated: interrupted before all rows completed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub energy: String,
    pub normalization: String,
}

impl Default for Units {
    fn default() -> Self {
        Units { energy: "meV".into(), normalization: "per surface magnetic unit cell".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub axis: Axis,
    pub preset: MaterialPreset,
    pub rows: Vec<SweepRow>,
}

impl Curve {
    pub fn new(plan: &SweepPlan, rows: Vec<SweepRow>) -> Self {
        Curve { label: plan.label().into(), axis: plan.axis(), preset: plan.preset().clone(), rows }
    }

    /// Rows up to the first cancelled one.
    pub fn completed(&self) -> &[SweepRow] {
        let end = self.rows.iter().position(|r| r.status == RowStatus::Cancelled).unwrap_or(self.rows.len());
        &self.rows[..end]
    }

    pub fn truncated(&self) -> bool {
        self.completed().len() < self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: Vec<String>,
    pub units: Units,
    pub curves: Vec<Curve>,
    pub truncated: bool,
}

impl OutputRecord {
    pub fn new(command: Vec<String>, mut curves: Vec<Curve>) -> Self {
        let truncated = curves.iter().any(Curve::truncated);
        for c in &mut curves {
            let n = c.completed().len();
            c.rows.truncate(n);
        }
        OutputRecord { schema_version: SCHEMA_VERSION.into(), command, units: Units::default(), curves, truncated }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationRecord {
    pub schema_version: String,
    pub command: Vec<String>,
    pub units: Units,
    pub preset: MaterialPreset,
    pub rows: Vec<Magnetization>,
}

impl MagnetizationRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGNETIZATION_HEADER);
        out.push('\n');
        for m in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                m.n_z, m.casimir, m.casimir_half_step, m.casimir_error, m.bulk, m.bulk_error, m.h_step
            );
        }
        out
    }
}

fn flags(row: &SweepRow, ultrathin: bool) -> String {
    let mut f = Vec::new();
    if ultrathin {
        f.push("ultrathin");
    }
    match row.status {
        RowStatus::Ok | RowStatus::Cancelled => {}
        RowStatus::ToleranceNotMet => f.push("tolerance_not_met"),
        RowStatus::Failed(_) => f.push("failed"),
    }
    f.join("|")
}

/// One line per row and exponent. Axes other than `Nz` get a leading column.
pub fn curve_csv(curve: &Curve, truncated: bool) -> String {
    let mut out = String::new();
    let lead = (curve.axis != Axis::Nz).then(|| curve.axis.column_name());
    if let Some(name) = lead {
        let _ = write!(out, "{name},");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in curve.completed() {
        let prefix = lead.map(|_| format!("{},", row.axis_value)).unwrap_or_default();
        if row.results.is_empty() {
            let _ = writeln!(out, "{prefix}{},,,,,,,{}", row.n_z, flags(row, row.n_z <= 3));
            continue;
        }
        for r in &row.results {
            let _ = writeln!(
                out,
                "{prefix}{},{:e},{:e},{:e},{:e},{},{:e},{}",
                r.n_z,
                r.e_sum,
                r.e_int,
                r.e_cas,
                r.coefficient,
                r.b_exponent,
                r.error_estimate,
                flags(row, r.ultrathin)
            );
        }
    }
    if truncated {
        out.push_str(TRUNCATION_MARKER);
        out.push('\n');
    }
    out
}

/// File-name-safe form of a curve label, e.g. `Dz/D=0.3` to `DzD0.3`.
pub fn slug(label: &str) -> String {
    label.chars().filter(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_')).collect()
}

/// Gnuplot script drawing `E_cas` against `N_z` with the coefficient
/// `C^[b]` as an inset. `files` pairs each curve title with its CSV path,
/// relative to the script.
pub fn gnuplot_script(figure: &str, files: &[(String, String)], b_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Render with: gnuplot {figure}.gp");
    let _ = writeln!(s, "set terminal pngcairo size 900,650 enhanced");
    let _ = writeln!(s, "set output '{figure}.png'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set multiplot");
    let _ = writeln!(s, "set xlabel 'N_z'");
    let _ = writeln!(s, "set ylabel 'E_{{Cas}} (meV)'");
    let _ = writeln!(s, "set key top right");
    let plot = |col: usize| {
        files
            .iter()
            .map(|(title, path)| format!("'{path}' skip 1 using 1:{col} with linespoints title '{title}'"))
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let _ = writeln!(s, "plot {}", plot(4));
    let _ = writeln!(s, "set origin 0.35,0.3");
    let _ = writeln!(s, "set size 0.55,0.5");
    let _ = writeln!(s, "set xlabel 'N_z'");
    let _ = writeln!(s, "set ylabel 'C^{{[{b_label}]}} (meV)'");
    let _ = writeln!(s, "unset key");
    let _ = writeln!(s, "plot {}", plot(5));
    let _ = writeln!(s, "unset multiplot");
    s
}
