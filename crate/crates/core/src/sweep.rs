//! Parameter scans and the figure bundles built from them.
//!
//! Rows are independent. They are evaluated through [`par::map_ordered`], so
//! the returned rows (apart from `wall_time`) are bit-identical for any
//! worker count.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::casimir::{casimir_energy_with, CasimirError, CasimirQuadrature, CasimirResult, EvalOptions};
use crate::dispersion::{DispersionModel, FerriParams};
use crate::materials::MaterialPreset;
use crate::par::{self, Exec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep over {0} has no values")]
    EmptyAxis(Axis),
    #[error("values along {axis} must be strictly monotone (at index {index})")]
    NotMonotone { axis: Axis, index: usize },
    #[error("invalid value {value} for {axis}: {reason}")]
    InvalidValue { axis: Axis, value: f64, reason: String },
    #[error("axis {axis} does not apply to preset {preset}")]
    AxisNotApplicable { axis: Axis, preset: String },
    #[error("at least one coefficient exponent is required")]
    NoExponents,
    #[error("unknown figure {0:?} (known: Fig2, Fig3, FigS1, FigS2)")]
    UnknownFigure(String),
    #[error(transparent)]
    Quadrature(#[from] CasimirError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Nz,
    L,
    DzRatio,
    Delta,
    H0,
}

impl Axis {
    pub fn column_name(self) -> &'static str {
        match self {
            Axis::Nz => "Nz",
            Axis::L => "l",
            Axis::DzRatio => "Dz/D",
            Axis::Delta => "delta",
            Axis::H0 => "H0(meV)",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Nz => "nz",
            Axis::L => "l",
            Axis::DzRatio => "dz-ratio",
            Axis::Delta => "delta",
            Axis::H0 => "h0",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nz" | "n_z" => Ok(Axis::Nz),
            "l" => Ok(Axis::L),
            "dz-ratio" | "dz_ratio" | "dz" => Ok(Axis::DzRatio),
            "delta" => Ok(Axis::Delta),
            "h0" => Ok(Axis::H0),
            other => Err(format!("unknown axis {other:?} (expected nz, l, dz-ratio, delta or h0)")),
        }
    }
}

/// A validated scan. Construct with [`SweepPlan::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    label: String,
    preset: MaterialPreset,
    axis: Axis,
    values: Vec<f64>,
    coefficient_exponents: Vec<f64>,
    /// Film thickness for axes other than `Nz`.
    n_z: u32,
    quad: CasimirQuadrature,
}

impl SweepPlan {
    pub fn new(
        label: impl Into<String>,
        preset: MaterialPreset,
        axis: Axis,
        values: Vec<f64>,
        coefficient_exponents: Vec<f64>,
    ) -> Result<Self, SweepError> {
        let plan = SweepPlan {
            label: label.into(),
            preset,
            axis,
            values,
            coefficient_exponents,
            n_z: 10,
            quad: CasimirQuadrature::standard(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_n_z(mut self, n_z: u32) -> Result<Self, SweepError> {
        if n_z == 0 {
            return Err(SweepError::InvalidValue { axis: Axis::Nz, value: 0.0, reason: "must be >= 1".into() });
        }
        self.n_z = n_z;
        Ok(self)
    }

    pub fn with_quadrature(mut self, quad: CasimirQuadrature) -> Result<Self, SweepError> {
        quad.validate()?;
        self.quad = quad;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn preset(&self) -> &MaterialPreset {
        &self.preset
    }
    pub fn axis(&self) -> Axis {
        self.axis
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn coefficient_exponents(&self) -> &[f64] {
        &self.coefficient_exponents
    }
    pub fn n_z(&self) -> u32 {
        self.n_z
    }
    pub fn quadrature(&self) -> &CasimirQuadrature {
        &self.quad
    }

    fn validate(&self) -> Result<(), SweepError> {
        let axis = self.axis;
        if self.values.is_empty() {
            return Err(SweepError::EmptyAxis(axis));
        }
        if self.coefficient_exponents.is_empty() {
            return Err(SweepError::NoExponents);
        }
        if let Some(&b) = self.coefficient_exponents.iter().find(|b| !b.is_finite()) {
            return Err(SweepError::InvalidValue { axis, value: b, reason: "exponent must be finite".into() });
        }
        let first = self.values.get(1).map_or(0.0, |v| v - self.values[0]);
        let breaks = (1..self.values.len()).find(|&i| {
            let step = self.values[i] - self.values[i - 1];
            !(step * first > 0.0)
        });
        if let Some(index) = breaks {
            return Err(SweepError::NotMonotone { axis, index });
        }
        for &v in &self.values {
            self.point(v)?;
        }
        Ok(())
    }

    /// Model and thickness at one axis value.
    pub fn point(&self, value: f64) -> Result<(DispersionModel, u32), SweepError> {
        let axis = self.axis;
        let bad = |reason: &str| SweepError::InvalidValue { axis, value, reason: reason.into() };
        let not_applicable = || SweepError::AxisNotApplicable { axis, preset: self.preset.name.clone() };
        if !value.is_finite() {
            return Err(bad("must be finite"));
        }
        let base = self.preset.params;
        let ferri = |f: fn(&mut FerriParams, f64)| -> Result<DispersionModel, SweepError> {
            let DispersionModel::Ferri(mut p) = base else { return Err(not_applicable()) };
            f(&mut p, value);
            p.validate().map_err(|e| bad(&e.to_string()))?;
            Ok(DispersionModel::Ferri(p))
        };
        let model = match axis {
            Axis::Nz => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(bad("must be a positive integer"));
                }
                return Ok((base, value as u32));
            }
            Axis::L => ferri(|p, v| p.l_exponent = v)?,
            Axis::DzRatio => ferri(|p, v| p.dz_over_a2 = v * p.d_over_a2)?,
            Axis::H0 => ferri(|p, v| p.h0 = v)?,
            Axis::Delta => match base {
                DispersionModel::Afm(p) => DispersionModel::Afm(p.with_delta(value).map_err(|e| bad(&e.to_string()))?),
                DispersionModel::Ferri(_) => return Err(not_applicable()),
            },
        };
        Ok((model, self.n_z))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RowStatus {
    Ok,
    /// The value is the best available but misses the requested tolerance.
    ToleranceNotMet,
    /// No value, e.g. an unstable spectrum.
    Failed(String),
    /// Not evaluated because the sweep was cancelled.
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub n_z: u32,
    /// One entry per coefficient exponent, in plan order. Empty when the
    /// point failed outright.
    pub results: Vec<CasimirResult>,
    pub status: RowStatus,
    #[serde(skip)]
    pub wall_time: f64,
}

pub fn run_sweep(plan: &SweepPlan, exec: Exec) -> Vec<SweepRow> {
    run_sweep_cancellable(plan, exec, &AtomicBool::new(false))
}

/// Rows not yet started when `cancel` becomes true are returned as
/// [`RowStatus::Cancelled`]; completed rows are kept.
pub fn run_sweep_cancellable(plan: &SweepPlan, exec: Exec, cancel: &AtomicBool) -> Vec<SweepRow> {
    let opts = EvalOptions { exec, ..EvalOptions::default() };
    par::map_ordered(&plan.values, exec, |&value| {
        let start = Instant::now();
        let mut row = SweepRow { axis_value: value, n_z: plan.n_z, results: Vec::new(), status: RowStatus::Ok, wall_time: 0.0 };
        if cancel.load(Ordering::Relaxed) {
            row.status = RowStatus::Cancelled;
            return row;
        }
        let (model, n_z) = match plan.point(value) {
            Ok(point) => point,
            Err(e) => {
                row.status = RowStatus::Failed(e.to_string());
                return row;
            }
        };
        row.n_z = n_z;
        let base = match casimir_energy_with(&model, n_z, &plan.quad, opts) {
            Ok(r) => Some(r),
            Err(CasimirError::ToleranceNotMet { best }) => {
                row.status = RowStatus::ToleranceNotMet;
                Some(*best)
            }
            Err(e) => {
                row.status = RowStatus::Failed(e.to_string());
                None
            }
        };
        if let Some(base) = base {
            row.results = plan.coefficient_exponents.iter().map(|&b| base.with_exponent(b)).collect();
        }
        row.wall_time = start.elapsed().as_secs_f64();
        row
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureId {
    Fig2,
    Fig3,
    FigS1,
    FigS2,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig2, FigureId::Fig3, FigureId::FigS1, FigureId::FigS2];
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for FigureId {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| SweepError::UnknownFigure(s.into()))
    }
}

/// Thickness range used for every figure; `N_z <= 3` rows carry the
/// ultrathin flag.
pub const FIGURE_NZ: std::ops::RangeInclusive<u32> = 1..=30;

fn nz_values() -> Vec<f64> {
    FIGURE_NZ.map(f64::from).collect()
}

pub fn figure_bundle(id: FigureId) -> Vec<SweepPlan> {
    let build = |label: String, preset: MaterialPreset, b: f64| {
        SweepPlan::new(label, preset, Axis::Nz, nz_values(), vec![b]).expect("built-in figure plan is valid")
    };
    let yig = |l: f64, dz_ratio: f64| {
        let mut preset = MaterialPreset::yig();
        if let DispersionModel::Ferri(p) = &mut preset.params {
            p.l_exponent = l;
            p.dz_over_a2 = dz_ratio * p.d_over_a2;
        }
        preset
    };
    match id {
        FigureId::Fig2 => {
            let gapped = MaterialPreset::cr2o3();
            let mut gapless = gapped.clone();
            if let DispersionModel::Afm(p) = &mut gapless.params {
                *p = p.with_delta(0.0).expect("zero gap is valid");
            }
            vec![build("delta=0".into(), gapless, 3.0), build("delta=Cr2O3".into(), gapped, 3.0)]
        }
        FigureId::Fig3 => [2.1, 2.0, 1.99, 1.9].into_iter().map(|l| build(format!("l={l}"), yig(l, 1.0), l)).collect(),
        FigureId::FigS1 => [2.0, 1.9, 1.5, 1.0].into_iter().map(|l| build(format!("l={l}"), yig(l, 1.0), l)).collect(),
        FigureId::FigS2 => [0.3, 0.5, 0.8, 1.0]
            .into_iter()
            .map(|r| build(format!("Dz/D={r}"), yig(1.99, r), 1.99))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_plan(preset: MaterialPreset, axis: Axis, values: Vec<f64>) -> SweepPlan {
        SweepPlan::new("t", preset, axis, values, vec![0.0, 2.0])
            .unwrap()
            .with_quadrature(CasimirQuadrature::fast())
            .unwrap()
    }

    #[test]
    fn empty_axis_rejected() {
        assert_eq!(
            SweepPlan::new("t", MaterialPreset::yig(), Axis::Nz, vec![], vec![2.0]),
            Err(SweepError::EmptyAxis(Axis::Nz))
        );
    }

    #[test]
    fn invalid_plans_rejected() {
        let yig = MaterialPreset::yig;
        assert!(matches!(
            SweepPlan::new("t", yig(), Axis::Nz, vec![1.0, 3.0, 2.0], vec![2.0]),
            Err(SweepError::NotMonotone { index: 2, .. })
        ));
        assert!(matches!(
            SweepPlan::new("t", yig(), Axis::Nz, vec![1.5], vec![2.0]),
            Err(SweepError::InvalidValue { .. })
        ));
        assert!(matches!(
            SweepPlan::new("t", yig(), Axis::L, vec![0.0, 1.0], vec![2.0]),
            Err(SweepError::InvalidValue { .. })
        ));
        assert!(matches!(
            SweepPlan::new("t", yig(), Axis::Delta, vec![0.0], vec![2.0]),
            Err(SweepError::AxisNotApplicable { .. })
        ));
        assert!(matches!(
            SweepPlan::new("t", MaterialPreset::cr2o3(), Axis::L, vec![1.9], vec![2.0]),
            Err(SweepError::AxisNotApplicable { .. })
        ));
        assert_eq!(SweepPlan::new("t", yig(), Axis::Nz, vec![2.0], vec![]), Err(SweepError::NoExponents));
        assert!(SweepPlan::new("t", yig(), Axis::Nz, vec![3.0, 2.0, 1.0], vec![2.0]).is_ok());
    }

    #[test]
    fn rows_follow_plan_order_and_exponents() {
        let plan = fast_plan(MaterialPreset::cr2o3(), Axis::Nz, vec![4.0, 3.0, 2.0]);
        let rows = run_sweep(&plan, Exec::Parallel);
        assert_eq!(rows.iter().map(|r| r.n_z).collect::<Vec<_>>(), vec![4, 3, 2]);
        for row in &rows {
            assert_eq!(row.status, RowStatus::Ok);
            assert_eq!(row.results.len(), 2);
            let [plain, scaled] = [row.results[0], row.results[1]];
            assert_eq!(plain.coefficient, plain.e_cas);
            assert_eq!(scaled.coefficient, plain.e_cas * (row.n_z as f64).powi(2));
        }
        assert!(rows[0].results[0].e_cas.abs() < rows[1].results[0].e_cas.abs());
    }

    #[test]
    fn axis_points_modify_the_preset() {
        let plan = SweepPlan::new("t", MaterialPreset::yig(), Axis::DzRatio, vec![0.5, 1.0], vec![1.99]).unwrap();
        let (DispersionModel::Ferri(p), n) = plan.point(0.5).unwrap() else { panic!() };
        assert_eq!(n, 10);
        assert_eq!(p.dz_over_a2, 0.5 * p.d_over_a2);
        let plan = SweepPlan::new("t", MaterialPreset::cr2o3(), Axis::Delta, vec![0.0], vec![3.0]).unwrap();
        let (DispersionModel::Afm(p), _) = plan.point(0.0).unwrap() else { panic!() };
        assert_eq!(p.delta, 0.0);
    }

    #[test]
    fn cancelled_rows_are_marked() {
        let plan = fast_plan(MaterialPreset::cr2o3(), Axis::Nz, vec![2.0, 3.0]);
        let rows = run_sweep_cancellable(&plan, Exec::Sequential, &AtomicBool::new(true));
        assert!(rows.iter().all(|r| r.status == RowStatus::Cancelled && r.results.is_empty()));
    }

    #[test]
    fn failed_point_does_not_abort() {
        // Dipolar shift exceeds the σ = - gap near the zone center.
        let mut preset = MaterialPreset::yig();
        if let DispersionModel::Ferri(p) = &mut preset.params {
            p.delta_minus = 0.02;
            p.h0 = 0.0;
        }
        let plan = SweepPlan::new("t", preset, Axis::Nz, vec![1.0, 2.0], vec![1.0])
            .unwrap()
            .with_quadrature(CasimirQuadrature::fast())
            .unwrap();
        let rows = run_sweep(&plan, Exec::Sequential);
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert!(matches!(row.status, RowStatus::Failed(_)), "{:?}", row.status);
            assert!(row.results.is_empty());
        }
    }

    #[test]
    fn figure_bundles() {
        let fig3 = figure_bundle(FigureId::Fig3);
        let ls: Vec<f64> = fig3
            .iter()
            .map(|p| match p.preset().params {
                DispersionModel::Ferri(f) => {
                    assert_eq!(f.dz_over_a2, f.d_over_a2);
                    assert_eq!(p.coefficient_exponents(), &[f.l_exponent]);
                    f.l_exponent
                }
                _ => panic!(),
            })
            .collect();
        assert_eq!(ls, vec![2.1, 2.0, 1.99, 1.9]);

        let ratios: Vec<f64> = figure_bundle(FigureId::FigS2)
            .iter()
            .map(|p| match p.preset().params {
                DispersionModel::Ferri(f) => {
                    assert_eq!(f.l_exponent, 1.99);
                    f.dz_over_a2 / f.d_over_a2
                }
                _ => panic!(),
            })
            .collect();
        for (r, want) in ratios.into_iter().zip([0.3, 0.5, 0.8, 1.0]) {
            assert!((r - want).abs() < 1e-15);
        }

        let fig2 = figure_bundle(FigureId::Fig2);
        assert_eq!(fig2.len(), 2);
        assert!(fig2.iter().all(|p| p.coefficient_exponents() == [3.0] && p.values().len() == 30));
        assert_eq!(figure_bundle(FigureId::FigS1).len(), 4);
        assert_eq!("figs2".parse::<FigureId>(), Ok(FigureId::FigS2));
        assert_eq!("Fig9".parse::<FigureId>(), Err(SweepError::UnknownFigure("Fig9".into())));
    }
}
