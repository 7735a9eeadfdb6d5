//! Material presets and the parameter file format.
//!
//! Parameter files are UTF-8 text with one `key = value` pair per line and
//! `#` comments. Every numeric key carries its unit as a suffix; energies may
//! be given in meV (`_meV`) or μeV (`_ueV`) and are converted to meV once, on
//! load. Unknown keys are rejected.
//!
//! ```text
//! name = YIG
//! kind = ferrimagnet
//! H0_ueV = 8.10373
//! delta_plus_meV = 2.13191
//! delta_minus_meV = 41.98072
//! D_over_a2_meV = 3.37645
//! Dz_over_a2_meV = 3.37645
//! l = 2
//! hbar_omegaM_ueV = 20.3369
//! a_nm = 1.2376
//! ```
//!
//! Antiferromagnets use `J_meV`, `S`, `K_meV`, `a_nm` and an optional
//! dimensionless `delta` that overrides the gap derived from `J` and `K`.
//! Files written by [`MaterialPreset::to_config_string`] use meV throughout
//! and shortest round-trip decimals, so they reload bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{AfmParams, DispersionError, DispersionModel, FerriParams};

#[derive(Debug, Error)]
pub enum MaterialsError {
    #[error("unknown preset {0:?} (known: {1})")]
    UnknownPreset(String, String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown field {key:?}")]
    UnknownField { line: usize, key: String },
    #[error("missing field {0:?}")]
    MissingField(String),
    #[error("invariant violated for {field}: {reason}")]
    InvariantViolation { field: String, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<DispersionError> for MaterialsError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::InvalidParameter { field, reason } => {
                MaterialsError::InvariantViolation { field: field.to_string(), reason }
            }
            other => MaterialsError::InvariantViolation { field: "params".into(), reason: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialKind {
    Afm,
    Ferrimagnet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialPreset {
    pub name: String,
    pub params: DispersionModel,
    pub provenance: String,
}

impl MaterialPreset {
    pub fn kind(&self) -> MaterialKind {
        match self.params {
            DispersionModel::Afm(_) => MaterialKind::Afm,
            DispersionModel::Ferri(_) => MaterialKind::Ferrimagnet,
        }
    }

    pub fn cr2o3() -> Self {
        let params = AfmParams::from_exchange(15.0, 1.5, 0.03, 0.49607).expect("valid Cr2O3 parameters");
        MaterialPreset {
            name: "Cr2O3".into(),
            params: DispersionModel::Afm(params),
            provenance: "Cr2O3 estimate: J = 15 meV, S = 3/2, K = 0.03 meV, a = 0.49607 nm".into(),
        }
    }

    pub fn yig() -> Self {
        let params = FerriParams {
            h0: 8.10373e-3,
            delta_plus: 2.13191,
            delta_minus: 41.98072,
            d_over_a2: 3.37645,
            dz_over_a2: 3.37645,
            l_exponent: 2.0,
            hbar_omega_m: 20.3369e-3,
            a_nm: 1.2376,
        };
        MaterialPreset {
            name: "YIG".into(),
            params: DispersionModel::Ferri(params),
            provenance: "YIG thin film: D/a^2 = 3.37645 meV, a = 1.2376 nm, H0 = 8.10373 ueV, \
                         hbar*omega_M = 20.3369 ueV, Delta+ = 2.13191 meV, Delta- = 41.98072 meV"
                .into(),
        }
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "provenance = {}", self.provenance);
        match &self.params {
            DispersionModel::Afm(p) => {
                let _ = writeln!(out, "kind = afm");
                let _ = writeln!(out, "J_meV = {}", p.j);
                let _ = writeln!(out, "S = {}", p.s);
                let _ = writeln!(out, "K_meV = {}", p.k_aniso);
                let _ = writeln!(out, "a_nm = {}", p.a_nm);
                let derived = AfmParams::from_exchange(p.j, p.s, p.k_aniso, p.a_nm).map(|d| d.delta);
                if derived != Ok(p.delta) {
                    let _ = writeln!(out, "delta = {}", p.delta);
                }
            }
            DispersionModel::Ferri(p) => {
                let _ = writeln!(out, "kind = ferrimagnet");
                let _ = writeln!(out, "H0_meV = {}", p.h0);
                let _ = writeln!(out, "delta_plus_meV = {}", p.delta_plus);
                let _ = writeln!(out, "delta_minus_meV = {}", p.delta_minus);
                let _ = writeln!(out, "D_over_a2_meV = {}", p.d_over_a2);
                let _ = writeln!(out, "Dz_over_a2_meV = {}", p.dz_over_a2);
                let _ = writeln!(out, "l = {}", p.l_exponent);
                let _ = writeln!(out, "hbar_omegaM_meV = {}", p.hbar_omega_m);
                let _ = writeln!(out, "a_nm = {}", p.a_nm);
            }
        }
        out
    }

    pub fn parse_config(text: &str) -> Result<Self, MaterialsError> {
        let mut fields = Fields::parse(text)?;
        let name = fields.text("name")?.unwrap_or_else(|| "custom".into());
        let provenance = fields.text("provenance")?.unwrap_or_default();
        let kind = fields.text("kind")?.ok_or_else(|| MaterialsError::MissingField("kind".into()))?;
        let params = match kind.to_ascii_lowercase().as_str() {
            "afm" | "antiferromagnet" => {
                let j = fields.energy("J")?;
                let s = fields.number("S")?;
                let k = fields.energy("K")?;
                let a = fields.number("a_nm")?;
                let mut p = AfmParams::from_exchange(j, s, k, a)?;
                if let Some(delta) = fields.optional_number("delta")? {
                    p = p.with_delta(delta)?;
                }
                DispersionModel::Afm(p)
            }
            "ferrimagnet" | "ferri" => {
                let p = FerriParams {
                    h0: fields.energy("H0")?,
                    delta_plus: fields.energy("delta_plus")?,
                    delta_minus: fields.energy("delta_minus")?,
                    d_over_a2: fields.energy("D_over_a2")?,
                    dz_over_a2: fields.energy("Dz_over_a2")?,
                    l_exponent: fields.number("l")?,
                    hbar_omega_m: fields.energy("hbar_omegaM")?,
                    a_nm: fields.number("a_nm")?,
                };
                p.validate()?;
                DispersionModel::Ferri(p)
            }
            other => {
                return Err(MaterialsError::InvariantViolation {
                    field: "kind".into(),
                    reason: format!("expected afm or ferrimagnet, got {other:?}"),
                })
            }
        };
        fields.finish()?;
        Ok(MaterialPreset { name, params, provenance })
    }
}

const ENERGY_KEYS: [&str; 9] = ["J", "K", "H0", "delta_plus", "delta_minus", "D_over_a2", "Dz_over_a2", "hbar_omegaM", "_"];
const PLAIN_KEYS: [&str; 7] = ["name", "kind", "provenance", "S", "a_nm", "l", "delta"];

struct Fields {
    values: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn parse(text: &str) -> Result<Self, MaterialsError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| MaterialsError::Parse { line, message: format!("expected `key = value`, got {content:?}") })?;
            let key = key.trim().to_string();
            let mut value = value.trim();
            if key != "provenance" {
                if let Some((v, _comment)) = value.split_once('#') {
                    value = v.trim();
                }
            }
            if !is_known(&key) {
                return Err(MaterialsError::UnknownField { line, key });
            }
            if values.insert(key.clone(), (line, value.to_string())).is_some() {
                return Err(MaterialsError::Parse { line, message: format!("duplicate key {key:?}") });
            }
        }
        Ok(Fields { values })
    }

    fn text(&mut self, key: &str) -> Result<Option<String>, MaterialsError> {
        Ok(self.values.remove(key).map(|(_, v)| v))
    }

    fn parse_number(line: usize, key: &str, v: &str) -> Result<f64, MaterialsError> {
        let x: f64 = v
            .parse()
            .map_err(|_| MaterialsError::Parse { line, message: format!("{key}: not a decimal number: {v:?}") })?;
        if !x.is_finite() {
            return Err(MaterialsError::Parse { line, message: format!("{key}: must be finite") });
        }
        Ok(x)
    }

    fn optional_number(&mut self, key: &str) -> Result<Option<f64>, MaterialsError> {
        match self.values.remove(key) {
            Some((line, v)) => Self::parse_number(line, key, &v).map(Some),
            None => Ok(None),
        }
    }

    fn number(&mut self, key: &str) -> Result<f64, MaterialsError> {
        self.optional_number(key)?.ok_or_else(|| MaterialsError::MissingField(key.into()))
    }

    /// `<base>_meV` or `<base>_ueV`, returned in meV.
    fn energy(&mut self, base: &str) -> Result<f64, MaterialsError> {
        let mev = self.optional_number(&format!("{base}_meV"))?;
        let uev = self.optional_number(&format!("{base}_ueV"))?;
        match (mev, uev) {
            (Some(v), None) => Ok(v),
            (None, Some(v)) => Ok(v / 1000.0),
            (Some(_), Some(_)) => Err(MaterialsError::InvariantViolation {
                field: base.into(),
                reason: "given in both meV and ueV".into(),
            }),
            (None, None) => Err(MaterialsError::MissingField(format!("{base}_meV"))),
        }
    }

    fn finish(self) -> Result<(), MaterialsError> {
        match self.values.into_iter().next() {
            Some((key, (line, _))) => Err(MaterialsError::UnknownField { line, key }),
            None => Ok(()),
        }
    }
}

fn is_known(key: &str) -> bool {
    if PLAIN_KEYS.contains(&key) {
        return true;
    }
    key.strip_suffix("_meV")
        .or_else(|| key.strip_suffix("_ueV"))
        .is_some_and(|base| ENERGY_KEYS[..8].contains(&base))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<MaterialPreset, MaterialsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| MaterialsError::Io { path: path.display().to_string(), source })?;
    MaterialPreset::parse_config(&text)
}

/// Built-in presets plus any registered by the caller.
#[derive(Debug, Clone)]
pub struct PresetRegistry {
    presets: BTreeMap<String, MaterialPreset>,
}

impl Default for PresetRegistry {
    fn default() -> Self {
        let mut presets = BTreeMap::new();
        for p in [MaterialPreset::cr2o3(), MaterialPreset::yig()] {
            presets.insert(p.name.clone(), p);
        }
        PresetRegistry { presets }
    }
}

impl PresetRegistry {
    pub fn register(&mut self, preset: MaterialPreset) {
        self.presets.insert(preset.name.clone(), preset);
    }

    pub fn get(&self, name: &str) -> Result<MaterialPreset, MaterialsError> {
        self.presets.get(name).cloned().ok_or_else(|| {
            MaterialsError::UnknownPreset(name.into(), self.presets.keys().cloned().collect::<Vec<_>>().join(", "))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.presets.keys().map(String::as_str)
    }
}

pub fn preset(name: &str) -> Result<MaterialPreset, MaterialsError> {
    PresetRegistry::default().get(name)
}
