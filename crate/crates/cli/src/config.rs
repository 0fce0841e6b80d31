//! Sectioned `key = value` run configuration.
//!
//! Every key names its unit in its suffix and is converted to SI on load.
//! Keys that count things or are ratios are listed as dimensionless.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use ini::Ini;

use crate::CliError;

/// SI factor of a unit suffix.
fn unit_factor(suffix: &str) -> Option<f64> {
    Some(match suffix {
        "um" => 1e-6,
        "nm" => 1e-9,
        "GHz" => 1e9,
        "MHz" => 1e6,
        "THz" => 1e12,
        "uT" => 1e-6,
        "us" => 1e-6,
        "mK" => 1e-3,
        "s" => 1.0,
        "ohm" => 1.0,
        "deg" => PI / 180.0,
        "GHz_per_mT" => 1e12,
        _ => return None,
    })
}

const DIMENSIONLESS: &[&str] = &[
    "n_fock",
    "points",
    "grid_points",
    "k_levels",
    "sigma_cloud",
    "separation_sigma",
    "seed",
    "alpha",
    "beta",
];

/// Known keys per section. `B_list_uT` takes a comma-separated list.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "device",
        &["w_um", "t_nm", "length_um", "xi_nm", "lambda_L_um", "f_r_GHz", "Z_r_ohm", "eps0_GHz"],
    ),
    (
        "qrm",
        &["f_r_GHz", "g_MHz", "gamma_GHz_per_mT", "B0_uT", "f_q0_GHz", "theta_deg", "phi_deg", "n_fock"],
    ),
    ("pinning", &["x_nm", "y_nm", "V_GHz", "sigma_nm"]),
    ("tunneling", &["grid_points", "x_min_nm", "x_max_nm", "y_zpf_nm", "k_levels"]),
    (
        "jumps",
        &[
            "T_up_us",
            "T_down_us",
            "sigma_cloud",
            "separation_sigma",
            "spacing_us",
            "tau_m_us",
            "duration_s",
            "seed",
        ],
    ),
    ("sweep", &["B_min_uT", "B_max_uT", "points", "B_list_uT"]),
    ("pair", &["x1_nm", "y1_nm", "x2_nm", "y2_nm", "delta_LR_nm", "alpha", "beta"]),
];

/// Repeatable sections; all others may appear once.
const REPEATABLE: &[&str] = &["pinning"];

fn factor_for(key: &str) -> Result<f64, CliError> {
    if DIMENSIONLESS.contains(&key) {
        return Ok(1.0);
    }
    // longest matching suffix wins, so `_GHz_per_mT` beats `_mT`
    let mut best: Option<(usize, f64)> = None;
    for (i, _) in key.match_indices('_') {
        if let Some(f) = unit_factor(&key[i + 1..]) {
            let len = key.len() - i;
            if best.is_none_or(|(l, _)| len > l) {
                best = Some((len, f));
            }
        }
    }
    best.map(|(_, f)| f)
        .ok_or_else(|| CliError::Config(format!("key `{key}` carries no unit suffix")))
}

/// One section instance with values already in SI.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    values: BTreeMap<String, Vec<f64>>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(|v| v.first().copied())
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        self.values.get(key).map(|v| v.as_slice())
    }

    pub fn require(&self, key: &str) -> Result<f64, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("[{}] is missing `{key}`", self.name)))
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(Some(v as usize)),
            Some(v) => Err(CliError::Config(format!(
                "[{}] `{key}` must be a non-negative integer, got {v}",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    sections: Vec<Section>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        let mut sections = Vec::new();
        let mut seen = HashSet::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(CliError::Config("keys outside any section".into()));
                }
                continue;
            };
            let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| *s == name) else {
                return Err(CliError::Config(format!("unknown section [{name}]")));
            };
            if !REPEATABLE.contains(&name) && !seen.insert(name.to_string()) {
                return Err(CliError::Config(format!("section [{name}] appears twice")));
            }
            let mut section = Section {
                name: name.to_string(),
                values: BTreeMap::new(),
            };
            for (key, raw) in props.iter() {
                if !keys.contains(&key) {
                    return Err(CliError::Config(format!("unknown key `{key}` in [{name}]")));
                }
                if section.values.contains_key(key) {
                    return Err(CliError::Config(format!("duplicate key `{key}` in [{name}]")));
                }
                let factor = factor_for(key)?;
                let text = raw.split('#').next().unwrap_or("").trim();
                let parts: Vec<&str> = if text.is_empty() {
                    Vec::new()
                } else {
                    text.split(',').map(str::trim).collect()
                };
                if parts.len() != 1 && !key.starts_with("B_list") {
                    return Err(CliError::Config(format!("`{key}` in [{name}] needs a single number")));
                }
                let values = parts
                    .iter()
                    .map(|p| {
                        p.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .map(|v| v * factor)
                            .ok_or_else(|| CliError::Config(format!("`{key}` in [{name}]: `{p}` is not a number")))
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                section.values.insert(key.to_string(), values);
            }
            sections.push(section);
        }
        Ok(RunConfig { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_converted() {
        let c = RunConfig::parse("[device]\nw_um = 3\nt_nm = 24 # film\n[qrm]\ngamma_GHz_per_mT = 20\nn_fock = 40\n").unwrap();
        let d = c.section("device").unwrap();
        assert!((d.get("w_um").unwrap() - 3e-6).abs() < 1e-18);
        assert!((d.get("t_nm").unwrap() - 24e-9).abs() < 1e-20);
        let q = c.section("qrm").unwrap();
        assert_eq!(q.get("gamma_GHz_per_mT"), Some(20e12));
        assert_eq!(q.count("n_fock").unwrap(), Some(40));
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(RunConfig::parse("[device]\nwidth = 3\n").is_err());
        assert!(RunConfig::parse("[nonsense]\n").is_err());
        assert!(RunConfig::parse("[device]\nw_um = abc\n").is_err());
        assert!(RunConfig::parse("[qrm]\nn_fock=1\n[qrm]\nn_fock=2\n").is_err());
        assert!(RunConfig::parse("[device]\nw_um = 1\nw_um = 2\n").is_err());
    }

    #[test]
    fn repeated_pinning_and_lists() {
        let c = RunConfig::parse(
            "[pinning]\nx_nm = 1\ny_nm = 0\n[pinning]\nx_nm = 2\ny_nm = 0\n[sweep]\nB_list_uT = 1, 2,3\n",
        )
        .unwrap();
        assert_eq!(c.sections_named("pinning").count(), 2);
        assert_eq!(c.section("sweep").unwrap().list("B_list_uT").unwrap().len(), 3);
        let empty = RunConfig::parse("[sweep]\nB_list_uT =\n").unwrap();
        assert!(empty.section("sweep").unwrap().list("B_list_uT").unwrap().is_empty());
    }

    #[test]
    fn suffix_lookup() {
        assert_eq!(factor_for("gamma_GHz_per_mT").unwrap(), 1e12);
        assert_eq!(factor_for("seed").unwrap(), 1.0);
        assert!(factor_for("width").is_err());
    }
}
