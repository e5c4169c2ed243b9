//! Run configuration: a TOML file plus `--set key=value` overrides.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output: OutputConfig,
    pub units: UnitsConfig,
    pub medium: MediumConfig,
    pub grid: GridConfig,
    pub quadrature: QuadratureConfig,
    pub renorm: RenormConfig,
    pub vacuum: VacuumConfig,
    pub cdm: CdmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output: OutputConfig::default(),
            units: UnitsConfig::default(),
            medium: MediumConfig::default(),
            grid: GridConfig::default(),
            quadrature: QuadratureConfig::default(),
            renorm: RenormConfig::default(),
            vacuum: VacuumConfig::default(),
            cdm: CdmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving `<subcommand>.csv` (and `.jsonl`).
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsConfig {
    /// Length unit in meters; wavenumbers are in inverse units of it.
    pub length_m: f64,
    /// Add angular-frequency columns in rad/s.
    pub si: bool,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { length_m: 1e-7, si: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Vacuum,
    ConstantMg,
    WindowedMg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub model: ModelKind,
    pub rho: f64,
    /// Bare static polarizability; radiatively corrected at each wavenumber.
    pub alpha0: f64,
    pub xi: f64,
    /// Window radius; exclusion-matched when absent.
    pub q_c: Option<f64>,
    /// Lossless refractive index; fixes `ρα̃` by Clausius-Mossotti instead
    /// of `alpha0`.
    pub n: Option<f64>,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::WindowedMg,
            rho: 10.0,
            alpha0: 0.005,
            xi: 0.2,
            q_c: None,
            n: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            k_min: 0.1,
            k_max: 1.0,
            points: 10,
            spacing: Spacing::Linear,
        }
    }
}

impl GridConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.k_min];
        }
        (0..self.points)
            .map(|i| {
                let t = i as f64 / (self.points - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.k_min + t * (self.k_max - self.k_min),
                    Spacing::Log => self.k_min * (self.k_max / self.k_min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub q_max: Option<f64>,
    pub eta: f64,
    pub rel_tol: f64,
    pub richardson: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            q_max: None,
            eta: 1e-6,
            rel_tol: 1e-10,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenormConfig {
    pub k0: f64,
    pub alpha0: f64,
    pub xi: f64,
    /// Densities swept; zero gives the free-space width.
    pub rho: Vec<f64>,
}

impl Default for RenormConfig {
    fn default() -> Self {
        Self {
            k0: 1.0,
            alpha0: 0.005,
            xi: 0.2,
            rho: vec![0.0, 1.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VacuumConfig {
    /// Oscillator strengths swept.
    pub f: Vec<f64>,
    pub omega_res: f64,
    pub gamma: f64,
    pub rho: f64,
    /// Cutoff of the bulk integral; `100·omega_res` when absent.
    pub omega_max: Option<f64>,
}

impl Default for VacuumConfig {
    fn default() -> Self {
        Self {
            f: vec![1e-2, 1e-3, 1e-4],
            omega_res: 1.0,
            gamma: 1e-3,
            rho: 1.0,
            omega_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdmConfig {
    pub rho: f64,
    pub xi: f64,
    pub alpha0: f64,
    pub k: f64,
    pub n_dipoles: usize,
    pub n_configs: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub rel_tol: f64,
    pub q_c: Option<f64>,
}

impl Default for CdmConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            xi: 0.2,
            alpha0: 0.005,
            k: 1.0,
            n_dipoles: 500,
            n_configs: 200,
            base_seed: 1,
            threads: 0,
            rel_tol: 0.1,
            q_c: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        err(format!("{name}: must be positive and finite, got {v}"))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        err(format!("{name}: must be non-negative and finite, got {v}"))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("units.length_m", self.units.length_m)?;
        let m = &self.medium;
        non_negative("medium.rho", m.rho)?;
        non_negative("medium.alpha0", m.alpha0)?;
        positive("medium.xi", m.xi)?;
        if let Some(q) = m.q_c {
            positive("medium.q_c", q)?;
        }
        if let Some(n) = m.n {
            if !(n >= 1.0 && n.is_finite()) {
                return err(format!("medium.n: must be at least 1, got {n}"));
            }
            positive("medium.rho", m.rho)?;
        }
        let g = &self.grid;
        positive("grid.k_min", g.k_min)?;
        positive("grid.k_max", g.k_max)?;
        if g.points == 0 {
            return err("grid.points: must be at least 1");
        }
        if g.points > 1 && !(g.k_max > g.k_min) {
            return err(format!("grid: k_max ({}) must exceed k_min ({})", g.k_max, g.k_min));
        }
        let q = &self.quadrature;
        if let Some(v) = q.q_max {
            positive("quadrature.q_max", v)?;
        }
        positive("quadrature.eta", q.eta)?;
        if !(q.rel_tol > 0.0 && q.rel_tol < 1.0) {
            return err(format!("quadrature.rel_tol: must lie in (0, 1), got {}", q.rel_tol));
        }
        let r = &self.renorm;
        positive("renorm.k0", r.k0)?;
        positive("renorm.alpha0", r.alpha0)?;
        positive("renorm.xi", r.xi)?;
        for (i, v) in r.rho.iter().enumerate() {
            non_negative(&format!("renorm.rho[{i}]"), *v)?;
        }
        let v = &self.vacuum;
        if v.f.is_empty() {
            return err("vacuum.f: needs at least one oscillator strength");
        }
        for (i, f) in v.f.iter().enumerate() {
            positive(&format!("vacuum.f[{i}]"), *f)?;
        }
        positive("vacuum.omega_res", v.omega_res)?;
        positive("vacuum.gamma", v.gamma)?;
        non_negative("vacuum.rho", v.rho)?;
        if let Some(w) = v.omega_max {
            positive("vacuum.omega_max", w)?;
        }
        let c = &self.cdm;
        positive("cdm.rho", c.rho)?;
        positive("cdm.xi", c.xi)?;
        positive("cdm.alpha0", c.alpha0)?;
        positive("cdm.k", c.k)?;
        positive("cdm.rel_tol", c.rel_tol)?;
        if c.n_dipoles == 0 {
            return err("cdm.n_dipoles: must be at least 1");
        }
        if c.n_configs < 2 {
            return err("cdm.n_configs: must be at least 2");
        }
        if let Some(q) = c.q_c {
            positive("cdm.q_c", q)?;
        }
        Ok(())
    }

    /// Canonical TOML text; the config hash is taken over it.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let Some((key, raw)) = spec.split_once('=') else {
        return err(format!("--set {spec}: expected key=value"));
    };
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return err(format!("--set {spec}: malformed key"));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return err(format!("--set {spec}: {part} is not a section")),
        };
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Parse `text`, apply overrides in order and validate.
pub fn load(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e| ConfigError(format!("config: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError(format!("config: {}", e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let cfg = load("[medium]\nmodel = \"constant-mg\"\nq_c = 3.0\n", &["cdm.threads=2".into()]).unwrap();
        let back: RunConfig = toml::from_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.cdm.threads, 2);
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = load("", &["grid.points=3".into(), "output.dir=elsewhere".into(), "vacuum.f=[0.1]".into()]).unwrap();
        assert_eq!(cfg.grid.values().len(), 3);
        assert_eq!(cfg.output.dir, "elsewhere");
        assert_eq!(cfg.vacuum.f, vec![0.1]);
        let e = load("[grid]\nk_min = -1.0\n", &[]).unwrap_err();
        assert!(e.0.starts_with("grid.k_min"), "{e}");
        assert!(load("[medium]\nbogus = 1\n", &[]).is_err());
        assert!(load("", &["nokey".into()]).is_err());
        assert!(load("[grid]\nk_min = 2.0\nk_max = 1.0\n", &[]).is_err());
    }

    #[test]
    fn grids_increase() {
        for spacing in [Spacing::Linear, Spacing::Log] {
            let g = GridConfig {
                k_min: 0.1,
                k_max: 2.0,
                points: 7,
                spacing,
            };
            let v = g.values();
            assert!(v.windows(2).all(|w| w[1] > w[0]));
            assert!((v[6] - 2.0).abs() < 1e-15);
        }
    }
}
