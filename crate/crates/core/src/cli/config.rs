//! Experiment configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::default_eps_grid;
use crate::groups::{
    build_genus2, build_schottky, twist_deform, Alphabet, Construction, FuchsianRep, Genus2Params, GroupError,
    MessGroup, SchottkyParams, TwistKind, DEFAULT_COMMUTATOR_TRACE,
};
use crate::lorentz::AdSPoint;
use crate::mat2::Mat2;
use crate::orbit::{EnumerationOptions, WindowRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondFactor {
    pub twist: TwistKind,
    #[serde(default = "default_curve")]
    pub curve: String,
}

fn default_curve() -> String {
    "a1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    /// `(ρ, ρ)` or `(ρ, twist(ρ))` for the genus-2 amalgam `ρ`.
    Genus2 {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_trace")]
        commutator_trace: f64,
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        second: Option<SecondFactor>,
    },
    /// Rank-2 Schottky pair; the second factor defaults to the first.
    Schottky {
        #[serde(default = "default_translation")]
        translation_length: f64,
        #[serde(default = "default_fixed_a")]
        fixed_a: (f64, f64),
        #[serde(default = "default_fixed_b")]
        fixed_b: (f64, f64),
        #[serde(default)]
        second_translation_length: Option<f64>,
    },
    /// Generator matrices given row-major.
    Explicit { labels: Vec<String>, relator: String, rho1: Vec<[f64; 4]>, rho2: Vec<[f64; 4]> },
}

fn default_lambda() -> f64 {
    std::f64::consts::E
}
fn default_trace() -> f64 {
    DEFAULT_COMMUTATOR_TRACE
}
fn default_translation() -> f64 {
    SchottkyParams::default().translation_length
}
fn default_fixed_a() -> (f64, f64) {
    SchottkyParams::default().fixed_a
}
fn default_fixed_b() -> (f64, f64) {
    SchottkyParams::default().fixed_b
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec::Genus2 { lambda: default_lambda(), commutator_trace: default_trace(), m: None, second: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    #[default]
    J,
    /// An SL(2,R) matrix, row-major.
    Matrix { m: [f64; 4] },
    /// `γ·J` for a word in the generators.
    Word { word: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowConfig {
    #[serde(default = "d_n_shadows")]
    pub n_shadows: usize,
    #[serde(default = "d_shadow_range")]
    pub dist_range: (f64, f64),
    #[serde(default = "d_shadow_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "d_ball_centres")]
    pub n_ball_centres: usize,
    #[serde(default = "d_ball_radii")]
    pub ball_radii: Vec<f64>,
    #[serde(default = "d_spread_tol")]
    pub spread_tol: f64,
    #[serde(default = "d_slope_tol")]
    pub slope_tol: f64,
    #[serde(default = "d_margin")]
    pub exponent_margin: f64,
}

fn d_n_shadows() -> usize {
    100
}
fn d_shadow_range() -> (f64, f64) {
    (2.0, 6.0)
}
fn d_shadow_radii() -> Vec<f64> {
    vec![1.5, 2.5, 3.5]
}
fn d_ball_centres() -> usize {
    50
}
fn d_ball_radii() -> Vec<f64> {
    crate::boundary::log_grid(0.02, 0.2, 8)
}
fn d_spread_tol() -> f64 {
    100.0
}
fn d_slope_tol() -> f64 {
    0.2
}
fn d_margin() -> f64 {
    crate::ps::EXPONENT_MARGIN
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig {
            n_shadows: d_n_shadows(),
            dist_range: d_shadow_range(),
            radii: d_shadow_radii(),
            n_ball_centres: d_ball_centres(),
            ball_radii: d_ball_radii(),
            spread_tol: d_spread_tol(),
            slope_tol: d_slope_tol(),
            exponent_margin: d_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityConfig {
    pub twists: Vec<i64>,
    #[serde(default = "default_curve")]
    pub curve: String,
    #[serde(default = "d_true")]
    pub hdim: bool,
}

fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default)]
    pub base_point: BaseSpec,
    #[serde(default = "d_max_len")]
    pub max_word_len: usize,
    /// Elements farther than this are neither kept nor extended; `null` disables pruning.
    #[serde(default = "d_prune")]
    pub prune_radius: Option<f64>,
    #[serde(default = "d_max_records")]
    pub max_records: usize,
    #[serde(default = "d_validation_len")]
    pub validation_len: usize,
    #[serde(default = "d_r_step")]
    pub r_step: f64,
    #[serde(default)]
    pub window: WindowRule,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "d_limit_points")]
    pub limit_points: usize,
    #[serde(default = "d_triangle_samples")]
    pub triangle_samples: usize,
    /// Triples are drawn from orbit points within this distance of the base point.
    #[serde(default = "d_triangle_radius")]
    pub triangle_radius: Option<f64>,
    #[serde(default = "d_checks")]
    pub n_checks: usize,
    #[serde(default = "d_check_len")]
    pub check_word_len: usize,
    #[serde(default)]
    pub shadow: ShadowConfig,
    #[serde(default)]
    pub rigidity: Option<RigidityConfig>,
    /// Mandatory; every random choice derives from it.
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn d_max_len() -> usize {
    11
}
fn d_prune() -> Option<f64> {
    Some(13.0)
}
fn d_max_records() -> usize {
    EnumerationOptions::default().max_records
}
fn d_validation_len() -> usize {
    8
}
fn d_r_step() -> f64 {
    0.1
}
fn d_limit_points() -> usize {
    5000
}
fn d_triangle_samples() -> usize {
    100_000
}
fn d_triangle_radius() -> Option<f64> {
    Some(7.0)
}
fn d_checks() -> usize {
    100
}
fn d_check_len() -> usize {
    6
}

impl ExperimentConfig {
    /// Defaults with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Grid and range checks beyond the schema.
    pub fn check(&self) -> Result<(), String> {
        let increasing = |name: &str, g: &[f64]| -> Result<(), String> {
            if g.is_empty() {
                return Err(format!("{name} must be nonempty"));
            }
            if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(format!("{name} must be finite and strictly increasing"));
            }
            Ok(())
        };
        increasing("eps_grid", &self.eps_grid)?;
        if self.eps_grid[0] < 1e-3 || self.eps_grid[self.eps_grid.len() - 1] > 0.3 {
            return Err("eps_grid must lie within [1e-3, 0.3]".into());
        }
        increasing("shadow.radii", &self.shadow.radii)?;
        increasing("shadow.ball_radii", &self.shadow.ball_radii)?;
        if !(self.r_step > 0.0 && self.r_step.is_finite()) {
            return Err("r_step must be positive".into());
        }
        if let Some(p) = self.prune_radius {
            if !(p > 0.0) {
                return Err("prune_radius must be positive".into());
            }
        }
        if self.shadow.dist_range.1 <= self.shadow.dist_range.0 {
            return Err("shadow.dist_range must be increasing".into());
        }
        if let Some(r) = &self.rigidity {
            if r.twists.windows(2).any(|w| w[1] <= w[0]) {
                return Err("rigidity.twists must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical (sorted-key) JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(ExperimentConfig { out_dir: None, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn enumeration(&self) -> EnumerationOptions {
        EnumerationOptions {
            max_word_len: self.max_word_len,
            prune_radius: self.prune_radius,
            max_records: self.max_records,
        }
    }

    pub fn build_pair(&self) -> Result<(FuchsianRep, FuchsianRep), GroupError> {
        match &self.group {
            GroupSpec::Genus2 { lambda, commutator_trace, m, second } => {
                let rho = build_genus2(Genus2Params { lambda: *lambda, m: *m, commutator_trace: *commutator_trace })?;
                let rho2 = match second {
                    Some(s) => twist_deform(&rho, s.twist, &s.curve)?,
                    None => rho.clone(),
                };
                Ok((rho, rho2))
            }
            GroupSpec::Schottky { translation_length, fixed_a, fixed_b, second_translation_length } => {
                let p = SchottkyParams { translation_length: *translation_length, fixed_a: *fixed_a, fixed_b: *fixed_b };
                let rho = build_schottky(p)?;
                let rho2 = match second_translation_length {
                    Some(l) => build_schottky(SchottkyParams { translation_length: *l, ..p })?,
                    None => rho.clone(),
                };
                Ok((rho, rho2))
            }
            GroupSpec::Explicit { labels, relator, rho1, rho2 } => {
                let alphabet = Alphabet::new(labels.clone())?;
                let rel = if relator == "free" { None } else { Some(alphabet.parse(relator)?) };
                let mats = |v: &[[f64; 4]]| v.iter().map(|m| Mat2::from_row_major(*m)).collect::<Vec<_>>();
                let r1 = FuchsianRep::new(alphabet.clone(), mats(rho1), rel.clone(), Construction::Explicit)?;
                let r2 = FuchsianRep::new(alphabet, mats(rho2), rel, Construction::Explicit)?;
                Ok((r1, r2))
            }
        }
    }

    /// The marked group with its configured base point.
    pub fn build_group(&self) -> Result<MessGroup, GroupError> {
        let (rho1, rho2) = self.build_pair()?;
        let group = MessGroup::new(rho1, rho2, AdSPoint::j())?;
        let base = match &self.base_point {
            BaseSpec::J => return Ok(group),
            BaseSpec::Matrix { m } => AdSPoint::from_matrix(&Mat2::from_row_major(*m))?,
            BaseSpec::Word { word } => {
                let w = group.alphabet().parse(word)?;
                crate::orbit::orbit_point(&group.evaluate(&w), &AdSPoint::j())
            }
        };
        group.with_base(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        assert!(ExperimentConfig::from_json(r#"{"seed": 3}"#).is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"seed": 3, "sed": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"seed": 3, "group": {"kind": "genus2", "lamda": 2}}"#).is_err());
    }

    #[test]
    fn grids_must_increase() {
        assert!(ExperimentConfig::from_json(r#"{"seed": 1, "eps_grid": [0.1, 0.01]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"seed": 1, "eps_grid": []}"#).is_err());
    }

    #[test]
    fn twisted_group_parses() {
        let cfg = ExperimentConfig::from_json(
            r#"{"seed": 1, "group": {"kind": "genus2", "second": {"twist": {"kind": "dehn", "t": 2}}}}"#,
        )
        .unwrap();
        let g = cfg.build_group().unwrap();
        assert!(!g.is_fuchsian());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::with_seed(1);
        assert_eq!(a.hash(), ExperimentConfig::with_seed(1).hash());
        assert_ne!(a.hash(), ExperimentConfig::with_seed(2).hash());
        assert_eq!(a.hash().len(), 64);
        let b = ExperimentConfig { out_dir: Some("elsewhere".into()), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
    }
}
