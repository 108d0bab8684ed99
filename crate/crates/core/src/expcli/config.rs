use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{
    Coefficient, ExteriorInput, MgtParams, Model, Nonlinearity, PicardSettings, PolyTerm, Polyhomogeneous,
    PolynomialType, Potential, Profile, TimeGrid,
};
use crate::fracgrid::{FracOp, Grid, RegionSpec};
use crate::inverse::{input_bank, PolyhomogeneousInversion, PotentialInversion, TaylorInversion, WesterveltInversion};
use crate::regularize::default_ladder;

/// The experiment a run executes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    #[default]
    Forward,
    Dn,
    Linearize,
    InvertQ,
    InvertG,
    InvertPoly,
    InvertWestervelt,
    Regularize,
    Identities,
    Sweep,
}

impl Pipeline {
    pub const ALL: [Pipeline; 10] = [
        Pipeline::Forward,
        Pipeline::Dn,
        Pipeline::Linearize,
        Pipeline::InvertQ,
        Pipeline::InvertG,
        Pipeline::InvertPoly,
        Pipeline::InvertWestervelt,
        Pipeline::Regularize,
        Pipeline::Identities,
        Pipeline::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Forward => "forward",
            Pipeline::Dn => "dn",
            Pipeline::Linearize => "linearize",
            Pipeline::InvertQ => "invert-q",
            Pipeline::InvertG => "invert-g",
            Pipeline::InvertPoly => "invert-poly",
            Pipeline::InvertWestervelt => "invert-westervelt",
            Pipeline::Regularize => "regularize",
            Pipeline::Identities => "identities",
            Pipeline::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pipeline `{s}`")))
    }
}

/// Box, interior domain and measurement windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
    pub omega: RegionSpec,
    pub w1: RegionSpec,
    pub w2: RegionSpec,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dim: 1,
            half_width: 2.0,
            n: 32,
            omega: RegionSpec::Interval { lo: vec![-1.0], hi: vec![1.0] },
            w1: RegionSpec::LeftEdge { count: 5 },
            w2: RegionSpec::RightEdge { count: 5 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub final_time: f64,
    pub dt: f64,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec { final_time: 1.0, dt: 1e-3 }
    }
}

/// `q(x, t) = profile(x) · Σ_k time_poly[k] t^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    pub profile: Profile,
    pub time_poly: Vec<f64>,
    pub reversal_invariant: bool,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            profile: Profile::Bump { amplitude: 2.0, center: vec![0.1], radius: 0.8 },
            time_poly: vec![1.0],
            reversal_invariant: true,
        }
    }
}

impl PotentialSpec {
    /// The potential with its amplitude multiplied by `scale`.
    pub fn build(&self, model: &Model, scale: f64) -> Result<Potential> {
        let poly = self.time_poly.iter().map(|c| c * scale).collect();
        let coeff = Coefficient::separable(model.grid(), &self.profile, poly);
        Potential::new(coeff, self.reversal_invariant, model.grid(), model.time())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTermSpec {
    pub profile: Profile,
    pub power: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhomogeneousTermSpec {
    pub profile: Profile,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    Polynomial {
        terms: Vec<PolyTermSpec>,
        #[serde(default)]
        gaussian: Option<u32>,
    },
    Polyhomogeneous {
        terms: Vec<PolyhomogeneousTermSpec>,
    },
    WesterveltBeta {
        profile: Profile,
    },
    WesterveltKappa {
        profile: Profile,
    },
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Polynomial {
            terms: vec![PolyTermSpec {
                profile: Profile::Bump { amplitude: 1.0, center: vec![0.1], radius: 0.8 },
                power: 2,
            }],
            gaussian: None,
        }
    }
}

fn coefficient(grid: &Grid, profile: &Profile) -> Coefficient {
    match profile {
        Profile::Constant { value } => Coefficient::Constant(*value),
        other => Coefficient::separable(grid, other, vec![1.0]),
    }
}

impl NonlinearitySpec {
    pub fn build(&self, grid: &Grid) -> Result<Nonlinearity> {
        Ok(match self {
            NonlinearitySpec::Zero => Nonlinearity::Zero,
            NonlinearitySpec::Polynomial { terms, gaussian } => Nonlinearity::Polynomial(PolynomialType::new(
                terms.iter().map(|t| PolyTerm { coeff: coefficient(grid, &t.profile), power: t.power }).collect(),
                *gaussian,
            )?),
            NonlinearitySpec::Polyhomogeneous { terms } => Nonlinearity::Polyhomogeneous(Polyhomogeneous::new(
                terms.iter().map(|t| (coefficient(grid, &t.profile), t.r)).collect(),
            )?),
            NonlinearitySpec::WesterveltBeta { profile } => Nonlinearity::WesterveltBeta(coefficient(grid, profile)),
            NonlinearitySpec::WesterveltKappa { profile } => Nonlinearity::WesterveltKappa(coefficient(grid, profile)),
        })
    }

    pub fn exponents(&self) -> Vec<f64> {
        match self {
            NonlinearitySpec::Polyhomogeneous { terms } => terms.iter().map(|t| t.r).collect(),
            _ => Vec::new(),
        }
    }
}

/// Input bank on W₁ and test bank on W₂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankSpec {
    pub inputs: usize,
    pub tests: usize,
    pub amplitude: f64,
}

impl Default for BankSpec {
    fn default() -> Self {
        BankSpec { inputs: 8, tests: 8, amplitude: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizeSpec {
    /// Amplitude of every direction of the linearization bank.
    pub amplitude: f64,
    /// Base point `ε`, one entry per direction.
    pub eps: Vec<f64>,
    pub max_order: usize,
    /// Largest η of the ladder `eta_scale · 2^{-k}`.
    pub eta_scale: f64,
    /// Step of the DN-derivative cross-check.
    pub dn_eta: f64,
}

impl Default for LinearizeSpec {
    fn default() -> Self {
        LinearizeSpec { amplitude: 100.0, eps: vec![1.0, 0.5], max_order: 2, eta_scale: 50.0, dn_eta: 1e-2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionSpec {
    pub potential: PotentialInversion,
    pub taylor: TaylorInversion,
    pub westervelt: WesterveltInversion,
    pub polyhomogeneous: PolyhomogeneousInversion,
    /// Relative standard deviation of the measurement noise; needs `seed` when positive.
    pub noise_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizeSpec {
    pub ladder: Vec<f64>,
    /// Appends `ε = 0` so the table ends with the reference row.
    pub include_reference: bool,
}

impl Default for RegularizeSpec {
    fn default() -> Self {
        RegularizeSpec { ladder: default_ladder(), include_reference: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Strictly decreasing steps, each an integer multiple of the next.
    pub dts: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { dts: vec![4e-3, 2e-3, 1e-3, 5e-4] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitySpec {
    /// Scale of the second potential in the integral identity.
    pub second_potential_scale: f64,
    /// End of the `sin⁴` pulses used as exterior data.
    pub pulse_end: f64,
    /// Coarser steps `dt · 2^k`, `k = 1..=refinements`, for the observed order of the integral identity.
    pub refinements: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        IdentitySpec { second_potential_scale: 0.5, pulse_end: 0.3, refinements: 2 }
    }
}

/// Everything a run needs; every field has a default so a config file may be partial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub grid: GridSpec,
    pub s: f64,
    pub params: MgtParams,
    pub time: TimeSpec,
    pub potential: PotentialSpec,
    pub nonlinearity: NonlinearitySpec,
    pub bank: BankSpec,
    pub solver: PicardSettings,
    pub linearize: LinearizeSpec,
    pub inversion: InversionSpec,
    pub regularize: RegularizeSpec,
    pub sweep: SweepSpec,
    pub identities: IdentitySpec,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pipeline: Pipeline::Forward,
            grid: GridSpec::default(),
            s: 0.75,
            params: MgtParams::default(),
            time: TimeSpec::default(),
            potential: PotentialSpec::default(),
            nonlinearity: NonlinearitySpec::default(),
            bank: BankSpec::default(),
            solver: PicardSettings::with_tol(1e-13),
            linearize: LinearizeSpec::default(),
            inversion: InversionSpec::default(),
            regularize: RegularizeSpec::default(),
            sweep: SweepSpec::default(),
            identities: IdentitySpec::default(),
            seed: None,
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

fn strictly_decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.windows(2).any(|w| !(w[1] < w[0])) || v.iter().any(|&x| !(x > 0.0)) {
        return Err(config_err(format!("{name} must be positive and strictly decreasing, got {v:?}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Checks ranges, index sets and the seed contract without solving anything.
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(config_err(format!("s must be finite and non-negative, got {}", self.s)));
        }
        positive("time.final_time", self.time.final_time)?;
        positive("time.dt", self.time.dt)?;
        if self.time.dt > self.time.final_time {
            return Err(config_err("time.dt exceeds time.final_time"));
        }
        self.params.validate().map_err(|e| config_err(e.to_string()))?;
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == 0 {
            return Err(config_err("solver.max_iter must be at least 1"));
        }
        self.grid()?;
        if self.bank.inputs == 0 || self.bank.tests == 0 {
            return Err(config_err("bank.inputs and bank.tests must be at least 1"));
        }
        positive("bank.amplitude", self.bank.amplitude)?;
        let noise = self.inversion.noise_level;
        if !(noise >= 0.0) || !noise.is_finite() {
            return Err(config_err(format!("inversion.noise_level must be non-negative, got {noise}")));
        }
        if noise > 0.0 && self.seed.is_none() {
            return Err(config_err("a seed is required when inversion.noise_level > 0"));
        }
        let lin = &self.linearize;
        positive("linearize.amplitude", lin.amplitude)?;
        positive("linearize.eta_scale", lin.eta_scale)?;
        positive("linearize.dn_eta", lin.dn_eta)?;
        if lin.eps.is_empty() || !(1..=4).contains(&lin.max_order) {
            return Err(config_err("linearize needs at least one direction and 1 <= max_order <= 4"));
        }
        strictly_decreasing("regularize.ladder", &self.regularize.ladder)?;
        strictly_decreasing("sweep.dts", &self.sweep.dts)?;
        if self.sweep.dts.len() < 2 {
            return Err(config_err("sweep.dts needs at least two steps"));
        }
        for w in self.sweep.dts.windows(2) {
            let ratio = w[0] / w[1];
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return Err(config_err(format!("sweep step {} is not a multiple of {}", w[0], w[1])));
            }
        }
        positive("identities.pulse_end", self.identities.pulse_end)?;
        if !self.identities.second_potential_scale.is_finite() {
            return Err(config_err("identities.second_potential_scale must be finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.dim, g.half_width, g.n, &g.omega, &g.w1, &g.w2)
    }

    pub fn model(&self) -> Result<Model> {
        self.model_with_dt(self.time.dt)
    }

    pub fn model_with_dt(&self, dt: f64) -> Result<Model> {
        let grid = self.grid()?;
        let op = FracOp::new(&grid, self.s)?;
        Model::new(grid, op, self.params, TimeGrid::new(self.time.final_time, dt)?)
    }

    pub fn potential(&self, model: &Model) -> Result<Potential> {
        self.potential.build(model, 1.0)
    }

    pub fn nonlinearity(&self, model: &Model) -> Result<Nonlinearity> {
        self.nonlinearity.build(model.grid())
    }

    pub fn inputs(&self, model: &Model) -> Vec<ExteriorInput> {
        let g = model.grid();
        input_bank(g, g.w1(), self.bank.inputs, model.time().final_time(), self.bank.amplitude)
    }

    pub fn tests(&self, model: &Model) -> Vec<ExteriorInput> {
        let g = model.grid();
        input_bank(g, g.w2(), self.bank.tests, model.time().final_time(), self.bank.amplitude)
    }

    /// The noise seed; zero when noise is off.
    pub fn noise_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips_and_validates() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"pipeline": "invert-q", "s": 0.5, "time": {"dt": 1e-3}}"#).unwrap();
        assert_eq!(cfg.pipeline, Pipeline::InvertQ);
        assert_eq!(cfg.time.final_time, 1.0);
        assert_eq!(cfg.bank, BankSpec::default());
    }

    #[test]
    fn rejects_unknown_fields_and_missing_seed() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
        let noisy = r#"{"inversion": {"noise_level": 0.01}}"#;
        assert!(matches!(ExperimentConfig::from_json(noisy), Err(Error::Config(_))));
        let seeded = r#"{"inversion": {"noise_level": 0.01}, "seed": 3}"#;
        assert!(ExperimentConfig::from_json(seeded).is_ok());
    }

    #[test]
    fn rejects_inconsistent_index_sets() {
        let overlap = r#"{"grid": {"w1": {"kind": "interval", "lo": [-0.5], "hi": [0.5]}}}"#;
        let err = ExperimentConfig::from_json(overlap).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
        let sweep = r#"{"sweep": {"dts": [3e-3, 2e-3]}}"#;
        assert!(ExperimentConfig::from_json(sweep).is_err());
    }

    #[test]
    fn pipeline_names_roundtrip() {
        for p in Pipeline::ALL {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!("nope".parse::<Pipeline>().is_err());
    }
}
