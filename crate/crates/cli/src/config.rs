//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use qdioph::asymptotics::ExperimentPlan;
use qdioph::{FieldSpec, IdealRep, ProblemSpec, PsiSpec, QuadInt};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub plan: Option<PlanConfig>,
    #[serde(default)]
    pub outputs: Option<OutputsConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(rename = "D")]
    pub d: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub m: usize,
    pub n: usize,
    pub psi: PsiSpec,
    /// Coordinates `[a, b]` of `a + bω`, one pair per entry of `(v_p, v_q)`.
    pub v: Vec<[i64; 2]>,
    pub ideal: IdealConfig,
    #[serde(rename = "T", default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub allow_low_dimension: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealConfig {
    pub generators: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    pub theta_count: usize,
    #[serde(default = "default_box")]
    pub theta_box: f64,
    pub seed: u64,
}

fn default_box() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub svg_path: Option<PathBuf>,
}

fn quad(p: [i64; 2]) -> QuadInt {
    QuadInt::new(p[0], p[1])
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn field(&self) -> Result<FieldSpec, CliError> {
        Ok(FieldSpec::new(self.field.d)?)
    }

    pub fn ideal(&self) -> Result<IdealRep, CliError> {
        let field = self.field()?;
        let gens: Vec<QuadInt> = self.problem.ideal.generators.iter().copied().map(quad).collect();
        Ok(IdealRep::from_generators(&field, &gens)?)
    }

    /// Problem at `t`, or at the configured `T` when `t` is `None`.
    pub fn problem(&self, t: Option<f64>) -> Result<ProblemSpec, CliError> {
        let p = &self.problem;
        let t = t
            .or(p.t)
            .ok_or_else(|| CliError::Config("problem.T is required for this command".into()))?;
        let spec = ProblemSpec {
            field: self.field()?,
            m: p.m,
            n: p.n,
            psi: p.psi.clone(),
            v: p.v.iter().copied().map(quad).collect(),
            ideal: self.ideal()?,
            t,
            allow_low_dimension: p.allow_low_dimension,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn plan(&self) -> Result<ExperimentPlan, CliError> {
        let plan = self.plan.as_ref().ok_or_else(|| CliError::Config("plan section is required".into()))?;
        let first = plan.t_grid.first().copied().ok_or_else(|| CliError::Config("T grid is empty".into()))?;
        let out = ExperimentPlan {
            spec: self.problem(Some(first))?,
            t_grid: plan.t_grid.clone(),
            theta_count: plan.theta_count,
            theta_box: plan.theta_box,
            seed: plan.seed,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn csv_path(&self) -> Option<&Path> {
        self.outputs.as_ref().and_then(|o| o.csv_path.as_deref())
    }

    pub fn svg_path(&self) -> Option<&Path> {
        self.outputs.as_ref().and_then(|o| o.svg_path.as_deref())
    }
}
