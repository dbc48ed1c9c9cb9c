//! Experiment plans: which scenes, victims and attacks to run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lidarsec_core::attack::AttackKind;
use lidarsec_core::scene::{builtin_scene_suite, load_scene, Scene};
use lidarsec_core::tracking::AvCase;
use lidarsec_core::Config;
use serde::Deserialize;

use crate::HarnessError;

/// One column of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Baseline,
    /// Forwards every sweep unmodified through the same wire path as an
    /// attack. Its increments must all be zero.
    Passthrough,
    Attack(AttackKind),
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Passthrough => "passthrough",
            Condition::Attack(k) => k.name(),
        }
    }

    pub fn attack(self) -> Option<AttackKind> {
        match self {
            Condition::Attack(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Condition::Baseline),
            "passthrough" => Ok(Condition::Passthrough),
            _ => s.parse().map(Condition::Attack),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenes: Vec<Scene>,
    pub avs: Vec<AvCase>,
    /// Conditions compared against the baseline. The baseline itself is
    /// always run and never listed here.
    pub attacks: Vec<Condition>,
    /// Mixed into every scene seed when set; `None` keeps the scene seeds.
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub config: Config,
}

impl ExperimentPlan {
    /// The full matrix on the built-in suite.
    pub fn full(output: impl Into<PathBuf>) -> Self {
        Self {
            scenes: builtin_scene_suite(),
            avs: AvCase::ALL.to_vec(),
            attacks: AttackKind::ALL.into_iter().map(Condition::Attack).collect(),
            seed: None,
            output: output.into(),
            config: Config::default(),
        }
    }

    /// Baseline first, then the listed conditions without duplicates.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut out = vec![Condition::Baseline];
        for &c in &self.attacks {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Scenes with the plan seed applied.
    pub fn seeded_scenes(&self) -> Vec<Scene> {
        let mut scenes = self.scenes.clone();
        if let Some(s) = self.seed {
            for sc in &mut scenes {
                sc.seed ^= s.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            }
        }
        scenes
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Plan(m));
        if self.scenes.is_empty() {
            return bad("plan has no scenes".into());
        }
        if self.avs.is_empty() {
            return bad("plan has no AV cases".into());
        }
        let mut names: Vec<&str> = self.scenes.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("scene name {:?} appears twice", w[0]));
        }
        for s in &self.scenes {
            if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name.starts_with('.') {
                return bad(format!(
                    "scene name {:?} cannot be used as a directory",
                    s.name
                ));
            }
        }
        self.config.validate()?;
        Ok(())
    }

    /// Read a plan file. Relative paths inside it resolve against the
    /// plan's directory; `output` overrides the file's output directory.
    pub fn load(path: &Path, output: Option<PathBuf>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::file(path, e))?;
        let file: PlanFile = toml::from_str(&text)
            .map_err(|e| HarnessError::Plan(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.resolve(base, output)
    }
}

/// On-disk form of a plan.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    /// `"builtin"`, `"builtin:<name>"` or a scene file path.
    #[serde(default = "default_scenes")]
    pub scenes: Vec<String>,
    #[serde(default = "default_avs")]
    pub avs: Vec<u8>,
    #[serde(default = "default_attacks")]
    pub attacks: Vec<String>,
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Base configuration file; the inline `config` table is applied on top.
    pub config_file: Option<PathBuf>,
    #[serde(default)]
    pub config: toml::Table,
}

fn default_scenes() -> Vec<String> {
    vec!["builtin".into()]
}

fn default_avs() -> Vec<u8> {
    vec![1, 2, 3, 4]
}

fn default_attacks() -> Vec<String> {
    AttackKind::ALL
        .iter()
        .map(|k| k.name().to_string())
        .collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Recursive table merge; values in `over` win.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl PlanFile {
    pub fn resolve(
        self,
        base: &Path,
        output: Option<PathBuf>,
    ) -> Result<ExperimentPlan, HarnessError> {
        let mut table = match &self.config_file {
            Some(p) => {
                let p = base.join(p);
                let text = std::fs::read_to_string(&p).map_err(|e| HarnessError::file(&p, e))?;
                toml::from_str(&text)
                    .map_err(|e| HarnessError::Plan(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        merge(&mut table, self.config);
        let config = Config::from_toml(&toml::to_string(&table).expect("tables serialize"), base)?;

        let builtin = builtin_scene_suite();
        let mut scenes = Vec::new();
        for s in &self.scenes {
            if s == "builtin" {
                scenes.extend(builtin.iter().cloned());
            } else if let Some(name) = s.strip_prefix("builtin:") {
                let sc = builtin.iter().find(|b| b.name == name).ok_or_else(|| {
                    HarnessError::Plan(format!("no built-in scene named {name:?}"))
                })?;
                scenes.push(sc.clone());
            } else {
                let p = base.join(s);
                if !p.is_file() {
                    return Err(HarnessError::MissingScene(p));
                }
                scenes.push(load_scene(&p)?);
            }
        }

        let avs = self
            .avs
            .iter()
            .map(|&n| match n {
                1..=4 => Ok(AvCase::ALL[n as usize - 1]),
                _ => Err(HarnessError::Plan(format!(
                    "AV case {n} is not one of 1, 2, 3, 4"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let attacks = self
            .attacks
            .iter()
            .map(|a| a.parse::<Condition>().map_err(HarnessError::Plan))
            .filter(|c| !matches!(c, Ok(Condition::Baseline)))
            .collect::<Result<Vec<_>, _>>()?;

        let plan = ExperimentPlan {
            scenes,
            avs,
            attacks,
            seed: self.seed,
            output: output.unwrap_or_else(|| base.join(&self.output)),
            config,
        };
        plan.validate()?;
        Ok(plan)
    }
}
