//! Run configuration: a TOML file with `${VAR}` interpolation, then flag
//! overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use numprobe_core::corpus::SchemaMap;
use numprobe_core::perturb::{PerturbMode, PerturbationType};
use numprobe_core::prompts::PromptRegime;
use numprobe_gateway::ModelConfig;
use numprobe_review::ExportMode;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Raw dataset dump read by `ingest`.
    pub path: Option<PathBuf>,
    pub schema: SchemaMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewConfig {
    pub mode: ExportMode,
    pub addr: String,
    /// Bearer token for the review API; usually `${SOME_VAR}`.
    pub token: Option<String>,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        Self {
            mode: ExportMode::Lenient,
            addr: "127.0.0.1:8080".into(),
            token: None,
            ui_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub ptypes: Vec<PerturbationType>,
    pub modes: Vec<PerturbMode>,
    pub regimes: Vec<PromptRegime>,
    pub review: ReviewConfig,
    /// Overrides every model's own limit when set.
    pub max_in_flight: Option<usize>,
    pub demo_bank: Option<PathBuf>,
    pub models: Vec<ModelConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
            corpus: CorpusConfig::default(),
            ptypes: PerturbationType::ALL.to_vec(),
            modes: vec![PerturbMode::Preserve, PerturbMode::Flip],
            regimes: PromptRegime::ALL.to_vec(),
            review: ReviewConfig::default(),
            max_in_flight: None,
            demo_bank: None,
            models: Vec::new(),
        }
    }
}

/// Replace every `${NAME}` with the variable's value. `$$` is a literal `$`.
pub fn interpolate(s: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        if let Some(t) = tail.strip_prefix('$') {
            out.push('$');
            rest = t;
        } else if let Some(t) = tail.strip_prefix('{') {
            let end = t.find('}').ok_or_else(|| format!("unterminated ${{ in {s:?}"))?;
            let name = &t[..end];
            let val = lookup(name).ok_or_else(|| format!("environment variable {name} is not set"))?;
            out.push_str(&val);
            rest = &t[end + 1..];
        } else {
            out.push('$');
            rest = tail;
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn interpolate_value(v: &mut toml::Value, lookup: &dyn Fn(&str) -> Option<String>) -> Result<(), String> {
    match v {
        toml::Value::String(s) => *s = interpolate(s, lookup)?,
        toml::Value::Array(items) => {
            for item in items {
                interpolate_value(item, lookup)?;
            }
        }
        toml::Value::Table(t) => {
            for (_, item) in t.iter_mut() {
                interpolate_value(item, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let mut v: toml::Value = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        interpolate_value(&mut v, lookup).map_err(CliError::Config)?;
        let names = |field: &str| -> Vec<String> {
            match v.get(field) {
                Some(toml::Value::Array(a)) => a.iter().filter_map(|x| x.as_str().map(str::to_string)).collect(),
                _ => Vec::new(),
            }
        };
        let ptypes = names("ptypes");
        let modes = names("modes");
        let regimes = names("regimes");
        if let toml::Value::Table(t) = &mut v {
            t.remove("ptypes");
            t.remove("modes");
            t.remove("regimes");
        }
        let mut cfg: RunConfig = v.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if !ptypes.is_empty() {
            cfg.ptypes = parse_list(&ptypes.join(","))?;
        }
        if !modes.is_empty() {
            cfg.modes = parse_list(&modes.join(","))?;
        }
        if !regimes.is_empty() {
            cfg.regimes = parse_list(&regimes.join(","))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &|k| std::env::var(k).ok())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Hash of everything that shapes results. Output location and the
    /// review token are left out.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
            if let Some(r) = m.get_mut("review").and_then(|r| r.as_object_mut()) {
                r.remove("token");
                r.remove("addr");
                r.remove("ui_dir");
            }
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        format!("{digest:x}")[..16].to_string()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.ptypes.is_empty() {
            return Err(CliError::Config("no perturbation types selected".into()));
        }
        if self.modes.is_empty() {
            return Err(CliError::Config("no modes selected".into()));
        }
        if self.regimes.is_empty() {
            return Err(CliError::Config("no prompt regimes selected".into()));
        }
        if self.max_in_flight == Some(0) {
            return Err(CliError::Config("max_in_flight must be at least 1".into()));
        }
        let mut labels = std::collections::HashSet::new();
        for m in &self.models {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if !labels.insert(m.label()) {
                return Err(CliError::Config(format!("duplicate model label {}", m.label())));
            }
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Comma-separated list through `FromStr`.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(k: &str) -> Option<String> {
        match k {
            "HOST" => Some("https://api.example.com".into()),
            "TOKEN" => Some("t0k".into()),
            _ => None,
        }
    }

    #[test]
    fn interpolation() {
        assert_eq!(interpolate("${HOST}/v1", &env).unwrap(), "https://api.example.com/v1");
        assert_eq!(interpolate("cost $$5 and $x", &env).unwrap(), "cost $5 and $x");
        assert!(interpolate("${MISSING}", &env).unwrap_err().contains("MISSING"));
        assert!(interpolate("${HOST", &env).is_err());
    }

    #[test]
    fn parses_full_file() {
        let text = r#"
            seed = 7
            output_dir = "runs/a"
            ptypes = ["num", "Mask", "rand-repl"]
            regimes = ["zero-shot", "PAP"]

            [corpus]
            path = "dump.jsonl"
            [corpus.schema]
            claim = "text"
            evidence = "evidence"
            label = "verdict"

            [review]
            mode = "strict"
            token = "${TOKEN}"

            [[models]]
            label = "gpt"
            provider = "openai-compatible"
            model_name = "gpt-4o-mini"
            endpoint = "${HOST}/v1"
            key_env = "OPENAI_API_KEY"
        "#;
        let cfg = RunConfig::parse(text, &env).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(
            cfg.ptypes,
            vec![PerturbationType::Num, PerturbationType::Mask, PerturbationType::RandRepl]
        );
        assert_eq!(cfg.regimes, vec![PromptRegime::ZeroShot, PromptRegime::Pap]);
        assert_eq!(cfg.corpus.schema.claim, "text");
        assert_eq!(cfg.review.mode, ExportMode::Strict);
        assert_eq!(cfg.review.token.as_deref(), Some("t0k"));
        assert_eq!(cfg.models[0].endpoint.as_deref(), Some("https://api.example.com/v1"));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_fields_and_bad_names() {
        assert!(matches!(RunConfig::parse("sede = 1", &env), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("ptypes = [\"bogus\"]", &env), Err(CliError::Config(_))));
        let cfg = RunConfig::parse("[[models]]\nprovider = \"mock-oracle\"\ntemperature = 0.7", &env).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir_and_token() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.review.token = Some("x".into());
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 8;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
