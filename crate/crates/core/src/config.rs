//! Training configuration files.
//!
//! A config is a flat list of `key = value` lines (TOML syntax, `#`
//! comments). Keys mirror [`TrainConfig`]; learner and critic knobs use
//! dotted keys. Missing keys keep their defaults, unknown keys are rejected.
//!
//! ```toml
//! agent = "hrl"
//! seeds = [1, 2, 3]
//! epochs = 300
//! user_type = "B"
//! error_prob = 0.1
//! learner.lr = 0.001
//! intrinsic.budget = 30
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    let config: TrainConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => unknown_field(e.inner().to_string()).unwrap_or(p),
            p => p,
        };
        Error::config(field, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

/// serde reports unknown keys at the parent path; pull the name out.
fn unknown_field(msg: String) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn to_toml(config: &TrainConfig) -> String {
    toml::to_string(config).expect("train configs are plain data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goals::UserType;
    use crate::trainer::AgentKind;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(parse_config("").unwrap(), TrainConfig::default());
    }

    #[test]
    fn nested_keys() {
        let c = parse_config(
            "# comment\nagent = \"flat\"\nuser_type = \"C\"\nseeds = [4, 5]\nflush_threshold = 0.5\nlearner.hidden = 40\nintrinsic.budget = 12\n",
        )
        .unwrap();
        assert_eq!(c.agent, AgentKind::Flat);
        assert_eq!(c.user_type, UserType::C);
        assert_eq!(c.seeds, vec![4, 5]);
        assert_eq!(c.flush_threshold, Some(0.5));
        assert_eq!(c.learner.hidden, 40);
        assert_eq!(c.intrinsic.budget, 12);
        assert_eq!(c.epochs, 300);
    }

    fn field_of(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("epochs = -3"), "epochs");
        assert_eq!(field_of("epochs = 0"), "epochs");
        assert_eq!(field_of("learner.lr = \"fast\""), "learner.lr");
        assert_eq!(field_of("error_prob = 1.5"), "error_prob");
        assert_eq!(field_of("bogus = 1"), "bogus");
        assert_eq!(field_of("agent = \"oracle\""), "agent");
    }

    #[test]
    fn round_trip() {
        let c = TrainConfig {
            seeds: vec![9],
            flush_threshold: Some(0.25),
            ..TrainConfig::default()
        };
        assert_eq!(parse_config(&to_toml(&c)).unwrap(), c);
    }
}
