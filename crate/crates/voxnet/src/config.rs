//! TOML documents for architecture, training and phantom parameters.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use voxnet_core::model::{ArchConfig, Architecture};
use voxnet_core::phantom::PhantomParams;
use voxnet_core::train::TrainConfig;

use crate::error::{Error, Result};
use crate::fsutil;

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Usage(format!("cannot serialize configuration: {e}")))
}

pub fn from_toml<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fsutil::read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "not UTF-8"))?;
    from_toml(&text, path)
}

pub fn save_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fsutil::write_atomic(path, to_toml(value)?.as_bytes())
}

/// Where an architecture came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ArchSource {
    /// A named default, adapted to whatever extents the data has.
    Builtin(ArchConfig),
    /// A file, used exactly as written.
    File(ArchConfig),
}

impl ArchSource {
    pub fn config(&self) -> &ArchConfig {
        match self {
            ArchSource::Builtin(c) | ArchSource::File(c) => c,
        }
    }

    /// The configuration for inputs of spatial size `extents`.
    pub fn for_extents(&self, extents: Option<[usize; 3]>) -> ArchConfig {
        match (self, extents) {
            (ArchSource::Builtin(c), Some([d, h, w])) => c.clone().with_input([c.input_shape[0], d, h, w]),
            _ => self.config().clone(),
        }
    }
}

/// Names accepted in place of an architecture file.
pub fn builtin_names() -> Vec<String> {
    Architecture::ALL
        .iter()
        .flat_map(|a| [a.id().to_string(), format!("{}-toy", a.id())])
        .collect()
}

/// Resolves `alexnet3d`, `alexnet3d-toy` and friends, else reads a TOML file.
pub fn load_arch(spec: &str) -> Result<ArchSource> {
    let (name, toy) = match spec.strip_suffix("-toy") {
        Some(n) => (n, true),
        None => (spec, false),
    };
    if let Ok(arch) = name.parse::<Architecture>() {
        let config = if toy { ArchConfig::toy(arch) } else { ArchConfig::default_for(arch) };
        return Ok(ArchSource::Builtin(config));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Usage(format!(
            "`{spec}` is neither an architecture file nor one of {}",
            builtin_names().join(", ")
        )));
    }
    let config: ArchConfig = load_toml(path)?;
    config.validate()?;
    Ok(ArchSource::File(config))
}

pub fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    let config = match path {
        Some(p) => load_toml(p)?,
        None => TrainConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_phantom_params(path: &Path) -> Result<PhantomParams> {
    let params: PhantomParams = load_toml(path)?;
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configs_round_trip_through_toml() {
        for arch in Architecture::ALL {
            for c in [ArchConfig::default_for(arch), ArchConfig::toy(arch)] {
                let back: ArchConfig = from_toml(&to_toml(&c).unwrap(), Path::new("x")).unwrap();
                assert_eq!(back, c);
            }
        }
        let t = TrainConfig::default();
        assert_eq!(from_toml::<TrainConfig>(&to_toml(&t).unwrap(), Path::new("x")).unwrap(), t);
        let p = PhantomParams::default();
        assert_eq!(from_toml::<PhantomParams>(&to_toml(&p).unwrap(), Path::new("x")).unwrap(), p);
    }

    #[test]
    fn partial_train_config_uses_defaults() {
        let t: TrainConfig = from_toml("epochs = 3\nlr0 = 0.001\n", Path::new("x")).unwrap();
        assert_eq!(t.epochs, 3);
        assert_eq!(t.batch_size, 32);
        assert!(from_toml::<TrainConfig>("epoch = 3\n", Path::new("x")).is_err());
    }

    #[test]
    fn builtin_names_resolve() {
        for name in builtin_names() {
            assert!(matches!(load_arch(&name).unwrap(), ArchSource::Builtin(_)));
        }
        assert!(matches!(load_arch("no-such-net"), Err(Error::Usage(_))));
    }
}
