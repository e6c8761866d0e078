use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use super::CliError;

/// A documented configuration key with its default, as text.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

/// Keys shared by every experiment, read from `[run]`.
pub const RUN_KEYS: &[Key] = &[Key { name: "seed", default: "1", doc: "seed for every random suite (overridden by --seed)" }];

/// Values of one experiment's `[section]` plus `[run]`, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Config {
    section: &'static str,
    values: BTreeMap<&'static str, String>,
    keys: &'static [Key],
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn load(path: &Path, section: &'static str, keys: &'static [Key]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, section, keys)
    }

    /// Rejects unknown sections and unknown keys, so typos cannot fall back to defaults silently.
    pub fn parse(text: &str, section: &'static str, keys: &'static [Key]) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| bad(format!("config parse error: {e}")))?;
        let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
        for k in RUN_KEYS.iter().chain(keys) {
            values.insert(k.name, k.default.to_string());
        }
        for (sec, props) in ini.iter() {
            let (name, allowed) = match sec {
                None => {
                    if let Some((k, _)) = props.iter().next() {
                        return Err(bad(format!("key `{k}` appears outside any section")));
                    }
                    continue;
                }
                Some("run") => ("run", RUN_KEYS),
                Some(s) if s == section => (section, keys),
                Some(s) if super::EXPERIMENTS.iter().any(|e| e.name == s) => continue,
                Some(s) => return Err(bad(format!("unknown section [{s}]"))),
            };
            for (k, v) in props.iter() {
                let key = allowed
                    .iter()
                    .find(|x| x.name == k)
                    .ok_or_else(|| bad(format!("unknown key `{k}` in [{name}]")))?;
                values.insert(key.name, v.trim().to_string());
            }
        }
        Ok(Self { section, values, keys })
    }

    pub fn section(&self) -> &'static str {
        self.section
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` is not declared for [{}]", self.section))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.raw(key);
        v.parse().map_err(|_| bad(format!("[{}] {key} = `{v}` does not parse", self.section)))
    }

    pub fn text(&self, key: &str) -> String {
        self.raw(key).to_string()
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let v = self.raw(key);
        let items: Vec<T> = v
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad(format!("[{}] {key}: `{s}` does not parse", self.section))))
            .collect::<Result<_, _>>()?;
        if items.is_empty() {
            return Err(bad(format!("[{}] {key} is empty", self.section)));
        }
        Ok(items)
    }

    /// Every resolved key in declaration order, `[run]` first.
    pub fn resolved(&self) -> Vec<(String, String)> {
        RUN_KEYS
            .iter()
            .map(|k| (format!("run.{}", k.name), self.raw(k.name).to_string()))
            .chain(self.keys.iter().map(|k| (format!("{}.{}", self.section, k.name), self.raw(k.name).to_string())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[Key] = &[
        Key { name: "grid", default: "64", doc: "" },
        Key { name: "steps", default: "16,32", doc: "" },
    ];

    #[test]
    fn defaults_and_overrides() {
        let c = Config::parse("[run]\nseed = 7\n[porous]\ngrid = 32\n[kruzhkov]\nm = 2\n", "porous", KEYS).unwrap();
        assert_eq!(c.get::<usize>("grid").unwrap(), 32);
        assert_eq!(c.get::<u64>("seed").unwrap(), 7);
        assert_eq!(c.list::<usize>("steps").unwrap(), vec![16, 32]);
        assert_eq!(c.resolved()[0], ("run.seed".to_string(), "7".to_string()));
    }

    #[test]
    fn rejects_typos() {
        assert!(Config::parse("[porous]\ngird = 3\n", "porous", KEYS).is_err());
        assert!(Config::parse("[nonsense]\n", "porous", KEYS).is_err());
        assert!(Config::parse("grid = 3\n", "porous", KEYS).is_err());
        let c = Config::parse("[porous]\ngrid = x\n", "porous", KEYS).unwrap();
        assert!(c.get::<usize>("grid").is_err());
    }
}
