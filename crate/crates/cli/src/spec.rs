use std::path::{Path, PathBuf};
use std::str::FromStr;

use geofuse::vector::TagSelector;
use geofuse::NormRule;

use crate::config::Config;
use crate::{CliError, CliResult};

/// Known keys per config section.
pub const SECTIONS: &[(&str, &[&str])] = &[
    (
        "rasterize",
        &["vector", "classmap", "like", "width", "height", "origin_x", "origin_y", "gsd", "select", "radius", "out"],
    ),
    ("rgb", &["classes", "classmap", "sigma", "out"]),
    ("prior", &["coarse", "n_coarse", "n_fine", "cooccurrence", "pair", "epsilon", "sigma", "boost", "out"]),
    ("stack", &["input", "prior", "extra", "out"]),
    ("tokens", &["image", "patch", "dim", "registers", "lat", "lon", "projection", "out"]),
    ("subset", &["n", "fraction", "out"]),
];

/// A list value with the directory its relative paths resolve against and
/// where it came from, for messages.
#[derive(Debug, Clone)]
pub struct Item {
    pub value: String,
    pub base: PathBuf,
    pub origin: String,
}

impl Item {
    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

/// Flag-over-config lookup for one `[section]`.
pub struct Section<'a> {
    pub cfg: Option<&'a Config>,
    pub name: &'static str,
}

impl<'a> Section<'a> {
    pub fn new(cfg: Option<&'a Config>, name: &'static str) -> Self {
        Self { cfg, name }
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| {
            let cfg = self.cfg?;
            cfg.get(self.name, key).map(|e| cfg.resolve(&e.value))
        })
    }

    pub fn value<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        let Some(cfg) = self.cfg else { return Ok(None) };
        match cfg.get(self.name, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                CliError::Invalid(format!("{}: [{}] {key}: cannot parse '{}'", cfg.locate(e), self.name, e.value))
            }),
        }
    }

    pub fn list(&self, flag: Vec<String>, key: &str) -> Vec<Item> {
        if !flag.is_empty() {
            return flag
                .into_iter()
                .enumerate()
                .map(|(i, value)| Item { value, base: PathBuf::new(), origin: format!("--{key} #{}", i + 1) })
                .collect();
        }
        let Some(cfg) = self.cfg else { return Vec::new() };
        cfg.all(self.name, key)
            .into_iter()
            .map(|e| Item { value: e.value.clone(), base: cfg.base.clone(), origin: cfg.locate(e) })
            .collect()
    }

    pub fn require<T>(&self, v: Option<T>, key: &str) -> CliResult<T> {
        v.ok_or_else(|| {
            let flag = key.replace('_', "-");
            CliError::Usage(format!("missing --{flag} (or `{key}` in [{}])", self.name))
        })
    }
}

/// Parsed `NAME=PATH[:RULE]`.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pub name: String,
    pub path: PathBuf,
    pub rule: NormRule,
}

const RULES: &[&str] = &["byte255", "identity", "minmax", "categorical_rgb"];

/// The rule suffix is split off only when it names a known rule, so paths
/// containing `:` still work. The default rule is `identity`.
pub fn parse_input(item: &Item) -> Result<InputSpec, String> {
    let (name, rest) = item
        .value
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=PATH[:RULE], got '{}'", item.value))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty layer name in '{}'", item.value));
    }
    let rest = rest.trim();
    let (path, rule) = match rest.rsplit_once(':') {
        Some((p, r)) if RULES.contains(&r) => (p, r.parse::<NormRule>().map_err(|e| e.to_string())?),
        _ => (rest, NormRule::Identity),
    };
    if path.is_empty() {
        return Err(format!("empty path for layer '{name}'"));
    }
    Ok(InputSpec { name: name.to_string(), path: item.resolve(path), rule })
}

#[derive(Debug, Clone)]
pub enum BoostSource {
    Mask(PathBuf),
    Vector { path: PathBuf, select: TagSelector, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct BoostSpec {
    pub name: String,
    pub class: usize,
    pub weight: f64,
    pub source: BoostSource,
}

/// Whitespace-separated `key=value` tokens; see `PriorArgs::boost`.
pub fn parse_boost(item: &Item) -> Result<BoostSpec, String> {
    let (mut name, mut class, mut weight) = (None, None, geofuse::prior::DEFAULT_BOOST_WEIGHT);
    let (mut mask, mut vector, mut select, mut radius) = (None, None, None, 0.0);
    for tok in item.value.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("expected key=value, got '{tok}'"))?;
        match k {
            "name" => name = Some(v.to_string()),
            "class" => class = Some(v.parse::<usize>().map_err(|_| format!("bad class '{v}'"))?),
            "weight" => weight = v.parse::<f64>().map_err(|_| format!("bad weight '{v}'"))?,
            "mask" => mask = Some(item.resolve(v)),
            "vector" => vector = Some(item.resolve(v)),
            "select" => select = Some(v.parse::<TagSelector>().map_err(|_| format!("bad selector '{v}'"))?),
            "radius" => radius = v.parse::<f64>().map_err(|_| format!("bad radius '{v}'"))?,
            other => return Err(format!("unknown boost field '{other}'")),
        }
    }
    let name = name.ok_or("boost needs name=")?;
    let class = class.ok_or_else(|| format!("boost '{name}' needs class="))?;
    if !(weight >= 0.0 && weight.is_finite()) {
        return Err(format!("boost '{name}' weight {weight} must be finite and >= 0"));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(format!("boost '{name}' radius {radius} must be finite and >= 0"));
    }
    let source = match (mask, vector, select) {
        (Some(m), None, None) => BoostSource::Mask(m),
        (None, Some(path), Some(select)) => BoostSource::Vector { path, select, radius },
        (None, Some(_), None) => return Err(format!("boost '{name}' with vector= needs select=")),
        _ => return Err(format!("boost '{name}' needs exactly one of mask= or vector=")),
    };
    Ok(BoostSpec { name, class, weight, source })
}

/// `COARSE,FINE` grid pair.
pub fn parse_pair(item: &Item) -> Result<(PathBuf, PathBuf), String> {
    let (a, b) = item
        .value
        .split_once(',')
        .ok_or_else(|| format!("expected COARSE,FINE, got '{}'", item.value))?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() {
        return Err(format!("expected COARSE,FINE, got '{}'", item.value));
    }
    Ok((item.resolve(a), item.resolve(b)))
}

pub fn item_error(item: &Item, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{}: {msg}", item.origin))
}
