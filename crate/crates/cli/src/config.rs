//! Pipeline config: `[section]` headers and `key = value` lines.
//!
//! Keys may repeat; single-valued lookups take the last occurrence, list
//! lookups return all of them in order. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub path: PathBuf,
    pub base: PathBuf,
    pub sections: Vec<Section>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            let err = |m: &str| CliError::Invalid(format!("{}:{line}: {m}", path.display()));
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header"))?.trim();
                if name.is_empty() {
                    return Err(err("empty section name"));
                }
                sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(err("empty key"));
            }
            let section = sections.last_mut().ok_or_else(|| err("entry outside of any [section]"))?;
            section.entries.push(Entry { key: key.to_string(), value: v.trim().to_string(), line });
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { path: path.to_path_buf(), base, sections })
    }

    /// Entries for `key` across every `[section]` block with that name.
    pub fn all<'a>(&'a self, section: &str, key: &str) -> Vec<&'a Entry> {
        self.sections
            .iter()
            .filter(|s| s.name == section)
            .flat_map(|s| s.entries.iter())
            .filter(|e| e.key == key)
            .collect()
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.all(section, key).pop()
    }

    pub fn resolve(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn locate(&self, e: &Entry) -> String {
        format!("{}:{}", self.path.display(), e.line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_last_wins() {
        let text = "# c\n[prior]\nsigma = 1\nboost = a\n\n[prior]\nsigma = 2\nboost = b\n";
        let c = Config::parse(text, Path::new("/tmp/x/cfg.txt")).unwrap();
        assert_eq!(c.get("prior", "sigma").unwrap().value, "2");
        assert_eq!(c.get("prior", "sigma").unwrap().line, 7);
        let boosts: Vec<&str> = c.all("prior", "boost").iter().map(|e| e.value.as_str()).collect();
        assert_eq!(boosts, ["a", "b"]);
        assert_eq!(c.resolve("m.asc"), PathBuf::from("/tmp/x/m.asc"));
        assert_eq!(c.resolve("/abs/m.asc"), PathBuf::from("/abs/m.asc"));
    }

    #[test]
    fn errors_carry_line() {
        let e = Config::parse("[a]\nnot a pair\n", Path::new("cfg")).unwrap_err();
        assert!(e.to_string().contains("cfg:2"));
        let e = Config::parse("k = v\n", Path::new("cfg")).unwrap_err();
        assert!(e.to_string().contains("cfg:1"));
    }
}
