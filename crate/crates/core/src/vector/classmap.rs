use std::collections::BTreeMap;

use super::{Feature, TagSelector};
use crate::{Error, Result};

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEntry {
    pub selector: TagSelector,
    pub class_id: u32,
    pub color: Rgb,
    /// Burn radius for points and lines, in world units.
    pub buffer: f64,
}

/// Ordered tag -> class -> color mapping. Later entries paint over earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    entries: Vec<ClassEntry>,
    background_class: u32,
    background_color: Rgb,
}

impl ClassMap {
    /// Validates that every class has one color and no two classes share a color.
    pub fn new(entries: Vec<ClassEntry>, background_class: u32, background_color: Rgb) -> Result<Self> {
        let mut palette: BTreeMap<u32, Rgb> = BTreeMap::new();
        palette.insert(background_class, background_color);
        for e in &entries {
            if !(e.buffer >= 0.0 && e.buffer.is_finite()) {
                return Err(Error::param(format!(
                    "buffer for class {} must be finite and >= 0",
                    e.class_id
                )));
            }
            match palette.get(&e.class_id) {
                Some(c) if *c != e.color => {
                    return Err(Error::param(format!(
                        "class {} has two colors {} and {}",
                        e.class_id,
                        hex(*c),
                        hex(e.color)
                    )))
                }
                _ => {
                    palette.insert(e.class_id, e.color);
                }
            }
        }
        let mut seen: BTreeMap<Rgb, u32> = BTreeMap::new();
        for (&class, &color) in &palette {
            if let Some(other) = seen.insert(color, class) {
                return Err(Error::param(format!(
                    "classes {other} and {class} share color {}",
                    hex(color)
                )));
            }
        }
        Ok(Self {
            entries,
            background_class,
            background_color,
        })
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn background_class(&self) -> u32 {
        self.background_class
    }

    pub fn color_of(&self, class: u32) -> Option<Rgb> {
        if class == self.background_class {
            return Some(self.background_color);
        }
        self.entries
            .iter()
            .find(|e| e.class_id == class)
            .map(|e| e.color)
    }

    pub fn class_of_color(&self, color: Rgb) -> Option<u32> {
        if color == self.background_color {
            return Some(self.background_class);
        }
        self.entries
            .iter()
            .find(|e| e.color == color)
            .map(|e| e.class_id)
    }

    /// Whether any entry's selector matches the feature.
    pub fn covers(&self, feature: &Feature) -> bool {
        self.entries.iter().any(|e| e.selector.matches(feature))
    }

    /// Parses the line-oriented text form:
    ///
    /// ```text
    /// # comment
    /// background class=0 color=#000000
    /// highway=* class=1 color=#FF0000 buffer=10
    /// ```
    ///
    /// The background line is optional (class 0, black).
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut background: Option<(u32, Rgb)> = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |m: String| Error::Parse { line: lineno, message: m };
            let mut toks = line.split_whitespace();
            let head = toks.next().expect("non-empty line");
            let mut class = None;
            let mut color = None;
            let mut buffer = 0.0;
            for tok in toks {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| perr(format!("expected key=value, got '{tok}'")))?;
                match k {
                    "class" => {
                        class = Some(v.parse::<u32>().map_err(|_| perr(format!("bad class id '{v}'")))?)
                    }
                    "color" => color = Some(parse_hex(v).ok_or_else(|| perr(format!("bad color '{v}'")))?),
                    "buffer" => {
                        buffer = v
                            .parse::<f64>()
                            .ok()
                            .filter(|b| *b >= 0.0 && b.is_finite())
                            .ok_or_else(|| perr(format!("bad buffer '{v}'")))?
                    }
                    other => return Err(perr(format!("unknown field '{other}'"))),
                }
            }
            let class = class.ok_or_else(|| perr("missing class=".into()))?;
            let color = color.ok_or_else(|| perr("missing color=".into()))?;
            if head == "background" {
                if background.replace((class, color)).is_some() {
                    return Err(perr("duplicate background line".into()));
                }
                continue;
            }
            let selector: TagSelector = head.parse().map_err(|_| perr(format!("bad tag selector '{head}'")))?;
            entries.push(ClassEntry {
                selector,
                class_id: class,
                color,
                buffer,
            });
        }
        let (bg_class, bg_color) = background.unwrap_or((0, [0, 0, 0]));
        Self::new(entries, bg_class, bg_color)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "background class={} color={}\n",
            self.background_class,
            hex(self.background_color)
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{}={} class={} color={} buffer={}\n",
                e.selector.key,
                e.selector.pattern,
                e.class_id,
                hex(e.color),
                e.buffer
            ));
        }
        out
    }
}

pub fn hex(c: Rgb) -> String {
    format!("#{:02X}{:02X}{:02X}", c[0], c[1], c[2])
}

fn parse_hex(s: &str) -> Option<Rgb> {
    let h = s.strip_prefix('#')?;
    if h.len() != 6 || !h.is_ascii() {
        return None;
    }
    let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
    Some([byte(0)?, byte(2)?, byte(4)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# roads and water
background class=0 color=#000000
highway=* class=1 color=#FF0000 buffer=10
waterway=river class=2 color=#0000ff buffer=5
natural=water class=2 color=#0000FF
";

    #[test]
    fn parses_and_round_trips() {
        let cm = ClassMap::parse(SAMPLE).unwrap();
        assert_eq!(cm.entries().len(), 3);
        assert_eq!(cm.entries()[0].buffer, 10.0);
        assert_eq!(cm.entries()[2].buffer, 0.0);
        assert_eq!(cm.color_of(2), Some([0, 0, 255]));
        assert_eq!(cm.class_of_color([255, 0, 0]), Some(1));
        assert_eq!(ClassMap::parse(&cm.to_text()).unwrap(), cm);
    }

    #[test]
    fn rejects_inconsistent_palettes() {
        assert!(ClassMap::parse("a=b class=1 color=#FF0000\nc=d class=1 color=#00FF00\n").is_err());
        assert!(ClassMap::parse("a=b class=1 color=#FF0000\nc=d class=2 color=#FF0000\n").is_err());
        assert!(ClassMap::parse("a=b class=1 color=#000000\n").is_err());
    }

    #[test]
    fn parse_errors_carry_line() {
        match ClassMap::parse("# x\na=b class=one color=#FF0000\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(ClassMap::parse("a=b class=1 color=red\n").is_err());
        assert!(ClassMap::parse("a=b class=1 color=#FF0000 buffer=-1\n").is_err());
        assert!(ClassMap::parse("nokey class=1 color=#FF0000\n").is_err());
    }
}
