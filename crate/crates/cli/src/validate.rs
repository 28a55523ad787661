//! Static checks over a pipeline config. Nothing is written.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geofuse::prior::CoOccurrenceMatrix;
use geofuse::token::check_coordinates;
use geofuse::vector::{binary_mask, TagSelector};
use geofuse::{ClassMap, FusedTensor, Grid, VectorLayer};

use crate::commands::footprint_desc;
use crate::config::{Config, Entry};
use crate::io;
use crate::spec::{parse_boost, parse_input, parse_pair, BoostSource, Item, SECTIONS};
use crate::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub location: String,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.location, self.message)
    }
}

pub fn run(ctx: &mut Context) -> CliResult<i32> {
    let cfg = ctx
        .config
        .clone()
        .ok_or_else(|| CliError::Usage("validate needs --config".into()))?;
    let findings = check(&cfg);
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    let mut text: String = findings.iter().map(|f| format!("{f}\n")).collect();
    text.push_str(&format!(
        "{}: {errors} error(s), {} warning(s)\n",
        cfg.path.display(),
        findings.len() - errors
    ));
    ctx.print(&text)?;
    Ok(if errors > 0 { 1 } else { 0 })
}

struct Checker<'a> {
    cfg: &'a Config,
    findings: Vec<Finding>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, location: String, severity: Severity, message: impl Into<String>) {
        self.findings.push(Finding { location, severity, message: message.into() });
    }

    fn error(&mut self, e: &Entry, message: impl Into<String>) {
        self.push(self.cfg.locate(e), Severity::Error, message);
    }

    fn warn(&mut self, e: &Entry, message: impl Into<String>) {
        self.push(self.cfg.locate(e), Severity::Warning, message);
    }

    fn section_line(&self, section: &str) -> String {
        let line = self.cfg.sections.iter().find(|s| s.name == section).map_or(0, |s| s.line);
        format!("{}:{line}", self.cfg.path.display())
    }

    fn missing(&mut self, section: &str, key: &str) {
        let loc = self.section_line(section);
        self.push(loc, Severity::Error, format!("[{section}] is missing `{key}`"));
    }

    fn entry(&self, section: &str, key: &str) -> Option<&'a Entry> {
        self.cfg.get(section, key)
    }

    fn value<T: FromStr>(&mut self, section: &str, key: &str) -> Option<(T, &'a Entry)> {
        let e = self.entry(section, key)?;
        match e.value.parse() {
            Ok(v) => Some((v, e)),
            Err(_) => {
                self.error(e, format!("`{key}` cannot parse '{}'", e.value));
                None
            }
        }
    }

    fn positive(&mut self, section: &str, key: &str) -> Option<usize> {
        let (v, e) = self.value::<usize>(section, key)?;
        if v == 0 {
            self.error(e, format!("`{key}` must be > 0"));
            return None;
        }
        Some(v)
    }

    fn range(&mut self, section: &str, key: &str, ok: impl Fn(f64) -> bool, rule: &str) -> Option<f64> {
        let (v, e) = self.value::<f64>(section, key)?;
        if !ok(v) {
            self.error(e, format!("`{key}` must be {rule}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn existing(&mut self, e: &Entry, path: PathBuf) -> Option<PathBuf> {
        if path.is_file() {
            Some(path)
        } else {
            self.error(e, format!("file not found: {}", path.display()));
            None
        }
    }

    fn file(&mut self, section: &str, key: &str) -> Option<(PathBuf, &'a Entry)> {
        let e = self.entry(section, key)?;
        let p = self.existing(e, self.cfg.resolve(&e.value))?;
        Some((p, e))
    }

    fn load<T>(&mut self, e: &Entry, path: &Path, f: impl FnOnce(&Path) -> CliResult<T>) -> Option<T> {
        match f(path) {
            Ok(v) => Some(v),
            Err(err) => {
                let msg = match err {
                    CliError::Usage(m) | CliError::Invalid(m) | CliError::Io(m) => m,
                };
                self.error(e, msg);
                None
            }
        }
    }

    fn grid(&mut self, e: &Entry, path: &Path) -> Option<Grid> {
        self.load(e, path, io::read_grid)
    }

    fn item(&self, e: &Entry) -> Item {
        Item { value: e.value.clone(), base: self.cfg.base.clone(), origin: self.cfg.locate(e) }
    }
}

pub fn check(cfg: &Config) -> Vec<Finding> {
    let mut c = Checker { cfg, findings: Vec::new() };
    for s in &cfg.sections {
        match SECTIONS.iter().find(|(name, _)| *name == s.name) {
            None => {
                let loc = format!("{}:{}", cfg.path.display(), s.line);
                c.push(loc, Severity::Warning, format!("unknown section [{}]", s.name));
            }
            Some((_, keys)) => {
                for e in s.entries.iter().filter(|e| !keys.contains(&e.key.as_str())) {
                    c.warn(e, format!("unknown key `{}` in [{}]", e.key, s.name));
                }
            }
        }
    }
    let has = |name: &str| cfg.sections.iter().any(|s| s.name == name);
    if has("rasterize") {
        rasterize(&mut c);
    }
    if has("rgb") {
        rgb(&mut c);
    }
    if has("prior") {
        prior(&mut c);
    }
    if has("stack") {
        stack(&mut c);
    }
    if has("tokens") {
        tokens(&mut c);
    }
    if has("subset") {
        subset(&mut c);
    }
    c.findings
}

fn classmap(c: &mut Checker, section: &str) -> Option<ClassMap> {
    let (p, e) = c.file(section, "classmap")?;
    c.load(e, &p, |p| ClassMap::parse(&io::read_text(p)?).map_err(|err| CliError::data(p, err)))
}

fn vector_layer(c: &mut Checker, e: &Entry, p: &Path) -> Option<VectorLayer> {
    c.load(e, p, |p| {
        geofuse::vector::parse_geojson(&io::read_bytes(p)?).map_err(|err| CliError::data(p, err))
    })
}

fn tag_summary(layer: &VectorLayer, uncovered: &[usize]) -> String {
    let tags: BTreeSet<String> = uncovered
        .iter()
        .flat_map(|&i| layer.features[i].properties.iter().map(|(k, v)| format!("{k}={v}")))
        .collect();
    let shown: Vec<&str> = tags.iter().take(5).map(String::as_str).collect();
    let more = if tags.len() > shown.len() { ", ..." } else { "" };
    format!("[{}{more}]", shown.join(", "))
}

fn rasterize(c: &mut Checker) {
    const S: &str = "rasterize";
    let layer = match c.entry(S, "vector") {
        None => {
            c.missing(S, "vector");
            None
        }
        Some(e) => c.file(S, "vector").and_then(|(p, _)| vector_layer(c, e, &p)),
    };
    let selector = c.value::<TagSelector>(S, "select");
    c.range(S, "radius", |r| r >= 0.0 && r.is_finite(), ">= 0");
    if c.entry(S, "like").is_some() {
        if let Some((p, e)) = c.file(S, "like") {
            c.grid(e, &p);
        }
    } else {
        for key in ["width", "height"] {
            if c.entry(S, key).is_none() {
                c.missing(S, key);
            } else {
                c.positive(S, key);
            }
        }
        for key in ["origin_x", "origin_y"] {
            if c.entry(S, key).is_none() {
                c.missing(S, key);
            } else {
                c.range(S, key, f64::is_finite, "finite");
            }
        }
        if c.entry(S, "gsd").is_none() {
            c.missing(S, "gsd");
        } else {
            c.range(S, "gsd", |g| g > 0.0 && g.is_finite(), "> 0");
        }
    }
    match (&selector, c.entry(S, "classmap")) {
        (None, None) => c.missing(S, "classmap"),
        (_, Some(e)) => {
            if let (Some(map), Some(layer)) = (classmap(c, S), &layer) {
                let uncovered: Vec<usize> = (0..layer.len()).filter(|&i| !map.covers(&layer.features[i])).collect();
                if !uncovered.is_empty() {
                    c.warn(
                        e,
                        format!(
                            "{} of {} features match no class map entry; tags {}",
                            uncovered.len(),
                            layer.len(),
                            tag_summary(layer, &uncovered)
                        ),
                    );
                }
            }
        }
        _ => {}
    }
    if let (Some((sel, e)), Some(layer)) = (selector, &layer) {
        if !layer.features.iter().any(|f| sel.matches(f)) {
            c.warn(e, format!("selector '{}' matches no feature", e.value));
        }
    }
}

fn rgb(c: &mut Checker) {
    const S: &str = "rgb";
    for key in ["classes", "classmap"] {
        if c.entry(S, key).is_none() {
            c.missing(S, key);
        }
    }
    if let Some((p, e)) = c.file(S, "classes") {
        c.load(e, &p, io::read_class_grid);
    }
    classmap(c, S);
    c.range(S, "sigma", |s| s > 0.0 && s.is_finite(), "> 0");
}

fn not_aligned(what: &str, wp: &Path, g: &Grid, with: &str, rp: &Path, r: &Grid) -> String {
    format!(
        "{what} ({}) is not aligned with {with} ({}): {} vs {}",
        wp.display(),
        rp.display(),
        footprint_desc(g),
        footprint_desc(r)
    )
}

fn prior(c: &mut Checker) {
    const S: &str = "prior";
    for key in ["coarse", "n_coarse", "n_fine"] {
        if c.entry(S, key).is_none() {
            c.missing(S, key);
        }
    }
    let n_coarse = c.positive(S, "n_coarse");
    let n_fine = c.positive(S, "n_fine");
    c.range(S, "sigma", |s| s > 0.0 && s.is_finite(), "> 0");
    c.range(S, "epsilon", |e| e >= 0.0 && e.is_finite(), ">= 0");

    let coarse = c
        .file(S, "coarse")
        .and_then(|(p, e)| c.load(e, &p, io::read_class_grid).map(|g| (p, g)));
    if let (Some((p, g)), Some(n)) = (&coarse, n_coarse) {
        if let Some(v) = g.data().iter().enumerate().find(|&(i, _)| !g.is_nodata(i) && g.class_at(i).is_none_or(|k| k as usize >= n)) {
            let e = c.entry(S, "coarse").expect("coarse entry exists");
            c.error(e, format!("{}: class {} outside 0..{n}", p.display(), v.1));
        }
    }

    let matrix = c.entry(S, "cooccurrence");
    let pairs = c.cfg.all(S, "pair");
    match (matrix, pairs.is_empty()) {
        (None, true) => c.missing(S, "cooccurrence` or `pair"),
        (Some(e), false) => c.error(e, "give either `cooccurrence` or `pair`, not both"),
        _ => {}
    }
    if let Some((p, e)) = c.file(S, "cooccurrence") {
        let m = c.load(e, &p, |p| CoOccurrenceMatrix::parse(&io::read_text(p)?).map_err(|err| CliError::data(p, err)));
        if let (Some(m), Some(nc), Some(nf)) = (m, n_coarse, n_fine) {
            if (m.n_coarse(), m.n_fine()) != (nc, nf) {
                c.error(e, format!("matrix is {}x{}, config declares {nc}x{nf}", m.n_coarse(), m.n_fine()));
            }
        }
    }
    for e in pairs {
        match parse_pair(&c.item(e)) {
            Err(m) => c.error(e, m),
            Ok((a, b)) => {
                let ga = c.existing(e, a.clone()).and_then(|p| c.grid(e, &p));
                let gb = c.existing(e, b.clone()).and_then(|p| c.grid(e, &p));
                if let (Some(ga), Some(gb)) = (ga, gb) {
                    if ga.width() != gb.width() || ga.height() != gb.height() {
                        c.error(e, not_aligned("fine grid", &b, &gb, "coarse grid", &a, &ga));
                    }
                }
            }
        }
    }

    for e in c.cfg.all(S, "boost") {
        let spec = match parse_boost(&c.item(e)) {
            Ok(s) => s,
            Err(m) => {
                c.error(e, m);
                continue;
            }
        };
        if let Some(nf) = n_fine {
            if spec.class >= nf {
                c.error(e, format!("boost '{}' targets class {} but n_fine is {nf}", spec.name, spec.class));
            }
        }
        match &spec.source {
            BoostSource::Mask(p) => {
                let Some(mask) = c.existing(e, p.clone()).and_then(|p| c.load(e, &p, io::read_class_grid)) else {
                    continue;
                };
                if let Err(err) = geofuse::vector::BinaryMask::new(mask.clone()) {
                    c.error(e, format!("{}: {err}", p.display()));
                }
                if let Some((cp, cg)) = &coarse {
                    if !mask.same_footprint(cg) {
                        let what = format!("boost mask '{}'", spec.name);
                        c.error(e, not_aligned(&what, p, &mask, "coarse layer", cp, cg));
                    }
                }
            }
            BoostSource::Vector { path, select, radius } => {
                let Some(layer) = c.existing(e, path.clone()).and_then(|p| vector_layer(c, e, &p)) else {
                    continue;
                };
                if !layer.features.iter().any(|f| select.matches(f)) {
                    c.warn(e, format!("boost '{}': selector matches no feature in {}", spec.name, path.display()));
                } else if let Some((_, cg)) = &coarse {
                    if let Ok(m) = binary_mask(&layer, select, *radius, cg.transform(), cg.width(), cg.height()) {
                        if m.count() == 0 {
                            c.warn(e, format!("boost '{}' covers no pixel of the coarse grid", spec.name));
                        }
                    }
                }
            }
        }
    }
}

fn stack(c: &mut Checker) {
    const S: &str = "stack";
    let inputs = c.cfg.all(S, "input");
    if inputs.is_empty() {
        c.missing(S, "input");
    }
    let mut reference: Option<(String, PathBuf, Grid)> = None;
    for e in inputs.into_iter().chain(c.cfg.all(S, "extra")) {
        let spec = match parse_input(&c.item(e)) {
            Ok(s) => s,
            Err(m) => {
                c.error(e, m);
                continue;
            }
        };
        let Some(g) = c.existing(e, spec.path.clone()).and_then(|p| c.grid(e, &p)) else {
            continue;
        };
        match &reference {
            None => reference = Some((spec.name, spec.path, g)),
            Some((rn, rp, rg)) => {
                if !g.same_footprint(rg) {
                    let msg = not_aligned(&format!("layer '{}'", spec.name), &spec.path, &g, &format!("layer '{rn}'"), rp, rg);
                    c.error(e, msg);
                }
            }
        }
    }
    let prior_entry = c.entry(S, "prior");
    let cfg = c.cfg;
    let produced = |p: &Path| cfg.get("prior", "out").is_some_and(|o| cfg.resolve(&o.value) == p);
    let prior_file = prior_entry.and_then(|e| {
        let p = c.cfg.resolve(&e.value);
        if !p.is_file() && produced(&p) {
            return None;
        }
        c.existing(e, p).map(|p| (p, e))
    });
    if let Some((p, e)) = prior_file {
        let t: Option<FusedTensor> = c.load(e, &p, io::read_tensor);
        if let (Some(t), Some((rn, rp, rg))) = (t, &reference) {
            if t.width() != rg.width() || t.height() != rg.height() || t.transform() != Some(rg.transform()) {
                c.error(
                    e,
                    format!(
                        "prior ({}) is not aligned with layer '{rn}' ({}): {}x{} vs {}",
                        p.display(),
                        rp.display(),
                        t.width(),
                        t.height(),
                        footprint_desc(rg)
                    ),
                );
            }
        }
    }
}

fn tokens(c: &mut Checker) {
    const S: &str = "tokens";
    if c.entry(S, "image").is_none() {
        c.missing(S, "image");
    }
    let patch = if c.entry(S, "patch").is_some() { c.positive(S, "patch") } else { Some(crate::commands::DEFAULT_PATCH) };
    c.positive(S, "dim");
    c.value::<usize>(S, "registers");
    if let Some((p, e)) = c.file(S, "image") {
        if let (Some(t), Some(patch)) = (c.load(e, &p, io::read_tensor), patch) {
            if t.height() % patch != 0 || t.width() % patch != 0 {
                c.error(e, format!("image {}x{} is not divisible into {patch}x{patch} patches", t.width(), t.height()));
            }
        }
    }
    let lat = c.value::<f64>(S, "lat");
    let lon = c.value::<f64>(S, "lon");
    match (lat, lon) {
        (Some((la, e)), Some((lo, _))) => {
            if let Err(err) = check_coordinates(la, lo) {
                c.error(e, err.to_string());
            }
        }
        (Some((_, e)), None) | (None, Some((_, e))) => c.error(e, "`lat` and `lon` go together"),
        _ => {}
    }
    c.file(S, "projection");
}

fn subset(c: &mut Checker) {
    const S: &str = "subset";
    for key in ["n", "fraction"] {
        if c.entry(S, key).is_none() {
            c.missing(S, key);
        }
    }
    c.positive(S, "n");
    c.range(S, "fraction", |f| f > 0.0 && f <= 1.0, "in (0, 1]");
}
