//! Hand-crafted land-cover prior.
//!
//! A coarse land-cover map (e.g. 30 m NLCD) induces per-pixel beliefs over
//! fine classes through the empirical co-occurrence `P(fine | coarse)`. The
//! broadcast prior is Gaussian-smoothed to hide block artifacts, then boosted
//! where auxiliary GIS masks (roads, buildings, water) fire, and finally
//! renormalized so every pixel is a probability vector.
//!
//! Pipeline order is fixed: broadcast, blur, boost, renormalize.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::raster::{format_g, gaussian_blur, GeoTransform, Grid, GridKind};
use crate::vector::BinaryMask;
use crate::{Error, Result};

/// Additive smoothing applied to co-occurrence counts.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Blur applied to the broadcast prior, in pixels.
pub const DEFAULT_BLUR_SIGMA: f64 = 1.0;
/// Boost weight used when a config does not give one.
pub const DEFAULT_BOOST_WEIGHT: f64 = 1.0;

const ROW_TOLERANCE: f64 = 1e-6;

/// Row-stochastic matrix `P(fine | coarse)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoOccurrenceMatrix {
    n_coarse: usize,
    n_fine: usize,
    probs: Vec<f64>,
}

impl CoOccurrenceMatrix {
    pub fn new(n_coarse: usize, n_fine: usize, probs: Vec<f64>) -> Result<Self> {
        if n_coarse == 0 || n_fine == 0 {
            return Err(Error::param("co-occurrence matrix needs >= 1 coarse and fine class"));
        }
        if probs.len() != n_coarse * n_fine {
            return Err(Error::shape(format!(
                "expected {n_coarse}x{n_fine} entries, got {}",
                probs.len()
            )));
        }
        for (c, row) in probs.chunks(n_fine).enumerate() {
            if row.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::data(format!("row {c} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::data(format!("row {c} sums to {s}, not 1")));
            }
        }
        Ok(Self {
            n_coarse,
            n_fine,
            probs,
        })
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn row(&self, coarse: usize) -> &[f64] {
        &self.probs[coarse * self.n_fine..(coarse + 1) * self.n_fine]
    }

    pub fn get(&self, coarse: usize, fine: usize) -> f64 {
        self.probs[coarse * self.n_fine + fine]
    }

    /// Text form: `ncoarse nfine` header, then one `%.9g` row per coarse class.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_coarse, self.n_fine);
        for row in self.probs.chunks(self.n_fine) {
            let cells: Vec<String> = row.iter().map(|&p| format_g(p, 9)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, m: String| Error::Parse { line, message: m };
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(hl, format!("bad header '{header}'")))?;
        let [n_coarse, n_fine] = dims[..] else {
            return Err(perr(hl, "header must be 'ncoarse nfine'".into()));
        };
        let mut probs = Vec::with_capacity(n_coarse * n_fine);
        let mut rows = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(ln, "non-numeric entry".into()))?;
            if row.len() != n_fine {
                return Err(perr(ln, format!("row has {} entries, expected {n_fine}", row.len())));
            }
            probs.extend(row);
            rows += 1;
        }
        if rows != n_coarse {
            return Err(perr(hl, format!("found {rows} rows, expected {n_coarse}")));
        }
        Self::new(n_coarse, n_fine, probs)
    }
}

fn class_id(grid: &Grid, idx: usize, n: usize, what: &str, pair: usize) -> Result<Option<usize>> {
    if grid.is_nodata(idx) {
        return Ok(None);
    }
    let v = grid.data()[idx];
    if v < 0.0 || v.fract() != 0.0 || v >= n as f64 {
        return Err(Error::data(format!(
            "{what} class {v} at pixel {idx} of pair {pair} is outside 0..{n}"
        )));
    }
    Ok(Some(v as usize))
}

/// Counts aligned (coarse, fine) pixel pairs into `P(fine | coarse)`.
///
/// `probs[c][l] = (count(c, l) + epsilon) / (count(c) + n_fine * epsilon)`;
/// coarse classes never observed get a uniform row. Nodata pixels in either
/// grid are skipped.
pub fn estimate_cooccurrence(
    pairs: &[(&Grid, &Grid)],
    n_coarse: usize,
    n_fine: usize,
    epsilon: f64,
) -> Result<CoOccurrenceMatrix> {
    if pairs.is_empty() {
        return Err(Error::data("no (coarse, fine) pairs given"));
    }
    if n_coarse == 0 || n_fine == 0 {
        return Err(Error::param("class counts must be positive"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let mut counts = vec![0u64; n_coarse * n_fine];
    let mut valid = 0u64;
    for (p, (coarse, fine)) in pairs.iter().enumerate() {
        if coarse.width() != fine.width() || coarse.height() != fine.height() {
            return Err(Error::Alignment(format!(
                "pair {p}: coarse {}x{} vs fine {}x{}",
                coarse.width(),
                coarse.height(),
                fine.width(),
                fine.height()
            )));
        }
        for idx in 0..coarse.len() {
            let c = class_id(coarse, idx, n_coarse, "coarse", p)?;
            let l = class_id(fine, idx, n_fine, "fine", p)?;
            if let (Some(c), Some(l)) = (c, l) {
                counts[c * n_fine + l] += 1;
                valid += 1;
            }
        }
    }
    if valid == 0 {
        return Err(Error::data("no pixel is valid in both coarse and fine grids"));
    }
    let uniform = 1.0 / n_fine as f64;
    let mut probs = Vec::with_capacity(n_coarse * n_fine);
    for row in counts.chunks(n_fine) {
        let total: u64 = row.iter().sum();
        if total == 0 {
            probs.extend(std::iter::repeat(uniform).take(n_fine));
            continue;
        }
        let denom = total as f64 + n_fine as f64 * epsilon;
        probs.extend(row.iter().map(|&n| (n as f64 + epsilon) / denom));
    }
    CoOccurrenceMatrix::new(n_coarse, n_fine, probs)
}

/// Per-pixel belief over fine classes: one continuous grid per class.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorStack {
    channels: Vec<Grid>,
    manifest: Option<PriorManifest>,
}

impl PriorStack {
    pub fn new(channels: Vec<Grid>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::shape("prior has no channels"))?;
        if let Some(i) = channels.iter().position(|c| !c.same_footprint(first)) {
            return Err(Error::Alignment(format!("prior channel {i} differs in footprint")));
        }
        Ok(Self {
            channels,
            manifest: None,
        })
    }

    pub fn channels(&self) -> &[Grid] {
        &self.channels
    }

    pub fn n_fine(&self) -> usize {
        self.channels.len()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn transform(&self) -> &GeoTransform {
        self.channels[0].transform()
    }

    pub fn manifest(&self) -> Option<&PriorManifest> {
        self.manifest.as_ref()
    }

    pub fn pixel(&self, idx: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c.data()[idx]).collect()
    }

    /// Largest deviation of a per-pixel channel sum from 1, and the minimum entry.
    pub fn simplex_error(&self) -> (f64, f64) {
        let n = self.channels[0].len();
        let mut max_dev = 0.0f64;
        let mut min_val = f64::INFINITY;
        for i in 0..n {
            let mut s = 0.0;
            for c in &self.channels {
                let v = c.data()[i];
                s += v;
                min_val = min_val.min(v);
            }
            max_dev = max_dev.max((s - 1.0).abs());
        }
        (max_dev, min_val)
    }
}

/// Broadcasts `P(. | c_i)` to every pixel and blurs each channel.
///
/// Nodata coarse pixels receive the uniform distribution before blurring.
pub fn prior_from_coarse(coarse: &Grid, co: &CoOccurrenceMatrix, blur_sigma: f64) -> Result<PriorStack> {
    let n_fine = co.n_fine();
    let uniform = 1.0 / n_fine as f64;
    let mut planes = vec![Vec::with_capacity(coarse.len()); n_fine];
    for idx in 0..coarse.len() {
        match class_id(coarse, idx, co.n_coarse(), "coarse", 0)? {
            Some(c) => {
                for (plane, &p) in planes.iter_mut().zip(co.row(c)) {
                    plane.push(p);
                }
            }
            None => planes.iter_mut().for_each(|plane| plane.push(uniform)),
        }
    }
    let channels = planes
        .into_par_iter()
        .map(|data| {
            let g = Grid::new(
                coarse.width(),
                coarse.height(),
                *coarse.transform(),
                data,
                None,
                GridKind::Continuous,
            )?;
            gaussian_blur(&g, blur_sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    PriorStack::new(channels)
}

/// Adds `weight` to channel `target_class` wherever `mask` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Boost {
    pub name: String,
    pub mask: BinaryMask,
    pub target_class: usize,
    pub weight: f64,
}

/// Applies every boost, then divides each pixel by its channel sum.
/// Pixels whose sum is not positive fall back to the uniform distribution.
pub fn boost_and_renormalize(prior: &PriorStack, boosts: &[Boost]) -> Result<PriorStack> {
    let n_fine = prior.n_fine();
    let reference = &prior.channels[0];
    for b in boosts {
        if b.target_class >= n_fine {
            return Err(Error::param(format!(
                "boost '{}' targets class {} but the prior has {n_fine} classes",
                b.name, b.target_class
            )));
        }
        if !(b.weight >= 0.0 && b.weight.is_finite()) {
            return Err(Error::param(format!("boost '{}' weight {} must be finite and >= 0", b.name, b.weight)));
        }
        if b.mask.grid().width() != reference.width() || b.mask.grid().height() != reference.height() {
            return Err(Error::Alignment(format!(
                "boost mask '{}' is {}x{}, prior is {}x{}",
                b.name,
                b.mask.grid().width(),
                b.mask.grid().height(),
                reference.width(),
                reference.height()
            )));
        }
    }

    let mut planes: Vec<Vec<f64>> = prior.channels.iter().map(|c| c.data().to_vec()).collect();
    for b in boosts {
        let plane = &mut planes[b.target_class];
        for (i, v) in plane.iter_mut().enumerate() {
            if b.mask.is_set(i) {
                *v += b.weight;
            }
        }
    }

    let uniform = 1.0 / n_fine as f64;
    let n = reference.len();
    let sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| planes.iter().map(|p| p[i]).sum::<f64>())
        .collect();
    for plane in &mut planes {
        for (v, &s) in plane.iter_mut().zip(&sums) {
            *v = if s > 0.0 && s.is_finite() { *v / s } else { uniform };
        }
    }
    let channels = planes
        .into_iter()
        .map(|data| reference.with_data(data, GridKind::Continuous))
        .collect::<Result<Vec<_>>>()?;
    PriorStack::new(channels)
}

/// Where the co-occurrence matrix comes from.
#[derive(Debug, Clone)]
pub enum CoOccurrenceSource {
    Matrix(CoOccurrenceMatrix),
    Estimate {
        pairs: Vec<(Grid, Grid)>,
        epsilon: f64,
    },
}

#[derive(Debug, Clone)]
pub struct PriorConfig {
    pub coarse_name: String,
    pub coarse: Grid,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub source: CoOccurrenceSource,
    pub blur_sigma: f64,
    pub boosts: Vec<Boost>,
}

/// Ordered record of every parameter and input digest behind a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorManifest {
    entries: Vec<(String, String)>,
}

impl PriorManifest {
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `key=value` lines in insertion order.
    pub fn body(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// SHA-256 of [`Self::body`], lowercase hex.
    pub fn hash(&self) -> String {
        sha256_hex(self.body().as_bytes())
    }

    /// Body followed by a `manifest_sha256=` line.
    pub fn to_text(&self) -> String {
        format!("{}manifest_sha256={}\n", self.body(), self.hash())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn grid_digest(g: &Grid) -> String {
    let mut bytes = Vec::with_capacity(g.len() * 8 + 16);
    bytes.extend((g.width() as u64).to_le_bytes());
    bytes.extend((g.height() as u64).to_le_bytes());
    for v in g.data() {
        bytes.extend(v.to_le_bytes());
    }
    sha256_hex(&bytes)
}

/// Full pipeline: co-occurrence, broadcast + blur, boost + renormalize.
/// The returned stack carries a [`PriorManifest`].
pub fn generate_prior(config: &PriorConfig) -> Result<PriorStack> {
    if !(config.blur_sigma > 0.0 && config.blur_sigma.is_finite()) {
        return Err(Error::param(format!("blur sigma must be > 0, got {}", config.blur_sigma)));
    }
    for b in &config.boosts {
        if !b.mask.grid().same_footprint(&config.coarse) {
            return Err(Error::Alignment(format!(
                "boost mask '{}' is not aligned with coarse layer '{}'",
                b.name, config.coarse_name
            )));
        }
    }
    let (co, source_desc) = match &config.source {
        CoOccurrenceSource::Matrix(m) => {
            if m.n_coarse() != config.n_coarse || m.n_fine() != config.n_fine {
                return Err(Error::shape(format!(
                    "matrix is {}x{}, config declares {}x{}",
                    m.n_coarse(),
                    m.n_fine(),
                    config.n_coarse,
                    config.n_fine
                )));
            }
            (m.clone(), "matrix".to_string())
        }
        CoOccurrenceSource::Estimate { pairs, epsilon } => {
            let refs: Vec<(&Grid, &Grid)> = pairs.iter().map(|(a, b)| (a, b)).collect();
            let m = estimate_cooccurrence(&refs, config.n_coarse, config.n_fine, *epsilon)?;
            (m, format!("estimate pairs={} epsilon={}", pairs.len(), epsilon))
        }
    };

    let prior = prior_from_coarse(&config.coarse, &co, config.blur_sigma)?;
    let mut prior = boost_and_renormalize(&prior, &config.boosts)?;

    let mut entries = vec![
        ("format".to_string(), "geofuse-prior-manifest/1".to_string()),
        ("order".into(), "broadcast,blur,boost,renormalize".into()),
        ("coarse".into(), config.coarse_name.clone()),
        ("coarse_sha256".into(), grid_digest(&config.coarse)),
        ("n_coarse".into(), config.n_coarse.to_string()),
        ("n_fine".into(), config.n_fine.to_string()),
        ("blur_sigma".into(), config.blur_sigma.to_string()),
        ("cooccurrence".into(), source_desc),
        ("cooccurrence_sha256".into(), sha256_hex(co.to_text().as_bytes())),
        ("boosts".into(), config.boosts.len().to_string()),
    ];
    for (i, b) in config.boosts.iter().enumerate() {
        entries.push((
            format!("boost.{i}"),
            format!(
                "name={} class={} weight={} mask_sha256={}",
                b.name,
                b.target_class,
                b.weight,
                grid_digest(b.mask.grid())
            ),
        ));
    }
    prior.manifest = Some(PriorManifest { entries });
    Ok(prior)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> GeoTransform {
        GeoTransform::north_up(0.0, 0.0, 1.0)
    }

    fn cat(w: usize, h: usize, data: Vec<f64>) -> Grid {
        Grid::new(w, h, t(), data, None, GridKind::Categorical).unwrap()
    }

    fn mask(w: usize, h: usize, data: Vec<f64>) -> BinaryMask {
        BinaryMask::new(cat(w, h, data)).unwrap()
    }

    #[test]
    fn deterministic_mapping_is_one_hot() {
        let coarse = cat(2, 2, vec![0.0; 4]);
        let fine = cat(2, 2, vec![2.0; 4]);
        let m = estimate_cooccurrence(&[(&coarse, &fine)], 2, 3, DEFAULT_EPSILON).unwrap();
        assert!((m.get(0, 2) - 1.0).abs() < 1e-5);
        assert!(m.get(0, 0) < 1e-6 && m.get(0, 0) > 0.0);
        assert_eq!(m.row(1), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn unseen_coarse_row_is_uniform_without_smoothing() {
        let coarse = cat(2, 1, vec![0.0, 1.0]);
        let fine = cat(2, 1, vec![0.0, 1.0]);
        let m = estimate_cooccurrence(&[(&coarse, &fine)], 4, 2, 0.0).unwrap();
        assert_eq!(m.row(3), &[0.5, 0.5]);
        assert_eq!(m.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn estimation_errors() {
        let coarse = cat(2, 1, vec![0.0, 5.0]);
        let fine = cat(2, 1, vec![0.0, 1.0]);
        match estimate_cooccurrence(&[(&coarse, &fine)], 3, 2, 0.0) {
            Err(Error::Data(m)) => assert!(m.contains("pixel 1"), "{m}"),
            other => panic!("{other:?}"),
        }
        let nd = Grid::new(1, 1, t(), vec![-1.0], Some(-1.0), GridKind::Categorical).unwrap();
        let f = cat(1, 1, vec![0.0]);
        assert!(matches!(estimate_cooccurrence(&[(&nd, &f)], 1, 1, 0.0), Err(Error::Data(_))));
        assert!(estimate_cooccurrence(&[], 1, 1, 0.0).is_err());
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = CoOccurrenceMatrix::new(2, 3, vec![0.2, 0.3, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("2 3\n0.2 0.3 0.5\n0.333333333 "));
        let back = CoOccurrenceMatrix::parse(&text).unwrap();
        for (a, b) in back.probs.iter().zip(&m.probs) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(CoOccurrenceMatrix::parse("2 2\n0.5 0.5\n").is_err());
        assert!(CoOccurrenceMatrix::new(1, 2, vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn uniform_coarse_gives_matrix_row() {
        let m = CoOccurrenceMatrix::new(2, 2, vec![0.9, 0.1, 0.3, 0.7]).unwrap();
        let prior = prior_from_coarse(&cat(5, 5, vec![1.0; 25]), &m, 1.0).unwrap();
        for i in 0..25 {
            let p = prior.pixel(i);
            assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn boost_hand_arithmetic() {
        let half = Grid::new(1, 1, t(), vec![0.5], None, GridKind::Continuous).unwrap();
        let prior = PriorStack::new(vec![half.clone(), half]).unwrap();
        let boosts = [Boost {
            name: "roads".into(),
            mask: mask(1, 1, vec![1.0]),
            target_class: 0,
            weight: 1.0,
        }];
        let out = boost_and_renormalize(&prior, &boosts).unwrap();
        assert_eq!(out.pixel(0), vec![0.75, 0.25]);
    }

    #[test]
    fn empty_and_zero_weight_boosts_are_identity() {
        let a = Grid::new(2, 1, t(), vec![0.25, 0.5], None, GridKind::Continuous).unwrap();
        let b = Grid::new(2, 1, t(), vec![0.75, 0.5], None, GridKind::Continuous).unwrap();
        let prior = PriorStack::new(vec![a, b]).unwrap();
        assert_eq!(boost_and_renormalize(&prior, &[]).unwrap(), prior);
        let zero = [Boost { name: "w0".into(), mask: mask(2, 1, vec![1.0, 1.0]), target_class: 1, weight: 0.0 }];
        assert_eq!(boost_and_renormalize(&prior, &zero).unwrap(), prior);
    }

    #[test]
    fn zero_sum_pixel_falls_back_to_uniform() {
        let z = Grid::new(1, 1, t(), vec![0.0], None, GridKind::Continuous).unwrap();
        let prior = PriorStack::new(vec![z.clone(), z.clone(), z.clone(), z]).unwrap();
        let out = boost_and_renormalize(&prior, &[]).unwrap();
        assert_eq!(out.pixel(0), vec![0.25; 4]);
    }

    #[test]
    fn boost_validation() {
        let g = Grid::new(1, 1, t(), vec![1.0], None, GridKind::Continuous).unwrap();
        let prior = PriorStack::new(vec![g]).unwrap();
        let bad_class = [Boost { name: "x".into(), mask: mask(1, 1, vec![1.0]), target_class: 3, weight: 1.0 }];
        assert!(matches!(boost_and_renormalize(&prior, &bad_class), Err(Error::Parameter(_))));
        let bad_shape = [Boost { name: "x".into(), mask: mask(2, 1, vec![1.0, 0.0]), target_class: 0, weight: 1.0 }];
        assert!(matches!(boost_and_renormalize(&prior, &bad_shape), Err(Error::Alignment(_))));
        let neg = [Boost { name: "x".into(), mask: mask(1, 1, vec![1.0]), target_class: 0, weight: -1.0 }];
        assert!(boost_and_renormalize(&prior, &neg).is_err());
    }

    #[test]
    fn generate_prior_records_manifest_and_checks_alignment() {
        let coarse = cat(4, 4, vec![0.0; 16]);
        let m = CoOccurrenceMatrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        let cfg = PriorConfig {
            coarse_name: "nlcd.asc".into(),
            coarse: coarse.clone(),
            n_coarse: 1,
            n_fine: 2,
            source: CoOccurrenceSource::Matrix(m.clone()),
            blur_sigma: DEFAULT_BLUR_SIGMA,
            boosts: vec![],
        };
        let p = generate_prior(&cfg).unwrap();
        for i in 0..16 {
            assert!((p.pixel(i)[0] - 0.5).abs() < 1e-12);
        }
        let manifest = p.manifest().unwrap();
        assert_eq!(manifest.get("blur_sigma"), Some("1"));
        assert_eq!(manifest.get("order"), Some("broadcast,blur,boost,renormalize"));
        assert_eq!(manifest.hash().len(), 64);

        let mut bad = cfg.clone();
        let shifted = Grid::new(
            4,
            4,
            GeoTransform::north_up(1.0, 0.0, 1.0),
            vec![0.0; 16],
            None,
            GridKind::Categorical,
        )
        .unwrap();
        bad.boosts.push(Boost {
            name: "roads".into(),
            mask: BinaryMask::new(shifted).unwrap(),
            target_class: 0,
            weight: 1.0,
        });
        match generate_prior(&bad) {
            Err(Error::Alignment(msg)) => assert!(msg.contains("roads")),
            other => panic!("{other:?}"),
        }
        let mut zero_sigma = cfg;
        zero_sigma.blur_sigma = 0.0;
        assert!(generate_prior(&zero_sigma).is_err());
    }
}
