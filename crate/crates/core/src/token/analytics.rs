use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub lat: f64,
    pub lon: f64,
    pub group: String,
    pub vector: Vec<f64>,
}

/// Embeddings of uniform width with a group label and coordinates per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingSet {
    rows: Vec<EmbeddingRow>,
}

impl EmbeddingSet {
    pub fn new(rows: Vec<EmbeddingRow>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let w = first.vector.len();
            if w == 0 {
                return Err(Error::shape("embedding vectors must be non-empty"));
            }
            if let Some(i) = rows.iter().position(|r| r.vector.len() != w) {
                return Err(Error::shape(format!(
                    "row {i} has {} values, row 0 has {w}",
                    rows[i].vector.len()
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[EmbeddingRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.vector.len())
    }

    /// `lat,lon,group,v0,...` with a header line.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("lat,lon,group");
        for k in 0..self.dim() {
            out.push_str(&format!(",v{k}"));
        }
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            if r.group.contains([',', '\n', '\r']) {
                return Err(Error::format(format!("row {i}: group label '{}' contains a separator", r.group)));
            }
            out.push_str(&format!("{},{},{}", r.lat, r.lon, r.group));
            for v in &r.vector {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty embedding CSV".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 4 || cols[..3] != ["lat", "lon", "group"] {
            return Err(Error::Parse {
                line: 1,
                message: "header must start with lat,lon,group and name at least one value column".into(),
            });
        }
        let width = cols.len() - 3;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |message: String| Error::Parse { line: idx + 1, message };
            if fields.len() != width + 3 {
                return Err(err(format!("expected {} fields, found {}", width + 3, fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("'{s}' is not a number")));
            let vector = fields[3..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            rows.push(EmbeddingRow {
                lat: num(fields[0])?,
                lon: num(fields[1])?,
                group: fields[2].to_string(),
                vector,
            });
        }
        Self::new(rows)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity between group means. Groups are sorted by label.
pub fn pairwise_cosine(set: &EmbeddingSet) -> Result<(Vec<String>, DMatrix<f64>)> {
    if set.is_empty() {
        return Err(Error::param("embedding set is empty"));
    }
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for r in set.rows() {
        let e = sums.entry(&r.group).or_insert_with(|| (vec![0.0; set.dim()], 0));
        for (s, v) in e.0.iter_mut().zip(&r.vector) {
            *s += v;
        }
        e.1 += 1;
    }
    let mut labels = Vec::with_capacity(sums.len());
    let mut means: Vec<(Vec<f64>, f64)> = Vec::with_capacity(sums.len());
    for (label, (sum, count)) in sums {
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let n = norm(&mean);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateVector(format!("mean of group '{label}' has zero norm")));
        }
        labels.push(label.to_string());
        means.push((mean, n));
    }
    let g = means.len();
    let mut m = DMatrix::zeros(g, g);
    for a in 0..g {
        m[(a, a)] = 1.0;
        for b in a + 1..g {
            let c = dot(&means[a].0, &means[b].0) / (means[a].1 * means[b].1);
            m[(a, b)] = c;
            m[(b, a)] = c;
        }
    }
    Ok((labels, m))
}

/// `1 - cos(row, reference)` for every row.
pub fn cosine_distance_map(set: &EmbeddingSet, reference: &[f64]) -> Result<Vec<f64>> {
    if reference.len() != set.dim() && !set.is_empty() {
        return Err(Error::shape(format!(
            "reference has {} values, embeddings have {}",
            reference.len(),
            set.dim()
        )));
    }
    let rn = norm(reference);
    if rn == 0.0 {
        return Err(Error::DegenerateVector("reference vector has zero norm".into()));
    }
    set.rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let n = norm(&r.vector);
            if n == 0.0 {
                return Err(Error::DegenerateVector(format!("row {i} has zero norm")));
            }
            Ok(1.0 - dot(&r.vector, reference) / (n * rn))
        })
        .collect()
}

/// `|d_before - d_after|` per row for two sets covering the same locations.
pub fn cosine_disagreement(
    before: &EmbeddingSet,
    after: &EmbeddingSet,
    ref_before: &[f64],
    ref_after: &[f64],
) -> Result<Vec<f64>> {
    if before.len() != after.len() {
        return Err(Error::Alignment(format!("{} rows vs {} rows", before.len(), after.len())));
    }
    if let Some(i) = before
        .rows()
        .iter()
        .zip(after.rows())
        .position(|(a, b)| a.lat != b.lat || a.lon != b.lon)
    {
        return Err(Error::Alignment(format!("row {i} refers to different coordinates")));
    }
    let a = cosine_distance_map(before, ref_before)?;
    let b = cosine_distance_map(after, ref_after)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k x dim`, unit rows, descending eigenvalue.
    pub components: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// `n x k` coordinates of the centered rows.
    pub scores: DMatrix<f64>,
    /// Number of components with non-negligible variance (at most `k`).
    pub rank: usize,
}

/// Top-`k` principal components of the covariance of `set`.
///
/// Each component is sign-fixed so its largest-magnitude loading is positive
/// (first such index on ties).
pub fn pca(set: &EmbeddingSet, k: usize) -> Result<Pca> {
    let (n, d) = (set.len(), set.dim());
    if n == 0 {
        return Err(Error::param("embedding set is empty"));
    }
    let k = k.min(d);
    let x = DMatrix::from_fn(n, d, |r, c| set.rows()[r].vector[c]);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("embeddings contain non-finite values"));
    }
    let mean: Vec<f64> = (0..d).map(|c| x.column(c).sum() / n as f64).collect();
    let mut centered = x.clone();
    for mut r in centered.row_iter_mut() {
        for (c, v) in r.iter_mut().enumerate() {
            *v -= mean[c];
        }
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let scale = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut components = DMatrix::zeros(k, d);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut rank = 0;
    for (row, &idx) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        if lambda <= tol {
            continue;
        }
        rank += 1;
        let v = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for (i, val) in v.iter().enumerate() {
            if val.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..d {
            components[(row, c)] = sign * v[c];
        }
    }
    let scores = &centered * components.transpose();
    Ok(Pca {
        mean,
        components,
        eigenvalues,
        scores,
        rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaRgb {
    pub colors: Vec<[f64; 3]>,
    /// Set when fewer than three components carry variance; those channels are 0.5.
    pub degenerate: bool,
    pub rank: usize,
}

/// Per-row color from the top three principal components, each min-max
/// scaled to `[0, 1]`.
pub fn pca_rgb(set: &EmbeddingSet) -> Result<PcaRgb> {
    if set.len() < 3 {
        return Err(Error::param(format!("PCA coloring needs at least 3 rows, got {}", set.len())));
    }
    let p = pca(set, 3)?;
    let mut colors = vec![[0.5; 3]; set.len()];
    for c in 0..p.rank.min(p.components.nrows()) {
        let col = p.scores.column(c);
        let (lo, hi) = (col.min(), col.max());
        if hi > lo {
            for (r, v) in col.iter().enumerate() {
                colors[r][c] = (v - lo) / (hi - lo);
            }
        }
    }
    Ok(PcaRgb {
        colors,
        degenerate: p.rank < 3,
        rank: p.rank,
    })
}
