use nalgebra::{DMatrix, DVector};

use crate::fusion::FusedTensor;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Affine map `in -> D`. Weights are stored `in x D` (one column per output
/// unit), so `out = weightsᵀ · v + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
}

impl Projection {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weights.ncols() == 0 || weights.nrows() == 0 {
            return Err(Error::shape("projection needs in > 0 and D > 0"));
        }
        if bias.len() != weights.ncols() {
            return Err(Error::shape(format!(
                "bias has {} entries for D = {}",
                bias.len(),
                weights.ncols()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("projection has non-finite entries"));
        }
        Ok(Self { weights, bias })
    }

    /// Uniform init in `±1/sqrt(in)`, zero bias.
    pub fn seeded(input: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let w = DMatrix::from_fn(input, dim, |_, _| (2.0 * rng.next_f64() - 1.0) * bound);
        Self::new(w, DVector::zeros(dim))
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn apply(&self, v: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "input has {} entries, projection expects {}",
                v.len(),
                self.input_dim()
            )));
        }
        Ok(self.weights.tr_mul(&DVector::from_column_slice(v)) + &self.bias)
    }
}

pub fn project_embedding(v: &[f64], proj: &Projection) -> Result<DVector<f64>> {
    proj.apply(v)
}

pub fn patch_count(height: usize, width: usize, patch: usize) -> Result<usize> {
    if patch == 0 || height % patch != 0 || width % patch != 0 {
        return Err(Error::shape(format!("{height}x{width} is not divisible into {patch}x{patch} patches")));
    }
    Ok((height / patch) * (width / patch))
}

/// Non-overlapping patches in raster order over the patch grid, each flattened
/// channel-major `(c, dy, dx)` and embedded with `embed` (input `C*p*p`).
pub fn patchify(image: &FusedTensor, patch: usize, embed: &Projection) -> Result<DMatrix<f64>> {
    let (c, h, w) = (image.n_channels(), image.height(), image.width());
    let n = patch_count(h, w, patch)?;
    let flat = c * patch * patch;
    if embed.input_dim() != flat {
        return Err(Error::shape(format!(
            "patch embedding expects {} inputs, patches have {flat}",
            embed.input_dim()
        )));
    }
    let cols = w / patch;
    let mut tokens = DMatrix::zeros(n, embed.output_dim());
    let mut buf = vec![0.0; flat];
    for t in 0..n {
        let (py, px) = ((t / cols) * patch, (t % cols) * patch);
        for ch in 0..c {
            let plane = image.channel(ch);
            for dy in 0..patch {
                let row = (py + dy) * w + px;
                for dx in 0..patch {
                    buf[(ch * patch + dy) * patch + dx] = plane[row + dx] as f64;
                }
            }
        }
        let e = embed.apply(&buf)?;
        tokens.row_mut(t).copy_from(&e.transpose());
    }
    Ok(tokens)
}

/// Seeded `N(0, 1)` register tokens, `count x dim`, drawn row by row.
pub fn init_registers(count: usize, dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut m = DMatrix::zeros(count, dim);
    for r in 0..count {
        for c in 0..dim {
            m[(r, c)] = rng.next_gaussian();
        }
    }
    m
}

/// Location input for a sequence: raw encoder output plus its projection.
#[derive(Debug, Clone, Copy)]
pub struct LocationToken<'a> {
    pub embedding: &'a [f64],
    pub projection: &'a Projection,
}

#[derive(Debug, Clone)]
pub struct SequenceParts<'a> {
    pub cls: &'a DVector<f64>,
    pub location: Option<LocationToken<'a>>,
    pub patches: &'a DMatrix<f64>,
    pub registers: &'a DMatrix<f64>,
    pub pos_embed: &'a DMatrix<f64>,
}

/// Tokens in order `[cls; loc; patches; registers]`.
///
/// Position ids: cls 0, patches `1..=N`, loc `N+1`, registers after that.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    tokens: DMatrix<f64>,
    positional_ids: Vec<usize>,
    z0: DMatrix<f64>,
    n_patches: usize,
    n_registers: usize,
    has_location: bool,
}

impl TokenSequence {
    pub fn tokens(&self) -> &DMatrix<f64> {
        &self.tokens
    }

    pub fn positional_ids(&self) -> &[usize] {
        &self.positional_ids
    }

    /// Tokens plus their positional embedding rows.
    pub fn z0(&self) -> &DMatrix<f64> {
        &self.z0
    }

    pub fn len(&self) -> usize {
        self.positional_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positional_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tokens.ncols()
    }

    pub fn n_patches(&self) -> usize {
        self.n_patches
    }

    pub fn n_registers(&self) -> usize {
        self.n_registers
    }

    pub fn has_location(&self) -> bool {
        self.has_location
    }

    /// Row index of the location token, if present.
    pub fn location_index(&self) -> Option<usize> {
        self.has_location.then_some(1)
    }
}

pub fn positional_ids(n_patches: usize, n_registers: usize, has_location: bool) -> Vec<usize> {
    let mut ids = Vec::with_capacity(n_patches + n_registers + 1 + has_location as usize);
    ids.push(0);
    if has_location {
        ids.push(n_patches + 1);
    }
    ids.extend(1..=n_patches);
    let first_reg = n_patches + 1 + has_location as usize;
    ids.extend(first_reg..first_reg + n_registers);
    ids
}

pub fn build_token_sequence(parts: &SequenceParts) -> Result<TokenSequence> {
    let d = parts.cls.len();
    if d == 0 {
        return Err(Error::shape("token dimension must be positive"));
    }
    let n = parts.patches.nrows();
    let r = parts.registers.nrows();
    if parts.patches.ncols() != d && n > 0 {
        return Err(Error::shape(format!("patch tokens have width {}, cls has {d}", parts.patches.ncols())));
    }
    if parts.registers.ncols() != d && r > 0 {
        return Err(Error::shape(format!("registers have width {}, cls has {d}", parts.registers.ncols())));
    }
    let loc = match parts.location {
        Some(l) => {
            let x = l.projection.apply(l.embedding)?;
            if x.len() != d {
                return Err(Error::shape(format!("projected location has width {}, cls has {d}", x.len())));
            }
            Some(x)
        }
        None => None,
    };
    let ids = positional_ids(n, r, loc.is_some());
    let max_id = ids.iter().copied().max().unwrap_or(0);
    if parts.pos_embed.nrows() <= max_id {
        return Err(Error::shape(format!(
            "positional table has {} rows, ids reach {max_id}",
            parts.pos_embed.nrows()
        )));
    }
    if parts.pos_embed.ncols() != d {
        return Err(Error::shape(format!("positional table has width {}, cls has {d}", parts.pos_embed.ncols())));
    }

    let mut tokens = DMatrix::zeros(ids.len(), d);
    tokens.row_mut(0).copy_from(&parts.cls.transpose());
    let mut row = 1;
    if let Some(x) = &loc {
        tokens.row_mut(row).copy_from(&x.transpose());
        row += 1;
    }
    for i in 0..n {
        tokens.row_mut(row).copy_from(&parts.patches.row(i));
        row += 1;
    }
    for i in 0..r {
        tokens.row_mut(row).copy_from(&parts.registers.row(i));
        row += 1;
    }
    let mut z0 = tokens.clone();
    for (t, &id) in ids.iter().enumerate() {
        let mut zr = z0.row_mut(t);
        zr += parts.pos_embed.row(id);
    }
    Ok(TokenSequence {
        tokens,
        positional_ids: ids,
        z0,
        n_patches: n,
        n_registers: r,
        has_location: loc.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{AppliedNorm, Provenance};

    fn image(c: usize, h: usize, w: usize) -> FusedTensor {
        let channels = (0..c)
            .map(|k| (0..h * w).map(|i| (k * 1000 + i) as f32).collect())
            .collect();
        let prov = (0..c).map(|k| Provenance::new(format!("b{k}"), AppliedNorm::Identity)).collect();
        FusedTensor::new(w, h, None, channels, prov).unwrap()
    }

    #[test]
    fn identity_and_bias_projection() {
        let v: Vec<f64> = (0..256).map(|i| i as f64 * 0.5).collect();
        let id = Projection::new(DMatrix::identity(256, 256), DVector::zeros(256)).unwrap();
        assert_eq!(id.apply(&v).unwrap().as_slice(), v.as_slice());
        let b = DVector::from_fn(4, |i, _| i as f64 + 1.0);
        let zero = Projection::new(DMatrix::zeros(256, 4), b.clone()).unwrap();
        assert_eq!(zero.apply(&v).unwrap(), b);
        assert!(matches!(id.apply(&v[..10]), Err(Error::Shape(_))));
    }

    #[test]
    fn projection_matches_loops() {
        let p = Projection::seeded(256, 768, 9).unwrap();
        let v: Vec<f64> = (0..256).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let out = p.apply(&v).unwrap();
        for j in 0..768 {
            let mut s = p.bias()[j];
            for (i, x) in v.iter().enumerate() {
                s += p.weights()[(i, j)] * x;
            }
            assert!((out[j] - s).abs() < 1e-6);
        }
    }

    #[test]
    fn patch_counts() {
        let img = image(10, 120, 120);
        let embed = Projection::seeded(10 * 64, 8, 0).unwrap();
        assert_eq!(patchify(&img, 8, &embed).unwrap().nrows(), 225);
        let tiny = image(1, 2, 2);
        let e = Projection::seeded(4, 3, 0).unwrap();
        assert_eq!(patchify(&tiny, 2, &e).unwrap().nrows(), 1);
        assert!(matches!(patchify(&image(1, 6, 4), 4, &e), Err(Error::Shape(_))));
    }

    #[test]
    fn identity_patch_embedding_is_raster_order() {
        let img = image(1, 2, 2);
        let e = Projection::new(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        let t = patchify(&img, 1, &e).unwrap();
        assert_eq!(t.as_slice(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn flatten_order_is_channel_major() {
        let img = image(2, 2, 4);
        let e = Projection::new(DMatrix::identity(8, 8), DVector::zeros(8)).unwrap();
        let t = patchify(&img, 2, &e).unwrap();
        let second: Vec<f64> = t.row(1).iter().copied().collect();
        assert_eq!(second, vec![2.0, 3.0, 6.0, 7.0, 1002.0, 1003.0, 1006.0, 1007.0]);
    }

    #[test]
    fn verbatim_rows_with_zero_positions() {
        let d = 3;
        let cls = DVector::from_element(d, 9.0);
        let patches = DMatrix::from_fn(4, d, |r, c| (r * d + c) as f64);
        let loc256: Vec<f64> = (0..256).map(|i| i as f64).collect();
        let proj = Projection::new(DMatrix::zeros(256, d), DVector::from_element(d, -1.0)).unwrap();
        let regs = DMatrix::zeros(0, d);
        let pos = DMatrix::zeros(6, d);
        let seq = build_token_sequence(&SequenceParts {
            cls: &cls,
            location: Some(LocationToken { embedding: &loc256, projection: &proj }),
            patches: &patches,
            registers: &regs,
            pos_embed: &pos,
        })
        .unwrap();
        assert_eq!(seq.len(), 6);
        assert_eq!(seq.positional_ids(), &[0, 5, 1, 2, 3, 4]);
        assert_eq!(seq.z0().row(0), cls.transpose());
        assert!(seq.z0().row(1).iter().all(|&v| v == -1.0));
        for i in 0..4 {
            assert_eq!(seq.z0().row(2 + i), patches.row(i));
        }
    }

    #[test]
    fn vanilla_and_register_layouts() {
        let d = 2;
        let cls = DVector::zeros(d);
        let patches = DMatrix::zeros(5, d);
        let regs = init_registers(2, d, 1);
        let pos = DMatrix::zeros(8, d);
        let vanilla = build_token_sequence(&SequenceParts {
            cls: &cls,
            location: None,
            patches: &patches,
            registers: &DMatrix::zeros(0, d),
            pos_embed: &pos,
        })
        .unwrap();
        assert_eq!(vanilla.positional_ids(), &[0, 1, 2, 3, 4, 5]);
        let with_regs = build_token_sequence(&SequenceParts {
            cls: &cls,
            location: None,
            patches: &patches,
            registers: &regs,
            pos_embed: &pos,
        })
        .unwrap();
        assert_eq!(with_regs.positional_ids(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(with_regs.tokens().row(6), regs.row(0));
    }

    #[test]
    fn short_positional_table_is_rejected() {
        let d = 2;
        let loc = vec![0.0; 256];
        let proj = Projection::seeded(256, d, 0).unwrap();
        let err = build_token_sequence(&SequenceParts {
            cls: &DVector::zeros(d),
            location: Some(LocationToken { embedding: &loc, projection: &proj }),
            patches: &DMatrix::zeros(3, d),
            registers: &DMatrix::zeros(1, d),
            pos_embed: &DMatrix::zeros(5, d),
        });
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn registers_are_seeded() {
        assert_eq!(init_registers(2, 5, 3), init_registers(2, 5, 3));
        assert_ne!(init_registers(2, 5, 3), init_registers(2, 5, 4));
    }
}
