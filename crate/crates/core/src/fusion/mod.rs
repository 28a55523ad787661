//! Fused-tensor assembly.
//!
//! [`stack_channels`] concatenates aligned rasters after per-channel
//! normalization. [`proc_stack`] places a generated prior between the
//! optical channels and any extra raw layers. Every channel carries a
//! [`Provenance`] record so channel order and scaling stay auditable.

mod gft;

pub use gft::{read_gft, read_matrix_gft, write_gft, write_matrix_gft, GFT_MAGIC};

use crate::prior::PriorStack;
use crate::raster::{GeoTransform, Grid};
use crate::{Error, Result};

/// Requested per-channel normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRule {
    /// Divide by 255; input must lie in [0, 255].
    Byte255,
    Identity,
    /// Affine map of the channel's own range onto [0, 1].
    MinMax,
    /// Palette mapping already applied upstream; values pass through.
    CategoricalRgb,
}

impl std::str::FromStr for NormRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "byte255" => Ok(Self::Byte255),
            "identity" => Ok(Self::Identity),
            "minmax" => Ok(Self::MinMax),
            "categorical_rgb" => Ok(Self::CategoricalRgb),
            other => Err(Error::param(format!("unknown normalization rule '{other}'"))),
        }
    }
}

/// Normalization as actually applied, including any fitted constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppliedNorm {
    Byte255,
    Identity,
    MinMax { min: f64, max: f64 },
    CategoricalRgb,
}

impl AppliedNorm {
    fn encode(&self) -> String {
        match self {
            AppliedNorm::Byte255 => "byte255".into(),
            AppliedNorm::Identity => "identity".into(),
            AppliedNorm::MinMax { min, max } => format!("minmax:{min:?}:{max:?}"),
            AppliedNorm::CategoricalRgb => "categorical_rgb".into(),
        }
    }

    fn decode(s: &str) -> Result<Self> {
        match s {
            "byte255" => Ok(Self::Byte255),
            "identity" => Ok(Self::Identity),
            "categorical_rgb" => Ok(Self::CategoricalRgb),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts[..] {
                    ["minmax", lo, hi] => {
                        let min = lo.parse().map_err(|_| Error::format(format!("bad minmax bound '{lo}'")))?;
                        let max = hi.parse().map_err(|_| Error::format(format!("bad minmax bound '{hi}'")))?;
                        Ok(Self::MinMax { min, max })
                    }
                    _ => Err(Error::format(format!("unknown normalization record '{s}'"))),
                }
            }
        }
    }
}

/// Where a channel came from and how it was scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub norm: AppliedNorm,
    /// Hash of the prior manifest for channels produced by the prior generator.
    pub manifest: Option<String>,
}

impl Provenance {
    pub fn new(source: impl Into<String>, norm: AppliedNorm) -> Self {
        Self {
            source: source.into(),
            norm,
            manifest: None,
        }
    }

    /// Tab-separated `source, norm[, manifest]`.
    pub(crate) fn encode(&self) -> Result<String> {
        if self.source.chars().any(|c| c == '\t' || c == '\n' || c == '\r') {
            return Err(Error::format(format!(
                "provenance source {:?} contains a tab or newline",
                self.source
            )));
        }
        let mut line = format!("{}\t{}", self.source, self.norm.encode());
        if let Some(m) = &self.manifest {
            line.push('\t');
            line.push_str(m);
        }
        Ok(line)
    }

    pub(crate) fn decode(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[..] {
            [source, norm] => Ok(Self::new(source, AppliedNorm::decode(norm)?)),
            [source, norm, manifest] => Ok(Self {
                source: source.into(),
                norm: AppliedNorm::decode(norm)?,
                manifest: Some(manifest.into()),
            }),
            _ => Err(Error::format(format!("malformed provenance line {line:?}"))),
        }
    }
}

/// `C x H x W` channel stack, stored channel-major as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedTensor {
    width: usize,
    height: usize,
    transform: Option<GeoTransform>,
    channels: Vec<Vec<f32>>,
    provenance: Vec<Provenance>,
}

impl FusedTensor {
    pub fn new(
        width: usize,
        height: usize,
        transform: Option<GeoTransform>,
        channels: Vec<Vec<f32>>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        if channels.len() != provenance.len() {
            return Err(Error::shape(format!(
                "{} channels but {} provenance records",
                channels.len(),
                provenance.len()
            )));
        }
        if let Some(i) = channels.iter().position(|c| c.len() != width * height) {
            return Err(Error::shape(format!("channel {i} does not have {width}x{height} values")));
        }
        Ok(Self {
            width,
            height,
            transform,
            channels,
            provenance,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn transform(&self) -> Option<&GeoTransform> {
        self.transform.as_ref()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Channel-major flat copy of all values.
    pub fn to_chw(&self) -> Vec<f32> {
        self.channels.concat()
    }

    /// Appends the channels of `other`, which must share the footprint.
    pub fn concat(mut self, other: FusedTensor) -> Result<Self> {
        if other.width != self.width || other.height != self.height || other.transform != self.transform {
            return Err(Error::Alignment("tensors differ in footprint".into()));
        }
        self.channels.extend(other.channels);
        self.provenance.extend(other.provenance);
        Ok(self)
    }
}

/// One input layer for [`stack_channels`].
#[derive(Debug, Clone)]
pub struct StackInput<'a> {
    pub name: String,
    pub grid: &'a Grid,
    pub rule: NormRule,
}

impl<'a> StackInput<'a> {
    pub fn new(name: impl Into<String>, grid: &'a Grid, rule: NormRule) -> Self {
        Self {
            name: name.into(),
            grid,
            rule,
        }
    }
}

fn normalize(index: usize, input: &StackInput) -> Result<(Vec<f32>, AppliedNorm)> {
    let g = input.grid;
    if g.has_nodata_cells() {
        return Err(Error::data(format!(
            "input {index} ('{}') has nodata cells; fill them before stacking",
            input.name
        )));
    }
    let (applied, scale, offset) = match input.rule {
        NormRule::Identity => (AppliedNorm::Identity, 1.0, 0.0),
        NormRule::CategoricalRgb => (AppliedNorm::CategoricalRgb, 1.0, 0.0),
        NormRule::Byte255 => {
            if let Some(v) = g.data().iter().find(|v| !(0.0..=255.0).contains(*v)) {
                return Err(Error::data(format!(
                    "input {index} ('{}') value {v} outside [0, 255] for byte255",
                    input.name
                )));
            }
            (AppliedNorm::Byte255, 1.0 / 255.0, 0.0)
        }
        NormRule::MinMax => {
            let (min, max) = g.value_range().expect("grid is non-empty without nodata");
            if !(min < max) {
                return Err(Error::DegenerateRange(format!(
                    "input {index} ('{}') is constant ({min}); minmax needs min < max",
                    input.name
                )));
            }
            (AppliedNorm::MinMax { min, max }, 1.0 / (max - min), -min)
        }
    };
    let values = g
        .data()
        .iter()
        .map(|&v| match applied {
            AppliedNorm::Byte255 => (v / 255.0) as f32,
            _ => ((v + offset) * scale) as f32,
        })
        .collect();
    Ok((values, applied))
}

/// STACK: normalizes each input independently and concatenates in order.
pub fn stack_channels(inputs: &[StackInput]) -> Result<FusedTensor> {
    let first = inputs.first().ok_or_else(|| Error::shape("stack needs at least one input"))?;
    for (i, inp) in inputs.iter().enumerate().skip(1) {
        if !inp.grid.same_footprint(first.grid) {
            return Err(Error::Alignment(format!(
                "input {i} ('{}') is not aligned with input 0 ('{}')",
                inp.name, first.name
            )));
        }
    }
    let mut channels = Vec::with_capacity(inputs.len());
    let mut provenance = Vec::with_capacity(inputs.len());
    for (i, inp) in inputs.iter().enumerate() {
        let (values, applied) = normalize(i, inp)?;
        channels.push(values);
        provenance.push(Provenance::new(inp.name.clone(), applied));
    }
    FusedTensor::new(
        first.grid.width(),
        first.grid.height(),
        Some(*first.grid.transform()),
        channels,
        provenance,
    )
}

/// PROC-STACK: optical channels, then prior channels (identity), then extras.
/// Prior channels are tagged with the prior's manifest hash.
pub fn proc_stack(optical: &[StackInput], prior: &PriorStack, extra: &[StackInput]) -> Result<FusedTensor> {
    let manifest = prior
        .manifest()
        .map(|m| m.hash())
        .unwrap_or_else(|| "unrecorded".to_string());
    let prior_inputs: Vec<StackInput> = prior
        .channels()
        .iter()
        .enumerate()
        .map(|(l, g)| StackInput::new(format!("prior:class{l}"), g, NormRule::Identity))
        .collect();
    let all: Vec<StackInput> = optical
        .iter()
        .cloned()
        .chain(prior_inputs)
        .chain(extra.iter().cloned())
        .collect();
    let mut tensor = stack_channels(&all)?;
    for p in &mut tensor.provenance[optical.len()..optical.len() + prior.n_fine()] {
        p.manifest = Some(manifest.clone());
    }
    Ok(tensor)
}
