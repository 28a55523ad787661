use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Published subset fractions and their epoch counts.
pub const EPOCH_TABLE: [(f64, u32); 9] = [
    (1.00, 7),
    (0.75, 9),
    (0.50, 14),
    (0.35, 20),
    (0.20, 35),
    (0.10, 70),
    (0.05, 140),
    (0.02, 350),
    (0.01, 700),
];

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("fraction {fraction} outside (0, 1]")));
    }
    Ok(())
}

/// Table value for the published fractions, otherwise `round(7 / fraction)`
/// and never fewer than 7.
pub fn epoch_schedule(fraction: f64) -> Result<u32> {
    check_fraction(fraction)?;
    if let Some(&(_, e)) = EPOCH_TABLE.iter().find(|(f, _)| (f - fraction).abs() < 1e-9) {
        return Ok(e);
    }
    Ok(((7.0 / fraction).round() as u32).max(7))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPlan {
    pub n: usize,
    pub fraction: f64,
    pub seed: u64,
    /// Sorted, unique, all below `n`.
    pub indices: Vec<usize>,
    pub epochs: u32,
}

impl SubsetPlan {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n={} fraction={} seed={} epochs={}\nindex\n",
            self.n, self.fraction, self.seed, self.epochs
        );
        for i in &self.indices {
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn subset_size(n: usize, fraction: f64) -> Result<usize> {
    check_fraction(fraction)?;
    if n == 0 {
        return Err(Error::param("cannot sample from an empty set"));
    }
    Ok(((fraction * n as f64).round() as usize).clamp(1, n))
}

/// Seeded Fisher-Yates shuffle of `0..n`, first `k` kept, sorted ascending.
pub fn subset_sample(n: usize, fraction: f64, seed: u64) -> Result<SubsetPlan> {
    let k = subset_size(n, fraction)?;
    let mut all: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut all);
    let mut indices = all[..k].to_vec();
    indices.sort_unstable();
    Ok(SubsetPlan {
        n,
        fraction,
        seed,
        indices,
        epochs: epoch_schedule(fraction)?,
    })
}
