use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Output width of a location encoder.
pub const LOCATION_DIM: usize = 256;

/// Angular frequency scale of the stub, in radians of the unit sphere.
const STUB_BANDWIDTH: f64 = 2.0;
const STUB_SEED_SALT: u64 = 0x5A7C_11F0_0000_0001;

/// Maps a coordinate to a fixed-width embedding.
///
/// A frozen encoder must return bitwise-identical vectors for identical
/// coordinates.
pub trait LocationEncoder: Send + Sync {
    fn encode(&self, lat: f64, lon: f64) -> Result<Vec<f64>>;
    fn frozen(&self) -> bool;
    fn descriptor(&self) -> String;
}

pub fn check_coordinates(lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Error::param(format!("latitude {lat} outside [-90, 90]")));
    }
    if !(lon > -180.0 && lon <= 180.0) {
        return Err(Error::param(format!("longitude {lon} outside (-180, 180]")));
    }
    Ok(())
}

/// Deterministic stand-in for a pretrained encoder.
///
/// Random Fourier features of the point on the unit sphere: 128 seeded
/// frequency vectors `w_j ~ N(0, s^2 I)` give the pair
/// `(sin(w_j . u), cos(w_j . u))`. The inner product of two embeddings is then
/// the mean of `cos(w_j . (u - v))`, a smooth kernel of chordal distance with a
/// length scale of roughly 30 degrees.
#[derive(Debug, Clone)]
pub struct StubLocationEncoder {
    seed: u64,
    freqs: Vec<[f64; 3]>,
}

impl StubLocationEncoder {
    pub fn new(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed ^ STUB_SEED_SALT);
        let freqs = (0..LOCATION_DIM / 2)
            .map(|_| {
                [
                    STUB_BANDWIDTH * rng.next_gaussian(),
                    STUB_BANDWIDTH * rng.next_gaussian(),
                    STUB_BANDWIDTH * rng.next_gaussian(),
                ]
            })
            .collect();
        Self { seed, freqs }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl LocationEncoder for StubLocationEncoder {
    fn encode(&self, lat: f64, lon: f64) -> Result<Vec<f64>> {
        check_coordinates(lat, lon)?;
        let (phi, lam) = (lat.to_radians(), lon.to_radians());
        let u = [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()];
        let scale = 1.0 / ((LOCATION_DIM / 2) as f64).sqrt();
        let mut out = Vec::with_capacity(LOCATION_DIM);
        for w in &self.freqs {
            let a = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
            out.push(a.sin() * scale);
            out.push(a.cos() * scale);
        }
        Ok(out)
    }

    fn frozen(&self) -> bool {
        true
    }

    fn descriptor(&self) -> String {
        format!("stub-rff/1 seed={}", self.seed)
    }
}

pub fn encode_location_stub(lat: f64, lon: f64, seed: u64) -> Result<Vec<f64>> {
    StubLocationEncoder::new(seed).encode(lat, lon)
}
