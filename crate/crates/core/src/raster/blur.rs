use rayon::prelude::*;

use super::{Grid, GridKind};
use crate::{Error, Result};

/// Sampled, truncated and renormalized 2-D Gaussian.
///
/// The kernel is the outer product of a normalized 1-D profile, so the 2-D
/// weights also sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    radius: usize,
    profile: Vec<f64>,
}

impl Kernel {
    /// Gaussian with standard deviation `sigma` pixels, truncated at `ceil(3 sigma)`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param(format!("blur sigma must be > 0, got {sigma}")));
        }
        let radius = (3.0 * sigma).ceil() as usize;
        let denom = 2.0 * sigma * sigma;
        let raw: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let d = i as f64 - radius as f64;
                (-d * d / denom).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            radius,
            profile: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn size(&self) -> usize {
        2 * self.radius + 1
    }

    /// Normalized 1-D profile of length `2 * radius + 1`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Row-major `(2r+1)^2` weights.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.size();
        let mut w = Vec::with_capacity(n * n);
        for dy in 0..n {
            for dx in 0..n {
                w.push(self.profile[dy] * self.profile[dx]);
            }
        }
        w
    }

    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.profile[(dx + r) as usize] * self.profile[(dy + r) as usize]
    }
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`),
/// repeated as often as needed for any offset.
pub fn reflect_index(i: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Gaussian smoothing of a continuous grid with reflect padding.
///
/// Nodata cells are excluded from every weighted sum and the remaining
/// weights renormalized; nodata cells themselves stay nodata.
pub fn gaussian_blur(grid: &Grid, sigma: f64) -> Result<Grid> {
    if grid.kind() != GridKind::Continuous {
        return Err(Error::Kind(
            "gaussian_blur requires a continuous grid; class ids cannot be averaged".into(),
        ));
    }
    let kernel = Kernel::gaussian(sigma)?;
    let data = if grid.has_nodata_cells() {
        blur_masked(grid, &kernel)
    } else {
        blur_separable(grid.data(), grid.width(), grid.height(), &kernel)
    };
    grid.with_data(data, GridKind::Continuous)
}

fn blur_separable(src: &[f64], w: usize, h: usize, kernel: &Kernel) -> Vec<f64> {
    let r = kernel.radius() as isize;
    let profile = kernel.profile();

    let mut horiz = vec![0.0; w * h];
    horiz
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(row, out)| {
            let line = &src[row * w..(row + 1) * w];
            for (col, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &wk) in profile.iter().enumerate() {
                    let c = reflect_index(col as isize + k as isize - r, w);
                    acc += wk * line[c];
                }
                *o = acc;
            }
        });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for (col, o) in line.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &wk) in profile.iter().enumerate() {
                let rr = reflect_index(row as isize + k as isize - r, h);
                acc += wk * horiz[rr * w + col];
            }
            *o = acc;
        }
    });
    out
}

fn blur_masked(grid: &Grid, kernel: &Kernel) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let r = kernel.radius() as isize;
    let src = grid.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for (col, o) in line.iter_mut().enumerate() {
            let idx = row * w + col;
            if grid.is_nodata(idx) {
                *o = src[idx];
                continue;
            }
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for dy in -r..=r {
                let rr = reflect_index(row as isize + dy, h);
                for dx in -r..=r {
                    let cc = reflect_index(col as isize + dx, w);
                    let v = src[rr * w + cc];
                    if grid.is_nodata_value(v) {
                        continue;
                    }
                    let wk = kernel.weight(dx, dy);
                    acc += wk * v;
                    wsum += wk;
                }
            }
            // The center cell is valid, so wsum > 0.
            *o = acc / wsum;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    fn grid(w: usize, h: usize, data: Vec<f64>) -> Grid {
        Grid::new(
            w,
            h,
            GeoTransform::north_up(0.0, 0.0, 1.0),
            data,
            None,
            GridKind::Continuous,
        )
        .unwrap()
    }

    /// Direct 2-D convolution with explicitly reflected borders.
    fn direct_oracle(src: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
        let r = (3.0 * sigma).ceil() as isize;
        let mut ker = vec![];
        let mut total = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let v = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                ker.push(v);
                total += v;
            }
        }
        let refl = |i: isize, n: isize| -> usize {
            let mut i = i;
            loop {
                if i < 0 {
                    i = -i - 1;
                } else if i >= n {
                    i = 2 * n - 1 - i;
                } else {
                    return i as usize;
                }
            }
        };
        let mut out = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.0;
                let mut k = 0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = refl(x + dx, w as isize);
                        let sy = refl(y + dy, h as isize);
                        acc += ker[k] / total * src[sy * w + sx];
                        k += 1;
                    }
                }
                out[y as usize * w + x as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn kernel_sums_to_one() {
        for sigma in [0.5, 1.0, 2.0, 5.0] {
            let k = Kernel::gaussian(sigma).unwrap();
            let s: f64 = k.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "sigma {sigma}: {s}");
            assert_eq!(k.radius(), (3.0 * sigma).ceil() as usize);
        }
    }

    #[test]
    fn kernel_has_dihedral_symmetry() {
        let k = Kernel::gaussian(1.3).unwrap();
        let r = k.radius() as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                let w = k.weight(dx, dy);
                assert_eq!(w, k.weight(-dx, dy));
                assert_eq!(w, k.weight(dx, -dy));
                assert_eq!(w, k.weight(dy, dx));
            }
        }
    }

    #[test]
    fn reflect_index_matches_mirror_rule() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 3)).collect();
        assert_eq!(got, vec![2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1]);
    }

    #[test]
    fn constant_grid_preserved() {
        let g = grid(9, 9, vec![5.0; 81]);
        let out = gaussian_blur(&g, 1.0).unwrap();
        for &v in out.data() {
            assert!((v - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_reproduces_kernel() {
        let mut data = vec![0.0; 81];
        data[40] = 1.0;
        let out = gaussian_blur(&grid(9, 9, data.clone()), 1.0).unwrap();
        let oracle = direct_oracle(&data, 9, 9, 1.0);
        let k = Kernel::gaussian(1.0).unwrap();
        assert_eq!(k.size(), 7);
        for dy in -3isize..=3 {
            for dx in -3isize..=3 {
                let idx = ((4 + dy) * 9 + 4 + dx) as usize;
                assert!((out.data()[idx] - k.weight(dx, dy)).abs() < 1e-15);
                assert!((out.data()[idx] - oracle[idx]).abs() < 1e-15);
            }
        }
        let max = out.data().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, out.data()[40]);
    }

    #[test]
    fn ramp_matches_reflected_brute_force() {
        let data = vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0, 0.0, 1.0, 2.0];
        let out = gaussian_blur(&grid(3, 3, data.clone()), 1.0).unwrap();
        let oracle = direct_oracle(&data, 3, 3, 1.0);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn nodata_excluded_and_renormalized() {
        let t = GeoTransform::north_up(0.0, 0.0, 1.0);
        let mut data = vec![3.0; 25];
        data[12] = -9999.0;
        data[0] = -9999.0;
        let g = Grid::new(5, 5, t, data, Some(-9999.0), GridKind::Continuous).unwrap();
        let out = gaussian_blur(&g, 1.0).unwrap();
        assert_eq!(out.data()[12], -9999.0);
        assert_eq!(out.data()[0], -9999.0);
        for (i, &v) in out.data().iter().enumerate() {
            if i != 0 && i != 12 {
                assert!((v - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parameter_and_kind_errors() {
        let g = grid(2, 2, vec![0.0; 4]);
        assert!(matches!(gaussian_blur(&g, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(gaussian_blur(&g, -1.0), Err(Error::Parameter(_))));
        let c = Grid::new(
            2,
            2,
            GeoTransform::north_up(0.0, 0.0, 1.0),
            vec![0.0, 1.0, 1.0, 0.0],
            None,
            GridKind::Categorical,
        )
        .unwrap();
        assert!(matches!(gaussian_blur(&c, 1.0), Err(Error::Kind(_))));
    }
}
