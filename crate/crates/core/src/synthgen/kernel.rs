//! Radar texture kernels: anisotropic Gaussian stamps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest allowed kernel peak; a stamped object always keeps at least its
/// centre pixel above the postprocessing dark-pixel threshold.
pub const MIN_KERNEL_PEAK: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// `(height, width)`, both odd.
    pub size: (usize, usize),
    pub orientation_deg: f64,
    pub peak: f64,
    /// `(major, minor)` standard deviations in pixels.
    pub sigma: (f64, f64),
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.size;
        let (major, minor) = self.sigma;
        let err = |m: &str| Err(Error::InvalidKernel(m.to_string()));
        if h % 2 == 0 || w % 2 == 0 {
            return err("kernel sides must be odd");
        }
        if !(0.0..180.0).contains(&self.orientation_deg) {
            return err("orientation must lie in [0, 180)");
        }
        if !(MIN_KERNEL_PEAK..=255.0).contains(&self.peak) {
            return err("peak must lie in [150, 255]");
        }
        if !(minor > 0.0 && major >= minor && major.is_finite()) {
            return err("sigmas must satisfy major >= minor > 0");
        }
        Ok(())
    }

    /// Half of the pixel footprint diagonal, an upper bound on the distance
    /// from the centre pixel's centre to any point of the stamp.
    pub fn half_diagonal(&self) -> f64 {
        let (h, w) = self.size;
        (w as f64 / 2.0).hypot(h as f64 / 2.0)
    }
}

/// Rendered kernel, row-major, centre at `((w - 1) / 2, (h - 1) / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stamp {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Stamp {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `peak * exp(-(u^2 / sx^2 + v^2 / sy^2) / 2)` with `(u, v)` the pixel
/// offset in the frame rotated by `orientation_deg`.
pub fn render_kernel(spec: &KernelSpec) -> Result<Stamp> {
    spec.validate()?;
    let (h, w) = spec.size;
    let (cx, cy) = (((w - 1) / 2) as f64, ((h - 1) / 2) as f64);
    let (sin, cos) = spec.orientation_deg.to_radians().sin_cos();
    let (sx2, sy2) = (spec.sigma.0 * spec.sigma.0, spec.sigma.1 * spec.sigma.1);
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let u = dx * cos + dy * sin;
            let v = -dx * sin + dy * cos;
            values.push(spec.peak * (-0.5 * (u * u / sx2 + v * v / sy2)).exp());
        }
    }
    Ok(Stamp {
        width: w,
        height: h,
        values,
    })
}

/// Sampling ranges for random kernels (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRanges {
    pub size_px: (usize, usize),
    pub peak: (f64, f64),
    /// Major sigma as a fraction of the longer kernel side.
    pub sigma_major_frac: (f64, f64),
    /// Minor sigma as a fraction of the major one.
    pub minor_ratio: (f64, f64),
}

impl KernelRanges {
    pub fn platform() -> Self {
        Self {
            size_px: (9, 31),
            peak: (MIN_KERNEL_PEAK, 255.0),
            sigma_major_frac: (0.15, 0.3),
            minor_ratio: (0.5, 1.0),
        }
    }

    pub fn turbine() -> Self {
        Self {
            size_px: (5, 15),
            ..Self::platform()
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<KernelSpec> {
        let (lo, hi) = self.size_px;
        let odd_lo = lo | 1;
        if odd_lo > hi {
            return Err(Error::InvalidKernel(format!("no odd size in {lo}..={hi}")));
        }
        let n_odd = (hi - odd_lo) / 2 + 1;
        let mut side = || odd_lo + 2 * rng.random_range(0..n_odd);
        let size = (side(), side());
        let major = size.0.max(size.1) as f64 * draw(rng, self.sigma_major_frac);
        let minor = major * draw(rng, self.minor_ratio);
        let spec = KernelSpec {
            size,
            orientation_deg: rng.random_range(0.0..180.0),
            peak: draw(rng, self.peak),
            sigma: (major, minor),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(size: (usize, usize), orientation: f64, sigma: (f64, f64)) -> KernelSpec {
        KernelSpec {
            size,
            orientation_deg: orientation,
            peak: 200.0,
            sigma,
        }
    }

    #[test]
    fn unit_kernel_is_peak() {
        let s = render_kernel(&spec((1, 1), 0.0, (1.0, 1.0))).unwrap();
        assert_eq!(s.values, vec![200.0]);
    }

    #[test]
    fn isotropic_kernel_ignores_orientation() {
        let a = render_kernel(&spec((11, 15), 0.0, (3.0, 3.0))).unwrap();
        for o in [17.0, 45.0, 90.0, 179.0] {
            let b = render_kernel(&spec((11, 15), o, (3.0, 3.0))).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn peak_at_centre() {
        let s = render_kernel(&spec((9, 21), 33.0, (5.0, 2.0))).unwrap();
        let centre = s.get(10, 4);
        assert_eq!(centre, 200.0);
        assert!(s.values.iter().all(|&v| v <= centre));
    }

    #[test]
    fn orientation_rotates_major_axis() {
        let s = render_kernel(&spec((21, 21), 90.0, (6.0, 2.0))).unwrap();
        // major axis now vertical
        assert!(s.get(10, 16) > s.get(16, 10));
    }

    #[test]
    fn invalid_specs() {
        assert!(render_kernel(&spec((2, 3), 0.0, (1.0, 1.0))).is_err());
        assert!(render_kernel(&spec((3, 3), 180.0, (1.0, 1.0))).is_err());
        assert!(render_kernel(&spec((3, 3), 0.0, (1.0, 2.0))).is_err());
        let mut dim = spec((3, 3), 0.0, (1.0, 1.0));
        dim.peak = 149.0;
        assert!(render_kernel(&dim).is_err());
    }

    #[test]
    fn sampled_kernels_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ranges in [KernelRanges::platform(), KernelRanges::turbine()] {
            for _ in 0..200 {
                let k = ranges.sample(&mut rng).unwrap();
                assert!(k.size.0 >= ranges.size_px.0 && k.size.0 <= ranges.size_px.1);
                assert!(k.size.1 % 2 == 1);
            }
        }
    }

    proptest! {
        #[test]
        fn energy_increases_with_sigma(
            h in 1usize..8, w in 1usize..8, o in 0.0..180.0f64,
            minor in 0.5..3.0f64, extra in 0.0..3.0f64, bump in 0.05..2.0f64,
        ) {
            let size = (2 * h + 1, 2 * w + 1);
            let major = minor + extra;
            let base = render_kernel(&spec(size, o, (major, minor))).unwrap().sum();
            let wider = render_kernel(&spec(size, o, (major + bump, minor))).unwrap().sum();
            prop_assert!(wider > base);
            let fatter_minor = (minor + bump).min(major);
            if fatter_minor > minor {
                let fatter = render_kernel(&spec(size, o, (major, fatter_minor))).unwrap().sum();
                prop_assert!(fatter > base);
            }
        }
    }
}
