//! Regular-grid terrain: bilinear sampling, kernel smoothing for the
//! giant walking ground, and ray/terrain intersection.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Smoothing kernel shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Box,
}

/// Single-valued elevation grid. Heights are row-major with x fastest:
/// `heights[iz * nx + ix]`. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    origin: [f64; 2],
    cell_size: f64,
    nx: usize,
    nz: usize,
    heights: Vec<f64>,
}

impl HeightField {
    pub fn new(
        origin: [f64; 2],
        cell_size: f64,
        nx: usize,
        nz: usize,
        heights: Vec<f64>,
    ) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::Domain(format!(
                "cell_size must be > 0, got {cell_size}"
            )));
        }
        if nx < 2 || nz < 2 {
            return Err(Error::Domain(format!(
                "grid must be at least 2x2, got {nx}x{nz}"
            )));
        }
        if heights.len() != nx * nz {
            return Err(Error::Domain(format!(
                "expected {} heights for a {nx}x{nz} grid, got {}",
                nx * nz,
                heights.len()
            )));
        }
        if let Some(h) = heights.iter().find(|h| !h.is_finite()) {
            return Err(Error::Domain(format!("non-finite height {h}")));
        }
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite origin".into()));
        }
        Ok(Self {
            origin,
            cell_size,
            nx,
            nz,
            heights,
        })
    }

    /// Constant-height field, mostly for tests and flat scenarios.
    pub fn flat(origin: [f64; 2], cell_size: f64, nx: usize, nz: usize, h: f64) -> Result<Self> {
        Self::new(origin, cell_size, nx, nz, vec![h; nx * nz])
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height_at_node(&self, ix: usize, iz: usize) -> f64 {
        self.heights[iz * self.nx + ix]
    }

    /// Closed sampling rectangle `[min, max]` in virtual xz.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let max = [
            self.origin[0] + (self.nx - 1) as f64 * self.cell_size,
            self.origin[1] + (self.nz - 1) as f64 * self.cell_size,
        ];
        (self.origin, max)
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let (min, max) = self.bounds();
        x >= min[0] && x <= max[0] && z >= min[1] && z <= max[1]
    }

    pub fn min_height(&self) -> f64 {
        self.heights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_height(&self) -> f64 {
        self.heights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation of the four surrounding nodes; exact at nodes.
    pub fn sample_height(&self, x: f64, z: f64) -> Result<f64> {
        if !self.contains(x, z) {
            return Err(Error::Domain(format!(
                "sample at ({x}, {z}) is outside the heightfield rectangle {:?}..{:?}",
                self.bounds().0,
                self.bounds().1
            )));
        }
        let fx = (x - self.origin[0]) / self.cell_size;
        let fz = (z - self.origin[1]) / self.cell_size;
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iz = (fz.floor() as usize).min(self.nz - 2);
        let tx = fx - ix as f64;
        let tz = fz - iz as f64;
        let h00 = self.height_at_node(ix, iz);
        let h10 = self.height_at_node(ix + 1, iz);
        let h01 = self.height_at_node(ix, iz + 1);
        let h11 = self.height_at_node(ix + 1, iz + 1);
        Ok(h00 * (1.0 - tx) * (1.0 - tz)
            + h10 * tx * (1.0 - tz)
            + h01 * (1.0 - tx) * tz
            + h11 * tx * tz)
    }

    /// Convolves heights with a gaussian (sigma = radius/2, truncated at
    /// 3 sigma) or box (half-width = radius) kernel. Weights are
    /// renormalized where the kernel overhangs the grid edge, so constants
    /// are preserved and no off-map heights are invented. Radius 0 returns
    /// an identical copy.
    pub fn smooth(&self, radius: f64, kind: KernelKind) -> Result<HeightField> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::Domain(format!(
                "smoothing radius must be >= 0, got {radius}"
            )));
        }
        let weights = kernel_weights(radius, self.cell_size, kind);
        if weights.len() == 1 {
            return Ok(self.clone());
        }
        // The kernel is a product w(i)*w(j) and edge clipping keeps a
        // rectangular support, so renormalization factorizes per axis and
        // the two separable passes are exact.
        let half = weights.len() / 2;
        let mut pass_x = vec![0.0; self.heights.len()];
        for iz in 0..self.nz {
            let row = &self.heights[iz * self.nx..(iz + 1) * self.nx];
            for ix in 0..self.nx {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let j = ix as isize + k as isize - half as isize;
                    if j >= 0 && (j as usize) < self.nx {
                        acc += w * row[j as usize];
                        wsum += w;
                    }
                }
                pass_x[iz * self.nx + ix] = acc / wsum;
            }
        }
        let mut out = vec![0.0; self.heights.len()];
        for ix in 0..self.nx {
            for iz in 0..self.nz {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let j = iz as isize + k as isize - half as isize;
                    if j >= 0 && (j as usize) < self.nz {
                        acc += w * pass_x[j as usize * self.nx + ix];
                        wsum += w;
                    }
                }
                out[iz * self.nx + ix] = acc / wsum;
            }
        }
        HeightField::new(self.origin, self.cell_size, self.nx, self.nz, out)
    }

    /// First intersection of a ray with the terrain surface, or `None` if
    /// the ray leaves the field without hitting. Marches at most
    /// `cell_size / 2` along the ray and refines brackets by bisection to
    /// within 1e-6 m of ray parameter.
    pub fn raycast(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<[f64; 3]> {
        let span = match self.ray_span(origin, dir) {
            Some(s) => s,
            None => return None,
        };
        let (t_enter, t_exit) = span;
        let step = self.cell_size / 2.0;
        let above = |t: f64| -> Option<f64> {
            let p = ray_point(origin, dir, t);
            self.sample_height(p[0], p[2]).ok().map(|h| p[1] - h)
        };
        let mut t_prev = t_enter;
        let mut f_prev = above(t_prev)?;
        if f_prev <= 0.0 {
            // Started at or below the surface inside the field.
            return Some(ray_point(origin, dir, t_prev));
        }
        let mut t = t_prev;
        while t < t_exit {
            t = (t + step).min(t_exit);
            let f = match above(t) {
                Some(f) => f,
                None => return None,
            };
            if f <= 0.0 {
                let t_hit = bisect(|s| above(s).unwrap_or(1.0), t_prev, t, 1e-6);
                return Some(ray_point(origin, dir, t_hit));
            }
            t_prev = t;
            f_prev = f;
        }
        let _ = f_prev;
        None
    }

    /// Ray-parameter interval over which the ray's xz projection lies in
    /// the field rectangle, intersected with t >= 0. Also rejects rays
    /// that can never reach the terrain's height range.
    fn ray_span(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<(f64, f64)> {
        let (min, max) = self.bounds();
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for (o, d, lo, hi) in [
            (origin[0], dir[0], min[0], max[0]),
            (origin[2], dir[2], min[1], max[1]),
        ] {
            if d.abs() < 1e-15 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        if t0 > t1 {
            return None;
        }
        // Clip vertically against the height band. Height along a straight
        // ray is monotone, so a descending ray cannot hit after passing
        // below the minimum and an ascending one cannot hit after passing
        // above the maximum.
        let (hmin, hmax) = (self.min_height(), self.max_height());
        let y_at = |t: f64| origin[1] + dir[1] * t;
        if dir[1] > 1e-15 {
            if y_at(t0) > hmax {
                return None;
            }
            t1 = t1.min((hmax - origin[1]) / dir[1]);
        } else if dir[1] < -1e-15 {
            if y_at(t0) < hmin {
                return None;
            }
            // overshoot slightly so a grazing hit at the minimum height
            // still brackets a sign change
            t1 = t1.min((hmin - 1e-9 - origin[1]) / dir[1]);
        } else if origin[1] > hmax {
            return None;
        }
        if t1 < t0 {
            return None;
        }
        Some((t0, t1))
    }

    /// Serializes to the structured text format (see `parse`).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "heightfield v1");
        let _ = writeln!(s, "origin {:.17e} {:.17e}", self.origin[0], self.origin[1]);
        let _ = writeln!(s, "cell_size {:.17e}", self.cell_size);
        let _ = writeln!(s, "dims {} {}", self.nx, self.nz);
        for iz in 0..self.nz {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| format!("{:.17e}", self.height_at_node(ix, iz)))
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    /// Parses the structured text format:
    /// ```text
    /// heightfield v1
    /// origin <x> <z>
    /// cell_size <s>
    /// dims <nx> <nz>
    /// <nx*nz heights, row-major, whitespace separated>
    /// ```
    pub fn parse(text: &str, path: &str) -> Result<HeightField> {
        fn err(path: &str, m: String) -> Error {
            Error::Parse {
                path: path.to_string(),
                message: m,
            }
        }
        fn expect<'a>(
            tokens: &mut impl Iterator<Item = &'a str>,
            want: &str,
            path: &str,
        ) -> Result<()> {
            match tokens.next() {
                Some(t) if t == want => Ok(()),
                other => Err(err(path, format!("expected '{want}', got {other:?}"))),
            }
        }
        fn num<'a>(
            tokens: &mut impl Iterator<Item = &'a str>,
            name: &str,
            path: &str,
        ) -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| err(path, format!("missing {name}")))?
                .parse::<f64>()
                .map_err(|e| err(path, format!("bad {name}: {e}")))
        }
        let mut tokens = text.split_whitespace();
        expect(&mut tokens, "heightfield", path)?;
        expect(&mut tokens, "v1", path)?;
        expect(&mut tokens, "origin", path)?;
        let ox = num(&mut tokens, "origin x", path)?;
        let oz = num(&mut tokens, "origin z", path)?;
        expect(&mut tokens, "cell_size", path)?;
        let cell = num(&mut tokens, "cell_size", path)?;
        expect(&mut tokens, "dims", path)?;
        let nx = num(&mut tokens, "nx", path)? as usize;
        let nz = num(&mut tokens, "nz", path)? as usize;
        let mut heights = Vec::with_capacity(nx * nz);
        for t in tokens {
            heights.push(
                t.parse::<f64>()
                    .map_err(|e| err(path, format!("bad height: {e}")))?,
            );
        }
        HeightField::new([ox, oz], cell, nx, nz, heights)
    }

    pub fn load(path: &Path) -> Result<HeightField> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// 1D kernel weights for the given spatial radius, symmetric, odd length.
fn kernel_weights(radius: f64, cell_size: f64, kind: KernelKind) -> Vec<f64> {
    let half_extent = match kind {
        // sigma = radius/2, truncated at 3 sigma
        KernelKind::Gaussian => 1.5 * radius,
        KernelKind::Box => radius,
    };
    let half = (half_extent / cell_size).floor() as usize;
    if half == 0 {
        return vec![1.0];
    }
    let mut w = Vec::with_capacity(2 * half + 1);
    for k in -(half as isize)..=(half as isize) {
        let d = k as f64 * cell_size;
        let weight = match kind {
            KernelKind::Gaussian => {
                let sigma = radius / 2.0;
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
            KernelKind::Box => 1.0,
        };
        w.push(weight);
    }
    w
}

fn ray_point(origin: [f64; 3], dir: [f64; 3], t: f64) -> [f64; 3] {
    [
        origin[0] + dir[0] * t,
        origin[1] + dir[1] * t,
        origin[2] + dir[2] * t,
    ]
}

/// Bisects `f` (positive at `lo`, non-positive at `hi`) to within `tol`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..80 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Seeded value-noise terrain for tests and procedural scenarios.
/// Smoothstep-interpolated lattice noise, two octaves.
pub fn generate_value_noise(
    origin: [f64; 2],
    cell_size: f64,
    nx: usize,
    nz: usize,
    seed: u64,
    amplitude: f64,
    wavelength: f64,
) -> Result<HeightField> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be > 0, got {wavelength}"
        )));
    }
    if amplitude < 0.0 {
        return Err(Error::Domain(format!(
            "amplitude must be >= 0, got {amplitude}"
        )));
    }
    let lattice = |ix: i64, iz: i64, salt: u64| -> f64 {
        // splitmix64 over the cell coordinates; uniform in [-1, 1]
        let mut h = seed ^ salt;
        h = h.wrapping_add((ix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = h.wrapping_add((iz as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
        let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    let noise = |x: f64, z: f64, wl: f64, salt: u64| -> f64 {
        let fx = x / wl;
        let fz = z / wl;
        let ix = fx.floor() as i64;
        let iz = fz.floor() as i64;
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let tx = smooth(fx - ix as f64);
        let tz = smooth(fz - iz as f64);
        let v00 = lattice(ix, iz, salt);
        let v10 = lattice(ix + 1, iz, salt);
        let v01 = lattice(ix, iz + 1, salt);
        let v11 = lattice(ix + 1, iz + 1, salt);
        v00 * (1.0 - tx) * (1.0 - tz)
            + v10 * tx * (1.0 - tz)
            + v01 * (1.0 - tx) * tz
            + v11 * tx * tz
    };
    let mut heights = Vec::with_capacity(nx * nz);
    for iz in 0..nz {
        for ix in 0..nx {
            let x = origin[0] + ix as f64 * cell_size;
            let z = origin[1] + iz as f64 * cell_size;
            let v = noise(x, z, wavelength, 0) + 0.5 * noise(x, z, wavelength / 2.0, 1);
            heights.push(amplitude * v / 1.5);
        }
    }
    HeightField::new(origin, cell_size, nx, nz, heights)
}
