//! Seeded synthetic sources and measurement draws.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.
//! Per-work-item seeds come from [`derive_seed`], so results never depend on
//! the order in which items are processed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, CVector, C64, ZERO};

pub type SeededRng = Xoshiro256PlusPlus;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the work item addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Circular complex Gaussian with unit variance.
fn cnormal<R: Rng>(rng: &mut R) -> C64 {
    C64::new(normal(rng), normal(rng)) * core::f64::consts::FRAC_1_SQRT_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioParams {
    pub n: usize,
    /// Number of damped partials.
    pub components: usize,
    /// Peak amplitude of the loudest partial.
    pub amplitude: f64,
    /// Geometric amplitude ratio between successive partials.
    pub amplitude_ratio: f64,
    /// Frequency band in DCT bins.
    pub min_bin: f64,
    pub max_bin: f64,
    /// Largest total amplitude decay over the clip, in e-folds.
    pub max_decay: f64,
    /// Integer bins with the phase of the matching DCT atom.
    pub on_grid: bool,
}

impl Default for AudioParams {
    fn default() -> Self {
        AudioParams {
            n: 600,
            components: 12,
            amplitude: 1.0,
            amplitude_ratio: 0.75,
            min_bin: 4.0,
            max_bin: 120.0,
            max_decay: 1.5,
            on_grid: true,
        }
    }
}

impl AudioParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("audio length must be at least 2"));
        }
        if self.components == 0 {
            return Err(invalid("audio needs at least one component"));
        }
        if !(self.amplitude_ratio > 0.0 && self.amplitude_ratio <= 1.0) {
            return Err(invalid("amplitude_ratio must lie in (0, 1]"));
        }
        if !(self.min_bin >= 0.0 && self.min_bin <= self.max_bin && self.max_bin <= self.n as f64) {
            return Err(invalid(format!("frequency band [{}, {}] invalid for N = {}", self.min_bin, self.max_bin, self.n)));
        }
        if !(self.max_decay >= 0.0) || !self.amplitude.is_finite() {
            return Err(invalid("max_decay must be nonnegative and amplitude finite"));
        }
        Ok(())
    }
}

/// `cos(πk(2t+1)/2N)`, the `k`-th DCT-II atom up to scale.
pub fn dct_tone(n: usize, k: usize, amplitude: f64) -> Result<CVector> {
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, dim: n });
    }
    let v: Vec<f64> = (0..n).map(|t| amplitude * libm::cos(PI * k as f64 * (2 * t + 1) as f64 / (2 * n) as f64)).collect();
    let out = CVector::from_real(&v)?;
    if out.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(out)
}

/// Real audio-like clip: a sum of exponentially damped sinusoids.
pub fn gen_audio(params: &AudioParams, seed: u64) -> Result<CVector> {
    params.validate()?;
    let n = params.n;
    let mut rng = rng_from_seed(seed);
    let mut x = vec![0.0; n];
    let mut amp = params.amplitude;
    for _ in 0..params.components {
        let mut bin = params.min_bin + (params.max_bin - params.min_bin) * rng.random::<f64>();
        let mut phase = 2.0 * PI * rng.random::<f64>();
        if params.on_grid {
            bin = libm::round(bin);
        }
        let omega = PI * bin / n as f64;
        if params.on_grid {
            phase = omega / 2.0;
        }
        let decay = params.max_decay * rng.random::<f64>() / n as f64;
        let a = amp * (0.5 + 0.5 * rng.random::<f64>());
        for (t, xt) in x.iter_mut().enumerate() {
            let tf = t as f64;
            *xt += a * libm::exp(-decay * tf) * libm::cos(omega * tf + phase);
        }
        amp *= params.amplitude_ratio;
    }
    let out = CVector::from_real(&x)?;
    if out.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Antennas.
    pub n: usize,
    pub paths: usize,
    /// Time steps.
    pub steps: usize,
    pub ar_coeff: f64,
    /// Spread of the per-path mean powers (uniform in dB below the strongest).
    pub power_spread_db: f64,
    /// Snap `sinθ` to the DFT grid `2k/N`.
    pub on_grid: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams { n: 64, paths: 23, steps: 200, ar_coeff: 0.99, power_spread_db: 20.0, on_grid: false }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.paths == 0 || self.steps == 0 {
            return Err(invalid("channel needs n, paths and steps ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.ar_coeff) {
            return Err(invalid(format!("ar_coeff {} outside [0, 1]", self.ar_coeff)));
        }
        if !(self.power_spread_db >= 0.0) {
            return Err(invalid("power_spread_db must be nonnegative"));
        }
        Ok(())
    }
}

/// `e^{−iπ n sinθ}/√N` for `n = 0..N`.
pub fn steering_vector(n: usize, sin_theta: f64) -> Vec<C64> {
    let s = 1.0 / libm::sqrt(n as f64);
    (0..n).map(|k| C64::from_polar(s, -PI * k as f64 * sin_theta)).collect()
}

/// Time-varying multipath array response `Σ_p g_p(t) a(θ_p)`.
///
/// Angles are fixed per trace; each gain is a complex AR(1) process whose
/// stationary law is circular Gaussian, so magnitudes are Rayleigh.
pub fn gen_channel_trace(params: &ChannelParams, seed: u64) -> Result<Vec<CVector>> {
    params.validate()?;
    let n = params.n;
    let mut rng = rng_from_seed(seed);
    let mut sins = Vec::with_capacity(params.paths);
    let mut powers = Vec::with_capacity(params.paths);
    for _ in 0..params.paths {
        let s = if params.on_grid {
            let k = rng.random_range(0..n) as f64;
            let s = 2.0 * k / n as f64;
            if s >= 1.0 {
                s - 2.0
            } else {
                s
            }
        } else {
            libm::sin(PI * (rng.random::<f64>() - 0.5))
        };
        sins.push(s);
        powers.push(libm::pow(10.0, -params.power_spread_db * rng.random::<f64>() / 10.0));
    }
    let total: f64 = powers.iter().sum();
    let std: Vec<f64> = powers.iter().map(|p| libm::sqrt(p / total)).collect();
    let steer: Vec<Vec<C64>> = sins.iter().map(|&s| steering_vector(n, s)).collect();
    let mut gains: Vec<C64> = std.iter().map(|&s| cnormal(&mut rng) * s).collect();
    let a = params.ar_coeff;
    let innov = libm::sqrt((1.0 - a * a).max(0.0));
    let mut trace = Vec::with_capacity(params.steps);
    for t in 0..params.steps {
        if t > 0 && innov > 0.0 {
            for (g, &s) in gains.iter_mut().zip(&std) {
                *g = *g * a + cnormal(&mut rng) * (innov * s);
            }
        }
        let mut x = vec![ZERO; n];
        for (g, sv) in gains.iter().zip(&steer) {
            for (xi, si) in x.iter_mut().zip(sv) {
                *xi += g * si;
            }
        }
        let v = CVector::new(x)?;
        if v.is_zero() {
            return Err(Error::ZeroVector);
        }
        trace.push(v);
    }
    Ok(trace)
}

/// Real image in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Image { rows, cols, data })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().ok_or(Error::Empty)?.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
            }
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Image::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Mean of each of `blocks` contiguous column groups.
    pub fn column_means(&self, blocks: usize) -> Result<Vec<Vec<f64>>> {
        if blocks == 0 || blocks > self.cols {
            return Err(invalid(format!("{blocks} column blocks for {} columns", self.cols)));
        }
        let mut out = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let (lo, hi) = (b * self.cols / blocks, (b + 1) * self.cols / blocks);
            let mut m = vec![0.0; self.rows];
            for j in lo..hi {
                for (i, mi) in m.iter_mut().enumerate() {
                    *mi += self.get(i, j);
                }
            }
            let w = (hi - lo) as f64;
            m.iter_mut().for_each(|v| *v /= w);
            out.push(m);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageParams {
    pub size: usize,
    /// Level changes in the vertical profile shared by all columns.
    pub profile_steps: usize,
    pub rectangles: usize,
    /// Largest rectangle side as a fraction of the image size.
    pub max_rect_frac: f64,
    /// Largest intensity offset a rectangle adds.
    pub rect_contrast: f64,
}

impl Default for ImageParams {
    fn default() -> Self {
        ImageParams { size: 128, profile_steps: 6, rectangles: 5, max_rect_frac: 0.4, rect_contrast: 0.3 }
    }
}

/// Piecewise-constant image with values in `[0, 1]`: a random-step vertical
/// profile repeated across columns, overlaid with random rectangles.
pub fn gen_image(params: &ImageParams, seed: u64) -> Result<Image> {
    let n = params.size;
    if n < 2 {
        return Err(invalid("image size must be at least 2"));
    }
    if !(params.max_rect_frac > 0.0 && params.max_rect_frac <= 1.0) || !(params.rect_contrast >= 0.0) {
        return Err(invalid("rectangle parameters out of range"));
    }
    let mut rng = rng_from_seed(seed);
    let mut profile = vec![0.0; n];
    let mut cuts: Vec<usize> = (0..params.profile_steps).map(|_| rng.random_range(1..n)).collect();
    cuts.sort_unstable();
    let mut level = 0.2 + 0.6 * rng.random::<f64>();
    let mut next = 0;
    for (i, p) in profile.iter_mut().enumerate() {
        while next < cuts.len() && cuts[next] == i {
            level = 0.2 + 0.6 * rng.random::<f64>();
            next += 1;
        }
        *p = level;
    }
    let mut data: Vec<f64> = (0..n * n).map(|k| profile[k / n]).collect();
    let max_side = ((params.max_rect_frac * n as f64) as usize).max(1);
    for _ in 0..params.rectangles {
        let h = rng.random_range(1..=max_side);
        let w = rng.random_range(1..=max_side);
        let top = rng.random_range(0..=n - h);
        let left = rng.random_range(0..=n - w);
        let delta = params.rect_contrast * (2.0 * rng.random::<f64>() - 1.0);
        for i in top..top + h {
            for j in left..left + w {
                data[i * n + j] += delta;
            }
        }
    }
    data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Image::new(n, n, data)
}

/// I.i.d. Gaussian sensing matrix with entry variance `1/M`.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, m: usize, n: usize, complex: bool) -> Result<CMatrix> {
    let s = 1.0 / libm::sqrt(m as f64);
    CMatrix::from_fn(m, n, |_, _| if complex { cnormal(rng) * s } else { C64::new(normal(rng) * s, 0.0) })
}

/// `M × N` matrix with orthonormal rows, from Gram–Schmidt on Gaussian rows.
pub fn orthonormal_rows<R: Rng>(rng: &mut R, m: usize, n: usize, complex: bool) -> Result<CMatrix> {
    if m > n {
        return Err(invalid(format!("{m} orthonormal rows in dimension {n}")));
    }
    let g = gaussian_matrix(rng, m, n, complex)?;
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut u = g.row(i).to_vec();
        for _ in 0..2 {
            for q in &rows {
                let c: C64 = q.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
                for (ui, qi) in u.iter_mut().zip(q) {
                    *ui -= qi * c;
                }
            }
        }
        let nrm = crate::linalg::norm(&u);
        if nrm == 0.0 {
            return Err(Error::RankDeficient(i));
        }
        u.iter_mut().for_each(|z| *z /= nrm);
        rows.push(u);
    }
    CMatrix::new(m, n, rows.concat())
}

/// Adds Gaussian noise at the exact empirical SNR `‖clean‖²/‖n‖²`.
/// Returns the noisy vector and `σ² = ‖n‖²/M`. An infinite SNR adds nothing.
pub fn add_noise<R: Rng>(rng: &mut R, clean: &CVector, snr_db: f64, complex: bool) -> Result<(CVector, f64)> {
    if snr_db.is_nan() {
        return Err(invalid("SNR is NaN"));
    }
    if snr_db == f64::INFINITY || clean.is_zero() {
        return Ok((clean.clone(), 0.0));
    }
    let m = clean.len();
    let raw: Vec<C64> = (0..m).map(|_| if complex { cnormal(rng) } else { C64::new(normal(rng), 0.0) }).collect();
    let raw_energy: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
    let target = clean.norm_sq() / libm::pow(10.0, snr_db / 10.0);
    let scale = libm::sqrt(target / raw_energy);
    let y: Vec<C64> = clean.iter().zip(&raw).map(|(c, r)| c + r * scale).collect();
    Ok((CVector::new(y)?, target / m as f64))
}
