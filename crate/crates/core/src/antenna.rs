//! Square uniform planar array: array factor, total-power normalization
//! `G0` and gain lookup.
//!
//! The pattern is evaluated in direction cosines `u = sinθ·cosφ`,
//! `v = sinθ·sinφ`; each axis contributes the squared ratio
//! `sin(Nψ/2) / (N·sin(ψ/2))` with `ψ = 2π(d/λ)·u + phase`.

use alloc::collections::BTreeMap;
use core::f64::consts::{PI, TAU};

use libm::{asin, atan2, cos, sin, sqrt};
use spin::RwLock;

use crate::{Error, Result};

/// Propagation speed used for wavelengths (rounded, 3·10⁸ m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Below this `|sin(ψ/2)|` the axis ratio is replaced by its limit, 1.
const SINGULAR_EPS: f64 = 1e-8;

const BASE_THETA_STEPS: usize = 512;
const BASE_PHI_STEPS: usize = 1024;
const MAX_REFINEMENTS: u32 = 3;
const QUADRATURE_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayAntennaConfig {
    /// Elements per side (`N × N` array).
    pub n_side: u32,
    pub spacing_over_lambda: f64,
    pub carrier_hz: f64,
    pub phase_shift_x: f64,
    pub phase_shift_y: f64,
}

impl ArrayAntennaConfig {
    /// Broadside array with half-wavelength spacing.
    pub fn broadside(n_side: u32, carrier_hz: f64) -> Self {
        Self {
            n_side,
            spacing_over_lambda: 0.5,
            carrier_hz,
            phase_shift_x: 0.0,
            phase_shift_y: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_side == 0 {
            return Err(Error::invalid("array needs at least one element per side"));
        }
        if !(self.spacing_over_lambda > 0.0 && self.spacing_over_lambda.is_finite()) {
            return Err(Error::invalid("element spacing must be positive"));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !(self.phase_shift_x.is_finite() && self.phase_shift_y.is_finite()) {
            return Err(Error::invalid("phase shifts must be finite"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    fn pattern_key(&self) -> PatternKey {
        (
            self.n_side,
            self.spacing_over_lambda.to_bits(),
            self.phase_shift_x.to_bits(),
            self.phase_shift_y.to_bits(),
        )
    }
}

/// Linear power gain (dimensionless, non-negative).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GainValue(f64);

impl GainValue {
    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * libm::log10(self.0)
    }
}

fn axis_power(n: f64, psi: f64) -> f64 {
    let half = 0.5 * psi;
    let den = sin(half);
    if den.abs() < SINGULAR_EPS {
        return 1.0;
    }
    let r = sin(n * half) / (n * den);
    r * r
}

/// Array factor at direction cosines `(u, v)`.
pub fn array_factor_uv(cfg: &ArrayAntennaConfig, u: f64, v: f64) -> f64 {
    let n = cfg.n_side as f64;
    let kd = TAU * cfg.spacing_over_lambda;
    axis_power(n, kd * u + cfg.phase_shift_x) * axis_power(n, kd * v + cfg.phase_shift_y)
}

/// Normalized array factor in `[0, 1]` at polar angle `theta`, azimuth `phi`.
pub fn array_factor(cfg: &ArrayAntennaConfig, theta: f64, phi: f64) -> f64 {
    let s = sin(theta);
    array_factor_uv(cfg, s * cos(phi), s * sin(phi))
}

/// Maps a pair of per-axis offsets `(θx, θy)` to the `(θ, φ)` direction
/// with `sinθ·cosφ = sin θx` and `sinθ·sinφ = sin θy`.
pub fn two_axis_gain_args(theta_x: f64, theta_y: f64) -> Result<(f64, f64)> {
    let (u, v) = (sin(theta_x), sin(theta_y));
    let s2 = u * u + v * v;
    if s2 > 1.0 + 1e-12 {
        return Err(Error::OutOfHemisphere);
    }
    if s2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let theta = asin(sqrt(s2).min(1.0));
    let mut phi = atan2(v, u);
    if phi < 0.0 {
        phi += TAU;
    }
    Ok((theta, phi))
}

/// Direction cosines for per-axis offsets, pulled back onto the unit
/// circle when the pair points outside the visible region.
pub fn two_axis_direction_cosines(theta_x: f64, theta_y: f64) -> (f64, f64) {
    let (u, v) = (sin(theta_x), sin(theta_y));
    let s2 = u * u + v * v;
    if s2 > 1.0 {
        let k = 1.0 / sqrt(s2);
        (u * k, v * k)
    } else {
        (u, v)
    }
}

/// Trapezoidal estimate of `∬ AF(θ,φ)·sinθ dθ dφ` over the full sphere on
/// a uniform `theta_steps × phi_steps` grid.
pub fn pattern_integral(cfg: &ArrayAntennaConfig, theta_steps: usize, phi_steps: usize) -> f64 {
    let dt = PI / theta_steps as f64;
    let dp = TAU / phi_steps as f64;
    let trig: alloc::vec::Vec<(f64, f64)> = (0..phi_steps)
        .map(|j| {
            let p = j as f64 * dp;
            (cos(p), sin(p))
        })
        .collect();
    let mut total = 0.0;
    // The end rows (θ = 0, π) carry sinθ = 0 and drop out.
    for i in 1..theta_steps {
        let theta = i as f64 * dt;
        let s = sin(theta);
        let ring: f64 = trig.iter().map(|&(c, sn)| array_factor_uv(cfg, s * c, s * sn)).sum();
        total += ring * s;
    }
    total * dt * dp
}

type PatternKey = (u32, u64, u64, u64);

static G0_CACHE: RwLock<BTreeMap<PatternKey, f64>> = RwLock::new(BTreeMap::new());

/// `G0 = 4π / ∬ AF sinθ dθ dφ`, refined by grid doubling until the
/// relative change drops below 1e-3. Results are cached per pattern.
pub fn normalization_constant(cfg: &ArrayAntennaConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.n_side == 1 {
        return Ok(1.0);
    }
    let key = cfg.pattern_key();
    if let Some(&g0) = G0_CACHE.read().get(&key) {
        return Ok(g0);
    }
    let g0 = compute_normalization(cfg)?;
    // Racing writers store identical values.
    G0_CACHE.write().insert(key, g0);
    Ok(g0)
}

fn compute_normalization(cfg: &ArrayAntennaConfig) -> Result<f64> {
    let (mut nt, mut np) = (BASE_THETA_STEPS, BASE_PHI_STEPS);
    let mut prev = pattern_integral(cfg, nt, np);
    for _ in 0..MAX_REFINEMENTS {
        nt *= 2;
        np *= 2;
        let next = pattern_integral(cfg, nt, np);
        if !(next > 0.0 && next.is_finite()) {
            break;
        }
        if ((next - prev) / next).abs() < QUADRATURE_RTOL {
            return Ok(4.0 * PI / next);
        }
        prev = next;
    }
    Err(Error::numeric("pattern integral did not converge"))
}

/// `G0(cfg) · AF(cfg, θ, φ)`.
pub fn gain(cfg: &ArrayAntennaConfig, theta: f64, phi: f64) -> Result<GainValue> {
    Ok(GainValue(normalization_constant(cfg)? * array_factor(cfg, theta, phi)))
}

/// An array with its normalization resolved, for repeated gain lookups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPattern {
    cfg: ArrayAntennaConfig,
    g0: f64,
}

impl ArrayPattern {
    pub fn new(cfg: ArrayAntennaConfig) -> Result<Self> {
        let g0 = normalization_constant(&cfg)?;
        Ok(Self { cfg, g0 })
    }

    pub fn config(&self) -> &ArrayAntennaConfig {
        &self.cfg
    }

    /// Peak (boresight) gain `G0`.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn gain(&self, theta: f64, phi: f64) -> f64 {
        self.g0 * array_factor(&self.cfg, theta, phi)
    }

    pub fn gain_uv(&self, u: f64, v: f64) -> f64 {
        self.g0 * array_factor_uv(&self.cfg, u, v)
    }

    /// Gain toward per-axis offsets from boresight, with the pattern rolled
    /// by `roll` radians about its axis.
    pub fn gain_two_axis(&self, theta_x: f64, theta_y: f64, roll: f64) -> f64 {
        let (mut u, mut v) = two_axis_direction_cosines(theta_x, theta_y);
        if roll != 0.0 {
            let (c, s) = (cos(roll), sin(roll));
            (u, v) = (c * u + s * v, -s * u + c * v);
        }
        self.gain_uv(u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};
    use rand::Rng;

    const FC: f64 = 140e9;

    /// Exact directivity of an N×N half-wave grid: the sphere integral of
    /// |Σ e^{jk·r}|² reduces to Σ_ab sin(πρ_ab)/(πρ_ab) over element pairs.
    fn analytic_g0(n: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (0..n * n).map(|k| ((k / n) as f64, (k % n) as f64)).collect();
        let mut s = 0.0;
        for a in &pts {
            for b in &pts {
                let rho = libm::hypot(a.0 - b.0, a.1 - b.1);
                s += if rho == 0.0 { 1.0 } else { sin(PI * rho) / (PI * rho) };
            }
        }
        (n as f64).powi(4) / s
    }

    #[test]
    fn array_factor_examples() {
        for n in [1, 2, 7, 20] {
            let cfg = ArrayAntennaConfig::broadside(n, FC);
            assert_eq!(array_factor(&cfg, 0.0, 0.0), 1.0);
        }
        let single = ArrayAntennaConfig::broadside(1, FC);
        for (t, p) in [(0.3, 1.0), (1.2, 4.0), (PI, 0.1)] {
            assert!((array_factor(&single, t, p) - 1.0).abs() < 1e-15);
        }
        let big = ArrayAntennaConfig::broadside(20, FC);
        let null = asin(2.0 / 20.0);
        assert!(array_factor(&big, null, 0.0).abs() < 1e-9);
    }

    #[test]
    fn array_factor_continuous_at_singularities() {
        let cfg = ArrayAntennaConfig::broadside(20, FC);
        for x in [1e-9, -1e-9] {
            assert!((array_factor(&cfg, x, 0.3) - 1.0).abs() < 1e-6);
            assert!((array_factor_uv(&cfg, x, -x) - 1.0).abs() < 1e-6);
        }
        // grating-lobe singularity at ψ = 2π (u = 2 for λ/2 spacing)
        assert!((array_factor_uv(&cfg, 2.0 + 1e-9, 0.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn adapter_examples() {
        assert_eq!(two_axis_gain_args(0.0, 0.0).unwrap(), (0.0, 0.0));
        let (t, p) = two_axis_gain_args(FRAC_PI_6, 0.0).unwrap();
        assert!((t - FRAC_PI_6).abs() < 1e-12 && p.abs() < 1e-15);
        let (t, p) = two_axis_gain_args(FRAC_PI_6, FRAC_PI_6).unwrap();
        assert!((t - FRAC_PI_4).abs() < 1e-12);
        assert!((p - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(two_axis_gain_args(1.2, 1.2), Err(Error::OutOfHemisphere));
    }

    #[test]
    fn adapter_satisfies_defining_equations() {
        let mut rng = crate::rng::seeded(11);
        for _ in 0..1000 {
            let tx = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let ty = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            match two_axis_gain_args(tx, ty) {
                Ok((t, p)) => {
                    assert!((sin(t) * cos(p) - sin(tx)).abs() < 1e-9);
                    assert!((sin(t) * sin(p) - sin(ty)).abs() < 1e-9);
                }
                Err(e) => {
                    assert_eq!(e, Error::OutOfHemisphere);
                    assert!(sin(tx).powi(2) + sin(ty).powi(2) > 1.0);
                }
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let one = ArrayAntennaConfig::broadside(1, FC);
        assert_eq!(normalization_constant(&one).unwrap(), 1.0);
        // the quadrature itself also gives 4π for the isotropic case
        assert!((pattern_integral(&one, 512, 1024) / (4.0 * PI) - 1.0).abs() < 1e-4);

        let two = ArrayAntennaConfig::broadside(2, FC);
        let golden = 5.108_258_651_160_07;
        assert!((analytic_g0(2) - golden).abs() < 1e-10);
        let g0 = normalization_constant(&two).unwrap();
        assert!((g0 / golden - 1.0).abs() < 1e-3, "g0 = {g0}");
    }

    #[test]
    fn normalization_matches_closed_form() {
        for n in [4usize, 8, 20] {
            let cfg = ArrayAntennaConfig::broadside(n as u32, FC);
            let g0 = normalization_constant(&cfg).unwrap();
            let exact = analytic_g0(n);
            assert!((g0 / exact - 1.0).abs() < 2e-3, "n = {n}: {g0} vs {exact}");
        }
    }

    #[test]
    fn normalization_cached_and_independent_of_carrier() {
        let a = ArrayAntennaConfig::broadside(6, FC);
        let b = ArrayAntennaConfig::broadside(6, 30e9);
        assert_eq!(
            normalization_constant(&a).unwrap().to_bits(),
            normalization_constant(&b).unwrap().to_bits()
        );
    }

    #[test]
    fn gain_examples() {
        let cfg = ArrayAntennaConfig::broadside(20, FC);
        let g0 = normalization_constant(&cfg).unwrap();
        assert_eq!(gain(&cfg, 0.0, 0.0).unwrap().linear(), g0);
        let null = asin(0.1);
        let ratio = gain(&cfg, 0.0, 0.0).unwrap().linear() / gain(&cfg, null, 0.0).unwrap().linear();
        assert!(ratio >= 1e6);

        let iso = ArrayAntennaConfig::broadside(1, FC);
        assert_eq!(gain(&iso, 1.1, 2.2).unwrap().linear(), 1.0);

        let bad = ArrayAntennaConfig { n_side: 0, ..cfg };
        assert!(gain(&bad, 0.0, 0.0).is_err());
    }

    #[test]
    fn directivity_grows_with_array_size() {
        let mut last = 0.0;
        for n in 1..=12 {
            let g0 = normalization_constant(&ArrayAntennaConfig::broadside(n, FC)).unwrap();
            assert!(g0 > last, "n = {n}");
            last = g0;
        }
    }

    #[test]
    fn square_array_quarter_turn_symmetry() {
        let cfg = ArrayAntennaConfig::broadside(9, FC);
        let mut rng = crate::rng::seeded(5);
        for _ in 0..500 {
            let t = rng.random_range(0.0..PI);
            let p = rng.random_range(0.0..TAU);
            let a = array_factor(&cfg, t, p);
            let b = array_factor(&cfg, t, p + FRAC_PI_2);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roll_rotates_the_pattern() {
        let p = ArrayPattern::new(ArrayAntennaConfig::broadside(8, FC)).unwrap();
        let plain = p.gain_two_axis(0.1, 0.0, 0.0);
        let rolled = p.gain_two_axis(0.0, 0.1, FRAC_PI_2);
        assert!((plain - rolled).abs() < 1e-9 * plain);
        // projection keeps out-of-region directions finite
        assert!(p.gain_two_axis(1.5, 1.5, 0.0).is_finite());
    }
}
