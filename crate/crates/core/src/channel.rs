//! THz link budget, LoS probability, interference-aware SINR and
//! Monte-Carlo outage under UAV orientation jitter.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{exp, log10};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::antenna::{normalization_constant, ArrayAntennaConfig, ArrayPattern, SPEED_OF_LIGHT};
use crate::geometry::{elevation_angle, link_length, spatial_angles, Vec3};
use crate::rng::Substreams;
use crate::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// How the per-link LoS state is drawn inside an outage estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosSampling {
    /// Fresh Bernoulli draw per link per Monte-Carlo sample.
    #[default]
    PerSample,
    /// One draw per link for the whole estimate.
    PerEstimate,
    /// Use the `los` flag stored on each [`LinkState`].
    Fixed,
}

/// Which link's propagation loss scales the interference reaching SBS `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferencePath {
    /// Leakage from antenna `j` reaches SBS `i` over link `i`.
    #[default]
    VictimLink,
    /// Each interferer carries the loss and LoS state of its own link `j`.
    InterfererLink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    /// Molecular absorption coefficient (1/m).
    pub absorption_coeff: f64,
    pub noise_power_w: f64,
    /// Linear SINR threshold.
    pub sinr_threshold: f64,
    pub los_alpha: f64,
    pub los_b: f64,
    /// Linear power factor applied to NLoS links, in `[0, 1]`.
    pub nlos_extra_loss: f64,
    /// Standard deviation of each orientation-jitter axis (rad).
    pub vibration_std_rad: f64,
    /// Roll of the UAV patterns about their boresight (rad).
    pub roll_rad: f64,
    pub los_sampling: LosSampling,
    pub interference_path: InterferencePath,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 140e9,
            absorption_coeff: 1e-3,
            noise_power_w: dbm_to_watts(-190.0),
            sinr_threshold: db_to_linear(5.0),
            los_alpha: 9.61,
            los_b: 0.16,
            nlos_extra_loss: 0.01,
            vibration_std_rad: 2.0f64.to_radians(),
            roll_rad: 0.0,
            los_sampling: LosSampling::PerSample,
            interference_path: InterferencePath::VictimLink,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("noise_power_w", self.noise_power_w),
            ("sinr_threshold", self.sinr_threshold),
            ("los_alpha", self.los_alpha),
            ("los_b", self.los_b),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(alloc::format!("{name} must be positive")));
            }
        }
        if !(self.absorption_coeff >= 0.0 && self.absorption_coeff.is_finite()) {
            return Err(Error::invalid("absorption_coeff must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.nlos_extra_loss) {
            return Err(Error::invalid("nlos_extra_loss must lie in [0, 1]"));
        }
        if !(self.vibration_std_rad >= 0.0 && self.vibration_std_rad.is_finite()) {
            return Err(Error::invalid("vibration_std_rad must be non-negative"));
        }
        if !self.roll_rad.is_finite() {
            return Err(Error::invalid("roll_rad must be finite"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosState {
    #[default]
    Los,
    Nlos,
}

/// One UAV-antenna/SBS fronthaul link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub sbs_position: Vec3,
    pub tx_power_w: f64,
    pub uav_array: ArrayAntennaConfig,
    pub sbs_array_n_side: u32,
    pub los: LosState,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Orientation {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrSample {
    pub per_link_sinr: Vec<f64>,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageEstimate {
    pub per_link_outage: Vec<f64>,
    pub n_samples: u32,
    pub seed: u64,
}

impl OutageEstimate {
    pub fn max(&self) -> Result<f64> {
        max_outage(self)
    }
}

/// Free-space term `h_Lf = (λ / 4πL)²`.
pub fn free_space_loss(params: &ChannelParams, length: f64) -> Result<f64> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid("link length must be positive"));
    }
    let r = params.wavelength() / (4.0 * PI * length);
    Ok(r * r)
}

/// Molecular absorption term `h_Lm = exp(-K·L/2)`.
pub fn absorption_loss(params: &ChannelParams, length: f64) -> f64 {
    exp(-0.5 * params.absorption_coeff * length)
}

/// `|h_L|² = (h_Lf · h_Lm)² = (λ/4πL)⁴ · exp(-K·L)`.
pub fn path_loss(params: &ChannelParams, length: f64) -> Result<f64> {
    let h = free_space_loss(params, length)? * absorption_loss(params, length);
    Ok(h * h)
}

/// Air-to-ground LoS probability for an elevation angle in radians.
pub fn los_probability(params: &ChannelParams, elevation: f64) -> f64 {
    let deg = elevation.to_degrees();
    1.0 / (1.0 + params.los_alpha * exp(-params.los_b * (deg - params.los_alpha)))
}

/// Geometry-dependent quantities of a link set seen from one UAV position.
/// Building it once lets many orientation/LoS draws share the expensive
/// parts (lengths, path losses, pairwise spatial angles, `G0` lookups).
#[derive(Debug, Clone)]
pub struct LinkBudget {
    params: ChannelParams,
    tx_power: Vec<f64>,
    path_loss: Vec<f64>,
    length: Vec<f64>,
    elevation: Vec<f64>,
    p_los: Vec<f64>,
    sbs_gain: Vec<f64>,
    uav_pattern: Vec<ArrayPattern>,
    fixed_los: Vec<LosState>,
    /// Row-major `[i][j]` per-axis spatial angles.
    angles: Vec<(f64, f64)>,
}

impl LinkBudget {
    pub fn new(links: &[LinkState], uav: Vec3, params: &ChannelParams) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::invalid("at least one link is required"));
        }
        if !uav.is_finite() {
            return Err(Error::invalid("UAV position is not finite"));
        }
        if !(uav.z > 0.0) {
            return Err(Error::DegenerateGeometry("UAV altitude must be positive".into()));
        }
        let m = links.len();
        let mut b = LinkBudget {
            params: *params,
            tx_power: Vec::with_capacity(m),
            path_loss: Vec::with_capacity(m),
            length: Vec::with_capacity(m),
            elevation: Vec::with_capacity(m),
            p_los: Vec::with_capacity(m),
            sbs_gain: Vec::with_capacity(m),
            uav_pattern: Vec::with_capacity(m),
            fixed_los: Vec::with_capacity(m),
            angles: Vec::with_capacity(m * m),
        };
        for link in links {
            if !(link.tx_power_w > 0.0) {
                return Err(Error::invalid("transmit power must be positive"));
            }
            let len = link_length(uav, link.sbs_position);
            let elev = elevation_angle(uav, link.sbs_position)?;
            b.tx_power.push(link.tx_power_w);
            b.path_loss.push(path_loss(params, len)?);
            b.length.push(len);
            b.elevation.push(elev);
            b.p_los.push(los_probability(params, elev));
            let sbs_cfg = ArrayAntennaConfig {
                n_side: link.sbs_array_n_side,
                ..ArrayAntennaConfig::broadside(1, params.carrier_hz)
            };
            b.sbs_gain.push(normalization_constant(&sbs_cfg)?);
            b.uav_pattern.push(ArrayPattern::new(link.uav_array)?);
            b.fixed_los.push(link.los);
        }
        for li in links {
            for lj in links {
                b.angles.push(spatial_angles(uav, li.sbs_position, lj.sbs_position)?);
            }
        }
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.tx_power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_power.is_empty()
    }

    pub fn length(&self, i: usize) -> f64 {
        self.length[i]
    }

    pub fn elevation(&self, i: usize) -> f64 {
        self.elevation[i]
    }

    pub fn los_probability(&self, i: usize) -> f64 {
        self.p_los[i]
    }

    pub fn path_loss(&self, i: usize) -> f64 {
        self.path_loss[i]
    }

    pub fn sbs_gain(&self, i: usize) -> f64 {
        self.sbs_gain[i]
    }

    pub fn uav_peak_gain(&self, i: usize) -> f64 {
        self.uav_pattern[i].g0()
    }

    pub fn spatial_angles(&self, i: usize, j: usize) -> (f64, f64) {
        self.angles[i * self.len() + j]
    }

    /// Power factor `α_L` for a LoS state.
    pub fn los_factor(&self, state: LosState) -> f64 {
        match state {
            LosState::Los => 1.0,
            LosState::Nlos => self.params.nlos_extra_loss,
        }
    }

    pub fn fixed_los_factors(&self) -> Vec<f64> {
        self.fixed_los.iter().map(|&s| self.los_factor(s)).collect()
    }

    /// Received desired power at SBS `i`.
    pub fn desired_power(&self, i: usize, orientation: Orientation, alpha: &[f64]) -> f64 {
        let g_uav = self.uav_pattern[i].gain_two_axis(orientation.x, orientation.y, self.params.roll_rad);
        self.tx_power[i] * alpha[i] * self.path_loss[i] * self.sbs_gain[i] * g_uav
    }

    /// Interference power at SBS `i` from UAV antenna `j` (`j != i`).
    pub fn interference_power(&self, i: usize, j: usize, orientation: Orientation, alpha: &[f64]) -> f64 {
        let (tx, ty) = self.spatial_angles(i, j);
        let g_uav = self.uav_pattern[j].gain_two_axis(tx + orientation.x, ty + orientation.y, self.params.roll_rad);
        let (a, h) = match self.params.interference_path {
            InterferencePath::VictimLink => (alpha[i], self.path_loss[i]),
            InterferencePath::InterfererLink => (alpha[j], self.path_loss[j]),
        };
        self.tx_power[j] * a * h * self.sbs_gain[i] * g_uav
    }

    pub fn sinr(&self, i: usize, orientation: Orientation, alpha: &[f64]) -> f64 {
        let interference: f64 = (0..self.len())
            .filter(|&j| j != i)
            .map(|j| self.interference_power(i, j, orientation, alpha))
            .sum();
        self.desired_power(i, orientation, alpha) / (interference + self.params.noise_power_w)
    }

    pub fn sinr_all(&self, orientation: Orientation, alpha: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.sinr(i, orientation, alpha);
        }
    }
}

/// SINR of every link for one orientation draw, using each link's stored
/// LoS state.
pub fn instantaneous_sinr(
    links: &[LinkState],
    uav: Vec3,
    orientation: Orientation,
    params: &ChannelParams,
) -> Result<SinrSample> {
    let budget = LinkBudget::new(links, uav, params)?;
    let alpha = budget.fixed_los_factors();
    let mut per_link_sinr = vec![0.0; links.len()];
    budget.sinr_all(orientation, &alpha, &mut per_link_sinr);
    Ok(SinrSample {
        per_link_sinr,
        orientation,
    })
}

/// Monte-Carlo estimate of `P[γ_i < γ_th]` for every link.
///
/// Sample `k` draws from substream `k` of `seed`: first `Θx`, `Θy`, then
/// one uniform per link for its LoS state. Estimates are therefore
/// reproducible and use common random numbers across positions.
pub fn outage_probability(
    links: &[LinkState],
    uav: Vec3,
    params: &ChannelParams,
    n_samples: u32,
    seed: u64,
) -> Result<OutageEstimate> {
    if n_samples == 0 {
        return Err(Error::invalid("at least one Monte-Carlo sample is required"));
    }
    let budget = LinkBudget::new(links, uav, params)?;
    Ok(outage_from_budget(&budget, n_samples, seed))
}

pub fn outage_from_budget(budget: &LinkBudget, n_samples: u32, seed: u64) -> OutageEstimate {
    let m = budget.len();
    let params = &budget.params;
    let streams = Substreams::new(seed);
    let nlos = params.nlos_extra_loss;

    let mut alpha = budget.fixed_los_factors();
    if params.los_sampling == LosSampling::PerEstimate {
        let mut rng = streams.stream(u64::MAX);
        for (i, a) in alpha.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *a = if u < budget.p_los[i] { 1.0 } else { nlos };
        }
    }

    let mut failures = vec![0u32; m];
    let mut sinr = vec![0.0; m];
    for k in 0..n_samples {
        let mut rng = streams.stream(k as u64);
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let orientation = Orientation {
            x: zx * params.vibration_std_rad,
            y: zy * params.vibration_std_rad,
        };
        for (i, a) in alpha.iter_mut().enumerate() {
            let u: f64 = rng.random();
            if params.los_sampling == LosSampling::PerSample {
                *a = if u < budget.p_los[i] { 1.0 } else { nlos };
            }
        }
        budget.sinr_all(orientation, &alpha, &mut sinr);
        for (f, &g) in failures.iter_mut().zip(&sinr) {
            if g < params.sinr_threshold {
                *f += 1;
            }
        }
    }
    OutageEstimate {
        per_link_outage: failures.iter().map(|&f| f as f64 / n_samples as f64).collect(),
        n_samples,
        seed,
    }
}

pub fn max_outage(estimate: &OutageEstimate) -> Result<f64> {
    estimate
        .per_link_outage
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::invalid("outage estimate has no links"))
}
