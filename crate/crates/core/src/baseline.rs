//! Endpoint baselines: an exhaustive grid oracle and a static centroid hover.

use alloc::vec::Vec;

use crate::channel::{outage_probability, ChannelParams};
use crate::environment::Topology;
use crate::geometry::{KinematicLimits, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearchSpec {
    pub x_steps: usize,
    pub y_steps: usize,
    pub z_steps: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub mc_samples: u32,
    /// Shared by every grid point.
    pub seed: u64,
}

impl GridSearchSpec {
    /// 15×15×5 over the area and altitude band with 10⁴ samples per point.
    pub fn over_area(area_x: f64, area_y: f64, limits: &KinematicLimits, seed: u64) -> Self {
        Self {
            x_steps: 15,
            y_steps: 15,
            z_steps: 5,
            x_range: (0.0, area_x),
            y_range: (0.0, area_y),
            z_range: (limits.h_min, limits.h_max),
            mc_samples: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_steps == 0 || self.y_steps == 0 || self.z_steps == 0 {
            return Err(Error::invalid("grid step counts must be positive"));
        }
        for (lo, hi) in [self.x_range, self.y_range, self.z_range] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid("grid ranges must be finite and ordered"));
            }
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x_steps * self.y_steps * self.z_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic `(x, y, z)` order. A single step sits at
    /// the range midpoint.
    pub fn points(&self) -> Vec<Vec3> {
        let axis = |steps: usize, (lo, hi): (f64, f64)| -> Vec<f64> {
            if steps == 1 {
                return alloc::vec![0.5 * (lo + hi)];
            }
            (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
        };
        let xs = axis(self.x_steps, self.x_range);
        let ys = axis(self.y_steps, self.y_range);
        let zs = axis(self.z_steps, self.z_range);
        let mut out = Vec::with_capacity(self.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Vec3::new(x, y, z));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub position: Vec3,
    pub max_outage: f64,
    pub per_link_outage: Vec<f64>,
}

/// Scores every grid point, in [`GridSearchSpec::points`] order.
pub fn grid_scan(topology: &Topology, params: &ChannelParams, spec: &GridSearchSpec) -> Result<Vec<GridSample>> {
    spec.validate()?;
    topology.validate()?;
    spec.points()
        .into_iter()
        .map(|p| {
            let est = outage_probability(&topology.sbs_list, p, params, spec.mc_samples, spec.seed)?;
            Ok(GridSample {
                position: p,
                max_outage: est.max()?,
                per_link_outage: est.per_link_outage,
            })
        })
        .collect()
}

/// Index of the first minimum of a scan; the scan order makes this the
/// lexicographically lowest tie.
pub fn argmin(scan: &[GridSample]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, s) in scan.iter().enumerate() {
        if best.is_none_or(|b| s.max_outage < scan[b].max_outage) {
            best = Some(k);
        }
    }
    best
}

/// Grid point of least max-outage.
pub fn grid_search_best_position(topology: &Topology, params: &ChannelParams, spec: &GridSearchSpec) -> Result<(Vec3, f64)> {
    let scan = grid_scan(topology, params, spec)?;
    let k = argmin(&scan).ok_or_else(|| Error::invalid("empty grid"))?;
    Ok((scan[k].position, scan[k].max_outage))
}

/// Centroid of the active SBSs at mid altitude.
pub fn static_center_policy(topology: &Topology, limits: &KinematicLimits) -> Result<Vec3> {
    if topology.is_empty() {
        return Err(Error::invalid("static centre needs at least one SBS"));
    }
    let n = topology.len() as f64;
    let (sx, sy) = topology
        .sbs_list
        .iter()
        .fold((0.0, 0.0), |(x, y), l| (x + l.sbs_position.x, y + l.sbs_position.y));
    Ok(Vec3::new(sx / n, sy / n, limits.mid_altitude()))
}
