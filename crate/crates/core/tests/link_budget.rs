use thzuav_core::antenna::ArrayAntennaConfig;
use thzuav_core::channel::{
    instantaneous_sinr, linear_to_db, outage_probability, ChannelParams, LinkState, LosSampling, LosState,
    Orientation,
};
use thzuav_core::Vec3;

fn link(x: f64, y: f64) -> LinkState {
    LinkState {
        sbs_position: Vec3::ground(x, y),
        tx_power_w: 0.01,
        uav_array: ArrayAntennaConfig::broadside(20, 140e9),
        sbs_array_n_side: 10,
        los: LosState::Los,
    }
}

// Pinned by a standalone scalar evaluation using the closed-form array
// directivity and vector-angle geometry.
#[test]
fn two_sbs_sinr_matches_scalar_oracle() {
    let links = [link(30.0, 40.0), link(80.0, 50.0)];
    let s = instantaneous_sinr(&links, Vec3::new(50.0, 60.0, 70.0), Orientation::default(), &ChannelParams::default())
        .unwrap();
    let db: Vec<f64> = s.per_link_sinr.iter().map(|&g| linear_to_db(g)).collect();
    assert!((db[0] - 23.297_317_504).abs() < 0.01, "{db:?}");
    assert!((db[1] - 22.999_158_820).abs() < 0.01, "{db:?}");
}

#[test]
fn symmetric_pair_has_identical_sinr() {
    let links = [link(40.0, 75.0), link(110.0, 75.0)];
    let s = instantaneous_sinr(&links, Vec3::new(75.0, 75.0, 60.0), Orientation::default(), &ChannelParams::default())
        .unwrap();
    let rel = (s.per_link_sinr[0] - s.per_link_sinr[1]).abs() / s.per_link_sinr[0];
    assert!(rel < 1e-12);
}

#[test]
fn independent_reruns_agree_within_binomial_bound() {
    let links = [link(70.0, 70.0), link(78.0, 74.0)];
    let uav = Vec3::new(75.0, 75.0, 80.0);
    let params = ChannelParams::default();
    let n = 100_000;
    let a = outage_probability(&links, uav, &params, n, 1).unwrap();
    let b = outage_probability(&links, uav, &params, n, 2).unwrap();
    for (pa, pb) in a.per_link_outage.iter().zip(&b.per_link_outage) {
        let p = 0.5 * (pa + pb);
        assert!(p > 0.0 && p < 1.0, "degenerate scenario p = {p}");
        // Difference of two independent estimates: sd = sqrt(2 p(1-p)/n).
        let bound = 3.0 * (2.0 * p * (1.0 - p) / n as f64).sqrt();
        assert!((pa - pb).abs() <= bound, "{pa} vs {pb}, bound {bound}");
    }
}

#[test]
fn deterministic_limit_is_a_threshold_comparison() {
    let params = ChannelParams {
        vibration_std_rad: 0.0,
        los_sampling: LosSampling::Fixed,
        ..ChannelParams::default()
    };
    let links = [link(30.0, 40.0), link(80.0, 50.0)];
    for z in [40.0, 70.0, 120.0] {
        let uav = Vec3::new(50.0, 60.0, z);
        let sinr = instantaneous_sinr(&links, uav, Orientation::default(), &params).unwrap();
        let out = outage_probability(&links, uav, &params, 500, 9).unwrap();
        for (g, p) in sinr.per_link_sinr.iter().zip(&out.per_link_outage) {
            assert_eq!(*p, if *g < params.sinr_threshold { 1.0 } else { 0.0 });
        }
    }
}
