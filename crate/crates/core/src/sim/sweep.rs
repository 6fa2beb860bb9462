use rayon::prelude::*;

use crate::qkd::{evaluate, ChannelModel, ProtocolParams};

use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub lengths_km: Vec<f64>,
    pub e_mis: Vec<f64>,
    pub eta_bob: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub l_km: f64,
    pub e_mis: f64,
    pub eta_bob: f64,
    pub ell: u64,
    pub n_pulses: u64,
    pub speed_bps: f64,
}

/// `start, start + step, ...` up to `stop` inclusive. Values are snapped to
/// twelve decimals so that 5e-4 + 1e-4 prints as 0.0006.
pub fn stepped(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "step must be positive");
    if stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as u64;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// Key generation speed over the Cartesian grid, ordered by length, then
/// e_mis, then detector efficiency. Points are evaluated in parallel.
pub fn sweep_keyrate(
    grid: &SweepGrid,
    protocol: &ProtocolParams,
    base: &ChannelModel,
) -> Result<Vec<SweepRow>, SimError> {
    if grid.lengths_km.is_empty() || grid.e_mis.is_empty() || grid.eta_bob.is_empty() {
        return Err(SimError::Config("sweep grid has an empty axis".into()));
    }
    protocol.validate()?;
    let mut points = Vec::new();
    for &l in &grid.lengths_km {
        for &e in &grid.e_mis {
            for &eta in &grid.eta_bob {
                let model = base.clone().with_length(l).with_e_mis(e).with_eta_bob(eta);
                model.validate()?;
                points.push(model);
            }
        }
    }
    points
        .par_iter()
        .map(|m| {
            let r = evaluate(protocol, m)?;
            Ok(SweepRow {
                l_km: m.length_km,
                e_mis: m.e_mis,
                eta_bob: m.eta_bob,
                ell: r.ell,
                n_pulses: r.n_pulses,
                speed_bps: r.speed(m.pulse_rate),
            })
        })
        .collect()
}
