//! Detection and error counts for one raw-key block, either as rounded
//! expectations or as seeded binomial draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::channel::{bit_error_prob, detection_rate};
use super::{ChannelModel, ProtocolParams, QkdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Per-intensity counts for one basis, indexed as `[k1, k2, k3]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub detections: [u64; 3],
    pub errors: [u64; 3],
}

impl BasisCounts {
    pub fn total_detections(&self) -> u64 {
        self.detections.iter().sum()
    }

    pub fn total_errors(&self) -> u64 {
        self.errors.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedStatistics {
    pub x: BasisCounts,
    pub z: BasisCounts,
    /// Pulses sent to close the block.
    pub n_pulses: u64,
}

impl ObservedStatistics {
    pub fn basis(&self, basis: Basis) -> &BasisCounts {
        match basis {
            Basis::X => &self.x,
            Basis::Z => &self.z,
        }
    }

    /// Raw key size `n_X`.
    pub fn raw_key_bits(&self) -> u64 {
        self.x.total_detections()
    }

    pub fn is_consistent(&self) -> bool {
        let counts_ok = [&self.x, &self.z]
            .iter()
            .all(|b| b.errors.iter().zip(b.detections).all(|(&m, n)| m <= n));
        counts_ok && self.n_pulses >= self.x.total_detections() + self.z.total_detections()
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let scale = |b: &BasisCounts| BasisCounts {
            detections: b.detections.map(|v| v * factor),
            errors: b.errors.map(|v| v * factor),
        };
        Self {
            x: scale(&self.x),
            z: scale(&self.z),
            n_pulses: self.n_pulses * factor,
        }
    }
}

/// Per-pulse probabilities that drive both statistics paths.
#[derive(Debug, Clone, Copy)]
struct PulseModel {
    /// Detection probability including after-pulses, `r_k (1 + p_ap)`.
    detect: [f64; 3],
    /// Error probability per pulse, `b_k`.
    error: [f64; 3],
}

impl PulseModel {
    fn new(p: &ProtocolParams, ch: &ChannelModel) -> Result<Self, QkdError> {
        p.validate()?;
        ch.validate()?;
        let mut detect = [0.0; 3];
        let mut error = [0.0; 3];
        for (i, k) in p.intensities().into_iter().enumerate() {
            detect[i] = (detection_rate(k, ch)? * (1.0 + ch.p_ap)).min(1.0);
            error[i] = bit_error_prob(k, ch)?.min(detect[i]);
        }
        Ok(Self { detect, error })
    }

    fn sifted_prob(p: &ProtocolParams, basis: Basis) -> f64 {
        match basis {
            Basis::X => p.p_x * p.p_x,
            Basis::Z => (1.0 - p.p_x) * (1.0 - p.p_x),
        }
    }

    fn expected_counts(&self, p: &ProtocolParams, n_pulses: u64, basis: Basis) -> BasisCounts {
        let sift = Self::sifted_prob(p, basis);
        let n = n_pulses as f64;
        let mut counts = BasisCounts::default();
        for (i, pk) in p.intensity_probs().into_iter().enumerate() {
            let det = (n * pk * sift * self.detect[i]).round() as u64;
            let err = (n * pk * sift * self.error[i]).round() as u64;
            counts.detections[i] = det;
            counts.errors[i] = err.min(det);
        }
        counts
    }

    /// Smallest pulse count whose rounded X-basis detections reach `n_x`.
    fn pulses_for_target(&self, p: &ProtocolParams) -> Result<u64, QkdError> {
        let per_pulse: f64 = p
            .intensity_probs()
            .iter()
            .zip(self.detect)
            .map(|(pk, d)| pk * Self::sifted_prob(p, Basis::X) * d)
            .sum();
        if !(per_pulse > 0.0) {
            return Err(QkdError::UnreachableTarget);
        }
        let target = p.n_x as f64;
        let mut n = (target / per_pulse).ceil().max(1.0) as u64;
        while n > 1 && (n - 1) as f64 * per_pulse >= target {
            n -= 1;
        }
        while (n as f64) * per_pulse < target {
            n += 1;
        }
        while self.expected_counts(p, n, Basis::X).total_detections() < p.n_x {
            n += 1;
        }
        Ok(n)
    }
}

/// Rounded expected counts for the block that first reaches `n_X` raw bits.
pub fn expected_statistics(
    p: &ProtocolParams,
    ch: &ChannelModel,
) -> Result<ObservedStatistics, QkdError> {
    let model = PulseModel::new(p, ch)?;
    let n_pulses = model.pulses_for_target(p)?;
    Ok(ObservedStatistics {
        x: model.expected_counts(p, n_pulses, Basis::X),
        z: model.expected_counts(p, n_pulses, Basis::Z),
        n_pulses,
    })
}

/// Binomially sampled counts over the same pulse budget as
/// [`expected_statistics`]. Identical seeds give identical output.
pub fn sample_statistics(
    p: &ProtocolParams,
    ch: &ChannelModel,
    seed: u64,
) -> Result<ObservedStatistics, QkdError> {
    let model = PulseModel::new(p, ch)?;
    let n_pulses = model.pulses_for_target(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: u64, prob: f64| -> u64 {
        if n == 0 || prob <= 0.0 {
            return 0;
        }
        Binomial::new(n, prob.min(1.0))
            .expect("probability clamped to [0, 1]")
            .sample(&mut rng)
    };

    let mut stats = ObservedStatistics {
        n_pulses,
        ..ObservedStatistics::default()
    };
    for basis in [Basis::X, Basis::Z] {
        let sift = PulseModel::sifted_prob(p, basis);
        let mut counts = BasisCounts::default();
        for (i, pk) in p.intensity_probs().into_iter().enumerate() {
            let det = draw(n_pulses, pk * sift * model.detect[i]);
            // errors are a thinning of detections, so m <= n holds by construction
            let err_given_det = if model.detect[i] > 0.0 {
                model.error[i] / model.detect[i]
            } else {
                0.0
            };
            counts.detections[i] = det;
            counts.errors[i] = draw(det, err_given_det);
        }
        match basis {
            Basis::X => stats.x = counts,
            Basis::Z => stats.z = counts,
        }
    }
    Ok(stats)
}

/// Binomial mean and standard deviation of every count, in the order
/// `x.detections, x.errors, z.detections, z.errors`.
pub fn count_moments(
    p: &ProtocolParams,
    ch: &ChannelModel,
) -> Result<Vec<(f64, f64)>, QkdError> {
    let model = PulseModel::new(p, ch)?;
    let n = model.pulses_for_target(p)? as f64;
    let mut out = Vec::with_capacity(12);
    for basis in [Basis::X, Basis::Z] {
        let sift = PulseModel::sifted_prob(p, basis);
        for probs in [model.detect, model.error] {
            for (i, pk) in p.intensity_probs().into_iter().enumerate() {
                let q = (pk * sift * probs[i]).min(1.0);
                out.push((n * q, (n * q * (1.0 - q)).sqrt()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flatten(s: &ObservedStatistics) -> Vec<u64> {
        [s.x.detections, s.x.errors, s.z.detections, s.z.errors].concat()
    }

    #[test]
    fn expected_reaches_target() {
        let p = ProtocolParams::default();
        let s = expected_statistics(&p, &ChannelModel::default()).unwrap();
        assert!(s.raw_key_bits() >= p.n_x);
        assert!(s.is_consistent());
        // frozen from the straight-line reference evaluation
        assert_eq!(s.n_pulses, 1_134_034_833);
        assert_eq!(s.x.detections, [7_868_889, 1_990_949, 140_162]);
        assert_eq!(s.z.errors, [11_525, 2_979, 219]);
    }

    #[test]
    fn pure_x_basis_has_no_z_counts() {
        // p_x = 1 is outside the protocol domain, so approach it from below
        let p = ProtocolParams {
            p_x: 1.0 - 1e-9,
            ..ProtocolParams::default()
        };
        let s = expected_statistics(&p, &ChannelModel::default()).unwrap();
        assert_eq!(s.z.detections, [0, 0, 0]);
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        let ch = ChannelModel {
            e_mis: 0.0,
            p_dc: 0.0,
            p_ap: 0.0,
            ..ChannelModel::default()
        };
        let s = expected_statistics(&ProtocolParams::default(), &ch).unwrap();
        assert_eq!(s.x.errors, [0, 0, 0]);
        assert_eq!(s.z.errors, [0, 0, 0]);
        for seed in 0..5 {
            let s = sample_statistics(&ProtocolParams::default(), &ch, seed).unwrap();
            assert_eq!(s.x.errors, [0, 0, 0]);
            assert_eq!(s.z.errors, [0, 0, 0]);
        }
    }

    #[test]
    fn unreachable_target() {
        let p = ProtocolParams {
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            ..ProtocolParams::default()
        };
        // ordering check fires first for a degenerate source
        assert!(expected_statistics(&p, &ChannelModel::default()).is_err());
        let dark = PulseModel {
            detect: [0.0; 3],
            error: [0.0; 3],
        };
        assert!(matches!(
            dark.pulses_for_target(&ProtocolParams::default()),
            Err(QkdError::UnreachableTarget)
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ProtocolParams::default();
        let ch = ChannelModel::default();
        assert_eq!(
            sample_statistics(&p, &ch, 7).unwrap(),
            sample_statistics(&p, &ch, 7).unwrap()
        );
        assert_ne!(
            sample_statistics(&p, &ch, 7).unwrap(),
            sample_statistics(&p, &ch, 8).unwrap()
        );
    }

    #[test]
    fn samples_within_five_sigma() {
        let p = ProtocolParams::default();
        let ch = ChannelModel::default();
        let moments = count_moments(&p, &ch).unwrap();
        for seed in 0..10 {
            let s = sample_statistics(&p, &ch, seed).unwrap();
            for (v, (mean, sd)) in flatten(&s).into_iter().zip(&moments) {
                assert!(
                    (v as f64 - mean).abs() <= 5.0 * sd.max(1.0),
                    "seed {seed}: {v} vs {mean} ± {sd}"
                );
            }
        }
    }
}
