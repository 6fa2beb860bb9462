//! Finite-key secret key length of the three-intensity decoy-state protocol.
//!
//! Vacuum and single-photon yields are bounded from the per-intensity counts
//! after a Hoeffding-style fluctuation adjustment; the single-photon phase
//! error rate is bounded from Z-basis errors and carried over to X with a
//! random-sampling correction. Every intermediate bound is floored at zero so
//! that degenerate inputs still give a well-defined (zero) key length.

use serde::{Deserialize, Serialize};

use super::channel::{binary_entropy, photon_number_prob};
use super::stats::{expected_statistics, Basis, ObservedStatistics};
use super::{ChannelModel, EcLeakage, ProtocolParams, QkdError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    Detections,
    Errors,
}

/// Lower/upper fluctuation-adjusted count for one intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedCount {
    pub lower: f64,
    pub upper: f64,
}

/// `(e^k / p_k) * (count ± deviation)` with the lower value floored at zero.
pub fn adjust_count(count: f64, deviation: f64, k: f64, p_k: f64) -> Result<AdjustedCount, QkdError> {
    if p_k == 0.0 {
        return Err(QkdError::ZeroIntensityProbability);
    }
    let scale = k.exp() / p_k;
    Ok(AdjustedCount {
        lower: (scale * (count - deviation)).max(0.0),
        upper: scale * (count + deviation),
    })
}

/// Fluctuation-adjusted counts `n^±_{B,k}` (or `m^±_{B,k}`) for all three
/// intensities, ordered `[k1, k2, k3]`.
pub fn finite_key_adjusted_counts(
    stats: &ObservedStatistics,
    p: &ProtocolParams,
    basis: Basis,
    kind: CountKind,
) -> Result<[AdjustedCount; 3], QkdError> {
    let counts = stats.basis(basis);
    let (per_k, total) = match kind {
        CountKind::Detections => (counts.detections, counts.total_detections()),
        CountKind::Errors => (counts.errors, counts.total_errors()),
    };
    let deviation = ((total as f64 / 2.0) * (21.0 / p.eps_s).ln()).sqrt();
    let ks = p.intensities();
    let pks = p.intensity_probs();
    let mut out = [AdjustedCount {
        lower: 0.0,
        upper: 0.0,
    }; 3];
    for i in 0..3 {
        out[i] = adjust_count(per_k[i] as f64, deviation, ks[i], pks[i])?;
    }
    Ok(out)
}

/// Lower bound on vacuum events `xi_{B,0}` in the given basis.
pub fn vacuum_events_bound(
    stats: &ObservedStatistics,
    p: &ProtocolParams,
    basis: Basis,
) -> Result<f64, QkdError> {
    if p.k2 == p.k3 {
        return Err(QkdError::DegenerateDecoy);
    }
    let n = finite_key_adjusted_counts(stats, p, basis, CountKind::Detections)?;
    let chi0 = photon_number_prob(0, p);
    let bound = chi0 * (p.k2 * n[2].lower - p.k3 * n[1].upper) / (p.k2 - p.k3);
    Ok(bound.max(0.0))
}

/// Lower bound on single-photon events `xi_{B,1}`, given the vacuum bound
/// for the same basis. Capped at the basis' detection total.
pub fn single_photon_events_bound(
    stats: &ObservedStatistics,
    p: &ProtocolParams,
    basis: Basis,
    vacuum_bound: f64,
) -> Result<f64, QkdError> {
    let (k1, k2, k3) = (p.k1, p.k2, p.k3);
    let denom = k1 * (k2 - k3) - k2 * k2 + k3 * k3;
    if !(denom > 0.0) {
        return Err(QkdError::DecoyOrdering);
    }
    let n = finite_key_adjusted_counts(stats, p, basis, CountKind::Detections)?;
    let chi0 = photon_number_prob(0, p);
    let chi1 = photon_number_prob(1, p);
    let multi = (k2 * k2 - k3 * k3) / (k1 * k1) * (n[0].upper - vacuum_bound / chi0);
    let bound = chi1 * k1 * (n[1].lower - n[2].upper - multi) / denom;
    let total = stats.basis(basis).total_detections() as f64;
    Ok(bound.max(0.0).min(total))
}

/// The random-sampling correction `f(a, b, c, d)` applied when carrying an
/// error rate `b` measured on `c` events over to `d` events.
pub fn sampling_correction(eps: f64, b: f64, c: f64, d: f64) -> f64 {
    if !(b > 0.0 && b < 1.0) || !(c > 0.0 && d > 0.0) {
        return 0.0;
    }
    let spread = (1.0 - b) * b;
    let log_term = ((c + d) / (c * d * spread) * 441.0 / (eps * eps)).log2();
    let radicand = (c + d) * spread / (c * d * std::f64::consts::LN_2) * log_term;
    radicand.max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseErrorBound {
    /// Upper bound on single-photon bit errors in Z, `delta_{Z,1}`.
    pub delta_z1: f64,
    /// Phase error rate before clamping.
    pub unclamped: f64,
    /// Phase error rate clamped to `[0, 0.5]`.
    pub phi_x: f64,
}

/// Upper bound on the phase error rate of the single-photon X events.
pub fn phase_error_bound(
    stats: &ObservedStatistics,
    p: &ProtocolParams,
    xi_z1: f64,
    xi_x1: f64,
) -> Result<PhaseErrorBound, QkdError> {
    if !(xi_z1 > 0.0 && xi_x1 > 0.0) {
        return Err(QkdError::InsufficientStatistics);
    }
    if p.k2 == p.k3 {
        return Err(QkdError::DegenerateDecoy);
    }
    let m = finite_key_adjusted_counts(stats, p, Basis::Z, CountKind::Errors)?;
    let chi1 = photon_number_prob(1, p);
    let delta_z1 = (chi1 * (m[1].upper - m[2].lower) / (p.k2 - p.k3)).max(0.0);
    let rate = delta_z1 / xi_z1;
    let unclamped = rate + sampling_correction(p.eps_s, rate, xi_z1, xi_x1);
    Ok(PhaseErrorBound {
        delta_z1,
        unclamped,
        phi_x: unclamped.clamp(0.0, 0.5),
    })
}

/// Intermediate bounds, kept for diagnostics and trace output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FiniteKeyBounds {
    pub xi_x0: f64,
    pub xi_x1: f64,
    pub xi_z0: f64,
    pub xi_z1: f64,
    pub delta_z1: f64,
    pub phi_x: f64,
    pub phi_x_unclamped: f64,
    pub lambda_ec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Secret key length in bits.
    pub ell: u64,
    /// Pulses consumed by the block.
    pub n_pulses: u64,
    pub bounds: FiniteKeyBounds,
    /// Set when a single-photon bound vanished and the block yields no key.
    pub insufficient_statistics: bool,
}

impl KeyRateResult {
    /// Secret bits per second at the given pulse rate.
    pub fn speed(&self, pulse_rate: f64) -> f64 {
        if self.n_pulses == 0 {
            return 0.0;
        }
        self.ell as f64 * pulse_rate / self.n_pulses as f64
    }

    /// Seconds needed to send the block's pulses.
    pub fn block_period(&self, pulse_rate: f64) -> f64 {
        self.n_pulses as f64 / pulse_rate
    }
}

/// Secret key length extractable from one block of statistics.
pub fn secret_key_length(
    stats: &ObservedStatistics,
    p: &ProtocolParams,
) -> Result<KeyRateResult, QkdError> {
    let n_x = stats.raw_key_bits();
    let empty = KeyRateResult {
        ell: 0,
        n_pulses: stats.n_pulses,
        bounds: FiniteKeyBounds::default(),
        insufficient_statistics: true,
    };
    if n_x == 0 {
        return Ok(empty);
    }

    let xi_x0 = vacuum_events_bound(stats, p, Basis::X)?;
    let xi_x1 = single_photon_events_bound(stats, p, Basis::X, xi_x0)?;
    let xi_z0 = vacuum_events_bound(stats, p, Basis::Z)?;
    let xi_z1 = single_photon_events_bound(stats, p, Basis::Z, xi_z0)?;
    let mut bounds = FiniteKeyBounds {
        xi_x0,
        xi_x1,
        xi_z0,
        xi_z1,
        ..FiniteKeyBounds::default()
    };

    let phase = match phase_error_bound(stats, p, xi_z1, xi_x1) {
        Ok(phase) => phase,
        Err(QkdError::InsufficientStatistics) => {
            return Ok(KeyRateResult { bounds, ..empty });
        }
        Err(e) => return Err(e),
    };
    bounds.delta_z1 = phase.delta_z1;
    bounds.phi_x = phase.phi_x;
    bounds.phi_x_unclamped = phase.unclamped;

    let h_phi = binary_entropy(phase.phi_x)?;
    let leak_rate = match p.ec_leakage {
        EcLeakage::PhaseError => h_phi,
        EcLeakage::ObservedQber => {
            let qber = stats.x.total_errors() as f64 / n_x as f64;
            binary_entropy(qber.clamp(0.0, 1.0))?
        }
    };
    bounds.lambda_ec = n_x as f64 * p.eta_ec * leak_rate;

    let raw = xi_x0 + xi_x1 - xi_x1 * h_phi
        - bounds.lambda_ec
        - 6.0 * (21.0 / p.eps_s).log2()
        - (2.0 / p.eps_c).log2();
    let ell = if phase.unclamped >= 0.5 || !(raw > 0.0) {
        0
    } else {
        raw.floor() as u64
    };
    Ok(KeyRateResult {
        ell,
        n_pulses: stats.n_pulses,
        bounds,
        insufficient_statistics: false,
    })
}

/// Expected statistics followed by the finite-key length.
pub fn evaluate(p: &ProtocolParams, ch: &ChannelModel) -> Result<KeyRateResult, QkdError> {
    let stats = expected_statistics(p, ch)?;
    secret_key_length(&stats, p)
}

/// Secret key generation speed in bits per second.
pub fn key_generation_speed(p: &ProtocolParams, ch: &ChannelModel) -> Result<f64, QkdError> {
    Ok(evaluate(p, ch)?.speed(ch.pulse_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkd::stats::BasisCounts;

    fn table_one() -> (ObservedStatistics, ProtocolParams) {
        let p = ProtocolParams::default();
        (expected_statistics(&p, &ChannelModel::default()).unwrap(), p)
    }

    #[test]
    fn zero_deviation_is_pure_rescaling() {
        let a = adjust_count(1000.0, 0.0, 0.4, 1.0 / 3.0).unwrap();
        assert_eq!(a.lower, a.upper);
        assert!((a.lower - 0.4f64.exp() * 3000.0).abs() < 1e-9);
        assert!(adjust_count(1.0, 0.0, 0.4, 0.0).is_err());
    }

    #[test]
    fn empty_counts_floor_to_zero() {
        let p = ProtocolParams::default();
        let stats = ObservedStatistics::default();
        let adj = finite_key_adjusted_counts(&stats, &p, Basis::X, CountKind::Detections).unwrap();
        assert!(adj.iter().all(|a| a.lower == 0.0));
        assert_eq!(single_photon_events_bound(&stats, &p, Basis::X, 0.0).unwrap(), 0.0);
        assert_eq!(secret_key_length(&stats, &p).unwrap().ell, 0);
    }

    #[test]
    fn adjusted_bounds_bracket_counts() {
        let (stats, p) = table_one();
        for basis in [Basis::X, Basis::Z] {
            for kind in [CountKind::Detections, CountKind::Errors] {
                let adj = finite_key_adjusted_counts(&stats, &p, basis, kind).unwrap();
                assert!(adj.iter().all(|a| a.upper > a.lower));
            }
        }
    }

    #[test]
    fn vacuum_bound_cases() {
        let p = ProtocolParams::default();
        // decoy counts present, vacuum-intensity counts absent: negative, floored
        let stats = ObservedStatistics {
            x: BasisCounts {
                detections: [0, 1000, 0],
                errors: [0; 3],
            },
            ..ObservedStatistics::default()
        };
        assert_eq!(vacuum_events_bound(&stats, &p, Basis::X).unwrap(), 0.0);

        // k3 = 0 collapses the bound to chi_0 * n^-_{k3}
        let p0 = ProtocolParams {
            k3: 0.0,
            ..ProtocolParams::default()
        };
        let stats = ObservedStatistics {
            x: BasisCounts {
                detections: [900_000, 200_000, 100_000],
                errors: [0; 3],
            },
            ..ObservedStatistics::default()
        };
        let adj = finite_key_adjusted_counts(&stats, &p0, Basis::X, CountKind::Detections).unwrap();
        let expect = photon_number_prob(0, &p0) * adj[2].lower;
        assert!((vacuum_events_bound(&stats, &p0, Basis::X).unwrap() - expect).abs() < 1e-6);

        let degenerate = ProtocolParams {
            k2: 0.05,
            k3: 0.05,
            ..ProtocolParams::default()
        };
        assert!(matches!(
            vacuum_events_bound(&stats, &degenerate, Basis::X),
            Err(QkdError::DegenerateDecoy)
        ));
    }

    #[test]
    fn table_one_bounds() {
        let (stats, p) = table_one();
        let xi_x0 = vacuum_events_bound(&stats, &p, Basis::X).unwrap();
        // the vacuum bound is negative before flooring at these parameters
        assert_eq!(xi_x0, 0.0);
        let xi_x1 = single_photon_events_bound(&stats, &p, Basis::X, xi_x0).unwrap();
        assert!(xi_x1 > 0.0 && xi_x1 < stats.raw_key_bits() as f64);
        assert!((xi_x1 - 6_991_359.41).abs() < 1.0);
    }

    #[test]
    fn single_photon_bound_grows_superlinearly() {
        let (stats, p) = table_one();
        let base = single_photon_events_bound(&stats, &p, Basis::X, 0.0).unwrap();
        let big = stats.scaled(4);
        let scaled = single_photon_events_bound(&big, &p, Basis::X, 0.0).unwrap();
        assert!(scaled > 2.0 * base);
        assert!(scaled > 4.0 * base);
    }

    #[test]
    fn decoy_ordering_error() {
        let (stats, _) = table_one();
        let p = ProtocolParams {
            k1: 0.1,
            k2: 0.09,
            k3: 0.02,
            ..ProtocolParams::default()
        };
        assert!(matches!(
            single_photon_events_bound(&stats, &p, Basis::X, 0.0),
            Err(QkdError::DecoyOrdering)
        ));
    }

    #[test]
    fn correction_vanishes_without_errors() {
        assert_eq!(sampling_correction(1e-11, 0.0, 1e6, 1e7), 0.0);
        assert!(sampling_correction(1e-11, 0.03, 1e6, 1e7) > 0.0);
    }

    #[test]
    fn phase_error_cases() {
        let (stats, p) = table_one();
        let phase = phase_error_bound(&stats, &p, 410_533.6, 6_991_359.4).unwrap();
        assert!(phase.phi_x > 0.0 && phase.phi_x < 0.11);
        assert!((phase.phi_x - 0.039_339_6).abs() < 1e-6);

        let mut noisy = stats;
        noisy.z.errors = stats.z.errors.map(|m| m * 10);
        let worse = phase_error_bound(&noisy, &p, 410_533.6, 6_991_359.4).unwrap();
        assert!(worse.phi_x > phase.phi_x);

        let mut clean = stats;
        clean.z.errors = [0; 3];
        let none = phase_error_bound(&clean, &p, 1e9, 1e9).unwrap();
        assert_eq!(none.delta_z1, 0.0);
        assert_eq!(none.phi_x, 0.0);

        assert!(matches!(
            phase_error_bound(&stats, &p, 0.0, 1.0),
            Err(QkdError::InsufficientStatistics)
        ));
    }

    #[test]
    fn table_one_key_length() {
        let (stats, p) = table_one();
        let r = secret_key_length(&stats, &p).unwrap();
        assert!(!r.insufficient_statistics);
        assert_eq!(r.ell, 2_542_979);
        assert!(r.ell <= stats.raw_key_bits());
    }

    #[test]
    fn noise_reduces_key_length() {
        let p = ProtocolParams::default();
        let quiet = evaluate(&p, &ChannelModel::default().with_e_mis(5e-4)).unwrap();
        let loud = evaluate(&p, &ChannelModel::default().with_e_mis(9e-4)).unwrap();
        assert!(loud.ell < quiet.ell);
    }

    #[test]
    fn saturated_phase_error_gives_no_key() {
        let (mut stats, p) = table_one();
        stats.z.errors = stats.z.detections.map(|n| n / 2);
        let r = secret_key_length(&stats, &p).unwrap();
        assert_eq!(r.bounds.phi_x, 0.5);
        assert_eq!(r.ell, 0);
    }

    #[test]
    fn speed_scales_with_pulse_rate() {
        let p = ProtocolParams::default();
        let ch = ChannelModel::default();
        let doubled = ChannelModel {
            pulse_rate: ch.pulse_rate * 2.0,
            ..ch.clone()
        };
        let a = key_generation_speed(&p, &ch).unwrap();
        let b = key_generation_speed(&p, &doubled).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn qber_leakage_convention() {
        let p = ProtocolParams {
            ec_leakage: EcLeakage::ObservedQber,
            ..ProtocolParams::default()
        };
        let stats = expected_statistics(&p, &ChannelModel::default()).unwrap();
        let r = secret_key_length(&stats, &p).unwrap();
        let qber = stats.x.total_errors() as f64 / stats.raw_key_bits() as f64;
        let expect = stats.raw_key_bits() as f64 * p.eta_ec * binary_entropy(qber).unwrap();
        assert!((r.bounds.lambda_ec - expect).abs() < 1e-6);
    }
}
