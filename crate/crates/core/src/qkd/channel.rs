//! Fiber channel model: transmittance, detection and bit-error probabilities,
//! and the Poisson photon-number statistics of the weak-coherent source.

use super::{ChannelModel, ProtocolParams, QkdError};

/// Fiber attenuation in dB per km.
pub const ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Binary Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64, QkdError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QkdError::Domain {
            what: "binary entropy argument",
            value: x,
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Power transmittance of `length_km` of standard fiber.
pub fn transmittance(length_km: f64) -> Result<f64, QkdError> {
    if !(length_km >= 0.0) {
        return Err(QkdError::Domain {
            what: "fiber length",
            value: length_km,
        });
    }
    Ok(10f64.powf(-ATTENUATION_DB_PER_KM * length_km / 10.0))
}

/// Expected detection probability for a pulse of intensity `k`, excluding
/// after-pulses.
pub fn detection_rate(k: f64, ch: &ChannelModel) -> Result<f64, QkdError> {
    if !(k >= 0.0) {
        return Err(QkdError::Domain {
            what: "intensity",
            value: k,
        });
    }
    let eta = transmittance(ch.length_km)?;
    Ok(1.0 - (1.0 - 2.0 * ch.p_dc) * (-eta * ch.eta_bob * k).exp())
}

/// Per-pulse probability of a bit error for intensity `k`.
///
/// The misalignment term uses the fiber transmittance alone, without the
/// detector efficiency.
pub fn bit_error_prob(k: f64, ch: &ChannelModel) -> Result<f64, QkdError> {
    let r = detection_rate(k, ch)?;
    let eta = transmittance(ch.length_km)?;
    Ok(ch.p_dc + ch.e_mis * (1.0 - (-eta * k).exp()) + ch.p_ap * r / 2.0)
}

/// Probability that the source emits an `n`-photon state, averaged over the
/// three intensities.
pub fn photon_number_prob(n: u32, p: &ProtocolParams) -> f64 {
    let factorial: f64 = (1..=n).map(f64::from).product();
    p.intensities()
        .iter()
        .zip(p.intensity_probs())
        .map(|(&k, pk)| (-k).exp() * k.powi(n as i32) * pk / factorial)
        .sum()
}
