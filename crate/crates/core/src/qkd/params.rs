use serde::{Deserialize, Serialize};

use super::QkdError;

/// Laser pulse repetition rate used when none is configured.
///
/// Chosen so that the Table-I link at 50 km yields roughly 1,280 secret bits
/// per second, i.e. twenty 64-bit packets per second.
pub const DEFAULT_PULSE_RATE_HZ: f64 = 4.84e6;

/// How much information error correction is assumed to leak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcLeakage {
    /// `n_X * eta_ec * h(phi_X)`, driven by the phase-error bound.
    #[default]
    PhaseError,
    /// `n_X * eta_ec * h(E_X)` with `E_X` the observed X-basis error rate.
    ObservedQber,
}

/// Protocol-side constants of the three-intensity decoy-state protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    /// Signal intensity (mean photon number).
    pub k1: f64,
    /// Decoy intensity.
    pub k2: f64,
    /// Vacuum-like intensity.
    pub k3: f64,
    pub p_k1: f64,
    pub p_k2: f64,
    pub p_k3: f64,
    /// Probability of choosing the X basis, on either side.
    pub p_x: f64,
    /// Raw key size that closes a block, in bits.
    pub n_x: u64,
    pub eta_ec: f64,
    pub eps_c: f64,
    pub eps_s: f64,
    pub ec_leakage: EcLeakage,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            k1: 0.4,
            k2: 0.1,
            k3: 0.007,
            p_k1: 1.0 / 3.0,
            p_k2: 1.0 / 3.0,
            p_k3: 1.0 / 3.0,
            p_x: 0.8,
            n_x: 10_000_000,
            eta_ec: 1.16,
            eps_c: 1e-11,
            eps_s: 1e-11,
            ec_leakage: EcLeakage::PhaseError,
        }
    }
}

impl ProtocolParams {
    pub fn intensities(&self) -> [f64; 3] {
        [self.k1, self.k2, self.k3]
    }

    pub fn intensity_probs(&self) -> [f64; 3] {
        [self.p_k1, self.p_k2, self.p_k3]
    }

    pub fn validate(&self) -> Result<(), QkdError> {
        let bad = |msg: &str| Err(QkdError::InvalidParams(msg.to_string()));
        let finite = [
            self.k1, self.k2, self.k3, self.p_k1, self.p_k2, self.p_k3, self.p_x, self.eta_ec,
            self.eps_c, self.eps_s,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("protocol parameters must be finite");
        }
        if !(self.k3 >= 0.0 && self.k2 > self.k3 && self.k1 > self.k2 + self.k3) {
            return bad("intensities must satisfy k1 > k2 + k3 and k2 > k3 >= 0");
        }
        let probs = self.intensity_probs();
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("intensity probabilities must lie in [0, 1]");
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("intensity probabilities must sum to 1");
        }
        if !(self.p_x > 0.0 && self.p_x < 1.0) {
            return bad("p_x must lie in (0, 1)");
        }
        if self.n_x < 1 {
            return bad("n_x must be at least 1");
        }
        if !(self.eps_c > 0.0 && self.eps_c < 1.0 && self.eps_s > 0.0 && self.eps_s < 1.0) {
            return bad("eps_c and eps_s must lie in (0, 1)");
        }
        if self.eta_ec < 1.0 {
            return bad("eta_ec must be at least 1");
        }
        Ok(())
    }
}

/// Physical constants of the fiber link and detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Fiber length in km.
    pub length_km: f64,
    /// Optical misalignment error; raised by an attacker on the optics.
    pub e_mis: f64,
    pub p_dc: f64,
    pub p_ap: f64,
    pub eta_bob: f64,
    /// Pulses per second.
    pub pulse_rate: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            length_km: 5.0,
            e_mis: 5e-4,
            p_dc: 6e-7,
            p_ap: 4e-2,
            eta_bob: 0.1,
            pulse_rate: DEFAULT_PULSE_RATE_HZ,
        }
    }
}

impl ChannelModel {
    pub fn with_length(mut self, length_km: f64) -> Self {
        self.length_km = length_km;
        self
    }

    pub fn with_e_mis(mut self, e_mis: f64) -> Self {
        self.e_mis = e_mis;
        self
    }

    pub fn with_eta_bob(mut self, eta_bob: f64) -> Self {
        self.eta_bob = eta_bob;
        self
    }

    pub fn validate(&self) -> Result<(), QkdError> {
        let bad = |msg: &str| Err(QkdError::InvalidParams(msg.to_string()));
        if !(self.length_km.is_finite() && self.length_km >= 0.0) {
            return bad("fiber length must be finite and non-negative");
        }
        for (name, p) in [("e_mis", self.e_mis), ("p_dc", self.p_dc), ("p_ap", self.p_ap)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QkdError::InvalidParams(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.eta_bob > 0.0 && self.eta_bob <= 1.0) {
            return bad("eta_bob must lie in (0, 1]");
        }
        if !(self.pulse_rate.is_finite() && self.pulse_rate > 0.0) {
            return bad("pulse_rate must be positive");
        }
        Ok(())
    }
}
