use proptest::prelude::*;

use qkd_microgrid::qkd::{evaluate, transmittance, ChannelModel, ProtocolParams};
use qkd_microgrid::sim::{run_simulation, ChannelConfig, KpsConfig, SimConfig};

/// Smaller blocks keep the simulated packet counts low.
fn small_blocks() -> ProtocolParams {
    ProtocolParams {
        n_x: 3_000_000,
        ..ProtocolParams::default()
    }
}

/// `model` with its pulse rate scaled so one block takes `period` seconds.
fn with_period(model: ChannelModel, period: f64) -> (ChannelModel, u64) {
    let r = evaluate(&small_blocks(), &model).unwrap();
    let scaled = ChannelModel {
        pulse_rate: r.n_pulses as f64 / period,
        ..model
    };
    (scaled, r.ell)
}

fn scenario(channels: Vec<ChannelModel>, tx_rate: f64, duration: f64, kps: bool) -> SimConfig {
    SimConfig {
        duration,
        tx_rate,
        record_packets: false,
        sample_interval: duration,
        channels: channels
            .into_iter()
            .map(|model| ChannelConfig {
                model,
                protocol: small_blocks(),
                ..ChannelConfig::default()
            })
            .collect(),
        kps: KpsConfig {
            enabled: kps,
            ..KpsConfig::default()
        },
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transmittance_is_multiplicative(a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let joint = transmittance(a + b).unwrap();
        let split = transmittance(a).unwrap() * transmittance(b).unwrap();
        prop_assert!((joint - split).abs() <= 1e-12 * joint);
    }

    #[test]
    fn key_length_does_not_grow_with_distance(l in 0.0f64..60.0, dl in 0.0f64..20.0, e in 5e-4f64..9e-4) {
        let p = ProtocolParams::default();
        let near = evaluate(&p, &ChannelModel::default().with_length(l).with_e_mis(e)).unwrap();
        let far = evaluate(&p, &ChannelModel::default().with_length(l + dl).with_e_mis(e)).unwrap();
        let speed = |r: &qkd_microgrid::qkd::KeyRateResult| r.ell as f64 / r.n_pulses as f64;
        prop_assert!(speed(&far) <= speed(&near));
    }

    #[test]
    fn no_exhaustion_when_generation_covers_use(
        l in 5.0f64..40.0,
        period in 0.5f64..3.0,
        load in 0.3f64..1.0,
        periods in 1.5f64..4.0,
    ) {
        let (model, ell) = with_period(ChannelModel::default().with_length(l), period);
        // at most floor(tx * T) + 1 packets fall inside one period
        let tx_rate = load * (ell as f64 / 64.0 - 1.0) / period;
        prop_assume!(64 * ((tx_rate * period).floor() as u64 + 1) <= ell);
        let trace = run_simulation(&scenario(vec![model], tx_rate, periods * period, false)).unwrap();
        prop_assert!(trace.exhaustion.is_empty());
    }

    #[test]
    fn sharing_never_adds_exhaustion_with_a_surplus_donor(
        l in 5.0f64..30.0,
        period in 0.5f64..2.0,
        deficit in 1.05f64..2.5,
        periods in 2.0f64..5.0,
    ) {
        let base = ChannelModel::default().with_length(l);
        let (short, ell) = with_period(base.clone(), period);
        let tx_rate = deficit * ell as f64 / 64.0 / period;
        // the donor produces three times the load of both channels
        let donor_period = ell as f64 / (3.0 * 2.0 * 64.0 * (tx_rate + 1.0));
        let (donor, _) = with_period(base, donor_period);
        let duration = periods * period;
        let off = run_simulation(&scenario(vec![short.clone(), donor.clone()], tx_rate, duration, false)).unwrap();
        let on = run_simulation(&scenario(vec![short, donor], tx_rate, duration, true)).unwrap();
        prop_assert!(off.total_exhausted_secs() > 0.0);
        prop_assert!(on.total_exhausted_secs() <= off.total_exhausted_secs());
    }
}
