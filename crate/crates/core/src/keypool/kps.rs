//! Key pool sharing: a pool that drops below its low-water mark is refilled
//! with bits taken from the fullest pool that can spare them.

use serde::{Deserialize, Serialize};

use super::material::{materialize, KeyMaterial};
use super::pool::{KeyPool, PoolId, Purpose};
use super::PoolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DonorSelection {
    /// Fullest eligible pool; ties go to the lowest id.
    #[default]
    HighestLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpsPolicy {
    /// Low-water mark in bits, applied to every pool in a scenario.
    pub threshold: u64,
    /// Bits moved per transfer.
    pub transfer_size: u64,
    pub donor_selection: DonorSelection,
    /// Block-cipher key taken from the recipient to protect the transfer.
    pub transfer_key_bits: u64,
}

impl Default for KpsPolicy {
    fn default() -> Self {
        Self {
            threshold: 5_000,
            transfer_size: 20_000,
            donor_selection: DonorSelection::HighestLevel,
            transfer_key_bits: 128,
        }
    }
}

impl KpsPolicy {
    pub fn validate(&self) -> Result<(), PoolError> {
        if self.transfer_size <= self.transfer_key_bits {
            return Err(PoolError::InvalidPolicy(
                "transfer_size must exceed transfer_key_bits".into(),
            ));
        }
        if self.transfer_key_bits == 0 {
            return Err(PoolError::InvalidPolicy("transfer_key_bits must be positive".into()));
        }
        Ok(())
    }
}

/// One completed transfer.
///
/// `key` and `payload` are the material the MGCC encrypts and the
/// recipient's controller decrypts; the caller drives that exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferEvent {
    pub donor: PoolId,
    pub recipient: PoolId,
    pub moved_bits: u64,
    pub key_bits: u64,
    pub donor_level_after: u64,
    pub recipient_level_after: u64,
    pub key: KeyMaterial,
    pub payload: KeyMaterial,
}

impl TransferEvent {
    pub fn donor_delta(&self) -> i64 {
        -(self.moved_bits as i64)
    }

    pub fn recipient_delta(&self) -> i64 {
        self.moved_bits as i64 - self.key_bits as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KpsEvent {
    Transfer(TransferEvent),
    /// Every other pool would fall to or below its own threshold by donating.
    NoEligibleDonor { recipient: PoolId, level: u64 },
    /// The recipient cannot pay for the transfer key.
    RecipientKeyShortage { recipient: PoolId, level: u64 },
    /// The transfer would overflow the recipient's capacity.
    RecipientFull { recipient: PoolId, level: u64 },
}

fn select_donor(pools: &[KeyPool], recipient: usize, policy: &KpsPolicy) -> Option<usize> {
    match policy.donor_selection {
        DonorSelection::HighestLevel => pools
            .iter()
            .enumerate()
            .filter(|&(j, p)| {
                j != recipient
                    && p.level() >= policy.transfer_size
                    && p.level() - policy.transfer_size > p.threshold()
            })
            .max_by(|(_, a), (_, b)| a.level().cmp(&b.level()).then(b.id().cmp(&a.id())))
            .map(|(j, _)| j),
    }
}

/// Runs one KPS pass over `pools`, refilling each pool that sits below its
/// threshold at most once. Pools are visited in slice order.
pub fn kps_check_and_transfer(
    pools: &mut [KeyPool],
    policy: &KpsPolicy,
) -> Result<Vec<KpsEvent>, PoolError> {
    if pools.len() < 2 {
        return Err(PoolError::TooFewPools(pools.len()));
    }
    policy.validate()?;
    let mut events = Vec::new();
    for i in 0..pools.len() {
        if !pools[i].below_threshold() {
            continue;
        }
        let recipient = pools[i].id();
        let level = pools[i].level();
        let Some(d) = select_donor(pools, i, policy) else {
            events.push(KpsEvent::NoEligibleDonor { recipient, level });
            continue;
        };
        if level < policy.transfer_key_bits {
            events.push(KpsEvent::RecipientKeyShortage { recipient, level });
            continue;
        }
        if let Some(cap) = pools[i].capacity() {
            if level - policy.transfer_key_bits + policy.transfer_size > cap {
                events.push(KpsEvent::RecipientFull { recipient, level });
                continue;
            }
        }

        let key = pools[i].extract_for(policy.transfer_key_bits, Purpose::TransferKey)?;
        let segments = pools[d].take_segments(policy.transfer_size, Purpose::TransferOut)?;
        let payload = materialize(&segments);
        pools[i].deposit_segments(segments);
        events.push(KpsEvent::Transfer(TransferEvent {
            donor: pools[d].id(),
            recipient,
            moved_bits: policy.transfer_size,
            key_bits: policy.transfer_key_bits,
            donor_level_after: pools[d].level(),
            recipient_level_after: pools[i].level(),
            key,
            payload,
        }));
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pools(levels: &[u64]) -> Vec<KeyPool> {
        levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let mut p = KeyPool::new(PoolId(i as u32 + 1), 100 + i as u64).with_threshold(5_000);
                p.deposit(l);
                p
            })
            .collect()
    }

    fn transfers(events: &[KpsEvent]) -> Vec<&TransferEvent> {
        events
            .iter()
            .filter_map(|e| match e {
                KpsEvent::Transfer(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn refills_pool_below_threshold() {
        let mut ps = pools(&[4_999, 60_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        let t = transfers(&events);
        assert_eq!(t.len(), 1);
        assert_eq!(ps[0].level(), 4_999 + 20_000 - 128);
        assert_eq!(ps[1].level(), 40_000);
        assert_eq!(t[0].donor_delta(), -20_000);
        assert_eq!(t[0].recipient_delta(), 19_872);
        assert_eq!(t[0].payload.len_bits(), 20_000);
        assert_eq!(t[0].key.len_bits(), 128);
    }

    #[test]
    fn no_op_above_threshold() {
        let mut ps = pools(&[5_000, 60_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert!(events.is_empty());
        assert_eq!(ps[0].level(), 5_000);
        assert_eq!(ps[1].level(), 60_000);
    }

    #[test]
    fn donor_must_stay_above_its_threshold() {
        let mut ps = pools(&[0, 10_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert_eq!(
            events,
            vec![KpsEvent::NoEligibleDonor {
                recipient: PoolId(1),
                level: 0
            }]
        );
        // exactly at the boundary is still ineligible
        let mut ps = pools(&[1_000, 25_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert!(matches!(events[0], KpsEvent::NoEligibleDonor { .. }));
        let mut ps = pools(&[1_000, 25_001]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert_eq!(transfers(&events).len(), 1);
        assert_eq!(ps[1].level(), 5_001);
    }

    #[test]
    fn highest_level_donor_lowest_id_on_ties() {
        let mut ps = pools(&[1_000, 40_000, 90_000, 90_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert_eq!(transfers(&events)[0].donor, PoolId(3));
    }

    #[test]
    fn recipient_needs_transfer_key() {
        let mut ps = pools(&[100, 90_000]);
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert!(matches!(events[0], KpsEvent::RecipientKeyShortage { .. }));
        assert_eq!(ps[1].level(), 90_000);
    }

    #[test]
    fn transferred_bits_are_the_donors_bits() {
        let mut ps = pools(&[1_000, 90_000]);
        let mut shadow = KeyPool::new(PoolId(2), 101);
        shadow.deposit(90_000);
        let expected = shadow.extract(20_000).unwrap();
        let events = kps_check_and_transfer(&mut ps, &KpsPolicy::default()).unwrap();
        assert_eq!(transfers(&events)[0].payload, expected);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut one = pools(&[0]);
        assert!(kps_check_and_transfer(&mut one, &KpsPolicy::default()).is_err());
        let bad = KpsPolicy {
            transfer_size: 128,
            ..KpsPolicy::default()
        };
        let mut ps = pools(&[0, 100_000]);
        assert!(kps_check_and_transfer(&mut ps, &bad).is_err());
    }
}
