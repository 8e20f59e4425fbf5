//! Runtime check of a safety invariant over a recorded trace.

use super::trace::{EventKind, Sample, SimTrace, ViolationEvent};
use super::{SimError, TAG_LEVEL, TAG_PRESSURE, TAG_PUMP, TAG_VALVE};
use crate::model::SafetyInvariant;
use crate::st::eval::eval_bool;

/// Value of a tag in a recorded sample.
pub fn sample_tag(s: &Sample, name: &str) -> Option<f64> {
    match name {
        TAG_LEVEL => Some(s.level),
        TAG_PRESSURE => Some(s.pressure),
        TAG_VALVE => Some(s.valve),
        TAG_PUMP => Some(f64::from(u8::from(s.pump_on))),
        other => s.extra.get(other).copied(),
    }
}

fn predicate_and_actuator(s: &Sample, inv: &SafetyInvariant) -> Result<(bool, bool), SimError> {
    let lookup = |n: &str| sample_tag(s, n);
    let p = eval_bool(&inv.predicate, &lookup).map_err(|u| SimError::UnknownTag(u.0))?;
    let a =
        sample_tag(s, &inv.actuator).ok_or_else(|| SimError::UnknownTag(inv.actuator.clone()))?;
    Ok((p, a != 0.0))
}

/// Hazard events at every sample where the predicate holds but the actuator
/// is not at its safe value. With a baseline, also the first sample where
/// the predicate is false and the actuator sits at its safe value although
/// the baseline had it elsewhere at the same scan.
pub fn monitor_invariant(
    trace: &SimTrace,
    inv: &SafetyInvariant,
    baseline: Option<&SimTrace>,
) -> Result<Vec<ViolationEvent>, SimError> {
    if let Some(b) = baseline {
        if b.samples.len() != trace.samples.len() {
            return Err(SimError::LengthMismatch {
                left: b.samples.len(),
                right: trace.samples.len(),
            });
        }
    }
    let safe = inv.safe_value();
    let mut events = Vec::new();
    let mut onset_seen = false;
    for (i, s) in trace.samples.iter().enumerate() {
        let (p, actuator) = predicate_and_actuator(s, inv)?;
        if p && actuator != safe {
            events.push(ViolationEvent {
                t: s.t,
                kind: EventKind::Hazard,
            });
        }
        if let (Some(b), false) = (baseline, onset_seen) {
            if !p && actuator == safe {
                let (_, base_actuator) = predicate_and_actuator(&b.samples[i], inv)?;
                if base_actuator != safe {
                    onset_seen = true;
                    events.push(ViolationEvent {
                        t: s.t,
                        kind: EventKind::DisruptionOnset,
                    });
                }
            }
        }
    }
    Ok(events)
}
