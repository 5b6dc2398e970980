//! Transmit energy `k * d^alpha` and per-component energy accounting.

use std::ops::AddAssign;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Clone, Copy)]
pub enum EnergyError {
    #[error("attenuation factor {0} outside [2, 5]")]
    AlphaOutOfRange(f64),
    #[error("distance {0} is negative")]
    NegativeDistance(f64),
}

/// Energy to transmit one packet over `distance` meters.
pub fn energy_tx<F: Scalar>(distance: F, alpha: F, k: F) -> Result<F, EnergyError> {
    if !(alpha >= F::lit(2.0) && alpha <= F::lit(5.0)) {
        return Err(EnergyError::AlphaOutOfRange(alpha.to_f64_lossy()));
    }
    if distance < F::zero() {
        return Err(EnergyError::NegativeDistance(distance.to_f64_lossy()));
    }
    let attenuated = if alpha.fract() == F::zero() {
        distance.powi(alpha.to_i32().unwrap_or(2))
    } else {
        distance.powf(alpha)
    };
    Ok(k * attenuated)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessingComponent {
    Prioritizer,
    SchedulingUnit,
}

/// Joules spent by one node (or a whole network when merged).
///
/// `congestion` and `implicit_congestion` re-attribute energy already
/// counted in the other three buckets; they are never spent on their own.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyLedger<F> {
    pub prioritizer: F,
    pub scheduling_unit: F,
    /// Spent on packets that were later dropped (queue overflow or a
    /// congestion-attributed link loss).
    pub congestion: F,
    /// Spent on packets that missed their deadline.
    pub implicit_congestion: F,
    pub transmission: F,
}

impl<F: Scalar> EnergyLedger<F> {
    pub fn charge_processing(
        &mut self,
        component: ProcessingComponent,
        packets: u64,
        per_packet: F,
    ) {
        let joules = F::lit(packets as f64) * per_packet;
        match component {
            ProcessingComponent::Prioritizer => self.prioritizer = self.prioritizer + joules,
            ProcessingComponent::SchedulingUnit => {
                self.scheduling_unit = self.scheduling_unit + joules
            }
        }
    }

    pub fn charge_tx(&mut self, joules: F) {
        self.transmission = self.transmission + joules;
    }

    /// Energy actually drawn from the battery.
    pub fn spent(&self) -> F {
        self.prioritizer + self.scheduling_unit + self.transmission
    }

    /// Energy attributed to congestion of either kind.
    pub fn wasted(&self) -> F {
        self.congestion + self.implicit_congestion
    }

    pub fn is_consistent(&self) -> bool {
        let parts = [
            self.prioritizer,
            self.scheduling_unit,
            self.congestion,
            self.implicit_congestion,
            self.transmission,
        ];
        // Attribution sums are accumulated in a different order than the
        // spend sums, so allow for rounding.
        let slack = self.spent() * F::lit(1e-9);
        parts.iter().all(|p| *p >= F::zero()) && self.wasted() <= self.spent() + slack
    }
}

impl<F: Scalar> AddAssign<&EnergyLedger<F>> for EnergyLedger<F> {
    fn add_assign(&mut self, rhs: &EnergyLedger<F>) {
        self.prioritizer = self.prioritizer + rhs.prioritizer;
        self.scheduling_unit = self.scheduling_unit + rhs.scheduling_unit;
        self.congestion = self.congestion + rhs.congestion;
        self.implicit_congestion = self.implicit_congestion + rhs.implicit_congestion;
        self.transmission = self.transmission + rhs.transmission;
    }
}
