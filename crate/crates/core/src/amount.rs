//! Exact fixed-point amounts.
//!
//! All estimator outputs and aggregates are integer counts of milli-units:
//! thousandths of a person-hour in cost mode, thousandths of a size point in
//! size mode. Integer arithmetic makes every aggregation exact and
//! order-invariant, which the engine's parallel contract depends on.

use std::fmt;
use std::iter::Sum;

use crate::metrics::MetricError;

/// An exact non-negative quantity in milli-units (0.001 person-hour or
/// 0.001 size point, depending on the active measure mode).
///
/// Rounding from a fractional value happens once, at the estimator boundary,
/// via [`MilliAmount::round_from`]; everything downstream is integer math.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MilliAmount(u64);

impl MilliAmount {
    pub const ZERO: MilliAmount = MilliAmount(0);

    /// Wraps a raw milli-unit count.
    pub const fn from_milli(milli: u64) -> Self {
        MilliAmount(milli)
    }

    /// Converts a value in whole units (person-hours or points) to
    /// milli-units, rounding half-even.
    ///
    /// Fails on negative, non-finite, or unrepresentably large values.
    pub fn round_from(units: f64) -> Result<Self, MetricError> {
        if !units.is_finite() {
            return Err(MetricError::NonFinite { value: units });
        }
        if units < 0.0 {
            return Err(MetricError::NegativeAmount { value: units });
        }
        let scaled = (units * 1000.0).round_ties_even();
        // Beyond 2^53 the f64 grid is coarser than one milli-unit and the
        // "exact" contract is unkeepable.
        if scaled >= 9_007_199_254_740_992.0 {
            return Err(MetricError::Overflow);
        }
        Ok(MilliAmount(scaled as u64))
    }

    /// Raw milli-unit count.
    pub const fn milli(self) -> u64 {
        self.0
    }

    /// Value in whole units, for display and currency conversion only.
    pub fn units_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(MilliAmount)
    }

    /// Exact sum; `None` on u64 overflow.
    pub fn checked_sum<I: IntoIterator<Item = Self>>(amounts: I) -> Option<Self> {
        amounts
            .into_iter()
            .try_fold(MilliAmount::ZERO, |acc, a| acc.checked_add(a))
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Decimal rendering with three fractional digits, e.g. `12.000`.
    pub fn to_decimal_string(self) -> String {
        format!("{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl fmt::Display for MilliAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl Sum<MilliAmount> for Option<MilliAmount> {
    fn sum<I: Iterator<Item = MilliAmount>>(iter: I) -> Self {
        MilliAmount::checked_sum(iter)
    }
}
