use num_traits::{FromPrimitive, Num};

use crate::error::{invalid, Result};

/// Stepsize sequence `η_t`.
///
/// Generic over any numeric field so the schedule can be evaluated in
/// exact rational arithmetic as well as floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeSchedule<T> {
    Constant(T),
    /// `η_t = 2 / (mu (t + t0))`.
    Diminishing {
        mu: T,
        t0: T,
    },
}

impl<T> StepsizeSchedule<T>
where
    T: Num + PartialOrd + Copy + FromPrimitive,
{
    pub fn constant(eta: T) -> Result<Self> {
        if !(eta > T::zero()) {
            return Err(invalid("constant stepsize must be positive"));
        }
        Ok(Self::Constant(eta))
    }

    pub fn diminishing(mu: T, t0: T) -> Result<Self> {
        if !(mu > T::zero()) || !(t0 > T::zero()) {
            return Err(invalid("diminishing stepsize needs mu > 0 and t0 > 0"));
        }
        Ok(Self::Diminishing { mu, t0 })
    }

    pub fn stepsize_at(&self, t: u64) -> T {
        match *self {
            Self::Constant(eta) => eta,
            Self::Diminishing { mu, t0 } => {
                let t = T::from_u64(t).expect("iteration index representable");
                let two = T::one() + T::one();
                two / (mu * (t + t0))
            }
        }
    }
}
