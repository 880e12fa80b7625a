//! Unit-safe power arithmetic.
//!
//! Logarithmic (dB, dBm) and linear (mW) quantities are distinct types so the
//! two can never be added together by accident. Receiver measurements follow
//! the usual chain: total power in dBm is converted to mW, the noise floor is
//! subtracted in the linear domain, and the SNR is the ratio of the two in dB.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Absolute power in decibel-milliwatts. Negative values are normal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerDbm(f64);

/// Absolute power in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerMw(f64);

/// Signal-to-noise ratio in decibels.
///
/// `+inf` is accepted as the noiseless sentinel ([`SnrDb::NOISELESS`]); NaN and
/// `-inf` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrDb(f64);

impl PowerDbm {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(invalid!("power in dBm must be finite, got {value}"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PowerMw {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(invalid!("power in mW must be finite and >= 0, got {value}"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl SnrDb {
    /// No injected noise at all.
    pub const NOISELESS: SnrDb = SnrDb(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            return Err(invalid!("SNR must be finite or +inf, got {value}"));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_noiseless(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Linear power ratio `10^(snr/10)`.
    pub fn linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

impl fmt::Display for SnrDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_noiseless() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for PowerDbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dBm", self.0)
    }
}

impl fmt::Display for PowerMw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mW", self.0)
    }
}

/// `10^(dBm/10)` milliwatts.
pub fn dbm_to_mw(p: PowerDbm) -> PowerMw {
    PowerMw(10f64.powf(p.0 / 10.0))
}

/// `10·log10(p / 1 mW)`.
pub fn mw_to_dbm(p: PowerMw) -> Result<PowerDbm> {
    if p.0 <= 0.0 {
        return Err(Error::Domain(format!(
            "cannot express {} mW in dBm (log of non-positive)",
            p.0
        )));
    }
    Ok(PowerDbm(10.0 * p.0.log10()))
}

pub fn snr_from_dbm(signal: PowerDbm, noise: PowerDbm) -> SnrDb {
    SnrDb(signal.0 - noise.0)
}

/// Signal power left after removing the noise floor from a combined reading.
pub fn signal_mw_from_total(total: PowerMw, noise: PowerMw) -> Result<PowerMw> {
    if total.0 < noise.0 {
        return Err(Error::InconsistentMeasurement {
            total: total.0,
            noise: noise.0,
        });
    }
    Ok(PowerMw(total.0 - noise.0))
}

pub fn snr_from_mw(signal: PowerMw, noise: PowerMw) -> Result<SnrDb> {
    if signal.0 <= 0.0 || noise.0 <= 0.0 {
        return Err(Error::Domain(format!(
            "SNR needs positive powers, got signal={} mW noise={} mW",
            signal.0, noise.0
        )));
    }
    Ok(SnrDb(10.0 * (signal.0 / noise.0).log10()))
}

/// Noise power that puts `signal` exactly at `target` SNR.
pub fn noise_mw_for_target_snr(signal: PowerMw, target: SnrDb) -> Result<PowerMw> {
    if signal.0 <= 0.0 {
        return Err(Error::Domain(format!(
            "signal power must be positive, got {} mW",
            signal.0
        )));
    }
    Ok(PowerMw(signal.0 / target.linear()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dbm(v: f64) -> PowerDbm {
        PowerDbm::new(v).unwrap()
    }
    fn mw(v: f64) -> PowerMw {
        PowerMw::new(v).unwrap()
    }

    #[test]
    fn dbm_to_mw_examples() {
        assert_eq!(dbm_to_mw(dbm(0.0)).value(), 1.0);
        assert_relative_eq!(dbm_to_mw(dbm(10.0)).value(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_mw(dbm(-30.0)).value(), 0.001, max_relative = 1e-12);
        assert!(PowerDbm::new(f64::NAN).is_err());
        assert!(PowerDbm::new(f64::INFINITY).is_err());
    }

    #[test]
    fn mw_to_dbm_examples() {
        assert_eq!(mw_to_dbm(mw(1.0)).unwrap().value(), 0.0);
        assert_relative_eq!(mw_to_dbm(mw(100.0)).unwrap().value(), 20.0, max_relative = 1e-12);
        for x in [-90.0, -40.0, 0.0, 25.0] {
            let back = mw_to_dbm(dbm_to_mw(dbm(x))).unwrap().value();
            assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
        }
        assert!(matches!(mw_to_dbm(mw(0.0)), Err(Error::Domain(_))));
        assert!(PowerMw::new(-1.0).is_err());
    }

    #[test]
    fn snr_from_dbm_examples() {
        assert_eq!(snr_from_dbm(dbm(-40.0), dbm(-82.0)).value(), 42.0);
        assert_eq!(snr_from_dbm(dbm(-61.5), dbm(-61.5)).value(), 0.0);
        assert_eq!(snr_from_dbm(dbm(-30.0), dbm(-89.0)).value(), 59.0);
    }

    #[test]
    fn signal_from_total_examples() {
        assert_eq!(signal_mw_from_total(mw(2.0), mw(1.0)).unwrap().value(), 1.0);
        assert_eq!(signal_mw_from_total(mw(3.5), mw(0.0)).unwrap().value(), 3.5);
        assert_eq!(signal_mw_from_total(mw(1.0), mw(1.0)).unwrap().value(), 0.0);
        assert!(matches!(
            signal_mw_from_total(mw(1.0), mw(2.0)),
            Err(Error::InconsistentMeasurement { .. })
        ));
    }

    #[test]
    fn snr_from_mw_examples() {
        assert_relative_eq!(snr_from_mw(mw(1000.0), mw(1.0)).unwrap().value(), 30.0);
        assert_eq!(snr_from_mw(mw(0.37), mw(0.37)).unwrap().value(), 0.0);
        assert_relative_eq!(snr_from_mw(mw(10.0), mw(0.1)).unwrap().value(), 20.0);
        assert!(snr_from_mw(mw(0.0), mw(1.0)).is_err());
        assert!(snr_from_mw(mw(1.0), mw(0.0)).is_err());
    }

    #[test]
    fn noise_for_target_examples() {
        let one = mw(1.0);
        assert_eq!(noise_mw_for_target_snr(one, SnrDb::new(0.0).unwrap()).unwrap().value(), 1.0);
        assert_relative_eq!(
            noise_mw_for_target_snr(one, SnrDb::new(30.0).unwrap()).unwrap().value(),
            0.001,
            max_relative = 1e-12
        );
        for target in [59.0, 42.0, 22.0, 12.0, 2.0, 0.0] {
            let t = SnrDb::new(target).unwrap();
            let noise = noise_mw_for_target_snr(one, t).unwrap();
            let back = snr_from_mw(one, noise).unwrap().value();
            assert!((back - target).abs() < 1e-9, "{target}: {back}");
        }
        assert!(noise_mw_for_target_snr(mw(0.0), SnrDb::new(3.0).unwrap()).is_err());
    }

    #[test]
    fn snr_sentinel() {
        assert!(SnrDb::NOISELESS.is_noiseless());
        assert_eq!(SnrDb::NOISELESS.to_string(), "inf");
        assert!(SnrDb::new(f64::NAN).is_err());
        assert!(SnrDb::new(f64::NEG_INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn dbm_round_trip(x in -200.0f64..200.0) {
            let back = mw_to_dbm(dbm_to_mw(dbm(x))).unwrap().value();
            prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1e-3));
        }

        #[test]
        fn linear_and_log_routes_agree(s in 1e-12f64..1e6, n in 1e-12f64..1e6) {
            let linear = snr_from_mw(mw(s), mw(n)).unwrap().value();
            let log = snr_from_dbm(mw_to_dbm(mw(s)).unwrap(), mw_to_dbm(mw(n)).unwrap()).value();
            prop_assert!((linear - log).abs() < 1e-9);
        }

        #[test]
        fn snr_monotone(s in 1e-6f64..1e3, n in 1e-6f64..1e3, f in 1.001f64..10.0) {
            let base = snr_from_mw(mw(s), mw(n)).unwrap().value();
            prop_assert!(snr_from_mw(mw(s * f), mw(n)).unwrap().value() > base);
            prop_assert!(snr_from_mw(mw(s), mw(n * f)).unwrap().value() < base);
        }

        #[test]
        fn noise_is_right_inverse(s in 1e-9f64..1e6, target in -30.0f64..90.0) {
            let t = SnrDb::new(target).unwrap();
            let noise = noise_mw_for_target_snr(mw(s), t).unwrap();
            prop_assert!((snr_from_mw(mw(s), noise).unwrap().value() - target).abs() < 1e-9);
        }
    }
}
