//! Optical power arithmetic.
//!
//! Logarithmic (dBm, dB) and linear (mW) quantities are separate newtypes and
//! only cross over through [`dbm_to_mw`] and [`mw_to_dbm`]. Also hosts the
//! extinction-ratio / OMA identities and the Gaussian Q-factor to BER map.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute optical power in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerDbm(f64);

impl PowerDbm {
    pub fn new(dbm: f64) -> Result<Self> {
        if dbm.is_finite() {
            Ok(Self(dbm))
        } else {
            Err(Error::Domain(format!("power {dbm} dBm is not finite")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Power after passing through a loss.
    #[inline]
    pub fn attenuate(self, loss: LossDb) -> Self {
        Self(self.0 - loss.0)
    }
}

impl TryFrom<f64> for PowerDbm {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerDbm> for f64 {
    fn from(p: PowerDbm) -> f64 {
        p.0
    }
}

/// Difference of two absolute levels, in dB (e.g. received minus sensitivity).
impl Sub for PowerDbm {
    type Output = f64;
    fn sub(self, rhs: Self) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for PowerDbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} dBm", self.0)
    }
}

/// Linear optical power in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerMw(f64);

impl PowerMw {
    pub const ZERO: Self = Self(0.0);

    pub fn new(mw: f64) -> Result<Self> {
        if mw.is_finite() && mw >= 0.0 {
            Ok(Self(mw))
        } else {
            Err(Error::Domain(format!(
                "power {mw} mW must be finite and non-negative"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PowerMw {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerMw> for f64 {
    fn from(p: PowerMw) -> f64 {
        p.0
    }
}

/// A non-negative loss in dB. Losses in series add.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LossDb(f64);

impl LossDb {
    pub const ZERO: Self = Self(0.0);

    pub fn new(db: f64) -> Result<Self> {
        if db.is_finite() && db >= 0.0 {
            Ok(Self(db))
        } else {
            Err(Error::Domain(format!(
                "loss {db} dB must be finite and non-negative"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for LossDb {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LossDb> for f64 {
    fn from(l: LossDb) -> f64 {
        l.0
    }
}

impl Add for LossDb {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl std::iter::Sum for LossDb {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// Average launch power plus extinction ratio of an NRZ transmitter.
///
/// An infinite extinction ratio is accepted and means the low level is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModulation")]
pub struct ModulationSpec {
    pub average_power: PowerMw,
    pub extinction_ratio_db: f64,
}

#[derive(Deserialize)]
struct RawModulation {
    average_power: PowerMw,
    extinction_ratio_db: f64,
}

impl TryFrom<RawModulation> for ModulationSpec {
    type Error = Error;
    fn try_from(raw: RawModulation) -> Result<Self> {
        Self::new(raw.average_power, raw.extinction_ratio_db)
    }
}

impl ModulationSpec {
    pub fn new(average_power: PowerMw, extinction_ratio_db: f64) -> Result<Self> {
        // NaN fails this comparison too.
        if !(extinction_ratio_db > 0.0) {
            return Err(Error::Domain(format!(
                "extinction ratio {extinction_ratio_db} dB must be > 0"
            )));
        }
        Ok(Self {
            average_power,
            extinction_ratio_db,
        })
    }

    /// Linear extinction ratio P1/P0.
    pub fn ratio(&self) -> f64 {
        10f64.powf(self.extinction_ratio_db / 10.0)
    }
}

/// Gaussian-noise Q factor.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QFactor(f64);

impl QFactor {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q >= 0.0 {
            Ok(Self(q))
        } else {
            Err(Error::Domain(format!(
                "Q factor {q} must be finite and non-negative"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QFactor {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QFactor> for f64 {
    fn from(q: QFactor) -> f64 {
        q.0
    }
}

pub fn dbm_to_mw(p: PowerDbm) -> PowerMw {
    PowerMw(10f64.powf(p.0 / 10.0))
}

pub fn mw_to_dbm(p: PowerMw) -> Result<PowerDbm> {
    if p.0 <= 0.0 {
        return Err(Error::Domain(format!(
            "{} mW has no dBm representation",
            p.0
        )));
    }
    PowerDbm::new(10.0 * p.0.log10())
}

/// High and low optical levels of a modulated signal.
///
/// Solves `(high + low) / 2 = P_avg` and `high / low = r`.
pub fn levels_from_modulation(m: &ModulationSpec) -> (PowerMw, PowerMw) {
    let avg = m.average_power.0;
    let r = m.ratio();
    if r.is_infinite() {
        return (PowerMw(2.0 * avg), PowerMw::ZERO);
    }
    let low = 2.0 * avg / (r + 1.0);
    (PowerMw(low * r), PowerMw(low))
}

/// Optical modulation amplitude, `P1 - P0 = 2·P_avg·(r-1)/(r+1)`.
pub fn oma_from_modulation(m: &ModulationSpec) -> PowerMw {
    let avg = m.average_power.0;
    let r = m.ratio();
    if r.is_infinite() {
        return PowerMw(2.0 * avg);
    }
    PowerMw(2.0 * avg * (r - 1.0) / (r + 1.0))
}

/// Complementary error function.
///
/// For `x < 2` it uses `erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!`,
/// a series of positive terms, and returns `1 - erf`. For `x ≥ 2` it
/// evaluates the Laplace continued fraction
/// `√π e^{x²} erfc(x) = 1/(x + ½/(x + 1/(x + 3/2/(x + …))))` with the
/// modified Lentz method. Relative error is below 1e-13 on both branches;
/// the result underflows to 0 past x ≈ 26.5.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / f64::from(2 * n + 1);
        sum += term;
        if term < sum * 1e-17 || n > 500 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..2000u32 {
        let a = f64::from(n) / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

/// Bit error rate of a binary decision with Gaussian noise, `½·erfc(q/√2)`.
///
/// Values below the f64 range (q beyond ~38) come back as 0.
pub fn ber_from_q(q: QFactor) -> f64 {
    0.5 * erfc(q.0 / std::f64::consts::SQRT_2)
}

/// Inverse of [`ber_from_q`] by bisection.
pub fn q_from_ber(ber: f64) -> Result<QFactor> {
    if !(ber > 0.0 && ber <= 0.5) {
        return Err(Error::Domain(format!("BER {ber} outside (0, 0.5]")));
    }
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ber_from_q(QFactor(mid)) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QFactor(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mw(v: f64) -> PowerMw {
        PowerMw::new(v).unwrap()
    }

    fn dbm(v: f64) -> PowerDbm {
        PowerDbm::new(v).unwrap()
    }

    fn modulation(avg: f64, er: f64) -> ModulationSpec {
        ModulationSpec::new(mw(avg), er).unwrap()
    }

    /// Gaussian tail `∫_q^∞ φ(t) dt` by composite Simpson over [q, q + 14].
    fn gaussian_tail(q: f64) -> f64 {
        let n = 200_000;
        let h = 14.0 / n as f64;
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = phi(q) + phi(q + 14.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * phi(q + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn dbm_to_mw_examples() {
        assert!((dbm_to_mw(dbm(0.0)).value() - 1.0).abs() < 1e-12);
        assert!((dbm_to_mw(dbm(-6.7)).value() - 0.2138).abs() < 1e-4);
        assert!((dbm_to_mw(dbm(1.76)).value() - 1.5).abs() < 1e-3);
    }

    #[test]
    fn mw_to_dbm_examples() {
        assert!(mw_to_dbm(mw(1.0)).unwrap().value().abs() < 1e-12);
        assert!((mw_to_dbm(mw(0.2138)).unwrap().value() + 6.7).abs() < 1e-3);
        assert!(matches!(mw_to_dbm(mw(0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(PowerMw::new(-1.0).is_err());
        assert!(PowerDbm::new(f64::NAN).is_err());
        assert!(LossDb::new(-0.1).is_err());
        assert!(QFactor::new(-1.0).is_err());
        assert!(ModulationSpec::new(mw(1.0), 0.0).is_err());
        assert!(ModulationSpec::new(mw(1.0), f64::NAN).is_err());
    }

    #[test]
    fn oma_examples() {
        let inf = oma_from_modulation(&modulation(0.5, f64::INFINITY)).value();
        assert!((inf - 1.0).abs() < 1e-12);
        // frozen from the level-solve oracle below
        let er6 = oma_from_modulation(&modulation(0.5, 6.0)).value();
        assert!((er6 - 0.598_48).abs() < 1e-5, "{er6}");
        let dwdm = oma_from_modulation(&modulation(1.5, 16.2)).value();
        assert!((dwdm - 2.859).abs() < 1e-3, "{dwdm}");
    }

    /// Brute-force the levels: scan low level until high/low hits the ratio.
    #[test]
    fn oma_matches_bisection_on_levels() {
        for &(avg, er) in &[(0.5, 6.0), (1.5, 16.2), (1.0, 3.0103)] {
            let r = 10f64.powf(er / 10.0);
            let (mut lo, mut hi) = (0.0, avg);
            for _ in 0..200 {
                let p0 = 0.5 * (lo + hi);
                let p1 = 2.0 * avg - p0;
                if p1 / p0 > r {
                    lo = p0;
                } else {
                    hi = p0;
                }
            }
            let p0 = 0.5 * (lo + hi);
            let oracle = 2.0 * avg - 2.0 * p0;
            let got = oma_from_modulation(&modulation(avg, er)).value();
            assert!((got - oracle).abs() < 1e-9, "{avg} {er}: {got} vs {oracle}");
        }
    }

    #[test]
    fn level_examples() {
        let (h, l) = levels_from_modulation(&modulation(1.0, 3.0103));
        assert!((h.value() - 1.3333).abs() < 1e-4);
        assert!((l.value() - 0.6667).abs() < 1e-4);
        let (h, l) = levels_from_modulation(&modulation(0.5, f64::INFINITY));
        assert_eq!((h.value(), l.value()), (1.0, 0.0));
        let (h, l) = levels_from_modulation(&modulation(1.5, 16.2));
        assert!((h.value() - 2.9297).abs() < 1e-4);
        assert!((l.value() - 0.0703).abs() < 1e-4);
    }

    #[test]
    fn ber_examples_against_quadrature() {
        assert_eq!(ber_from_q(QFactor::new(0.0).unwrap()), 0.5);
        let b = ber_from_q(QFactor::new(7.0345).unwrap());
        assert!((b / 1e-12 - 1.0).abs() < 0.02, "{b}");
        let b = ber_from_q(QFactor::new(3.517).unwrap());
        assert!((b - 2.2e-4).abs() < 0.05e-4, "{b}");
        for &q in &[0.5, 1.0, 2.5, 3.517, 5.0, 6.0, 7.0345, 8.0] {
            let oracle = gaussian_tail(q);
            let got = ber_from_q(QFactor::new(q).unwrap());
            assert!(
                (got / oracle - 1.0).abs() < 1e-6,
                "q={q}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn q_from_ber_examples() {
        assert!(q_from_ber(0.5).unwrap().value().abs() < 1e-9);
        assert!((q_from_ber(1e-12).unwrap().value() - 7.0345).abs() < 1e-3);
        assert!((q_from_ber(1e-9).unwrap().value() - 5.998).abs() < 1e-3);
        assert!(q_from_ber(0.0).is_err());
        assert!(q_from_ber(0.6).is_err());
        assert!(q_from_ber(f64::NAN).is_err());
    }

    #[test]
    fn erfc_symmetry_and_underflow() {
        assert!((erfc(-1.0) - (2.0 - erfc(1.0))).abs() < 1e-15);
        assert_eq!(erfc(30.0), 0.0);
        // both branches agree at the switch point
        let left = 1.0 - erf_series(2.0);
        let right = erfc_continued_fraction(2.0);
        assert!((left / right - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dbm_round_trip(p in -60.0f64..20.0) {
            let back = mw_to_dbm(dbm_to_mw(dbm(p))).unwrap().value();
            prop_assert!((back - p).abs() < 1e-9);
        }

        #[test]
        fn oma_identity(avg in 0.001f64..10.0, er in 1e-3f64..=60.0) {
            let m = modulation(avg, er);
            let (h, l) = levels_from_modulation(&m);
            let oma = oma_from_modulation(&m).value();
            prop_assert!(((h.value() - l.value()) - oma).abs() <= 1e-9 * oma.max(1e-300));
            prop_assert!(((h.value() + l.value()) / 2.0 - avg).abs() <= 1e-9 * avg);
            prop_assert!(oma > 0.0 && oma < 2.0 * avg);
        }

        #[test]
        fn ber_strictly_decreasing(q in 0.0f64..8.0, dq in 1e-3f64..1.0) {
            let a = ber_from_q(QFactor::new(q).unwrap());
            let b = ber_from_q(QFactor::new(q + dq).unwrap());
            prop_assert!(b < a);
        }

        #[test]
        fn q_strictly_decreasing(b in 1e-15f64..0.4, f in 1.01f64..1.2) {
            let q1 = q_from_ber(b).unwrap().value();
            let q2 = q_from_ber(b * f).unwrap().value();
            prop_assert!(q2 < q1);
        }

        #[test]
        fn q_ber_inverse(q in 0.5f64..8.0) {
            let back = q_from_ber(ber_from_q(QFactor::new(q).unwrap())).unwrap().value();
            prop_assert!((back - q).abs() < 1e-5);
        }
    }
}
