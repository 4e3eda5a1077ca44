//! Scattering geometry: Brillouin-zone folding of the cavity and laser wave
//! vectors and classification of the phase-matching conditions.
//!
//! Momenta are measured in units of the primitive reciprocal vector
//! G₀ = 2π/d. With k = 2π/λ the cavity momentum is k/G₀ = d/λ and the
//! projection of the laser wave vector on the array axis is (d/λ)·cosΘ
//! (laser and cavity share the same wavelength). When d/λ and cosΘ are both
//! rational all comparisons are exact; otherwise they fall back to a
//! tolerance of 10⁻⁹·G₀ and the report is marked approximate.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance, in units of G₀, for comparisons that cannot be made exactly.
pub const MOMENTUM_TOLERANCE: f64 = 1e-9;

/// A real number that is kept exact whenever it is known to be rational.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Real {
    Exact(Rational64),
    Approx(f64),
}

impl Real {
    pub fn to_f64(self) -> f64 {
        match self {
            Real::Exact(r) => ratio_to_f64(r),
            Real::Approx(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Real::Exact(_))
    }

    fn mul(self, other: Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a * b),
            (a, b) => Real::Approx(a.to_f64() * b.to_f64()),
        }
    }

    fn add(self, other: Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a + b),
            (a, b) => Real::Approx(a.to_f64() + b.to_f64()),
        }
    }

    fn neg(self) -> Real {
        match self {
            Real::Exact(a) => Real::Exact(-a),
            Real::Approx(x) => Real::Approx(-x),
        }
    }

    pub fn int(n: i64) -> Real {
        Real::Exact(Rational64::from_integer(n))
    }

    fn frac(n: i64, d: i64) -> Real {
        Real::Exact(Rational64::new(n, d))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Real::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Real {
    type Err = Error;

    /// Accepts `p/q`, integers and finite decimal literals (kept exact), or
    /// anything else `f64` parses (kept approximate).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_exact_decimal(n.trim())
                .ok_or_else(|| Error::InvalidArgument(format!("bad rational `{s}`")))?;
            let d = parse_exact_decimal(d.trim())
                .ok_or_else(|| Error::InvalidArgument(format!("bad rational `{s}`")))?;
            if d.is_zero() {
                return Err(Error::InvalidArgument(format!("zero denominator in `{s}`")));
            }
            return Ok(Real::Exact(n / d));
        }
        if let Some(r) = parse_exact_decimal(s) {
            return Ok(Real::Exact(r));
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse `{s}` as a number")))?;
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite value `{s}`")));
        }
        Ok(Real::Approx(x))
    }
}

/// Parses plain decimal literals such as `-12`, `0.25` or `1.5e-1` exactly.
fn parse_exact_decimal(s: &str) -> Option<Rational64> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: i64 = all.trim_start_matches('0').parse().unwrap_or(0);
    if all.trim_start_matches('0').len() > 17 {
        return None;
    }
    let scale = exp - frac_part.len() as i32;
    if scale.abs() > 17 {
        return None;
    }
    let pow = 10i64.checked_pow(scale.unsigned_abs())?;
    let mut r = if scale >= 0 {
        Rational64::from_integer(numer.checked_mul(pow)?)
    } else {
        Rational64::new(numer, pow)
    };
    if neg {
        r = -r;
    }
    Some(r)
}

fn ratio_to_f64(r: Rational64) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Angle between laser and cavity axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    /// A rational multiple of π, e.g. `1/3` for π/3.
    PiMultiple(Rational64),
    Radians(f64),
}

impl Angle {
    pub fn pi_fraction(n: i64, d: i64) -> Self {
        Angle::PiMultiple(Rational64::new(n, d))
    }

    pub fn radians(&self) -> f64 {
        match *self {
            Angle::PiMultiple(r) => ratio_to_f64(r) * PI,
            Angle::Radians(x) => x,
        }
    }

    /// cosΘ, exact when Θ is one of the rational multiples of π whose cosine
    /// is rational.
    pub fn cos(&self) -> Real {
        if let Angle::PiMultiple(r) = *self {
            let two = Rational64::from_integer(2);
            let mut red = r % two;
            if red.is_negative() {
                red += two;
            }
            let key = (*red.numer(), *red.denom());
            let exact = match key {
                (0, 1) => Some(Real::int(1)),
                (1, 3) | (5, 3) => Some(Real::frac(1, 2)),
                (1, 2) | (3, 2) => Some(Real::int(0)),
                (2, 3) | (4, 3) => Some(Real::frac(-1, 2)),
                (1, 1) => Some(Real::int(-1)),
                _ => None,
            };
            if let Some(c) = exact {
                return c;
            }
        }
        Real::Approx(self.radians().cos())
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::PiMultiple(r) if r.is_zero() => write!(f, "0"),
            Angle::PiMultiple(r) => {
                let n = *r.numer();
                let d = *r.denom();
                match (n, d) {
                    (1, 1) => write!(f, "pi"),
                    (-1, 1) => write!(f, "-pi"),
                    (n, 1) => write!(f, "{n}pi"),
                    (1, d) => write!(f, "pi/{d}"),
                    (-1, d) => write!(f, "-pi/{d}"),
                    (n, d) => write!(f, "{n}pi/{d}"),
                }
            }
            Angle::Radians(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts `0`, `pi`, `pi/3`, `2pi/3`, `2*pi/3`, `2/3*pi`, `60deg`, or a
    /// plain number of radians.
    fn from_str(s: &str) -> Result<Self> {
        let raw = s.trim();
        let compact: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = compact.to_ascii_lowercase().replace('π', "pi");
        let bad = || Error::InvalidArgument(format!("cannot parse angle `{raw}`"));

        if let Some(deg) = lower.strip_suffix("deg") {
            return match deg.parse::<Real>()? {
                Real::Exact(r) => Ok(Angle::PiMultiple(r / Rational64::from_integer(180))),
                Real::Approx(x) => Ok(Angle::Radians(x.to_radians())),
            };
        }
        if let Some(pos) = lower.find("pi") {
            let before = lower[..pos].trim_end_matches('*');
            let after = &lower[pos + 2..];
            let coeff = match before {
                "" => Rational64::one(),
                "-" => -Rational64::one(),
                b => match b.parse::<Real>()? {
                    Real::Exact(r) => r,
                    Real::Approx(_) => return Err(bad()),
                },
            };
            let divisor = if after.is_empty() {
                Rational64::one()
            } else {
                let d = after.strip_prefix('/').ok_or_else(bad)?;
                match d.parse::<Real>()? {
                    Real::Exact(r) if !r.is_zero() => r,
                    _ => return Err(bad()),
                }
            };
            return Ok(Angle::PiMultiple(coeff / divisor));
        }
        match lower.parse::<Real>()? {
            Real::Exact(r) if r.is_zero() => Ok(Angle::PiMultiple(Rational64::zero())),
            Real::Exact(r) => Ok(Angle::Radians(ratio_to_f64(r))),
            Real::Approx(x) => Ok(Angle::Radians(x)),
        }
    }
}

/// Lattice geometry of the array relative to cavity and laser.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryConfig {
    /// Interparticle distance over the optical wavelength.
    pub d_over_lambda: Real,
    /// Angle between laser and cavity axis, 0 ≤ Θ ≤ π.
    pub theta: Angle,
    pub n_atoms: usize,
}

impl GeometryConfig {
    pub fn new(d_over_lambda: Real, theta: Angle, n_atoms: usize) -> Result<Self> {
        let cfg = Self { d_over_lambda, theta, n_atoms };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d_over_lambda.to_f64();
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidArgument(format!("d/lambda must be positive, got {d}")));
        }
        let th = self.theta.radians();
        if !(th.is_finite() && (-1e-15..=PI + 1e-15).contains(&th)) {
            return Err(Error::InvalidArgument(format!("theta must lie in [0, pi], got {th}")));
        }
        if self.n_atoms == 0 {
            return Err(Error::InvalidArgument("the array needs at least one atom".into()));
        }
        Ok(())
    }

    /// Cavity wave number in units of G₀.
    pub fn cavity_momentum(&self) -> Real {
        self.d_over_lambda
    }

    /// Laser wave-vector projection on the array axis in units of G₀.
    pub fn laser_momentum(&self) -> Real {
        self.d_over_lambda.mul(self.theta.cos())
    }

    /// k·z_j / 2π reduced to [0, 1), for atom j = 1..N at z_j = j·d.
    pub fn cavity_phase_fraction(&self, j: usize) -> f64 {
        unit_fraction(self.cavity_momentum().mul(Real::int(j as i64)))
    }

    /// k·z_j·cosΘ / 2π reduced to [0, 1).
    pub fn laser_phase_fraction(&self, j: usize) -> f64 {
        unit_fraction(self.laser_momentum().mul(Real::int(j as i64)))
    }
}

fn unit_fraction(x: Real) -> f64 {
    match x {
        Real::Exact(r) => ratio_to_f64(r - r.floor()),
        Real::Approx(v) => v - v.floor(),
    }
}

/// Folds a wave number into the half-open Brillouin zone (−g0/2, g0/2].
pub fn fold_to_bz(momentum: f64, g0: f64) -> Result<f64> {
    if !momentum.is_finite() || !g0.is_finite() {
        return Err(Error::InvalidArgument("non-finite momentum or reciprocal vector".into()));
    }
    if g0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("g0 must be positive, got {g0}")));
    }
    let r = momentum / g0;
    Ok((r - (r - 0.5).ceil()) * g0)
}

/// Exact folding into (−1/2, 1/2] for momenta given in units of G₀.
pub fn fold_exact(q: Rational64) -> Rational64 {
    q - (q - Rational64::new(1, 2)).ceil()
}

fn fold_real(q: Real) -> Real {
    match q {
        Real::Exact(r) => Real::Exact(fold_exact(r)),
        Real::Approx(x) => Real::Approx(x - (x - 0.5).ceil()),
    }
}

/// Whether `x ≡ y` modulo the reciprocal lattice (unit spacing).
fn congruent(x: Real, y: Real) -> bool {
    match (x, y) {
        (Real::Exact(a), Real::Exact(b)) => (a - b).is_integer(),
        (a, b) => {
            let d = a.to_f64() - b.to_f64();
            (d - d.round()).abs() < MOMENTUM_TOLERANCE
        }
    }
}

/// Phase-matching flags exposed by [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchFlag {
    /// Coherent (elastic) scattering into the cavity: 2k sin²(Θ/2) or
    /// 2k cos²(Θ/2) is a multiple of G₀.
    VonLaue,
    /// Pair creation of polaritons is phase matched: Q′ = G/2 or Q′ = ±Q + G/2.
    SqueezeMatched,
    /// Q′ = ±3Q + G, enabling the nonlinear pump.
    TripleMatched,
    /// k = G/2, i.e. Q = 0 or Q = G₀/2 and b₋Q = b_Q.
    CavityHalf,
    /// Q′ = ±Q.
    LaserEqualsCavity,
}

/// The Kronecker deltas entering the effective coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selectors {
    /// δ_{k,G/2}: 2Q ≡ 0.
    pub k_half: bool,
    /// δ_{Q′,G/2}: 2Q′ ≡ 0.
    pub pair: bool,
    /// δ_{Q′,Q+G/2}.
    pub plus_half: bool,
    /// δ_{Q′,−Q+G/2}.
    pub minus_half: bool,
    /// δ_{Q′,3Q}.
    pub triple_plus: bool,
    /// δ_{Q′,−3Q}.
    pub triple_minus: bool,
    /// δ_{Q,±G₀/4}.
    pub quarter: bool,
}

/// Result of [`classify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchReport {
    /// Quasimomentum Q of the cavity-coupled spin wave, in units of G₀.
    pub q_cavity: f64,
    /// Quasimomentum Q′ of the laser-driven spin wave, in units of G₀.
    pub q_laser: f64,
    /// Exact rational forms of Q and Q′ when available.
    pub q_cavity_exact: Option<String>,
    pub q_laser_exact: Option<String>,
    pub flags: BTreeSet<MatchFlag>,
    pub selectors: Selectors,
    /// Set when at least one comparison used the floating tolerance.
    pub approximate: bool,
}

impl PhaseMatchReport {
    pub fn has(&self, flag: MatchFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Folds the cavity and laser momenta and evaluates every phase-matching
/// condition.
pub fn classify(config: &GeometryConfig) -> Result<PhaseMatchReport> {
    config.validate()?;
    let k = config.cavity_momentum();
    let kl = config.laser_momentum();
    let q = fold_real(k);
    let qp = fold_real(kl);
    let approximate = !(q.is_exact() && qp.is_exact());

    let half = Real::frac(1, 2);
    let zero = Real::int(0);
    let two = Real::int(2);
    let three = Real::int(3);

    let selectors = Selectors {
        k_half: congruent(two.mul(q), zero),
        pair: congruent(two.mul(qp), zero),
        plus_half: congruent(qp, q.add(half)),
        minus_half: congruent(qp, q.neg().add(half)),
        triple_plus: congruent(qp, three.mul(q)),
        triple_minus: congruent(qp, three.mul(q).neg()),
        quarter: congruent(q, Real::frac(1, 4)) || congruent(q, Real::frac(-1, 4)),
    };

    // 2k sin²(Θ/2) = k − k cosΘ and 2k cos²(Θ/2) = k + k cosΘ, in units of G₀.
    let sin_branch = k.add(kl.neg());
    let cos_branch = k.add(kl);
    let von_laue = congruent(sin_branch, zero) || congruent(cos_branch, zero);
    let laser_equals_cavity = congruent(qp, q) || congruent(qp, q.neg());

    let mut flags = BTreeSet::new();
    if von_laue {
        flags.insert(MatchFlag::VonLaue);
    }
    if laser_equals_cavity {
        flags.insert(MatchFlag::LaserEqualsCavity);
    }
    if selectors.pair || selectors.plus_half || selectors.minus_half {
        flags.insert(MatchFlag::SqueezeMatched);
    }
    if selectors.triple_plus || selectors.triple_minus {
        flags.insert(MatchFlag::TripleMatched);
    }
    if selectors.k_half {
        flags.insert(MatchFlag::CavityHalf);
    }

    let exact_str = |x: Real| match x {
        Real::Exact(_) => Some(x.to_string()),
        Real::Approx(_) => None,
    };
    Ok(PhaseMatchReport {
        q_cavity: q.to_f64(),
        q_laser: qp.to_f64(),
        q_cavity_exact: exact_str(q),
        q_laser_exact: exact_str(qp),
        flags,
        selectors,
        approximate,
    })
}

/// Quasimomenta (units of G₀) of the N spin waves of a periodic chain, in
/// ascending order inside (−1/2, 1/2].
pub fn spin_wave_momenta(n_atoms: usize) -> Vec<Rational64> {
    let n = n_atoms as i64;
    let mut qs: Vec<Rational64> = (0..n).map(|m| fold_exact(Rational64::new(m, n))).collect();
    qs.sort();
    qs
}
