//! Common output types shared by every evaluator and the oracle.

use core::fmt;
use core::str::FromStr;

/// One asymptotic regime of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Region I: slow drift along the stable cubic branch, t < t*.
    OuterI,
    /// Region II: Painlevé-1 transition layer, |t − t*| = O(ε^(4/5)).
    PainleveII,
    /// Region III: pole layer of width ε (in t) around a Painlevé-1 pole.
    PoleIII,
    /// Region II at τ → +∞: elliptic (Weierstrass) asymptotics.
    EllipticIIInf,
    /// Region IV: modulated fast oscillation, t > t*.
    KuzmakIV,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::OuterI,
        Regime::PainleveII,
        Regime::PoleIII,
        Regime::EllipticIIInf,
        Regime::KuzmakIV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::OuterI => "I",
            Regime::PainleveII => "II",
            Regime::PoleIII => "III",
            Regime::EllipticIIInf => "II_inf",
            Regime::KuzmakIV => "IV",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "I" => Ok(Regime::OuterI),
            "II" => Ok(Regime::PainleveII),
            "III" => Ok(Regime::PoleIII),
            "II_inf" => Ok(Regime::EllipticIIInf),
            "IV" => Ok(Regime::KuzmakIV),
            _ => Err(()),
        }
    }
}

/// Regime classification of a point: either a single valid regime or an
/// overlap zone where two validity predicates hold simultaneously.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    Single(Regime),
    Overlap(Regime, Regime),
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RegimeTag::Single(r) => write!(f, "{r}"),
            RegimeTag::Overlap(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

impl FromStr for RegimeTag {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.split_once('+') {
            None => Ok(RegimeTag::Single(s.parse()?)),
            Some((a, b)) => Ok(RegimeTag::Overlap(a.parse()?, b.parse()?)),
        }
    }
}

/// One evaluated point: the common output row of every evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionSample {
    pub t: f64,
    pub u: f64,
    /// Classification of the point (single regime or overlap).
    pub regime: RegimeTag,
    /// A-priori residual estimate of the expansion that produced `u`.
    pub residual: f64,
    /// The evaluator that actually produced `u` (for overlaps, the winner).
    pub source: Regime,
}

impl SolutionSample {
    pub fn new(t: f64, u: f64, source: Regime, residual: f64) -> Self {
        SolutionSample {
            t,
            u,
            regime: RegimeTag::Single(source),
            residual,
            source,
        }
    }
}

/// Outcome of a regime validity predicate.
///
/// `margin` is the dimensionless quantity compared against the regime's
/// threshold; it stays meaningful (and reportable) even when `ok` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub ok: bool,
    pub margin: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_roundtrip() {
        for r in Regime::ALL {
            assert_eq!(r.as_str().parse::<Regime>(), Ok(r));
        }
        let tag = RegimeTag::Overlap(Regime::OuterI, Regime::PainleveII);
        assert_eq!(alloc::format!("{tag}").parse::<RegimeTag>(), Ok(tag));
    }
}
