//! Exponent configuration, derived constants and the algebraic regime classifier.
//!
//! The system studied is
//!
//! ```text
//! r^{1-N} [ r^{N-k} |u'|^{k-1} u' ]' = |u'|^m v^p
//! r^{1-N} [ r^{N-k} |v'|^{k-1} v' ]' = |u'|^q v^s
//! ```
//!
//! which is the radial form of `S_k(D^2 u) = |Du|^m v^p`, `S_k(D^2 v) = |Du|^q v^s`
//! after dividing out the binomial factor `C(N-1, k-1)` that the radial k-Hessian
//! carries. Solutions of the normalized system map to solutions of the
//! un-normalized one by `(u, v) -> (c1 u, c2 v)` with constants depending only on
//! that binomial factor, so every numeric in this crate targets the normalized form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for rejecting `delta = 0`.
pub const DELTA_REL_TOL: f64 = 1e-12;

/// Problem identity: dimension, Hessian order and the four exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentConfig {
    #[serde(rename = "N")]
    pub n: u32,
    pub k: u32,
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

/// Unvalidated six-number input, as read from a JSON config file.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
pub struct RawConfig {
    #[serde(rename = "N")]
    pub n: f64,
    pub k: f64,
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl<'de> Deserialize<'de> for ExponentConfig {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = RawConfig::deserialize(deserializer)?;
        raw.validate().map_err(serde::de::Error::custom)
    }
}

impl RawConfig {
    pub fn validate(self) -> Result<ExponentConfig> {
        validate(self.n, self.k, self.m, self.p, self.q, self.s)
    }
}

fn integer_value(x: f64) -> Option<u32> {
    if x.is_finite() && x.fract() == 0.0 && x >= 0.0 && x <= u32::MAX as f64 {
        Some(x as u32)
    } else {
        None
    }
}

/// Checks the sign and order constraints and rejects `delta = 0`.
pub fn validate(n: f64, k: f64, m: f64, p: f64, q: f64, s: f64) -> Result<ExponentConfig> {
    for (name, x) in [("N", n), ("k", k), ("m", m), ("p", p), ("q", q), ("s", s)] {
        if !x.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite")));
        }
    }
    let n = integer_value(n)
        .filter(|&n| n >= 2)
        .ok_or_else(|| Error::Domain("N must be an integer >= 2".into()))?;
    let k = integer_value(k)
        .filter(|&k| k >= 1 && k <= n)
        .ok_or_else(|| Error::Domain("k must be an integer with 1 <= k <= N".into()))?;
    if q <= 0.0 {
        return Err(Error::Domain("q must be > 0".into()));
    }
    if m < 0.0 {
        return Err(Error::Domain("m must be >= 0".into()));
    }
    if s < 0.0 {
        return Err(Error::Domain("s must be >= 0".into()));
    }
    if p < s {
        return Err(Error::Domain("p must be >= s".into()));
    }
    let cfg = ExponentConfig { n, k, m, p, q, s };
    let (kf, scale) = (
        k as f64,
        1f64.max(((k as f64 - m) * (k as f64 - s)).abs())
            .max((p * q).abs()),
    );
    let delta = (kf - m) * (kf - s) - p * q;
    if delta.abs() <= DELTA_REL_TOL * scale {
        return Err(Error::DegenerateDelta { delta });
    }
    Ok(cfg)
}

/// Derived constants of a configuration. `sigma` and `l` need `k > m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub delta: f64,
    pub sigma: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub gamma_u: f64,
    pub gamma_v: f64,
}

impl ExponentConfig {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// `k - m`.
    pub fn km(&self) -> f64 {
        self.kf() - self.m
    }

    pub fn delta(&self) -> f64 {
        (self.kf() - self.m) * (self.kf() - self.s) - self.p * self.q
    }

    pub fn has_solutions(&self) -> bool {
        self.kf() > self.m
    }

    /// `L = (N-k)(k-m)/k`, the weight exponent of the first momentum.
    pub fn l(&self) -> Option<f64> {
        self.has_solutions()
            .then(|| (self.nf() - self.kf()) * self.km() / self.kf())
    }

    pub fn sigma(&self) -> Option<f64> {
        let (k, m, p, q, s) = (self.kf(), self.m, self.p, self.q, self.s);
        self.has_solutions()
            .then(|| p / (k - m) * (q + (k - m) * (1.0 + k)) / ((p + 1.0) * k + p - s))
    }

    /// Growth exponents of the singular power-law pair.
    pub fn alpha(&self) -> (f64, f64) {
        let (k, m, p, q, s) = (self.kf(), self.m, self.p, self.q, self.s);
        let d = self.delta();
        (
            1.0 + k * (k - s + 2.0 * p) / d,
            k * (2.0 * k - 2.0 * m + q) / d,
        )
    }

    /// Exponents `(g, h)` with `(r, u, v) -> (lambda r, lambda^g u, lambda^h v)`
    /// mapping solutions to solutions; they solve
    /// `k(g-2) = m(g-1) + p h`, `k(h-2) = q(g-1) + s h`.
    pub fn scaling_exponents(&self) -> (f64, f64) {
        let (k, m, p, q, s) = (self.kf(), self.m, self.p, self.q, self.s);
        let d = self.delta();
        (
            ((2.0 * k - m) * (k - s) + p * (2.0 * k - q)) / d,
            ((2.0 * k - q) * (k - m) + q * (2.0 * k - m)) / d,
        )
    }

    pub fn derived(&self) -> DerivedConstants {
        let (alpha_u, alpha_v) = self.alpha();
        let (gamma_u, gamma_v) = self.scaling_exponents();
        DerivedConstants {
            delta: self.delta(),
            sigma: self.sigma(),
            l: self.l(),
            alpha_u,
            alpha_v,
            gamma_u,
            gamma_v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeTag {
    NoSolution,
    Bounded,
    BothBlowup,
    UFiniteVBlowup,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::NoSolution => "NoSolution",
            RegimeTag::Bounded => "Bounded",
            RegimeTag::BothBlowup => "BothBlowup",
            RegimeTag::UFiniteVBlowup => "UFiniteVBlowup",
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The numbers behind a classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub pq: f64,
    /// `(k-m)(k-s)`
    pub lower: f64,
    /// `p(k+1) + (k-m+1)(k-s)`
    pub upper: f64,
    pub sigma: Option<f64>,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub witness: Witness,
}

fn witness(cfg: &ExponentConfig, rule: &str) -> Witness {
    let (k, m, p, q, s) = (cfg.kf(), cfg.m, cfg.p, cfg.q, cfg.s);
    Witness {
        pq: p * q,
        lower: (k - m) * (k - s),
        upper: p * (k + 1.0) + (k - m + 1.0) * (k - s),
        sigma: cfg.sigma(),
        rule: rule.to_string(),
    }
}

/// Boundary behaviour of radial solutions, decided from the exponents alone.
pub fn classify(cfg: &ExponentConfig) -> Regime {
    let w = witness(cfg, "");
    let (tag, rule) = if !cfg.has_solutions() {
        (RegimeTag::NoSolution, "k <= m")
    } else if w.pq < w.lower {
        (RegimeTag::Bounded, "k > m and pq < (k-m)(k-s)")
    } else if w.pq > w.upper {
        (
            RegimeTag::UFiniteVBlowup,
            "k > m and pq > p(k+1) + (k-m+1)(k-s)",
        )
    } else {
        (
            RegimeTag::BothBlowup,
            "k > m and (k-m)(k-s) < pq <= p(k+1) + (k-m+1)(k-s)",
        )
    };
    Regime {
        tag,
        witness: Witness {
            rule: rule.to_string(),
            ..w
        },
    }
}

/// Same classification expressed through `sigma`.
///
/// `sigma` lands exactly on `(k-m+1)/(k-m)` when `pq` equals the upper bound;
/// values within a few ulps of that threshold count as the closed end of the
/// `BothBlowup` interval.
pub fn classify_sigma(cfg: &ExponentConfig) -> Result<Regime> {
    let sigma = cfg.sigma().ok_or(Error::SigmaUndefined)?;
    let km = cfg.km();
    let upper = (km + 1.0) / km;
    let tie = 8.0 * f64::EPSILON * upper;
    let (tag, rule) = if sigma < 1.0 {
        (RegimeTag::Bounded, "sigma < 1")
    } else if sigma > upper + tie {
        (RegimeTag::UFiniteVBlowup, "sigma > (k-m+1)/(k-m)")
    } else {
        (RegimeTag::BothBlowup, "1 < sigma <= (k-m+1)/(k-m)")
    };
    Ok(Regime {
        tag,
        witness: witness(cfg, rule),
    })
}
