//! Closed-form lower bounds for `α̂(s)`, the condition-count constraint on the
//! initial degree, and the cubic upper bounds `e_s`.
//!
//! Everything except root extraction is integer arithmetic. Roots are
//! bracketed by exact-rational bisection and rendered as decimals only on
//! output.

use std::fmt;

use num_integer::Roots;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{decimal_digits_for, Rational};
use crate::spacesys::{best_bound, l_answer, Answer, LConfig};

fn isqrt(n: u64) -> u64 {
    n.sqrt()
}

/// A pair `(q, k)` satisfying the conditions of a closed-form bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub q: u64,
    pub k: u64,
}

/// Largest `q` with `(q-k)^2 <= s - k^2` for some `1 <= k <= ⌊√s⌋`.
pub fn thm1_witness(s: u64) -> Witness {
    assert!(s >= 1, "s must be positive");
    (1..=isqrt(s))
        .map(|k| Witness {
            q: k + isqrt(s - k * k),
            k,
        })
        .max_by_key(|w| (w.q, std::cmp::Reverse(w.k)))
        .expect("k = 1 is always admissible")
}

pub fn thm1_bound(s: u64) -> u64 {
    thm1_witness(s).q
}

/// `⌊√(2s-1)⌋`.
pub fn thm2_bound(s: u64) -> u64 {
    assert!(s >= 1, "s must be positive");
    isqrt(2 * s - 1)
}

/// Largest `q` with `qk <= s` and `(q-k)^2 <= s - k` for some `k >= 0`.
///
/// For `k > √s` every admissible `q` is at most `s/k < √s`, which `k = 0`
/// already reaches, so only `k <= ⌊√s⌋` is searched.
pub fn thm3_witness(s: u64) -> Witness {
    assert!(s >= 1, "s must be positive");
    let mut best = Witness { q: isqrt(s), k: 0 };
    for k in 1..=isqrt(s) {
        let spread = isqrt(s - k);
        let q = (k + spread).min(s / k);
        if q + spread >= k && q > best.q {
            best = Witness { q, k };
        }
    }
    best
}

pub fn thm3_bound(s: u64) -> u64 {
    thm3_witness(s).q
}

/// `(q, k) = (⌊√(2.5s)⌋, ⌊√(0.4s)⌋)`, the pair used for large `s`.
pub fn thm4_closed_form_pair(s: u64) -> Witness {
    Witness {
        q: isqrt(5 * s / 2),
        k: isqrt(2 * s / 5),
    }
}

/// Whether the closed-form pair satisfies `qk <= s` and `(q-k)^2 <= s-k`.
pub fn thm4_closed_form_holds(s: u64) -> bool {
    let Witness { q, k } = thm4_closed_form_pair(s);
    let diff = q.abs_diff(k);
    q * k <= s && k <= s && diff * diff <= s - k
}

pub const THM4_EXCEPTIONS: [u64; 3] = [4, 7, 10];
pub const THM4_CLOSED_FORM_FROM: u64 = 490;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Thm4Method {
    ClosedForm,
    AlgorithmL,
    KnownException,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Thm4Outcome {
    pub s: u64,
    /// `⌊√(2.5s)⌋`.
    pub delta: u64,
    pub holds: bool,
    pub method: Thm4Method,
}

/// Checks `α̂(s) >= ⌊√(2.5s)⌋`: by the closed-form pair for large `s`, by a
/// space-reduction run otherwise.
pub fn thm4_holds(s: u64, tau: &Rational) -> Result<Thm4Outcome> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let delta = isqrt(5 * s / 2);
    let (holds, method) = if THM4_EXCEPTIONS.contains(&s) {
        (false, Thm4Method::KnownException)
    } else if s >= THM4_CLOSED_FORM_FROM {
        (thm4_closed_form_holds(s), Thm4Method::ClosedForm)
    } else {
        let answer = l_answer(&Rational::from(delta), s, &LConfig::new(tau.clone()))?;
        (answer == Answer::Yes, Thm4Method::AlgorithmL)
    };
    Ok(Thm4Outcome {
        s,
        delta,
        holds,
        method,
    })
}

/// Largest `α >= 1` with `(α+2)(α+1) <= 6s`.
pub fn alpha_max(s: u64) -> u64 {
    assert!(s >= 1, "s must be positive");
    let fits = |a: u64| (a as u128 + 2) * (a as u128 + 1) <= 6 * s as u128;
    let mut a = isqrt(6 * s);
    while !fits(a) {
        a -= 1;
    }
    a
}

/// `(alpha_max(s) + 1) / 2`.
pub fn chudnovsky_bound(s: u64) -> Rational {
    Rational::frac(alpha_max(s) as i64 + 1, 2)
}

/// `√(2s-1) - 1 >= (a+1)/2`, decided exactly by squaring `(a+3)/2`.
pub fn assq_holds(a: u64, s: u64) -> bool {
    let rhs = Rational::frac(a as i64 + 3, 2);
    &rhs * &rhs <= Rational::from(2 * s - 1)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChudViolation {
    /// The best closed-form bound falls short of `(α+1)/2`.
    Bound {
        s: u64,
        best: u64,
        required: Rational,
    },
    /// The square-root estimate fails for an admissible `a >= 10`.
    Assq { s: u64, a: u64 },
}

pub fn chudnovsky_verify(s_max: u64) -> Vec<ChudViolation> {
    let mut out = Vec::new();
    for s in 1..=s_max {
        let best = thm1_bound(s).max(thm2_bound(s)).max(thm3_bound(s));
        let required = chudnovsky_bound(s);
        if Rational::from(best) < required {
            out.push(ChudViolation::Bound { s, best, required });
        }
        for a in 10..=alpha_max(s) {
            if !assq_holds(a, s) {
                out.push(ChudViolation::Assq { s, a });
            }
        }
    }
    out
}

/// Known values of `α̂(s)` for `s <= 5`.
pub fn small_alphahat(s: u64) -> Result<Rational> {
    match s {
        1 => Ok(Rational::one()),
        2 | 3 => Ok(Rational::from(2i64)),
        4 => Ok(Rational::frac(8, 3)),
        5 => Ok(Rational::frac(10, 3)),
        _ => Err(Error::InvalidInput(format!(
            "exact value known only for 1 <= s <= 5, got {s}"
        ))),
    }
}

/// `t^3 - 3st + 2s + 2k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CubicBound {
    pub s: u64,
    /// Simple intersection points among the lines.
    pub k: u64,
}

impl CubicBound {
    pub fn new(s: u64, k: u64) -> Self {
        CubicBound { s, k }
    }

    pub fn constant_term(&self) -> u64 {
        2 * self.s + 2 * self.k
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let lin = Rational::from(3 * self.s);
        t * t * t - &lin * t + Rational::from(self.constant_term())
    }

    fn eval_int(&self, n: u64) -> i128 {
        let n = n as i128;
        n * n * n - 3 * self.s as i128 * n + self.constant_term() as i128
    }
}

impl fmt::Display for CubicBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^3-{}t+{}", 3 * self.s, self.constant_term())
    }
}

/// A bracket `[lo, hi]` around a real root; `lo == hi` when the root is exact.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RootApprox {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootApprox {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from(2i64)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Largest real root of `c`, bracketed to width below `precision`.
///
/// On `t >= √s` the cubic is increasing, and its largest root lies there
/// exactly when the value at `√s` is non-positive, i.e. `(s+k)^2 <= s^3`.
/// Otherwise the only real root is negative and `NoRoot` is returned.
pub fn largest_root(c: &CubicBound, precision: &Rational) -> Result<RootApprox> {
    if !precision.is_positive() {
        return Err(Error::InvalidInput(format!(
            "precision must be positive, got {precision}"
        )));
    }
    if c.s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let s = c.s;
    let top = isqrt(3 * s) + 2;
    let sk = (s + c.k) as u128;
    if sk * sk > (s as u128).pow(3) {
        return Err(Error::NoRoot {
            poly: c.to_string(),
            lo: "1".into(),
            hi: top.to_string(),
        });
    }

    // Integer scan on the increasing branch. Rational roots of a monic
    // integer cubic are integers, so exact roots surface here.
    let mut n = isqrt(s);
    if n * n < s {
        n += 1;
    }
    let upper = loop {
        let v = c.eval_int(n);
        if v == 0 {
            let r = Rational::from(n);
            return Ok(RootApprox {
                lo: r.clone(),
                hi: r,
            });
        }
        if v > 0 {
            break n;
        }
        n += 1;
    };

    let s_rat = Rational::from(s);
    let mut lo = Rational::from(upper - 1);
    let mut hi = Rational::from(upper);
    while &(&hi - &lo) >= precision {
        let mid = (&lo + &hi) / Rational::from(2i64);
        if &mid * &mid < s_rat {
            lo = mid;
            continue;
        }
        let v = c.eval(&mid);
        if v.is_zero() {
            return Ok(RootApprox {
                lo: mid.clone(),
                hi: mid,
            });
        }
        if v.is_positive() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RootApprox { lo, hi })
}

/// `e_s`, the largest root of `t^3 - 3st + 2s`.
pub fn expected_value(s: u64, precision: &Rational) -> Result<RootApprox> {
    largest_root(&CubicBound::new(s, 0), precision)
}

/// Root bracket together with its decimal rendering.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DecimalRoot {
    pub value: String,
    pub lo: Rational,
    pub hi: Rational,
    pub precision: Rational,
}

impl DecimalRoot {
    pub fn new(root: &RootApprox, precision: &Rational) -> Self {
        DecimalRoot {
            value: root.midpoint().to_decimal(decimal_digits_for(precision)),
            lo: root.lo.clone(),
            hi: root.hi.clone(),
            precision: precision.clone(),
        }
    }
}

/// Values of the chud row that this crate computes differently from the
/// reference table: `(s, reference value)`.
pub const CHUD_REFERENCE_MISMATCHES: [(u64, i64); 1] = [(20, 6)];

#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub tau: Rational,
    pub grid: Rational,
    pub precision: Rational,
    pub with_l: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            tau: Rational::frac(1, 1000),
            grid: Rational::frac(1, 1000),
            precision: Rational::frac(1, 1_000_000),
            with_l: true,
        }
    }
}

/// All bounds for one `s`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: u64,
    /// `(q-k)^2 <= s - k^2` search.
    pub thm1_q: u64,
    /// `⌊√(2s-1)⌋`.
    pub thm2_q: u64,
    /// `qk <= s`, `(q-k)^2 <= s - k` search.
    pub thm3_q: u64,
    pub chud_bound: Rational,
    pub alpha_max: u64,
    pub l_bound: Option<Rational>,
    pub tau: Rational,
    pub grid: Rational,
    pub e_s: DecimalRoot,
    pub flags: Vec<String>,
}

impl BoundReport {
    /// Every populated lower bound is at most `e_s + precision`.
    pub fn lower_bounds_within_upper(&self) -> bool {
        let ceiling = &self.e_s.hi + &self.e_s.precision;
        let ints = [self.thm1_q, self.thm2_q, self.thm3_q];
        ints.iter().all(|q| Rational::from(*q) <= ceiling)
            && self.chud_bound <= ceiling
            && self.l_bound.as_ref().is_none_or(|l| l <= &ceiling)
    }

    pub fn l_decimal(&self) -> Option<String> {
        self.l_bound
            .as_ref()
            .map(|l| l.to_decimal(decimal_digits_for(&self.grid)))
    }
}

pub fn bound_report(s: u64, cfg: &ReportConfig) -> Result<BoundReport> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let root = expected_value(s, &cfg.precision)?;
    let l_bound = if cfg.with_l {
        Some(best_bound(s, &cfg.tau, &cfg.grid)?)
    } else {
        None
    };
    let mut flags = Vec::new();
    if THM4_EXCEPTIONS.contains(&s) {
        flags.push("thm4-known-exception".to_string());
    }
    let chud = chudnovsky_bound(s);
    for (ms, reference) in CHUD_REFERENCE_MISMATCHES {
        if ms == s {
            flags.push(format!(
                "chud-reference-mismatch: computed {chud}, reference {reference}"
            ));
        }
    }
    Ok(BoundReport {
        s,
        thm1_q: thm1_bound(s),
        thm2_q: thm2_bound(s),
        thm3_q: thm3_bound(s),
        chud_bound: chud,
        alpha_max: alpha_max(s),
        l_bound,
        tau: cfg.tau.clone(),
        grid: cfg.grid.clone(),
        e_s: DecimalRoot::new(&root, &cfg.precision),
        flags,
    })
}
