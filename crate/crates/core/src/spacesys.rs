//! Space systems `(δ; q_1..q_s specialized | 1^p general)` and the iterated
//! quadric degeneration that certifies `α̂(s) >= δ`.
//!
//! Each pass restricts to the quadric, asks the plane reduction for the
//! multiplicity `t0` the quadric must be split off with, and subtracts it.
//! When `t0` is too small to make progress, one more general line is moved
//! onto the quadric. A "yes" is a proof; a "no" says nothing.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{largest_root, CubicBound};
use crate::error::{Error, Result};
use crate::exactnum::Rational;
use crate::planesys::{check_tau, t_threshold, TInput, DEFAULT_STEP_CAP};

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SpaceSystem {
    pub delta: Rational,
    /// Multiplicities of the lines already placed on the quadric.
    pub specialized: Vec<Rational>,
    /// Number of very general lines, each of multiplicity one.
    pub p: u64,
}

impl SpaceSystem {
    pub fn initial(delta: Rational, s: u64) -> Self {
        SpaceSystem {
            delta,
            specialized: Vec::new(),
            p: s,
        }
    }

    /// Exit condition: a nonempty system cannot have degree below one of its
    /// line multiplicities (or below zero).
    pub fn is_certainly_empty(&self) -> bool {
        !self.delta.is_positive()
            || (self.delta < Rational::one() && self.p >= 1)
            || self.specialized.iter().any(|q| &self.delta < q)
    }

    /// Splits the quadric off `t0` times. Entries reaching zero are dropped.
    pub fn subtract(&self, t0: &Rational) -> SpaceSystem {
        SpaceSystem {
            delta: &self.delta - &(t0 + t0),
            specialized: self
                .specialized
                .iter()
                .map(|q| q - t0)
                .filter(Rational::is_positive)
                .collect(),
            p: self.p,
        }
    }

    /// Moves one general line onto the quadric.
    pub fn specialize_one(&self) -> Option<SpaceSystem> {
        let p = self.p.checked_sub(1)?;
        let mut specialized = self.specialized.clone();
        specialized.push(Rational::one());
        Some(SpaceSystem {
            delta: self.delta.clone(),
            specialized,
            p,
        })
    }
}

impl fmt::Display for SpaceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};", self.delta)?;
        for (i, q) in self.specialized.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { "," })?;
            write!(f, "{q}")?;
        }
        write!(f, " | 1^{})", self.p)
    }
}

/// Plane-reduction input for the restriction of `(delta; specialized | 1^p)`
/// to the quadric.
pub fn restrict_to_quadric(delta: &Rational, specialized: &[Rational], p: u64) -> Result<TInput> {
    TInput::new(delta.clone(), specialized.to_vec(), p)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LMove {
    Subtract,
    Specialize,
    TerminateYes,
    TerminateNo,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LStep {
    pub system: SpaceSystem,
    pub t0: Option<Rational>,
    #[serde(rename = "move")]
    pub mv: LMove,
}

impl fmt::Display for LStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.system)?;
        if let Some(t0) = &self.t0 {
            write!(f, "  t0={t0}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LResult {
    pub answer: Answer,
    pub trace: Vec<LStep>,
}

/// When a threshold `t0` is large enough to split the quadric off.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubtractRule {
    /// Only `t0 >= tau`.
    Strict,
    /// `t0 >= tau`, or `0 < t0 = min q_j` so the subtraction removes at least
    /// one specialized line. Such steps are bounded by the number of lines.
    #[default]
    AllowExhausting,
}

impl SubtractRule {
    pub fn admits(&self, t0: &Rational, tau: &Rational, specialized: &[Rational]) -> bool {
        if t0 >= tau {
            return true;
        }
        match self {
            SubtractRule::Strict => false,
            SubtractRule::AllowExhausting => {
                t0.is_positive() && specialized.iter().min() == Some(t0)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct LConfig {
    pub tau: Rational,
    pub rule: SubtractRule,
    /// Budget for each plane reduction.
    pub t_cap: usize,
    /// Budget for the outer loop.
    pub l_cap: usize,
}

impl LConfig {
    pub fn new(tau: Rational) -> Self {
        LConfig {
            tau,
            rule: SubtractRule::default(),
            t_cap: DEFAULT_STEP_CAP,
            l_cap: DEFAULT_STEP_CAP,
        }
    }
}

fn validate(delta: &Rational, s: u64, cfg: &LConfig) -> Result<()> {
    check_tau(&cfg.tau)?;
    if !delta.is_positive() {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    Ok(())
}

fn reduce_space(
    delta: &Rational,
    s: u64,
    cfg: &LConfig,
    mut on_step: impl FnMut(&SpaceSystem, &Option<Rational>, LMove),
) -> Result<Answer> {
    validate(delta, s, cfg)?;
    let mut sys = SpaceSystem::initial(delta.clone(), s);
    for _ in 0..cfg.l_cap {
        if sys.is_certainly_empty() {
            on_step(&sys, &None, LMove::TerminateYes);
            return Ok(Answer::Yes);
        }
        // With nothing on the quadric the threshold is zero; skip the run.
        let t0 = if sys.specialized.is_empty() {
            None
        } else {
            let input = restrict_to_quadric(&sys.delta, &sys.specialized, sys.p)?;
            Some(t_threshold(&input, &cfg.tau, cfg.t_cap)?)
        };
        if let Some(t) = t0
            .as_ref()
            .filter(|t| cfg.rule.admits(t, &cfg.tau, &sys.specialized))
        {
            on_step(&sys, &t0, LMove::Subtract);
            sys = sys.subtract(t);
            continue;
        }
        if let Some(next) = sys.specialize_one() {
            on_step(&sys, &t0, LMove::Specialize);
            sys = next;
            continue;
        }
        on_step(&sys, &t0, LMove::TerminateNo);
        return Ok(Answer::No);
    }
    Err(Error::IterationCap { limit: cfg.l_cap })
}

pub fn run_l(delta: &Rational, s: u64, tau: &Rational) -> Result<LResult> {
    run_l_with(delta, s, &LConfig::new(tau.clone()))
}

pub fn run_l_with(delta: &Rational, s: u64, cfg: &LConfig) -> Result<LResult> {
    let mut trace = Vec::new();
    let answer = reduce_space(delta, s, cfg, |sys, t0, mv| {
        trace.push(LStep {
            system: sys.clone(),
            t0: t0.clone(),
            mv,
        })
    })?;
    Ok(LResult { answer, trace })
}

/// Answer of [`run_l_with`] without the trace, computed over integers.
pub fn l_answer(delta: &Rational, s: u64, cfg: &LConfig) -> Result<Answer> {
    validate(delta, s, cfg)?;
    crate::scaled::l_answer(delta, s, cfg)
}

/// Smallest multiple of `grid` that is at least `e_s`; the default start of
/// the downward scan.
pub fn default_scan_cap(s: u64, grid: &Rational) -> Result<Rational> {
    let root = largest_root(&CubicBound::new(s, 0), &(grid / &Rational::integer(1000)))?;
    let steps = (&root.hi / grid).ceil();
    Ok(Rational::integer(steps) * grid)
}

/// Best certified lower bound for `α̂(s)` on the grid, scanning down from
/// `e_s`. Every returned value has its own "yes" run behind it.
pub fn best_bound(s: u64, tau: &Rational, grid: &Rational) -> Result<Rational> {
    let cap = default_scan_cap(s, grid)?;
    best_bound_from(s, &cap, grid, &LConfig::new(tau.clone()))
}

/// Downward scan from `cap` in steps of `grid`, returning the first δ whose
/// run answers yes, or zero when no grid point above one does. Below one the
/// answer is trivially yes and certifies nothing new.
///
/// Grid points are evaluated in parallel batches; within a batch the largest
/// yes wins, so the result equals that of a sequential scan.
pub fn best_bound_from(s: u64, cap: &Rational, grid: &Rational, cfg: &LConfig) -> Result<Rational> {
    if !grid.is_positive() {
        return Err(Error::InvalidInput(format!(
            "grid must be positive, got {grid}"
        )));
    }
    let batch = (rayon::current_num_threads() * 2).max(1);
    let mut start = 0u64;
    loop {
        let points: Vec<Rational> = (start..start + batch as u64)
            .map(|i| cap - &(Rational::from(i) * grid))
            .take_while(|d| d > &Rational::one())
            .collect();
        if points.is_empty() {
            return Ok(Rational::zero());
        }
        let answers: Vec<Result<Answer>> = points
            .par_iter()
            .map(|delta| l_answer(delta, s, cfg))
            .collect();
        for (delta, answer) in points.iter().zip(answers) {
            if answer? == Answer::Yes {
                return Ok(delta.clone());
            }
        }
        start += batch as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planesys::{associate_system, run_t};

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn tau() -> Rational {
        r("1/1000")
    }

    #[test]
    fn restriction_matches_trace_formula_at_zero() {
        // (2d - mu; d, d - mu, 1^{2p}) at t = 0
        let input = restrict_to_quadric(&r("7"), &vec![r("1"); 5], 15).unwrap();
        let sys = associate_system(&input);
        let zero = Rational::zero();
        assert_eq!(sys.degree.eval(&zero), r("9"));
        let at_zero: Vec<Rational> = sys.mults().map(|m| m.eval(&zero)).collect();
        assert_eq!(at_zero[0], r("7"));
        assert_eq!(at_zero[1], r("2"));
        assert_eq!(at_zero.len(), 32);
        assert!(at_zero[2..].iter().all(|v| v == &Rational::one()));
    }

    #[test]
    fn restriction_without_specialized_lines() {
        let input = restrict_to_quadric(&r("5"), &[], 0).unwrap();
        let sys = associate_system(&input);
        assert_eq!(sys.to_string(), "L2(10-4t; 5-2t^2)");
    }

    #[test]
    fn restriction_feeds_plane_reduction() {
        let input = restrict_to_quadric(&r("4"), &vec![r("1"); 3], 5).unwrap();
        assert_eq!(run_t(&input, &tau()).unwrap().t0, r("4/7"));
    }

    #[test]
    fn run_l_examples() {
        let out = run_l(&r("4"), 8, &tau()).unwrap();
        assert_eq!(out.answer, Answer::Yes);
        // The scan for ten lines tops out here; 24/5 itself answers no.
        assert_eq!(
            run_l(&r("2397/500"), 10, &tau()).unwrap().answer,
            Answer::Yes
        );
        assert_eq!(run_l(&r("24/5"), 10, &tau()).unwrap().answer, Answer::No);
        assert_eq!(run_l(&r("10"), 2, &tau()).unwrap().answer, Answer::No);
    }

    #[test]
    fn strict_rule_stalls_on_small_exhausting_threshold() {
        let cfg = LConfig {
            rule: SubtractRule::Strict,
            ..LConfig::new(tau())
        };
        assert_eq!(run_l_with(&r("4"), 8, &cfg).unwrap().answer, Answer::No);
    }

    #[test]
    fn subtract_rule_admission() {
        let q = [r("3/5045"), r("1")];
        let t = tau();
        assert!(SubtractRule::Strict.admits(&r("1/1000"), &t, &q));
        assert!(!SubtractRule::Strict.admits(&r("3/5045"), &t, &q));
        assert!(SubtractRule::AllowExhausting.admits(&r("3/5045"), &t, &q));
        assert!(!SubtractRule::AllowExhausting.admits(&r("1/5045"), &t, &q));
        assert!(!SubtractRule::AllowExhausting.admits(&Rational::zero(), &t, &[]));
    }

    #[test]
    fn exit_conditions() {
        let sys = |d: &str, q: &[&str], p| SpaceSystem {
            delta: r(d),
            specialized: q.iter().map(|x| r(x)).collect(),
            p,
        };
        assert!(sys("1/2", &[], 1).is_certainly_empty());
        assert!(!sys("1/2", &[], 0).is_certainly_empty());
        assert!(sys("1/2", &["2/3"], 0).is_certainly_empty());
        assert!(!sys("1", &["1"], 3).is_certainly_empty());
        assert!(sys("0", &[], 0).is_certainly_empty());
        assert!(sys("-1/3", &[], 0).is_certainly_empty());
    }

    #[test]
    fn subtract_drops_exhausted_lines() {
        let sys = SpaceSystem {
            delta: r("10096/5045"),
            specialized: vec![r("3/5045"), r("3/5045"), r("3/5045"), r("1")],
            p: 4,
        };
        let next = sys.subtract(&r("3/5045"));
        assert_eq!(next.delta, r("2"));
        assert_eq!(next.specialized, vec![r("5042/5045")]);
        assert_eq!(next.to_string(), "(2; 5042/5045 | 1^4)");
    }

    #[test]
    fn display_matches_trace_layout() {
        let sys = SpaceSystem {
            delta: r("10096/5045"),
            specialized: vec![r("3/5045"); 3],
            p: 5,
        };
        assert_eq!(sys.to_string(), "(10096/5045; 3/5045,3/5045,3/5045 | 1^5)");
        assert_eq!(SpaceSystem::initial(r("4"), 8).to_string(), "(4; | 1^8)");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(run_l(&r("4"), 8, &Rational::zero()).is_err());
        assert!(run_l(&r("0"), 8, &tau()).is_err());
        assert!(run_l(&r("4"), 0, &tau()).is_err());
        let cfg = LConfig::new(tau());
        assert!(best_bound_from(3, &r("2"), &Rational::zero(), &cfg).is_err());
    }

    #[test]
    fn outer_cap_is_reported() {
        let cfg = LConfig {
            l_cap: 3,
            ..LConfig::new(tau())
        };
        assert_eq!(
            run_l_with(&r("4"), 8, &cfg),
            Err(Error::IterationCap { limit: 3 })
        );
    }

    #[test]
    fn scan_stops_at_one() {
        let cfg = LConfig::new(tau());
        assert_eq!(
            best_bound_from(1, &r("1"), &r("1/1000"), &cfg).unwrap(),
            Rational::zero()
        );
        assert_eq!(
            best_bound_from(3, &r("2"), &r("1/2"), &cfg).unwrap(),
            r("3/2")
        );
    }
}
