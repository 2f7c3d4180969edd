//! Plane linear systems with multiplicities linear in `t`, and the reduction
//! that drives them to a terminal degree by Cremona moves and four-point
//! collisions.
//!
//! Multiplicities are stored run-length encoded. Systems of the form
//! `1^{2p}` with `p` in the hundreds stay a handful of runs, and merging four
//! equal entries is a count update.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{tau_order, LinForm, Rational};

pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// One run of equal multiplicities.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Run {
    pub value: LinForm,
    pub count: usize,
}

/// `L2(degree; mults...)` with entries in `Q[t]`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PlaneSystem {
    pub degree: LinForm,
    #[serde(rename = "mults")]
    runs: Vec<Run>,
}

impl PlaneSystem {
    pub fn new(degree: LinForm, mults: impl IntoIterator<Item = LinForm>) -> Self {
        let mut sys = PlaneSystem {
            degree,
            runs: Vec::new(),
        };
        for m in mults {
            sys.push(m, 1);
        }
        sys
    }

    pub fn from_runs(degree: LinForm, runs: impl IntoIterator<Item = (LinForm, usize)>) -> Self {
        let mut sys = PlaneSystem {
            degree,
            runs: Vec::new(),
        };
        for (value, count) in runs {
            sys.push(value, count);
        }
        sys
    }

    /// Appends `count` copies of `value`, coalescing with the last run.
    fn push(&mut self, value: LinForm, count: usize) {
        if count == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some(last) if last.value == value => last.count += count,
            _ => self.runs.push(Run { value, count }),
        }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Multiplicities expanded, in stored order.
    pub fn mults(&self) -> impl Iterator<Item = &LinForm> + '_ {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(&r.value, r.count))
    }

    pub fn mult_count(&self) -> usize {
        self.runs.iter().map(|r| r.count).sum()
    }

    /// The first `n` multiplicities in stored order.
    fn leading(&self, n: usize) -> Vec<LinForm> {
        self.mults().take(n).cloned().collect()
    }

    /// Drops the first `n` multiplicities.
    fn drop_leading(&mut self, mut n: usize) {
        let mut keep = Vec::with_capacity(self.runs.len());
        for mut run in self.runs.drain(..) {
            if n >= run.count {
                n -= run.count;
                continue;
            }
            run.count -= n;
            n = 0;
            keep.push(run);
        }
        self.runs = keep;
    }

    pub fn is_normalized(&self, tau: &Rational) -> bool {
        self.runs.iter().all(|r| r.value.eval(tau).is_positive())
            && self
                .runs
                .windows(2)
                .all(|w| tau_order(&w[0].value, &w[1].value, tau) == Ordering::Greater)
    }
}

impl fmt::Display for PlaneSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L2({}", self.degree)?;
        for (i, run) in self.runs.iter().enumerate() {
            f.write_str(if i == 0 { "; " } else { ", " })?;
            if run.count == 1 {
                write!(f, "{}", run.value)?;
            } else {
                write!(f, "{}^{}", run.value, run.count)?;
            }
        }
        f.write_str(")")
    }
}

/// Input of the plane reduction: `(delta; q_1..q_s; p)`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TInput {
    pub delta: Rational,
    pub q: Vec<Rational>,
    pub p: u64,
}

impl TInput {
    pub fn new(delta: Rational, q: Vec<Rational>, p: u64) -> Result<Self> {
        if !delta.is_positive() {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if let Some(bad) = q.iter().find(|x| !x.is_positive()) {
            return Err(Error::InvalidInput(format!(
                "specialized multiplicities must be positive, got {bad}"
            )));
        }
        Ok(TInput { delta, q, p })
    }

    pub fn q_sum(&self) -> Rational {
        self.q.iter().fold(Rational::zero(), |acc, x| acc + x)
    }

    pub fn q_min(&self) -> Option<&Rational> {
        self.q.iter().min()
    }
}

impl fmt::Display for TInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.delta)?;
        for (i, q) in self.q.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ";{}", self.p)
    }
}

impl FromStr for TInput {
    type Err = Error;

    /// `delta;q1,q2,...;p`, the middle list possibly empty.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != 3 {
            let pos = if parts.len() > 3 {
                parts[..3].iter().map(|p| p.len() + 1).sum::<usize>() - 1
            } else {
                s.len()
            };
            return Err(Error::parse(pos, "expected 'delta;q1,...,qs;p'"));
        }
        let delta: Rational = parts[0].parse()?;
        let mut offset = parts[0].len() + 1;
        let mut q = Vec::new();
        if !parts[1].trim().is_empty() {
            for item in parts[1].split(',') {
                q.push(item.parse::<Rational>().map_err(|e| e.offset(offset))?);
                offset += item.len() + 1;
            }
        } else {
            offset += parts[1].len() + 1;
        }
        let p_str = parts[2].trim();
        let p: u64 = p_str.parse().map_err(|_| {
            let lead = parts[2].len() - parts[2].trim_start().len();
            Error::parse(offset + lead, "expected a nonnegative integer count")
        })?;
        TInput::new(delta, q, p)
    }
}

/// `L2(2δ−q+(s−4)t; δ−2t, δ−q+(s−2)t, 1^{2p})` with `q` the sum of the
/// specialized multiplicities.
pub fn associate_system(input: &TInput) -> PlaneSystem {
    let s = Rational::from(input.q.len() as u64);
    let q = input.q_sum();
    let two = Rational::from(2i64);
    let degree = LinForm::new(&two * &input.delta - &q, &s - Rational::from(4i64));
    let first = LinForm::new(input.delta.clone(), -two.clone());
    let second = LinForm::new(&input.delta - &q, &s - &two);
    PlaneSystem::from_runs(
        degree,
        [
            (first, 1),
            (second, 1),
            (LinForm::constant(Rational::one()), 2 * input.p as usize),
        ],
    )
}

/// Drops entries with value `<= 0` at `tau` and sorts the rest
/// non-increasingly.
pub fn normalize(sys: &PlaneSystem, tau: &Rational) -> PlaneSystem {
    let mut keyed: Vec<(Rational, Run)> = sys
        .runs
        .iter()
        .filter_map(|r| {
            let v = r.value.eval(tau);
            v.is_positive().then(|| (v, r.clone()))
        })
        .collect();
    keyed.sort_by(|(va, ra), (vb, rb)| {
        vb.cmp(va)
            .then_with(|| rb.value.a.cmp(&ra.value.a))
            .then_with(|| rb.value.b.cmp(&ra.value.b))
    });
    PlaneSystem::from_runs(
        sys.degree.clone(),
        keyed.into_iter().map(|(_, r)| (r.value, r.count)),
    )
}

/// Degree minus the three leading multiplicities, if there are three.
pub fn cremona_k(sys: &PlaneSystem) -> Option<LinForm> {
    if sys.mult_count() < 3 {
        return None;
    }
    Some(
        sys.leading(3)
            .iter()
            .fold(sys.degree.clone(), |acc, m| &acc - m),
    )
}

/// Adds `k` to the degree and the three leading multiplicities. The result
/// keeps stored order and is not re-normalized.
pub fn apply_cremona(sys: &PlaneSystem, k: &LinForm) -> Result<PlaneSystem> {
    if sys.mult_count() < 3 {
        return Err(Error::InvalidInput(
            "Cremona move needs at least three multiplicities".into(),
        ));
    }
    let moved = sys.leading(3);
    let mut rest = sys.clone();
    rest.drop_leading(3);
    let mut out = PlaneSystem {
        degree: &sys.degree + k,
        runs: Vec::with_capacity(rest.runs.len() + 3),
    };
    for m in moved {
        out.push(&m + k, 1);
    }
    for run in rest.runs {
        out.push(run.value, run.count);
    }
    Ok(out)
}

/// Replaces four equal multiplicities by one of twice the value, choosing the
/// largest such value. The result is normalized.
pub fn merge_four(sys: &PlaneSystem, tau: &Rational) -> Option<PlaneSystem> {
    // Runs may repeat a value when `sys` is not normalized; tally first.
    let normalized = normalize(sys, tau);
    let pick = normalized
        .runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.count >= 4)
        .max_by(|(_, x), (_, y)| tau_order(&x.value, &y.value, tau))
        .map(|(i, _)| i)?;
    let mut runs = normalized.runs;
    let doubled = runs[pick].value.scale(&Rational::from(2i64));
    runs[pick].count -= 4;
    runs.push(Run {
        value: doubled,
        count: 1,
    });
    let merged = PlaneSystem::from_runs(
        sys.degree.clone(),
        runs.into_iter().map(|r| (r.value, r.count)),
    );
    Some(normalize(&merged, tau))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TMove {
    Cremona,
    Merge,
    Terminate,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TStep {
    #[serde(flatten)]
    pub system: PlaneSystem,
    pub k: Option<LinForm>,
    #[serde(rename = "move")]
    pub mv: TMove,
}

impl fmt::Display for TStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.system)?;
        if let Some(k) = &self.k {
            write!(f, "  k={k}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct TTrace {
    pub steps: Vec<TStep>,
}

impl TTrace {
    /// Re-derives each system from its predecessor through the recorded move.
    /// Returns the index of the first step that does not follow, if any.
    pub fn first_replay_mismatch(&self, tau: &Rational) -> Option<usize> {
        for (i, pair) in self.steps.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            let derived = match prev.mv {
                TMove::Cremona => prev
                    .k
                    .as_ref()
                    .and_then(|k| apply_cremona(&prev.system, k).ok())
                    .map(|s| normalize(&s, tau)),
                TMove::Merge => merge_four(&prev.system, tau),
                TMove::Terminate => None,
            };
            if derived.as_ref() != Some(&next.system) || cremona_k(&prev.system) != prev.k {
                return Some(i + 1);
            }
        }
        match self.steps.last() {
            Some(last) if last.mv != TMove::Terminate => Some(self.steps.len() - 1),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TOutcome {
    pub t0: Rational,
    pub terminal_degree: LinForm,
    pub trace: TTrace,
}

/// Reduces the associated system to termination, reporting each visited
/// normalized system to `on_step`. Returns the terminal degree.
fn reduce(
    input: &TInput,
    tau: &Rational,
    cap: usize,
    mut on_step: impl FnMut(&PlaneSystem, &Option<LinForm>, TMove),
) -> Result<LinForm> {
    let mut sys = normalize(&associate_system(input), tau);
    for _ in 0..cap {
        let k = cremona_k(&sys);
        if let Some(kv) = &k {
            if kv.eval(tau).is_negative() {
                on_step(&sys, &k, TMove::Cremona);
                sys = normalize(&apply_cremona(&sys, kv)?, tau);
                continue;
            }
        }
        if let Some(merged) = merge_four(&sys, tau) {
            on_step(&sys, &k, TMove::Merge);
            sys = merged;
            continue;
        }
        on_step(&sys, &k, TMove::Terminate);
        return Ok(sys.degree);
    }
    Err(Error::IterationCap { limit: cap })
}

/// Threshold from a terminal degree `a + b·t`.
pub fn threshold(terminal: &LinForm, q: &[Rational]) -> Rational {
    if !terminal.a.is_negative() {
        return Rational::zero();
    }
    let Some(q_min) = q.iter().min() else {
        return Rational::zero();
    };
    if !terminal.b.is_positive() {
        return q_min.clone();
    }
    let root = terminal.root().expect("b > 0");
    root.min(q_min.clone())
}

pub fn run_t(input: &TInput, tau: &Rational) -> Result<TOutcome> {
    run_t_capped(input, tau, DEFAULT_STEP_CAP)
}

pub fn run_t_capped(input: &TInput, tau: &Rational, cap: usize) -> Result<TOutcome> {
    check_tau(tau)?;
    let mut trace = TTrace::default();
    let terminal = reduce(input, tau, cap, |sys, k, mv| {
        trace.steps.push(TStep {
            system: sys.clone(),
            k: k.clone(),
            mv,
        })
    })?;
    Ok(TOutcome {
        t0: threshold(&terminal, &input.q),
        terminal_degree: terminal,
        trace,
    })
}

/// Same threshold as [`run_t`] without recording a trace.
pub fn t_threshold(input: &TInput, tau: &Rational, cap: usize) -> Result<Rational> {
    check_tau(tau)?;
    let terminal = crate::scaled::terminal_degree(input, tau, cap)?;
    Ok(threshold(&terminal, &input.q))
}

pub(crate) fn check_tau(tau: &Rational) -> Result<()> {
    if tau.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "tau must be positive, got {tau}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn lf(s: &str) -> LinForm {
        s.parse().unwrap()
    }

    fn sys(degree: &str, runs: &[(&str, usize)]) -> PlaneSystem {
        PlaneSystem::from_runs(lf(degree), runs.iter().map(|(v, c)| (lf(v), *c)))
    }

    fn tau() -> Rational {
        r("1/1000")
    }

    fn input(s: &str) -> TInput {
        s.parse().unwrap()
    }

    #[test]
    fn associate_examples() {
        assert_eq!(
            associate_system(&input("7;1,1,1,1,1;15")),
            sys("9+t", &[("7-2t", 1), ("2+3t", 1), ("1", 30)])
        );
        assert_eq!(
            associate_system(&input("4;;8")),
            sys("8-4t", &[("4-2t", 2), ("1", 16)])
        );
        assert_eq!(
            associate_system(&input("4;1,1,1;5")),
            sys("5-t", &[("4-2t", 1), ("1+t", 1), ("1", 10)])
        );
    }

    #[test]
    fn normalize_examples() {
        let raw = sys("-1+34t", &[("-1+17t", 3), ("10t", 1), ("7t", 3), ("3t", 6)]);
        assert_eq!(
            normalize(&raw, &tau()),
            sys("-1+34t", &[("10t", 1), ("7t", 3), ("3t", 6)])
        );
        let sorted = sys("5", &[("3", 1), ("2", 2), ("1", 1)]);
        assert_eq!(normalize(&sorted, &tau()), sorted);
        let unsorted = sys("5", &[("3t", 1), ("2", 1), ("1", 1)]);
        assert_eq!(
            normalize(&unsorted, &tau()),
            sys("5", &[("2", 1), ("1", 1), ("3t", 1)])
        );
    }

    #[test]
    fn normalize_coalesces_split_runs() {
        let split = sys("5", &[("1", 2), ("2", 1), ("1", 3)]);
        assert_eq!(normalize(&split, &tau()), sys("5", &[("2", 1), ("1", 5)]));
    }

    #[test]
    fn cremona_k_examples() {
        assert_eq!(
            cremona_k(&sys("9+t", &[("7-2t", 1), ("2+3t", 1), ("1", 30)])),
            Some(lf("-1"))
        );
        assert_eq!(
            cremona_k(&sys(
                "2+10t",
                &[("1+3t", 1), ("1", 5), ("7t", 1), ("3t", 6)]
            )),
            Some(lf("-1+7t"))
        );
        assert_eq!(cremona_k(&sys("-8+141t", &[("3t", 1)])), None);
    }

    #[test]
    fn apply_cremona_examples() {
        let s = sys("9+t", &[("7-2t", 1), ("2+3t", 1), ("1", 30)]);
        let out = normalize(&apply_cremona(&s, &lf("-1")).unwrap(), &tau());
        assert_eq!(out, sys("8+t", &[("6-2t", 1), ("1+3t", 1), ("1", 29)]));

        let s = sys("-4+75t", &[("3t", 4)]);
        let raw = apply_cremona(&s, &lf("-4+66t")).unwrap();
        assert_eq!(raw, sys("-8+141t", &[("-4+69t", 3), ("3t", 1)]));
        assert_eq!(normalize(&raw, &tau()), sys("-8+141t", &[("3t", 1)]));
    }

    #[test]
    fn apply_cremona_needs_three() {
        assert!(apply_cremona(&sys("5", &[("2", 2)]), &lf("-1")).is_err());
    }

    #[test]
    fn merge_four_examples() {
        let s = sys("8+t", &[("6-2t", 1), ("1+3t", 1), ("1", 29)]);
        assert_eq!(
            merge_four(&s, &tau()),
            Some(sys("8+t", &[("6-2t", 1), ("2", 1), ("1+3t", 1), ("1", 25)]))
        );
        let s = sys("7+t", &[("5-2t", 1), ("1", 26), ("3t", 1)]);
        assert_eq!(
            merge_four(&s, &tau()),
            Some(sys("7+t", &[("5-2t", 1), ("2", 1), ("1", 22), ("3t", 1)]))
        );
        assert_eq!(merge_four(&sys("5", &[("2", 1), ("1", 2)]), &tau()), None);
    }

    #[test]
    fn merge_four_prefers_largest_group() {
        let s = sys("20", &[("3", 4), ("1", 4)]);
        assert_eq!(
            merge_four(&s, &tau()),
            Some(sys("20", &[("6", 1), ("1", 4)]))
        );
    }

    #[test]
    fn run_t_examples() {
        let out = run_t(&input("7;1,1,1,1,1;15"), &tau()).unwrap();
        assert_eq!(out.t0, r("8/141"));
        assert_eq!(out.trace.steps.len(), 19);

        let i = TInput::new(
            r("10096/5045"),
            vec![r("3/5045"), r("3/5045"), r("3/5045"), r("1")],
            4,
        )
        .unwrap();
        assert_eq!(run_t(&i, &tau()).unwrap().t0, r("3/5045"));

        let i = TInput::new(r("10096/5045"), vec![r("3/5045"); 3], 5).unwrap();
        assert_eq!(run_t(&i, &tau()).unwrap().t0, Rational::zero());

        assert_eq!(run_t(&input("4;1,1,1;5"), &tau()).unwrap().t0, r("4/7"));
    }

    #[test]
    fn threshold_cases() {
        let q = [r("1/2"), r("1/3")];
        assert_eq!(threshold(&lf("1-5t"), &q), Rational::zero());
        assert_eq!(threshold(&lf("0+5t"), &q), Rational::zero());
        assert_eq!(threshold(&lf("-1-5t"), &q), r("1/3"));
        assert_eq!(threshold(&lf("-1+5t"), &q), r("1/5"));
        assert_eq!(threshold(&lf("-1+2t"), &q), r("1/3"));
        assert_eq!(threshold(&lf("-1+2t"), &[]), Rational::zero());
    }

    #[test]
    fn iteration_cap_is_reported() {
        assert_eq!(
            run_t_capped(&input("7;1,1,1,1,1;15"), &tau(), 5),
            Err(Error::IterationCap { limit: 5 })
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(run_t(&input("7;1;1"), &Rational::zero()).is_err());
        assert!("0;1;1".parse::<TInput>().is_err());
        assert!("1;0;1".parse::<TInput>().is_err());
        assert!(matches!(
            "7;;x".parse::<TInput>(),
            Err(Error::Parse { pos: 3, .. })
        ));
        assert!(matches!(
            "7;1,y;2".parse::<TInput>(),
            Err(Error::Parse { pos: 4, .. })
        ));
        assert!(matches!("7;1".parse::<TInput>(), Err(Error::Parse { .. })));
    }

    #[test]
    fn input_round_trips_through_text() {
        let i = input("10096/5045;3/5045,1;4");
        assert_eq!(i.to_string(), "10096/5045;3/5045,1;4");
        assert_eq!(input(&i.to_string()), i);
    }

    #[test]
    fn display_uses_run_lengths() {
        assert_eq!(
            sys("9+t", &[("7-2t", 1), ("2+3t", 1), ("1", 30)]).to_string(),
            "L2(9+t; 7-2t, 2+3t, 1^30)"
        );
        assert_eq!(sys("-8+141t", &[]).to_string(), "L2(-8+141t)");
    }
}
