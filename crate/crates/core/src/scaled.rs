//! Trace-free reductions over integers.
//!
//! Every `a` coefficient the reduction produces is an integer combination of
//! `delta`, the `q_j` and `1`, and every `t` coefficient is an integer. So
//! with `D` the common denominator of the input, a form is held as
//! `(A, B)` meaning `A/D + B·t`, together with `E = D·m·f(n/m)` for
//! `tau = n/m`. `E` is linear, so it is carried along instead of re-evaluated,
//! and all comparisons at `tau` are integer comparisons. Arithmetic runs in
//! `i128` and restarts in `BigInt` on overflow.
//!
//! The space reduction keeps `delta` and the `q_j` over one common
//! denominator as well, so a subtraction costs one lcm instead of a gcd per
//! line.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{LinForm, Rational};
use crate::planesys::TInput;
use crate::spacesys::{Answer, LConfig, SubtractRule};

trait Int: Clone + Ord + Zero + Signed + CheckedAdd + CheckedSub + CheckedMul {
    fn lift(n: &BigInt) -> Option<Self>;
    fn into_big(self) -> BigInt;
}

impl Int for i128 {
    fn lift(n: &BigInt) -> Option<Self> {
        i128::try_from(n).ok()
    }
    fn into_big(self) -> BigInt {
        BigInt::from(self)
    }
}

impl Int for BigInt {
    fn lift(n: &BigInt) -> Option<Self> {
        Some(n.clone())
    }
    fn into_big(self) -> BigInt {
        self
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Form<N> {
    e: N,
    a: N,
    b: N,
}

impl<N: Int> Form<N> {
    fn add(&self, o: &Self) -> Option<Self> {
        Some(Form {
            e: self.e.checked_add(&o.e)?,
            a: self.a.checked_add(&o.a)?,
            b: self.b.checked_add(&o.b)?,
        })
    }

    fn sub(&self, o: &Self) -> Option<Self> {
        Some(Form {
            e: self.e.checked_sub(&o.e)?,
            a: self.a.checked_sub(&o.a)?,
            b: self.b.checked_sub(&o.b)?,
        })
    }

    /// Value at tau, then `a`, then `b`.
    fn order(&self, o: &Self) -> Ordering {
        self.e
            .cmp(&o.e)
            .then_with(|| self.a.cmp(&o.a))
            .then_with(|| self.b.cmp(&o.b))
    }
}

struct Ctx<N> {
    m: N,
    nd: N,
}

impl<N: Int> Ctx<N> {
    fn form(&self, a: N, b: N) -> Option<Form<N>> {
        let e = a
            .checked_mul(&self.m)?
            .checked_add(&b.checked_mul(&self.nd)?)?;
        Some(Form { e, a, b })
    }
}

/// Sorts descending in tau order, dropping non-positive entries and
/// coalescing equal neighbours.
fn normalize<N: Int>(runs: &mut Vec<(Form<N>, usize)>) {
    runs.retain(|(f, c)| *c > 0 && f.e.is_positive());
    runs.sort_by(|x, y| y.0.order(&x.0));
    runs.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
}

/// Plane-reduction input over the common denominator `d`: `delta` and
/// `q_sum` are numerators, `s` the number of specialized lines.
struct Scaled<'a> {
    d: &'a BigInt,
    delta: &'a BigInt,
    q_sum: &'a BigInt,
    s: usize,
    p: u64,
}

/// Terminal degree as `(A, B)` meaning `A/d + B·t`; `None` on overflow.
fn reduce<N: Int>(input: &Scaled, tau: &Rational, cap: usize) -> Option<Result<(BigInt, BigInt)>> {
    let dn = N::lift(input.d)?;
    let ctx = Ctx {
        m: N::lift(tau.denom())?,
        nd: N::lift(&(tau.numer() * input.d))?,
    };
    let int = |v: i64| N::lift(&BigInt::from(v));
    let s = input.s as i64;
    let delta = N::lift(input.delta)?;
    let q = N::lift(input.q_sum)?;
    let two_delta = delta.checked_add(&delta)?;
    let mut degree = ctx.form(two_delta.checked_sub(&q)?, int(s - 4)?)?;
    let mut runs = vec![
        (ctx.form(delta.clone(), int(-2)?)?, 1usize),
        (ctx.form(delta.checked_sub(&q)?, int(s - 2)?)?, 1),
        (ctx.form(dn, N::zero())?, 2 * input.p as usize),
    ];
    normalize(&mut runs);

    for _ in 0..cap {
        let total: usize = runs.iter().map(|r| r.1).sum();
        if total >= 3 {
            let mut k = degree.clone();
            let mut need = 3;
            for (f, c) in &runs {
                for _ in 0..(*c).min(need) {
                    k = k.sub(f)?;
                }
                need -= (*c).min(need);
                if need == 0 {
                    break;
                }
            }
            if k.e.is_negative() {
                degree = degree.add(&k)?;
                let mut moved = Vec::with_capacity(3);
                let mut need = 3;
                for run in runs.iter_mut() {
                    let take = run.1.min(need);
                    if take > 0 {
                        moved.push((run.0.add(&k)?, take));
                        run.1 -= take;
                        need -= take;
                    }
                }
                runs.extend(moved);
                normalize(&mut runs);
                continue;
            }
        }
        // Runs are sorted, so the first with four entries is the largest.
        if let Some(i) = runs.iter().position(|r| r.1 >= 4) {
            runs[i].1 -= 4;
            let doubled = runs[i].0.add(&runs[i].0)?;
            runs.push((doubled, 1));
            normalize(&mut runs);
            continue;
        }
        return Some(Ok((degree.a.into_big(), degree.b.into_big())));
    }
    Some(Err(Error::IterationCap { limit: cap }))
}

fn terminal(input: &Scaled, tau: &Rational, cap: usize) -> Result<(BigInt, BigInt)> {
    match reduce::<i128>(input, tau, cap) {
        Some(out) => out,
        None => reduce::<BigInt>(input, tau, cap).expect("BigInt arithmetic does not overflow"),
    }
}

/// Terminal degree of the plane reduction of `input`.
pub(crate) fn terminal_degree(input: &TInput, tau: &Rational, cap: usize) -> Result<LinForm> {
    let d = input
        .q
        .iter()
        .fold(input.delta.denom().clone(), |acc, x| acc.lcm(x.denom()));
    let lift = |x: &Rational| x.numer() * (&d / x.denom());
    let delta = lift(&input.delta);
    let q_sum: BigInt = input.q.iter().map(lift).sum();
    let scaled = Scaled {
        d: &d,
        delta: &delta,
        q_sum: &q_sum,
        s: input.q.len(),
        p: input.p,
    };
    let (a, b) = terminal(&scaled, tau, cap)?;
    let a = Rational::new(a, d.clone()).expect("positive denominator");
    Ok(LinForm::new(a, Rational::from(b)))
}

/// The plane threshold for terminal degree `A/d + B·t` as `(f, u)`, meaning
/// `t0 = u / (d·f)`, with `f` chosen so that `d·f` is the least common
/// denominator of `t0` and the system.
fn threshold(a: &BigInt, b: &BigInt, q_min: &BigInt) -> (BigInt, BigInt) {
    if !a.is_negative() {
        return (BigInt::one(), BigInt::zero());
    }
    // min(-A/B, q_min) over d when B > 0
    if b.is_positive() && -a < q_min * b {
        // B is small; reduce -A mod B first so the gcd stays cheap.
        let h = (-a % b).gcd(b);
        return (b / &h, -a / &h);
    }
    (BigInt::one(), q_min.clone())
}

/// Space system `(delta/d; q_j/d | 1^p)` with `d > 0`.
struct Space {
    d: BigInt,
    delta: BigInt,
    q: Vec<BigInt>,
    p: u64,
}

impl Space {
    fn is_certainly_empty(&self) -> bool {
        !self.delta.is_positive()
            || (self.delta < self.d && self.p >= 1)
            || self.q.iter().any(|q| &self.delta < q)
    }

    /// Subtracts `t0 = u / (d·f)` once from each line and twice from delta.
    fn subtract(&mut self, f: &BigInt, u: &BigInt) {
        self.d *= f;
        self.delta = &self.delta * f - u - u;
        for q in self.q.iter_mut() {
            *q = &*q * f - u;
        }
        self.q.retain(|q| q.is_positive());
        let mut c = self.d.gcd(&self.delta);
        for q in &self.q {
            if c.is_one() {
                return;
            }
            c = c.gcd(q);
        }
        if !c.is_one() {
            self.d /= &c;
            self.delta /= &c;
            for q in self.q.iter_mut() {
                *q /= &c;
            }
        }
    }
}

/// Answer of the space reduction; inputs are validated by the caller.
pub(crate) fn l_answer(delta: &Rational, s: u64, cfg: &LConfig) -> Result<Answer> {
    let mut sys = Space {
        d: delta.denom().clone(),
        delta: delta.numer().clone(),
        q: Vec::new(),
        p: s,
    };
    let (tn, td) = (cfg.tau.numer(), cfg.tau.denom());
    for _ in 0..cfg.l_cap {
        if sys.is_certainly_empty() {
            return Ok(Answer::Yes);
        }
        if let Some(q_min) = sys.q.iter().min() {
            let q_sum: BigInt = sys.q.iter().sum();
            let scaled = Scaled {
                d: &sys.d,
                delta: &sys.delta,
                q_sum: &q_sum,
                s: sys.q.len(),
                p: sys.p,
            };
            let (a, b) = terminal(&scaled, &cfg.tau, cfg.t_cap)?;
            let (f, u) = threshold(&a, &b, q_min);
            let admitted = &u * td >= tn * &sys.d * &f
                || (cfg.rule == SubtractRule::AllowExhausting
                    && u.is_positive()
                    && u == q_min * &f);
            if admitted {
                sys.subtract(&f, &u);
                continue;
            }
        }
        if sys.p > 0 {
            sys.p -= 1;
            sys.q.push(sys.d.clone());
            continue;
        }
        return Ok(Answer::No);
    }
    Err(Error::IterationCap { limit: cfg.l_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planesys::run_t;
    use proptest::prelude::*;

    fn agree(input: &TInput, tau: &Rational) {
        let slow = run_t(input, tau).unwrap().terminal_degree;
        assert_eq!(
            terminal_degree(input, tau, 1_000_000).unwrap(),
            slow,
            "{input}"
        );
        let d = input
            .q
            .iter()
            .fold(input.delta.denom().clone(), |acc, x| acc.lcm(x.denom()));
        let delta = input.delta.numer() * (&d / input.delta.denom());
        let q_sum: BigInt = input.q.iter().map(|x| x.numer() * (&d / x.denom())).sum();
        let scaled = Scaled {
            d: &d,
            delta: &delta,
            q_sum: &q_sum,
            s: input.q.len(),
            p: input.p,
        };
        let (a, b) = reduce::<BigInt>(&scaled, tau, 1_000_000).unwrap().unwrap();
        assert_eq!(
            LinForm::new(Rational::new(a, d).unwrap(), Rational::from(b)),
            slow,
            "{input}"
        );
    }

    #[test]
    fn matches_traced_reduction_on_examples() {
        let tau: Rational = "1/1000".parse().unwrap();
        for s in [
            "7;1,1,1,1,1;15",
            "4;1,1,1;5",
            "10096/5045;3/5045,3/5045,3/5045,1;4",
            "10096/5045;3/5045,3/5045,3/5045;5",
            "36/5;1,1,1,1,1,1;14",
        ] {
            agree(&s.parse().unwrap(), &tau);
        }
    }

    #[test]
    fn falls_back_on_overflow() {
        let huge =
            Rational::new(BigInt::from(1) << 140u32, (BigInt::from(1) << 130u32) + 1).unwrap();
        let input = TInput::new(huge.clone(), vec![Rational::one(), huge], 3).unwrap();
        let tau: Rational = "1/1000".parse().unwrap();
        agree(&input, &tau);
    }

    fn l_agrees(delta: &Rational, s: u64, cfg: &LConfig) {
        let traced = crate::spacesys::run_l_with(delta, s, cfg).unwrap().answer;
        assert_eq!(l_answer(delta, s, cfg).unwrap(), traced, "{delta} {s}");
    }

    #[test]
    fn space_answers_match_traced_run() {
        let tau: Rational = "1/1000".parse().unwrap();
        let strict = LConfig {
            rule: SubtractRule::Strict,
            ..LConfig::new(tau.clone())
        };
        let cfg = LConfig::new(tau);
        for (d, s) in [
            ("4", 8),
            ("24/5", 10),
            ("2397/500", 10),
            ("10", 2),
            ("3833/1000", 7),
            ("7", 20),
        ] {
            let d: Rational = d.parse().unwrap();
            l_agrees(&d, s, &cfg);
            l_agrees(&d, s, &strict);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn matches_traced_reduction(
            dn in 1i64..400, dd in 1i64..40,
            qs in proptest::collection::vec((1i64..60, 1i64..40), 0..7),
            p in 0u64..30,
            tn in 1i64..5, td in 2i64..2000,
        ) {
            let q = qs.iter().map(|&(n, d)| Rational::frac(n, d)).collect();
            let input = TInput::new(Rational::frac(dn, dd), q, p).unwrap();
            agree(&input, &Rational::frac(tn, td));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn space_answers_match(
            dn in 1i64..4000, s in 1u64..16, exhausting in any::<bool>(), td in 50i64..2000,
        ) {
            let rule = if exhausting { SubtractRule::AllowExhausting } else { SubtractRule::Strict };
            let cfg = LConfig { rule, ..LConfig::new(Rational::frac(1, td)) };
            l_agrees(&Rational::frac(dn, 500), s, &cfg);
        }
    }
}
