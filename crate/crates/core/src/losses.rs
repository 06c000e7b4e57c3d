//! Losses over one training sample.
//!
//! A sample splits the states generated while solving an instance into the
//! plan states `on_path` (in plan order) and every other generated state
//! `off_path`. Heuristic values are passed as one slice in the order
//! `on_path ++ off_path`; with `f = g + h`:
//!
//! * term 1 is the fraction of (on, off) pairs with `f(on) >= f(off)`,
//! * term 2 is the number of plan-order pairs `(i, j)`, `j <= i`, with
//!   `f(s_i) > f(s_j)`, divided by `n (n - 1)` for `n` plan states.
//!
//! [`lstar_surrogate`] replaces each indicator with the logistic loss
//! `ln(1 + e^-x)` of the signed gap, [`l2_loss`] is the usual squared error
//! against cost-to-go labels, and [`compute_rn_bound`] counts off-path states
//! whose `f` does not exceed some on-path `f`, which bounds the number of
//! off-path expansions.

use crate::{Error, Result, Scalar};

/// Optimal remaining cost of a state, as far as labelling could tell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostToGo<S> {
    Cost(S),
    /// No goal is reachable.
    DeadEnd,
    /// Not labelled (labelling skipped or ran out of budget).
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState<St, S> {
    pub state: St,
    pub g: S,
    pub cost_to_go: CostToGo<S>,
    /// Position in the plan; `Some` exactly for on-path states.
    pub path_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample<St, S> {
    pub instance_ref: String,
    pub on_path: Vec<LabeledState<St, S>>,
    pub off_path: Vec<LabeledState<St, S>>,
}

impl<St, S: Scalar> TrainingSample<St, S> {
    pub fn len(&self) -> usize {
        self.on_path.len() + self.off_path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All states in `on_path ++ off_path` order.
    pub fn states(&self) -> impl Iterator<Item = &LabeledState<St, S>> + '_ {
        self.on_path.iter().chain(&self.off_path)
    }

    pub fn g_values(&self) -> Vec<S> {
        self.states().map(|s| s.g).collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.states().all(|s| !matches!(s.cost_to_go, CostToGo::Unknown))
    }

    /// Checks the structural invariants: a non-empty plan prefix with
    /// consecutive path indices and strictly increasing g, no off-path state
    /// carrying a path index, and no state on both sides.
    pub fn validate(&self) -> Result<()>
    where
        St: Eq + std::hash::Hash,
    {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("sample {:?}: {msg}", self.instance_ref)));
        if self.on_path.is_empty() {
            return bad("empty plan");
        }
        for (i, s) in self.on_path.iter().enumerate() {
            if s.path_index != Some(i) {
                return bad("on-path indices out of order");
            }
            if !s.g.is_finite() || (i > 0 && s.g <= self.on_path[i - 1].g) {
                return bad("on-path g does not strictly increase");
            }
        }
        if self.off_path.iter().any(|s| s.path_index.is_some() || !s.g.is_finite()) {
            return bad("bad off-path record");
        }
        let on: std::collections::HashSet<&St> = self.on_path.iter().map(|s| &s.state).collect();
        if on.len() != self.on_path.len() || self.off_path.iter().any(|s| on.contains(&s.state)) {
            return bad("duplicate state");
        }
        Ok(())
    }

    fn check(&self, h: &[S]) -> Result<()> {
        if h.len() != self.len() {
            return Err(Error::MissingHeuristicValue { expected: self.len(), got: h.len() });
        }
        Ok(())
    }

    fn f_values(&self, h: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        self.check(h)?;
        let n = self.on_path.len();
        let on = self.on_path.iter().zip(&h[..n]).map(|(s, &h)| s.g + h).collect();
        let off = self.off_path.iter().zip(&h[n..]).map(|(s, &h)| s.g + h).collect();
        Ok((on, off))
    }
}

/// Which direction of plan-order monotonicity term 2 enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneDirection {
    /// Penalize `f(s_i) > f(s_j)` for `j <= i`: `f` must not increase along the plan.
    #[default]
    NonIncreasing,
    /// Penalize `f(s_i) > f(s_j)` for `i < j`: `f` must not decrease along the plan.
    NonDecreasing,
}

impl std::str::FromStr for MonotoneDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-increasing" => Ok(MonotoneDirection::NonIncreasing),
            "non-decreasing" => Ok(MonotoneDirection::NonDecreasing),
            other => Err(Error::InvalidArgument(format!("unknown monotone direction {other:?}"))),
        }
    }
}

/// Calls `visit(hi, lo)` for every term-2 pair where `f[hi] > f[lo]` is the violation.
/// Pairs with `hi == lo` are included only when `include_diagonal` is set.
fn for_each_order_pair(n: usize, dir: MonotoneDirection, include_diagonal: bool, mut visit: impl FnMut(usize, usize)) {
    match dir {
        MonotoneDirection::NonIncreasing => {
            for i in 1..n {
                for j in 0..=i {
                    if j < i || include_diagonal {
                        visit(i, j);
                    }
                }
            }
        }
        MonotoneDirection::NonDecreasing => {
            for i in 0..n {
                for j in i + 1..n {
                    visit(i, j);
                }
            }
        }
    }
}

/// Normalized indicator counts `(term1, term2)`. Degenerate terms
/// (`|off_path| = 0`, or a single plan state) are 0.
pub fn lstar_hard<St, S: Scalar>(sample: &TrainingSample<St, S>, h: &[S], dir: MonotoneDirection) -> Result<(S, S)> {
    let (on, off) = sample.f_values(h)?;
    let term1 = if on.is_empty() || off.is_empty() {
        S::zero()
    } else {
        let mut violations = 0usize;
        for &a in &on {
            violations += off.iter().filter(|&&b| a >= b).count();
        }
        S::from_usize_lossy(violations) / S::from_usize_lossy(on.len() * off.len())
    };
    let n = on.len();
    let term2 = if n < 2 {
        S::zero()
    } else {
        let mut violations = 0usize;
        for_each_order_pair(n, dir, true, |i, j| {
            if on[i] > on[j] {
                violations += 1;
            }
        });
        S::from_usize_lossy(violations) / S::from_usize_lossy(n * (n - 1))
    };
    Ok((term1, term2))
}

/// `ln(1 + e^-x)`.
pub fn logistic_loss<S: Scalar>(x: S) -> S {
    (-x).softplus()
}

/// Logistic relaxation of the indicator loss and its gradient with respect
/// to every heuristic value.
///
/// A violation indicator `[a >= b]` (or `[a > b]`) becomes
/// `logistic_loss(b - a - margin)`, with the same normalizations as the hard
/// terms. The `j = i` pairs of term 2 are constant (`ln(1 + e^margin)`) and
/// contribute no gradient; they are left out.
pub fn lstar_surrogate<St, S: Scalar>(
    sample: &TrainingSample<St, S>,
    h: &[S],
    margin: S,
    dir: MonotoneDirection,
) -> Result<(S, Vec<S>)> {
    let (on, off) = sample.f_values(h)?;
    let n_on = on.len();
    let mut grad = vec![S::zero(); h.len()];
    let mut loss = S::zero();
    if n_on > 0 && !off.is_empty() {
        let norm = S::one() / S::from_usize_lossy(n_on * off.len());
        for (i, &a) in on.iter().enumerate() {
            for (k, &b) in off.iter().enumerate() {
                let x = b - a - margin;
                loss = loss + logistic_loss(x) * norm;
                let slope = (-x).sigmoid() * norm;
                grad[i] = grad[i] + slope;
                grad[n_on + k] = grad[n_on + k] - slope;
            }
        }
    }
    if n_on >= 2 {
        let norm = S::one() / S::from_usize_lossy(n_on * (n_on - 1));
        for_each_order_pair(n_on, dir, false, |hi, lo| {
            let x = on[lo] - on[hi] - margin;
            loss = loss + logistic_loss(x) * norm;
            let slope = (-x).sigmoid() * norm;
            grad[hi] = grad[hi] + slope;
            grad[lo] = grad[lo] - slope;
        });
    }
    Ok((loss, grad))
}

/// What to do with states whose label is [`CostToGo::Unknown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnlabeledPolicy {
    Error,
    Skip,
}

/// `Σ (h - y)^2` over every labelled state (on- and off-path), dead ends
/// counting with label `dead_end_value`; the gradient is `2 (h - y)`.
pub fn l2_loss<St, S: Scalar>(
    sample: &TrainingSample<St, S>,
    h: &[S],
    dead_end_value: S,
    policy: UnlabeledPolicy,
) -> Result<(S, Vec<S>)> {
    sample.check(h)?;
    let two = S::one() + S::one();
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); h.len()];
    for (i, (state, &hv)) in sample.states().zip(h).enumerate() {
        let y = match state.cost_to_go {
            CostToGo::Cost(c) => c,
            CostToGo::DeadEnd => dead_end_value,
            CostToGo::Unknown => match policy {
                UnlabeledPolicy::Skip => continue,
                UnlabeledPolicy::Error => {
                    return Err(Error::UnlabeledState { sample: sample.instance_ref.clone(), index: i })
                }
            },
        };
        let r = hv - y;
        loss = loss + r * r;
        grad[i] = two * r;
    }
    Ok((loss, grad))
}

/// `|{s'' in off_path : f(s'') <= max over on_path of f}|`.
pub fn compute_rn_bound<St, S: Scalar>(sample: &TrainingSample<St, S>, h: &[S]) -> Result<usize> {
    let (on, off) = sample.f_values(h)?;
    let Some(max_on) = on.into_iter().reduce(S::max) else {
        return Ok(0);
    };
    Ok(off.into_iter().filter(|&b| b <= max_on).count())
}

/// Diagnostics for one sample under one heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport<S> {
    pub term1_hard: S,
    pub term2_hard: S,
    pub surrogate: S,
    pub l2: Option<S>,
    pub rn_bound: usize,
}

pub fn loss_report<St, S: Scalar>(
    sample: &TrainingSample<St, S>,
    h: &[S],
    margin: S,
    dir: MonotoneDirection,
    dead_end_value: S,
) -> Result<LossReport<S>> {
    let (term1_hard, term2_hard) = lstar_hard(sample, h, dir)?;
    let (surrogate, _) = lstar_surrogate(sample, h, margin, dir)?;
    let l2 = if sample.is_fully_labeled() {
        Some(l2_loss(sample, h, dead_end_value, UnlabeledPolicy::Error)?.0)
    } else {
        None
    };
    Ok(LossReport { term1_hard, term2_hard, surrogate, l2, rn_bound: compute_rn_bound(sample, h)? })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn state(id: usize, g: f64, y: Option<f64>, path_index: Option<usize>) -> LabeledState<usize, f64> {
        LabeledState { state: id, g, cost_to_go: y.map_or(CostToGo::DeadEnd, CostToGo::Cost), path_index }
    }

    fn sample(on_g: &[f64], off_g: &[f64]) -> TrainingSample<usize, f64> {
        TrainingSample {
            instance_ref: "t".into(),
            on_path: on_g.iter().enumerate().map(|(i, &g)| state(i, g, Some(0.0), Some(i))).collect(),
            off_path: off_g.iter().enumerate().map(|(i, &g)| state(100 + i, g, Some(0.0), None)).collect(),
        }
    }

    fn random_sample(rng: &mut ChaCha8Rng, n_on: usize, n_off: usize) -> (TrainingSample<usize, f64>, Vec<f64>) {
        let on: Vec<f64> = (0..n_on).map(|i| i as f64).collect();
        let off: Vec<f64> = (0..n_off).map(|_| rng.gen_range(1..6) as f64).collect();
        // Integer-valued h makes ties common.
        let h = (0..n_on + n_off).map(|_| rng.gen_range(0..8) as f64).collect();
        (sample(&on, &off), h)
    }

    /// Independent enumerator: literal double sums with 1-based indices.
    fn brute_force_hard(s: &TrainingSample<usize, f64>, h: &[f64], dir: MonotoneDirection) -> (f64, f64) {
        let f: Vec<f64> = s.states().zip(h).map(|(st, hv)| st.g + hv).collect();
        let no = s.on_path.len();
        let nn = s.off_path.len();
        let mut t1 = 0.0;
        for a in 0..no {
            for b in 0..nn {
                if f[a] >= f[no + b] {
                    t1 += 1.0;
                }
            }
        }
        let t1 = if no * nn == 0 { 0.0 } else { t1 / (no * nn) as f64 };
        let mut t2 = 0.0;
        for i in 1..=no {
            for j in 1..=no {
                let counted = match dir {
                    MonotoneDirection::NonIncreasing => i >= 2 && j <= i,
                    MonotoneDirection::NonDecreasing => i < j,
                };
                if counted && f[i - 1] > f[j - 1] {
                    t2 += 1.0;
                }
            }
        }
        let t2 = if no < 2 { 0.0 } else { t2 / (no * (no - 1)) as f64 };
        (t1, t2)
    }

    fn brute_force_rn(s: &TrainingSample<usize, f64>, h: &[f64]) -> usize {
        let no = s.on_path.len();
        let f = |i: usize| s.states().nth(i).unwrap().g + h[i];
        (0..s.off_path.len()).filter(|&k| (0..no).any(|i| f(i) >= f(no + k))).count()
    }

    #[test]
    fn separated_and_flat_is_zero() {
        let s = sample(&[0.0, 1.0, 2.0], &[1.0, 2.0]);
        let h = [2.0, 1.0, 0.0, 5.0, 5.0];
        for dir in [MonotoneDirection::NonIncreasing, MonotoneDirection::NonDecreasing] {
            assert_eq!(lstar_hard(&s, &h, dir).unwrap(), (0.0, 0.0));
        }
        assert_eq!(compute_rn_bound(&s, &h).unwrap(), 0);
    }

    #[test]
    fn equal_f_counts_as_violation() {
        let s = sample(&[0.0], &[1.0]);
        assert_eq!(lstar_hard(&s, &[2.0, 1.0], MonotoneDirection::NonIncreasing).unwrap(), (1.0, 0.0));
        assert_eq!(compute_rn_bound(&s, &[2.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn degenerate_denominators() {
        let s = sample(&[0.0], &[]);
        assert_eq!(lstar_hard(&s, &[3.0], MonotoneDirection::NonIncreasing).unwrap(), (0.0, 0.0));
        let (loss, grad) = lstar_surrogate(&s, &[3.0], 0.0, MonotoneDirection::NonIncreasing).unwrap();
        assert_eq!((loss, grad), (0.0, vec![0.0]));
    }

    #[test]
    fn missing_values() {
        let s = sample(&[0.0, 1.0], &[2.0]);
        assert!(matches!(
            lstar_hard(&s, &[1.0, 2.0], MonotoneDirection::NonIncreasing),
            Err(Error::MissingHeuristicValue { expected: 3, got: 2 })
        ));
        assert!(compute_rn_bound(&s, &[]).is_err());
        assert!(lstar_surrogate(&s, &[1.0], 0.0, MonotoneDirection::NonIncreasing).is_err());
    }

    #[test]
    fn direction_matters() {
        // f increasing along the plan: 1, 2, 3.
        let s = sample(&[0.0, 1.0, 2.0], &[]);
        let h = [1.0, 1.0, 1.0];
        let (_, non_increasing) = lstar_hard(&s, &h, MonotoneDirection::NonIncreasing).unwrap();
        let (_, non_decreasing) = lstar_hard(&s, &h, MonotoneDirection::NonDecreasing).unwrap();
        assert_eq!(non_increasing, 3.0 / 6.0);
        assert_eq!(non_decreasing, 0.0);
    }

    #[test]
    fn single_pair_at_zero_gap_is_ln2() {
        let s = sample(&[0.0], &[0.0]);
        let (loss, _) = lstar_surrogate(&s, &[1.0, 1.0], 0.0, MonotoneDirection::NonIncreasing).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((logistic_loss(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn wide_margins_vanish() {
        // Every off-path f exceeds every on-path f by more than 20, f constant along the path.
        let s = sample(&[0.0, 1.0, 2.0], &[30.0, 40.0]);
        let h = [2.0, 1.0, 0.0, 0.0, 0.0];
        let (loss, _) = lstar_surrogate(&s, &h, 0.0, MonotoneDirection::NonIncreasing).unwrap();
        assert_eq!(lstar_hard(&s, &h, MonotoneDirection::NonIncreasing).unwrap(), (0.0, 0.0));
        // Term 2 pairs sit at gap 0 here, so only term 1 is tiny.
        let (t1_only, _) =
            lstar_surrogate(&sample(&[0.0], &[30.0, 40.0]), &[2.0, 0.0, 0.0], 0.0, MonotoneDirection::NonIncreasing)
                .unwrap();
        assert!(t1_only <= 1e-8);
        assert!(loss > t1_only);
    }

    #[test]
    fn l2_basics() {
        let mut s = sample(&[0.0], &[]);
        s.on_path[0].cost_to_go = CostToGo::Cost(1.0);
        let (loss, grad) = l2_loss(&s, &[3.0], 100.0, UnlabeledPolicy::Error).unwrap();
        assert_eq!((loss, grad), (4.0, vec![4.0]));
        let (loss, grad) = l2_loss(&s, &[1.0], 100.0, UnlabeledPolicy::Error).unwrap();
        assert_eq!((loss, grad), (0.0, vec![0.0]));

        let mut s = sample(&[0.0], &[1.0, 1.0]);
        s.off_path[0].cost_to_go = CostToGo::DeadEnd;
        s.off_path[1].cost_to_go = CostToGo::Unknown;
        assert!(matches!(
            l2_loss(&s, &[0.0, 0.0, 0.0], 10.0, UnlabeledPolicy::Error),
            Err(Error::UnlabeledState { index: 2, .. })
        ));
        let (loss, grad) = l2_loss(&s, &[0.0, 4.0, 7.0], 10.0, UnlabeledPolicy::Skip).unwrap();
        assert_eq!(loss, 36.0);
        assert_eq!(grad, vec![0.0, -12.0, 0.0]);
    }

    #[test]
    fn hard_terms_match_enumerator() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..500 {
            let n_on = rng.gen_range(1..=6);
            let (s, h) = random_sample(&mut rng, n_on, 10 - n_on);
            for dir in [MonotoneDirection::NonIncreasing, MonotoneDirection::NonDecreasing] {
                assert_eq!(lstar_hard(&s, &h, dir).unwrap(), brute_force_hard(&s, &h, dir));
            }
            assert_eq!(compute_rn_bound(&s, &h).unwrap(), brute_force_rn(&s, &h));
        }
    }

    fn fd_check(loss: impl Fn(&[f64]) -> (f64, Vec<f64>), h: &[f64]) -> f64 {
        let (_, analytic) = loss(h);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..h.len() {
            let mut hp = h.to_vec();
            hp[i] += eps;
            let mut hm = h.to_vec();
            hm[i] -= eps;
            let fd = (loss(&hp).0 - loss(&hm).0) / (2.0 * eps);
            let err = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-3);
            worst = worst.max(err);
        }
        worst
    }

    #[test]
    fn surrogate_and_l2_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (mut s, _) = random_sample(&mut rng, 4, 6);
            for st in s.on_path.iter_mut().chain(s.off_path.iter_mut()) {
                st.cost_to_go = CostToGo::Cost(rng.gen_range(0.0..10.0));
            }
            let h: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..6.0)).collect();
            let margin = rng.gen_range(0.0..2.0);
            for dir in [MonotoneDirection::NonIncreasing, MonotoneDirection::NonDecreasing] {
                let err = fd_check(|h| lstar_surrogate(&s, h, margin, dir).unwrap(), &h);
                assert!(err <= 1e-6, "surrogate relative error {err}");
            }
            let err = fd_check(|h| l2_loss(&s, h, 50.0, UnlabeledPolicy::Error).unwrap(), &h);
            assert!(err <= 1e-6, "l2 relative error {err}");
        }
    }

    proptest! {
        #[test]
        fn shift_invariance(seed in 0u64..10_000, c in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (s, h) = random_sample(&mut rng, 4, 5);
            let shifted: Vec<f64> = h.iter().map(|v| v + c.round()).collect();
            for dir in [MonotoneDirection::NonIncreasing, MonotoneDirection::NonDecreasing] {
                prop_assert_eq!(lstar_hard(&s, &h, dir).unwrap(), lstar_hard(&s, &shifted, dir).unwrap());
            }
        }

        #[test]
        fn zero_hard_loss_means_empty_rn(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (s, h) = random_sample(&mut rng, 3, 5);
            if lstar_hard(&s, &h, MonotoneDirection::NonIncreasing).unwrap().0 == 0.0 {
                prop_assert_eq!(compute_rn_bound(&s, &h).unwrap(), 0);
            }
        }

        #[test]
        fn surrogate_pair_is_convex_and_decreasing(x in -30.0f64..30.0, d in 0.01f64..5.0) {
            let l = logistic_loss::<f64>;
            prop_assert!(l(x + d) <= l(x));
            prop_assert!(l(x - d) + l(x + d) >= 2.0 * l(x) - 1e-12);
            if x > 20.0 {
                prop_assert!(l(x) <= 1e-8);
            }
        }
    }
}
