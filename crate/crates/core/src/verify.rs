//! Executable checks of the two-layer lemmas and theorems on generated
//! instances.
//!
//! Each check returns a [`VerificationReport`]: a trial count, a pass count,
//! a list of numeric comparisons and a verdict. Trials run in parallel with
//! seeds derived from the master seed and the trial index, so reports do
//! not depend on the number of worker threads.

use std::fmt::{self, Write as _};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{community_stats, Edge, Graph};
use crate::louvain::{self, LouvainConfig};
use crate::metrics::nmi;
use crate::modularity::partition_modularity;
use crate::partition::Partition;
use crate::rng::{self, Purpose};
use crate::sbm::{expected_stats, generate, placement_expectation, GroundTruth, SbmParams};
use crate::weaken::{layer_keep_fraction, weaken, ReduceFactorRule, WeakenMethod};

/// The edges of a graph split by which planted layers they are internal to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeClassification {
    /// Internal to layer 1 only.
    pub s1: Vec<Edge>,
    /// Internal to layer 2 only.
    pub s2: Vec<Edge>,
    /// Internal to both layers.
    pub s12: Vec<Edge>,
    /// Internal to neither.
    pub cross: Vec<Edge>,
}

fn weight_of(edges: &[Edge]) -> f64 {
    edges.iter().map(|e| e.weight).sum()
}

impl EdgeClassification {
    pub fn weights(&self) -> [f64; 4] {
        [
            weight_of(&self.s1),
            weight_of(&self.s2),
            weight_of(&self.s12),
            weight_of(&self.cross),
        ]
    }
}

pub fn classify_edges(g: &Graph, truth: &GroundTruth) -> Result<EdgeClassification> {
    let (l1, l2) = truth.two_layers()?;
    l1.check_node_count(g.node_count())?;
    l2.check_node_count(g.node_count())?;
    let mut out = EdgeClassification::default();
    for &e in g.edges() {
        let set = match (l1.same_community(e.u, e.v), l2.same_community(e.u, e.v)) {
            (true, true) => &mut out.s12,
            (true, false) => &mut out.s1,
            (false, true) => &mut out.s2,
            (false, false) => &mut out.cross,
        };
        set.push(e);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
}

impl Claim {
    pub fn as_str(self) -> &'static str {
        match self {
            Claim::Lemma1 => "lemma1",
            Claim::Lemma2 => "lemma2",
            Claim::Lemma3 => "lemma3",
            Claim::Theorem1 => "thm1",
            Claim::Theorem2 => "thm2",
            Claim::Theorem3 => "thm3",
            Claim::Theorem4 => "thm4",
        }
    }

    /// The weakening theorem about `method`.
    pub fn for_method(method: WeakenMethod) -> Claim {
        match method {
            WeakenMethod::RemoveEdge => Claim::Theorem1,
            WeakenMethod::ReduceEdge => Claim::Theorem3,
            WeakenMethod::ReduceWeight => Claim::Theorem4,
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One numeric comparison. Non-gating checks are reported but do not
/// affect the verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub ok: bool,
    pub gating: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            observed,
            expected,
            tolerance,
            ok: (observed - expected).abs() <= tolerance,
            gating: true,
        }
    }

    pub fn informational(self) -> Self {
        Check {
            gating: false,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The claim's precondition does not hold on this input.
    HypothesisUnmet,
    /// The weakening was the identity, so there is nothing to test.
    Degenerate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::HypothesisUnmet => "hypothesis-unmet",
            Verdict::Degenerate => "degenerate",
        }
    }

    /// Only `Fail` counts as a failed verification.
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: Claim,
    pub seed: Option<u64>,
    pub trials: usize,
    pub passes: usize,
    /// Trials skipped because the weakening was the identity.
    pub degenerate: usize,
    pub required_rate: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl VerificationReport {
    fn new(claim: Claim, seed: Option<u64>, required_rate: f64) -> Self {
        VerificationReport {
            claim,
            seed,
            trials: 0,
            passes: 0,
            degenerate: 0,
            required_rate,
            checks: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn pass_rate(&self) -> f64 {
        let counted = self.trials - self.degenerate;
        if counted == 0 {
            return 1.0;
        }
        self.passes as f64 / counted as f64
    }

    fn settle(mut self) -> Self {
        self.verdict = if self.trials > 0 && self.degenerate == self.trials {
            Verdict::Degenerate
        } else if self.pass_rate() >= self.required_rate
            && self.checks.iter().all(|c| c.ok || !c.gating)
        {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    /// Plain `key: value` text, one check per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "claim: {}", self.claim);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "seed: {seed}");
            }
            None => s.push_str("seed: none\n"),
        }
        let _ = writeln!(s, "trials: {}", self.trials);
        let _ = writeln!(s, "passes: {}", self.passes);
        if self.degenerate > 0 {
            let _ = writeln!(s, "degenerate: {}", self.degenerate);
        }
        let _ = writeln!(s, "required_rate: {:.3}", self.required_rate);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check {}: observed={:.6} expected={:.6} tolerance={:.6} {}{}",
                c.name,
                c.observed,
                c.expected,
                c.tolerance,
                if c.ok { "ok" } else { "FAILED" },
                if c.gating { "" } else { " (informational)" }
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s, "verdict: {}", self.verdict.as_str());
        s
    }
}

fn trial_seeds(seed: u64, trials: usize) -> impl IndexedParallelIterator<Item = u64> {
    (0..trials)
        .into_par_iter()
        .map(move |t| rng::derive(seed, Purpose::Trial, t as u64))
}

fn require_two_layers(params: &SbmParams) -> Result<()> {
    params.validate()?;
    if params.layers.len() != 2 {
        return Err(Error::LayerCount(params.layers.len()));
    }
    Ok(())
}

fn identity_tolerance(g: &Graph, expected: f64) -> f64 {
    if g.edges().iter().all(|e| e.weight.fract() == 0.0) {
        0.0
    } else {
        1e-9 * expected.abs().max(1.0)
    }
}

/// Checks the four counting identities between per-community edge sums and
/// the edge classes:
/// `sum e_in(layer 1) = |S1| + |S12|`, `sum e_out(layer 1) = 2 |S2|`, and
/// the same with the layers exchanged. They are exact on unit-weight
/// graphs; when some edge is internal to neither layer the second pair no
/// longer applies and the hypothesis is reported unmet.
pub fn check_lemma3(g: &Graph, truth: &GroundTruth) -> Result<VerificationReport> {
    let (l1, l2) = truth.two_layers()?;
    let classes = classify_edges(g, truth)?;
    let [s1, s2, s12, cross] = classes.weights();
    let mut report = VerificationReport::new(Claim::Lemma3, None, 1.0);
    report.trials = 1;

    let sums = |p: &Partition| -> Result<(f64, f64)> {
        let stats = community_stats(g, p)?;
        Ok((
            stats.iter().map(|s| s.internal_weight).sum(),
            stats.iter().map(|s| s.outgoing_weight).sum(),
        ))
    };
    let (in1, out1) = sums(l1)?;
    let (in2, out2) = sums(l2)?;
    for (name, observed, expected) in [
        ("layer1 internal = |S1|+|S12|", in1, s1 + s12),
        ("layer1 outgoing = 2|S2|", out1, 2.0 * s2),
        ("layer2 internal = |S2|+|S12|", in2, s2 + s12),
        ("layer2 outgoing = 2|S1|", out2, 2.0 * s1),
    ] {
        let tol = identity_tolerance(g, expected);
        report.checks.push(Check::within(name, observed, expected, tol));
    }
    report.checks.push(Check::within("cross edges", cross, 0.0, 0.0).informational());

    if cross > 0.0 {
        report.notes.push(format!(
            "{} edges are internal to neither layer",
            classes.cross.len()
        ));
        report.verdict = Verdict::HypothesisUnmet;
        return Ok(report);
    }
    report.passes = usize::from(report.checks.iter().all(|c| c.ok || !c.gating));
    Ok(report.settle())
}

/// [`check_lemma3`] on `trials` generated instances.
pub fn verify_lemma3(params: &SbmParams, trials: usize, seed: u64) -> Result<VerificationReport> {
    require_two_layers(params)?;
    let outcomes = trial_seeds(seed, trials)
        .map(|s| {
            let (g, truth) = generate(&params.with_seed(s))?;
            check_lemma3(&g, &truth)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = VerificationReport::new(Claim::Lemma3, Some(seed), 1.0);
    report.trials = trials;
    report.passes = outcomes.iter().filter(|r| r.verdict == Verdict::Pass).count();
    for i in 0..4 {
        let worst = outcomes
            .iter()
            .map(|r| (r.checks[i].observed - r.checks[i].expected).abs())
            .fold(0.0, f64::max);
        let name = outcomes.first().map_or("", |r| r.checks[i].name.as_str());
        report
            .checks
            .push(Check::within(format!("max error {name}"), worst, 0.0, 0.0));
    }
    Ok(report.settle())
}

struct MeanSe {
    mean: f64,
    se: f64,
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> MeanSe {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    MeanSe {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Per-trial averages over the communities of each layer.
#[derive(Clone, Copy)]
struct LayerSample {
    internal: f64,
    outgoing: f64,
    modularity: f64,
    /// Equal-degree modularity of the realized totals minus `modularity`;
    /// equals `k` times the variance of the communities' degree shares.
    dispersion: f64,
}

fn layer_sample(g: &Graph, p: &Partition) -> Result<LayerSample> {
    let stats = community_stats(g, p)?;
    let k = stats.len() as f64;
    let internal = stats.iter().map(|s| s.internal_weight).sum::<f64>() / k;
    let outgoing = stats.iter().map(|s| s.outgoing_weight).sum::<f64>() / k;
    let modularity = partition_modularity(g, p)?;
    Ok(LayerSample {
        internal,
        outgoing,
        modularity,
        dispersion: balanced_modularity(internal, outgoing, stats.len()) - modularity,
    })
}

/// Compares Monte Carlo means of per-community internal and outgoing edge
/// counts and of layer modularity with their expectations.
///
/// The gating reference is [`placement_expectation`], which is exact for
/// the chosen placement: each mean must lie within 4 standard errors, and
/// edge-count means additionally within 1% when `n >= 600`. The reference
/// modularity assumes equal community degrees, so its tolerance also
/// allows the mean measured degree dispersion. The
/// equal-intersection closed forms of [`expected_stats`] are reported
/// alongside, with modularity held to 0.01.
pub fn verify_lemma1(params: &SbmParams, trials: usize, seed: u64) -> Result<VerificationReport> {
    require_two_layers(params)?;
    if trials < 30 {
        return Err(Error::InvalidParams(format!(
            "lemma1 needs at least 30 trials, got {trials}"
        )));
    }
    let samples = trial_seeds(seed, trials)
        .map(|s| {
            let (g, truth) = generate(&params.with_seed(s))?;
            let (l1, l2) = truth.two_layers()?;
            Ok([layer_sample(&g, l1)?, layer_sample(&g, l2)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = placement_expectation(params)?;
    let closed = expected_stats(params)?;

    let mut report = VerificationReport::new(Claim::Lemma1, Some(seed), 1.0);
    report.trials = trials;
    report.passes = trials;
    let relative = params.n >= 600;
    for layer in 0..2 {
        let name = |what: &str| format!("layer{} mean {what}", layer + 1);
        let count_checks = [
            ("internal", exact[layer].internal, closed[layer].internal),
            ("outgoing", exact[layer].outgoing, closed[layer].outgoing),
        ];
        for (i, (what, expected, closed_value)) in count_checks.into_iter().enumerate() {
            let est = mean_se(samples.iter().map(|s| {
                if i == 0 {
                    s[layer].internal
                } else {
                    s[layer].outgoing
                }
            }));
            let mut tol = 4.0 * est.se;
            if relative {
                tol = tol.min(0.01 * expected.abs());
            }
            report.checks.push(Check::within(name(what), est.mean, expected, tol));
            report.checks.push(
                Check::within(
                    format!("{} vs closed form", name(what)),
                    est.mean,
                    closed_value,
                    0.01 * closed_value.abs(),
                )
                .informational(),
            );
        }
        let q = mean_se(samples.iter().map(|s| s[layer].modularity));
        let dispersion = samples.iter().map(|s| s[layer].dispersion).sum::<f64>() / trials as f64;
        report.checks.push(Check::within(
            name("modularity"),
            q.mean,
            exact[layer].modularity,
            4.0 * q.se + dispersion,
        ));
        report.checks.push(
            Check::within(
                format!("{} vs closed form", name("modularity")),
                q.mean,
                closed[layer].modularity,
                0.01,
            )
            .informational(),
        );
    }
    Ok(report.settle())
}

/// The modularity of a layer whose communities all have equal degree:
/// `1 - 1/n_l - e_out / (2 e_in + e_out)`.
pub fn balanced_modularity(internal: f64, outgoing: f64, num_communities: usize) -> f64 {
    1.0 - 1.0 / num_communities as f64 - outgoing / (2.0 * internal + outgoing)
}

/// Whether "outgoing edges shrink by a larger fraction than internal edges"
/// implies a modularity increase, for one before/after tuple.
pub fn verify_lemma2(
    internal: f64,
    outgoing: f64,
    internal_after: f64,
    outgoing_after: f64,
    num_communities: usize,
) -> Result<bool> {
    if !(internal > 0.0 && outgoing > 0.0 && internal_after > 0.0 && outgoing_after >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "lemma2 needs positive counts (outgoing_after may be 0), got \
             ({internal}, {outgoing}, {internal_after}, {outgoing_after})"
        )));
    }
    if num_communities == 0 {
        return Err(Error::InvalidParams("num_communities must be positive".into()));
    }
    let premise = outgoing_after / outgoing < internal_after / internal;
    let before = balanced_modularity(internal, outgoing, num_communities);
    let after = balanced_modularity(internal_after, outgoing_after, num_communities);
    Ok(!premise || after > before)
}

/// [`verify_lemma2`] on `samples` random integer tuples with counts up to
/// 10 000, where the after-counts never exceed the before-counts.
pub fn verify_lemma2_sweep(samples: usize, seed: u64) -> Result<VerificationReport> {
    let mut rng = rng::stream(seed, Purpose::Trial, 0);
    let mut report = VerificationReport::new(Claim::Lemma2, Some(seed), 1.0);
    let mut premise_held = 0;
    for _ in 0..samples {
        let internal = rng.random_range(1..=10_000u32);
        let outgoing = rng.random_range(1..=10_000u32);
        let internal_after = rng.random_range(1..=internal);
        let outgoing_after = rng.random_range(0..=outgoing);
        let k = rng.random_range(2..=50usize);
        let (a, b, c, d) = (
            internal as f64,
            outgoing as f64,
            internal_after as f64,
            outgoing_after as f64,
        );
        if d / b < c / a {
            premise_held += 1;
        }
        report.trials += 1;
        report.passes += usize::from(verify_lemma2(a, b, c, d, k)?);
    }
    report
        .notes
        .push(format!("premise held in {premise_held} of {samples} tuples"));
    Ok(report.settle())
}

#[derive(Clone, Copy, Debug)]
struct TheoremTrial {
    increased: [bool; 2],
    degenerate: bool,
    /// Residual outgoing weight of the measured layer.
    leftover_outgoing: [f64; 2],
    /// `|Q' - (1 - sum (e_in / e)^2)|` for the measured layer.
    closed_form_gap: [f64; 2],
}

fn weaken_and_measure(
    g: &Graph,
    weakened: &Partition,
    measured: &Partition,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    seed: u64,
) -> Result<(bool, bool, f64, f64)> {
    let degenerate = method != WeakenMethod::RemoveEdge
        && layer_keep_fraction(g, weakened, rule)? >= 1.0;
    let before = partition_modularity(g, measured)?;
    let residual = weaken(g, weakened, method, rule, seed)?;
    let after = partition_modularity(&residual, measured)?;
    let stats = community_stats(&residual, measured)?;
    let outgoing: f64 = stats.iter().map(|s| s.outgoing_weight).sum();
    let total = residual.total_weight();
    let concentrated = 1.0 - stats.iter().map(|s| (s.internal_weight / total).powi(2)).sum::<f64>();
    Ok((after > before, degenerate, outgoing, (after - concentrated).abs()))
}

fn theorem_trial(
    params: &SbmParams,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    seed: u64,
    estimates: Option<&LouvainConfig>,
) -> Result<TheoremTrial> {
    let (g, truth) = generate(&params.with_seed(seed))?;
    let (l1, l2) = truth.two_layers()?;
    let mut trial = TheoremTrial {
        increased: [false; 2],
        degenerate: false,
        leftover_outgoing: [0.0; 2],
        closed_form_gap: [0.0; 2],
    };
    let pairs: Vec<(Partition, &Partition)> = match estimates {
        None => vec![(l1.clone(), l2), (l2.clone(), l1)],
        Some(cfg) => {
            // weaken the detected layer, measure whichever planted layer it
            // resembles less
            let found = louvain::detect(&g, cfg)?;
            let other = if nmi(&found, l1)? >= nmi(&found, l2)? { l2 } else { l1 };
            vec![(found, other)]
        }
    };
    for (side, (weakened, measured)) in pairs.iter().enumerate() {
        let weaken_seed = rng::derive(seed, Purpose::ReduceEdge, side as u64 + 1);
        let (up, degenerate, outgoing, gap) =
            weaken_and_measure(&g, weakened, measured, method, rule, weaken_seed)?;
        trial.increased[side] = up;
        trial.degenerate |= degenerate;
        trial.leftover_outgoing[side] = outgoing;
        trial.closed_form_gap[side] = gap;
    }
    if estimates.is_some() {
        trial.increased[1] = trial.increased[0];
    }
    Ok(trial)
}

fn required_rate(method: WeakenMethod) -> f64 {
    match method {
        WeakenMethod::ReduceEdge => 0.95,
        WeakenMethod::RemoveEdge | WeakenMethod::ReduceWeight => 1.0,
    }
}

/// Weakens planted layer 1 with `method` and checks that the modularity of
/// planted layer 2 strictly increases; then the same with the layers
/// exchanged. A trial passes when both directions increase.
///
/// After `RemoveEdge` the measured layer must have no outgoing weight left,
/// and its modularity must equal `1 - sum_i (e_in_i / e)^2`.
pub fn verify_theorem(
    params: &SbmParams,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    theorem_report(params, method, rule, trials, seed, None)
}

/// Like [`verify_theorem`], but the weakened layer is the partition the
/// base detector finds on the instance, and the measured layer is the
/// planted layer it resembles less.
pub fn verify_theorem_with_estimates(
    params: &SbmParams,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    trials: usize,
    seed: u64,
    base: &LouvainConfig,
) -> Result<VerificationReport> {
    theorem_report(params, method, rule, trials, seed, Some(base))
}

fn theorem_report(
    params: &SbmParams,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    trials: usize,
    seed: u64,
    estimates: Option<&LouvainConfig>,
) -> Result<VerificationReport> {
    require_two_layers(params)?;
    if trials < 20 {
        return Err(Error::InvalidParams(format!(
            "theorem checks need at least 20 trials, got {trials}"
        )));
    }
    let outcomes = trial_seeds(seed, trials)
        .map(|s| theorem_trial(params, method, rule, s, estimates))
        .collect::<Result<Vec<_>>>()?;

    let mut report =
        VerificationReport::new(Claim::for_method(method), Some(seed), required_rate(method));
    report.trials = trials;
    report.degenerate = outcomes.iter().filter(|t| t.degenerate).count();
    report.passes = outcomes
        .iter()
        .filter(|t| !t.degenerate && t.increased[0] && t.increased[1])
        .count();
    let sides = if estimates.is_some() { 1 } else { 2 };
    for side in 0..sides {
        let ups = outcomes.iter().filter(|t| t.increased[side]).count();
        let label = match (estimates.is_some(), side) {
            (true, _) => "other layer".to_string(),
            (false, 0) => "layer2 after weakening layer1".to_string(),
            (false, _) => "layer1 after weakening layer2".to_string(),
        };
        report.notes.push(format!("{label}: {ups}/{trials} increases"));
        if method == WeakenMethod::RemoveEdge {
            let leftover = outcomes
                .iter()
                .map(|t| t.leftover_outgoing[side])
                .fold(0.0, f64::max);
            let gap = outcomes
                .iter()
                .map(|t| t.closed_form_gap[side])
                .fold(0.0, f64::max);
            report.checks.push(Check::within(
                format!("{label} max outgoing"),
                leftover,
                0.0,
                0.0,
            ));
            report.checks.push(Check::within(
                format!("{label} max |Q - (1 - sum share^2)|"),
                gap,
                0.0,
                1e-9,
            ));
        }
    }
    if estimates.is_some() {
        report
            .notes
            .push("weakened layer is the base detector's partition".into());
    }
    Ok(report.settle())
}

/// Restricted growth strings of length `n` with exactly `k` blocks, i.e.
/// every partition of `n` nodes into `k` nonempty communities once.
fn for_each_partition(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn go(labels: &mut Vec<usize>, n: usize, k: usize, used: usize, f: &mut dyn FnMut(&[usize])) {
        let i = labels.len();
        if i == n {
            if used == k {
                f(labels);
            }
            return;
        }
        if n - i < k - used {
            return;
        }
        for c in 0..=used.min(k - 1) {
            labels.push(c);
            go(labels, n, k, used.max(c + 1), f);
            labels.pop();
        }
    }
    if k == 0 || k > n {
        return;
    }
    go(&mut Vec::with_capacity(n), n, k, 0, &mut f);
}

/// Modularity for dense labels, without building a `Partition`.
fn labels_modularity(edges: &[Edge], degree: &[f64], total: f64, labels: &[usize], k: usize) -> f64 {
    let mut internal = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for e in edges {
        if labels[e.u] == labels[e.v] {
            internal[labels[e.u]] += e.weight;
        }
    }
    for (v, &d) in degree.iter().enumerate() {
        tot[labels[v]] += d;
    }
    internal
        .iter()
        .zip(&tot)
        .map(|(i, t)| i / total - (t / (2.0 * total)).powi(2))
        .sum()
}

/// Largest `n` for which [`verify_theorem2`] enumerates every partition.
pub const EXHAUSTIVE_MAX_NODES: usize = 12;

const TIE_TOLERANCE: f64 = 1e-12;

/// After `RemoveEdge` on planted layer 1, checks that planted layer 2 has
/// the highest modularity among partitions into the same number of
/// nonempty communities.
///
/// The precondition is that no layer-2 community holds more than half of
/// the residual edge weight. For `n <= 12` every candidate partition is
/// enumerated and `samples` is ignored; otherwise `samples` candidates are
/// drawn, alternating between random perturbations of layer 2 and uniform
/// random labelings.
pub fn verify_theorem2(
    g: &Graph,
    truth: &GroundTruth,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let (l1, l2) = truth.two_layers()?;
    let residual = crate::weaken::remove_edge(g, l1)?;
    l2.check_node_count(g.node_count())?;
    let mut report = VerificationReport::new(Claim::Theorem2, Some(seed), 1.0);
    let total = residual.total_weight();
    if total <= 0.0 {
        report.notes.push("no edges left after removing layer 1".into());
        report.verdict = Verdict::HypothesisUnmet;
        return Ok(report);
    }
    let stats = community_stats(&residual, l2)?;
    let heaviest = stats.iter().map(|s| s.internal_weight).fold(0.0, f64::max);
    report.checks.push(
        Check {
            name: "max layer2 internal share".into(),
            observed: heaviest / total,
            expected: 0.5,
            tolerance: 0.0,
            ok: heaviest <= total / 2.0,
            gating: false,
        },
    );
    if heaviest > total / 2.0 {
        report
            .notes
            .push("a layer-2 community holds more than half of the edges".into());
        report.verdict = Verdict::HypothesisUnmet;
        return Ok(report);
    }

    let n = residual.node_count();
    let k = l2.community_count();
    let degree = residual.degrees();
    let edges = residual.edges();
    let reference = partition_modularity(&residual, l2)?;
    let mut best = f64::NEG_INFINITY;
    let mut exceeding = 0usize;

    if n <= EXHAUSTIVE_MAX_NODES {
        let mut candidates = 0usize;
        for_each_partition(n, k, |labels| {
            candidates += 1;
            let q = labels_modularity(edges, &degree, total, labels, k);
            best = best.max(q);
            if q > reference + TIE_TOLERANCE {
                exceeding += 1;
            }
        });
        report.trials = candidates;
        report.notes.push(format!("enumerated all {candidates} partitions"));
    } else {
        let scores: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(seed, Purpose::Trial, i as u64);
                let labels = loop {
                    let labels = if i % 2 == 0 {
                        let mut labels = l2.labels().to_vec();
                        let mutations = rng.random_range(1..=n);
                        for _ in 0..mutations {
                            let v = rng.random_range(0..n);
                            labels[v] = rng.random_range(0..k);
                        }
                        labels
                    } else {
                        (0..n).map(|_| rng.random_range(0..k)).collect()
                    };
                    let mut seen = vec![false; k];
                    labels.iter().for_each(|&c| seen[c] = true);
                    if seen.iter().all(|&s| s) {
                        break labels;
                    }
                };
                labels_modularity(edges, &degree, total, &labels, k)
            })
            .collect();
        for q in scores {
            best = best.max(q);
            if q > reference + TIE_TOLERANCE {
                exceeding += 1;
            }
        }
        report.trials = samples;
        report.notes.push(format!("sampled {samples} partitions"));
    }
    report.passes = report.trials - exceeding;
    report.checks.push(Check {
        name: "best candidate minus layer2".into(),
        observed: best - reference,
        expected: 0.0,
        tolerance: TIE_TOLERANCE,
        ok: best <= reference + TIE_TOLERANCE,
        gating: true,
    });
    Ok(report.settle())
}
