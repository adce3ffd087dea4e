//! Sequential learning from a stream of independent studies.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::belief::{Belief, Evidence};
use crate::engine::RocFunction;
use crate::models::{
    simulate_study, simulate_twosample_study, FamilyKind, ModelFamily, OneSampleNormal,
    StudyRecord, TeaTastingBinomial, TeaTastingFisher, TwoSampleT,
};
use crate::rng::poisson_sample;
use crate::{check_open_unit, quad, Error, Hypothesis, Result, RngStream};

/// How a study's result reaches the updater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// The full-data likelihood ratio.
    X,
    /// The decision of the MP rule.
    D,
    /// The realized P-value.
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPolicy {
    Fixed(Channel),
    RoundRobin(Vec<Channel>),
    /// Independent draw per study with probabilities proportional to the
    /// weights.
    Random { x: f64, d: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosPolicy {
    Fixed(f64),
    /// Per-study levels, cycled when the run outlasts the list.
    Sequence(Vec<f64>),
}

fn default_offset() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizePolicy {
    Fixed(usize),
    /// `n_m = Poisson(lambda) + offset`.
    Poisson {
        lambda: f64,
        #[serde(default = "default_offset")]
        offset: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequentialConfig {
    pub epsilon: f64,
    pub kappa0_init: f64,
    pub channel: ChannelPolicy,
    pub los: LosPolicy,
    pub sample_size: SampleSizePolicy,
    pub max_studies: usize,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            kappa0_init: 0.5,
            channel: ChannelPolicy::Fixed(Channel::P),
            los: LosPolicy::Fixed(0.05),
            sample_size: SampleSizePolicy::Fixed(10),
            max_studies: 1000,
        }
    }
}

impl SequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::domain(format!("epsilon must lie in (0, 0.5), got {}", self.epsilon)));
        }
        check_open_unit("kappa0_init", self.kappa0_init)?;
        match &self.channel {
            ChannelPolicy::Fixed(_) => {}
            ChannelPolicy::RoundRobin(v) if v.is_empty() => {
                return Err(Error::domain("round-robin channel list is empty"));
            }
            ChannelPolicy::RoundRobin(_) => {}
            ChannelPolicy::Random { x, d, p } => {
                let w = [*x, *d, *p];
                if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::domain("channel weights must be nonnegative and not all zero"));
                }
            }
        }
        match &self.los {
            LosPolicy::Fixed(a) => check_open_unit("alpha", *a)?,
            LosPolicy::Sequence(v) => {
                if v.is_empty() {
                    return Err(Error::domain("LoS sequence is empty"));
                }
                for a in v {
                    check_open_unit("alpha", *a)?;
                }
            }
        }
        match &self.sample_size {
            SampleSizePolicy::Fixed(0) => return Err(Error::domain("sample size must be positive")),
            SampleSizePolicy::Fixed(_) => {}
            SampleSizePolicy::Poisson { lambda, offset } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::domain(format!("Poisson lambda must be positive, got {lambda}")));
                }
                if *offset == 0 {
                    return Err(Error::domain("Poisson sample-size offset must be positive"));
                }
            }
        }
        Ok(())
    }

    fn channel_for(&self, m: usize, rng: &mut RngStream) -> Channel {
        match &self.channel {
            ChannelPolicy::Fixed(c) => *c,
            ChannelPolicy::RoundRobin(v) => v[(m - 1) % v.len()],
            ChannelPolicy::Random { x, d, p } => {
                let u = rng.uniform() * (x + d + p);
                if u < *x {
                    Channel::X
                } else if u < x + d {
                    Channel::D
                } else {
                    Channel::P
                }
            }
        }
    }

    fn alpha_for(&self, m: usize) -> f64 {
        match &self.los {
            LosPolicy::Fixed(a) => *a,
            LosPolicy::Sequence(v) => v[(m - 1) % v.len()],
        }
    }

    fn n_for(&self, rng: &mut RngStream) -> Result<usize> {
        match self.sample_size {
            SampleSizePolicy::Fixed(n) => Ok(n),
            SampleSizePolicy::Poisson { lambda, offset } => {
                Ok(poisson_sample(lambda, rng)? as usize + offset)
            }
        }
    }
}

/// Something that can run one study of a given size and level.
pub trait StudyDesign: Sync {
    fn simulate(&self, n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord>;
}

impl StudyDesign for OneSampleNormal {
    fn simulate(&self, n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord> {
        let model = self.with_n(n)?;
        simulate_study(&model, n, truth, alpha, rng)
    }
}

impl StudyDesign for TwoSampleT {
    fn simulate(&self, n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord> {
        if n == self.n() {
            simulate_twosample_study(self, truth, alpha, rng)
        } else {
            simulate_twosample_study(&self.with_n(n)?, truth, alpha, rng)
        }
    }
}

/// The tea-tasting designs have a fixed number of cups; `n` is ignored.
impl StudyDesign for TeaTastingBinomial {
    fn simulate(&self, _n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord> {
        simulate_study(self, 8, truth, alpha, rng)
    }
}

impl StudyDesign for TeaTastingFisher {
    fn simulate(&self, _n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord> {
        simulate_study(self, 8, truth, alpha, rng)
    }
}

/// Wraps a closure as a [`StudyDesign`].
pub struct FnDesign<F>(pub F);

impl<F> StudyDesign for FnDesign<F>
where
    F: Fn(usize, f64, Hypothesis, &mut RngStream) -> Result<StudyRecord> + Sync,
{
    fn simulate(&self, n: usize, alpha: f64, truth: Hypothesis, rng: &mut RngStream) -> Result<StudyRecord> {
        (self.0)(n, alpha, truth, rng)
    }
}

/// Decides whether a finished study is published. Unpublished studies are
/// invisible to the updater.
pub trait PublicationFilter: Sync {
    fn publish(&self, record: &StudyRecord, channel: Channel, rng: &mut RngStream) -> bool;
}

/// Publishes everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct PublishAll;

impl PublicationFilter for PublishAll {
    fn publish(&self, _record: &StudyRecord, _channel: Channel, _rng: &mut RngStream) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    H0Declared,
    H1Declared,
    Exhausted,
}

/// One study as seen by the updater.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub channel: Channel,
    /// `d` (0 or 1), `p`, or `log Lambda(x)` depending on the channel.
    pub payload: f64,
    /// Log likelihood ratio carried by the payload.
    pub log_lr: f64,
    pub published: bool,
    /// Posterior probability of `H0` after this study.
    pub kappa0: f64,
    /// Posterior had every study been published.
    pub kappa0_unfiltered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kappa0_init: f64,
    pub epsilon: f64,
    pub steps: Vec<TrajectoryStep>,
    pub verdict: Verdict,
    /// `log(kappa1 / kappa0)` at the end of the run.
    pub final_log_odds: f64,
}

impl Trajectory {
    pub fn final_kappa0(&self) -> f64 {
        Belief::from_log_odds(self.final_log_odds).kappa0()
    }

    pub fn studies(&self) -> usize {
        self.steps.len()
    }
}

/// Evidence and payload for `channel` from a simulated study.
pub fn channel_evidence(record: &StudyRecord, channel: Channel) -> (Evidence, f64) {
    match channel {
        Channel::X => (
            Evidence::LogLikelihoodRatio {
                log_lambda: record.log_lr_x,
            },
            record.log_lr_x,
        ),
        Channel::D => (
            Evidence::Decision {
                d: record.d,
                alpha: record.alpha,
                rho: record.rho.max(record.alpha),
            },
            f64::from(record.d),
        ),
        Channel::P => (
            Evidence::LogPValue {
                p: record.p,
                log_rho_prime: record.log_rho_prime,
            },
            record.p,
        ),
    }
}

fn verdict_for(kappa0: f64, epsilon: f64) -> Option<Verdict> {
    if kappa0 > 1.0 - epsilon {
        Some(Verdict::H0Declared)
    } else if kappa0 < epsilon {
        Some(Verdict::H1Declared)
    } else {
        None
    }
}

const GATE_STREAM: u64 = 1 << 62;

/// The sequential loop with a publication filter in front of the updater.
///
/// Study `m` draws its data from `rng.substream(m)` and the filter's
/// randomness from a separate substream, so the filter never perturbs the
/// data. Sample sizes and random channels come from `rng` itself.
pub fn run_filtered<D, F>(
    cfg: &SequentialConfig,
    truth: Hypothesis,
    design: &D,
    filter: &F,
    rng: &mut RngStream,
) -> Result<Trajectory>
where
    D: StudyDesign + ?Sized,
    F: PublicationFilter + ?Sized,
{
    cfg.validate()?;
    let mut belief = Belief::new(cfg.kappa0_init)?;
    let mut unfiltered = belief;
    let mut steps = Vec::new();
    let mut verdict = verdict_for(belief.kappa0(), cfg.epsilon);
    let mut m = 0;
    while verdict.is_none() && m < cfg.max_studies {
        m += 1;
        let wrap = |e: Error| Error::Study {
            study: m,
            source: Box::new(e),
        };
        let n = cfg.n_for(rng).map_err(wrap)?;
        let alpha = cfg.alpha_for(m);
        let channel = cfg.channel_for(m, rng);
        let mut data_rng = rng.substream(m as u64);
        let record = design.simulate(n, alpha, truth, &mut data_rng).map_err(wrap)?;
        let (evidence, payload) = channel_evidence(&record, channel);
        let log_lr = evidence.log_likelihood_ratio().map_err(wrap)?;
        let mut gate_rng = rng.substream(GATE_STREAM | m as u64);
        let published = filter.publish(&record, channel, &mut gate_rng);
        unfiltered = unfiltered.update_log_lr(log_lr);
        if published {
            belief = belief.update_log_lr(log_lr);
        }
        steps.push(TrajectoryStep {
            m,
            n,
            alpha,
            channel,
            payload,
            log_lr,
            published,
            kappa0: belief.kappa0(),
            kappa0_unfiltered: unfiltered.kappa0(),
        });
        verdict = verdict_for(belief.kappa0(), cfg.epsilon);
    }
    Ok(Trajectory {
        kappa0_init: cfg.kappa0_init,
        epsilon: cfg.epsilon,
        steps,
        verdict: verdict.unwrap_or(Verdict::Exhausted),
        final_log_odds: belief.log_odds(),
    })
}

/// Updates on every study until `kappa0 < epsilon`, `kappa0 > 1 - epsilon`
/// or `max_studies` is reached.
pub fn run_sequential<D: StudyDesign + ?Sized>(
    cfg: &SequentialConfig,
    truth: Hypothesis,
    design: &D,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    run_filtered(cfg, truth, design, &PublishAll, rng)
}

/// Results of `M` independent two-sample replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStudy {
    pub records: Vec<StudyRecord>,
    /// Posterior of `H0` after each study, updating on decisions.
    pub kappa0_by_d: Vec<f64>,
    /// Posterior of `H0` after each study, updating on P-values.
    pub kappa0_by_p: Vec<f64>,
    /// Counts of `p` in ten equal bins over [0, 1].
    pub p_histogram: Vec<usize>,
    pub rejections: usize,
}

/// `M` scientists each run a two-sample study with `n_m = Poisson(lambda) + 5`
/// per group.
pub fn run_replication_study(
    scientists: usize,
    template: &TwoSampleT,
    lambda: f64,
    alpha: f64,
    truth: Hypothesis,
    kappa0_init: f64,
    rng: &mut RngStream,
) -> Result<ReplicationStudy> {
    if scientists == 0 {
        return Err(Error::domain("need at least one scientist"));
    }
    check_open_unit("alpha", alpha)?;
    let mut by_d = Belief::new(kappa0_init)?;
    let mut by_p = by_d;
    let mut out = ReplicationStudy {
        records: Vec::with_capacity(scientists),
        kappa0_by_d: Vec::with_capacity(scientists),
        kappa0_by_p: Vec::with_capacity(scientists),
        p_histogram: vec![0; 10],
        rejections: 0,
    };
    let mut models: HashMap<usize, TwoSampleT> = HashMap::new();
    for m in 1..=scientists {
        let mut sub = rng.substream(m as u64);
        let n = poisson_sample(lambda, &mut sub)? as usize + 5;
        let model = match models.entry(n) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(template.with_n(n)?),
        };
        let rec = simulate_twosample_study(model, truth, alpha, &mut sub)?;
        by_d = by_d.update(&channel_evidence(&rec, Channel::D).0)?;
        by_p = by_p.update(&channel_evidence(&rec, Channel::P).0)?;
        out.kappa0_by_d.push(by_d.kappa0());
        out.kappa0_by_p.push(by_p.kappa0());
        out.p_histogram[((rec.p * 10.0) as usize).min(9)] += 1;
        out.rejections += usize::from(rec.d);
        out.records.push(rec);
    }
    Ok(out)
}

/// Inputs for checking the sufficient conditions behind posterior
/// convergence under `H0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheckConfig {
    pub family: FamilyKind,
    pub effect: f64,
    /// Open interval containing the levels of significance.
    pub los_interval: (f64, f64),
    /// Per-study levels; cycled to the length of `sample_sizes` if shorter.
    pub alphas: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// `sup` over the interval of the expected single-observation `V`.
    pub decision_sup_mean: f64,
    pub alphas_inside_interval: bool,
    /// Largest `alpha (1 - alpha) [log odds ratio]^2` over the studies.
    pub decision_max_term: f64,
    pub decision_condition: bool,
    /// Largest `int_0^1 log rho'_m(u) du` over the studies.
    pub pvalue_sup_mean: f64,
    /// Largest `int_0^1 [log rho'_m(u)]^2 du` over the studies.
    pub pvalue_max_square: f64,
    pub pvalue_condition: bool,
    pub holds: bool,
}

fn expected_v<R: RocFunction + ?Sized>(roc: &R, a: f64) -> f64 {
    a * (roc.rho(a).ln() - a.ln()) + (1.0 - a) * (roc.rho_complement(a).ln() - (-a).ln_1p())
}

fn log_rho_prime_moments<R: RocFunction + ?Sized>(roc: &R) -> (f64, f64) {
    let f = |u: f64| roc.log_rho_prime(u);
    let cuts = [0.0, 1e-8, 1e-4, 0.01, 0.5, 0.99, 1.0 - 1e-4, 1.0 - 1e-8, 1.0];
    let mut first = 0.0;
    let mut second = 0.0;
    for w in cuts.windows(2) {
        first += quad::adaptive(f, w[0], w[1], 1e-11);
        second += quad::adaptive(|u| f(u).powi(2), w[0], w[1], 1e-11);
    }
    (first, second)
}

/// Evaluates both convergence premises on the configured sequences. The
/// single-observation ROC is the family member with the smallest sample
/// size it admits.
pub fn lemma_condition_check(cfg: &LemmaCheckConfig) -> Result<LemmaReport> {
    let (lo, hi) = cfg.los_interval;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::domain(format!("bad LoS interval ({lo}, {hi})")));
    }
    if cfg.alphas.is_empty() || cfg.sample_sizes.is_empty() {
        return Err(Error::domain("alpha and sample-size sequences must be nonempty"));
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return Err(Error::domain("epsilon must be positive"));
    }
    let base_n = match cfg.family {
        FamilyKind::TwoSample => 2,
        _ => 1,
    };
    let single = ModelFamily::new(cfg.family, base_n)?.roc_at(cfg.effect)?;
    let grid = 400;
    let mut sup_mean = f64::NEG_INFINITY;
    for i in 1..grid {
        let a = lo + (hi - lo) * i as f64 / grid as f64;
        if a > 0.0 && a < 1.0 {
            sup_mean = sup_mean.max(expected_v(&*single, a));
        }
    }
    let m_total = cfg.alphas.len().max(cfg.sample_sizes.len());
    let mut inside = true;
    let mut max_term: f64 = 0.0;
    let mut p_sup = f64::NEG_INFINITY;
    let mut p_sq: f64 = 0.0;
    let mut cache: HashMap<usize, (Box<dyn RocFunction>, f64, f64)> = HashMap::new();
    for m in 0..m_total {
        let a = cfg.alphas[m % cfg.alphas.len()];
        let n = cfg.sample_sizes[m % cfg.sample_sizes.len()];
        check_open_unit("alpha", a)?;
        inside &= a > lo && a < hi;
        let (roc, first, second) = match cache.entry(n) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let roc = ModelFamily::new(cfg.family, n)?.roc_at(cfg.effect)?;
                let (first, second) = log_rho_prime_moments(&*roc);
                e.insert((roc, first, second))
            }
        };
        let log_or = roc.rho(a).ln() - a.ln() + (-a).ln_1p() - roc.rho_complement(a).ln();
        max_term = max_term.max(a * (1.0 - a) * log_or * log_or);
        p_sup = p_sup.max(*first);
        p_sq = p_sq.max(*second);
    }
    let decision_condition = inside && sup_mean <= -cfg.epsilon && max_term.is_finite();
    let pvalue_condition = p_sup <= -cfg.epsilon && p_sq.is_finite();
    Ok(LemmaReport {
        decision_sup_mean: sup_mean,
        alphas_inside_interval: inside,
        decision_max_term: max_term,
        decision_condition,
        pvalue_sup_mean: p_sup,
        pvalue_max_square: p_sq,
        pvalue_condition,
        holds: decision_condition && pvalue_condition,
    })
}
