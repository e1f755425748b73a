//! Two-component Poisson mixtures over nonnegative counts.
//!
//! Each property (a term, a user, an item) carries a hidden binary state:
//! entities the property describes produce counts from one Poisson, the rest
//! from a second, smaller one. This module fits the mixture per property by
//! EM and by conjugate Gibbs sampling, and turns fitted parameters into
//! posterior description probabilities for observed counts.
//!
//! Estimation always runs on count histograms, so the cost of a fit scales
//! with the number of distinct count values, not with the number of
//! observations.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma};

use crate::corpus::TermStatistics;
use crate::error::{Error, Result};

/// Mixing weights live in `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-6;
/// Poisson means never drop below this floor.
pub const MEAN_FLOOR: f64 = 1e-6;
/// Initial non-elite mean: occurrences in entities the property does not
/// describe are treated as near-impossible until the data says otherwise.
pub const INIT_NONELITE_MEAN: f64 = 1e-3;

pub const DEFAULT_EM_TOL: f64 = 1e-6;
pub const DEFAULT_EM_MAX_ITER: usize = 100;

/// Parameters of a fitted two-Poisson mixture.
///
/// The constructor enforces the label convention `mu_elite >= mu_nonelite`
/// (swapping the mixing weight along with the means) and the clamps above,
/// so every downstream logarithm stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoissonParams {
    mu_elite: f64,
    mu_nonelite: f64,
    p_elite: f64,
}

impl TwoPoissonParams {
    pub fn new(mu_elite: f64, mu_nonelite: f64, p_elite: f64) -> Self {
        let (mut mu_elite, mut mu_nonelite, mut p_elite) = (mu_elite, mu_nonelite, p_elite);
        if mu_elite < mu_nonelite {
            std::mem::swap(&mut mu_elite, &mut mu_nonelite);
            p_elite = 1.0 - p_elite;
        }
        Self {
            mu_elite: mu_elite.max(MEAN_FLOOR),
            mu_nonelite: mu_nonelite.max(MEAN_FLOOR),
            p_elite: p_elite.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP),
        }
    }

    pub fn mu_elite(&self) -> f64 {
        self.mu_elite
    }

    pub fn mu_nonelite(&self) -> f64 {
        self.mu_nonelite
    }

    pub fn p_elite(&self) -> f64 {
        self.p_elite
    }
}

/// Histogram of nonnegative integer counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountHistogram {
    buckets: BTreeMap<u64, u64>,
}

impl CountHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut hist = Self::new();
        for c in counts {
            hist.add(c, 1);
        }
        hist
    }

    /// Adds `weight` observations of the given count value.
    pub fn add(&mut self, count: u64, weight: u64) {
        if weight > 0 {
            *self.buckets.entry(count).or_insert(0) += weight;
        }
    }

    pub fn total(&self) -> u64 {
        self.buckets.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Buckets in ascending count order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.buckets.iter().map(|(&k, &w)| (k, w))
    }

    pub fn get(&self, count: u64) -> u64 {
        self.buckets.get(&count).copied().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let sum: f64 = self.iter().map(|(k, w)| k as f64 * w as f64).sum();
        sum / total as f64
    }
}

fn ln_factorial(k: u64) -> f64 {
    const TABLE_SIZE: usize = 1024;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; TABLE_SIZE];
        for i in 2..TABLE_SIZE {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    if (k as usize) < TABLE_SIZE {
        table[k as usize]
    } else {
        // Stirling series, accurate to well below 1e-12 at this size.
        let x = k as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
    }
}

/// Log of the Poisson probability mass at `k` with mean `mu`.
pub fn ln_poisson_pmf(k: u64, mu: f64) -> f64 {
    let mu = mu.max(MEAN_FLOOR);
    -mu + k as f64 * mu.ln() - ln_factorial(k)
}

/// Poisson probability mass, evaluated in log space for stability.
pub fn poisson_pmf(k: u64, mu: f64) -> f64 {
    ln_poisson_pmf(k, mu).exp()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Posterior probability that the property describes an entity with the
/// observed count: `p * Pois(k; mu1) / (p * Pois(k; mu1) + (1-p) * Pois(k; mu0))`.
pub fn eliteness_posterior(params: &TwoPoissonParams, count: u64) -> f64 {
    let ln_elite = params.p_elite.ln() + ln_poisson_pmf(count, params.mu_elite);
    let ln_nonelite = (1.0 - params.p_elite).ln() + ln_poisson_pmf(count, params.mu_nonelite);
    sigmoid(ln_elite - ln_nonelite)
}

/// Log ratio of the elite likelihood to the mixture likelihood at `count`:
/// `log(Pois(k; mu1) / (p * Pois(k; mu1) + (1-p) * Pois(k; mu0)))`.
///
/// Equals the log of posterior description probability over its prior; this
/// is the per-property scoring kernel shared by the text and rating rankers.
pub fn log_elite_ratio(params: &TwoPoissonParams, count: u64) -> f64 {
    let ln_a = ln_poisson_pmf(count, params.mu_elite);
    let ln_b = ln_poisson_pmf(count, params.mu_nonelite);
    let ln_mix = log_add_exp(params.p_elite.ln() + ln_a, (1.0 - params.p_elite).ln() + ln_b);
    ln_a - ln_mix
}

/// Mixture log-likelihood of a histogram under the given parameters.
pub fn log_mixture_likelihood(params: &TwoPoissonParams, hist: &CountHistogram) -> f64 {
    let ln_p = params.p_elite.ln();
    let ln_q = (1.0 - params.p_elite).ln();
    hist.iter()
        .map(|(k, w)| {
            w as f64
                * log_add_exp(
                    ln_p + ln_poisson_pmf(k, params.mu_elite),
                    ln_q + ln_poisson_pmf(k, params.mu_nonelite),
                )
        })
        .sum()
}

/// Initialization from collection statistics: the mixing weight is the
/// fraction of documents containing the term, the non-elite mean is
/// minuscule, and the elite mean is the average frequency among documents
/// where the term repeats (falling back to all occurrences, then to 1).
pub fn init_params(stats: &TermStatistics) -> TwoPoissonParams {
    let n = stats.doc_count();
    let p = if n == 0 { 0.0 } else { stats.df as f64 / n as f64 };

    let mean_over = |min_tf: u64| -> Option<f64> {
        let mut weight = 0u64;
        let mut sum = 0u64;
        for (tf, docs) in stats.tf_histogram.iter() {
            if tf >= min_tf {
                weight += docs;
                sum += tf * docs;
            }
        }
        (weight > 0).then(|| sum as f64 / weight as f64)
    };
    let mu_elite = mean_over(2).or_else(|| mean_over(1)).unwrap_or(1.0);
    TwoPoissonParams::new(mu_elite, INIT_NONELITE_MEAN, p)
}

/// Result of an EM fit: final parameters plus the log-likelihood recorded
/// before the first iteration and after each one.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: TwoPoissonParams,
    pub log_likelihood: Vec<f64>,
}

/// Fits the mixture by expectation-maximization on histogram data.
///
/// Responsibilities are computed once per distinct count value and weighted
/// by bucket size; the M-step is closed form. Stops when the relative
/// log-likelihood change drops below `tol` or after `max_iter` iterations.
pub fn em_fit(
    hist: &CountHistogram,
    init: TwoPoissonParams,
    tol: f64,
    max_iter: usize,
) -> Result<EmFit> {
    if hist.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }

    let buckets: Vec<(u64, f64)> = hist.iter().map(|(k, w)| (k, w as f64)).collect();
    let total: f64 = buckets.iter().map(|&(_, w)| w).sum();
    let total_count: f64 = buckets.iter().map(|&(k, w)| k as f64 * w).sum();

    let mut params = init;
    let mut trace = vec![log_mixture_likelihood(&params, hist)];

    for _ in 0..max_iter {
        let mut elite_weight = 0.0;
        let mut elite_count = 0.0;
        for &(k, w) in &buckets {
            let ln_a = params.p_elite.ln() + ln_poisson_pmf(k, params.mu_elite);
            let ln_b = (1.0 - params.p_elite).ln() + ln_poisson_pmf(k, params.mu_nonelite);
            let resp = sigmoid(ln_a - ln_b);
            elite_weight += w * resp;
            elite_count += w * resp * k as f64;
        }
        let nonelite_weight = total - elite_weight;
        let mu_elite = if elite_weight > 0.0 {
            elite_count / elite_weight
        } else {
            params.mu_elite
        };
        let mu_nonelite = if nonelite_weight > 0.0 {
            (total_count - elite_count) / nonelite_weight
        } else {
            params.mu_nonelite
        };
        params = TwoPoissonParams::new(mu_elite, mu_nonelite, elite_weight / total);

        let ll = log_mixture_likelihood(&params, hist);
        let prev = *trace.last().unwrap();
        trace.push(ll);
        if (ll - prev).abs() / prev.abs().max(1e-12) < tol {
            break;
        }
    }

    Ok(EmFit {
        params,
        log_likelihood: trace,
    })
}

/// Gamma prior on a Poisson mean, in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Beta prior on the mixing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

/// Configuration of the conjugate Gibbs sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    pub elite_prior: GammaPrior,
    pub nonelite_prior: GammaPrior,
    pub p_prior: BetaPrior,
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            elite_prior: GammaPrior { shape: 1.0, rate: 1.0 },
            nonelite_prior: GammaPrior { shape: 1.0, rate: 1.0 },
            p_prior: BetaPrior { a: 1.0, b: 1.0 },
            burn_in: 500,
            samples: 1000,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("elite_prior.shape", self.elite_prior.shape),
            ("elite_prior.rate", self.elite_prior.rate),
            ("nonelite_prior.shape", self.nonelite_prior.shape),
            ("nonelite_prior.rate", self.nonelite_prior.rate),
            ("p_prior.a", self.p_prior.a),
            ("p_prior.b", self.p_prior.b),
        ];
        for (name, value) in positive {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {value} must be > 0"
                )));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        Ok(())
    }

    /// Recenters the elite-mean prior on an initialization value, keeping a
    /// light shape so the data dominates quickly.
    pub fn centered_elite(mut self, mu_elite: f64) -> Self {
        let mu = mu_elite.max(MEAN_FLOOR);
        self.elite_prior = GammaPrior {
            shape: 2.0,
            rate: 2.0 / mu,
        };
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct SuffStats {
    elite_n: u64,
    elite_sum: u64,
    nonelite_n: u64,
    nonelite_sum: u64,
}

fn sample_assignments(
    buckets: &[(u64, u64)],
    params: &TwoPoissonParams,
    rng: &mut ChaCha8Rng,
) -> SuffStats {
    let mut stats = SuffStats::default();
    for &(k, w) in buckets {
        let ln_a = params.p_elite.ln() + ln_poisson_pmf(k, params.mu_elite);
        let ln_b = (1.0 - params.p_elite).ln() + ln_poisson_pmf(k, params.mu_nonelite);
        let resp = sigmoid(ln_a - ln_b);
        let elite = Binomial::new(w, resp.clamp(0.0, 1.0))
            .expect("responsibility is a probability")
            .sample(rng);
        stats.elite_n += elite;
        stats.elite_sum += elite * k;
        stats.nonelite_n += w - elite;
        stats.nonelite_sum += (w - elite) * k;
    }
    stats
}

fn sample_mean(prior: GammaPrior, n: u64, sum: u64, rng: &mut ChaCha8Rng) -> f64 {
    let shape = prior.shape + sum as f64;
    let rate = prior.rate + n as f64;
    Gamma::new(shape, 1.0 / rate)
        .expect("posterior gamma parameters are positive")
        .sample(rng)
}

fn sample_mixing(prior: BetaPrior, elite_n: u64, nonelite_n: u64, rng: &mut ChaCha8Rng) -> f64 {
    Beta::new(prior.a + elite_n as f64, prior.b + nonelite_n as f64)
        .expect("posterior beta parameters are positive")
        .sample(rng)
}

/// Fits the mixture by conjugate Gibbs sampling.
///
/// Alternates latent assignments (binomial per distinct count value), means
/// (gamma posteriors) and mixing weight (beta posterior). The returned
/// parameters are posterior means over the post-burn-in draws, with each
/// draw relabeled to `mu_elite >= mu_nonelite` before averaging. Output is
/// fully determined by the seed.
pub fn gibbs_fit(hist: &CountHistogram, config: &GibbsConfig) -> Result<TwoPoissonParams> {
    if hist.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    config.validate()?;

    let buckets: Vec<(u64, u64)> = hist.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Deterministic start at the prior means.
    let mut params = TwoPoissonParams::new(
        config.elite_prior.mean(),
        config.nonelite_prior.mean(),
        config.p_prior.a / (config.p_prior.a + config.p_prior.b),
    );

    let mut sum_elite = 0.0;
    let mut sum_nonelite = 0.0;
    let mut sum_p = 0.0;
    for iteration in 0..config.burn_in + config.samples {
        let stats = sample_assignments(&buckets, &params, &mut rng);
        let mu_elite = sample_mean(config.elite_prior, stats.elite_n, stats.elite_sum, &mut rng);
        let mu_nonelite = sample_mean(
            config.nonelite_prior,
            stats.nonelite_n,
            stats.nonelite_sum,
            &mut rng,
        );
        let p = sample_mixing(config.p_prior, stats.elite_n, stats.nonelite_n, &mut rng);
        // Canonical labeling, which the constructor applies to the state as
        // well so the averaged draws refer to the same component.
        params = TwoPoissonParams::new(mu_elite, mu_nonelite, p);
        if iteration >= config.burn_in {
            sum_elite += params.mu_elite();
            sum_nonelite += params.mu_nonelite();
            sum_p += params.p_elite();
        }
    }

    let n = config.samples as f64;
    Ok(TwoPoissonParams::new(
        sum_elite / n,
        sum_nonelite / n,
        sum_p / n,
    ))
}

/// Which estimator fits a property's mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    Em { tol: f64, max_iter: usize },
    Gibbs(GibbsConfig),
}

impl FitMethod {
    pub fn default_em() -> Self {
        FitMethod::Em {
            tol: DEFAULT_EM_TOL,
            max_iter: DEFAULT_EM_MAX_ITER,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::Em { .. } => "em",
            FitMethod::Gibbs(_) => "gibbs",
        }
    }
}

/// Stable 64-bit FNV-1a, used to derive per-property seeds so parallel fits
/// are deterministic regardless of scheduling.
pub fn property_seed(base_seed: u64, property_id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in property_id.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash ^ base_seed
}

/// Fits one property's histogram with the chosen method, seeding Gibbs per
/// property and centering its elite prior on the initialization value.
/// Returns the parameters and the mixture log-likelihood at those
/// parameters.
pub fn fit_property(
    property_id: &str,
    hist: &CountHistogram,
    init: TwoPoissonParams,
    method: &FitMethod,
) -> Result<(TwoPoissonParams, f64)> {
    match method {
        FitMethod::Em { tol, max_iter } => {
            let fit = em_fit(hist, init, *tol, *max_iter)?;
            let ll = *fit.log_likelihood.last().unwrap();
            Ok((fit.params, ll))
        }
        FitMethod::Gibbs(config) => {
            let config = config
                .centered_elite(init.mu_elite())
                .with_seed(property_seed(config.seed, property_id));
            let params = gibbs_fit(hist, &config)?;
            let ll = log_mixture_likelihood(&params, hist);
            Ok((params, ll))
        }
    }
}

/// One fitted property in a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub property: String,
    pub params: TwoPoissonParams,
    pub method: String,
    pub log_likelihood: f64,
}

/// Writes fitted records as tab-separated lines
/// `property  mu_elite  mu_nonelite  p_elite  method  log_likelihood`,
/// sorted by property id.
pub fn write_model_file(w: &mut impl std::io::Write, records: &[ModelRecord]) -> std::io::Result<()> {
    let mut sorted: Vec<&ModelRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.property.cmp(&b.property));
    for r in sorted {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.property,
            r.params.mu_elite(),
            r.params.mu_nonelite(),
            r.params.p_elite(),
            r.method,
            r.log_likelihood
        )?;
    }
    Ok(())
}

/// Reads a model file written by [`write_model_file`].
pub fn read_model_file(r: impl std::io::BufRead) -> Result<Vec<ModelRecord>> {
    let mut records = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                path: "<model file>".into(),
                line: idx + 1,
                msg: format!("expected 6 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                path: "<model file>".into(),
                line: idx + 1,
                msg: format!("{name}: {e}"),
            })
        };
        records.push(ModelRecord {
            property: fields[0].to_string(),
            params: TwoPoissonParams::new(
                parse_f64(fields[1], "mu_elite")?,
                parse_f64(fields[2], "mu_nonelite")?,
                parse_f64(fields[3], "p_elite")?,
            ),
            method: fields[4].to_string(),
            log_likelihood: parse_f64(fields[5], "log_likelihood")?,
        });
    }
    Ok(records)
}

/// Fits every term in the index (optionally restricted to a vocabulary),
/// in parallel. Per-term fits are independent and per-term seeds are derived
/// from the property id, so the records come out identical for any thread
/// count.
pub fn fit_all_terms(
    index: &crate::corpus::InvertedIndex,
    method: &FitMethod,
    vocabulary: Option<&std::collections::HashSet<String>>,
) -> Result<Vec<ModelRecord>> {
    use rayon::prelude::*;

    let terms: Vec<&str> = index
        .terms()
        .filter(|t| vocabulary.map(|v| v.contains(*t)).unwrap_or(true))
        .collect();
    terms
        .par_iter()
        .map(|term| {
            let stats = crate::corpus::term_stats(index, term);
            let init = init_params(&stats);
            let (params, ll) = fit_property(term, &stats.tf_histogram, init, method)?;
            Ok(ModelRecord {
                property: term.to_string(),
                params,
                method: method.name().to_string(),
                log_likelihood: ll,
            })
        })
        .collect()
}
