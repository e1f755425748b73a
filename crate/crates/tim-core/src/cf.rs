//! Item ranking from a sparse rating matrix.
//!
//! Each user is described by the kinds of items they prefer, each item by
//! the kinds of users it appeals to; both sides get a two-Poisson mixture
//! fitted on their observed ratings (a user's given ratings, an item's
//! received ratings). A target user/item pair is scored by propagating
//! evidence through known-relevant pairs: a relevant pair (u', i')
//! contributes when the target user has rated i' and u' has rated the
//! target item, adding the log elite-evidence ratios of those two ratings
//! under i's-side and u's-side mixtures of the relevant pair. Pairs with no
//! usable evidence contribute nothing, so a pair with zero overlap scores 0.
//!
//! There is no latent embedding and no explicit user-user or item-item
//! similarity anywhere; rankings follow from the mixtures and the relevant
//! pairs alone.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;

use crate::adhoc::RankedList;
use crate::error::{Error, Result};
use crate::mixture::{
    log_elite_ratio, log_mixture_likelihood, CountHistogram, FitMethod, ModelRecord,
    TwoPoissonParams, INIT_NONELITE_MEAN,
};

pub const DEFAULT_RATING_MAX: u32 = 5;
pub const DEFAULT_RELEVANCE_THRESHOLD: u32 = 4;

/// Sparse user/item rating matrix with both adjacency views.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    users: Vec<String>,
    items: Vec<String>,
    user_ordinals: HashMap<String, u32>,
    item_ordinals: HashMap<String, u32>,
    /// Per user: (item ordinal, rating), sorted by item ordinal.
    by_user: Vec<Vec<(u32, u32)>>,
    /// Per item: (user ordinal, rating), sorted by user ordinal.
    by_item: Vec<Vec<(u32, u32)>>,
    r_max: u32,
}

/// A loaded matrix plus how many duplicate cells were overwritten.
#[derive(Debug)]
pub struct RatingLoad {
    pub matrix: RatingMatrix,
    pub duplicate_overwrites: u64,
}

impl RatingMatrix {
    /// Builds a matrix from (user, item, rating) entries. Ratings must lie
    /// in `[1, r_max]`; a repeated cell keeps the last value and counts as
    /// one duplicate overwrite.
    pub fn from_entries<I>(entries: I, r_max: u32) -> Result<RatingLoad>
    where
        I: IntoIterator<Item = (String, String, u32)>,
    {
        if r_max == 0 {
            return Err(Error::InvalidParameter("rating scale must be >= 1".into()));
        }
        let mut users: Vec<String> = Vec::new();
        let mut items: Vec<String> = Vec::new();
        let mut user_ordinals = HashMap::new();
        let mut item_ordinals = HashMap::new();
        let mut cells: HashMap<(u32, u32), u32> = HashMap::new();
        let mut duplicates = 0u64;

        for (user, item, rating) in entries {
            if rating < 1 || rating > r_max {
                return Err(Error::InvalidParameter(format!(
                    "rating {rating} outside scale [1, {r_max}] for ({user}, {item})"
                )));
            }
            let u = *user_ordinals.entry(user.clone()).or_insert_with(|| {
                users.push(user.clone());
                (users.len() - 1) as u32
            });
            let i = *item_ordinals.entry(item.clone()).or_insert_with(|| {
                items.push(item.clone());
                (items.len() - 1) as u32
            });
            if cells.insert((u, i), rating).is_some() {
                duplicates += 1;
                log::warn!("duplicate rating for ({user}, {item}); keeping the last value");
            }
        }

        let mut by_user: Vec<Vec<(u32, u32)>> = vec![Vec::new(); users.len()];
        let mut by_item: Vec<Vec<(u32, u32)>> = vec![Vec::new(); items.len()];
        for (&(u, i), &r) in &cells {
            by_user[u as usize].push((i, r));
            by_item[i as usize].push((u, r));
        }
        for list in &mut by_user {
            list.sort_unstable();
        }
        for list in &mut by_item {
            list.sort_unstable();
        }

        Ok(RatingLoad {
            matrix: RatingMatrix {
                users,
                items,
                user_ordinals,
                item_ordinals,
                by_user,
                by_item,
                r_max,
            },
            duplicate_overwrites: duplicates,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn user_ordinal(&self, user: &str) -> Option<u32> {
        self.user_ordinals.get(user).copied()
    }

    pub fn item_ordinal(&self, item: &str) -> Option<u32> {
        self.item_ordinals.get(item).copied()
    }

    pub fn user_id(&self, ordinal: u32) -> &str {
        &self.users[ordinal as usize]
    }

    pub fn item_id(&self, ordinal: u32) -> &str {
        &self.items[ordinal as usize]
    }

    /// The user's given ratings as (item ordinal, rating), sorted.
    pub fn user_ratings(&self, user: u32) -> &[(u32, u32)] {
        &self.by_user[user as usize]
    }

    /// The item's received ratings as (user ordinal, rating), sorted.
    pub fn item_ratings(&self, item: u32) -> &[(u32, u32)] {
        &self.by_item[item as usize]
    }

    pub fn rating(&self, user: u32, item: u32) -> Option<u32> {
        let ratings = self.user_ratings(user);
        ratings
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| ratings[pos].1)
    }

    pub fn rating_count(&self) -> usize {
        self.by_user.iter().map(|v| v.len()).sum()
    }
}

/// Reads tab-separated `user item rating [timestamp]` lines; the timestamp
/// is ignored.
pub fn load_ratings(path: impl AsRef<Path>, r_max: u32) -> Result<RatingLoad> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("expected at least 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let rating: u32 = fields[2].trim().parse().map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            msg: format!("rating: {e}"),
        })?;
        if rating < 1 || rating > r_max {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("rating {rating} outside scale [1, {r_max}]"),
            });
        }
        entries.push((fields[0].to_string(), fields[1].to_string(), rating));
    }
    RatingMatrix::from_entries(entries, r_max)
}

/// The set of user/item pairs treated as known-relevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevantPairSet {
    /// Per user ordinal: sorted relevant item ordinals.
    by_user: Vec<Vec<u32>>,
    len: usize,
}

impl RelevantPairSet {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn items_of(&self, user: u32) -> &[u32] {
        &self.by_user[user as usize]
    }

    pub fn contains(&self, user: u32, item: u32) -> bool {
        self.by_user[user as usize].binary_search(&item).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.by_user
            .iter()
            .enumerate()
            .flat_map(|(u, items)| items.iter().map(move |&i| (u as u32, i)))
    }

    /// Builds from explicit pairs, validating that each is actually rated.
    pub fn from_pairs(matrix: &RatingMatrix, pairs: &[(String, String)]) -> Result<Self> {
        let mut by_user = vec![Vec::new(); matrix.n_users()];
        let mut len = 0;
        for (user, item) in pairs {
            let u = matrix
                .user_ordinal(user)
                .ok_or_else(|| Error::UnknownEntity(user.clone()))?;
            let i = matrix
                .item_ordinal(item)
                .ok_or_else(|| Error::UnknownEntity(item.clone()))?;
            if matrix.rating(u, i).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "pair ({user}, {item}) is not rated"
                )));
            }
            by_user[u as usize].push(i);
            len += 1;
        }
        for items in &mut by_user {
            items.sort_unstable();
            items.dedup();
        }
        let len = by_user.iter().map(|v| v.len()).sum::<usize>().min(len);
        Ok(Self { by_user, len })
    }
}

/// All rated pairs at or above the threshold.
pub fn build_relevant_pairs(matrix: &RatingMatrix, threshold: u32) -> Result<RelevantPairSet> {
    if threshold < 1 || threshold > matrix.r_max() {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside scale [1, {}]",
            matrix.r_max()
        )));
    }
    let mut by_user = Vec::with_capacity(matrix.n_users());
    let mut len = 0;
    for u in 0..matrix.n_users() as u32 {
        let items: Vec<u32> = matrix
            .user_ratings(u)
            .iter()
            .filter(|&&(_, r)| r >= threshold)
            .map(|&(i, _)| i)
            .collect();
        len += items.len();
        by_user.push(items);
    }
    Ok(RelevantPairSet { by_user, len })
}

/// Preference mixture of one user, fitted on the user's given ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserModel(pub TwoPoissonParams);

/// Appeal mixture of one item, fitted on the item's received ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemModel(pub TwoPoissonParams);

/// Fit settings for the rating mixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfFitConfig {
    pub threshold: u32,
    pub method: FitMethod,
}

impl Default for CfFitConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_RELEVANCE_THRESHOLD,
            method: FitMethod::default_em(),
        }
    }
}

/// Initialization from an entity's ratings: the mixing weight is the
/// fraction at or above the threshold, the elite mean the average of those
/// ratings (falling back to all ratings, then 1), the non-elite mean the
/// average below the threshold (falling back to a minuscule value).
fn rating_init(values: &[u32], threshold: u32) -> TwoPoissonParams {
    let total = values.len();
    let above: Vec<u32> = values.iter().copied().filter(|&r| r >= threshold).collect();
    let below: Vec<u32> = values.iter().copied().filter(|&r| r < threshold).collect();
    let mean = |v: &[u32]| -> Option<f64> {
        (!v.is_empty()).then(|| v.iter().map(|&r| r as f64).sum::<f64>() / v.len() as f64)
    };
    let p = if total == 0 {
        0.0
    } else {
        above.len() as f64 / total as f64
    };
    let mu_elite = mean(&above).or_else(|| mean(values)).unwrap_or(1.0);
    let mu_nonelite = mean(&below).unwrap_or(INIT_NONELITE_MEAN);
    TwoPoissonParams::new(mu_elite, mu_nonelite, p)
}

fn fit_entity(
    seed_id: &str,
    values: &[u32],
    config: &CfFitConfig,
) -> Result<(TwoPoissonParams, f64)> {
    let hist = CountHistogram::from_counts(values.iter().map(|&r| r as u64));
    let init = rating_init(values, config.threshold);
    crate::mixture::fit_property(seed_id, &hist, init, &config.method)
}

/// Fits the preference mixture of one user. Unknown users are cold: they
/// have no ratings to fit on.
pub fn fit_user_model(
    matrix: &RatingMatrix,
    user: &str,
    config: &CfFitConfig,
) -> Result<UserModel> {
    let u = matrix
        .user_ordinal(user)
        .ok_or_else(|| Error::ColdEntity(user.to_string()))?;
    let values: Vec<u32> = matrix.user_ratings(u).iter().map(|&(_, r)| r).collect();
    let (params, _) = fit_entity(&format!("u:{user}"), &values, config)?;
    Ok(UserModel(params))
}

/// Fits the appeal mixture of one item.
pub fn fit_item_model(
    matrix: &RatingMatrix,
    item: &str,
    config: &CfFitConfig,
) -> Result<ItemModel> {
    let i = matrix
        .item_ordinal(item)
        .ok_or_else(|| Error::ColdEntity(item.to_string()))?;
    let values: Vec<u32> = matrix.item_ratings(i).iter().map(|&(_, r)| r).collect();
    let (params, _) = fit_entity(&format!("i:{item}"), &values, config)?;
    Ok(ItemModel(params))
}

/// Fitted mixtures for both sides of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CfModels {
    users: HashMap<u32, TwoPoissonParams>,
    items: HashMap<u32, TwoPoissonParams>,
    method: String,
}

impl CfModels {
    /// Assembles models directly; used by tests and oracles with hand-set
    /// parameters.
    pub fn from_params(
        users: HashMap<u32, TwoPoissonParams>,
        items: HashMap<u32, TwoPoissonParams>,
        method: impl Into<String>,
    ) -> Self {
        Self {
            users,
            items,
            method: method.into(),
        }
    }

    pub fn user(&self, ordinal: u32) -> Option<&TwoPoissonParams> {
        self.users.get(&ordinal)
    }

    pub fn item(&self, ordinal: u32) -> Option<&TwoPoissonParams> {
        self.items.get(&ordinal)
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    /// Model-file records with `u:`/`i:`-prefixed property ids.
    pub fn to_records(&self, matrix: &RatingMatrix) -> Vec<ModelRecord> {
        let mut records = Vec::with_capacity(self.users.len() + self.items.len());
        for (&u, params) in &self.users {
            let hist = CountHistogram::from_counts(
                matrix.user_ratings(u).iter().map(|&(_, r)| r as u64),
            );
            records.push(ModelRecord {
                property: format!("u:{}", matrix.user_id(u)),
                params: *params,
                method: self.method.clone(),
                log_likelihood: log_mixture_likelihood(params, &hist),
            });
        }
        for (&i, params) in &self.items {
            let hist = CountHistogram::from_counts(
                matrix.item_ratings(i).iter().map(|&(_, r)| r as u64),
            );
            records.push(ModelRecord {
                property: format!("i:{}", matrix.item_id(i)),
                params: *params,
                method: self.method.clone(),
                log_likelihood: log_mixture_likelihood(params, &hist),
            });
        }
        records.sort_by(|a, b| a.property.cmp(&b.property));
        records
    }

    /// Rebuilds models from records written by [`Self::to_records`].
    pub fn from_records(matrix: &RatingMatrix, records: &[ModelRecord]) -> Result<Self> {
        let mut users = HashMap::new();
        let mut items = HashMap::new();
        let mut method = String::new();
        for record in records {
            if method.is_empty() {
                method = record.method.clone();
            }
            if let Some(user) = record.property.strip_prefix("u:") {
                let u = matrix
                    .user_ordinal(user)
                    .ok_or_else(|| Error::UnknownEntity(user.to_string()))?;
                users.insert(u, record.params);
            } else if let Some(item) = record.property.strip_prefix("i:") {
                let i = matrix
                    .item_ordinal(item)
                    .ok_or_else(|| Error::UnknownEntity(item.to_string()))?;
                items.insert(i, record.params);
            } else {
                return Err(Error::InvalidParameter(format!(
                    "model record {:?} has no u:/i: prefix",
                    record.property
                )));
            }
        }
        Ok(Self {
            users,
            items,
            method,
        })
    }
}

/// Fits every user and item mixture in parallel.
pub fn fit_all_models(matrix: &RatingMatrix, config: &CfFitConfig) -> Result<CfModels> {
    let users: Result<HashMap<u32, TwoPoissonParams>> = (0..matrix.n_users() as u32)
        .into_par_iter()
        .map(|u| {
            let values: Vec<u32> = matrix.user_ratings(u).iter().map(|&(_, r)| r).collect();
            let (params, _) = fit_entity(&format!("u:{}", matrix.user_id(u)), &values, config)?;
            Ok((u, params))
        })
        .collect();
    let items: Result<HashMap<u32, TwoPoissonParams>> = (0..matrix.n_items() as u32)
        .into_par_iter()
        .map(|i| {
            let values: Vec<u32> = matrix.item_ratings(i).iter().map(|&(_, r)| r).collect();
            let (params, _) = fit_entity(&format!("i:{}", matrix.item_id(i)), &values, config)?;
            Ok((i, params))
        })
        .collect();
    Ok(CfModels {
        users: users?,
        items: items?,
        method: config.method.name().to_string(),
    })
}

/// Scores one user/item pair by evidence propagation.
///
/// A relevant pair (u', i') contributes exactly when u' is not the target
/// user, i' is not the target item, the target user has rated i', and u'
/// has rated the target item. Its contribution is the log elite-evidence
/// ratio of the target user's rating on i' under i''s appeal mixture, plus
/// that of u''s rating on the target item under u''s preference mixture.
/// No contributing pairs means a score of exactly zero.
pub fn score_pair(
    matrix: &RatingMatrix,
    rel: &RelevantPairSet,
    models: &CfModels,
    user: &str,
    item: &str,
) -> Result<f64> {
    let u = matrix
        .user_ordinal(user)
        .ok_or_else(|| Error::UnknownEntity(user.to_string()))?;
    let i = matrix
        .item_ordinal(item)
        .ok_or_else(|| Error::UnknownEntity(item.to_string()))?;
    score_pair_ordinals(matrix, rel, models, u, i)
}

fn score_pair_ordinals(
    matrix: &RatingMatrix,
    rel: &RelevantPairSet,
    models: &CfModels,
    u: u32,
    i: u32,
) -> Result<f64> {
    let mut total = 0.0;
    for &(u_prime, rating_on_target) in matrix.item_ratings(i) {
        if u_prime == u {
            continue;
        }
        let mut contributing = 0u64;
        for &i_prime in rel.items_of(u_prime) {
            if i_prime == i {
                continue;
            }
            let Some(target_user_rating) = matrix.rating(u, i_prime) else {
                continue;
            };
            let item_params = models.item(i_prime).ok_or_else(|| {
                Error::MissingModel(format!("item {}", matrix.item_id(i_prime)))
            })?;
            total += log_elite_ratio(item_params, target_user_rating as u64);
            contributing += 1;
        }
        if contributing > 0 {
            let user_params = models.user(u_prime).ok_or_else(|| {
                Error::MissingModel(format!("user {}", matrix.user_id(u_prime)))
            })?;
            total += contributing as f64 * log_elite_ratio(user_params, rating_on_target as u64);
        }
    }
    Ok(total)
}

/// Ranks candidate items for a user by [`score_pair`], ties broken by
/// ascending item id. Candidates default to every item the user has not
/// rated; a user who rated everything gets an empty list. Cold-start
/// ordering: zero-evidence candidates score 0 and therefore sit below every
/// positive-evidence candidate and above every negative-evidence one.
pub fn rank_items_for_user(
    matrix: &RatingMatrix,
    rel: &RelevantPairSet,
    models: &CfModels,
    user: &str,
    candidates: Option<&[String]>,
    k: usize,
) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let u = matrix
        .user_ordinal(user)
        .ok_or_else(|| Error::UnknownEntity(user.to_string()))?;

    let candidate_ordinals: Vec<u32> = match candidates {
        Some(ids) => ids
            .iter()
            .map(|id| {
                matrix
                    .item_ordinal(id)
                    .ok_or_else(|| Error::UnknownEntity(id.clone()))
            })
            .collect::<Result<_>>()?,
        None => {
            let rated: HashSet<u32> = matrix.user_ratings(u).iter().map(|&(i, _)| i).collect();
            (0..matrix.n_items() as u32)
                .filter(|i| !rated.contains(i))
                .collect()
        }
    };

    let mut scores = Vec::with_capacity(candidate_ordinals.len());
    for i in candidate_ordinals {
        let score = score_pair_ordinals(matrix, rel, models, u, i)?;
        scores.push((matrix.item_id(i).to_string(), score));
    }
    Ok(RankedList::from_scores(user, scores, k))
}
