//! Hypothesis-level relevance model over binary description properties.
//!
//! An information need is described by a binary vector over need properties,
//! an information item by a binary vector over item properties, and the two
//! sides are connected by a pair of seek matrices (need -> item and
//! item -> need). Relevance of a need/item pair is scored by summing, over
//! every binary assignment of the description vectors, a per-pair joint
//! relevance factor times per-property description/prior ratios. Seek-matrix
//! entries are independent of one another, so they are marginalized
//! analytically inside each pair factor instead of being enumerated; the
//! enumeration cost is `2^(need_dim + item_dim)` rather than exponential in
//! the matrix size.
//!
//! Scores are unnormalized and only meaningful for comparison: callers rank
//! by them, never read them as calibrated probabilities.

use crate::error::{Error, Result};

/// Priors are clamped into `[PRIOR_CLAMP, 1 - PRIOR_CLAMP]` before any
/// division so a degenerate prior can never produce an infinite ratio.
pub const PRIOR_CLAMP: f64 = 1e-9;

/// Hard cap on `need_dim + item_dim` for exhaustive enumeration.
pub const MAX_ENUMERATION_PROPERTIES: usize = 16;

/// Binary description vector for a need or an item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyVector {
    values: Vec<bool>,
}

impl PropertyVector {
    pub fn new(values: Vec<bool>) -> Self {
        Self { values }
    }

    /// Builds a vector from 0/1 flags, rejecting anything else.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut values = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                0 => values.push(false),
                1 => values.push(true),
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "property value {other} is not binary"
                    )))
                }
            }
        }
        Ok(Self { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize) -> bool {
        self.values[i]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Binary relationship matrix stating which target-side properties each
/// source-side property seeks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeekMatrix {
    entries: Vec<bool>,
    rows: usize,
    cols: usize,
}

impl SeekMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "seek matrix has {} entries for a {rows}x{cols} shape",
                entries.len()
            )));
        }
        Ok(Self { entries, rows, cols })
    }

    /// Square matrix linking each property to itself and nothing else.
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![false; n * n];
        for i in 0..n {
            entries[i * n + i] = true;
        }
        Self {
            entries,
            rows: n,
            cols: n,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries[row * self.cols + col]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Per-property probability that the property describes a given need/item.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionDistribution {
    probs: Vec<f64>,
}

impl DescriptionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability {
                    name: "description probability",
                    value: p,
                });
            }
        }
        Ok(Self { probs })
    }

    /// Degenerate distribution describing a known binary vector exactly.
    pub fn from_known(vector: &PropertyVector) -> Self {
        Self {
            probs: vector.values().iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.probs.len()
    }

    /// Probability that property `i` takes the given value.
    pub fn prob(&self, i: usize, value: bool) -> f64 {
        if value {
            self.probs[i]
        } else {
            1.0 - self.probs[i]
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Marginal probabilities of each property being set, for both sides.
/// Clamped away from 0 and 1 on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    item: Vec<f64>,
    need: Vec<f64>,
}

impl PriorTable {
    pub fn new(item: Vec<f64>, need: Vec<f64>) -> Result<Self> {
        let clamp = |v: Vec<f64>| -> Result<Vec<f64>> {
            v.into_iter()
                .map(|p| {
                    if !(0.0..=1.0).contains(&p) {
                        Err(Error::InvalidProbability {
                            name: "prior",
                            value: p,
                        })
                    } else {
                        Ok(p.clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP))
                    }
                })
                .collect()
        };
        Ok(Self {
            item: clamp(item)?,
            need: clamp(need)?,
        })
    }

    pub fn item_dim(&self) -> usize {
        self.item.len()
    }

    pub fn need_dim(&self) -> usize {
        self.need.len()
    }

    /// Prior probability that item property `l` takes the given value.
    pub fn item_prior(&self, l: usize, value: bool) -> f64 {
        if value {
            self.item[l]
        } else {
            1.0 - self.item[l]
        }
    }

    /// Prior probability that need property `m` takes the given value.
    pub fn need_prior(&self, m: usize, value: bool) -> f64 {
        if value {
            self.need[m]
        } else {
            1.0 - self.need[m]
        }
    }
}

/// Flat index into a 16-entry pair table for the binary tuple
/// (item value e, need value f, need->item seek y, item->need seek z).
pub fn joint_index(e: bool, f: bool, y: bool, z: bool) -> usize {
    ((e as usize) << 3) | ((f as usize) << 2) | ((y as usize) << 1) | (z as usize)
}

/// For every (item property, need property) pair, a distribution over the 16
/// binary combinations of (E_l, F_m, Y_lm, Z_ml) in the relevant set, plus
/// the scalar relevance prior.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRelevanceTable {
    item_dim: usize,
    need_dim: usize,
    /// Row-major over (l, m): entry `l * need_dim + m`.
    tables: Vec<[f64; 16]>,
    prior_relevance: f64,
}

/// Tolerance for each pair table summing to one.
pub const JOINT_SUM_TOLERANCE: f64 = 1e-9;

impl JointRelevanceTable {
    pub fn new(
        item_dim: usize,
        need_dim: usize,
        tables: Vec<[f64; 16]>,
        prior_relevance: f64,
    ) -> Result<Self> {
        if tables.len() != item_dim * need_dim {
            return Err(Error::DimensionMismatch(format!(
                "{} pair tables for {item_dim}x{need_dim} properties",
                tables.len()
            )));
        }
        if !(0.0..=1.0).contains(&prior_relevance) {
            return Err(Error::InvalidProbability {
                name: "prior_relevance",
                value: prior_relevance,
            });
        }
        for (idx, table) in tables.iter().enumerate() {
            if table.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidProbability {
                    name: "joint table entry",
                    value: *table.iter().find(|&&p| !(0.0..=1.0).contains(&p)).unwrap(),
                });
            }
            let sum: f64 = table.iter().sum();
            if (sum - 1.0).abs() > JOINT_SUM_TOLERANCE {
                return Err(Error::UnnormalizedJoint {
                    item: idx / need_dim.max(1),
                    need: idx % need_dim.max(1),
                    sum,
                });
            }
        }
        Ok(Self {
            item_dim,
            need_dim,
            tables,
            prior_relevance,
        })
    }

    pub fn item_dim(&self) -> usize {
        self.item_dim
    }

    pub fn need_dim(&self) -> usize {
        self.need_dim
    }

    pub fn prior_relevance(&self) -> f64 {
        self.prior_relevance
    }

    pub fn table(&self, l: usize, m: usize) -> &[f64; 16] {
        &self.tables[l * self.need_dim + m]
    }
}

/// Ratio of the description probability to the marginal prior for one
/// property value. The prior is clamped before division.
pub fn single_property_score(p_desc: f64, p_prior: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_desc) {
        return Err(Error::InvalidProbability {
            name: "p_desc",
            value: p_desc,
        });
    }
    if !(0.0..=1.0).contains(&p_prior) {
        return Err(Error::InvalidProbability {
            name: "p_prior",
            value: p_prior,
        });
    }
    Ok(p_desc / p_prior.clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP))
}

/// Exhaustively evaluates the relevance score of a need/item pair.
///
/// Sums over every binary assignment of the two description vectors; the
/// seek-matrix entries inside each pair factor are summed analytically
/// (each entry appears in exactly one pair factor and entries are mutually
/// independent). Returns an unnormalized score: the relevance prior times
/// the assignment sum, deterministic in the inputs.
pub fn enumerate_relevance_probability(
    need: &DescriptionDistribution,
    item: &DescriptionDistribution,
    joint: &JointRelevanceTable,
    priors: &PriorTable,
) -> Result<f64> {
    let item_dim = item.dimension();
    let need_dim = need.dimension();
    if joint.item_dim() != item_dim || joint.need_dim() != need_dim {
        return Err(Error::DimensionMismatch(format!(
            "joint table is {}x{}, distributions are {item_dim}x{need_dim}",
            joint.item_dim(),
            joint.need_dim()
        )));
    }
    if priors.item_dim() != item_dim || priors.need_dim() != need_dim {
        return Err(Error::DimensionMismatch(format!(
            "priors are {}x{}, distributions are {item_dim}x{need_dim}",
            priors.item_dim(),
            priors.need_dim()
        )));
    }
    if item_dim + need_dim > MAX_ENUMERATION_PROPERTIES {
        return Err(Error::EnumerationLimit {
            total: item_dim + need_dim,
            limit: MAX_ENUMERATION_PROPERTIES,
        });
    }

    // Per-property description/prior ratios for both settings of the flag.
    let item_ratio: Vec<[f64; 2]> = (0..item_dim)
        .map(|l| {
            [
                item.prob(l, false) / priors.item_prior(l, false).clamp(PRIOR_CLAMP, 1.0),
                item.prob(l, true) / priors.item_prior(l, true).clamp(PRIOR_CLAMP, 1.0),
            ]
        })
        .collect();
    let need_ratio: Vec<[f64; 2]> = (0..need_dim)
        .map(|m| {
            [
                need.prob(m, false) / priors.need_prior(m, false).clamp(PRIOR_CLAMP, 1.0),
                need.prob(m, true) / priors.need_prior(m, true).clamp(PRIOR_CLAMP, 1.0),
            ]
        })
        .collect();

    // Pair factors with the two seek entries marginalized out:
    // marg[l][m][e*2 + f] = sum over (y, z) of the pair table.
    let mut marg = vec![[0.0f64; 4]; item_dim * need_dim];
    for l in 0..item_dim {
        for m in 0..need_dim {
            let table = joint.table(l, m);
            let cell = &mut marg[l * need_dim + m];
            for e in 0..2 {
                for f in 0..2 {
                    let mut sum = 0.0;
                    for y in 0..2 {
                        for z in 0..2 {
                            sum += table[joint_index(e == 1, f == 1, y == 1, z == 1)];
                        }
                    }
                    cell[e * 2 + f] = sum;
                }
            }
        }
    }

    // Precompute the product of need-side ratios for every F assignment.
    let need_products: Vec<f64> = (0..1usize << need_dim)
        .map(|f_bits| {
            (0..need_dim)
                .map(|m| need_ratio[m][(f_bits >> m) & 1])
                .product()
        })
        .collect();

    let mut total = 0.0;
    for e_bits in 0..1usize << item_dim {
        let item_product: f64 = (0..item_dim)
            .map(|l| item_ratio[l][(e_bits >> l) & 1])
            .product();
        for (f_bits, &need_product) in need_products.iter().enumerate() {
            let mut term = item_product * need_product;
            if term == 0.0 {
                continue;
            }
            for l in 0..item_dim {
                let e = (e_bits >> l) & 1;
                for m in 0..need_dim {
                    let f = (f_bits >> m) & 1;
                    term *= marg[l * need_dim + m][e * 2 + f];
                }
            }
            total += term;
        }
    }

    Ok(joint.prior_relevance() * total)
}

/// Joint table for the strict-identity relation with a known need vector.
///
/// Need and item properties coincide; the seek matrices are the identity, so
/// a relevant pair forces the item vector to equal the need vector. Each
/// pair table therefore puts all mass on (E_l = f_l, F_m = f_m,
/// Y_lm = [l == m], Z_ml = [l == m]).
pub fn strict_identity_joint(dimension: usize, f_known: &PropertyVector) -> Result<JointRelevanceTable> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "strict identity requires dimension >= 1".into(),
        ));
    }
    if f_known.dimension() != dimension {
        return Err(Error::DimensionMismatch(format!(
            "known vector has dimension {}, expected {dimension}",
            f_known.dimension()
        )));
    }
    let seek = SeekMatrix::identity(dimension);
    let mut tables = Vec::with_capacity(dimension * dimension);
    for l in 0..dimension {
        for m in 0..dimension {
            let mut table = [0.0f64; 16];
            let link = seek.get(l, m);
            table[joint_index(f_known.get(l), f_known.get(m), link, link)] = 1.0;
            tables.push(table);
        }
    }
    JointRelevanceTable::new(dimension, dimension, tables, 1.0)
}
