//! Distance to closest record (DCR) privacy scoring.
//!
//! For every synthetic record the synthetic-to-real distance (SRD) is the
//! distance to its closest training record. For every training record the
//! real-to-real distance (RRD) is the distance to its closest record in a
//! disjoint holdout set. The DCR ratio compares the share of SRDs falling
//! below the α-th RRD percentile with α itself; the privacy score rescales
//! that ratio so that 0 means "no more close records than a fresh sample"
//! and 1 means "every synthetic record is closer than the percentile".

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedder::EmbeddingModel;
use crate::error::{Error, Result};
use crate::neighbors;
use crate::seed::{derive_seed, rng_from_seed};
use crate::tabular::{EncodedMatrix, RawMetricEncoder, TabularDataset};

pub const DEFAULT_ALPHA_PERCENT: f64 = 2.0;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Raw,
    Embedded,
}

impl std::fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpaceTag::Raw => "raw",
            SpaceTag::Embedded => "embedded",
        })
    }
}

/// Synthetic, training (D₁) and holdout (D₂) records encoded in one metric
/// space.
#[derive(Debug, Clone)]
pub struct DistanceSpace {
    pub tag: SpaceTag,
    pub synthetic: Array2<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
}

impl DistanceSpace {
    pub fn new(
        tag: SpaceTag,
        synthetic: EncodedMatrix,
        d1: EncodedMatrix,
        d2: EncodedMatrix,
    ) -> Result<Self> {
        let dim = d1.n_cols();
        if synthetic.n_cols() != dim || d2.n_cols() != dim {
            return Err(Error::Parameter(format!(
                "matrices disagree on dimensionality: {} / {} / {}",
                synthetic.n_cols(),
                dim,
                d2.n_cols()
            )));
        }
        Ok(DistanceSpace {
            tag,
            synthetic: synthetic.values,
            d1: d1.values,
            d2: d2.values,
        })
    }

    /// Raw metric space with standardization statistics fitted on D₁.
    pub fn raw(
        synthetic: &TabularDataset,
        d1: &TabularDataset,
        d2: &TabularDataset,
    ) -> Result<Self> {
        d1.schema().check_compatible(synthetic.schema())?;
        d1.schema().check_compatible(d2.schema())?;
        let encoder = RawMetricEncoder::fit(d1)?;
        DistanceSpace::new(
            SpaceTag::Raw,
            encoder.encode(synthetic)?,
            encoder.encode(d1)?,
            encoder.encode(d2)?,
        )
    }

    /// Embedding space of a trained encoder.
    pub fn embedded(
        model: &EmbeddingModel,
        synthetic: &TabularDataset,
        d1: &TabularDataset,
        d2: &TabularDataset,
    ) -> Result<Self> {
        DistanceSpace::new(
            SpaceTag::Embedded,
            model.embed_dataset(synthetic)?,
            model.embed_dataset(d1)?,
            model.embed_dataset(d2)?,
        )
    }

    pub fn sizes(&self) -> Sizes {
        Sizes {
            synthetic: self.synthetic.nrows(),
            d1: self.d1.nrows(),
            d2: self.d2.nrows(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceKind {
    Srd,
    Rrd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearestDistances {
    pub values: Vec<f64>,
    pub kind: DistanceKind,
}

/// Exact closest-record distance of every query row among `references`.
pub fn nearest_distances(
    queries: ArrayView2<f64>,
    references: ArrayView2<f64>,
    kind: DistanceKind,
) -> Result<NearestDistances> {
    if references.nrows() == 0 {
        return Err(Error::Empty("reference set"));
    }
    if queries.ncols() != references.ncols() {
        return Err(Error::Parameter(format!(
            "query dimension {} differs from reference dimension {}",
            queries.ncols(),
            references.ncols()
        )));
    }
    Ok(NearestDistances {
        values: neighbors::nearest_distances(queries, references),
        kind,
    })
}

/// SRD of each synthetic row against the training rows.
pub fn srd(synthetic: ArrayView2<f64>, d1: ArrayView2<f64>) -> Result<NearestDistances> {
    nearest_distances(synthetic, d1, DistanceKind::Srd)
}

/// RRD of each training row against the holdout rows.
pub fn rrd(d1: ArrayView2<f64>, d2: ArrayView2<f64>) -> Result<NearestDistances> {
    nearest_distances(d1, d2, DistanceKind::Rrd)
}

fn check_alpha(alpha_percent: f64) -> Result<()> {
    if alpha_percent > 0.0 && alpha_percent < 100.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must lie in (0, 100), got {alpha_percent}"
        )))
    }
}

/// Nearest-rank percentile of an ascending slice: the value at 1-based rank
/// ⌈p/100 · n⌉ (at least 1).
pub fn nearest_rank_percentile(sorted: &[f64], percent: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percent * n as f64) / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcrRatio {
    pub ratio: f64,
    pub rrd_alpha: f64,
    /// Synthetic records with SRD strictly below `rrd_alpha`.
    pub below: usize,
    pub fraction_below: f64,
}

/// DCR ratio: share of SRDs strictly below the α-th RRD percentile, divided
/// by α/100. With |D̂| = |D₁| this is the count of such SRDs over α% of |D₁|.
pub fn dcr_ratio(srd: &NearestDistances, rrd: &NearestDistances, alpha_percent: f64) -> Result<DcrRatio> {
    check_alpha(alpha_percent)?;
    if srd.values.is_empty() {
        return Err(Error::Empty("SRD values"));
    }
    if rrd.values.is_empty() {
        return Err(Error::Empty("RRD values"));
    }
    let mut sorted = rrd.values.clone();
    sorted.sort_by(f64::total_cmp);
    let rrd_alpha = nearest_rank_percentile(&sorted, alpha_percent);
    let below = srd.values.iter().filter(|&&d| d < rrd_alpha).count();
    let fraction_below = below as f64 / srd.values.len() as f64;
    Ok(DcrRatio {
        ratio: fraction_below / (alpha_percent / 100.0),
        rrd_alpha,
        below,
        fraction_below,
    })
}

/// Normalized privacy score (α/100)(ratio − 1)/(1 − α/100).
pub fn privacy_score(ratio: f64, alpha_percent: f64) -> f64 {
    let a = alpha_percent / 100.0;
    (a * ratio - a) / (1.0 - a)
}

/// Same score written in terms of the fraction of SRDs below the percentile,
/// which is exact at both ends of the range.
fn score_from_fraction(fraction: f64, alpha_percent: f64) -> f64 {
    let a = alpha_percent / 100.0;
    (fraction - a) / (1.0 - a)
}

/// Lowest attainable privacy score, −α/(100 − α).
pub fn score_floor(alpha_percent: f64) -> f64 {
    score_from_fraction(0.0, alpha_percent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub std: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub synthetic: usize,
    pub d1: usize,
    pub d2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyScoreReport {
    pub space: SpaceTag,
    pub alpha_percent: f64,
    pub rrd_alpha: f64,
    pub dcr_ratio: f64,
    pub privacy_score: f64,
    pub bootstrap: BootstrapSummary,
    pub sizes: Sizes,
    pub timing_seconds: f64,
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Bootstrap distribution of the privacy score over resamples of the
/// synthetic records. Each resample reuses the cached per-record indicator
/// "SRD below RRD_α", so a resample costs O(|D̂|).
pub fn bootstrap_scores(
    below: &[bool],
    alpha_percent: f64,
    n_resamples: usize,
    seed: u64,
) -> Vec<f64> {
    let n = below.len();
    (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
            let hits = (0..n).filter(|_| below[rng.random_range(0..n)]).count();
            score_from_fraction(hits as f64 / n as f64, alpha_percent)
        })
        .collect()
}

/// Full DCR evaluation: SRD, RRD, ratio, privacy score and bootstrap
/// confidence interval.
pub fn bootstrap_score(
    space: &DistanceSpace,
    alpha_percent: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<PrivacyScoreReport> {
    check_alpha(alpha_percent)?;
    if n_resamples < 2 {
        return Err(Error::Parameter("bootstrap needs at least 2 resamples".into()));
    }
    let start = Instant::now();
    let srd = srd(space.synthetic.view(), space.d1.view())?;
    let rrd = rrd(space.d1.view(), space.d2.view())?;
    let ratio = dcr_ratio(&srd, &rrd, alpha_percent)?;
    let below: Vec<bool> = srd.values.iter().map(|&d| d < ratio.rrd_alpha).collect();
    let mut scores = bootstrap_scores(&below, alpha_percent, n_resamples, seed);
    let std = sample_std(&scores);
    scores.sort_by(f64::total_cmp);
    Ok(PrivacyScoreReport {
        space: space.tag,
        alpha_percent,
        rrd_alpha: ratio.rrd_alpha,
        dcr_ratio: ratio.ratio,
        privacy_score: score_from_fraction(ratio.fraction_below, alpha_percent),
        bootstrap: BootstrapSummary {
            std,
            lo95: nearest_rank_percentile(&scores, 2.5),
            hi95: nearest_rank_percentile(&scores, 97.5),
            n: n_resamples,
        },
        sizes: space.sizes(),
        timing_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn nd(values: Vec<f64>, kind: DistanceKind) -> NearestDistances {
        NearestDistances { values, kind }
    }

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
    }

    #[test]
    fn identical_query_gives_zero() {
        let r = array![[1.0, 2.0], [3.0, 4.0]];
        let q = array![[3.0, 4.0]];
        assert_eq!(srd(q.view(), r.view()).unwrap().values, vec![0.0]);
    }

    #[test]
    fn empty_references_error() {
        let r = Array2::<f64>::zeros((0, 2));
        let q = array![[3.0, 4.0]];
        assert!(matches!(srd(q.view(), r.view()), Err(Error::Empty(_))));
    }

    #[test]
    fn rrd_singletons_at_distance_two() {
        let d1 = array![[0.0, 0.0]];
        let d2 = array![[0.0, 2.0]];
        assert_eq!(rrd(d1.view(), d2.view()).unwrap().values, vec![2.0]);
        let d2 = array![[5.0, 5.0], [0.0, 0.0]];
        assert_eq!(rrd(d1.view(), d2.view()).unwrap().values, vec![0.0]);
    }

    #[test]
    fn ratio_examples() {
        // RRD = 1..=1000, α = 2 → nearest rank 20 → RRD_α = 20
        let rrd = nd((1..=1000).map(f64::from).collect(), DistanceKind::Rrd);
        let none = nd(vec![20.0; 1000], DistanceKind::Srd);
        let r = dcr_ratio(&none, &rrd, 2.0).unwrap();
        assert_eq!(r.rrd_alpha, 20.0);
        assert_eq!(r.ratio, 0.0);

        let mut forty: Vec<f64> = vec![0.5; 40];
        forty.extend(vec![100.0; 960]);
        let r = dcr_ratio(&nd(forty, DistanceKind::Srd), &rrd, 2.0).unwrap();
        assert_eq!(r.below, 40);
        assert!((r.ratio - 2.0).abs() < 1e-12);

        let all = nd(vec![0.0; 1000], DistanceKind::Srd);
        let r = dcr_ratio(&all, &rrd, 2.0).unwrap();
        assert!((r.ratio - 50.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_outside_range_is_rejected() {
        let v = nd(vec![1.0], DistanceKind::Srd);
        for alpha in [0.0, 100.0, -1.0, 150.0] {
            assert!(matches!(dcr_ratio(&v, &v, alpha), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn score_anchor_values() {
        assert!((privacy_score(0.0, 2.0) - (-0.02040816326530612)).abs() < 1e-12);
        assert_eq!(privacy_score(50.0, 2.0), 1.0);
        assert_eq!(privacy_score(1.0, 2.0), 0.0);
        assert!((score_floor(2.0) - privacy_score(0.0, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_indicator_has_zero_spread() {
        let scores = bootstrap_scores(&[true; 50], 2.0, 200, 1);
        assert!(scores.iter().all(|&s| s == 1.0));
        assert_eq!(sample_std(&scores), 0.0);
    }

    fn random_space(seed: u64) -> DistanceSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DistanceSpace {
            tag: SpaceTag::Raw,
            synthetic: gaussian(300, 4, &mut rng),
            d1: gaussian(300, 4, &mut rng),
            d2: gaussian(300, 4, &mut rng),
        }
    }

    #[test]
    fn seeded_bootstrap_is_reproducible() {
        let space = random_space(4);
        let mut a = bootstrap_score(&space, 2.0, 300, 11).unwrap();
        let mut b = bootstrap_score(&space, 2.0, 300, 11).unwrap();
        a.timing_seconds = 0.0;
        b.timing_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn exact_copy_scores_one() {
        let mut space = random_space(5);
        space.synthetic = space.d1.clone();
        let rep = bootstrap_score(&space, 2.0, 100, 0).unwrap();
        assert_eq!(rep.privacy_score, 1.0);
        assert!((rep.dcr_ratio - 50.0).abs() < 1e-12);
        assert_eq!(rep.bootstrap.std, 0.0);
    }

    #[test]
    fn identity_embedding_reproduces_raw_scores() {
        let space = random_space(6);
        let raw = bootstrap_score(&space, 2.0, 100, 3).unwrap();
        let wrap = |m: &Array2<f64>| EncodedMatrix {
            values: m.clone(),
            column_map: Vec::new(),
            encoding: crate::tabular::Encoding::Embedded,
        };
        let embedded = DistanceSpace::new(
            SpaceTag::Embedded,
            wrap(&space.synthetic),
            wrap(&space.d1),
            wrap(&space.d2),
        )
        .unwrap();
        let emb = bootstrap_score(&embedded, 2.0, 100, 3).unwrap();
        assert_eq!(raw.privacy_score, emb.privacy_score);
        assert_eq!(raw.rrd_alpha, emb.rrd_alpha);
        assert_eq!(raw.bootstrap, emb.bootstrap);
        assert_eq!(emb.space, SpaceTag::Embedded);
    }

    /// Toy model: D₁, D₂ fixed; synthetic records are a fresh mix of copies
    /// of D₁ rows (probability 0.1) and independent draws. The spread of the
    /// score over independently simulated synthetic sets is the oracle for
    /// the bootstrap standard deviation of a single set.
    #[test]
    fn bootstrap_std_tracks_resimulation_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dim = 3;
        let n = 1000;
        let d1 = gaussian(n, dim, &mut rng);
        let d2 = gaussian(n, dim, &mut rng);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut s = gaussian(n, dim, rng);
            for i in 0..n {
                if rng.random::<f64>() < 0.1 {
                    let j = rng.random_range(0..n);
                    s.row_mut(i).assign(&d1.row(j));
                }
            }
            s
        };
        let rrd_v = rrd(d1.view(), d2.view()).unwrap();
        let mut scores = Vec::new();
        for _ in 0..1000 {
            let s = draw(&mut rng);
            let r = dcr_ratio(&srd(s.view(), d1.view()).unwrap(), &rrd_v, 2.0).unwrap();
            scores.push(privacy_score(r.ratio, 2.0));
        }
        let oracle_std = sample_std(&scores);
        let space = DistanceSpace {
            tag: SpaceTag::Raw,
            synthetic: draw(&mut rng),
            d1,
            d2,
        };
        let rep = bootstrap_score(&space, 2.0, 1000, 5).unwrap();
        let rel = (rep.bootstrap.std - oracle_std).abs() / oracle_std;
        assert!(rel < 0.2, "bootstrap {} vs oracle {}", rep.bootstrap.std, oracle_std);
    }

    proptest! {
        #[test]
        fn score_within_bounds(
            srd_v in proptest::collection::vec(0.0f64..10.0, 1..200),
            rrd_v in proptest::collection::vec(0.0f64..10.0, 1..200),
            alpha in 0.5f64..50.0,
        ) {
            let r = dcr_ratio(&nd(srd_v, DistanceKind::Srd), &nd(rrd_v, DistanceKind::Rrd), alpha).unwrap();
            let s = score_from_fraction(r.fraction_below, alpha);
            prop_assert!(s >= score_floor(alpha) - 1e-12);
            prop_assert!(s <= 1.0 + 1e-12);
            prop_assert!((s - privacy_score(r.ratio, alpha)).abs() < 1e-9);
        }

        #[test]
        fn adding_close_record_never_lowers_score(
            srd_v in proptest::collection::vec(0.0f64..10.0, 1..100),
            rrd_v in proptest::collection::vec(0.0f64..10.0, 1..100),
            extra in 0.0f64..10.0,
        ) {
            let rrd = nd(rrd_v, DistanceKind::Rrd);
            let base = dcr_ratio(&nd(srd_v.clone(), DistanceKind::Srd), &rrd, 2.0).unwrap();
            let mut more = srd_v;
            more.push(extra);
            let next = dcr_ratio(&nd(more, DistanceKind::Srd), &rrd, 2.0).unwrap();
            let (b, n) = (
                privacy_score(base.ratio, 2.0),
                privacy_score(next.ratio, 2.0),
            );
            if extra < base.rrd_alpha {
                prop_assert!(n >= b - 1e-12);
            } else {
                prop_assert!(n <= b + 1e-12);
            }
        }
    }
}
