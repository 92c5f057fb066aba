//! Exact GBS probabilities for photon-number and threshold (click)
//! detection, pattern enumeration under a photon cutoff, and a seeded exact
//! sampler.
//!
//! Photon-number probabilities follow
//! `P(n) = sqrt(det(I - A_W^2)) Haf(A_n)^2 prod_k w_k^{n_k} / n_k!`.
//! Click probabilities are inclusion-exclusion sums over vacuum marginals:
//! the probability that every mode in a set `M` sees zero photons is
//! `1 / sqrt(det Q_M)` with `Q_M` the submatrix of `Q = (I - X calA)^-1`
//! on rows/columns `{k, k+m : k in M}`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{hafnian, reduce_matrix, ReductionSpec};
use crate::rng::rng_from;
use crate::state::{apply_waw, build_q, AMatrix, WawParams};

/// Photon-number detector outcome `n = (n_1, ..., n_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhotonPattern {
    counts: Vec<u32>,
}

impl PhotonPattern {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Threshold-detector image: `x_k = 1` iff `n_k > 0`.
    pub fn to_clicks(&self) -> ClickPattern {
        ClickPattern::new(self.counts.iter().map(|&n| (n > 0) as u8).collect()).unwrap()
    }
}

/// Threshold-detector outcome, one bit per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClickPattern {
    bits: Vec<u8>,
}

impl ClickPattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("click pattern bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    /// Bit vector of the big-endian binary expansion of `index` (mode 0 is
    /// the most significant bit); this is lexicographic order over patterns.
    pub fn from_index(index: u32, m: usize) -> Self {
        let bits = (0..m)
            .map(|k| ((index >> (m - 1 - k)) & 1) as u8)
            .collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Detector type of a sample batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    Photon,
    Click,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Photon => "photon",
            Detector::Click => "click",
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "photon" => Ok(Detector::Photon),
            "click" => Ok(Detector::Click),
            other => Err(Error::InvalidConfig(format!("unknown detector {other:?}"))),
        }
    }
}

/// A batch of i.i.d. detector outcomes plus its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub detector: Detector,
    pub m: usize,
    pub seed: u64,
    samples: Vec<Vec<u32>>,
}

impl SampleBatch {
    pub fn new(detector: Detector, m: usize, seed: u64, samples: Vec<Vec<u32>>) -> Result<Self> {
        for s in &samples {
            if s.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: s.len(),
                });
            }
            if detector == Detector::Click && s.iter().any(|&b| b > 1) {
                return Err(Error::InvalidConfig(
                    "click samples must be 0/1 valued".into(),
                ));
            }
        }
        Ok(Self {
            detector,
            m,
            seed,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<u32>] {
        &self.samples
    }

    /// Arithmetic per-mode means: `<n_k>_data` or `<x_k>_data`.
    pub fn empirical_means(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.m];
        for s in &self.samples {
            for (k, &v) in s.iter().enumerate() {
                acc[k] += v as f64;
            }
        }
        let t = self.samples.len().max(1) as f64;
        acc.iter_mut().for_each(|v| *v /= t);
        acc
    }

    /// `F_data = sum_k <n_k>_data f^(k)`; depends only on the batch and the
    /// feature vectors.
    pub fn f_data(&self, features: &[DVector<f64>]) -> Result<DVector<f64>> {
        if features.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: features.len(),
            });
        }
        let d = features.first().map_or(0, |f| f.len());
        let means = self.empirical_means();
        let mut out = DVector::zeros(d);
        for (k, f) in features.iter().enumerate() {
            out += f * means[k];
        }
        Ok(out)
    }

    /// Text format: header `m=<m> t=<T> detector=<photon|click> seed=<seed>`,
    /// then one space-separated pattern per line.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "m={} t={} detector={} seed={}",
            self.m,
            self.samples.len(),
            self.detector.name(),
            self.seed
        )?;
        for s in &self.samples {
            let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::BatchParse {
                line: 1,
                msg: "missing header".into(),
            })??;
        let mut m = None;
        let mut t = None;
        let mut detector = None;
        let mut seed = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or(Error::BatchParse {
                line: 1,
                msg: format!("bad header field {field:?}"),
            })?;
            match key {
                "m" => m = value.parse::<usize>().ok(),
                "t" => t = value.parse::<usize>().ok(),
                "detector" => detector = value.parse::<Detector>().ok(),
                "seed" => seed = value.parse::<u64>().ok(),
                _ => {}
            }
        }
        let (m, t, detector, seed) = match (m, t, detector, seed) {
            (Some(m), Some(t), Some(d), Some(s)) => (m, t, d, s),
            _ => {
                return Err(Error::BatchParse {
                    line: 1,
                    msg: format!("incomplete header {header:?}"),
                })
            }
        };
        let mut samples = Vec::with_capacity(t);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<u32>, _> =
                line.split_whitespace().map(|v| v.parse::<u32>()).collect();
            let row = row.map_err(|_| Error::BatchParse {
                line: idx + 2,
                msg: format!("bad integer in {line:?}"),
            })?;
            samples.push(row);
        }
        if samples.len() != t {
            return Err(Error::BatchParse {
                line: 0,
                msg: format!("header says t={t} but {} rows found", samples.len()),
            });
        }
        SampleBatch::new(detector, m, seed, samples)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Exact photon-number probability
/// `P(n) = sqrt(det(I - A_W^2)) Haf(A_n)^2 prod_k w_k^{n_k} / n_k!`.
/// Odd-total patterns have probability zero.
pub fn prob_photon(a: &AMatrix, p: &WawParams, pattern: &PhotonPattern) -> Result<f64> {
    if pattern.len() != a.modes() {
        return Err(Error::DimensionMismatch {
            expected: a.modes(),
            got: pattern.len(),
        });
    }
    let aw = apply_waw(a, p)?;
    let engine = PhotonProbEngine::new(a, p, &aw);
    Ok(engine.prob(pattern))
}

/// Shared per-state factors for evaluating many photon probabilities.
struct PhotonProbEngine<'a> {
    base: &'a AMatrix,
    weights: Vec<f64>,
    norm: f64,
}

impl<'a> PhotonProbEngine<'a> {
    fn new(base: &'a AMatrix, p: &WawParams, aw: &AMatrix) -> Self {
        Self {
            base,
            weights: p.weights(),
            norm: aw.normalization(),
        }
    }

    fn prob(&self, pattern: &PhotonPattern) -> f64 {
        if pattern.total() % 2 == 1 {
            return 0.0;
        }
        let reduced = reduce_matrix(
            self.base.matrix(),
            &ReductionSpec::new(pattern.counts().to_vec()),
        )
        .expect("pattern length checked by caller");
        let haf = hafnian(&reduced);
        if haf == 0.0 {
            return 0.0;
        }
        let mut weight_factor = 1.0;
        for (k, &n) in pattern.counts().iter().enumerate() {
            if n > 0 {
                weight_factor *= self.weights[k].powi(n as i32) / factorial(n);
            }
        }
        self.norm * haf * haf * weight_factor
    }
}

/// Result of photon-pattern enumeration under a total-photon cutoff.
#[derive(Clone, Debug)]
pub struct PhotonEnumeration {
    /// Lexicographically ordered patterns with their probabilities.
    pub patterns: Vec<(PhotonPattern, f64)>,
    /// Total probability captured below the cutoff.
    pub captured_mass: f64,
    pub cutoff: u32,
}

/// Largest number of patterns an enumeration may touch.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

fn pattern_count(m: usize, n_max: u32) -> u64 {
    // C(n_max + m, m), saturating.
    let mut acc: u64 = 1;
    for i in 1..=m as u64 {
        acc = acc.saturating_mul(n_max as u64 + i) / i;
        if acc > ENUMERATION_BUDGET * 2 {
            return u64::MAX;
        }
    }
    acc
}

/// Enumerates every pattern with `sum n_k <= n_max` in lexicographic order
/// (mode 0 most significant) together with its probability.
pub fn enumerate_photon(a: &AMatrix, p: &WawParams, n_max: u32) -> Result<PhotonEnumeration> {
    let m = a.modes();
    if pattern_count(m, n_max) > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "photon pattern enumeration",
            limit: format!("{ENUMERATION_BUDGET} patterns"),
        });
    }
    let aw = apply_waw(a, p)?;
    let engine = PhotonProbEngine::new(a, p, &aw);
    let mut patterns = Vec::new();
    let mut current = vec![0u32; m];
    let mut mass = 0.0;
    enumerate_rec(&engine, &mut current, 0, n_max, &mut patterns, &mut mass);
    Ok(PhotonEnumeration {
        patterns,
        captured_mass: mass,
        cutoff: n_max,
    })
}

fn enumerate_rec(
    engine: &PhotonProbEngine,
    current: &mut Vec<u32>,
    mode: usize,
    budget: u32,
    out: &mut Vec<(PhotonPattern, f64)>,
    mass: &mut f64,
) {
    if mode == current.len() {
        let pattern = PhotonPattern::new(current.clone());
        let prob = engine.prob(&pattern);
        *mass += prob;
        out.push((pattern, prob));
        return;
    }
    for n in 0..=budget {
        current[mode] = n;
        enumerate_rec(engine, current, mode + 1, budget - n, out, mass);
    }
    current[mode] = 0;
}

/// Vacuum-marginal machinery for threshold detection: caches
/// `P(all modes in M vacuum) = 1 / sqrt(det Q_M)` by mode bitmask.
pub(crate) struct ClickKernel {
    m: usize,
    q: DMatrix<f64>,
    cache: HashMap<u32, f64>,
}

impl ClickKernel {
    pub(crate) fn new(state: &AMatrix) -> Self {
        Self {
            m: state.modes(),
            q: build_q(state),
            cache: HashMap::new(),
        }
    }

    /// Probability that every mode in `mask` shows zero photons.
    pub(crate) fn p_vacuum(&mut self, mask: u32) -> Result<f64> {
        if mask == 0 {
            return Ok(1.0);
        }
        if let Some(&v) = self.cache.get(&mask) {
            return Ok(v);
        }
        let modes: Vec<usize> = (0..self.m).filter(|&k| mask & (1 << k) != 0).collect();
        let idx: Vec<usize> = modes
            .iter()
            .copied()
            .chain(modes.iter().map(|&k| k + self.m))
            .collect();
        let n = idx.len();
        let sub = DMatrix::from_fn(n, n, |r, c| self.q[(idx[r], idx[c])]);
        let det = sub.lu().determinant();
        if det <= 0.0 {
            return Err(Error::UnphysicalState {
                max_singular_value: f64::NAN,
                bound: 1.0,
            });
        }
        let v = 1.0 / det.sqrt();
        self.cache.insert(mask, v);
        Ok(v)
    }

    /// Exact click probability by inclusion-exclusion over the clicked set.
    pub(crate) fn prob(&mut self, x: &ClickPattern) -> Result<f64> {
        let mut clicked: u32 = 0;
        let mut unclicked: u32 = 0;
        for (k, &b) in x.bits().iter().enumerate() {
            if b == 1 {
                clicked |= 1 << k;
            } else {
                unclicked |= 1 << k;
            }
        }
        let mut acc = 0.0;
        let mut t = clicked;
        loop {
            let sign = if (t.count_ones() & 1) == 0 { 1.0 } else { -1.0 };
            acc += sign * self.p_vacuum(t | unclicked)?;
            if t == 0 {
                break;
            }
            t = (t - 1) & clicked;
        }
        Ok(acc.max(0.0))
    }

    /// Joint probability of the first `bits.len()` modes showing exactly
    /// this click prefix (remaining modes unconstrained).
    fn prefix_prob(&mut self, bits: &[u8]) -> Result<f64> {
        let mut clicked: u32 = 0;
        let mut unclicked: u32 = 0;
        for (k, &b) in bits.iter().enumerate() {
            if b == 1 {
                clicked |= 1 << k;
            } else {
                unclicked |= 1 << k;
            }
        }
        let mut acc = 0.0;
        let mut t = clicked;
        loop {
            let sign = if (t.count_ones() & 1) == 0 { 1.0 } else { -1.0 };
            acc += sign * self.p_vacuum(t | unclicked)?;
            if t == 0 {
                break;
            }
            t = (t - 1) & clicked;
        }
        Ok(acc.clamp(0.0, 1.0))
    }
}

/// Exact threshold-detector probability of one click pattern.
pub fn prob_click(a: &AMatrix, p: &WawParams, x: &ClickPattern) -> Result<f64> {
    if x.len() != a.modes() {
        return Err(Error::DimensionMismatch {
            expected: a.modes(),
            got: x.len(),
        });
    }
    let aw = apply_waw(a, p)?;
    ClickKernel::new(&aw).prob(x)
}

/// Mode budget for exact click-pattern enumeration.
pub const CLICK_ENUM_MAX_MODES: usize = 12;

/// All `2^m` click patterns in lexicographic order with probabilities
/// (m <= 12).
pub fn enumerate_click(a: &AMatrix, p: &WawParams) -> Result<Vec<(ClickPattern, f64)>> {
    let aw = apply_waw(a, p)?;
    enumerate_click_state(&aw)
}

pub(crate) fn enumerate_click_state(state: &AMatrix) -> Result<Vec<(ClickPattern, f64)>> {
    let m = state.modes();
    if m > CLICK_ENUM_MAX_MODES {
        return Err(Error::BudgetExceeded {
            what: "click pattern enumeration modes",
            limit: CLICK_ENUM_MAX_MODES.to_string(),
        });
    }
    let mut kernel = ClickKernel::new(state);
    let mut out = Vec::with_capacity(1 << m);
    for idx in 0..(1u32 << m) {
        let x = ClickPattern::from_index(idx, m);
        let prob = kernel.prob(&x)?;
        out.push((x, prob));
    }
    Ok(out)
}

/// Mode budget for click sampling.
pub const CLICK_SAMPLE_MAX_MODES: usize = 24;
/// Captured-mass floor for the photon sampler.
pub const PHOTON_SAMPLE_MIN_MASS: f64 = 0.999;
/// Per-draw attempt cap for conditioned sampling (acceptance floor 1e-6).
const CONDITION_MAX_ATTEMPTS: usize = 1_000_000;

/// Options for [`sample`].
#[derive(Clone, Copy, Debug)]
pub struct SampleOpts {
    /// Total-photon cutoff used to enumerate the photon distribution.
    pub photon_cutoff: u32,
    /// If set, rejection-sample until each draw has exactly this many clicks.
    pub condition_clicks: Option<usize>,
}

impl Default for SampleOpts {
    fn default() -> Self {
        Self {
            photon_cutoff: 20,
            condition_clicks: None,
        }
    }
}

/// Draws `t` i.i.d. samples from the exact detector distribution of the
/// state `apply_waw(a, p)`, deterministically from `seed`.
///
/// Photon mode enumerates the distribution under `opts.photon_cutoff` and
/// inverts the cumulative sum with one uniform per draw (patterns in
/// lexicographic order); the enumeration must capture at least
/// [`PHOTON_SAMPLE_MIN_MASS`] and is renormalized over the captured set.
/// Click mode enumerates all patterns for m <= 12 and otherwise samples
/// mode-by-mode through chain-rule conditionals built from prefix
/// inclusion-exclusion sums (one uniform per mode, mode 0 first).
pub fn sample(
    a: &AMatrix,
    p: &WawParams,
    detector: Detector,
    t: usize,
    seed: u64,
    opts: SampleOpts,
) -> Result<SampleBatch> {
    let m = a.modes();
    let mut rng = rng_from(seed);
    let aw = apply_waw(a, p)?;
    let mut samples = Vec::with_capacity(t);

    match detector {
        Detector::Photon => {
            let enumeration = enumerate_photon(a, p, opts.photon_cutoff)?;
            if enumeration.captured_mass < PHOTON_SAMPLE_MIN_MASS {
                return Err(Error::CutoffMassTooLow {
                    mass: enumeration.captured_mass,
                    required: PHOTON_SAMPLE_MIN_MASS,
                });
            }
            let cumsum: Vec<f64> = enumeration
                .patterns
                .iter()
                .scan(0.0, |acc, (_, p)| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            let total = enumeration.captured_mass;
            let mut draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> {
                let u: f64 = rng.random::<f64>() * total;
                let idx = cumsum.partition_point(|&c| c <= u).min(cumsum.len() - 1);
                enumeration.patterns[idx].0.counts().to_vec()
            };
            for _ in 0..t {
                samples.push(draw_conditioned(&mut rng, &mut draw, opts.condition_clicks)?);
            }
        }
        Detector::Click => {
            if m > CLICK_SAMPLE_MAX_MODES {
                return Err(Error::BudgetExceeded {
                    what: "click sampling modes",
                    limit: CLICK_SAMPLE_MAX_MODES.to_string(),
                });
            }
            if m <= CLICK_ENUM_MAX_MODES {
                let enumeration = enumerate_click_state(&aw)?;
                let cumsum: Vec<f64> = enumeration
                    .iter()
                    .scan(0.0, |acc, (_, p)| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect();
                let total = cumsum.last().copied().unwrap_or(1.0);
                let mut draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> {
                    let u: f64 = rng.random::<f64>() * total;
                    let idx = cumsum.partition_point(|&c| c <= u).min(cumsum.len() - 1);
                    enumeration[idx].0.bits().iter().map(|&b| b as u32).collect()
                };
                for _ in 0..t {
                    samples.push(draw_conditioned(&mut rng, &mut draw, opts.condition_clicks)?);
                }
            } else {
                let mut kernel = ClickKernel::new(&aw);
                let mut bits = Vec::with_capacity(m);
                let mut draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Vec<u32>> {
                    bits.clear();
                    let mut p_prefix = 1.0f64;
                    for _k in 0..m {
                        bits.push(0);
                        let p0 = kernel.prefix_prob(&bits)?;
                        let cond0 = if p_prefix > 0.0 {
                            (p0 / p_prefix).clamp(0.0, 1.0)
                        } else {
                            1.0
                        };
                        let u: f64 = rng.random();
                        if u < cond0 {
                            p_prefix = p0;
                        } else {
                            *bits.last_mut().unwrap() = 1;
                            p_prefix = (p_prefix - p0).max(0.0);
                        }
                    }
                    Ok(bits.iter().map(|&b| b as u32).collect())
                };
                for _ in 0..t {
                    samples.push(draw_conditioned_fallible(
                        &mut rng,
                        &mut draw,
                        opts.condition_clicks,
                    )?);
                }
            }
        }
    }
    SampleBatch::new(detector, m, seed, samples)
}

fn clicks_of(sample: &[u32]) -> usize {
    sample.iter().filter(|&&v| v > 0).count()
}

fn draw_conditioned(
    rng: &mut rand_chacha::ChaCha8Rng,
    draw: &mut impl FnMut(&mut rand_chacha::ChaCha8Rng) -> Vec<u32>,
    condition: Option<usize>,
) -> Result<Vec<u32>> {
    match condition {
        None => Ok(draw(rng)),
        Some(k) => {
            for attempt in 1..=CONDITION_MAX_ATTEMPTS {
                let s = draw(rng);
                if clicks_of(&s) == k {
                    return Ok(s);
                }
                if attempt == CONDITION_MAX_ATTEMPTS {
                    break;
                }
            }
            Err(Error::ConditionTooRare {
                attempts: CONDITION_MAX_ATTEMPTS,
                min_acceptance: 1e-6,
            })
        }
    }
}

fn draw_conditioned_fallible(
    rng: &mut rand_chacha::ChaCha8Rng,
    draw: &mut impl FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<Vec<u32>>,
    condition: Option<usize>,
) -> Result<Vec<u32>> {
    match condition {
        None => draw(rng),
        Some(k) => {
            for attempt in 1..=CONDITION_MAX_ATTEMPTS {
                let s = draw(rng)?;
                if clicks_of(&s) == k {
                    return Ok(s);
                }
                if attempt == CONDITION_MAX_ATTEMPTS {
                    break;
                }
            }
            Err(Error::ConditionTooRare {
                attempts: CONDITION_MAX_ATTEMPTS,
                min_acceptance: 1e-6,
            })
        }
    }
}
