//! Reproducible channel ensembles: fading models, counter-based sampling,
//! quantized transmitter-side views, and Monte Carlo estimation helpers.
//!
//! Every sample is a pure function of `(seed, sample index)` — one ChaCha
//! stream per `(index, link)` — so results are independent of evaluation
//! order and worker count.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Scalar;
use num_complex::Complex;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

const MAX_LINKS: usize = 16;
/// Proposal cap for rejection sampling into a quantizer cell.
const REJECTION_CAP: usize = 10_000;

/// Per-entry fading model of one channel matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingSpec<T> {
    /// i.i.d. complex Gaussian CN(mean, variance) entries.
    ComplexGaussianIid { mean: Complex<T>, variance: T },
    /// Entries of this link and the next are CN(0,1) pairs with
    /// `E[conj(h1) h2] = rho`; both links must carry this spec.
    CorrelatedPair { rho: T },
    /// i.i.d. real Gaussian N(mean, variance) entries.
    RealGaussianIid { mean: T, variance: T },
    /// i.i.d. Uniform[0,1] real entries.
    Uniform01Iid,
    /// Deterministic channel: every sample is this matrix.
    Fixed { matrix: ComplexMatrix<T> },
}

impl<T: Scalar> FadingSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingSpec::ComplexGaussianIid { variance, .. } => {
                if !(*variance > T::zero()) {
                    return Err(Error::InvalidParameter(
                        "complex Gaussian variance must be > 0".into(),
                    ));
                }
            }
            FadingSpec::CorrelatedPair { rho } => {
                if !(rho.abs() <= T::one()) {
                    return Err(Error::InvalidParameter("|rho| must be <= 1".into()));
                }
            }
            FadingSpec::RealGaussianIid { variance, .. } => {
                if !(*variance > T::zero()) {
                    return Err(Error::InvalidParameter(
                        "real Gaussian variance must be > 0".into(),
                    ));
                }
            }
            FadingSpec::Uniform01Iid => {}
            FadingSpec::Fixed { matrix } => {
                if !matrix.is_finite() {
                    return Err(Error::InvalidParameter(
                        "fixed channel matrix must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether entries are real-valued (imaginary parts stay exactly zero,
    /// and the quantizer only acts on the real component).
    pub fn is_real(&self) -> bool {
        match self {
            FadingSpec::RealGaussianIid { .. } | FadingSpec::Uniform01Iid => true,
            FadingSpec::Fixed { matrix } => {
                matrix.entries().iter().all(|z| z.im == T::zero())
            }
            _ => false,
        }
    }

    /// Default quantizer range per component: mean +- 3 standard deviations
    /// of the component marginal (exact support for Uniform[0,1]).
    pub fn default_quant_range(&self) -> QuantRange<T> {
        let three = T::of(3.0);
        match self {
            FadingSpec::ComplexGaussianIid { mean, variance } => {
                let sd = (*variance / T::of(2.0)).sqrt();
                QuantRange {
                    re: (mean.re - three * sd, mean.re + three * sd),
                    im: (mean.im - three * sd, mean.im + three * sd),
                }
            }
            FadingSpec::CorrelatedPair { .. } => {
                let sd = T::of(0.5).sqrt();
                QuantRange {
                    re: (-three * sd, three * sd),
                    im: (-three * sd, three * sd),
                }
            }
            FadingSpec::RealGaussianIid { mean, variance } => {
                let sd = variance.sqrt();
                QuantRange {
                    re: (*mean - three * sd, *mean + three * sd),
                    im: (T::zero(), T::zero()),
                }
            }
            FadingSpec::Uniform01Iid => QuantRange {
                re: (T::zero(), T::one()),
                im: (T::zero(), T::zero()),
            },
            FadingSpec::Fixed { matrix } => {
                let mut lo = T::infinity();
                let mut hi = T::neg_infinity();
                for z in matrix.entries() {
                    lo = lo.min(z.re).min(z.im);
                    hi = hi.max(z.re).max(z.im);
                }
                if !lo.is_finite() || lo >= hi {
                    let c = if lo.is_finite() { lo } else { T::zero() };
                    lo = c - T::one();
                    hi = c + T::one();
                }
                QuantRange { re: (lo, hi), im: (lo, hi) }
            }
        }
    }
}

fn default_none<U>() -> Option<U> {
    None
}

/// Quantizer input range per entry component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantRange<T> {
    pub re: (T, T),
    pub im: (T, T),
}

/// Transmitter-side channel knowledge model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CsitModel<T> {
    /// Transmitter sees the true matrices.
    Perfect,
    /// Transmitter knows only the fading distribution.
    None,
    /// Per-entry scalar quantization with `bits[link]` bits per component;
    /// `ranges` overrides the per-link default derived from the fading spec.
    Quantized {
        bits: Vec<u32>,
        #[serde(default = "default_none", skip_serializing_if = "Option::is_none")]
        ranges: Option<Vec<QuantRange<T>>>,
    },
}

/// Dimensions and fading model of one channel link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec<T> {
    pub rows: usize,
    pub cols: usize,
    pub fading: FadingSpec<T>,
}

impl<T: Scalar> LinkSpec<T> {
    pub fn new(rows: usize, cols: usize, fading: FadingSpec<T>) -> Self {
        Self { rows, cols, fading }
    }
}

/// One draw of the ensemble: the true channel matrices and (depending on the
/// CSIT model) the transmitter-side view.
#[derive(Clone, Debug)]
pub struct ChannelSample<T> {
    pub index: usize,
    pub true_matrices: Vec<ComplexMatrix<T>>,
    pub tx_view: Option<Vec<ComplexMatrix<T>>>,
}

/// Seeded, reproducible channel ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig<T> {
    pub seed: u64,
    pub sample_count: usize,
    pub links: Vec<LinkSpec<T>>,
    pub csit: CsitModel<T>,
}

/// Materialized channel draws, one `Vec<ComplexMatrix>` per sample in link
/// order. This is what the rate evaluators and optimizers consume, so
/// compared quantities automatically share common random numbers.
#[derive(Clone, Debug)]
pub struct SampleSet<T> {
    samples: Vec<Vec<ComplexMatrix<T>>>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn from_samples(samples: Vec<Vec<ComplexMatrix<T>>>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize) -> &[ComplexMatrix<T>] {
        &self.samples[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<ComplexMatrix<T>>> {
        self.samples.iter()
    }

    pub fn par_iter(&self) -> impl IndexedParallelIterator<Item = &Vec<ComplexMatrix<T>>> {
        self.samples.par_iter()
    }

    /// Map every sample's links into a new set (e.g. to build the effective
    /// channel of a derived problem on common randomness).
    pub fn map_links(
        &self,
        f: impl Fn(&[ComplexMatrix<T>]) -> Vec<ComplexMatrix<T>> + Sync,
    ) -> Self {
        Self {
            samples: self.samples.iter().map(|s| f(s)).collect(),
        }
    }
}

impl<T: Scalar> EnsembleConfig<T> {
    pub fn new(seed: u64, sample_count: usize, links: Vec<LinkSpec<T>>, csit: CsitModel<T>) -> Result<Self> {
        let cfg = Self { seed, sample_count, links, csit };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidParameter("sample_count must be >= 1".into()));
        }
        if self.links.is_empty() || self.links.len() > MAX_LINKS {
            return Err(Error::InvalidParameter(format!(
                "link count must be in 1..={MAX_LINKS}"
            )));
        }
        for (i, l) in self.links.iter().enumerate() {
            if l.rows == 0 || l.cols == 0 {
                return Err(Error::InvalidParameter(format!("link {i} has a zero dimension")));
            }
            l.fading.validate()?;
        }
        // CorrelatedPair links must come in consecutive same-shape pairs.
        let mut i = 0;
        while i < self.links.len() {
            if let FadingSpec::CorrelatedPair { rho } = self.links[i].fading {
                let partner = self.links.get(i + 1).ok_or_else(|| {
                    Error::InvalidParameter("correlated_pair link without a partner".into())
                })?;
                match partner.fading {
                    FadingSpec::CorrelatedPair { rho: rho2 } if rho2 == rho => {}
                    _ => {
                        return Err(Error::InvalidParameter(
                            "correlated_pair links must be consecutive with equal rho".into(),
                        ))
                    }
                }
                if partner.rows != self.links[i].rows || partner.cols != self.links[i].cols {
                    return Err(Error::InvalidParameter(
                        "correlated_pair links must share a shape".into(),
                    ));
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        if let CsitModel::Quantized { bits, ranges } = &self.csit {
            if bits.len() != self.links.len() {
                return Err(Error::InvalidParameter(
                    "quantized CSIT needs one bit count per link".into(),
                ));
            }
            if let Some(rs) = ranges {
                if rs.len() != self.links.len() {
                    return Err(Error::InvalidParameter(
                        "quantized CSIT range override needs one range per link".into(),
                    ));
                }
                for r in rs {
                    if !(r.re.0 < r.re.1) {
                        return Err(Error::InvalidParameter(
                            "quantizer range must satisfy lower < upper".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn link_rng(&self, index: usize, link: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((index as u64) << 4) | link as u64);
        rng
    }

    /// Draw sample `index`; a pure function of `(seed, index)`.
    pub fn draw(&self, index: usize) -> ChannelSample<T> {
        assert!(index < self.sample_count, "sample index out of range");
        let true_matrices = self.draw_true(index);
        let tx_view = match &self.csit {
            CsitModel::None => None,
            CsitModel::Perfect => Some(true_matrices.clone()),
            CsitModel::Quantized { .. } => Some(self.quantize_links(&true_matrices)),
        };
        ChannelSample { index, true_matrices, tx_view }
    }

    fn draw_true(&self, index: usize) -> Vec<ComplexMatrix<T>> {
        let mut out: Vec<ComplexMatrix<T>> = Vec::with_capacity(self.links.len());
        let mut li = 0;
        while li < self.links.len() {
            let link = &self.links[li];
            match &link.fading {
                FadingSpec::CorrelatedPair { rho } => {
                    let mut rng_a = self.link_rng(index, li);
                    let mut rng_b = self.link_rng(index, li + 1);
                    let rho64 = rho.to_f64().unwrap();
                    let cross = (1.0 - rho64 * rho64).max(0.0).sqrt();
                    let mut a = ComplexMatrix::zeros(link.rows, link.cols);
                    let mut b = ComplexMatrix::zeros(link.rows, link.cols);
                    for i in 0..link.rows {
                        for j in 0..link.cols {
                            let za = complex_std_normal(&mut rng_a);
                            let zb = complex_std_normal(&mut rng_b);
                            let h2 = (za.0 * rho64 + zb.0 * cross, za.1 * rho64 + zb.1 * cross);
                            a.set(i, j, Complex::new(T::of(za.0), T::of(za.1)));
                            b.set(i, j, Complex::new(T::of(h2.0), T::of(h2.1)));
                        }
                    }
                    out.push(a);
                    out.push(b);
                    li += 2;
                }
                spec => {
                    let mut rng = self.link_rng(index, li);
                    out.push(draw_iid_link(spec, link.rows, link.cols, &mut rng));
                    li += 1;
                }
            }
        }
        out
    }

    fn quant_range(&self, link: usize) -> QuantRange<T> {
        if let CsitModel::Quantized { ranges: Some(rs), .. } = &self.csit {
            rs[link]
        } else {
            self.links[link].fading.default_quant_range()
        }
    }

    /// Quantized transmitter view of a set of true matrices.
    pub fn quantize_links(&self, mats: &[ComplexMatrix<T>]) -> Vec<ComplexMatrix<T>> {
        let bits = match &self.csit {
            CsitModel::Quantized { bits, .. } => bits,
            _ => panic!("quantize_links requires quantized CSIT"),
        };
        mats.iter()
            .enumerate()
            .map(|(li, m)| {
                let range = self.quant_range(li);
                let real_only = self.links[li].fading.is_real();
                m.map(|z| {
                    let re = quantize_entry(z.re, bits[li], range.re);
                    let im = if real_only {
                        z.im
                    } else {
                        quantize_entry(z.im, bits[li], range.im)
                    };
                    Complex::new(re, im)
                })
            })
            .collect()
    }

    /// Materialize the whole ensemble (true matrices only).
    pub fn materialize(&self) -> SampleSet<T> {
        let samples: Vec<Vec<ComplexMatrix<T>>> = (0..self.sample_count)
            .into_par_iter()
            .map(|i| self.draw_true(i))
            .collect();
        SampleSet { samples }
    }

    /// Materialize `count` draws from the fading distribution conditioned on
    /// quantizing to `view` (rejection sampling per independent unit, capped
    /// at 10^4 proposals; on cap the reproduction point itself is used).
    ///
    /// The draw stream depends only on `(seed, view)`, so memoized results
    /// are identical no matter which outer sample triggered them.
    pub fn materialize_conditional(&self, view: &[ComplexMatrix<T>], count: usize) -> SampleSet<T> {
        let bits = match &self.csit {
            CsitModel::Quantized { bits, .. } => bits.clone(),
            // Without quantization there is nothing to condition on.
            _ => return self.materialize(),
        };
        let seed = splitmix64(self.seed ^ view_hash(view).wrapping_mul(0x9e3779b97f4a7c15));
        let samples: Vec<Vec<ComplexMatrix<T>>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::with_capacity(self.links.len());
                let mut li = 0;
                while li < self.links.len() {
                    let link = &self.links[li];
                    match &link.fading {
                        FadingSpec::CorrelatedPair { rho } => {
                            let mut rng = conditional_rng(seed, i, li);
                            let (a, b) = draw_pair_conditional(
                                link,
                                *rho,
                                bits[li],
                                bits[li + 1],
                                self.quant_range(li),
                                self.quant_range(li + 1),
                                &view[li],
                                &view[li + 1],
                                &mut rng,
                            );
                            out.push(a);
                            out.push(b);
                            li += 2;
                        }
                        spec => {
                            let mut rng = conditional_rng(seed, i, li);
                            out.push(draw_iid_link_conditional(
                                spec,
                                link,
                                bits[li],
                                self.quant_range(li),
                                &view[li],
                                &mut rng,
                            ));
                            li += 1;
                        }
                    }
                }
                out
            })
            .collect();
        SampleSet { samples }
    }
}

fn conditional_rng(seed: u64, index: usize, link: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 4) | link as u64);
    rng
}

fn draw_iid_link<T: Scalar>(
    spec: &FadingSpec<T>,
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> ComplexMatrix<T> {
    match spec {
        FadingSpec::ComplexGaussianIid { mean, variance } => {
            let sd = (variance.to_f64().unwrap() / 2.0).sqrt();
            let (mr, mi) = (mean.re.to_f64().unwrap(), mean.im.to_f64().unwrap());
            ComplexMatrix::from_fn(rows, cols, |_, _| {
                let (z0, z1) = normal_pair(rng);
                Complex::new(T::of(mr + sd * z0), T::of(mi + sd * z1))
            })
        }
        FadingSpec::RealGaussianIid { mean, variance } => {
            let sd = variance.to_f64().unwrap().sqrt();
            let m = mean.to_f64().unwrap();
            ComplexMatrix::from_fn(rows, cols, |_, _| {
                let (z0, _) = normal_pair(rng);
                Complex::new(T::of(m + sd * z0), T::zero())
            })
        }
        FadingSpec::Uniform01Iid => ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex::new(T::of(uniform01(rng)), T::zero())
        }),
        FadingSpec::Fixed { matrix } => {
            assert_eq!((matrix.rows(), matrix.cols()), (rows, cols), "fixed channel shape");
            matrix.clone()
        }
        FadingSpec::CorrelatedPair { .. } => unreachable!("pairs are drawn jointly"),
    }
}

/// One entry proposal for an i.i.d. spec, as (re, im) in f64.
fn propose_entry<T: Scalar>(spec: &FadingSpec<T>, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match spec {
        FadingSpec::ComplexGaussianIid { mean, variance } => {
            let sd = (variance.to_f64().unwrap() / 2.0).sqrt();
            let (z0, z1) = normal_pair(rng);
            (
                mean.re.to_f64().unwrap() + sd * z0,
                mean.im.to_f64().unwrap() + sd * z1,
            )
        }
        FadingSpec::RealGaussianIid { mean, variance } => {
            let (z0, _) = normal_pair(rng);
            (mean.to_f64().unwrap() + variance.to_f64().unwrap().sqrt() * z0, 0.0)
        }
        FadingSpec::Uniform01Iid => (uniform01(rng), 0.0),
        FadingSpec::Fixed { .. } | FadingSpec::CorrelatedPair { .. } => {
            unreachable!("not an i.i.d. proposal spec")
        }
    }
}

fn draw_iid_link_conditional<T: Scalar>(
    spec: &FadingSpec<T>,
    link: &LinkSpec<T>,
    bits: u32,
    range: QuantRange<T>,
    view: &ComplexMatrix<T>,
    rng: &mut ChaCha8Rng,
) -> ComplexMatrix<T> {
    if let FadingSpec::Fixed { matrix } = spec {
        return matrix.clone();
    }
    let real_only = spec.is_real();
    ComplexMatrix::from_fn(link.rows, link.cols, |i, j| {
        let target = view.get(i, j);
        let mut accepted: Option<(f64, f64)> = None;
        for _ in 0..REJECTION_CAP {
            let (re, im) = propose_entry(spec, rng);
            let qre = quantize_entry(T::of(re), bits, range.re);
            let q_ok_re = qre == target.re;
            let q_ok_im = if real_only {
                true
            } else {
                quantize_entry(T::of(im), bits, range.im) == target.im
            };
            if q_ok_re && q_ok_im {
                accepted = Some((re, im));
                break;
            }
        }
        match accepted {
            Some((re, im)) => Complex::new(T::of(re), T::of(im)),
            None => target,
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn draw_pair_conditional<T: Scalar>(
    link: &LinkSpec<T>,
    rho: T,
    bits_a: u32,
    bits_b: u32,
    range_a: QuantRange<T>,
    range_b: QuantRange<T>,
    view_a: &ComplexMatrix<T>,
    view_b: &ComplexMatrix<T>,
    rng: &mut ChaCha8Rng,
) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
    let rho64 = rho.to_f64().unwrap();
    let cross = (1.0 - rho64 * rho64).max(0.0).sqrt();
    let mut a = ComplexMatrix::zeros(link.rows, link.cols);
    let mut b = ComplexMatrix::zeros(link.rows, link.cols);
    for i in 0..link.rows {
        for j in 0..link.cols {
            let ta = view_a.get(i, j);
            let tb = view_b.get(i, j);
            let mut accepted: Option<((f64, f64), (f64, f64))> = None;
            for _ in 0..REJECTION_CAP {
                let za = complex_std_normal(rng);
                let zb = complex_std_normal(rng);
                let hb = (za.0 * rho64 + zb.0 * cross, za.1 * rho64 + zb.1 * cross);
                let ok = quantize_entry(T::of(za.0), bits_a, range_a.re) == ta.re
                    && quantize_entry(T::of(za.1), bits_a, range_a.im) == ta.im
                    && quantize_entry(T::of(hb.0), bits_b, range_b.re) == tb.re
                    && quantize_entry(T::of(hb.1), bits_b, range_b.im) == tb.im;
                if ok {
                    accepted = Some((za, hb));
                    break;
                }
            }
            let ((are, aim), (bre, bim)) = accepted.unwrap_or((
                (ta.re.to_f64().unwrap(), ta.im.to_f64().unwrap()),
                (tb.re.to_f64().unwrap(), tb.im.to_f64().unwrap()),
            ));
            a.set(i, j, Complex::new(T::of(are), T::of(aim)));
            b.set(i, j, Complex::new(T::of(bre), T::of(bim)));
        }
    }
    (a, b)
}

/// Equally spaced scalar quantizer: splits `range` into `2^bits` cells and
/// returns the midpoint of the cell containing `clamp(x, range)`. Edge cells
/// absorb the tails.
pub fn quantize_entry<T: Scalar>(x: T, bits: u32, range: (T, T)) -> T {
    let (lo, hi) = range;
    debug_assert!(lo < hi, "quantizer range must satisfy lower < upper");
    let cells = (1u64 << bits.min(52)) as f64;
    let cells_t = T::of(cells);
    let width = (hi - lo) / cells_t;
    let xc = x.max(lo).min(hi);
    let mut idx = ((xc - lo) / width).floor();
    if idx >= cells_t {
        idx = cells_t - T::one();
    }
    if !(idx >= T::zero()) {
        idx = T::zero();
    }
    lo + (idx + T::of(0.5)) * width
}

/// Sample mean and standard error (zero for a single sample).
pub fn mean_stderr<T: Scalar>(values: &[T]) -> (T, T) {
    let n = values.len();
    assert!(n >= 1, "mean_stderr needs at least one value");
    let nt = T::of(n as f64);
    let mean = values.iter().fold(T::zero(), |a, &b| a + b) / nt;
    if n < 2 {
        return (mean, T::zero());
    }
    let var = values
        .iter()
        .fold(T::zero(), |a, &b| a + (b - mean) * (b - mean))
        / T::of((n - 1) as f64);
    (mean, (var / nt).sqrt())
}

/// Monte Carlo mean and standard error of a sample-indexed functional.
///
/// Evaluation is parallel across indices, but accumulation is sequential in
/// index order, so the result is bit-identical for any worker count. Two
/// functionals estimated under the same config see identical samples.
pub fn estimate_mean<T, F>(config: &EnsembleConfig<T>, f: F) -> Result<(T, T)>
where
    T: Scalar,
    F: Fn(usize, &ChannelSample<T>) -> Result<T> + Sync,
{
    let values: Vec<Result<T>> = (0..config.sample_count)
        .into_par_iter()
        .map(|i| {
            let s = config.draw(i);
            f(i, &s).map_err(|e| Error::at_sample(i, e))
        })
        .collect();
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        out.push(v?);
    }
    Ok(mean_stderr(&out))
}

/// Bit-pattern key of a transmitter view, for memoization.
pub fn view_key<T: Scalar>(view: &[ComplexMatrix<T>]) -> Vec<u64> {
    let mut key = Vec::new();
    for m in view {
        key.push(m.rows() as u64);
        key.push(m.cols() as u64);
        for z in m.entries() {
            key.push(z.re.to_f64().unwrap().to_bits());
            key.push(z.im.to_f64().unwrap().to_bits());
        }
    }
    key
}

fn view_hash<T: Scalar>(view: &[ComplexMatrix<T>]) -> u64 {
    view_key(view)
        .into_iter()
        .fold(0xcbf29ce484222325u64, |acc, w| splitmix64(acc ^ w))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform_open01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller standard normal pair.
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = uniform_open01(rng);
    let u2 = uniform01(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Standard complex normal CN(0,1) as (re, im).
fn complex_std_normal(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (z0, z1) = normal_pair(rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (z0 * s, z1 * s)
}

/// Run an optimizer under the ensemble's CSIT model and rate its output on
/// every true channel sample.
///
/// * `None` CSIT: one optimization over the whole ensemble.
/// * `Perfect` CSIT: one optimization per sample on that sample alone.
/// * `Quantized` CSIT: one optimization per distinct quantized view, on a
///   conditional ensemble of `inner_samples` draws from the realized cells;
///   results are memoized by view.
///
/// `rate` returns one or more metrics for a solution on one true sample;
/// the per-sample metric vectors are returned in index order.
pub fn rated_with_csit<T, Sol, Opt, Rate>(
    cfg: &EnsembleConfig<T>,
    inner_samples: usize,
    optimize: Opt,
    rate: Rate,
) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    Sol: Clone + Send + Sync,
    Opt: Fn(&SampleSet<T>) -> Result<Sol> + Sync,
    Rate: Fn(&Sol, usize, &[ComplexMatrix<T>]) -> Result<Vec<T>> + Sync,
{
    match &cfg.csit {
        CsitModel::None => {
            let set = cfg.materialize();
            let sol = optimize(&set)?;
            let rows: Vec<Result<Vec<T>>> = (0..cfg.sample_count)
                .into_par_iter()
                .map(|i| rate(&sol, i, set.get(i)).map_err(|e| Error::at_sample(i, e)))
                .collect();
            rows.into_iter().collect()
        }
        CsitModel::Perfect => {
            let set = cfg.materialize();
            let rows: Vec<Result<Vec<T>>> = (0..cfg.sample_count)
                .into_par_iter()
                .map(|i| {
                    let single = SampleSet::from_samples(vec![set.get(i).to_vec()]);
                    let sol = optimize(&single).map_err(|e| Error::at_sample(i, e))?;
                    rate(&sol, i, set.get(i)).map_err(|e| Error::at_sample(i, e))
                })
                .collect();
            rows.into_iter().collect()
        }
        CsitModel::Quantized { .. } => {
            let memo: Mutex<HashMap<Vec<u64>, Sol>> = Mutex::new(HashMap::new());
            let rows: Vec<Result<Vec<T>>> = (0..cfg.sample_count)
                .into_par_iter()
                .map(|i| {
                    let sample = cfg.draw(i);
                    let view = sample.tx_view.as_ref().expect("quantized CSIT has a view");
                    let key = view_key(view);
                    let cached = memo.lock().unwrap().get(&key).cloned();
                    let sol = match cached {
                        Some(s) => s,
                        // A racing thread may solve the same cell twice; the
                        // result is identical either way.
                        Option::None => {
                            let cond = cfg.materialize_conditional(view, inner_samples);
                            let s = optimize(&cond).map_err(|e| Error::at_sample(i, e))?;
                            memo.lock().unwrap().insert(key, s.clone());
                            s
                        }
                    };
                    rate(&sol, i, &sample.true_matrices).map_err(|e| Error::at_sample(i, e))
                })
                .collect();
            rows.into_iter().collect()
        }
    }
}
