use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::corpus::Corpus;
use crate::{Error, Result};

/// A distribution over dense ids.
#[derive(Debug, Clone)]
pub enum Sampler {
    Uniform(usize),
    Weighted {
        probs: Vec<f64>,
        index: WeightedIndex<f64>,
    },
}

impl Sampler {
    /// Probabilities proportional to `count^power`.
    pub fn from_counts(counts: &[u64], power: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        if counts.is_empty() || total <= 0.0 {
            return Err(Error::Empty("sampling weights"));
        }
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::Config(format!("sampling weights: {e}")))?;
        Ok(Sampler::Weighted {
            probs: weights.iter().map(|w| w / total).collect(),
            index,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Sampler::Uniform(n) => *n,
            Sampler::Weighted { probs, .. } => probs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn prob(&self, id: u32) -> f64 {
        match self {
            Sampler::Uniform(n) => 1.0 / *n as f64,
            Sampler::Weighted { probs, .. } => probs[id as usize],
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len() as u32).map(|i| self.prob(i)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            Sampler::Uniform(n) => rng.gen_range(0..*n) as u32,
            Sampler::Weighted { index, .. } => index.sample(rng) as u32,
        }
    }

    /// Whether some id with positive mass lies outside `exclude`.
    fn has_support_outside(&self, exclude: &[u32]) -> bool {
        match self {
            Sampler::Uniform(n) => {
                let mut ex: Vec<u32> = exclude
                    .iter()
                    .copied()
                    .filter(|&e| (e as usize) < *n)
                    .collect();
                ex.sort_unstable();
                ex.dedup();
                ex.len() < *n
            }
            Sampler::Weighted { probs, .. } => probs
                .iter()
                .enumerate()
                .any(|(i, &p)| p > 0.0 && !exclude.contains(&(i as u32))),
        }
    }
}

/// Noise distributions for negative sampling.
#[derive(Debug, Clone)]
pub struct SamplingDists {
    /// Unigram counts raised to 3/4.
    pub word: Sampler,
    pub item: Sampler,
    pub aspect: Sampler,
    pub value: Sampler,
    /// Relative corpus frequency of each word, for sub-sampling.
    pub word_freq: Vec<f64>,
}

impl SamplingDists {
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        let counts = corpus.words.counts();
        let total = corpus.words.total() as f64;
        Ok(Self {
            word: Sampler::from_counts(counts, 0.75)?,
            item: Sampler::Uniform(corpus.num_items()),
            aspect: Sampler::Uniform(corpus.num_aspects()),
            value: Sampler::Uniform(corpus.num_values()),
            word_freq: counts.iter().map(|&c| c as f64 / total).collect(),
        })
    }
}

/// Draws `beta` i.i.d. ids from `dist`, rejecting members of `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    dist: &Sampler,
    exclude: &[u32],
    beta: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if beta == 0 {
        return Ok(Vec::new());
    }
    if !dist.has_support_outside(exclude) {
        return Err(Error::SupportExhausted(format!(
            "all {} ids excluded",
            dist.len()
        )));
    }
    let mut out = Vec::with_capacity(beta);
    while out.len() < beta {
        let x = dist.sample(rng);
        if !exclude.contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Keep probability `min(1, sqrt(rate / f(w)))`.
pub fn keep_probability(freq: f64, rate: f64) -> f64 {
    if freq <= 0.0 {
        1.0
    } else {
        (rate / freq).sqrt().min(1.0)
    }
}

pub fn subsample_keep<R: Rng + ?Sized>(
    word: u32,
    dists: &SamplingDists,
    rate: f64,
    rng: &mut R,
) -> bool {
    let p = keep_probability(dists.word_freq[word as usize], rate);
    p >= 1.0 || rng.gen::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Sampler::Uniform(2);
        assert_eq!(
            sample_negatives(&d, &[0], 3, &mut rng).unwrap(),
            vec![1, 1, 1]
        );
        assert!(matches!(
            sample_negatives(&d, &[0, 1], 1, &mut rng),
            Err(Error::SupportExhausted(_))
        ));
    }

    #[test]
    fn seeded_draws_repeat() {
        let d = Sampler::from_counts(&[5, 1, 9, 2], 0.75).unwrap();
        let a = sample_negatives(&d, &[2], 20, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_negatives(&d, &[2], 20, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains(&2));
    }

    #[test]
    fn three_quarter_power_ratio() {
        let d = Sampler::from_counts(&[16, 1], 0.75).unwrap();
        assert!((d.prob(0) / d.prob(1) - 8.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| d.sample(&mut rng) == 0).count();
        let empirical = hits as f64 / n as f64;
        assert!((empirical - 8.0 / 9.0).abs() < 0.005);
    }

    #[test]
    fn keep_probability_law() {
        assert_eq!(keep_probability(1e-6, 1e-5), 1.0);
        assert_eq!(keep_probability(1e-5, 1e-5), 1.0);
        assert!((keep_probability(4e-5, 1e-5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empirical_keep_rate() {
        let dists = SamplingDists {
            word: Sampler::Uniform(2),
            item: Sampler::Uniform(1),
            aspect: Sampler::Uniform(1),
            value: Sampler::Uniform(1),
            word_freq: vec![4e-5, 1e-6],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let kept = (0..n)
            .filter(|_| subsample_keep(0, &dists, 1e-5, &mut rng))
            .count();
        assert!((kept as f64 / n as f64 - 0.5).abs() < 0.005);
        assert!((0..1000).all(|_| subsample_keep(1, &dists, 1e-5, &mut rng)));
    }
}
