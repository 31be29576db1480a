//! Practical detection of successful training on sampled data: corpus
//! entropy estimation (plug-in or by lossless compression), minibatch
//! estimation of the expected training log-likelihood, and the threshold
//! decision `H_hat + L_hat > I0`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::finite_info::{Alphabet, FiniteDistribution};
use crate::posterior::VariationalFamily;
use crate::Nats;

/// A sequence of observed symbols over a finite alphabet.
#[derive(Debug, Clone)]
pub struct Corpus {
    alphabet: Alphabet,
    symbols: Vec<usize>,
}

impl Corpus {
    pub fn new(alphabet: Alphabet, symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidCorpus("corpus is empty".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= alphabet.size()) {
            return Err(Error::InvalidCorpus(format!(
                "symbol index {bad} out of range for alphabet {:?}",
                alphabet.name()
            )));
        }
        Ok(Self { alphabet, symbols })
    }

    /// Parses one symbol label per line. Blank trailing lines are ignored;
    /// unknown labels are reported with their line number.
    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let label = line.trim();
            if label.is_empty() {
                continue;
            }
            match alphabet.index_of(label) {
                Some(idx) => symbols.push(idx),
                None => {
                    return Err(Error::InvalidCorpus(format!(
                        "line {}: unknown symbol {label:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(alphabet, symbols)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// One byte per symbol; alphabets up to 256 symbols are supported.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.alphabet.size() > 256 {
            return Err(Error::InvalidCorpus(format!(
                "alphabet has {} symbols, byte serialization supports up to 256",
                self.alphabet.size()
            )));
        }
        Ok(self.symbols.iter().map(|&s| s as u8).collect())
    }
}

/// A lossless compressor measured by output size.
pub trait Codec {
    fn id(&self) -> &'static str;
    fn compress(&self, data: &[u8]) -> Vec<u8>;
}

/// Identity codec: output equals input, 8 bits per symbol.
pub struct StoreCodec;

impl Codec for StoreCodec {
    fn id(&self) -> &'static str {
        "store"
    }

    fn compress(&self, data: &[u8]) -> Vec<u8> {
        data.to_vec()
    }
}

/// DEFLATE at a pinned level: an LZ77-class compressor with a 32 KiB window.
pub struct DeflateCodec;

impl Codec for DeflateCodec {
    fn id(&self) -> &'static str {
        "deflate"
    }

    fn compress(&self, data: &[u8]) -> Vec<u8> {
        let mut enc = flate2::write::DeflateEncoder::new(Vec::new(), flate2::Compression::new(6));
        enc.write_all(data)
            .expect("writing to an in-memory encoder");
        enc.finish().expect("finishing an in-memory encoder")
    }
}

pub fn codec_by_id(id: &str) -> Result<Box<dyn Codec>> {
    match id {
        "store" => Ok(Box::new(StoreCodec)),
        "deflate" => Ok(Box::new(DeflateCodec)),
        other => Err(Error::UnknownCodec(other.into())),
    }
}

/// Entropy estimation method for a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    PlugIn,
    Compression(String),
}

impl EntropyMethod {
    pub fn id(&self) -> String {
        match self {
            EntropyMethod::PlugIn => "plug_in".into(),
            EntropyMethod::Compression(codec) => format!("compression:{codec}"),
        }
    }
}

/// Total corpus entropy estimate in nats.
///
/// Plug-in: corpus length times the empirical per-symbol entropy.
/// Compression: compressed size in bits times ln 2, an operational upper
/// bound proxy.
pub fn entropy_estimate(c: &Corpus, method: &EntropyMethod) -> Result<Nats> {
    match method {
        EntropyMethod::PlugIn => {
            let mut counts = vec![0usize; c.alphabet().size()];
            for &s in c.symbols() {
                counts[s] += 1;
            }
            let n = c.len() as f64;
            let mut h = 0.0;
            for &count in &counts {
                if count > 0 {
                    let p = count as f64 / n;
                    h -= p * p.ln();
                }
            }
            Ok(n * h)
        }
        EntropyMethod::Compression(codec_id) => {
            let codec = codec_by_id(codec_id)?;
            let compressed = codec.compress(&c.to_bytes()?);
            let bits = 8.0 * compressed.len() as f64;
            Ok(bits * std::f64::consts::LN_2)
        }
    }
}

/// Where the model parameter comes from when scoring batches.
#[derive(Debug, Clone)]
pub enum ThetaSource {
    /// Score every batch with the same fixed parameter.
    Fixed(usize),
    /// Draw an independent parameter per batch from this posterior.
    PosteriorSamples(FiniteDistribution),
}

/// Minibatch construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Consecutive chunks covering the corpus exactly once (last chunk
    /// ragged). With a fixed theta this reproduces the full-data
    /// log-likelihood exactly.
    Partition,
    /// `n_batches` batches whose entries are drawn from the corpus with
    /// replacement.
    WithReplacement { n_batches: usize },
}

/// Estimates the total `E[ln q(x_p|theta)]` over the corpus from per-batch
/// log-likelihoods, scaled to the full corpus length. Deterministic in
/// `seed`, which drives both batch entries (with-replacement mode) and
/// per-batch theta draws.
pub fn loglik_estimate(
    c: &Corpus,
    f: &VariationalFamily,
    theta_source: &ThetaSource,
    batch_size: usize,
    mode: BatchMode,
    seed: u64,
) -> Result<Nats> {
    if batch_size < 1 {
        return Err(Error::InvalidCorpus("batch size must be at least 1".into()));
    }
    if f.x_alphabet() != c.alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: c.alphabet().name().into(),
            got: f.x_alphabet().name().into(),
        });
    }
    if let ThetaSource::PosteriorSamples(post) = theta_source {
        if post.alphabet() != f.theta_alphabet() {
            return Err(Error::AlphabetMismatch {
                expected: f.theta_alphabet().name().into(),
                got: post.alphabet().name().into(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c.len();
    let mut total = 0.0;
    let mut consumed = 0usize;
    let score_batch = |symbols: &[usize], rng: &mut ChaCha8Rng| -> Result<f64> {
        let theta = match theta_source {
            ThetaSource::Fixed(t) => *t,
            ThetaSource::PosteriorSamples(post) => draw_index(rng, post.probs()),
        };
        let row = f.q_lik().row_for(&[theta]);
        let mut sum = 0.0;
        for &s in symbols {
            let p = row.prob(s);
            if p <= 0.0 {
                return Err(Error::SupportViolation(format!(
                    "q(x = {} | theta = {}) = 0 for an observed symbol",
                    c.alphabet().symbol(s),
                    f.theta_alphabet().symbol(theta)
                )));
            }
            sum += p.ln();
        }
        Ok(sum)
    };
    match mode {
        BatchMode::Partition => {
            for chunk in c.symbols().chunks(batch_size) {
                total += score_batch(chunk, &mut rng)?;
                consumed += chunk.len();
            }
        }
        BatchMode::WithReplacement { n_batches } => {
            if n_batches < 1 {
                return Err(Error::InvalidCorpus(
                    "with-replacement mode needs at least one batch".into(),
                ));
            }
            let mut batch = vec![0usize; batch_size];
            for _ in 0..n_batches {
                for slot in batch.iter_mut() {
                    *slot = c.symbols()[rng.random_range(0..n)];
                }
                total += score_batch(&batch, &mut rng)?;
                consumed += batch_size;
            }
        }
    }
    Ok(total * n as f64 / consumed as f64)
}

fn draw_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// The threshold decision and its inputs.
#[derive(Debug, Clone, Serialize)]
pub struct SuccessReport {
    pub h_hat: Nats,
    pub l_hat: Nats,
    pub threshold: Nats,
    pub decision: bool,
    pub estimator_ids: Vec<String>,
}

/// Declares successful training when `h_hat + l_hat > threshold`, strictly.
pub fn declare_success(h_hat: Nats, l_hat: Nats, threshold: Nats) -> SuccessReport {
    SuccessReport {
        h_hat,
        l_hat,
        threshold,
        decision: h_hat + l_hat > threshold,
        estimator_ids: Vec::new(),
    }
}
