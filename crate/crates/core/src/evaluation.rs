//! Automatic metrics: corpus BLEU, CIDEr, content selection, n-gram
//! perplexity, and min-max normalized score aggregation across systems.
//!
//! All metrics tokenize with [`crate::text::tokenize`].
//!
//! * BLEU is reported on a 0-100 scale. Corpus mode uses raw clipped
//!   precisions, so a zero precision at any order gives 0 (flagged in
//!   [`BleuScore::zero_precision`]). Sentence mode adds one to numerator and
//!   denominator for n >= 2.
//! * CIDEr uses `idf(g) = ln(N / max(1, df(g)))` over the N reference sets,
//!   averages cosine similarity over n = 1..4, and is scaled by 10.
//! * Content selection is gold-fact recall in percent.
//! * Perplexity comes from an add-k n-gram model with `<s>`/`</s>` markers.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parsing::TextNumberPair;
use crate::text::{contains_subsequence, format_number, parse_number, tokenize};

pub const CIDER_SCALE: f64 = 10.0;
pub const CS_RELATIVE_TOLERANCE: f64 = 0.005;
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("column {0} has no two distinct scores")]
    DegenerateColumn(String),
    #[error("column {column}: {message}")]
    InvalidColumn { column: String, message: String },
    #[error("n-gram order must be >= 1")]
    InvalidOrder,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Ngram = Vec<String>;

pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<Ngram, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.to_vec()).or_insert(0) += 1;
    }
    counts
}

fn check_lengths(h: usize, r: usize) -> Result<(), MetricError> {
    if h != r {
        return Err(MetricError::LengthMismatch {
            hypotheses: h,
            references: r,
        });
    }
    if h == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    /// Some order had no matching n-gram, which forces the score to 0.
    pub zero_precision: bool,
}

/// Clipped matches and hypothesis n-gram totals per order, plus the
/// hypothesis length and closest reference length.
fn bleu_stats(hyp: &[String], refs: &[Vec<String>], max_n: usize) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let mut matches = vec![0; max_n];
    let mut totals = vec![0; max_n];
    for n in 1..=max_n {
        let h = ngram_counts(hyp, n);
        let mut max_ref: HashMap<&Ngram, usize> = HashMap::new();
        let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
        for rc in &ref_counts {
            for (g, &c) in rc {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        for (g, &c) in &h {
            matches[n - 1] += c.min(max_ref.get(g).copied().unwrap_or(0));
            totals[n - 1] += c;
        }
    }
    let hyp_len = hyp.len();
    // closest reference length; ties go to the shorter one
    let ref_len = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&l| (l.abs_diff(hyp_len), l))
        .unwrap_or(0);
    (matches, totals, hyp_len, ref_len)
}

fn combine(matches: &[usize], totals: &[usize], hyp_len: usize, ref_len: usize, smooth: bool) -> BleuScore {
    let precisions: Vec<f64> = matches
        .iter()
        .zip(totals)
        .enumerate()
        .map(|(i, (&m, &t))| {
            if smooth && i > 0 {
                (m as f64 + 1.0) / (t as f64 + 1.0)
            } else if t == 0 {
                0.0
            } else {
                m as f64 / t as f64
            }
        })
        .collect();
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let zero_precision = precisions.contains(&0.0);
    let score = if zero_precision || hyp_len == 0 {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
        zero_precision,
    }
}

/// Corpus BLEU with any number of references per hypothesis.
pub fn corpus_bleu<S: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[S],
    references: &[Vec<R>],
    max_n: usize,
) -> Result<BleuScore, MetricError> {
    check_lengths(hypotheses.len(), references.len())?;
    if max_n == 0 {
        return Err(MetricError::InvalidOrder);
    }
    let mut matches = vec![0; max_n];
    let mut totals = vec![0; max_n];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, rs) in hypotheses.iter().zip(references) {
        let h = tokenize(h.as_ref());
        let rs: Vec<Vec<String>> = rs.iter().map(|r| tokenize(r.as_ref())).collect();
        let (m, t, hl, rl) = bleu_stats(&h, &rs, max_n);
        for n in 0..max_n {
            matches[n] += m[n];
            totals[n] += t[n];
        }
        hyp_len += hl;
        ref_len += rl;
    }
    Ok(combine(&matches, &totals, hyp_len, ref_len, false))
}

/// Corpus BLEU with one reference per hypothesis, 0-100.
pub fn bleu<S: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[S],
    references: &[R],
    max_n: usize,
) -> Result<f64, MetricError> {
    let refs: Vec<Vec<&str>> = references.iter().map(|r| vec![r.as_ref()]).collect();
    Ok(corpus_bleu(hypotheses, &refs, max_n)?.score)
}

/// Single-sentence BLEU with add-one smoothing for n >= 2.
pub fn sentence_bleu<R: AsRef<str>>(
    hypothesis: &str,
    references: &[R],
    max_n: usize,
) -> Result<BleuScore, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if max_n == 0 {
        return Err(MetricError::InvalidOrder);
    }
    let h = tokenize(hypothesis);
    let rs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();
    let (m, t, hl, rl) = bleu_stats(&h, &rs, max_n);
    Ok(combine(&m, &t, hl, rl, true))
}

pub const CIDER_MAX_N: usize = 4;

/// Document frequencies over reference sets and the corpus size they were
/// counted on.
#[derive(Debug, Clone)]
pub struct CiderIdf {
    df: Vec<HashMap<Ngram, usize>>,
    n_docs: usize,
}

impl CiderIdf {
    pub fn from_references<R: AsRef<str>>(references: &[Vec<R>]) -> Self {
        let mut df = vec![HashMap::new(); CIDER_MAX_N];
        for refs in references {
            let toks: Vec<Vec<String>> = refs.iter().map(|r| tokenize(r.as_ref())).collect();
            for n in 1..=CIDER_MAX_N {
                let mut seen: Vec<Ngram> = toks.iter().flat_map(|t| ngram_counts(t, n).into_keys()).collect();
                seen.sort();
                seen.dedup();
                for g in seen {
                    *df[n - 1].entry(g).or_insert(0) += 1;
                }
            }
        }
        Self {
            df,
            n_docs: references.len(),
        }
    }

    pub fn idf(&self, gram: &[String]) -> f64 {
        let df = self.df[gram.len() - 1].get(gram).copied().unwrap_or(0);
        (self.n_docs as f64 / df.max(1) as f64).ln()
    }

    fn vector(&self, tokens: &[String], n: usize) -> HashMap<Ngram, f64> {
        ngram_counts(tokens, n)
            .into_iter()
            .map(|(g, c)| {
                let w = c as f64 * self.idf(&g);
                (g, w)
            })
            .collect()
    }

    /// CIDEr of one hypothesis against its references.
    pub fn score<R: AsRef<str>>(&self, hypothesis: &str, references: &[R]) -> f64 {
        if references.is_empty() {
            return 0.0;
        }
        let h = tokenize(hypothesis);
        let rs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();
        let mut total = 0.0;
        for n in 1..=CIDER_MAX_N {
            let hv = self.vector(&h, n);
            let sum: f64 = rs.iter().map(|r| cosine(&hv, &self.vector(r, n))).sum();
            total += sum / rs.len() as f64;
        }
        CIDER_SCALE * total / CIDER_MAX_N as f64
    }
}

fn cosine(a: &HashMap<Ngram, f64>, b: &HashMap<Ngram, f64>) -> f64 {
    let na = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().map(|(g, v)| v * b.get(g).copied().unwrap_or(0.0)).sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Per-item CIDEr with idf from the reference corpus.
pub fn cider_items<S: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[S],
    references: &[Vec<R>],
) -> Result<Vec<f64>, MetricError> {
    check_lengths(hypotheses.len(), references.len())?;
    let idf = CiderIdf::from_references(references);
    Ok(hypotheses
        .iter()
        .zip(references)
        .map(|(h, rs)| idf.score(h.as_ref(), rs))
        .collect())
}

/// Mean CIDEr with one reference per hypothesis.
pub fn cider<S: AsRef<str>, R: AsRef<str>>(hypotheses: &[S], references: &[R]) -> Result<f64, MetricError> {
    let refs: Vec<Vec<&str>> = references.iter().map(|r| vec![r.as_ref()]).collect();
    let items = cider_items(hypotheses, &refs)?;
    Ok(items.iter().sum::<f64>() / items.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentSelection {
    pub percent: f64,
    pub matched: usize,
    pub total: usize,
    /// No gold facts were given; `percent` is 100 by convention.
    pub empty_gold: bool,
}

fn value_mentioned(tokens: &[String], value: f64) -> bool {
    let canonical = format_number(value);
    tokens.iter().any(|t| {
        *t == canonical
            || parse_number(t).is_some_and(|x| {
                if value == 0.0 {
                    x == 0.0
                } else {
                    ((x - value) / value).abs() <= CS_RELATIVE_TOLERANCE
                }
            })
    })
}

fn phrase_mentioned(tokens: &[String], phrase: &str) -> bool {
    let needle = tokenize(phrase);
    !needle.is_empty() && contains_subsequence(tokens, &needle)
}

/// Whether `fact` is stated in the tokenized hypothesis: its value appears,
/// and so does its label or its x position.
pub fn fact_mentioned(tokens: &[String], fact: &TextNumberPair) -> bool {
    value_mentioned(tokens, fact.value) && (phrase_mentioned(tokens, &fact.label) || phrase_mentioned(tokens, &fact.x))
}

pub fn content_selection(hypothesis: &str, gold_facts: &[TextNumberPair]) -> ContentSelection {
    if gold_facts.is_empty() {
        return ContentSelection {
            percent: 100.0,
            matched: 0,
            total: 0,
            empty_gold: true,
        };
    }
    let tokens = tokenize(hypothesis);
    let matched = gold_facts.iter().filter(|f| fact_mentioned(&tokens, f)).count();
    ContentSelection {
        percent: 100.0 * matched as f64 / gold_facts.len() as f64,
        matched,
        total: gold_facts.len(),
        empty_gold: false,
    }
}

/// Scores a set of texts for fluency; lower is better.
pub trait PerplexityScorer {
    fn perplexity(&self, texts: &[String]) -> Result<f64, MetricError>;
}

/// Learned similarity scorer slot. No implementation ships with the crate.
pub trait BleurtScorer {
    fn score(&self, hypothesis: &str, reference: &str) -> f64;
}

/// Add-k smoothed n-gram language model.
///
/// Each sentence is padded with `order - 1` copies of `<s>` and one `</s>`.
/// The vocabulary is the training tokens plus `</s>` and `<unk>`; tokens
/// outside it are scored as `<unk>`. For a context `h`,
/// `p(w | h) = (c(h, w) + k) / (c(h) + k |V|)`.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    k: f64,
    vocab: BTreeMap<String, ()>,
    ngrams: HashMap<Ngram, u64>,
    contexts: HashMap<Ngram, u64>,
}

impl NGramLM {
    pub fn train<S: AsRef<str>>(corpus: &[S], order: usize, k: f64) -> Result<Self, MetricError> {
        if corpus.is_empty() {
            return Err(MetricError::EmptyCorpus);
        }
        let mut lm = Self::empty(order, k)?;
        let sentences: Vec<Vec<String>> = corpus.iter().map(|s| tokenize(s.as_ref())).collect();
        for s in &sentences {
            for t in s {
                lm.vocab.insert(t.clone(), ());
            }
        }
        for s in &sentences {
            let padded = lm.pad(s);
            for i in (order - 1)..padded.len() {
                let ctx = padded[i + 1 - order..i].to_vec();
                let mut gram = ctx.clone();
                gram.push(padded[i].clone());
                *lm.ngrams.entry(gram).or_insert(0) += 1;
                *lm.contexts.entry(ctx).or_insert(0) += 1;
            }
        }
        Ok(lm)
    }

    /// A model with no counts over `words`, so every token is equally
    /// likely and the perplexity of any text equals [`Self::vocab_size`].
    pub fn uniform<S: AsRef<str>>(words: &[S], order: usize) -> Result<Self, MetricError> {
        let mut lm = Self::empty(order, 1.0)?;
        for w in words {
            lm.vocab.insert(w.as_ref().to_string(), ());
        }
        Ok(lm)
    }

    fn empty(order: usize, k: f64) -> Result<Self, MetricError> {
        if order == 0 {
            return Err(MetricError::InvalidOrder);
        }
        assert!(k > 0.0, "smoothing constant must be positive");
        let mut vocab = BTreeMap::new();
        vocab.insert(EOS.to_string(), ());
        vocab.insert(UNK.to_string(), ());
        Ok(Self {
            order,
            k,
            vocab,
            ngrams: HashMap::new(),
            contexts: HashMap::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(String::as_str)
    }

    fn pad(&self, tokens: &[String]) -> Vec<String> {
        let mut out = vec![BOS.to_string(); self.order - 1];
        out.extend(tokens.iter().map(|t| {
            if self.vocab.contains_key(t) {
                t.clone()
            } else {
                UNK.to_string()
            }
        }));
        out.push(EOS.to_string());
        out
    }

    /// `p(word | context)`; `context` holds the preceding `order - 1` tokens.
    pub fn prob(&self, context: &[String], word: &str) -> f64 {
        let word = if self.vocab.contains_key(word) { word } else { UNK };
        let ctx: Ngram = context.to_vec();
        let c_ctx = self.contexts.get(&ctx).copied().unwrap_or(0) as f64;
        let mut gram = ctx;
        gram.push(word.to_string());
        let c = self.ngrams.get(&gram).copied().unwrap_or(0) as f64;
        (c + self.k) / (c_ctx + self.k * self.vocab.len() as f64)
    }

    /// Total log-probability and number of predicted tokens (including `</s>`).
    pub fn log_prob(&self, text: &str) -> (f64, usize) {
        let padded = self.pad(&tokenize(text));
        let n = self.order;
        let mut lp = 0.0;
        for i in (n - 1)..padded.len() {
            lp += self.prob(&padded[i + 1 - n..i], &padded[i]).ln();
        }
        (lp, padded.len() + 1 - n)
    }
}

impl PerplexityScorer for NGramLM {
    fn perplexity(&self, texts: &[String]) -> Result<f64, MetricError> {
        perplexity(texts, self)
    }
}

pub fn train_lm<S: AsRef<str>>(corpus: &[S], order: usize) -> Result<NGramLM, MetricError> {
    NGramLM::train(corpus, order, 1.0)
}

/// `exp(-(1/T) sum log p)` over every predicted token of every text.
pub fn perplexity<S: AsRef<str>>(texts: &[S], lm: &NGramLM) -> Result<f64, MetricError> {
    if texts.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let (mut lp, mut t) = (0.0, 0usize);
    for s in texts {
        let (l, n) = lm.log_prob(s.as_ref());
        lp += l;
        t += n;
    }
    Ok((-lp / t as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricColumn {
    pub name: String,
    pub system_names: Vec<String>,
    pub scores: Vec<f64>,
    pub orientation: Orientation,
}

/// `(S - S_worst) / (S_best - S_worst)` per system.
pub fn s_norm(column: &MetricColumn) -> Result<Vec<f64>, MetricError> {
    if column.system_names.len() != column.scores.len() {
        return Err(MetricError::InvalidColumn {
            column: column.name.clone(),
            message: format!("{} names but {} scores", column.system_names.len(), column.scores.len()),
        });
    }
    if column.scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricError::InvalidColumn {
            column: column.name.clone(),
            message: "non-finite score".into(),
        });
    }
    let (lo, hi) = crate::stats::min_max(&column.scores);
    if column.scores.is_empty() || lo == hi {
        return Err(MetricError::DegenerateColumn(column.name.clone()));
    }
    let (best, worst) = match column.orientation {
        Orientation::HigherBetter => (hi, lo),
        Orientation::LowerBetter => (lo, hi),
    };
    Ok(column
        .scores
        .iter()
        .map(|s| (s - worst).abs() / (best - worst).abs())
        .collect())
}

/// Per-system mean of the normalized columns. Every column must list the
/// same systems in the same order.
pub fn s_norm_aggregate(columns: &[MetricColumn]) -> Result<Vec<f64>, MetricError> {
    let first = columns.first().ok_or(MetricError::EmptyCorpus)?;
    let mut sums = vec![0.0; first.system_names.len()];
    for c in columns {
        if c.system_names != first.system_names {
            return Err(MetricError::InvalidColumn {
                column: c.name.clone(),
                message: "system list differs from the first column".into(),
            });
        }
        for (acc, v) in sums.iter_mut().zip(s_norm(c)?) {
            *acc += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / columns.len() as f64).collect())
}

/// One line of an evaluation manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub hypothesis: String,
    pub references: Vec<String>,
    #[serde(default)]
    pub gold_facts: Vec<TextNumberPair>,
    /// Groups items for cross-system normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

pub fn read_eval_manifest<R: BufRead>(input: R) -> Result<Vec<EvalItem>, MetricError> {
    let mut items = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| MetricError::Format {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub cider: f64,
    pub cs_percent: f64,
    pub ppl: f64,
    pub bleurt: Option<f64>,
    pub s_norm: Option<f64>,
    pub items: usize,
}

/// Metrics for one system's items. Perplexity uses an order-3 model trained
/// on all references of `items`.
pub fn evaluate(items: &[EvalItem]) -> Result<MetricReport, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let lm = train_lm(&items.iter().flat_map(|i| i.references.iter()).collect::<Vec<_>>(), 3)?;
    evaluate_with(items, &lm, None)
}

pub fn evaluate_with(
    items: &[EvalItem],
    lm: &NGramLM,
    bleurt: Option<&dyn BleurtScorer>,
) -> Result<MetricReport, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let hyps: Vec<&str> = items.iter().map(|i| i.hypothesis.as_str()).collect();
    let refs: Vec<Vec<&str>> = items
        .iter()
        .map(|i| i.references.iter().map(String::as_str).collect())
        .collect();
    let bleu = corpus_bleu(&hyps, &refs, 4)?.score;
    let cider_scores = cider_items(&hyps, &refs)?;
    let graded: Vec<f64> = items
        .iter()
        .filter(|i| !i.gold_facts.is_empty())
        .map(|i| content_selection(&i.hypothesis, &i.gold_facts).percent)
        .collect();
    let cs = if graded.is_empty() {
        100.0
    } else {
        graded.iter().sum::<f64>() / graded.len() as f64
    };
    let ppl = perplexity(&hyps, lm)?;
    let bleurt = bleurt.map(|b| {
        items
            .iter()
            .map(|i| i.references.first().map_or(0.0, |r| b.score(&i.hypothesis, r)))
            .sum::<f64>()
            / items.len() as f64
    });
    Ok(MetricReport {
        bleu,
        cider: cider_scores.iter().sum::<f64>() / items.len() as f64,
        cs_percent: cs,
        ppl,
        bleurt,
        s_norm: None,
        items: items.len(),
    })
}

/// Columns of a cross-system table built from reports, in the order
/// BLEU, (BLEURT when every report has it), CIDEr, CS, PPL.
pub fn report_columns(systems: &[(String, MetricReport)]) -> Vec<MetricColumn> {
    let names: Vec<String> = systems.iter().map(|(n, _)| n.clone()).collect();
    let col = |name: &str, o: Orientation, f: &dyn Fn(&MetricReport) -> f64| MetricColumn {
        name: name.to_string(),
        system_names: names.clone(),
        scores: systems.iter().map(|(_, r)| f(r)).collect(),
        orientation: o,
    };
    let mut cols = vec![col("bleu", Orientation::HigherBetter, &|r| r.bleu)];
    if systems.iter().all(|(_, r)| r.bleurt.is_some()) {
        cols.push(col("bleurt", Orientation::HigherBetter, &|r| r.bleurt.unwrap_or(0.0)));
    }
    cols.push(col("cider", Orientation::HigherBetter, &|r| r.cider));
    cols.push(col("cs", Orientation::HigherBetter, &|r| r.cs_percent));
    cols.push(col("ppl", Orientation::LowerBetter, &|r| r.ppl));
    cols
}

/// Fill `s_norm` on every report. Columns where all systems tie carry no
/// ranking information and are left out of the mean.
pub fn attach_s_norm(systems: &mut [(String, MetricReport)]) -> Result<(), MetricError> {
    let cols: Vec<MetricColumn> = report_columns(systems)
        .into_iter()
        .filter(|c| !matches!(s_norm(c), Err(MetricError::DegenerateColumn(_))))
        .collect();
    if cols.is_empty() {
        return Err(MetricError::DegenerateColumn("all".into()));
    }
    let agg = s_norm_aggregate(&cols)?;
    for ((_, r), v) in systems.iter_mut().zip(agg) {
        r.s_norm = Some(v);
    }
    Ok(())
}
