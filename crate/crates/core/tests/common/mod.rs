//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use absdetect_core::corpus::Label;
use absdetect_core::features::Lexicon;
use absdetect_core::textprep::CleanDocument;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn doc(id: &str, text: &str) -> CleanDocument {
    CleanDocument::new(id, text.split_whitespace().map(String::from).collect())
}

/// TF-IDF weights of `target` against `corpus`, term by term from the
/// textbook formula, as a term -> weight map.
pub fn tfidf_oracle(corpus: &[CleanDocument], target: &CleanDocument) -> BTreeMap<String, f64> {
    let n = corpus.len() as f64;
    let mut raw = BTreeMap::new();
    for term in &target.tokens {
        if raw.contains_key(term) {
            continue;
        }
        let df = corpus.iter().filter(|d| d.tokens.contains(term)).count() as f64;
        if df == 0.0 {
            continue;
        }
        let tf = target.tokens.iter().filter(|t| *t == term).count() as f64;
        let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
        raw.insert(term.clone(), tf * idf);
    }
    let norm: f64 = raw.values().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|(t, v)| (t, v / norm)).collect()
}

/// Posterior P(AI | x) of a multinomial naive Bayes model estimated by
/// direct counting, evaluated as a product of probabilities.
pub fn mnb_posterior_oracle(x: &[Vec<f64>], y: &[Label], alpha: f64, query: &[f64]) -> f64 {
    let dim = query.len();
    let mut joint = [0.0; 2];
    for (c, class) in [Label::Human, Label::Ai].into_iter().enumerate() {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, l)| **l == class).map(|(r, _)| r).collect();
        let prior = rows.len() as f64 / x.len() as f64;
        let total: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
        let mut p = prior;
        for t in 0..dim {
            let count: f64 = rows.iter().map(|r| r[t]).sum();
            let theta = (count + alpha) / (total + alpha * dim as f64);
            p *= theta.powf(query[t]);
        }
        joint[c] = p;
    }
    joint[1] / (joint[0] + joint[1])
}

/// Fraction of (AI, Human) pairs where the AI score is higher, ties 1/2.
pub fn auc_pairwise(scores: &[f64], truth: &[Label]) -> f64 {
    let mut twice_wins = 0u64;
    let mut pairs = 0u64;
    for (i, li) in truth.iter().enumerate() {
        if !li.is_ai() {
            continue;
        }
        for (j, lj) in truth.iter().enumerate() {
            if lj.is_ai() {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// Entity n-grams by enumerating every window and keeping those whose
/// positions are all covered by some lexicon occurrence.
pub fn entity_oracle(tokens: &[String], lexicon: &Lexicon, max_n: usize) -> BTreeMap<String, u64> {
    let n = tokens.len();
    let covered = |p: usize| {
        lexicon.terms().iter().any(|term| {
            (0..n).any(|s| s <= p && p < s + term.len() && s + term.len() <= n && tokens[s..s + term.len()] == term[..])
        })
    };
    let mut bag = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..=n {
            if j - i > max_n {
                break;
            }
            if (i..j).all(covered) {
                *bag.entry(tokens[i..j].join(" ")).or_insert(0) += 1;
            }
        }
    }
    bag
}

/// `||a - b|| / max(||a||, ||b||)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central finite differences of `f` at `x`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Label> {
    let mut y: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.5) { Label::Ai } else { Label::Human }).collect();
    y[0] = Label::Ai;
    y[1] = Label::Human;
    y
}

// ---- single-case comparisons shared by property tests and acceptance ----

use absdetect_core::evaluation::auc;
use absdetect_core::features::{extract_entity_grams, DenseVector, TfidfVocabulary};
use absdetect_core::models::MnbModel;

/// Largest deviation between fitted TF-IDF vectors and the oracle.
pub fn tfidf_deviation(corpus: &[CleanDocument]) -> f64 {
    let vocab = TfidfVocabulary::fit(corpus, 0.0, 1.0).expect("non-empty corpus");
    let mut worst: f64 = 0.0;
    for d in corpus {
        let v = vocab.transform(d);
        let expected = tfidf_oracle(corpus, d);
        assert_eq!(v.nnz(), expected.len());
        for (term, w) in &expected {
            let i = vocab.index_of(term).expect("term in vocabulary");
            worst = worst.max((v.get(i) - w).abs());
        }
    }
    worst
}

/// Largest posterior deviation, and whether every prediction agreed.
pub fn mnb_deviation(x: &[Vec<f64>], y: &[Label], alpha: f64) -> (f64, bool) {
    let rows: Vec<DenseVector> = x.iter().cloned().map(DenseVector).collect();
    let m = MnbModel::train(&rows, y, alpha).expect("trainable");
    let mut worst: f64 = 0.0;
    let mut agree = true;
    for row in &rows {
        let p = m.posterior_ai(row).unwrap();
        let q = mnb_posterior_oracle(x, y, alpha, &row.0);
        worst = worst.max((p - q).abs());
        let oracle_label = if q > 0.5 { Label::Ai } else { Label::Human };
        // Predictions may only differ where the oracle sits on the boundary.
        if m.predict(row).unwrap() != oracle_label && (q - 0.5).abs() > 1e-12 {
            agree = false;
        }
    }
    (worst, agree)
}

pub fn auc_matches(scores: &[f64], truth: &[Label]) -> bool {
    auc(scores, truth).unwrap() == auc_pairwise(scores, truth)
}

pub fn entity_matches(tokens: &[String], lexicon: &Lexicon, max_n: usize) -> bool {
    let d = CleanDocument::new("d", tokens.to_vec());
    let got: BTreeMap<String, u64> = extract_entity_grams(&d, lexicon, max_n).into_iter().collect();
    got == entity_oracle(tokens, lexicon, max_n)
}

pub const SMALL_ALPHABET: [&str; 6] = ["cell", "gene", "virus", "model", "data", "risk"];

pub fn random_small_doc(rng: &mut ChaCha8Rng, max_len: usize) -> CleanDocument {
    let n = rng.random_range(1..=max_len);
    let tokens = (0..n).map(|_| SMALL_ALPHABET[rng.random_range(0..SMALL_ALPHABET.len())].to_string()).collect();
    CleanDocument::new("d", tokens)
}

// ---- gradient checks ----

use absdetect_core::models::{logistic_objective, svm_objective, DenseSequence, LstmModel};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<DenseVector> {
    (0..n).map(|_| DenseVector((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())).collect()
}

/// Relative error of the analytic logistic-loss gradient.
pub fn logreg_gradient_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d) = (12, 5);
    let x = random_rows(&mut r, n, d);
    let y = random_labels(&mut r, n);
    let params: Vec<f64> = (0..=d).map(|_| r.random_range(-1.0..1.0)).collect();
    let l2 = 0.05;
    let (_, gw, gb) = logistic_objective(&params[..d], params[d], &x, &y, l2);
    let mut analytic = gw;
    analytic.push(gb);
    let numeric = numeric_gradient(&params, 1e-6, |p| logistic_objective(&p[..d], p[d], &x, &y, l2).0);
    relative_error(&analytic, &numeric)
}

/// Relative error of the SVM subgradient at a point where no margin is
/// within 1e-3 of the hinge, or `None` if the sampled point was a kink.
pub fn svm_gradient_error(seed: u64) -> Option<f64> {
    let mut r = rng(seed);
    let (n, d) = (12, 5);
    let x = random_rows(&mut r, n, d);
    let y = random_labels(&mut r, n);
    let params: Vec<f64> = (0..=d).map(|_| r.random_range(-1.5..1.5)).collect();
    let near_kink = x.iter().zip(&y).any(|(row, l)| {
        let m = l.sign() * (row.0.iter().zip(&params).map(|(a, b)| a * b).sum::<f64>() + params[d]);
        (m - 1.0).abs() < 1e-3
    });
    if near_kink {
        return None;
    }
    let lambda = 0.1;
    let (_, gw, gb) = svm_objective(&params[..d], params[d], &x, &y, lambda);
    let mut analytic = gw;
    analytic.push(gb);
    let numeric = numeric_gradient(&params, 1e-7, |p| svm_objective(&p[..d], p[d], &x, &y, lambda).0);
    Some(relative_error(&analytic, &numeric))
}

/// Relative error of the BPTT gradient over every parameter block on a
/// 3-step, hidden-4 instance, block by block.
pub fn lstm_gradient_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut r = rng(seed);
    let (d, h, steps) = (3, 4, 3);
    let mut model = LstmModel::init(d, h, 0.0, seed).unwrap();
    for p in model.params_mut() {
        *p = r.random_range(-0.8..0.8);
    }
    let seqs: Vec<DenseSequence> = (0..3)
        .map(|_| DenseSequence {
            data: (0..steps * d).map(|_| r.random_range(-1.0..1.0)).collect(),
            dim: d,
        })
        .collect();
    let y = vec![Label::Ai, Label::Human, Label::Ai];
    let (_, analytic) = model.loss_and_gradient(&seqs, &y).unwrap();
    let base = model.params().to_vec();
    let numeric = numeric_gradient(&base, 1e-5, |p| {
        let m = LstmModel::from_parts(d, h, 0.0, p.to_vec()).unwrap();
        m.loss_and_gradient(&seqs, &y).unwrap().0
    });
    let mut out: Vec<(&'static str, f64)> = model
        .param_blocks()
        .into_iter()
        .map(|(name, range)| (name, relative_error(&analytic[range.clone()], &numeric[range])))
        .collect();
    out.push(("all", relative_error(&analytic, &numeric)));
    out
}

// ---- protocol invariants ----

use std::collections::HashSet;

use absdetect_core::corpus::{AbstractRecord, PairedDataset};
use absdetect_core::evaluation::{clean_dataset, run_iteration, ExperimentConfig, FittedFeatures, Resources};

/// A paired dataset whose AI titles differ from the human ones only in
/// case and spacing, shuffled record order.
pub fn random_paired_dataset(n_pairs: usize, seed: u64) -> PairedDataset {
    let mut r = rng(seed);
    let mut records = Vec::new();
    for i in 0..n_pairs {
        let title = format!("Title number {i} about things");
        let variant = format!("  title NUMBER {i}   about Things ");
        records.push(AbstractRecord::new(format!("h{i}"), &title, "human text", Label::Human).unwrap());
        records.push(AbstractRecord::new(format!("a{i}"), &variant, "ai text", Label::Ai).unwrap());
    }
    for i in (1..records.len()).rev() {
        let j = r.random_range(0..=i);
        records.swap(i, j);
    }
    PairedDataset::from_records(records, false).unwrap()
}

/// Both members of every pair on the same side, sides disjoint and
/// covering the dataset, test side holding floor((1-f) n) pairs.
pub fn check_co_location(ds: &PairedDataset, fraction: f64, seed: u64) -> Result<(), String> {
    let split = ds.split_by_title(fraction, seed).map_err(|e| e.to_string())?;
    let train: HashSet<&str> = split.train_ids.iter().map(String::as_str).collect();
    let test: HashSet<&str> = split.test_ids.iter().map(String::as_str).collect();
    if !train.is_disjoint(&test) || train.len() + test.len() != ds.len() {
        return Err("sides overlap or miss records".into());
    }
    for pair in ds.pairs().values() {
        if train.contains(pair.human.as_str()) != train.contains(pair.ai.as_str()) {
            return Err(format!("pair {} / {} split across sides", pair.human, pair.ai));
        }
    }
    let n_pairs = ds.pairs().len();
    let expected_test = ((1.0 - fraction) * n_pairs as f64 + 1e-9).floor() as usize;
    if test.len() != 2 * expected_test {
        return Err(format!("{} test records, expected {}", test.len(), 2 * expected_test));
    }
    Ok(())
}

/// Refits the iteration's features on its train documents alone and
/// compares document frequencies; also checks that no test-only token
/// entered the vocabulary.
pub fn check_no_leakage(config: &ExperimentConfig, ds: &PairedDataset, iteration: usize) -> Result<(), String> {
    let resources = Resources::default();
    let docs = clean_dataset(ds, &resources.stopwords);
    let outcome = run_iteration(config, ds, &docs, &resources, iteration).map_err(|e| e.to_string())?;
    let FittedFeatures::Tfidf { vocabulary } = &outcome.features else {
        return Err("expected TF-IDF features".into());
    };
    let train_docs: Vec<CleanDocument> = outcome
        .split
        .train_ids
        .iter()
        .map(|id| docs[ds.position(id).unwrap()].clone())
        .collect();
    let (min_df, max_df) = vocabulary.band();
    let refit = TfidfVocabulary::fit(&train_docs, min_df, max_df).map_err(|e| e.to_string())?;
    if &refit != vocabulary {
        return Err("vocabulary differs from a train-only refit".into());
    }
    if vocabulary.n_documents() as usize != train_docs.len() {
        return Err("document count includes non-train documents".into());
    }
    for (term, &df) in vocabulary.terms().iter().zip(vocabulary.document_frequency()) {
        let direct = train_docs.iter().filter(|d| d.tokens.contains(term)).count() as u64;
        if direct != df {
            return Err(format!("df of `{term}` is {df}, train documents give {direct}"));
        }
    }
    Ok(())
}

// ---- synthetic-distribution sanity ----

use absdetect_core::analysis::frequency_contrast;
use absdetect_core::evaluation::{run_experiment, FeatureConfig, ModelConfig};
use absdetect_core::models::{LogRegHyper, LstmHyper, SvmHyper};
use absdetect_core::synthetic::{synthetic_corpus, synthetic_embeddings, SyntheticSpec};
use absdetect_core::textprep::{clean, StopWordList};

pub struct SyntheticOutcome {
    /// (name, mean accuracy, required minimum)
    pub models: Vec<(String, f64, f64)>,
    pub planted_in_human_table: Vec<String>,
    pub rare_in_ai_table: Vec<String>,
}

pub fn synthetic_sanity(iterations: usize) -> SyntheticOutcome {
    let spec = SyntheticSpec::default();
    let ds = synthetic_corpus(&spec);
    let resources = Resources::default().with_embeddings(synthetic_embeddings(&spec, 8, 7));
    let lstm = LstmHyper {
        hidden_dim: 8,
        max_epochs: 15,
        ..Default::default()
    };
    let runs = [
        (FeatureConfig::tfidf(), ModelConfig::Logreg(LogRegHyper::default()), 0.95),
        (FeatureConfig::tfidf(), ModelConfig::Mnb { alpha: 1.0 }, 0.95),
        (FeatureConfig::tfidf(), ModelConfig::Svm(SvmHyper::default()), 0.95),
        (
            FeatureConfig::EmbeddingSequence {
                embeddings: None,
                max_len: 64,
            },
            ModelConfig::Lstm(lstm),
            0.90,
        ),
    ];
    let models = runs
        .into_iter()
        .map(|(f, m, min)| {
            let mut c = ExperimentConfig::new(f, m);
            c.iterations = iterations;
            let r = run_experiment(&c, &ds, &resources).unwrap();
            (r.name, r.mean.accuracy, min)
        })
        .collect();

    let stops = StopWordList::english();
    let cleaned: Vec<CleanDocument> = ds.records().iter().map(|r| clean(r.id.as_str(), &r.abstract_text, &stops)).collect();
    let (ai, human): (Vec<(&CleanDocument, Label)>, Vec<(&CleanDocument, Label)>) =
        cleaned.iter().zip(ds.records().iter().map(|r| r.label)).partition(|(_, l)| l.is_ai());
    let ai: Vec<&CleanDocument> = ai.into_iter().map(|p| p.0).collect();
    let human: Vec<&CleanDocument> = human.into_iter().map(|p| p.0).collect();
    let contrast = frequency_contrast("AI", &ai, "human", &human, 20).unwrap();
    let rare: HashSet<String> = spec.rare_words().into_iter().collect();
    SyntheticOutcome {
        models,
        planted_in_human_table: contrast.only_in_b.iter().filter(|t| rare.contains(*t)).cloned().collect(),
        rare_in_ai_table: contrast.a.entries.iter().map(|e| e.0.clone()).filter(|t| rare.contains(t)).collect(),
    }
}
