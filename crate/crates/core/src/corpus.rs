//! Paired human/AI abstract corpus: data model, file ingestion, validation
//! and the title-level train/test split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance label. AI is the positive class everywhere in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    #[serde(rename = "ai")]
    Ai,
}

impl Label {
    pub fn is_ai(self) -> bool {
        self == Label::Ai
    }

    /// `+1.0` for AI, `-1.0` for Human.
    pub fn sign(self) -> f64 {
        match self {
            Label::Ai => 1.0,
            Label::Human => -1.0,
        }
    }

    /// `1.0` for AI, `0.0` for Human.
    pub fn target(self) -> f64 {
        match self {
            Label::Ai => 1.0,
            Label::Human => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Ai => "ai",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(Label::Human),
            "ai" => Ok(Label::Ai),
            other => Err(Error::InvalidArgument(format!(
                "unknown label `{other}` (expected \"human\" or \"ai\")"
            ))),
        }
    }
}

/// Lowercased, whitespace-collapsed title used to pair records.
pub fn title_key(title: &str) -> String {
    title
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Number of whitespace-separated tokens in a raw title.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub label: Label,
}

impl AbstractRecord {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        label: Label,
    ) -> Result<Self> {
        let record = AbstractRecord {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            label,
        };
        if record.id.trim().is_empty() {
            return Err(Error::InvalidArgument("record id is empty".into()));
        }
        if record.abstract_text.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "record `{}` has an empty abstract",
                record.id
            )));
        }
        if record.title_word_count() == 0 {
            return Err(Error::InvalidArgument(format!(
                "record `{}` has an empty title",
                record.id
            )));
        }
        Ok(record)
    }

    pub fn title_word_count(&self) -> usize {
        word_count(&self.title)
    }

    pub fn title_key(&self) -> String {
        title_key(&self.title)
    }
}

/// Ids of the Human and AI records sharing one title.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub human: String,
    pub ai: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guess from the file extension; anything other than `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(DatasetFormat::Jsonl),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown dataset format `{other}`"))),
        }
    }
}

/// A validated corpus in which every title has exactly one human and one
/// AI abstract (unless loaded with `allow_unpaired`).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    records: Vec<AbstractRecord>,
    pairs: BTreeMap<String, Pair>,
    index: HashMap<String, usize>,
}

impl PairedDataset {
    /// Builds a dataset, enforcing unique ids and (unless `allow_unpaired`)
    /// complete title pairs.
    pub fn from_records(records: Vec<AbstractRecord>, allow_unpaired: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }

        #[derive(Default)]
        struct Slots {
            human: Vec<usize>,
            ai: Vec<usize>,
        }
        let mut by_title: BTreeMap<String, Slots> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let slots = by_title.entry(r.title_key()).or_default();
            match r.label {
                Label::Human => slots.human.push(i),
                Label::Ai => slots.ai.push(i),
            }
        }

        let mut pairs = BTreeMap::new();
        let mut orphans = Vec::new();
        for (key, slots) in by_title {
            if slots.human.len() == 1 && slots.ai.len() == 1 {
                pairs.insert(
                    key,
                    Pair {
                        human: records[slots.human[0]].id.clone(),
                        ai: records[slots.ai[0]].id.clone(),
                    },
                );
            } else {
                orphans.push(records[slots.human.first().or(slots.ai.first()).copied().unwrap()].title.clone());
            }
        }
        if !orphans.is_empty() && !allow_unpaired {
            return Err(Error::IncompletePairs(orphans));
        }

        Ok(PairedDataset {
            records,
            pairs,
            index,
        })
    }

    pub fn load(path: impl AsRef<Path>, format: DatasetFormat, allow_unpaired: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let records = match format {
            DatasetFormat::Jsonl => read_jsonl_records(reader)?,
            DatasetFormat::Csv => read_csv_records(reader)?,
        };
        Self::from_records(records, allow_unpaired)
    }

    pub fn save(&self, path: impl AsRef<Path>, format: DatasetFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        match format {
            DatasetFormat::Jsonl => write_jsonl_records(&mut w, &self.records).map_err(|e| Error::io(path, e))?,
            DatasetFormat::Csv => write_csv_records(&mut w, &self.records)?,
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn records(&self) -> &[AbstractRecord] {
        &self.records
    }

    pub fn pairs(&self) -> &BTreeMap<String, Pair> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AbstractRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Title groups in order of first appearance; each group holds the
    /// record indices sharing a title-key.
    fn title_groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in self.records.iter().enumerate() {
            let key = r.title_key();
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(i);
        }
        order
            .into_iter()
            .map(|k| groups.remove(&k).unwrap_or_default())
            .collect()
    }

    /// Title-level split: pairs are shuffled with a seeded permutation and
    /// `floor((1 - train_fraction) * #pairs)` of them go to test, the rest to
    /// train, so both members of a pair always land on the same side.
    pub fn split_by_title(&self, train_fraction: f64, seed: u64) -> Result<SplitAssignment> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        if self.is_empty() {
            return Err(Error::InvalidArgument("cannot split an empty dataset".into()));
        }
        let mut groups = self.title_groups();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        groups.shuffle(&mut rng);

        let n_test = test_group_count(groups.len(), train_fraction);
        let n_train = groups.len() - n_test;
        let mut train_mask = vec![false; self.records.len()];
        for group in &groups[..n_train] {
            for &i in group {
                train_mask[i] = true;
            }
        }
        let (mut train_ids, mut test_ids) = (Vec::new(), Vec::new());
        for (r, is_train) in self.records.iter().zip(train_mask) {
            if is_train {
                train_ids.push(r.id.clone());
            } else {
                test_ids.push(r.id.clone());
            }
        }
        Ok(SplitAssignment {
            train_ids,
            test_ids,
            seed,
            train_fraction,
        })
    }

    /// Restricts the dataset to the given ids, keeping record order.
    pub fn subset(&self, ids: &[String]) -> Result<PairedDataset> {
        let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
        let records = self
            .records
            .iter()
            .filter(|r| wanted.contains(r.id.as_str()))
            .cloned()
            .collect::<Vec<_>>();
        if records.len() != wanted.len() {
            let missing = ids.iter().find(|id| !self.index.contains_key(id.as_str()));
            return Err(Error::InvalidArgument(format!(
                "unknown record id `{}`",
                missing.map(String::as_str).unwrap_or("?")
            )));
        }
        PairedDataset::from_records(records, true)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut per_key: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for r in &self.records {
            match r.label {
                Label::Human => report.n_human += 1,
                Label::Ai => report.n_ai += 1,
            }
            if r.abstract_text.trim().is_empty() {
                report.empty_abstracts.push(r.id.clone());
            }
            let slot = per_key.entry(r.title_key()).or_default();
            match r.label {
                Label::Human => slot.0 += 1,
                Label::Ai => slot.1 += 1,
            }
        }
        for (key, (h, a)) in per_key {
            if h > 1 || a > 1 {
                report.duplicate_titles.push(key);
            } else if h != a {
                report.unpaired_titles.push(key);
            }
        }
        report
    }
}

/// Number of title groups assigned to the test side.
pub(crate) fn test_group_count(n_groups: usize, train_fraction: f64) -> usize {
    // The epsilon absorbs binary rounding of e.g. (1 - 0.8) * 10.
    let n = ((1.0 - train_fraction) * n_groups as f64 + 1e-9).floor() as usize;
    n.min(n_groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_human: usize,
    pub n_ai: usize,
    pub empty_abstracts: Vec<String>,
    pub duplicate_titles: Vec<String>,
    pub unpaired_titles: Vec<String>,
}

impl ValidationReport {
    pub fn anomaly_count(&self) -> usize {
        self.empty_abstracts.len() + self.duplicate_titles.len() + self.unpaired_titles.len()
    }
}

#[derive(Deserialize)]
struct RawRow {
    id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    label: Option<String>,
}

fn row_to_record(row: usize, raw: RawRow) -> Result<AbstractRecord> {
    let missing = |field: &str| Error::MalformedRow {
        row,
        field: field.to_string(),
        message: "missing".into(),
    };
    let id = raw.id.ok_or_else(|| missing("id"))?;
    let title = raw.title.ok_or_else(|| missing("title"))?;
    let abstract_text = raw.abstract_text.ok_or_else(|| missing("abstract"))?;
    let label = raw.label.ok_or_else(|| missing("label"))?;
    let bad = |field: &str, message: String| Error::MalformedRow {
        row,
        field: field.to_string(),
        message,
    };
    if id.trim().is_empty() {
        return Err(bad("id", "empty".into()));
    }
    if word_count(&title) == 0 {
        return Err(bad("title", "empty".into()));
    }
    if abstract_text.trim().is_empty() {
        return Err(bad("abstract", "empty".into()));
    }
    let label = label.parse::<Label>().map_err(|e| bad("label", e.to_string()))?;
    Ok(AbstractRecord {
        id,
        title,
        abstract_text,
        label,
    })
}

fn read_jsonl_records(reader: impl BufRead) -> Result<Vec<AbstractRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::MalformedRow {
            row,
            field: "<line>".into(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRow = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            row,
            field: "<json>".into(),
            message: e.to_string(),
        })?;
        records.push(row_to_record(row, raw)?);
    }
    Ok(records)
}

fn read_csv_records(reader: impl std::io::Read) -> Result<Vec<AbstractRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<RawRow>().enumerate() {
        // Row numbers count the header as row 1.
        let row_no = i + 2;
        let raw = row.map_err(|e| Error::MalformedRow {
            row: row_no,
            field: "<csv>".into(),
            message: e.to_string(),
        })?;
        records.push(row_to_record(row_no, raw)?);
    }
    Ok(records)
}

pub(crate) fn write_jsonl_records<W: Write>(w: &mut W, records: &[AbstractRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn write_csv_records<W: Write>(w: &mut W, records: &[AbstractRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, title: &str, label: Label) -> AbstractRecord {
        AbstractRecord::new(id, title, format!("abstract of {id}"), label).unwrap()
    }

    fn pairs(n: usize) -> PairedDataset {
        let mut records = Vec::new();
        for i in 0..n {
            records.push(rec(&format!("h{i}"), &format!("Title number {i}"), Label::Human));
            records.push(rec(&format!("a{i}"), &format!("Title number {i}"), Label::Ai));
        }
        PairedDataset::from_records(records, false).unwrap()
    }

    #[test]
    fn four_rows_form_two_pairs() {
        let ds = pairs(2);
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.pairs().len(), 2);
    }

    #[test]
    fn title_key_collapses_whitespace_and_case() {
        assert_eq!(title_key("  A  Study\tOf\nThings "), "a study of things");
        let ds = PairedDataset::from_records(
            vec![
                rec("h", "COVID  and   Masks", Label::Human),
                rec("a", "covid and masks", Label::Ai),
            ],
            false,
        )
        .unwrap();
        assert_eq!(ds.pairs().len(), 1);
    }

    #[test]
    fn orphan_title_rejected_in_strict_mode() {
        let records = vec![
            rec("h0", "Paired", Label::Human),
            rec("a0", "Paired", Label::Ai),
            rec("h1", "Lonely title", Label::Human),
        ];
        let err = PairedDataset::from_records(records.clone(), false).unwrap_err();
        match err {
            Error::IncompletePairs(titles) => assert_eq!(titles, vec!["Lonely title".to_string()]),
            other => panic!("unexpected {other}"),
        }
        let ds = PairedDataset::from_records(records, true).unwrap();
        assert_eq!(ds.pairs().len(), 1);
        assert_eq!(ds.validate().unpaired_titles, vec!["lonely title".to_string()]);
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = PairedDataset::from_records(
            vec![rec("x", "T", Label::Human), rec("x", "T", Label::Ai)],
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "x"));
    }

    #[test]
    fn ten_pairs_split_eight_two() {
        let ds = pairs(10);
        for seed in 0..20 {
            let s = ds.split_by_title(0.8, seed).unwrap();
            assert_eq!(s.train_ids.len(), 16);
            assert_eq!(s.test_ids.len(), 4);
        }
    }

    #[test]
    fn full_corpus_split_counts() {
        // 14,331 pairs at 80/20 gives 22,930 train and 5,732 test records.
        assert_eq!(test_group_count(14_331, 0.8), 2_866);
        assert_eq!(2 * (14_331 - 2_866), 22_930);
        assert_eq!(2 * 2_866, 5_732);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = pairs(25);
        assert_eq!(ds.split_by_title(0.8, 7).unwrap(), ds.split_by_title(0.8, 7).unwrap());
        assert_ne!(
            ds.split_by_title(0.8, 7).unwrap().test_ids,
            ds.split_by_title(0.8, 8).unwrap().test_ids
        );
    }

    #[test]
    fn split_fraction_out_of_range() {
        let ds = pairs(3);
        for f in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(ds.split_by_title(f, 0).is_err());
        }
    }

    #[test]
    fn validate_balanced_and_injected_empty() {
        let ds = pairs(2);
        let report = ds.validate();
        assert_eq!((report.n_human, report.n_ai, report.anomaly_count()), (2, 2, 0));

        let mut records = ds.records().to_vec();
        records[1].abstract_text = "   ".into();
        let ds = PairedDataset::from_records(records, false).unwrap();
        assert_eq!(ds.validate().empty_abstracts, vec!["a0".to_string()]);
    }

    #[test]
    fn jsonl_malformed_row_names_row_and_field() {
        let text = "{\"id\":\"h\",\"title\":\"T\",\"abstract\":\"x\",\"label\":\"human\"}\n{\"id\":\"a\",\"title\":\"T\",\"abstract\":\"x\"}\n";
        let err = read_jsonl_records(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, ref field, .. } if field == "label"), "{err}");

        let text = "{\"id\":\"h\",\"title\":\"T\",\"abstract\":\"x\",\"label\":\"robot\"}\n";
        let err = read_jsonl_records(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 1, ref field, .. } if field == "label"));
    }

    #[test]
    fn csv_quoted_fields() {
        let text = "id,title,abstract,label\nh1,\"A, B\",\"He said \"\"hi\"\"\nthen left\",human\na1,\"A, B\",gen,ai\n";
        let records = read_csv_records(text.as_bytes()).unwrap();
        assert_eq!(records[0].title, "A, B");
        assert_eq!(records[0].abstract_text, "He said \"hi\"\nthen left");
        let ds = PairedDataset::from_records(records, false).unwrap();
        assert_eq!(ds.pairs().len(), 1);
    }

    #[test]
    fn csv_missing_field_row_number() {
        let text = "id,title,abstract,label\nh1,T,,human\n";
        let err = read_csv_records(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, ref field, .. } if field == "abstract"), "{err}");
    }
}
