//! Canonical and Amazon-format readers, and the canonical writer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{extract_queries, tokenize, Corpus, Review, Stopwords};
use crate::{Error, Result};

pub const REVIEWS_FILE: &str = "reviews.jsonl";
pub const META_FILE: &str = "meta.jsonl";
pub const AV_FILE: &str = "av.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewFormat {
    /// `{"user", "item", "text"}` / `{"item", "categories"}`
    Canonical,
    /// `{"reviewerID", "asin", "reviewText"}` / `{"asin", "categories"}`
    Amazon,
}

impl std::str::FromStr for ReviewFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "canonical" => Ok(Self::Canonical),
            "amazon" => Ok(Self::Amazon),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub user: String,
    pub item: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub item: String,
    pub categories: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvRecord {
    pub item: String,
    pub aspect: String,
    pub value: String,
    pub mentions: u64,
}

#[derive(Deserialize)]
struct AmazonReview {
    #[serde(rename = "reviewerID")]
    reviewer_id: String,
    asin: String,
    #[serde(rename = "reviewText", default)]
    review_text: String,
}

#[derive(Deserialize)]
struct AmazonMeta {
    asin: String,
    #[serde(default)]
    categories: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub reviews: usize,
    pub dropped_empty: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetaIngestReport {
    pub items_with_queries: usize,
    pub unknown_items: usize,
    pub dropped_paths: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AvIngestReport {
    pub pairs: usize,
    pub merged: usize,
    pub multi_word_values: usize,
    pub unknown_items: usize,
    pub empty_aspects: usize,
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)> + '_> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(k, l)| (k + 1, l.map_err(|e| Error::io(path, e)))))
}

fn malformed(path: &Path, line: usize, message: impl ToString) -> Error {
    Error::Malformed {
        path: path.to_owned(),
        line,
        message: message.to_string(),
    }
}

/// Reads a review file into a fresh corpus (no queries or catalog yet).
pub fn ingest_reviews(path: &Path, format: ReviewFormat) -> Result<(Corpus, IngestReport)> {
    let mut records = Vec::new();
    for (line, text) in open_lines(path)? {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let rec = match format {
            ReviewFormat::Canonical => {
                serde_json::from_str::<ReviewRecord>(&text).map_err(|e| malformed(path, line, e))?
            }
            ReviewFormat::Amazon => {
                let a: AmazonReview =
                    serde_json::from_str(&text).map_err(|e| malformed(path, line, e))?;
                ReviewRecord {
                    user: a.reviewer_id,
                    item: a.asin,
                    text: a.review_text,
                }
            }
        };
        records.push(rec);
    }
    Corpus::from_review_records(records).map_err(|e| match e {
        Error::Empty(_) => Error::NoReviews(path.to_owned()),
        e => e,
    })
}

impl Corpus {
    /// Builds users, items, reviews and the review-word vocabulary.
    /// Reviews with no tokens are dropped and counted.
    pub fn from_review_records(
        records: impl IntoIterator<Item = ReviewRecord>,
    ) -> Result<(Corpus, IngestReport)> {
        let mut corpus = Corpus::default();
        let mut report = IngestReport::default();
        for rec in records {
            let tokens = tokenize(&rec.text);
            if tokens.is_empty() {
                report.dropped_empty += 1;
                continue;
            }
            let user = corpus.users.add(&rec.user);
            let item = corpus.items.add(&rec.item);
            let tokens = tokens.iter().map(|t| corpus.words.add(t)).collect();
            corpus.reviews.push(Review { user, item, tokens });
        }
        if corpus.reviews.is_empty() {
            return Err(Error::Empty("no usable reviews"));
        }
        if report.dropped_empty > 0 {
            log::warn!("dropped {} reviews with no tokens", report.dropped_empty);
        }
        report.reviews = corpus.reviews.len();
        corpus.reindex();
        Ok((corpus, report))
    }

    /// Extracts queries from category paths for known items.
    pub fn add_metadata(
        &mut self,
        records: impl IntoIterator<Item = MetaRecord>,
        stopwords: &Stopwords,
    ) -> MetaIngestReport {
        let mut report = MetaIngestReport::default();
        for rec in records {
            let Some(item) = self.items.id(&rec.item) else {
                report.unknown_items += 1;
                continue;
            };
            let queries = extract_queries(&rec.categories, stopwords);
            report.dropped_paths += rec.categories.len().saturating_sub(queries.len());
            if !queries.is_empty() && self.item_queries[item as usize].is_empty() {
                report.items_with_queries += 1;
            }
            for q in &queries {
                self.add_item_query(item, q);
            }
        }
        report
    }

    pub fn ingest_metadata(
        &mut self,
        path: &Path,
        format: ReviewFormat,
        stopwords: &Stopwords,
    ) -> Result<MetaIngestReport> {
        let mut records = Vec::new();
        for (line, text) in open_lines(path)? {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let rec = match format {
                ReviewFormat::Canonical => serde_json::from_str::<MetaRecord>(&text)
                    .map_err(|e| malformed(path, line, e))?,
                ReviewFormat::Amazon => {
                    let m: AmazonMeta =
                        serde_json::from_str(&text).map_err(|e| malformed(path, line, e))?;
                    MetaRecord {
                        item: m.asin,
                        categories: m.categories,
                    }
                }
            };
            records.push(rec);
        }
        Ok(self.add_metadata(records, stopwords))
    }

    /// Loads catalog rows. Multi-word values, unknown items and aspects that
    /// tokenize to nothing are skipped and counted; repeated
    /// (item, aspect, value) rows merge by summing mentions.
    pub fn add_aspect_values(
        &mut self,
        records: impl IntoIterator<Item = AvRecord>,
    ) -> AvIngestReport {
        let mut report = AvIngestReport::default();
        for rec in records {
            let Some(item) = self.items.id(&rec.item) else {
                report.unknown_items += 1;
                continue;
            };
            let value = tokenize(&rec.value);
            if value.len() != 1 {
                report.multi_word_values += 1;
                continue;
            }
            let aspect = tokenize(&rec.aspect);
            if aspect.is_empty() {
                report.empty_aspects += 1;
                continue;
            }
            let aspect = self.intern_aspect(&aspect);
            let value = self.values.intern(&value[0]);
            if self.upsert_pair(item, aspect, value, rec.mentions) {
                report.pairs += 1;
            } else {
                report.merged += 1;
            }
        }
        report
    }

    /// Reads `item \t aspect phrase \t value \t mentions` rows.
    pub fn ingest_aspect_values(&mut self, path: &Path) -> Result<AvIngestReport> {
        let mut records = Vec::new();
        for (line, text) in open_lines(path)? {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(malformed(
                    path,
                    line,
                    format!("expected 4 tab-separated fields, got {}", fields.len()),
                ));
            }
            let mentions = fields[3]
                .parse::<u64>()
                .map_err(|e| malformed(path, line, format!("mentions: {e}")))?;
            records.push(AvRecord {
                item: fields[0].to_owned(),
                aspect: fields[1].to_owned(),
                value: fields[2].to_owned(),
                mentions,
            });
        }
        Ok(self.add_aspect_values(records))
    }

    /// Loads `reviews.jsonl`, `meta.jsonl` and `av.tsv` from a directory.
    /// The latter two are optional.
    pub fn load_dir(dir: &Path, format: ReviewFormat, stopwords: &Stopwords) -> Result<Corpus> {
        let (mut corpus, _) = ingest_reviews(&dir.join(REVIEWS_FILE), format)?;
        let meta = dir.join(META_FILE);
        if meta.exists() {
            corpus.ingest_metadata(&meta, format, stopwords)?;
        }
        let av = dir.join(AV_FILE);
        if av.exists() {
            corpus.ingest_aspect_values(&av)?;
        }
        Ok(corpus)
    }

    /// Writes the corpus in canonical form. Re-ingesting the output with no
    /// stopwords reproduces the corpus exactly.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join(REVIEWS_FILE);
        let mut w = create(&path)?;
        for r in &self.reviews {
            let rec = ReviewRecord {
                user: self.users.token(r.user).to_owned(),
                item: self.items.token(r.item).to_owned(),
                text: self.words_text(&r.tokens),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(META_FILE);
        let mut w = create(&path)?;
        for (item, qs) in self.item_queries.iter().enumerate() {
            let rec = MetaRecord {
                item: self.items.token(item as u32).to_owned(),
                categories: qs.iter().map(|&q| vec![self.query_text(q)]).collect(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(AV_FILE);
        let mut w = create(&path)?;
        for p in &self.av_catalog {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.items.token(p.item),
                self.aspect_name(p.aspect),
                self.value_name(p.value),
                p.mentions
            )
            .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, item: &str, text: &str) -> ReviewRecord {
        ReviewRecord {
            user: user.into(),
            item: item.into(),
            text: text.into(),
        }
    }

    fn av(item: &str, aspect: &str, value: &str, mentions: u64) -> AvRecord {
        AvRecord {
            item: item.into(),
            aspect: aspect.into(),
            value: value.into(),
            mentions,
        }
    }

    #[test]
    fn single_record() {
        let (c, _) = Corpus::from_review_records([rec("u1", "i1", "Great Case!")]).unwrap();
        assert_eq!(c.reviews.len(), 1);
        assert_eq!(c.words.entries(), ["great", "case"]);
        assert_eq!(c.words.len(), 2);
    }

    #[test]
    fn shared_word_counts() {
        let (c, _) = Corpus::from_review_records([
            rec("u1", "i1", "nice case"),
            rec("u2", "i2", "case broke"),
        ])
        .unwrap();
        assert_eq!(c.words.count(c.words.id("case").unwrap()), 2);
    }

    #[test]
    fn empty_text_dropped() {
        let (c, report) = Corpus::from_review_records([
            rec("u1", "i1", ""),
            rec("u2", "i2", "fine"),
            rec("u3", "i3", " ?! "),
        ])
        .unwrap();
        assert_eq!(report.dropped_empty, 2);
        assert_eq!(c.reviews.len(), 1);
        assert!(Corpus::from_review_records([rec("u1", "i1", "")]).is_err());
    }

    #[test]
    fn aspect_value_rows() {
        let (mut c, _) = Corpus::from_review_records([rec("u1", "i1", "ok")]).unwrap();
        let r = c.add_aspect_values([
            av("i1", "battery life", "short", 3),
            av("i1", "case", "very flimsy", 1),
            av("i9", "case", "thin", 1),
            av("i1", "battery life", "short", 3),
        ]);
        assert_eq!(r.pairs, 1);
        assert_eq!(r.multi_word_values, 1);
        assert_eq!(r.unknown_items, 1);
        assert_eq!(r.merged, 1);
        assert_eq!(c.av_catalog.len(), 1);
        let p = &c.av_catalog[0];
        assert_eq!(c.aspects[p.aspect as usize].len(), 2);
        assert_eq!(c.value_name(p.value), "short");
        assert_eq!(p.mentions, 6);
        // skipped rows leave no trace in the vocabularies
        assert_eq!(c.values.len(), 1);
        assert_eq!(c.aspect_words.len(), 2);
    }

    #[test]
    fn malformed_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(
            &path,
            "{\"user\":\"u\",\"item\":\"i\",\"text\":\"x\"}\n{not json}\n",
        )
        .unwrap();
        match ingest_reviews(&path, ReviewFormat::Canonical) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn amazon_adapter() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(REVIEWS_FILE),
            "{\"reviewerID\":\"A1\",\"asin\":\"B0\",\"reviewText\":\"Solid charger\",\"overall\":5.0}\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(META_FILE),
            "{\"asin\":\"B0\",\"categories\":[[\"Cell Phones & Accessories\",\"Chargers\"]]}\n",
        )
        .unwrap();
        let c = Corpus::load_dir(dir.path(), ReviewFormat::Amazon, &Stopwords::english()).unwrap();
        assert_eq!(c.users.token(0), "A1");
        assert_eq!(
            c.query_text(c.item_queries[0][0]),
            "cell phones accessories chargers"
        );
        c.validate().unwrap();
    }
}
