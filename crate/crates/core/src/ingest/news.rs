use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One article attributed to a country search keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsDocument {
    pub keyword: String,
    pub date: NaiveDate,
    pub body: String,
}

#[derive(Debug, Default)]
pub struct NewsLoad {
    pub documents: Vec<NewsDocument>,
    /// Records dropped because the body was blank.
    pub skipped_empty: usize,
    /// Records dropped because their keyword was not configured.
    pub unknown_keyword: Vec<(u64, String)>,
}

pub fn load_news(path: impl AsRef<Path>, keywords: Option<&BTreeSet<String>>) -> Result<NewsLoad> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_news(BufReader::new(file), &path.display().to_string(), keywords)
}

/// Parses newline-delimited `{keyword, date, body}` records. Blank lines are
/// ignored; blank bodies and unknown keywords are skipped with a warning.
pub fn read_news<R: BufRead>(
    reader: R,
    source: &str,
    keywords: Option<&BTreeSet<String>>,
) -> Result<NewsLoad> {
    let mut load = NewsLoad::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: NewsDocument = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
        if doc.body.trim().is_empty() {
            load.skipped_empty += 1;
            continue;
        }
        if let Some(set) = keywords {
            if !set.contains(&doc.keyword) {
                warn!(
                    "{source}:{line_no}: {}",
                    Error::UnknownKeyword(doc.keyword.clone())
                );
                load.unknown_keyword.push((line_no, doc.keyword));
                continue;
            }
        }
        load.documents.push(doc);
    }
    if load.skipped_empty > 0 {
        warn!(
            "{source}: skipped {} records with empty body",
            load.skipped_empty
        );
    }
    Ok(load)
}

pub fn write_news<W: Write>(docs: &[NewsDocument], mut out: W) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
