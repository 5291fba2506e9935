//! Feature files: CSV with header `source_id,split,label,f0,...,f{D-1}`.
//!
//! A file may hold several sources; a directory is read as the union of its
//! `*.csv` files in name order. Sources are returned sorted by id.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use covsel_core::detector::Split;
use covsel_core::{Label, Sample, SourceDataset, SourceId};

use super::csv_error;
use crate::error::{Error, Result};

#[derive(Default)]
struct Pending {
    train: Vec<Sample>,
    test: Vec<Sample>,
    first_line: u64,
}

fn parse_file(path: &Path, sources: &mut BTreeMap<SourceId, Pending>, dimension: &mut Option<usize>) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let d = header.len().saturating_sub(3);
    let expected: Vec<String> =
        ["source_id", "split", "label"].iter().map(|s| s.to_string()).chain((0..d).map(|j| format!("f{j}"))).collect();
    if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(path, 1, "header must be `source_id,split,label,f0,...,f{D-1}`"));
    }
    match dimension {
        Some(prev) if *prev != d => {
            return Err(Error::parse(path, 1, format!("dimension {d} differs from {prev} in earlier files")));
        }
        _ => *dimension = Some(d),
    }

    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let source_id: SourceId = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid source_id `{}`", &record[0])))?;
        let split = Split::parse(record[1].trim())
            .ok_or_else(|| Error::parse(path, line, format!("unknown split `{}`", &record[1])))?;
        let label = Label::parse(record[2].trim())
            .ok_or_else(|| Error::parse(path, line, format!("unknown label `{}`", &record[2])))?;
        let features = record
            .iter()
            .skip(3)
            .enumerate()
            .map(|(j, v)| match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::parse(path, line, format!("f{j}: `{v}` is not a finite number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let entry = sources.entry(source_id).or_insert_with(|| Pending { first_line: line, ..Default::default() });
        let sample = Sample::new(features, label);
        match split {
            Split::Train => entry.train.push(sample),
            Split::Test => entry.test.push(sample),
        }
    }
    Ok(())
}

fn csv_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("{}: no .csv feature files found", path.display())));
    }
    Ok(files)
}

/// Loads every source from a feature file or a directory of them.
pub fn load_feature_files(path: &Path) -> Result<Vec<SourceDataset>> {
    let mut sources = BTreeMap::new();
    let mut dimension = None;
    for file in csv_files(path)? {
        parse_file(&file, &mut sources, &mut dimension)?;
    }
    sources
        .into_iter()
        .map(|(id, p)| {
            SourceDataset::new(id, p.train, p.test)
                .map_err(|e| Error::parse(path, p.first_line, format!("source {id} (first seen here): {e}")))
        })
        .collect()
}

/// Writes all datasets to one CSV file, train rows before test rows.
pub fn write_feature_file(path: &Path, datasets: &[SourceDataset]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let d = datasets.first().map_or(0, |d| d.dimension());
    let mut header = String::from("source_id,split,label");
    for j in 0..d {
        header.push_str(&format!(",f{j}"));
    }
    let io = |e| Error::io(path, e);
    writeln!(out, "{header}").map_err(io)?;
    for ds in datasets {
        for (split, samples) in [(Split::Train, ds.train()), (Split::Test, ds.test())] {
            for s in samples {
                write!(out, "{},{},{}", ds.source_id(), split, s.label).map_err(io)?;
                for x in &s.features {
                    write!(out, ",{x}").map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}
