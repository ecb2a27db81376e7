//! Reading and writing sequences and domains.
//!
//! Sequences are CSV with a `re,im` header or JSON arrays of `[re, im]`
//! pairs, chosen by file extension. Floats are written with 17 significant
//! digits so files round-trip exactly.

use std::fs;
use std::path::Path;

use crate::domains::{ChampagneDomain, DomainFile};
use crate::error::{Error, Result};
use crate::hyperbolic::Point;
use crate::sequences::PointSequence;

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn sequence_to_csv(seq: &PointSequence) -> String {
    let mut out = String::from("re,im\n");
    for p in seq.points() {
        out.push_str(&format!("{:.16e},{:.16e}\n", p.re, p.im));
    }
    out
}

pub fn sequence_to_json(seq: &PointSequence) -> Result<String> {
    let pairs: Vec<[f64; 2]> = seq.points().iter().map(|p| [p.re, p.im]).collect();
    Ok(serde_json::to_string(&pairs)?)
}

pub fn sequence_from_csv(text: &str, label: &str) -> Result<PointSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let re = rec.get(0).map(str::parse::<f64>);
        let im = rec.get(1).map(str::parse::<f64>);
        match (re, im) {
            (Some(Ok(re)), Some(Ok(im))) => points.push(Point::new(re, im)),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("bad sequence row {}", i + 1))),
        }
    }
    PointSequence::new(points, label)
}

pub fn sequence_from_json(text: &str, label: &str) -> Result<PointSequence> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
    PointSequence::new(pairs.into_iter().map(|[re, im]| Point::new(re, im)).collect(), label)
}

pub fn read_sequence(path: &Path) -> Result<PointSequence> {
    let text = fs::read_to_string(path)?;
    let label = path.display().to_string();
    if is_json(path) {
        sequence_from_json(&text, &label)
    } else {
        sequence_from_csv(&text, &label)
    }
}

pub fn sequence_to_string(seq: &PointSequence, json: bool) -> Result<String> {
    if json {
        sequence_to_json(seq)
    } else {
        Ok(sequence_to_csv(seq))
    }
}

pub fn write_sequence(path: &Path, seq: &PointSequence) -> Result<()> {
    fs::write(path, sequence_to_string(seq, is_json(path))?)?;
    Ok(())
}

pub fn domain_to_json(domain: &ChampagneDomain) -> Result<String> {
    Ok(serde_json::to_string_pretty(&DomainFile::from(domain))?)
}

pub fn domain_from_json(text: &str) -> Result<ChampagneDomain> {
    let file: DomainFile = serde_json::from_str(text)?;
    ChampagneDomain::try_from(file)
}

pub fn read_domain(path: &Path) -> Result<ChampagneDomain> {
    domain_from_json(&fs::read_to_string(path)?)
}
