//! CSV datasets: one label column, every other column a numeric feature.
//!
//! A first row containing any non-numeric cell is taken as a header.
//! Reported row and column numbers are 1-based positions in the file.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::file_stem;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Which column holds the labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    /// 0-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// `last`, a 0-based index, or a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s == "last" {
            Self::Last
        } else if let Ok(i) = s.parse() {
            Self::Index(i)
        } else {
            Self::Name(s.to_string())
        })
    }
}

fn parse_label(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    cell.parse::<i64>().ok().or_else(|| {
        let v: f64 = cell.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

pub fn read_csv_from<R: Read>(reader: R, label: &LabelColumn, name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records().peekable();

    let mut header: Option<csv::StringRecord> = None;
    let mut first_line = 1;
    if let Some(Ok(first)) = records.peek() {
        if first.iter().any(|c| c.parse::<f64>().is_err()) {
            header = Some(first.clone());
            records.next();
            first_line = 2;
        }
    }

    let mut width = header.as_ref().map(|h| h.len());
    let mut label_col = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = first_line + i;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::RaggedRows {
                row,
                expected: w,
                got: rec.len(),
            });
        }
        let lc = match label_col {
            Some(c) => c,
            None => {
                let c = resolve(label, header.as_ref(), w)?;
                label_col = Some(c);
                c
            }
        };
        for (col, cell) in rec.iter().enumerate() {
            if col == lc {
                labels.push(parse_label(cell).ok_or_else(|| Error::Parse {
                    row,
                    col: col + 1,
                    msg: format!("label {cell:?} is not an integer"),
                })?);
            } else {
                features.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    col: col + 1,
                    msg: format!("{cell:?} is not a number"),
                })?);
            }
        }
    }
    let w = match width {
        Some(w) if !labels.is_empty() => w,
        _ => return Err(Error::EmptyDataset),
    };
    if w < 2 {
        return Err(Error::InvalidDimension(0));
    }
    Dataset::new(features, labels, w - 1, name)
}

fn resolve(label: &LabelColumn, header: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
    match label {
        LabelColumn::Last => Ok(width - 1),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => Err(Error::MissingLabelColumn(i.to_string())),
        LabelColumn::Name(n) => header
            .and_then(|h| h.iter().position(|c| c == n))
            .ok_or_else(|| Error::MissingLabelColumn(n.clone())),
    }
}

pub fn read_csv_dataset(path: &Path, label: &LabelColumn) -> Result<Dataset> {
    read_csv_from(File::open(path)?, label, &file_stem(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, label: LabelColumn) -> Result<Dataset> {
        read_csv_from(text.as_bytes(), &label, "t")
    }

    #[test]
    fn three_by_three() {
        let ds = read("1,2,0\n3,4,1\n5,6,0\n", LabelColumn::Last).unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 2));
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn header_and_named_label() {
        let ds = read("y,a,b\n2,0.5,1e3\n7,-1,2\n", LabelColumn::Name("y".into())).unwrap();
        assert_eq!(ds.labels(), &[2, 7]);
        assert_eq!(ds.row(0), &[0.5, 1000.0]);
        assert!(matches!(
            read("y,a\n1,2\n", LabelColumn::Name("z".into())),
            Err(Error::MissingLabelColumn(_))
        ));
        assert!(matches!(
            read("1,2\n", LabelColumn::Index(5)),
            Err(Error::MissingLabelColumn(_))
        ));
    }

    #[test]
    fn parse_error_location() {
        let err = read("1,2,0\n3,x,1\n", LabelColumn::Last).unwrap_err();
        match err {
            Error::Parse { row, col, .. } => assert_eq!((row, col), (2, 2)),
            e => panic!("{e}"),
        }
        let err = read("a,b,c\n1,2,0\n3,4,zz\n", LabelColumn::Last).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, col: 3, .. }));
    }

    #[test]
    fn ragged_and_empty() {
        assert!(matches!(
            read("1,2,0\n3,1\n", LabelColumn::Last),
            Err(Error::RaggedRows {
                row: 2,
                expected: 3,
                got: 2
            })
        ));
        assert!(matches!(
            read("a,b,label\n", LabelColumn::Last),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(read("", LabelColumn::Last), Err(Error::EmptyDataset)));
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("last".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!("0".parse::<LabelColumn>().unwrap(), LabelColumn::Index(0));
        assert_eq!("cls".parse::<LabelColumn>().unwrap(), LabelColumn::Name("cls".into()));
        assert_eq!(read("1,2.0\n", LabelColumn::Last).unwrap().labels(), &[2]);
    }
}
