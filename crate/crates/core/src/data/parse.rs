use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use super::{Dataset, IdMap, Interaction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatingsFormat {
    /// ml-100k `u.data`: `user\titem\trating\ttimestamp`.
    Ml100kTab,
    /// ml-1m `ratings.dat`: `user::item::rating::timestamp`.
    Ml1mDoubleColon,
    /// CSV with header `user,item,rating,timestamp`.
    Csv,
}

impl fmt::Display for RatingsFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingsFormat::Ml100kTab => "ml100k-tab",
            RatingsFormat::Ml1mDoubleColon => "ml1m-double-colon",
            RatingsFormat::Csv => "csv",
        })
    }
}

impl FromStr for RatingsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ml100k-tab" | "ml100k" | "ml-100k" | "tab" => Ok(RatingsFormat::Ml100kTab),
            "ml1m-double-colon" | "ml1m" | "ml-1m" | "dat" => Ok(RatingsFormat::Ml1mDoubleColon),
            "csv" => Ok(RatingsFormat::Csv),
            other => Err(Error::invalid(format!("unknown ratings format `{other}`"))),
        }
    }
}

pub fn parse_ratings(path: &Path, format: RatingsFormat) -> Result<Dataset> {
    let file = File::open(path)?;
    parse_ratings_from(BufReader::new(file), format)
}

pub fn parse_ratings_from<R: BufRead>(reader: R, format: RatingsFormat) -> Result<Dataset> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut interactions = Vec::new();
    let mut expect_header = format == RatingsFormat::Csv;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = match format {
            RatingsFormat::Ml100kTab => line.split('\t').collect(),
            RatingsFormat::Ml1mDoubleColon => line.split("::").collect(),
            RatingsFormat::Csv => line.split(',').map(str::trim).collect(),
        };
        if expect_header {
            expect_header = false;
            if fields != ["user", "item", "rating", "timestamp"] {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected header `user,item,rating,timestamp`".into(),
                });
            }
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let rating: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad rating `{}`", fields[2]),
        })?;
        if !rating.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite rating `{}`", fields[2]),
            });
        }
        let timestamp: i64 = fields[3].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad timestamp `{}`", fields[3]),
        })?;
        let (u, i) = (fields[0].trim(), fields[1].trim());
        if u.is_empty() || i.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty id".into(),
            });
        }
        interactions.push(Interaction {
            user: users.intern(u),
            item: items.intern(i),
            rating,
            timestamp,
        });
    }
    if interactions.is_empty() {
        return Err(Error::EmptyDataset("no ratings found".into()));
    }
    Ok(Dataset {
        interactions,
        users,
        items,
    })
}
