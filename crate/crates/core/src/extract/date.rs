//! Date recognition: numeric day serials relative to an epoch, and text
//! matched against an ordered list of patterns.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{cell_text, compile, span_is_struck, ExtractError, Selection};
use crate::graph::Resource;
use crate::workbook::{CellRef, CellValue, Workbook};

pub fn default_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Date patterns are regexes with groups `year`, `month` and optionally
/// `day`. Without named groups, groups 1, 2 and 3 are year, month and day.
/// Months may be numeric or English names; a missing day means the 1st.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateParams {
    pub property: Resource,
    pub patterns: Vec<String>,
    /// Day zero of numeric serials. Filled from the project when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateHit {
    pub cell: CellRef,
    pub date: NaiveDate,
    /// Index of the matching pattern; `None` for numeric serials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<usize>,
    pub struck: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateOutlier {
    pub cell: CellRef,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateStaging {
    pub epoch: NaiveDate,
    pub hits: Vec<DateHit>,
    pub outliers: Vec<DateOutlier>,
}

struct Compiled {
    re: ::regex::Regex,
    named: bool,
}

impl Compiled {
    fn new(pattern: &str) -> Result<Self, ExtractError> {
        let re = compile(pattern)?;
        let names: Vec<&str> = re.capture_names().flatten().collect();
        let named = names.contains(&"year") || names.contains(&"month");
        let missing = |g: &str| ExtractError::MissingGroup {
            pattern: pattern.to_string(),
            group: g.to_string(),
        };
        if named {
            for g in ["year", "month"] {
                if !names.contains(&g) {
                    return Err(missing(g));
                }
            }
        } else if re.captures_len() < 3 {
            return Err(missing("2"));
        }
        Ok(Compiled { re, named })
    }

    fn part<'h>(&self, caps: &::regex::Captures<'h>, name: &str, idx: usize) -> Option<&'h str> {
        if self.named {
            caps.name(name).map(|m| m.as_str())
        } else {
            caps.get(idx).map(|m| m.as_str())
        }
    }
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december",
];

/// `"3"`, `"03"`, `"Mar"`, `"march"` and `"Sept"` all parse.
pub fn parse_month(s: &str) -> Option<u32> {
    let s = s.trim().trim_end_matches('.');
    if let Ok(n) = s.parse::<u32>() {
        return (1..=12).contains(&n).then_some(n);
    }
    let lower = s.to_lowercase();
    if lower.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| m.starts_with(&lower))
        .map(|i| i as u32 + 1)
}

/// Epoch plus `serial` whole days; fractions are floored.
pub fn from_serial(epoch: NaiveDate, serial: f64) -> Option<NaiveDate> {
    if !serial.is_finite() {
        return None;
    }
    let days = serial.floor();
    if days.abs() > 10_000_000.0 {
        return None;
    }
    let days = days as i64;
    if days >= 0 {
        epoch.checked_add_days(Days::new(days as u64))
    } else {
        epoch.checked_sub_days(Days::new(days.unsigned_abs()))
    }
}

pub fn date_extract(
    wb: &Workbook,
    selection: &Selection,
    params: &DateParams,
) -> Result<DateStaging, ExtractError> {
    if selection.is_empty() {
        return Err(ExtractError::EmptySelection);
    }
    let patterns = params
        .patterns
        .iter()
        .map(|p| Compiled::new(p))
        .collect::<Result<Vec<_>, _>>()?;
    let epoch = params.epoch.unwrap_or_else(default_epoch);
    let mut out = DateStaging {
        epoch,
        hits: Vec::new(),
        outliers: Vec::new(),
    };
    for cell in selection.resolve(wb)? {
        let text = cell_text(cell);
        let outlier = |reason: String| DateOutlier {
            cell: cell.cell_ref.clone(),
            text: text.clone(),
            reason,
        };
        let serial = match cell.value {
            CellValue::Number(n) => Some(n),
            CellValue::DateSerial(d) => Some(d as f64),
            _ => None,
        };
        if let Some(n) = serial {
            match from_serial(epoch, n) {
                Some(date) => out.hits.push(DateHit {
                    cell: cell.cell_ref.clone(),
                    date,
                    pattern: None,
                    struck: false,
                }),
                None => out.outliers.push(outlier(format!("serial {n} is out of range"))),
            }
            continue;
        }
        let runs = cell.effective_runs();
        let mut found = None;
        let mut invalid = None;
        for (i, p) in patterns.iter().enumerate() {
            let Some(caps) = p.re.captures(&text) else {
                continue;
            };
            let year = p.part(&caps, "year", 1).and_then(|y| y.parse::<i32>().ok());
            let month = p.part(&caps, "month", 2).and_then(parse_month);
            let day = match p.part(&caps, "day", 3) {
                Some(d) => d.parse::<u32>().ok(),
                None => Some(1),
            };
            let whole = caps.get(0).expect("group 0").range();
            match (year, month, day) {
                (Some(y), Some(m), Some(d)) => match NaiveDate::from_ymd_opt(y, m, d) {
                    Some(date) => {
                        found = Some((i, date, span_is_struck(&runs, whole.start, whole.end)));
                        break;
                    }
                    None => invalid.get_or_insert(format!("{y:04}-{m:02}-{d:02} is not a calendar date")),
                },
                _ => invalid.get_or_insert(format!("pattern {i} matched without a usable date")),
            };
        }
        match found {
            Some((i, date, struck)) => out.hits.push(DateHit {
                cell: cell.cell_ref.clone(),
                date,
                pattern: Some(i),
                struck,
            }),
            None => out
                .outliers
                .push(outlier(invalid.unwrap_or_else(|| "no pattern matched".into()))),
        }
    }
    Ok(out)
}
