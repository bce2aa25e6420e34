use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Content-derived identifier of a loaded workbook.
///
/// Two loads of byte-identical input always produce the same id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkbookId(String);

impl WorkbookId {
    /// Length (in hex characters) of the checksum prefix used as id.
    pub const LEN: usize = 16;

    pub fn from_checksum(checksum: &str) -> Self {
        WorkbookId(checksum[..Self::LEN.min(checksum.len())].to_string())
    }

    /// Accepts only ids that could have been produced by [`WorkbookId::from_checksum`].
    pub fn parse(s: &str) -> Option<Self> {
        let ok = s.len() == Self::LEN
            && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        ok.then(|| WorkbookId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorkbookId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Address of one cell inside a project. Rows and columns are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub workbook_id: WorkbookId,
    pub sheet: String,
    pub row: u32,
    pub col: u32,
}

impl CellRef {
    pub fn new(workbook_id: WorkbookId, sheet: impl Into<String>, row: u32, col: u32) -> Self {
        CellRef {
            workbook_id,
            sheet: sheet.into(),
            row,
            col,
        }
    }

    /// Spreadsheet-style address such as `Sheet1!B2`.
    pub fn a1(&self) -> String {
        format!("{}!{}{}", self.sheet, column_letters(self.col), self.row + 1)
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.a1())
    }
}

/// `0 -> A`, `25 -> Z`, `26 -> AA`.
pub fn column_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (col % 26) as u8);
        if col < 26 {
            break;
        }
        col = col / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Parses `B2` (no sheet part) into a 0-based `(row, col)`.
pub fn parse_a1(addr: &str) -> Option<(u32, u32)> {
    let split = addr.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = addr.split_at(split);
    if letters.is_empty() || !letters.bytes().all(|b| b.is_ascii_uppercase()) {
        return None;
    }
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
    {
        return None;
    }
    let mut col: u64 = 0;
    for b in letters.bytes() {
        col = col * 26 + u64::from(b - b'A' + 1);
        if col > u64::from(u32::MAX) {
            return None;
        }
    }
    let row: u64 = digits.parse().ok()?;
    if row > u64::from(u32::MAX) {
        return None;
    }
    Some(((row - 1) as u32, (col - 1) as u32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum CellValue {
    Text(String),
    Number(f64),
    /// Whole days counted from the configured epoch, only for date-formatted source cells.
    DateSerial(i64),
    Formula(String),
    Empty,
}

impl CellValue {
    pub fn is_empty(&self) -> bool {
        match self {
            CellValue::Empty => true,
            CellValue::Text(s) => s.is_empty(),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CellValue::Text(_) => "text",
            CellValue::Number(_) => "number",
            CellValue::DateSerial(_) => "date_serial",
            CellValue::Formula(_) => "formula",
            CellValue::Empty => "empty",
        }
    }

    /// Text rendering used when a non-text cell is fed to a text extractor.
    pub fn display_text(&self) -> String {
        match self {
            CellValue::Text(s) | CellValue::Formula(s) => s.clone(),
            CellValue::Number(n) => format_number(*n),
            CellValue::DateSerial(d) => d.to_string(),
            CellValue::Empty => String::new(),
        }
    }
}

pub fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

/// A contiguous piece of cell text with uniform strike-through styling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRun {
    pub text: String,
    pub struck: bool,
}

impl TextRun {
    pub fn new(text: impl Into<String>, struck: bool) -> Self {
        TextRun {
            text: text.into(),
            struck,
        }
    }
}

/// Drops empty runs and merges neighbours with equal strike flags.
pub fn normalize_runs(runs: impl IntoIterator<Item = TextRun>) -> Vec<TextRun> {
    let mut out: Vec<TextRun> = Vec::new();
    for run in runs {
        if run.text.is_empty() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.struck == run.struck => last.text.push_str(&run.text),
            _ => out.push(run),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "ref")]
    pub cell_ref: CellRef,
    pub value: CellValue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<TextRun>,
}

impl Cell {
    /// Builds a text cell; the runs are normalized and their concatenation becomes the value.
    pub fn text(cell_ref: CellRef, runs: impl IntoIterator<Item = TextRun>) -> Self {
        let runs = normalize_runs(runs);
        let value: String = runs.iter().map(|r| r.text.as_str()).collect();
        Cell {
            cell_ref,
            value: CellValue::Text(value),
            runs,
        }
    }

    pub fn plain(cell_ref: CellRef, value: CellValue) -> Self {
        match value {
            CellValue::Text(s) => Cell::text(cell_ref, [TextRun::new(s, false)]),
            value => Cell {
                cell_ref,
                value,
                runs: Vec::new(),
            },
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self.value, CellValue::Text(_))
    }

    pub fn has_struck(&self) -> bool {
        self.runs.iter().any(|r| r.struck)
    }

    /// Runs of the cell; non-text values are presented as a single unstruck run.
    pub fn effective_runs(&self) -> Vec<TextRun> {
        if self.is_text() {
            self.runs.clone()
        } else {
            normalize_runs([TextRun::new(self.value.display_text(), false)])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub name: String,
    cells: BTreeMap<(u32, u32), Cell>,
}

impl Sheet {
    pub fn new(name: impl Into<String>) -> Self {
        Sheet {
            name: name.into(),
            cells: BTreeMap::new(),
        }
    }

    /// Stores a cell, silently dropping empty ones so the map stays sparse.
    pub(crate) fn insert(&mut self, cell: Cell) {
        if cell.value.is_empty() {
            return;
        }
        self.cells
            .insert((cell.cell_ref.row, cell.cell_ref.col), cell);
    }

    pub fn cell(&self, row: u32, col: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    /// Non-empty cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn row_cells(&self, row: u32) -> impl Iterator<Item = &Cell> {
        self.cells.range((row, 0)..=(row, u32::MAX)).map(|(_, c)| c)
    }

    pub fn column_cells(&self, col: u32) -> impl Iterator<Item = &Cell> {
        self.cells.values().filter(move |c| c.cell_ref.col == col)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(rows, columns)` of the used range, counted from the origin.
    pub fn extent(&self) -> (u32, u32) {
        let rows = self.cells.keys().map(|(r, _)| r + 1).max().unwrap_or(0);
        let cols = self.cells.keys().map(|(_, c)| c + 1).max().unwrap_or(0);
        (rows, cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workbook {
    pub id: WorkbookId,
    /// Hex SHA-256 of the source bytes.
    pub checksum: String,
    pub sheets: Vec<Sheet>,
}

impl Workbook {
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    pub fn cell(&self, cell_ref: &CellRef) -> Option<&Cell> {
        if cell_ref.workbook_id != self.id {
            return None;
        }
        self.sheet(&cell_ref.sheet)?.cell(cell_ref.row, cell_ref.col)
    }

    pub fn cell_ref(&self, sheet: &str, row: u32, col: u32) -> CellRef {
        CellRef::new(self.id.clone(), sheet, row, col)
    }

    /// Resolves `Sheet1!B2`; a bare `B2` addresses the first sheet.
    pub fn parse_address(&self, addr: &str) -> Option<CellRef> {
        let (sheet, local) = match addr.rsplit_once('!') {
            Some((s, l)) => (s.to_string(), l),
            None => (self.sheets.first()?.name.clone(), addr),
        };
        self.sheet(&sheet)?;
        let (row, col) = parse_a1(local)?;
        Some(self.cell_ref(&sheet, row, col))
    }
}
