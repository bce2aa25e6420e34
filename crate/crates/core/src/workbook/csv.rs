use super::model::{Cell, CellRef, CellValue, Sheet, WorkbookId};
use super::WorkbookError;

/// Name given to the single sheet of a CSV workbook.
pub const CSV_SHEET: &str = "Sheet1";

/// Plain decimal literals only; `inf`, `NaN` and exponents stay text.
fn numeric(field: &str) -> Option<f64> {
    let digits = field.strip_prefix('-').unwrap_or(field);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let ok = !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()));
    ok.then(|| field.parse().ok()).flatten()
}

/// CSV carries no styling: every run is unstruck and no value is a date serial.
pub(crate) fn read(bytes: &[u8], id: &WorkbookId) -> Result<Vec<Sheet>, WorkbookError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut sheet = Sheet::new(CSV_SHEET);
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let (line, offset) = e
                .position()
                .map(|p| (p.line(), p.byte()))
                .unwrap_or((row as u64 + 1, 0));
            WorkbookError::Csv {
                line,
                offset,
                message: e.to_string(),
            }
        })?;
        for (col, field) in record.iter().enumerate() {
            let cell_ref = CellRef::new(id.clone(), CSV_SHEET, row as u32, col as u32);
            let value = match numeric(field) {
                Some(n) => CellValue::Number(n),
                None => CellValue::Text(field.to_string()),
            };
            sheet.insert(Cell::plain(cell_ref, value));
        }
    }
    Ok(vec![sheet])
}
