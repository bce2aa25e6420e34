//! Size and cell-type profile of a workbook.

use serde::{Deserialize, Serialize};

use super::model::{CellValue, Sheet, Workbook};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetStats {
    pub name: String,
    pub rows: u32,
    pub columns: u32,
    /// Non-empty cells.
    pub cells: usize,
    pub strings: usize,
    /// Plain numbers and date serials.
    pub numerics: usize,
    pub formulas: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkbookStats {
    pub sheets: Vec<SheetStats>,
    pub total: SheetStats,
}

/// Counts everything below the first `header_rows` rows.
pub fn sheet_stats(sheet: &Sheet, header_rows: u32) -> SheetStats {
    let (rows, columns) = sheet.extent();
    let mut s = SheetStats {
        name: sheet.name.clone(),
        rows: rows.saturating_sub(header_rows),
        columns,
        ..SheetStats::default()
    };
    for cell in sheet.cells().filter(|c| c.cell_ref.row >= header_rows) {
        s.cells += 1;
        match cell.value {
            CellValue::Text(_) => s.strings += 1,
            CellValue::Number(_) | CellValue::DateSerial(_) => s.numerics += 1,
            CellValue::Formula(_) => s.formulas += 1,
            CellValue::Empty => s.cells -= 1,
        }
    }
    s
}

pub fn workbook_stats(wb: &Workbook, header_rows: u32) -> WorkbookStats {
    let sheets: Vec<SheetStats> = wb.sheets.iter().map(|s| sheet_stats(s, header_rows)).collect();
    let mut total = SheetStats {
        name: "total".into(),
        ..SheetStats::default()
    };
    for s in &sheets {
        total.rows += s.rows;
        total.columns = total.columns.max(s.columns);
        total.cells += s.cells;
        total.strings += s.strings;
        total.numerics += s.numerics;
        total.formulas += s.formulas;
    }
    WorkbookStats { sheets, total }
}
