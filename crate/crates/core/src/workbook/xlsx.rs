//! Reader for Office Open XML spreadsheets that keeps rich-text runs and
//! their strike-through flags.
//!
//! Only the parts needed for the cell model are read: the workbook sheet
//! list, relationships, shared strings, the style sheet (fonts and number
//! formats) and each worksheet's `sheetData`.

use std::collections::HashMap;
use std::io::{Cursor, Read};

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use zip::ZipArchive;

use super::model::{normalize_runs, Cell, CellRef, CellValue, Sheet, TextRun, WorkbookId};
use super::{parse_a1, WorkbookError};

type Archive<'a> = ZipArchive<Cursor<&'a [u8]>>;

fn err(part: &str, offset: u64, message: impl Into<String>) -> WorkbookError {
    WorkbookError::Xlsx {
        part: part.to_string(),
        offset,
        message: message.into(),
    }
}

fn read_part(archive: &mut Archive<'_>, name: &str) -> Result<Option<String>, WorkbookError> {
    let mut file = match archive.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(err(name, 0, e.to_string())),
    };
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)
        .map_err(|e| err(name, 0, e.to_string()))?;
    match String::from_utf8(buf) {
        Ok(s) => Ok(Some(s)),
        Err(e) => Err(err(
            name,
            e.utf8_error().valid_up_to() as u64,
            "part is not valid UTF-8",
        )),
    }
}

fn attr(e: &BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        let matches = a.key.0 == key || a.key.0.rsplit(':').next() == Some(key);
        matches.then(|| a.normalized_value(XmlVersion::Implicit1_0).map(|v| v.into_owned()).ok())?
    })
}

fn local(e: &BytesStart<'_>) -> String {
    e.local_name().as_ref().to_string()
}

/// Flag elements such as `<strike/>` are on unless `val` says otherwise.
fn flag_on(e: &BytesStart<'_>) -> bool {
    !matches!(attr(e, "val").as_deref(), Some("0" | "false"))
}

struct Part<'a> {
    name: String,
    reader: Reader<&'a [u8]>,
}

impl<'a> Part<'a> {
    fn new(name: &str, xml: &'a str) -> Self {
        Part {
            name: name.to_string(),
            reader: Reader::from_str(xml),
        }
    }

    fn next(&mut self) -> Result<Event<'a>, WorkbookError> {
        self.reader.read_event().map_err(|e| {
            err(&self.name, self.reader.error_position(), e.to_string())
        })
    }

    fn fail(&self, message: impl Into<String>) -> WorkbookError {
        err(&self.name, self.reader.buffer_position(), message)
    }

    /// Text content up to the end tag `end`, with entity references resolved.
    fn text_until(&mut self, end: &str) -> Result<String, WorkbookError> {
        let mut out = String::new();
        loop {
            match self.next()? {
                Event::Text(t) => out.push_str(&t.xml10_content()),
                Event::CData(t) => out.push_str(&t.xml10_content()),
                Event::GeneralRef(r) => {
                    if let Some(c) = r.resolve_char_ref().map_err(|e| self.fail(e.to_string()))? {
                        out.push(c);
                    } else if let Some(s) = quick_xml::escape::resolve_xml_entity(&r) {
                        out.push_str(s);
                    } else {
                        return Err(self.fail(format!("unknown entity &{};", &*r)));
                    }
                }
                Event::End(e) if e.local_name().as_ref() == end => return Ok(out),
                Event::Eof => return Err(self.fail(format!("unexpected end inside <{end}>"))),
                _ => {}
            }
        }
    }

    /// Reads the body of a string item (`<si>` or `<is>`) into runs.
    ///
    /// Runs without their own `<rPr>` inherit `default_struck`.
    fn string_item(&mut self, end: &str, default_struck: bool) -> Result<Vec<TextRun>, WorkbookError> {
        let mut runs = Vec::new();
        let mut run_struck: Option<bool> = None;
        let mut in_run = false;
        let mut in_phonetic = false;
        loop {
            match self.next()? {
                Event::Start(e) => match local(&e).as_str() {
                    "r" => {
                        in_run = true;
                        run_struck = None;
                    }
                    "rPr" => run_struck = Some(false),
                    "strike" if in_run => run_struck = Some(flag_on(&e)),
                    "rPh" => in_phonetic = true,
                    "t" => {
                        let text = self.text_until("t")?;
                        if !in_phonetic {
                            let struck = if in_run {
                                run_struck.unwrap_or(default_struck)
                            } else {
                                default_struck
                            };
                            runs.push(TextRun::new(text, struck));
                        }
                    }
                    _ => {}
                },
                Event::Empty(e) => match local(&e).as_str() {
                    "rPr" => run_struck = Some(false),
                    "strike" if in_run => run_struck = Some(flag_on(&e)),
                    _ => {}
                },
                Event::End(e) => match e.local_name().as_ref() {
                    "r" => in_run = false,
                    "rPh" => in_phonetic = false,
                    name if name == end => return Ok(runs),
                    _ => {}
                },
                Event::Eof => return Err(self.fail(format!("unexpected end inside <{end}>"))),
                _ => {}
            }
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct CellStyle {
    date: bool,
    struck: bool,
}

fn builtin_date_format(id: u32) -> bool {
    matches!(id, 14..=22 | 27..=36 | 45..=47 | 50..=58)
}

/// Heuristic used by spreadsheet readers: a custom format is a date format
/// when, outside quoted literals, escapes and bracketed modifiers, it uses
/// day, month or year tokens.
pub(crate) fn custom_date_format(code: &str) -> bool {
    let mut chars = code.chars();
    let mut in_quote = false;
    let mut in_bracket = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => in_quote = !in_quote,
            _ if in_quote => {}
            '[' => in_bracket = true,
            ']' => in_bracket = false,
            _ if in_bracket => {}
            '\\' | '_' | '*' => {
                chars.next();
            }
            'd' | 'D' | 'm' | 'M' | 'y' | 'Y' => return true,
            _ => {}
        }
    }
    false
}

fn read_styles(xml: &str) -> Result<Vec<CellStyle>, WorkbookError> {
    let mut part = Part::new("xl/styles.xml", xml);
    let mut custom: HashMap<u32, bool> = HashMap::new();
    let mut fonts: Vec<bool> = Vec::new();
    let mut styles = Vec::new();
    let mut in_fonts = false;
    let mut in_font = false;
    let mut in_cell_xfs = false;

    let mut push_xf = |e: &BytesStart<'_>, fonts: &[bool], custom: &HashMap<u32, bool>| {
        let fmt: u32 = attr(e, "numFmtId").and_then(|v| v.parse().ok()).unwrap_or(0);
        let font: usize = attr(e, "fontId").and_then(|v| v.parse().ok()).unwrap_or(0);
        styles.push(CellStyle {
            date: builtin_date_format(fmt) || custom.get(&fmt).copied().unwrap_or(false),
            struck: fonts.get(font).copied().unwrap_or(false),
        });
    };

    loop {
        match part.next()? {
            Event::Start(e) => match local(&e).as_str() {
                "fonts" => in_fonts = true,
                "font" if in_fonts => {
                    in_font = true;
                    fonts.push(false);
                }
                "cellXfs" => in_cell_xfs = true,
                "xf" if in_cell_xfs => push_xf(&e, &fonts, &custom),
                "strike" if in_font => {
                    if let Some(f) = fonts.last_mut() {
                        *f = flag_on(&e);
                    }
                }
                _ => {}
            },
            Event::Empty(e) => match local(&e).as_str() {
                "numFmt" => {
                    let id = attr(&e, "numFmtId").and_then(|v| v.parse().ok());
                    let code = attr(&e, "formatCode").unwrap_or_default();
                    if let Some(id) = id {
                        custom.insert(id, custom_date_format(&code));
                    }
                }
                "font" if in_fonts => fonts.push(false),
                "strike" if in_font => {
                    if let Some(f) = fonts.last_mut() {
                        *f = flag_on(&e);
                    }
                }
                "xf" if in_cell_xfs => push_xf(&e, &fonts, &custom),
                _ => {}
            },
            Event::End(e) => match e.local_name().as_ref() {
                "fonts" => in_fonts = false,
                "font" => in_font = false,
                "cellXfs" => in_cell_xfs = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(styles)
}

fn read_shared_strings(xml: &str) -> Result<Vec<Vec<TextRun>>, WorkbookError> {
    let mut part = Part::new("xl/sharedStrings.xml", xml);
    let mut out = Vec::new();
    loop {
        match part.next()? {
            Event::Start(e) if e.local_name().as_ref() == "si" => {
                out.push(part.string_item("si", false)?);
            }
            Event::Empty(e) if e.local_name().as_ref() == "si" => out.push(Vec::new()),
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

/// Sheet names with their part paths, in workbook order.
fn read_sheet_list(archive: &mut Archive<'_>) -> Result<Vec<(String, String)>, WorkbookError> {
    let wb = read_part(archive, "xl/workbook.xml")?
        .ok_or_else(|| err("xl/workbook.xml", 0, "missing workbook part"))?;
    let rels = read_part(archive, "xl/_rels/workbook.xml.rels")?.unwrap_or_default();

    let mut targets = HashMap::new();
    let mut part = Part::new("xl/_rels/workbook.xml.rels", &rels);
    loop {
        match part.next()? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == "Relationship" => {
                if let (Some(id), Some(target)) = (attr(&e, "Id"), attr(&e, "Target")) {
                    let path = match target.strip_prefix('/') {
                        Some(abs) => abs.to_string(),
                        None => format!("xl/{target}"),
                    };
                    targets.insert(id, path);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    let mut sheets = Vec::new();
    let mut part = Part::new("xl/workbook.xml", &wb);
    loop {
        match part.next()? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == "sheet" => {
                let name = attr(&e, "name").ok_or_else(|| part.fail("sheet without name"))?;
                let rid = e
                    .attributes()
                    .flatten()
                    .find(|a| a.key.0.ends_with(":id"))
                    .and_then(|a| a.normalized_value(XmlVersion::Implicit1_0).ok().map(|v| v.into_owned()));
                let path = rid
                    .and_then(|r| targets.get(&r).cloned())
                    .unwrap_or_else(|| format!("xl/worksheets/sheet{}.xml", sheets.len() + 1));
                sheets.push((name, path));
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(sheets)
}

struct SheetContext<'s> {
    id: &'s WorkbookId,
    shared: &'s [Vec<TextRun>],
    styles: &'s [CellStyle],
}

fn read_sheet(
    ctx: &SheetContext<'_>,
    name: &str,
    path: &str,
    xml: &str,
) -> Result<Sheet, WorkbookError> {
    let mut sheet = Sheet::new(name);
    let mut part = Part::new(path, xml);
    let mut row: u32 = 0;
    let mut next_col: u32 = 0;
    let mut rows_seen = false;

    loop {
        match part.next()? {
            Event::Start(e) if e.local_name().as_ref() == "row" => {
                row = match attr(&e, "r") {
                    Some(r) => r
                        .parse::<u32>()
                        .ok()
                        .and_then(|r| r.checked_sub(1))
                        .ok_or_else(|| part.fail(format!("bad row index `{r}`")))?,
                    None if rows_seen => row + 1,
                    None => 0,
                };
                rows_seen = true;
                next_col = 0;
            }
            Event::Start(e) if e.local_name().as_ref() == "c" => {
                let (r, c) = cell_position(&part, &e, row, next_col)?;
                next_col = c + 1;
                if let Some(cell) = read_cell(ctx, &mut part, &e, CellRef::new(ctx.id.clone(), name, r, c))? {
                    sheet.insert(cell);
                }
            }
            Event::Empty(e) if e.local_name().as_ref() == "c" => {
                let (_, c) = cell_position(&part, &e, row, next_col)?;
                next_col = c + 1;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(sheet)
}

fn cell_position(
    part: &Part<'_>,
    e: &BytesStart<'_>,
    row: u32,
    next_col: u32,
) -> Result<(u32, u32), WorkbookError> {
    match attr(e, "r") {
        Some(a1) => parse_a1(&a1).ok_or_else(|| part.fail(format!("bad cell reference `{a1}`"))),
        None => Ok((row, next_col)),
    }
}

fn read_cell(
    ctx: &SheetContext<'_>,
    part: &mut Part<'_>,
    start: &BytesStart<'_>,
    cell_ref: CellRef,
) -> Result<Option<Cell>, WorkbookError> {
    let kind = attr(start, "t").unwrap_or_else(|| "n".to_string());
    let style = attr(start, "s")
        .and_then(|s| s.parse::<usize>().ok())
        .and_then(|s| ctx.styles.get(s).copied())
        .unwrap_or_default();

    let mut raw: Option<String> = None;
    let mut formula: Option<String> = None;
    let mut inline: Option<Vec<TextRun>> = None;
    loop {
        match part.next()? {
            Event::Start(e) => match local(&e).as_str() {
                "v" => raw = Some(part.text_until("v")?),
                "f" => formula = Some(part.text_until("f")?),
                "is" => inline = Some(part.string_item("is", style.struck)?),
                _ => {}
            },
            Event::Empty(e) if e.local_name().as_ref() == "f" => {
                formula.get_or_insert_with(String::new);
            }
            Event::End(e) if e.local_name().as_ref() == "c" => break,
            Event::Eof => return Err(part.fail("unexpected end inside <c>")),
            _ => {}
        }
    }

    if let Some(f) = formula {
        return Ok(Some(Cell::plain(cell_ref, CellValue::Formula(f))));
    }

    let cell = match kind.as_str() {
        "s" => {
            let Some(raw) = raw else { return Ok(None) };
            let idx: usize = raw
                .trim()
                .parse()
                .map_err(|_| part.fail(format!("bad shared string index `{raw}`")))?;
            let runs = ctx
                .shared
                .get(idx)
                .ok_or_else(|| part.fail(format!("shared string {idx} out of range")))?;
            // A plain shared string takes the strike flag of the cell font.
            let runs = if runs.len() == 1 && !runs[0].struck && style.struck {
                vec![TextRun::new(runs[0].text.clone(), true)]
            } else {
                runs.clone()
            };
            Cell::text(cell_ref, runs)
        }
        "inlineStr" => Cell::text(cell_ref, inline.unwrap_or_default()),
        "str" | "e" => Cell::text(
            cell_ref,
            [TextRun::new(raw.unwrap_or_default(), style.struck)],
        ),
        "b" => {
            let text = match raw.as_deref().map(str::trim) {
                Some("1") => "TRUE",
                Some("0") => "FALSE",
                _ => return Ok(None),
            };
            Cell::text(cell_ref, [TextRun::new(text, style.struck)])
        }
        "d" => Cell::text(cell_ref, [TextRun::new(raw.unwrap_or_default(), style.struck)]),
        _ => {
            let Some(raw) = raw else { return Ok(None) };
            let n: f64 = raw
                .trim()
                .parse()
                .map_err(|_| part.fail(format!("bad numeric value `{raw}`")))?;
            if style.date && n.is_finite() {
                Cell::plain(cell_ref, CellValue::DateSerial(n.floor() as i64))
            } else {
                Cell::plain(cell_ref, CellValue::Number(n))
            }
        }
    };
    Ok(Some(Cell {
        runs: normalize_runs(cell.runs),
        ..cell
    }))
}

pub(crate) fn read(bytes: &[u8], id: &WorkbookId) -> Result<Vec<Sheet>, WorkbookError> {
    let mut archive =
        ZipArchive::new(Cursor::new(bytes)).map_err(|e| err("(zip container)", 0, e.to_string()))?;
    let sheet_list = read_sheet_list(&mut archive)?;
    let shared = match read_part(&mut archive, "xl/sharedStrings.xml")? {
        Some(xml) => read_shared_strings(&xml)?,
        None => Vec::new(),
    };
    let styles = match read_part(&mut archive, "xl/styles.xml")? {
        Some(xml) => read_styles(&xml)?,
        None => Vec::new(),
    };
    let ctx = SheetContext {
        id,
        shared: &shared,
        styles: &styles,
    };
    let mut sheets = Vec::with_capacity(sheet_list.len());
    for (name, path) in sheet_list {
        let xml = read_part(&mut archive, &path)?
            .ok_or_else(|| err(&path, 0, "worksheet part missing"))?;
        sheets.push(read_sheet(&ctx, &name, &path, &xml)?);
    }
    Ok(sheets)
}
