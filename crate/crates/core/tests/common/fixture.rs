//! The four-row example sheet and the scripted session that turns it into
//! the envisioned knowledge graph.

use std::path::PathBuf;

use rust_xlsxwriter::{DocProperties, ExcelDateTime, Format, Workbook as XlsxBook};
use sheetkg_core::collector::{CollectReport, CollectorConfig, LiftReport};
use sheetkg_core::extract::{
    DateParams, GroupRef, JoinCondition, RegexMode, RegexParams, RelationParams, Selection, StatsParams,
};
use sheetkg_core::graph::{Datatype, Resource, Vocabulary};
use sheetkg_core::session::{type_hint_request, ExtractorRequest, ProjectConfig, Session};
use sheetkg_core::transform::TransformExpr;
use sheetkg_core::workbook::{load_workbook, CellValue, SourceFormat, Workbook};

pub const SHEET: &str = "Sheet1";
pub const HEADER: [&str; 8] = ["Line", "Document ID", "Dep.", "Editor", "Type", "Changes", "Published", "Sent"];
pub const FIRST_ROW: u32 = 1;
pub const LAST_ROW: u32 = 4;

pub const DOC_ID: u32 = 1;
pub const DEP: u32 = 2;
pub const EDITOR: u32 = 3;
pub const TYPE: u32 = 4;
pub const CHANGES: u32 = 5;
pub const PUBLISHED: u32 = 6;
pub const SENT: u32 = 7;

pub const BLESS_VAR: &str = "SHEETKG_BLESS";

pub fn blessing() -> bool {
    std::env::var_os(BLESS_VAR).is_some()
}

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn xlsx_path() -> PathBuf {
    dir().join("table1.xlsx")
}

pub fn csv_path() -> PathBuf {
    dir().join("table1.csv")
}

pub fn log_path() -> PathBuf {
    dir().join("table1.log.jsonl")
}

pub fn xlsx_bytes() -> Vec<u8> {
    std::fs::read(xlsx_path()).expect("fixture xlsx is committed")
}

pub fn csv_bytes() -> Vec<u8> {
    std::fs::read(csv_path()).expect("fixture csv is committed")
}

/// Writes the example sheet; multi-line cells keep their line break.
pub fn build_xlsx() -> Vec<u8> {
    let mut book = XlsxBook::new();
    let created = ExcelDateTime::from_ymd(2020, 1, 1).unwrap();
    book.set_properties(&DocProperties::new().set_creation_datetime(&created));
    let ws = book.add_worksheet();
    let plain = Format::new();
    let struck = Format::new().set_font_strikethrough();
    let date = Format::new().set_num_format("yyyy-mm-dd");
    for (c, h) in HEADER.iter().enumerate() {
        ws.write_string(0, c as u16, *h).unwrap();
    }
    let rows: [[&str; 8]; 4] = [
        ["", "*AB-ztad.63/23", "GA", "", "C", "V1: 2015-03-02", "", "x"],
        ["", "AB-hzyx-78/24", "GA/BZ", "Emma Thomas", "N", "", "TODO", ""],
        ["", "AB-hzyx-78/24 A1", "GA/BZ", "Smith, Leo", "", "", "", ""],
        ["", "AB 5-pbga.67", "BZ", "(new) Smith\nThomas, E.", "ed.c", "V1: Dec2009\nV2: Mar2010", "15.05.2010", "-"],
    ];
    for (i, row) in rows.iter().enumerate() {
        let r = i as u32 + 1;
        ws.write_number(r, 0, f64::from(r)).unwrap();
        for (c, text) in row.iter().enumerate().skip(1) {
            if !text.is_empty() {
                ws.write_string(r, c as u16, *text).unwrap();
            }
        }
    }
    ws.write_rich_string(1, EDITOR as u16, &[(&struck, "Cooper"), (&plain, " Smith")])
        .unwrap();
    ws.write_number_with_format(1, PUBLISHED as u16, 42415.0, &date).unwrap();
    book.save_to_buffer().unwrap()
}

/// Plain-text rendering of every cell, as an office suite's csv export would give.
pub fn csv_from(wb: &Workbook) -> String {
    let sheet = wb.sheet(SHEET).unwrap();
    let (rows, cols) = sheet.extent();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in 0..rows {
        let record: Vec<String> = (0..cols)
            .map(|c| match sheet.cell(r, c) {
                Some(cell) => match &cell.value {
                    CellValue::Text(_) => cell.effective_runs().iter().map(|r| r.text.as_str()).collect(),
                    v => v.display_text(),
                },
                None => String::new(),
            })
            .collect();
        w.write_record(&record).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn workbook() -> Workbook {
    load_workbook(&xlsx_bytes(), SourceFormat::Xlsx).unwrap()
}

pub fn session() -> Session {
    Session::open(&xlsx_bytes(), SourceFormat::Xlsx, ProjectConfig::default()).unwrap()
}

pub fn column(s: &Session, col: u32) -> Selection {
    Selection::column(s.workbook(), SHEET, col, FIRST_ROW..=LAST_ROW)
}

pub fn class(s: &Session, name: &str) -> Resource {
    s.minter().class(name).unwrap()
}

pub fn property(s: &Session, name: &str) -> Resource {
    s.minter().property(name).unwrap()
}

pub fn dep_stats(s: &Session) -> ExtractorRequest {
    let mut params = StatsParams::new(class(s, "Department"));
    params.property = property(s, "department");
    ExtractorRequest::Stats {
        selection: column(s, DEP),
        params,
    }
}

pub fn doc_id_regex(s: &Session) -> ExtractorRequest {
    ExtractorRequest::Regex {
        selection: column(s, DOC_ID),
        params: RegexParams {
            pattern: "AB.+".into(),
            mode: RegexMode::Literal {
                group: GroupRef::Index(0),
                datatype: Datatype::String,
            },
            property: property(s, "documentId"),
            remainder_property: Some(Vocabulary::remainder_comment()),
        },
    }
}

pub fn published_dates(s: &Session) -> ExtractorRequest {
    ExtractorRequest::Date {
        selection: column(s, PUBLISHED),
        params: DateParams {
            property: property(s, "published"),
            patterns: vec![r"^(?P<day>\d{2})\.(?P<month>\d{2})\.(?P<year>\d{4})$".into()],
            epoch: None,
        },
    }
}

pub fn editors(s: &Session) -> ExtractorRequest {
    ExtractorRequest::Person {
        selection: column(s, EDITOR),
    }
}

pub fn attachments(s: &Session) -> ExtractorRequest {
    ExtractorRequest::Relationship {
        selection: column(s, DOC_ID),
        params: RelationParams {
            regex_a: r"AB\S*$".into(),
            regex_b: r"AB\S* A\d+$".into(),
            condition: JoinCondition::Prefix,
            predicate: property(s, "hasAttachment"),
        },
    }
}

/// The ordered extraction requests of the scripted session.
pub fn requests(s: &Session) -> Vec<ExtractorRequest> {
    let mut types = StatsParams::new(class(s, "RevisionType"));
    types.property = property(s, "revisionType");
    let mut changes = StatsParams::new(class(s, "ChangeEntry"));
    changes.property = property(s, "change");
    changes.transform = Some(TransformExpr::parse(r#"split("\n") | trim()"#).unwrap());
    vec![
        doc_id_regex(s),
        type_hint_request(column(s, DOC_ID), r" A\d+$", class(s, "Attachment")),
        dep_stats(s),
        editors(s),
        ExtractorRequest::Stats {
            selection: column(s, TYPE),
            params: types,
        },
        ExtractorRequest::Stats {
            selection: column(s, CHANGES),
            params: changes,
        },
        published_dates(s),
        ExtractorRequest::Regex {
            selection: column(s, SENT),
            params: RegexParams {
                pattern: "^x$".into(),
                mode: RegexMode::Constant {
                    resource: s.minter().resource("SentStatus", "sent").unwrap(),
                },
                property: property(s, "sent"),
                remainder_property: None,
            },
        },
        attachments(s),
    ]
}

pub fn collector_config(s: &Session) -> CollectorConfig {
    CollectorConfig {
        sheet: SHEET.into(),
        first_row: FIRST_ROW,
        last_row: LAST_ROW,
        default_type: class(s, "Document"),
        required_properties: vec![],
        instance_id_property: Some(property(s, "documentId")),
        rerun: false,
    }
}

pub struct Scripted {
    pub collect: CollectReport,
    pub lift: LiftReport,
}

/// Stages and commits every request, then collects rows and lifts relations.
pub fn run_script(s: &mut Session) -> Scripted {
    for req in requests(s) {
        let id = s.stage(req).unwrap().id.clone();
        s.commit(&id).unwrap();
    }
    let (collect, _) = s.collect(collector_config(s)).unwrap();
    let (lift, _) = s.lift(None).unwrap();
    Scripted { collect, lift }
}
