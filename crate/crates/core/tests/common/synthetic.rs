//! Seeded generator of a large messy sheet with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_xlsxwriter::{Format, Workbook as XlsxBook};

pub const ID: u32 = 0;
pub const DEP: u32 = 1;
pub const EDITOR: u32 = 2;
pub const PUBLISHED: u32 = 3;

const DEPS: [&str; 5] = ["GA", "BZ", "HR", "QA", "IT"];
const FIRST: [&str; 6] = ["Emma", "Leo", "Ana", "Omar", "Ines", "Kai"];
const LAST: [&str; 6] = ["Thomas", "Smith", "Berg", "Novak", "Ito", "Keller"];

pub struct Synthetic {
    pub bytes: Vec<u8>,
    pub rows: u32,
    /// Rows whose department cell lists several departments.
    pub multi_valued_rows: usize,
    /// (document row, attachment row), 1-based rows as written.
    pub attachments: Vec<(u32, u32)>,
    pub struck_cells: usize,
    pub date_texts: usize,
    pub date_numbers: usize,
    pub outliers: usize,
}

/// Data rows start at row 1; row 0 is the header.
pub fn generate(rows: u32, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut book = XlsxBook::new();
    let ws = book.add_worksheet();
    let plain = Format::new();
    let struck = Format::new().set_font_strikethrough();
    for (c, h) in ["Document ID", "Dep.", "Editor", "Published"].iter().enumerate() {
        ws.write_string(0, c as u16, *h).unwrap();
    }
    let mut out = Synthetic {
        bytes: Vec::new(),
        rows,
        multi_valued_rows: 0,
        attachments: Vec::new(),
        struck_cells: 0,
        date_texts: 0,
        date_numbers: 0,
        outliers: 0,
    };
    let mut docs: Vec<(u32, u32)> = Vec::new();
    let mut next_attachment = std::collections::HashMap::<u32, u32>::new();
    for r in 1..=rows {
        if !docs.is_empty() && rng.random_bool(0.2) {
            let (doc_row, doc_no) = docs[rng.random_range(0..docs.len())];
            let n = next_attachment.entry(doc_no).or_insert(0);
            *n += 1;
            ws.write_string(r, ID as u16, format!("DOC-{doc_no:05} A{n}")).unwrap();
            out.attachments.push((doc_row, r));
        } else {
            let no = docs.len() as u32 + 1;
            ws.write_string(r, ID as u16, format!("DOC-{no:05}")).unwrap();
            docs.push((r, no));
        }

        let k = if rng.random_bool(0.4) { rng.random_range(2..=3) } else { 1 };
        let mut deps: Vec<&str> = Vec::new();
        while deps.len() < k {
            let d = DEPS[rng.random_range(0..DEPS.len())];
            if !deps.contains(&d) {
                deps.push(d);
            }
        }
        if k > 1 {
            out.multi_valued_rows += 1;
        }
        ws.write_string(r, DEP as u16, deps.join("/")).unwrap();

        let name = |rng: &mut ChaCha8Rng| {
            format!("{} {}", FIRST[rng.random_range(0..FIRST.len())], LAST[rng.random_range(0..LAST.len())])
        };
        let current = name(&mut rng);
        if rng.random_bool(0.15) {
            let former = name(&mut rng);
            ws.write_rich_string(r, EDITOR as u16, &[(&struck, former.as_str()), (&plain, "\n"), (&plain, current.as_str())])
                .unwrap();
            out.struck_cells += 1;
        } else {
            ws.write_string(r, EDITOR as u16, &current).unwrap();
        }

        match rng.random_range(0..10) {
            0 => {
                ws.write_string(r, PUBLISHED as u16, "TODO").unwrap();
                out.outliers += 1;
            }
            1..=4 => {
                ws.write_number(r, PUBLISHED as u16, f64::from(rng.random_range(10_000..20_000)))
                    .unwrap();
                out.date_numbers += 1;
            }
            _ => {
                let text = format!(
                    "{:02}.{:02}.{}",
                    rng.random_range(1..=28),
                    rng.random_range(1..=12),
                    rng.random_range(1990..2030)
                );
                ws.write_string(r, PUBLISHED as u16, text).unwrap();
                out.date_texts += 1;
            }
        }
    }
    out.bytes = book.save_to_buffer().unwrap();
    out
}

/// What the full pipeline produced on a synthetic sheet.
#[derive(Debug)]
pub struct Observed {
    pub department_rows: usize,
    pub persons: usize,
    pub struck_mentions: usize,
    pub date_pattern_hits: usize,
    pub date_serials: usize,
    pub date_outliers: usize,
    pub pairs: usize,
    pub comparisons: u64,
    pub documents: usize,
    pub attachments: usize,
    pub lifted: usize,
    pub replay_equal: bool,
    pub elapsed: std::time::Duration,
}

/// Runs every extractor, collects, lifts and replays the log.
pub fn run_pipeline(sheet: &Synthetic) -> Observed {
    use sheetkg_core::extract::{DateParams, JoinCondition, RelationParams, Selection, StatsParams};
    use sheetkg_core::graph::{GraphName, Pattern, RdfFormat, Vocabulary};
    use sheetkg_core::session::{replay, type_hint_request, ExtractorRequest, ProjectConfig, Session, StagingPayload};
    use sheetkg_core::transform::TransformExpr;
    use sheetkg_core::workbook::SourceFormat;

    let start = std::time::Instant::now();
    let mut s = Session::open(&sheet.bytes, SourceFormat::Xlsx, ProjectConfig::default()).unwrap();
    let col = |s: &Session, c: u32| Selection::column(s.workbook(), "Sheet1", c, 1..=sheet.rows);
    let class = |s: &Session, n: &str| s.minter().class(n).unwrap();
    let prop = |s: &Session, n: &str| s.minter().property(n).unwrap();

    let mut deps = StatsParams::new(class(&s, "Department"));
    deps.transform = Some(TransformExpr::parse(r#"split("/")"#).unwrap());
    let requests = vec![
        ExtractorRequest::Regex {
            selection: col(&s, ID),
            params: sheetkg_core::extract::RegexParams {
                pattern: r"^DOC-\d+( A\d+)?$".into(),
                mode: sheetkg_core::extract::RegexMode::Literal {
                    group: sheetkg_core::extract::GroupRef::Index(0),
                    datatype: sheetkg_core::graph::Datatype::String,
                },
                property: prop(&s, "documentId"),
                remainder_property: None,
            },
        },
        type_hint_request(col(&s, ID), r" A\d+$", class(&s, "Attachment")),
        ExtractorRequest::Stats {
            selection: col(&s, DEP),
            params: deps,
        },
        ExtractorRequest::Person {
            selection: col(&s, EDITOR),
        },
        ExtractorRequest::Date {
            selection: col(&s, PUBLISHED),
            params: DateParams {
                property: prop(&s, "published"),
                patterns: vec![r"^(?P<day>\d{2})\.(?P<month>\d{2})\.(?P<year>\d{4})$".into()],
                epoch: None,
            },
        },
        ExtractorRequest::Relationship {
            selection: col(&s, ID),
            params: RelationParams {
                regex_a: r"^DOC-\d+$".into(),
                regex_b: r"^DOC-\d+ A\d+$".into(),
                condition: JoinCondition::Prefix,
                predicate: prop(&s, "hasAttachment"),
            },
        },
    ];
    let mut obs = Observed {
        department_rows: 0,
        persons: 0,
        struck_mentions: 0,
        date_pattern_hits: 0,
        date_serials: 0,
        date_outliers: 0,
        pairs: 0,
        comparisons: 0,
        documents: 0,
        attachments: 0,
        lifted: 0,
        replay_equal: false,
        elapsed: Default::default(),
    };
    for req in requests {
        let staging = s.stage(req).unwrap();
        match &staging.payload {
            StagingPayload::Stats(st) => obs.department_rows = st.rows.len(),
            StagingPayload::Person(ix) => obs.persons = ix.persons.len(),
            StagingPayload::Date(d) => {
                obs.date_pattern_hits = d.hits.iter().filter(|h| h.pattern.is_some()).count();
                obs.date_serials = d.hits.iter().filter(|h| h.pattern.is_none()).count();
                obs.date_outliers = d.outliers.len();
            }
            StagingPayload::Relationship(r) => {
                obs.pairs = r.pairs.len();
                obs.comparisons = r.comparisons;
            }
            StagingPayload::Regex(_) => {}
        }
        let id = staging.id.clone();
        s.commit(&id).unwrap();
    }
    let mut config = sheetkg_core::collector::CollectorConfig {
        sheet: "Sheet1".into(),
        first_row: 1,
        last_row: sheet.rows,
        default_type: class(&s, "Document"),
        required_properties: vec![],
        instance_id_property: Some(prop(&s, "documentId")),
        rerun: false,
    };
    s.collect(config.clone()).unwrap();
    config.rerun = true;
    s.collect(config).unwrap();
    obs.lifted = s.lift(None).unwrap().0.added.len();

    let kg = s.graph(GraphName::Knowledge);
    let typed = |c| kg.count(&Pattern::any().predicate(Vocabulary::rdf_type()).object(c));
    obs.documents = typed(class(&s, "Document"));
    obs.attachments = typed(class(&s, "Attachment"));
    obs.struck_mentions = s
        .graph(GraphName::Matching)
        .count(&Pattern::any().predicate(Vocabulary::struck_variant(&Vocabulary::mentions_person())));

    let back = replay(&sheet.bytes, &s.log_jsonl()).unwrap();
    obs.replay_equal = [GraphName::Matching, GraphName::Knowledge]
        .into_iter()
        .all(|g| back.export(g, RdfFormat::NTriples) == s.export(g, RdfFormat::NTriples));
    obs.elapsed = start.elapsed();
    obs
}

/// Compares the pipeline output with the generator's ground truth.
pub fn check(sheet: &Synthetic, obs: &Observed, limit: std::time::Duration) -> Result<(), String> {
    let mut errors = Vec::new();
    let mut expect = |what: &str, ok: bool, detail: String| {
        if !ok {
            errors.push(format!("{what}: {detail}"));
        }
    };
    let multi = sheet.multi_valued_rows as f64 / f64::from(sheet.rows);
    expect("multi-valued share >= 0.30", multi >= 0.30, format!("{multi:.3}"));
    expect("struck cells present", sheet.struck_cells > 0, "none generated".into());
    expect("attachments present", !sheet.attachments.is_empty(), "none generated".into());
    expect("departments", obs.department_rows == DEPS.len(), format!("{}", obs.department_rows));
    expect(
        "persons bounded by the name pool",
        obs.persons > 0 && obs.persons <= FIRST.len() * LAST.len(),
        format!("{}", obs.persons),
    );
    expect("struck mentions", obs.struck_mentions == sheet.struck_cells, format!("{} vs {}", obs.struck_mentions, sheet.struck_cells));
    expect("date pattern hits", obs.date_pattern_hits == sheet.date_texts, format!("{} vs {}", obs.date_pattern_hits, sheet.date_texts));
    expect("date serials", obs.date_serials == sheet.date_numbers, format!("{} vs {}", obs.date_serials, sheet.date_numbers));
    expect("date outliers", obs.date_outliers == sheet.outliers, format!("{} vs {}", obs.date_outliers, sheet.outliers));
    let n_att = sheet.attachments.len();
    let n_doc = sheet.rows as usize - n_att;
    expect("relationship pairs", obs.pairs == n_att, format!("{} vs {n_att}", obs.pairs));
    expect("comparisons = |A|*|B|", obs.comparisons == (n_doc * n_att) as u64, format!("{}", obs.comparisons));
    expect("document instances", obs.documents == n_doc, format!("{} vs {n_doc}", obs.documents));
    expect("attachment instances", obs.attachments == n_att, format!("{} vs {n_att}", obs.attachments));
    expect("lifted relations", obs.lifted == n_att, format!("{} vs {n_att}", obs.lifted));
    expect("replay reproduces both graphs", obs.replay_equal, "exports differ".into());
    expect("runtime", obs.elapsed < limit, format!("{:?}", obs.elapsed));
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}
