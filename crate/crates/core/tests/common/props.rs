//! Randomized invariant suites shared by the property tests and the
//! acceptance runner. Each returns the shrunk counterexample on failure.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use sheetkg_core::collector::CollectorConfig;
use sheetkg_core::extract::{regex_extract, GroupRef, RegexMode, RegexParams, Selection, StatsParams};
use sheetkg_core::graph::{
    parse, serialize, Datatype, Graph, GraphName, Literal, Minter, RdfFormat, Resource, Term, Triple, Vocabulary,
};
use sheetkg_core::session::{replay, ExtractorRequest, Session};
use sheetkg_core::transform::TransformExpr;
use sheetkg_core::workbook::{load_workbook, CellRef, DeepLinker, SourceFormat, WorkbookId};

use super::fixture;

/// Minimum number of random cases per suite.
pub const CASES: u32 = 256;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn cell_ref() -> impl Strategy<Value = CellRef> {
    ("[0-9a-f]{16}", any::<String>(), 0u32..1_048_576, 0u32..16_384)
        .prop_map(|(id, sheet, row, col)| CellRef::new(WorkbookId::from_checksum(&id), sheet, row, col))
}

pub fn deep_link_round_trip(cases: u32) -> Result<(), String> {
    let base = "http://example.org/kg/";
    run(cases, (cell_ref(), cell_ref()), |(a, b)| {
        let mut linker = DeepLinker::new(base).unwrap();
        linker.register(a.workbook_id.clone());
        linker.register(b.workbook_id.clone());
        let ua = linker.link(&a).unwrap();
        let ub = linker.link(&b).unwrap();
        prop_assert!(Resource::new(ua.as_str()).is_ok());
        prop_assert_eq!(&linker.resolve(ua.as_str()).unwrap(), &a);
        prop_assert_eq!(&linker.resolve(ub.as_str()).unwrap(), &b);
        prop_assert_eq!(a == b, ua == ub);
        Ok(())
    })
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<String>().prop_map(Literal::string),
        any::<i64>().prop_map(|n| Literal::new(n.to_string(), Datatype::Integer).unwrap()),
        (any::<i32>(), 0u32..1000).prop_map(|(i, f)| Literal::new(format!("{i}.{f}"), Datatype::Decimal).unwrap()),
        any::<bool>().prop_map(|b| Literal::new(b.to_string(), Datatype::Boolean).unwrap()),
        (-300_000i32..300_000).prop_map(|d| {
            Literal::date(NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + chrono::Duration::days(d.into()))
        }),
    ]
}

fn resource() -> impl Strategy<Value = Resource> {
    let minter = Minter::new("http://example.org/kg/").unwrap();
    ("[A-Za-z]{1,8}", any::<String>()).prop_filter_map("label has no content", move |(kind, label)| {
        minter.resource(&kind, &label).ok()
    })
}

fn graph() -> impl Strategy<Value = Graph> {
    let object = prop_oneof![resource().prop_map(Term::from), literal().prop_map(Term::from)];
    prop::collection::vec((resource(), resource(), object), 0..24).prop_map(|ts| {
        let mut g = Graph::new();
        for (s, p, o) in ts {
            g.add(Triple::new(s, p, o));
        }
        g
    })
}

pub fn serialization_round_trip(cases: u32) -> Result<(), String> {
    run(cases, graph(), |g| {
        for format in [RdfFormat::NTriples, RdfFormat::Turtle] {
            let text = serialize(&g, format);
            let back = parse(&text, format).map_err(|e| TestCaseError::fail(format!("{format:?}: {e}\n{text}")))?;
            prop_assert_eq!(&back, &g, "{:?}", format);
            prop_assert_eq!(serialize(&back, format), text);
        }
        Ok(())
    })
}

fn stats_request(s: &Session, col: u32, split: bool) -> ExtractorRequest {
    let mut params = StatsParams::new(fixture::class(s, "Value"));
    params.property = fixture::property(s, &format!("col{col}"));
    if split {
        params.transform = Some(TransformExpr::parse(r#"split("/") | split("\n") | trim()"#).unwrap());
    }
    ExtractorRequest::Stats {
        selection: fixture::column(s, col),
        params,
    }
}

const PATTERNS: [&str; 6] = ["AB.+", r"\d+", "^x$", r"(?P<v>V\d): ", "Smith", r"[A-Z]{2}"];

fn regex_request(s: &Session, col: u32, pattern: &str) -> ExtractorRequest {
    ExtractorRequest::Regex {
        selection: fixture::column(s, col),
        params: RegexParams {
            pattern: pattern.into(),
            mode: RegexMode::Literal {
                group: GroupRef::Index(0),
                datatype: Datatype::String,
            },
            property: fixture::property(s, "matched"),
            remainder_property: Some(Vocabulary::remainder_comment()),
        },
    }
}

/// A request drawn from the scripted ones or built over a random column.
#[derive(Debug, Clone)]
enum Req {
    Scripted(usize),
    Stats { col: u32, split: bool },
    Regex { col: u32, pattern: usize },
}

impl Req {
    fn build(&self, s: &Session) -> ExtractorRequest {
        match *self {
            Req::Scripted(i) => {
                let all = fixture::requests(s);
                all[i % all.len()].clone()
            }
            Req::Stats { col, split } => stats_request(s, col, split),
            Req::Regex { col, pattern } => regex_request(s, col, PATTERNS[pattern]),
        }
    }
}

fn req() -> impl Strategy<Value = Req> {
    prop_oneof![
        (0usize..9).prop_map(Req::Scripted),
        (1u32..8, any::<bool>()).prop_map(|(col, split)| Req::Stats { col, split }),
        (1u32..8, 0..PATTERNS.len()).prop_map(|(col, pattern)| Req::Regex { col, pattern }),
    ]
}

pub fn commit_idempotence(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(req(), 1..5), |reqs| {
        let mut s = fixture::session();
        for r in reqs {
            let request = r.build(&s);
            let id = s.stage(request).unwrap().id.clone();
            let first = s.commit(&id).unwrap();
            let store = s.store().clone();
            let log_len = s.log_entries().len();
            let again = s.commit(&id).unwrap();
            prop_assert_eq!(&first, &again);
            prop_assert_eq!(&store, s.store());
            prop_assert_eq!(log_len, s.log_entries().len());
        }
        Ok(())
    })
}

#[derive(Debug, Clone)]
enum Op {
    Commit(Req),
    Discard(Req),
    Undo(prop::sample::Index),
    Remove { col: u32 },
    Collect { rerun: bool },
    Lift,
}

fn editing_op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => req().prop_map(Op::Commit),
        1 => req().prop_map(Op::Discard),
        1 => any::<prop::sample::Index>().prop_map(Op::Undo),
    ]
}

fn any_op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => editing_op(),
        1 => (1u32..8).prop_map(|col| Op::Remove { col }),
        1 => any::<bool>().prop_map(|rerun| Op::Collect { rerun }),
        1 => Just(Op::Lift),
    ]
}

/// Applies `op`; user errors such as re-collecting rows are part of the
/// exercise and leave the session untouched.
fn apply(s: &mut Session, op: &Op) {
    match op {
        Op::Commit(r) => {
            let request = r.build(s);
            if let Ok(st) = s.stage(request) {
                let id = st.id.clone();
                s.commit(&id).unwrap();
            }
        }
        Op::Discard(r) => {
            let request = r.build(s);
            if let Ok(st) = s.stage(request) {
                let id = st.id.clone();
                s.discard(&id).unwrap();
            }
        }
        Op::Undo(ix) => {
            let live: Vec<_> = s.commits().iter().filter(|c| !c.undone).map(|c| c.id.clone()).collect();
            if !live.is_empty() {
                s.undo(&live[ix.index(live.len())]).unwrap();
            }
        }
        Op::Remove { col } => {
            let sel = fixture::column(s, *col);
            s.remove_annotations(&sel, None).unwrap();
        }
        Op::Collect { rerun } => {
            let mut config = fixture::collector_config(s);
            config.rerun = *rerun;
            let _ = s.collect(config);
        }
        Op::Lift => {
            s.lift(None).unwrap();
        }
    }
}

fn sorted_exports(s: &Session) -> Vec<String> {
    [GraphName::Matching, GraphName::Knowledge]
        .into_iter()
        .flat_map(|g| [s.export(g, RdfFormat::NTriples), s.export(g, RdfFormat::Turtle)])
        .collect()
}

pub fn replay_determinism(cases: u32) -> Result<(), String> {
    let bytes = fixture::xlsx_bytes();
    run(cases, prop::collection::vec(any_op(), 0..12), |ops| {
        let mut s = fixture::session();
        for op in &ops {
            apply(&mut s, op);
        }
        let log = s.log_jsonl();
        let back = replay(&bytes, &log).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(sorted_exports(&back), sorted_exports(&s));
        prop_assert_eq!(back.log_jsonl(), log);
        Ok(())
    })
}

/// Every knowledge-graph subject is the object of a matching statement or
/// the instance of a row that still carries annotations.
pub fn traceability(cases: u32) -> Result<(), String> {
    let ops = (prop::collection::vec(editing_op(), 1..10), any::<bool>());
    run(cases, ops, |(ops, collect)| {
        let mut s = fixture::session();
        for op in &ops {
            apply(&mut s, op);
        }
        if collect {
            apply(&mut s, &Op::Collect { rerun: false });
            apply(&mut s, &Op::Lift);
        }
        let matching = s.graph(GraphName::Matching);
        let referenced: BTreeSet<&Resource> = matching.iter().filter_map(|t| t.object.as_resource()).collect();
        let linker = s.linker();
        let annotated_rows: BTreeSet<(String, u32)> = matching
            .iter()
            .filter_map(|t| linker.resolve(t.subject.as_str()).ok())
            .map(|c| (c.sheet, c.row))
            .collect();
        let instances: BTreeSet<&Resource> = s
            .instances()
            .into_iter()
            .filter(|i| annotated_rows.contains(&(i.sheet.clone(), i.row)))
            .map(|i| &i.iri)
            .collect();
        for t in s.graph(GraphName::Knowledge).iter() {
            prop_assert!(
                referenced.contains(&t.subject) || instances.contains(&t.subject),
                "untraceable subject {}",
                t.subject
            );
        }
        Ok(())
    })
}

fn texts() -> impl Strategy<Value = Vec<String>> {
    let piece = prop_oneof![
        Just("AB-".to_string()),
        Just("x".to_string()),
        Just("V1: ".to_string()),
        Just("Smith".to_string()),
        "[0-9]{1,3}",
        "[A-Za-z ]{0,4}",
        any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(prop::collection::vec(piece, 0..5).prop_map(|p| p.concat()), 1..20)
}

pub fn regex_partition(cases: u32) -> Result<(), String> {
    run(cases, (texts(), 0..PATTERNS.len()), |(cells, pattern)| {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &cells {
            w.write_record([c]).unwrap();
        }
        let bytes = w.into_inner().unwrap();
        let wb = load_workbook(&bytes, SourceFormat::Csv).unwrap();
        let sheet = wb.sheet("Sheet1").unwrap();
        let sel = Selection::column(&wb, "Sheet1", 0, 0..=cells.len() as u32);
        let Ok(resolved) = sel.resolve(&wb) else {
            prop_assert!(sheet.is_empty());
            return Ok(());
        };
        let params = RegexParams {
            pattern: PATTERNS[pattern].into(),
            mode: RegexMode::Literal {
                group: GroupRef::Index(0),
                datatype: Datatype::String,
            },
            property: Resource::new("http://example.org/p").unwrap(),
            remainder_property: None,
        };
        let out = regex_extract(&wb, &sel, &params).unwrap();
        let matched: BTreeSet<&CellRef> = out.matched.iter().map(|m| &m.cell).collect();
        let missed: BTreeSet<&CellRef> = out.missed.iter().map(|m| &m.cell).collect();
        let all: BTreeSet<&CellRef> = resolved.iter().map(|c| &c.cell_ref).collect();
        prop_assert!(matched.is_disjoint(&missed));
        prop_assert_eq!(matched.len() + missed.len(), all.len());
        prop_assert_eq!(matched.union(&missed).copied().collect::<BTreeSet<_>>(), all);
        prop_assert_eq!(out.matched.len(), matched.len());
        Ok(())
    })
}

/// Rows collected across random configurations satisfy the report law.
pub fn collect_report_law(cases: u32) -> Result<(), String> {
    run(cases, (prop::collection::vec(req(), 0..6), prop::sample::subsequence(vec!["documentId", "department", "published"], 0..=2)), |(reqs, required)| {
        let mut s = fixture::session();
        for r in reqs {
            apply(&mut s, &Op::Commit(r));
        }
        let mut config: CollectorConfig = fixture::collector_config(&s);
        config.required_properties = required.iter().map(|p| fixture::property(&s, p)).collect();
        let (report, _) = s.collect(config).unwrap();
        let annotated = (fixture::FIRST_ROW..=fixture::LAST_ROW).count() - report.unannotated.len();
        prop_assert_eq!(report.instances.len() + report.skipped_rows.len(), annotated);
        Ok(())
    })
}
