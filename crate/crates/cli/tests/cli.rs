use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const OUTPUTS: [&str; 5] = ["matching.nt", "matching.ttl", "knowledge.nt", "knowledge.ttl", "instances.json"];

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn sheetkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sheetkg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn replay(workbook: &Path, log: &Path, out: &Path) -> Output {
    sheetkg(&[
        "replay",
        "--workbook",
        workbook.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn replay_reproduces_golden_exports() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let o = replay(&f.join("table1.xlsx"), &f.join("table1.log.jsonl"), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in OUTPUTS {
        let got = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let want = std::fs::read_to_string(f.join("golden").join(name)).unwrap();
        assert_eq!(got, want, "{name} differs from golden");
    }
}

#[test]
fn repeated_replays_are_byte_identical() {
    let f = fixtures();
    let runs: Vec<Vec<Vec<u8>>> = (0..3)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let o = replay(&f.join("table1.xlsx"), &f.join("table1.log.jsonl"), dir.path());
            assert!(o.status.success(), "{}", stderr(&o));
            OUTPUTS.iter().map(|n| std::fs::read(dir.path().join(n)).unwrap()).collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn replay_format_flag_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let o = sheetkg(&[
        "replay",
        "--workbook",
        f.join("table1.xlsx").to_str().unwrap(),
        "--log",
        f.join("table1.log.jsonl").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "ntriples",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("knowledge.nt").exists());
    assert!(!dir.path().join("knowledge.ttl").exists());
}

#[test]
fn config_file_supplies_paths() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().canonicalize().unwrap();
    let config = dir.path().join("sheetkg.toml");
    std::fs::write(
        &config,
        format!(
            "workbook = {:?}\nlog = {:?}\nout = \"exports\"\nport = 9999\n",
            f.join("table1.xlsx"),
            f.join("table1.log.jsonl")
        ),
    )
    .unwrap();
    let o = sheetkg(&["--config", config.to_str().unwrap(), "replay"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let want = std::fs::read_to_string(f.join("golden/knowledge.ttl")).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("exports/knowledge.ttl")).unwrap(), want);
}

#[test]
fn missing_workbook_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let o = replay(&dir.path().join("absent.xlsx"), &f.join("table1.log.jsonl"), dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.xlsx"));
}

#[test]
fn corrupted_log_line_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let log = std::fs::read_to_string(f.join("table1.log.jsonl")).unwrap();
    let mut lines: Vec<&str> = log.lines().collect();
    lines[3] = "{\"op\":\"commit\",";
    let broken = dir.path().join("broken.jsonl");
    std::fs::write(&broken, lines.join("\n")).unwrap();
    let o = replay(&f.join("table1.xlsx"), &broken, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn checksum_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let o = replay(&f.join("table1.csv"), &f.join("table1.log.jsonl"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checksum mismatch"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(sheetkg(&["replay", "--bogus"]).status.code(), Some(1));
    assert_eq!(sheetkg(&["replay"]).status.code(), Some(1));
    assert_eq!(sheetkg(&["--help"]).status.code(), Some(0));
}

#[test]
fn export_and_inspect_print_graphs() {
    let f = fixtures();
    let wb = f.join("table1.xlsx");
    let log = f.join("table1.log.jsonl");
    let o = sheetkg(&[
        "export",
        "--workbook",
        wb.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--graph",
        "matching",
        "--format",
        "ntriples",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let want = std::fs::read(f.join("golden/matching.nt")).unwrap();
    assert_eq!(o.stdout, want);

    let o = sheetkg(&[
        "inspect",
        "--workbook",
        wb.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--cell",
        "Sheet1!C2",
        "--format",
        "ntriples",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("/cell/R1C2> <http://example.org/sheetkg/property/department>"), "{text}");

    let o = sheetkg(&[
        "inspect",
        "--workbook",
        wb.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--cell",
        "Nowhere!Z9",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_log_replays_to_empty_graphs_with_flag_config() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let log = dir.path().join("empty.jsonl");
    std::fs::write(&log, "").unwrap();
    let o = sheetkg(&[
        "--epoch",
        "1899-12-30",
        "replay",
        "--workbook",
        f.join("table1.xlsx").to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(dir.path().join("out/knowledge.nt")).unwrap(), "");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/instances.json")).unwrap()).unwrap();
    assert_eq!(report, serde_json::json!({"instances": [], "skipped_rows": []}));
}

fn stats(path: &Path, extra: &[&str]) -> String {
    let mut args = vec!["stats-report", "--workbook", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = sheetkg(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    String::from_utf8(o.stdout).unwrap()
}

fn row<'a>(table: &'a str, name: &str) -> Vec<&'a str> {
    table
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|cols| cols.first() == Some(&name))
        .unwrap_or_else(|| panic!("no {name} row in\n{table}"))
}

#[test]
fn stats_report_counts_fixture_cells() {
    let f = fixtures();
    let table = stats(&f.join("table1.xlsx"), &["--header-rows", "1"]);
    assert_eq!(row(&table, "Sheet1")[1..], ["4", "8", "26", "21", "5", "0"]);
    assert_eq!(row(&table, "total")[1..], ["4", "8", "26", "21", "5", "0"]);

    let with_header = stats(&f.join("table1.xlsx"), &[]);
    assert_eq!(row(&with_header, "Sheet1")[1..], ["5", "8", "34", "29", "5", "0"]);

    let json = stats(&f.join("table1.xlsx"), &["--header-rows", "1", "--json"]);
    assert!(json.contains("\"numerics\": 5"), "{json}");
}

#[test]
fn stats_report_counts_formulas_and_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("calc.csv");
    std::fs::write(&csv, "a,b,sum\n1,2,=A2+B2\nx,,\n").unwrap();
    let table = stats(&csv, &[]);
    assert_eq!(row(&table, "total")[1..], ["3", "3", "7", "5", "2", "0"], "csv cells are never formulas");

    let xlsx = dir.path().join("calc.xlsx");
    let mut book = rust_xlsxwriter::Workbook::new();
    let sheet = book.add_worksheet().set_name("Calc").unwrap();
    sheet.write_string(0, 0, "a").unwrap();
    sheet.write_number(1, 0, 1.0).unwrap();
    sheet.write_number(1, 1, 2.0).unwrap();
    sheet.write_formula(1, 2, "=A2+B2").unwrap();
    book.add_worksheet().set_name("Blank").unwrap();
    book.save(&xlsx).unwrap();
    let table = stats(&xlsx, &[]);
    assert_eq!(row(&table, "Calc")[1..], ["2", "3", "4", "1", "2", "1"]);
    assert_eq!(row(&table, "Blank")[1..], ["0", "0", "0", "0", "0", "0"]);
    assert_eq!(row(&table, "total")[1..], ["2", "3", "4", "1", "2", "1"]);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let table = stats(&empty, &[]);
    assert_eq!(row(&table, "total")[1..], ["0", "0", "0", "0", "0", "0"]);
}
