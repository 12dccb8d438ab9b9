//! Exit-code contract and output formats of the command-line interface.

use std::io::Write;
use std::process::Command;

use mtmorph::arabic;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_mtmorph"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn temp_file(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(content.as_bytes()).unwrap();
    f
}

#[test]
fn generate_prints_surface_and_features() {
    let (stdout, _, code) = run(&["generate", "jundub", "pl"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "janaadib\tnumber=pl\n");

    let (stdout, _, code) = run(&["generate", "sulTaan", "dim"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "sulayTaan\tnumber=sing form=dim\n");
}

#[test]
fn generate_trace_shows_one_column_per_step() {
    let (stdout, _, code) = run(&["generate", "jundub", "sing", "--trace"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "jundub\tnumber=sing form=base");
    let rule_row = lines.iter().find(|l| l.trim_start().starts_with("rule")).unwrap();
    let rules: Vec<&str> = rule_row.split_whitespace().skip(1).collect();
    assert_eq!(rules, ["R4", "R5", "R4", "R4", "R5", "R4"]);
    // Tapes not consumed in a step show as "-".
    let vocalism_row = lines.iter().find(|l| l.trim_start().starts_with("vocalism")).unwrap();
    let cells: Vec<&str> = vocalism_row.split_whitespace().skip(1).collect();
    assert_eq!(cells, ["-", "u", "-", "-", "u", "-"]);
}

#[test]
fn generate_json_carries_partitions() {
    let (stdout, _, code) = run(&["generate", "jundub", "pl", "--json"]);
    assert_eq!(code, 0);
    let record: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(record["surface"], "janaadib");
    assert_eq!(record["features"]["number"], "pl");
    assert_eq!(record["partitions"][0][0]["rule"], "R6");
    assert_eq!(record["partitions"][0][0]["lex"][1], "jn");
    assert_eq!(record["partitions"][0][1]["surf"], "dib");
}

#[test]
fn unknown_stem_is_an_error() {
    let (_, stderr, code) = run(&["generate", "qatal", "pl"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown stem"), "{stderr}");
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let (_, stderr, code) = run(&["generate", "jundub", "dual"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("sing, pl, dim"), "{stderr}");
}

#[test]
fn help_exits_zero() {
    let (_, _, code) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn generate_without_matching_mode_exits_two() {
    // A grammar whose only rule is singular-marked cannot realize a plural.
    let grammar = temp_file(
        "tapes: 1\nrule R opt\n features: number=sing, form=base\n lex: * | C1 | *\n surf: * | C1 | *\n",
    );
    let lexicon = temp_file("morpheme t1 x j\nstem x x\n");
    let g = grammar.path().to_str().unwrap();
    let l = lexicon.path().to_str().unwrap();
    let (stdout, _, code) = run(&["--grammar", g, "--lexicon", l, "generate", "x", "sing"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "j\tnumber=sing form=base\n");
    let (stdout, _, code) = run(&["--grammar", g, "--lexicon", l, "generate", "x", "pl"]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
}

#[test]
fn analyze_without_result_exits_two() {
    let (stdout, _, code) = run(&["analyze", "zzz"]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    let (stdout, _, code) = run(&["analyze", "jadnub"]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
}

#[test]
fn analyze_all_six_surfaces() {
    for (surface, stem, feats) in [
        ("jundub", "jundub", "number=sing form=base gloss=locust"),
        ("janaadib", "jundub", "number=pl gloss=locust"),
        ("junaydib", "jundub", "number=sing form=dim gloss=locust"),
        ("sulTaan", "sulTaan", "number=sing form=base gloss=sultan"),
        ("salaaTiin", "sulTaan", "number=pl gloss=sultan"),
        ("sulayTaan", "sulTaan", "number=sing form=dim gloss=sultan"),
    ] {
        let (stdout, _, code) = run(&["analyze", surface]);
        assert_eq!(code, 0, "{surface}");
        let line = stdout.trim_end();
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[0], stem, "{surface}");
        assert_eq!(fields[2], feats, "{surface}");
    }
}

#[test]
fn no_filter_marks_unattributed_candidates() {
    let (stdout, _, code) = run(&["analyze", "janaadib", "--no-filter"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().any(|l| l.starts_with("jundub\t")));
    assert!(lines.iter().any(|l| l.starts_with("-\tcvccvc+jndb+uaa")));
}

#[test]
fn check_default_corpus_passes() {
    let (stdout, _, code) = run(&["check"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.matches("PASS").count(), 6);
    assert!(stdout.contains("6 checked, 6 passed, 0 failed"), "{stdout}");
}

#[test]
fn check_reports_mismatches() {
    let corpus = temp_file("jundub\tpl\tjundub\n");
    let (stdout, _, code) = run(&["check", corpus.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("janaadib"), "the report names the actual surface: {stdout}");
    assert!(stdout.contains("1 checked, 0 passed, 1 failed"), "{stdout}");
}

#[test]
fn check_empty_corpus_passes() {
    let corpus = temp_file("# nothing but comments\n\n");
    let (stdout, _, code) = run(&["check", corpus.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("0 checked"), "{stdout}");
}

#[test]
fn check_rejects_malformed_corpus() {
    let corpus = temp_file("jundub pl janaadib\n");
    let (_, stderr, code) = run(&["check", corpus.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("3 tab-separated fields"), "{stderr}");

    let corpus = temp_file("jundub\tdual\tjanaadib\n");
    let (_, stderr, code) = run(&["check", corpus.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown mode"), "{stderr}");
}

#[test]
fn data_flags_accept_the_vendored_files() {
    let grammar = temp_file(arabic::MULTI_TAPE_GRAMMAR);
    let lexicon = temp_file(arabic::LEXICON);
    let (stdout, _, code) = run(&[
        "--grammar",
        grammar.path().to_str().unwrap(),
        "--lexicon",
        lexicon.path().to_str().unwrap(),
        "generate",
        "jundub",
        "pl",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "janaadib\tnumber=pl\n");
}

#[test]
fn unreadable_or_invalid_data_files_error() {
    let (_, stderr, code) = run(&["--grammar", "/does/not/exist.mtg", "generate", "jundub", "pl"]);
    assert_eq!(code, 1);
    assert!(!stderr.is_empty());

    let grammar = temp_file("tapes: 3\nrule broken\n");
    let (_, stderr, code) = run(&[
        "--grammar",
        grammar.path().to_str().unwrap(),
        "generate",
        "jundub",
        "pl",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("error"), "{stderr}");
}
