//! Command-line front end: synthesis, analysis, and corpus checking.
//!
//! Exit codes are a contract: 0 success, 1 error (usage, parse, IO), 2 no
//! result (nothing generated, no analysis, or a failed corpus check).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mtmorph::arabic;
use mtmorph::engine::{analyze, synthesize, Analysis, SynthesisResult};
use mtmorph::feature::FeatureStructure;
use mtmorph::morphotactics::{self, MorphotacticGrammar};
use mtmorph::partition::Partition;
use mtmorph::ruledsl::{parse_grammar, parse_lexicon, Grammar, Lexicon};
use mtmorph::segment::seq_to_string;
use mtmorph::EngineError;

const DEFAULT_CORPUS: &str = include_str!("../data/corpus.tsv");

#[derive(Parser)]
#[command(name = "mtmorph", version, about = "Multi-tape two-level morphology engine")]
struct Cli {
    #[command(flatten)]
    data: DataArgs,

    /// Emit one JSON record per line instead of the tab-separated format.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Rule file to use instead of the built-in grammar.
    #[arg(long, global = true, value_name = "PATH")]
    grammar: Option<PathBuf>,

    /// Lexicon file to use instead of the built-in one.
    #[arg(long, global = true, value_name = "PATH")]
    lexicon: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the surface forms of a stem in one mode.
    Generate {
        /// Stem id from the lexicon.
        stem: String,
        /// Morphological mode to realize.
        #[arg(value_enum)]
        mode: Mode,
        /// Show each derivation as a step-by-step partition table.
        #[arg(long)]
        trace: bool,
    },
    /// Analyze a surface form back to lexicon stems.
    Analyze {
        /// Surface form in transliteration.
        surface: String,
        /// Show each analysis as a step-by-step partition table.
        #[arg(long)]
        trace: bool,
        /// Keep analyses that do not correspond to any declared stem.
        #[arg(long)]
        no_filter: bool,
    },
    /// Generate and re-analyze every line of a corpus, reporting PASS/FAIL.
    Check {
        /// Corpus file (stem, mode, surface; tab-separated). Defaults to the
        /// built-in table.
        corpus: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sing,
    Pl,
    Dim,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Sing => "sing",
            Mode::Pl => "pl",
            Mode::Dim => "dim",
        }
    }

    fn parse(text: &str) -> Option<Mode> {
        match text {
            "sing" => Some(Mode::Sing),
            "pl" => Some(Mode::Pl),
            "dim" => Some(Mode::Dim),
            _ => None,
        }
    }

    fn features(self) -> FeatureStructure {
        arabic::mode_features(self.name()).expect("fixed mode names")
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let (grammar, lexicon) = load_data(&cli.data)?;
    match cli.command {
        Command::Generate { stem, mode, trace } => {
            cmd_generate(&grammar, &lexicon, &stem, mode, trace, cli.json)
        }
        Command::Analyze {
            surface,
            trace,
            no_filter,
        } => cmd_analyze(&grammar, &lexicon, &surface, trace, no_filter, cli.json),
        Command::Check { corpus } => {
            let text = match &corpus {
                Some(path) => fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => DEFAULT_CORPUS.to_string(),
            };
            cmd_check(&grammar, &lexicon, &text)
        }
    }
}

fn load_data(args: &DataArgs) -> Result<(Grammar, Lexicon), String> {
    let builtin = arabic::builtin();
    let grammar = match &args.grammar {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_grammar(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => builtin.multi_tape,
    };
    let lexicon = match &args.lexicon {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_lexicon(&text, &grammar).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => parse_lexicon(arabic::LEXICON, &grammar)
            .map_err(|e| format!("built-in lexicon does not fit this grammar: {e}"))?,
    };
    Ok((grammar, lexicon))
}

// --- rendering -------------------------------------------------------------

/// Feature pairs with number and form first and gloss last; gloss can be
/// suppressed where the stem id already names the lexeme.
fn render_features(features: &FeatureStructure, include_gloss: bool) -> String {
    let mut parts = Vec::new();
    for attr in ["number", "form"] {
        if let Some(v) = features.get(attr) {
            parts.push(format!("{attr}={v}"));
        }
    }
    let mut rest: Vec<_> = features
        .iter()
        .filter(|(k, _)| !matches!(k.as_str(), "number" | "form" | "gloss"))
        .collect();
    rest.sort_by(|a, b| a.0.cmp(b.0));
    for (k, v) in rest {
        parts.push(format!("{k}={v}"));
    }
    if include_gloss {
        if let Some(v) = features.get("gloss") {
            parts.push(format!("gloss={v}"));
        }
    }
    parts.join(" ")
}

fn features_json(features: &FeatureStructure) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (k, v) in features.iter() {
        map.insert(k.clone(), serde_json::Value::String(v.to_string()));
    }
    serde_json::Value::Object(map)
}

fn partition_json(partition: &Partition) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = partition
        .steps
        .iter()
        .map(|step| {
            serde_json::json!({
                "rule": step.rule_id,
                "lex": step.lex_slices.iter().map(|s| seq_to_string(s)).collect::<Vec<_>>(),
                "surf": seq_to_string(&step.surf_slice),
            })
        })
        .collect();
    serde_json::Value::Array(steps)
}

/// One column per step: the consumed slice of every tape, the rule id, and
/// the emitted surface slice. Empty slices show as "-".
fn render_partition_table(partition: &Partition, grammar: &Grammar) -> String {
    let cell = |segments: &[mtmorph::Segment]| -> String {
        if segments.is_empty() {
            "-".to_string()
        } else {
            seq_to_string(segments)
        }
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, name) in grammar.tape_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(partition.steps.iter().map(|s| cell(&s.lex_slices[i])));
        rows.push(row);
    }
    let mut rule_row = vec!["rule".to_string()];
    rule_row.extend(partition.steps.iter().map(|s| s.rule_id.clone()));
    rows.push(rule_row);
    let mut surf_row = vec!["surface".to_string()];
    surf_row.extend(partition.steps.iter().map(|s| cell(&s.surf_slice)));
    rows.push(surf_row);

    let ncols = rows[0].len();
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|row| {
            let line = row
                .iter()
                .enumerate()
                .map(|(c, cell)| format!("{:width$}", cell, width = widths[c]))
                .collect::<Vec<_>>()
                .join("  ");
            format!("  {}\n", line.trim_end())
        })
        .collect()
}

// --- generate --------------------------------------------------------------

fn cmd_generate(
    grammar: &Grammar,
    lexicon: &Lexicon,
    stem_id: &str,
    mode: Mode,
    trace: bool,
    json: bool,
) -> Result<ExitCode, String> {
    let stem = lexicon
        .stem(stem_id)
        .ok_or_else(|| format!("unknown stem '{stem_id}'"))?;
    let (lexical, features) = lexicon.stem_lexical(stem, grammar.ntapes);
    let results = synthesize(&lexical, &features, grammar).map_err(|e| e.to_string())?;
    let wanted = mode.features();
    let results: Vec<SynthesisResult> = results
        .into_iter()
        .filter(|r| r.features.compatible(&wanted))
        .collect();

    for result in &results {
        if json {
            let record = serde_json::json!({
                "surface": result.surface_string(),
                "features": features_json(&result.features),
                "partitions": result.partitions.iter().map(partition_json).collect::<Vec<_>>(),
            });
            println!("{record}");
        } else {
            let feats = render_features(&result.features, false);
            if feats.is_empty() {
                println!("{}", result.surface_string());
            } else {
                println!("{}\t{}", result.surface_string(), feats);
            }
            if trace {
                for partition in &result.partitions {
                    print!("{}", render_partition_table(partition, grammar));
                }
            }
        }
    }
    Ok(ExitCode::from(if results.is_empty() { 2 } else { 0 }))
}

// --- analyze ---------------------------------------------------------------

fn raw_analyses(
    grammar: &Grammar,
    lexicon: &Lexicon,
    surface: &str,
) -> Result<Vec<Analysis>, String> {
    match analyze(surface, grammar, lexicon) {
        Ok(list) => Ok(list),
        // A symbol outside the alphabet cannot be part of any analysis.
        Err(EngineError::UnknownSymbol(_)) => Ok(Vec::new()),
        Err(e) => Err(e.to_string()),
    }
}

/// The morpheme triple as written in the stem declaration when the analysis
/// is attributed, in tape order otherwise.
fn morpheme_column(analysis: &Analysis, lexicon: &Lexicon) -> String {
    let ids: Vec<String> = match &analysis.stem_id {
        Some(stem_id) => lexicon
            .stem(stem_id)
            .map(|s| s.morpheme_ids.clone())
            .unwrap_or_else(|| analysis.morpheme_ids.clone()),
        None => analysis.morpheme_ids.clone(),
    };
    ids.join("+")
}

fn cmd_analyze(
    grammar: &Grammar,
    lexicon: &Lexicon,
    surface: &str,
    trace: bool,
    no_filter: bool,
    json: bool,
) -> Result<ExitCode, String> {
    let raw = raw_analyses(grammar, lexicon, surface)?;
    let mt = MorphotacticGrammar::from_lexicon(lexicon, grammar.ntapes);
    let shown: Vec<Analysis> = if no_filter {
        // Attribute each raw analysis where possible but drop none.
        raw.iter()
            .map(|a| {
                let kept = morphotactics::filter(std::slice::from_ref(a), &mt);
                kept.into_iter().next().unwrap_or_else(|| a.clone())
            })
            .collect()
    } else {
        morphotactics::filter(&raw, &mt)
    };

    for analysis in &shown {
        if json {
            let record = serde_json::json!({
                "surface": surface,
                "stem": analysis.stem_id,
                "morphemes": analysis.morpheme_ids,
                "features": features_json(&analysis.features),
                "partitions": analysis.partitions.iter().map(partition_json).collect::<Vec<_>>(),
            });
            println!("{record}");
        } else {
            let stem_column = analysis.stem_id.as_deref().unwrap_or("-");
            let feats = render_features(&analysis.features, true);
            let mut line = format!("{stem_column}\t{}", morpheme_column(analysis, lexicon));
            if !feats.is_empty() {
                line.push('\t');
                line.push_str(&feats);
            }
            println!("{line}");
            if trace {
                for partition in &analysis.partitions {
                    print!("{}", render_partition_table(partition, grammar));
                }
            }
        }
    }
    Ok(ExitCode::from(if shown.is_empty() { 2 } else { 0 }))
}

// --- check -----------------------------------------------------------------

struct CorpusLine {
    lineno: usize,
    stem: String,
    mode: Mode,
    surface: String,
}

fn parse_corpus(text: &str) -> Result<Vec<CorpusLine>, String> {
    let mut out = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(at) => &raw_line[..at],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        let [stem, mode, surface] = fields.as_slice() else {
            return Err(format!(
                "corpus line {}: expected 3 tab-separated fields, got {}",
                i + 1,
                fields.len()
            ));
        };
        let mode = Mode::parse(mode)
            .ok_or_else(|| format!("corpus line {}: unknown mode '{mode}'", i + 1))?;
        out.push(CorpusLine {
            lineno: i + 1,
            stem: stem.to_string(),
            mode,
            surface: surface.to_string(),
        });
    }
    Ok(out)
}

/// A line passes when generation yields exactly the expected surface and
/// analyzing that surface recovers the stem with mode-compatible features.
fn check_line(grammar: &Grammar, lexicon: &Lexicon, line: &CorpusLine) -> Result<(), String> {
    let stem = lexicon
        .stem(&line.stem)
        .ok_or_else(|| format!("unknown stem '{}'", line.stem))?;
    let (lexical, features) = lexicon.stem_lexical(stem, grammar.ntapes);
    let results = synthesize(&lexical, &features, grammar).map_err(|e| e.to_string())?;
    let wanted = line.mode.features();
    let generated: Vec<String> = results
        .iter()
        .filter(|r| r.features.compatible(&wanted))
        .map(|r| r.surface_string())
        .collect();
    if generated != [line.surface.clone()] {
        return Err(format!(
            "generated {:?}, expected \"{}\"",
            generated, line.surface
        ));
    }

    let raw = raw_analyses(grammar, lexicon, &line.surface)?;
    let mt = MorphotacticGrammar::from_lexicon(lexicon, grammar.ntapes);
    let kept = morphotactics::filter(&raw, &mt);
    let recovered = kept
        .iter()
        .any(|a| a.stem_id.as_deref() == Some(line.stem.as_str()) && a.features.compatible(&wanted));
    if !recovered {
        return Err(format!(
            "analysis of \"{}\" does not recover {} as {}",
            line.surface,
            line.stem,
            line.mode.name()
        ));
    }
    Ok(())
}

fn cmd_check(grammar: &Grammar, lexicon: &Lexicon, text: &str) -> Result<ExitCode, String> {
    let lines = parse_corpus(text)?;
    let mut failed = 0usize;
    for line in &lines {
        match check_line(grammar, lexicon, line) {
            Ok(()) => println!(
                "PASS line {}: {} {} {}",
                line.lineno,
                line.stem,
                line.mode.name(),
                line.surface
            ),
            Err(reason) => {
                failed += 1;
                println!(
                    "FAIL line {}: {} {} {}: {}",
                    line.lineno,
                    line.stem,
                    line.mode.name(),
                    line.surface,
                    reason
                );
            }
        }
    }
    println!("{} checked, {} passed, {failed} failed", lines.len(), lines.len() - failed);
    Ok(ExitCode::from(if failed == 0 { 0 } else { 2 }))
}
