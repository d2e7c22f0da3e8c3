//! Corpus-wide parser checks: every fixture parses, survives a
//! parse -> pretty -> parse round trip unchanged, maps to a target model,
//! and emits balanced units.

use vdm_oracle::ast::ast_equal;
use vdm_oracle::emit::{emit_oracle_class, syntactic_balance};
use vdm_oracle::optimize::map_class_with_scope;
use vdm_oracle::parser::parse_source;
use vdm_oracle::pretty::pretty_print;
use vdm_oracle::resolve::ResolvedClass;

fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn corpus_paths() -> Vec<std::path::PathBuf> {
    let mut paths = vec![fixture_dir().join("triangle.vdmpp")];
    let corpus = fixture_dir().join("corpus");
    let mut entries: Vec<_> = std::fs::read_dir(&corpus)
        .expect("corpus directory exists")
        .map(|e| e.expect("readable entry").path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "vdmpp"))
        .collect();
    entries.sort();
    paths.extend(entries);
    paths
}

#[test]
fn corpus_is_large_enough() {
    // The triangle fixture plus at least ten corpus files.
    assert!(corpus_paths().len() >= 11, "corpus too small: {:?}", corpus_paths());
}

/// Pretty-print every class of a file into one source text.
fn pretty_file(file: &vdm_oracle::SpecFile) -> String {
    file.classes.iter().map(pretty_print).collect::<Vec<_>>().join("\n")
}

#[test]
fn corpus_parses_and_round_trips() {
    for path in corpus_paths() {
        let text = std::fs::read_to_string(&path).expect("fixture readable");
        let file = match parse_source(&text) {
            Ok(f) => f,
            Err(diags) => panic!(
                "{} failed to parse:\n{}",
                path.display(),
                diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
            ),
        };
        let printed = pretty_file(&file);
        let reparsed = match parse_source(&printed) {
            Ok(f) => f,
            Err(diags) => panic!(
                "{}: pretty output failed to reparse:\n{}\n--- printed ---\n{}",
                path.display(),
                diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
                printed
            ),
        };
        assert_eq!(reparsed.classes.len(), file.classes.len(), "{}", path.display());
        for (class, round_tripped) in file.classes.iter().zip(&reparsed.classes) {
            assert!(
                ast_equal(class, round_tripped),
                "{}: class {} did not round-trip.\n--- printed ---\n{}",
                path.display(),
                class.name,
                printed
            );
        }
    }
}

#[test]
fn corpus_round_trips_twice_to_a_fixpoint() {
    // pretty(parse(pretty(f))) must equal pretty(parse(f)): the canonical
    // form is stable.
    for path in corpus_paths() {
        let text = std::fs::read_to_string(&path).expect("fixture readable");
        let file = parse_source(&text).expect("parses");
        let once = pretty_file(&file);
        let again = pretty_file(&parse_source(&once).expect("reparses"));
        assert_eq!(once, again, "{}", path.display());
    }
}

#[test]
fn corpus_maps_and_emits_balanced_units() {
    for path in corpus_paths() {
        let text = std::fs::read_to_string(&path).expect("fixture readable");
        let file = parse_source(&text).expect("parses");
        for class in &file.classes {
            let scope = ResolvedClass::resolve(&file, &class.name)
                .unwrap_or_else(|d| panic!("{}: {}", path.display(), d));
            let model = map_class_with_scope(class, &scope.class)
                .unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
            // Access and name preservation.
            for (m, f) in model.methods.iter().zip(
                class
                    .function_defs
                    .iter()
                    .map(|f| (f.name.clone(), f.access))
                    .chain(class.operations.iter().map(|o| (o.name.clone(), o.access))),
            ) {
                assert_eq!((m.name.clone(), m.access), f, "{}", path.display());
            }
            assert_eq!(model.name, format!("Oracle_{}", class.name));
            let unit = emit_oracle_class(&model)
                .unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
            assert!(
                syntactic_balance(&unit.text),
                "{}: unbalanced emission for {}\n{}",
                path.display(),
                class.name,
                unit.text
            );
        }
    }
}

#[test]
fn unicode_and_ascii_spellings_parse_identically() {
    let path = fixture_dir().join("triangle.vdmpp");
    let text = std::fs::read_to_string(path).expect("fixture readable");
    let ascii = text
        .replace('→', "->")
        .replace('∧', " and ")
        .replace('∀', " forall ")
        .replace('∈', " in set ");
    let original = parse_source(&text).expect("unicode spelling parses");
    let replaced = parse_source(&ascii).expect("ascii spelling parses");
    assert!(ast_equal(&original.classes[0], &replaced.classes[0]));
}
