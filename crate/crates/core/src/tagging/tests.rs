use super::*;
use crate::source_model::parse_compilation_unit;
use crate::synth::{render_class, MethodSpec};

const CUSTOMER: &str = r#"package shop;

@CodeSmell (type=CodeSmellType.LargeClass,
            description="Too many functionalities")
public class Customer {
    private String name;

    public String getName() {
        return name;
    }
}
"#;

const PLAIN: &str = r#"package shop;

import java.util.List;

/** Customer entity. */
public class Customer {
    private String name;

    @Override
    public String toString() {
        return name;
    }
}
"#;

fn corpus(files: &[(&str, &str)]) -> Corpus {
    Corpus::from_units(
        files
            .iter()
            .map(|(path, src)| parse_compilation_unit(src, *path).unwrap())
            .collect(),
    )
}

fn registry() -> SmellRegistry {
    SmellRegistry::default()
}

#[test]
fn reads_the_customer_listing() {
    let tags = read_tags(&corpus(&[("Customer.java", CUSTOMER)]), &registry()).unwrap();
    assert_eq!(tags.len(), 1);
    assert_eq!(tags[0].element_id, "shop.Customer");
    assert_eq!(tags[0].smell, "LargeClass");
    assert_eq!(tags[0].description, "Too many functionalities");
    assert_eq!(tags[0].line, 3);
    assert_eq!(tags[0].origin, Origin::Expert);
}

#[test]
fn untagged_corpus_has_no_tags() {
    assert!(read_tags(&corpus(&[("Customer.java", PLAIN)]), &registry()).unwrap().is_empty());
}

#[test]
fn misplaced_and_unknown_tags_are_errors() {
    let misplaced = "@CodeSmell(type=CodeSmellType.LongMethod)\nclass A {}\n";
    assert!(matches!(
        read_tags(&corpus(&[("A.java", misplaced)]), &registry()),
        Err(TagError::GranularityMismatch { .. })
    ));
    let unknown = "class A {\n  @CodeSmell(type=CodeSmellType.FeatureEnvy)\n  void m() {}\n}\n";
    let err = read_tags(&corpus(&[("A.java", unknown)]), &registry()).unwrap_err();
    assert!(matches!(&err, TagError::UnknownSmellKind { name, .. } if name == "FeatureEnvy"));
    assert_eq!(err.to_string(), "A.java:2: unknown smell kind `FeatureEnvy`");
}

#[test]
fn write_tag_inserts_one_line_above_the_declaration() {
    let smell = SmellKind::large_class();
    let out = write_tag(PLAIN, Path::new("Customer.java"), "shop.Customer", &smell, "Too many functionalities")
        .unwrap();
    let expected = PLAIN.replace(
        "/** Customer entity. */\n",
        "/** Customer entity. */\n@CodeSmell(type=CodeSmellType.LargeClass, description=\"Too many functionalities\")\n",
    );
    assert_eq!(out, expected);

    let method = SmellKind::long_method();
    let out = write_tag(PLAIN, Path::new("Customer.java"), "shop.Customer#toString()", &method, "x").unwrap();
    assert!(out.contains(
        "    @CodeSmell(type=CodeSmellType.LongMethod, description=\"x\")\n    @Override\n    public String toString()"
    ));
}

#[test]
fn write_tag_errors() {
    let smell = SmellKind::large_class();
    let path = Path::new("Customer.java");
    assert!(matches!(
        write_tag(PLAIN, path, "shop.Nope", &smell, ""),
        Err(TagError::ElementNotFound(_))
    ));
    let once = write_tag(PLAIN, path, "shop.Customer", &smell, "d").unwrap();
    assert!(matches!(
        write_tag(&once, path, "shop.Customer", &smell, "d"),
        Err(TagError::AlreadyTagged { .. })
    ));
    assert!(matches!(
        write_tag(PLAIN, path, "shop.Customer", &SmellKind::long_method(), "d"),
        Err(TagError::GranularityMismatch { .. })
    ));
}

#[test]
fn tag_round_trips_through_read_tags() {
    let smell = SmellKind::long_method();
    let tricky = "say \"hi\" \\ back\tslash";
    let out = write_tag(PLAIN, Path::new("C.java"), "shop.Customer#toString()", &smell, tricky).unwrap();
    let tags = read_tags(&corpus(&[("C.java", &out)]), &registry()).unwrap();
    assert_eq!(tags.len(), 1);
    assert_eq!(tags[0].element_id, "shop.Customer#toString()");
    assert_eq!(tags[0].description, tricky);
}

#[test]
fn declaration_sharing_a_line_is_split() {
    let src = "class A { void m() { } }\n";
    let out = write_tag(src, Path::new("A.java"), "A#m()", &SmellKind::long_method(), "").unwrap();
    assert_eq!(out, "class A {\n@CodeSmell(type=CodeSmellType.LongMethod, description=\"\")\nvoid m() { } }\n");
    let tags = read_tags(&corpus(&[("A.java", &out)]), &registry()).unwrap();
    assert_eq!(tags[0].element_id, "A#m()");
}

#[test]
fn crlf_files_keep_their_line_endings() {
    let src = PLAIN.replace('\n', "\r\n");
    let out = write_tag(&src, Path::new("C.java"), "shop.Customer", &SmellKind::large_class(), "").unwrap();
    assert!(!out.replace("\r\n", "").contains('\n'));
}

#[test]
fn remove_tag_inverts_write_tag() {
    let path = Path::new("C.java");
    for (id, smell) in [
        ("shop.Customer", SmellKind::large_class()),
        ("shop.Customer#toString()", SmellKind::long_method()),
    ] {
        let tagged = write_tag(PLAIN, path, id, &smell, "why").unwrap();
        assert_eq!(remove_tag(&tagged, path, id, &smell.name).unwrap(), PLAIN);
    }
    assert!(matches!(
        remove_tag(PLAIN, path, "shop.Customer", "LargeClass"),
        Err(TagError::NotTagged { .. })
    ));
    let stripped = remove_tag(CUSTOMER, path, "shop.Customer", "LargeClass").unwrap();
    assert!(stripped.starts_with("package shop;\n\npublic class Customer {"));
}

#[test]
fn escape_and_unescape_are_inverse() {
    for text in ["", "plain", "quote \" and \\", "tab\tnew\nline\r", "\u{1}ctl", "üñí"] {
        assert_eq!(unescape_java(&format!("\"{}\"", escape_java(text))), text);
    }
    assert_eq!(unescape_java("\"a\" + \"b\""), "ab");
    assert_eq!(unescape_java("\"\\u0041\\101\""), "AA");
}

fn four_methods() -> String {
    let tag = |s: &str| vec![annotation_text(s, "")];
    render_class(
        "org.apache.commons.cli",
        "HelpFormatter",
        &[
            (MethodSpec::new("flatten", 69, 5, 11, 3, 9), vec![]),
            (MethodSpec::new("parse", 67, 5, 14, 4, 12), tag("LongMethod")),
            (MethodSpec::new("renderOptions", 59, 4, 10, 5, 19), tag("LongMethod")),
            (MethodSpec::new("burstToken", 46, 4, 6, 2, 5), vec![]),
        ],
    )
}

#[test]
fn build_sample_labels_tagged_methods() {
    let src = four_methods();
    let c = corpus(&[("HelpFormatter.java", &src)]);
    let t = build_sample_at(&c, &SmellKind::long_method(), "commons-cli", "2026-01-01T00:00:00Z").unwrap();
    let got: Vec<(Vec<f64>, u8)> = t.rows.iter().map(|r| (r.values.clone(), r.label)).collect();
    let want = [
        ([69.0, 5.0, 11.0, 3.0, 9.0], 0),
        ([67.0, 5.0, 14.0, 4.0, 12.0], 1),
        ([59.0, 4.0, 10.0, 5.0, 19.0], 1),
        ([46.0, 4.0, 6.0, 2.0, 5.0], 0),
    ];
    assert_eq!(got.len(), 4);
    for ((values, label), (wv, wl)) in got.iter().zip(want) {
        assert_eq!(values.as_slice(), wv.as_slice());
        assert_eq!(*label, wl);
    }
    let r = &t.rows[1];
    assert_eq!(
        (r.application.as_str(), r.package.as_str(), r.class.as_str(), r.method.as_deref()),
        ("commons-cli", "org.apache.commons.cli", "HelpFormatter", Some("parse(int,int,int,int)"))
    );
    assert_eq!(t.rows.iter().map(|r| u32::from(r.label)).sum::<u32>(), 2);
}

#[test]
fn build_sample_needs_elements() {
    let c = corpus(&[("I.java", "interface I { void m(); }\n")]);
    assert!(matches!(
        build_sample(&c, &SmellKind::long_method(), "app"),
        Err(TagError::EmptyCorpus(Granularity::Method))
    ));
}

#[test]
fn feedback_rows_carry_verdict_and_origin() {
    let src = four_methods();
    let c = corpus(&[("HelpFormatter.java", &src)]);
    let smell = SmellKind::long_method();
    let fneg = record_feedback(&c, "HelpFormatter#burstToken", &smell, Verdict::FalseNegative, "app").unwrap();
    assert_eq!((fneg.label, fneg.origin), (1, Origin::FeedbackFn));
    assert_eq!(fneg.values, [46.0, 4.0, 6.0, 2.0, 5.0]);
    let fpos = record_feedback(&c, "HelpFormatter#renderOptions", &smell, Verdict::FalsePositive, "app").unwrap();
    assert_eq!((fpos.label, fpos.origin), (0, Origin::FeedbackFp));
    assert!(matches!(
        record_feedback(&c, "HelpFormatter#missing", &smell, Verdict::FalsePositive, "app"),
        Err(TagError::ElementNotFound(_))
    ));
}

#[test]
fn repeated_feedback_pulls_the_refit_toward_its_label() {
    use crate::stats::{fit_blr, FitOptions};
    let base = SampleTable::from_xy(
        &["MLOC"],
        &[vec![10.0], vec![20.0], vec![30.0], vec![40.0], vec![50.0], vec![60.0]],
        &[0, 0, 1, 0, 1, 1],
    );
    let before = fit_blr(&base, &FitOptions::default()).unwrap();
    let mut with_feedback = base.clone();
    for _ in 0..2 {
        let mut row = base.rows[1].clone();
        row.label = 1;
        row.origin = Origin::FeedbackFn;
        with_feedback.rows.push(row);
    }
    let after = fit_blr(&with_feedback, &FitOptions::default()).unwrap();
    let x = [20.0];
    assert!(after.predict(&x) > before.predict(&x));
}
