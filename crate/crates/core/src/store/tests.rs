use super::*;
use crate::stats::{calibrate, fit_blr, CalibrationOptions, FitOptions, INTERCEPT};

fn fresh() -> (tempfile::TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path().join(STORE_DIR), &Config::new("commons-cli")).unwrap();
    (dir, store)
}

fn table1_rows() -> Vec<SampleRow> {
    let rows = [
        ("GnuParser", "flatten(Options,String[],boolean)", [69.0, 5.0, 11.0, 3.0, 9.0], 0),
        ("Parser", "parse(Options,String[],Properties,boolean)", [67.0, 5.0, 14.0, 4.0, 12.0], 1),
        ("HelpFormatter", "renderOptions(StringBuffer,int,Options,int,int)", [59.0, 4.0, 10.0, 5.0, 19.0], 1),
        ("PosixParser", "burstToken(String,boolean)", [46.0, 4.0, 6.0, 2.0, 5.0], 0),
    ];
    rows.iter()
        .map(|(c, m, v, l)| SampleRow {
            application: "ApacheCommonsCLI1.2".into(),
            package: "org.apache.commons.cli".into(),
            class: (*c).into(),
            method: Some((*m).into()),
            values: v.to_vec(),
            label: *l,
            origin: Origin::Expert,
            timestamp: "2026-01-01T00:00:00Z".into(),
        })
        .collect()
}

#[test]
fn init_creates_the_layout_and_keeps_config() {
    let (_dir, store) = fresh();
    for p in ["config.toml", "client_id", "feedback.log", "samples", "models"] {
        assert!(store.root().join(p).exists(), "{p}");
    }
    assert_eq!(store.config().unwrap().application, "commons-cli");
    let id = store.client_id().unwrap();
    Store::init(store.root(), &Config::new("other")).unwrap();
    assert_eq!(store.config().unwrap().application, "commons-cli");
    assert_eq!(store.client_id().unwrap(), id);
    assert!(matches!(Store::open(store.root().join("nope")), Err(StoreError::NotInitialized(_))));
}

#[test]
fn config_declares_smells_and_thresholds() {
    let text = r#"
application = "app"
server_url = "http://localhost:8080"
calibration_roots = ["src/main/java"]

[[smell]]
name = "LongMethod"
threshold = 0.7

[[smell]]
name = "ComplexMethod"
granularity = "method"
metrics = ["VG", "NBD"]
"#;
    let config = Config::parse(text, Path::new("config.toml")).unwrap();
    assert_eq!(config.threshold("LongMethod"), Some(0.7));
    assert_eq!(config.threshold("LargeClass"), None);
    let reg = config.registry().unwrap();
    assert_eq!(reg.get("ComplexMethod").unwrap().metric_set, ["VG", "NBD"]);
    assert_eq!(reg.get("LongMethod").unwrap(), &SmellKind::long_method());
    assert_eq!(Config::parse(&config.to_toml(), Path::new("c")).unwrap(), config);

    for bad in [
        "application = \"a\"\n[[smell]]\nname = \"X\"\nmetrics = [\"NOPE\"]\n",
        "application = \"a\"\n[[smell]]\nname = \"LongMethod\"\nthreshold = 0.0\n",
        "application = \"a\"\n[[smell]]\nname = \"Undeclared\"\n",
        "[[smell]]\nname = \"LongMethod\"\n",
    ] {
        assert!(matches!(Config::parse(bad, Path::new("c")), Err(StoreError::Config { .. })), "{bad}");
    }
}

#[test]
fn table1_rows_append_and_load_back() {
    let (_dir, store) = fresh();
    let smell = SmellKind::long_method();
    assert_eq!(store.append_rows(&smell, &table1_rows()).unwrap(), 4);
    let text = fs::read_to_string(store.samples_path("LongMethod")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "application,package,class,method,MLOC,NBD,VG,PAR,LVAR,label,origin,timestamp");
    assert_eq!(
        lines[1],
        "ApacheCommonsCLI1.2,org.apache.commons.cli,GnuParser,\"flatten(Options,String[],boolean)\",69,5,11,3,9,0,expert,2026-01-01T00:00:00Z"
    );
    assert!(!text.contains('\r'));

    let table = store.load_table("LongMethod").unwrap();
    assert_eq!(table.metric_names, ["MLOC", "NBD", "VG", "PAR", "LVAR"]);
    assert_eq!(table.rows, table1_rows());
}

#[test]
fn empty_append_leaves_the_file_alone() {
    let (_dir, store) = fresh();
    let smell = SmellKind::long_method();
    assert_eq!(store.append_rows(&smell, &[]).unwrap(), 0);
    assert!(!store.samples_path("LongMethod").exists());
    store.append_rows(&smell, &table1_rows()).unwrap();
    let before = fs::read(store.samples_path("LongMethod")).unwrap();
    assert_eq!(store.append_rows(&smell, &[]).unwrap(), 0);
    assert_eq!(fs::read(store.samples_path("LongMethod")).unwrap(), before);
}

#[test]
fn schema_and_duplicate_violations_write_nothing() {
    let (_dir, store) = fresh();
    let smell = SmellKind::long_method();
    let mut short = table1_rows();
    short[2].values.pop();
    assert!(matches!(store.append_rows(&smell, &short), Err(StoreError::SchemaMismatch { .. })));
    assert!(!store.samples_path("LongMethod").exists());

    store.append_rows(&smell, &table1_rows()).unwrap();
    let before = fs::read(store.samples_path("LongMethod")).unwrap();
    let mut again = table1_rows();
    again[0].timestamp = "2026-02-01T00:00:00Z".into();
    assert!(matches!(store.append_rows(&smell, &again), Err(StoreError::DuplicateRow { .. })));
    assert_eq!(fs::read(store.samples_path("LongMethod")).unwrap(), before);

    let merged = store.merge_rows(&smell, &again).unwrap();
    assert_eq!((merged.appended, merged.duplicates), (vec![0], 3));
    assert_eq!(store.load_table("LongMethod").unwrap().len(), 5);

    let other = SmellKind::new("LongMethod", Granularity::Method, &["MLOC", "VG"]).unwrap();
    let two = vec![SampleRow { values: vec![1.0, 2.0], ..table1_rows()[0].clone() }];
    assert!(matches!(store.append_rows(&other, &two), Err(StoreError::SchemaMismatch { .. })));

    let mut bad = table1_rows();
    bad[0].label = 2;
    assert!(matches!(store.append_rows(&smell, &bad), Err(StoreError::InvalidRow { .. })));
    bad[0].label = 0;
    bad[0].values[0] = f64::NAN;
    assert!(matches!(store.append_rows(&smell, &bad), Err(StoreError::InvalidRow { .. })));
    bad[0].values[0] = 1.0;
    bad[0].method = None;
    assert!(matches!(store.append_rows(&smell, &bad), Err(StoreError::InvalidRow { .. })));
}

#[test]
fn corrupted_line_reports_its_number() {
    let (_dir, store) = fresh();
    store.append_rows(&SmellKind::long_method(), &table1_rows()).unwrap();
    let path = store.samples_path("LongMethod");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[2] = lines[2].replace(",67,", ",sixty-seven,");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    match store.load_table("LongMethod") {
        Err(StoreError::ParseError { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    lines[2] = "a,b,c".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(matches!(store.load_table("LongMethod"), Err(StoreError::ParseError { line: 3, .. })));
    assert!(matches!(store.load_table("LargeClass"), Err(StoreError::MissingFile(_))));
}

#[test]
fn type_rows_leave_the_method_column_empty() {
    let (_dir, store) = fresh();
    let row = SampleRow {
        application: "shop".into(),
        package: String::new(),
        class: "Customer.Address".into(),
        method: None,
        values: vec![120.0, 14.0, 6.0, 31.0, 0.75],
        label: 1,
        origin: Origin::FeedbackFn,
        timestamp: "2026-03-04T05:06:07.000000008Z".into(),
    };
    store.append_rows(&SmellKind::large_class(), std::slice::from_ref(&row)).unwrap();
    assert_eq!(store.load_table("LargeClass").unwrap().rows, [row]);
}

fn model(version: u32) -> SmellModel {
    let mut table = crate::stats::testdata::two_by_two();
    table.metric_names = vec!["VG".into()];
    let smell = SmellKind::new("Flagged", Granularity::Method, &["VG"]).unwrap();
    let mut m = calibrate(&table, &smell, &CalibrationOptions::default(), version - 1).unwrap();
    m.calibrated_at = format!("2026-01-0{version}T00:00:00Z");
    m
}

#[test]
fn model_versions_move_into_history() {
    let (_dir, store) = fresh();
    assert!(matches!(store.load_model("Flagged"), Err(StoreError::MissingModel(_))));
    assert_eq!(store.model_version("Flagged").unwrap(), None);
    store.save_model(&model(1)).unwrap();
    assert!(matches!(store.save_model(&model(1)), Err(StoreError::VersionConflict { stored: 1, attempted: 1, .. })));
    store.save_model(&model(2)).unwrap();
    assert_eq!(store.load_model("Flagged").unwrap().version, 2);
    assert!(store.history_dir("Flagged").join("v1.json").is_file());
    store.save_model(&model(3)).unwrap();
    let history = store.model_history("Flagged").unwrap();
    assert_eq!(history.iter().map(|m| m.version).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(history.windows(2).all(|w| w[0].calibrated_at < w[1].calibrated_at));
    assert_eq!(history[0], model(1));
}

#[test]
fn model_coefficients_round_trip_exactly() {
    let (_dir, store) = fresh();
    let fit = fit_blr(&crate::stats::testdata::two_by_two(), &FitOptions::default()).unwrap();
    let mut m = model(1);
    m.beta = vec![-std::f64::consts::LN_2, 2.0 * std::f64::consts::LN_2];
    store.save_model(&m).unwrap();
    let back = store.load_model("Flagged").unwrap();
    assert_eq!(back.beta.iter().map(|b| b.to_bits()).collect::<Vec<_>>(), m.beta.iter().map(|b| b.to_bits()).collect::<Vec<_>>());
    assert!((back.beta[0] - fit.beta[0]).abs() < 1e-9 && (back.beta[1] - fit.beta[1]).abs() < 1e-9);
    assert_eq!(back.diagnostics.coefficients[0].name, INTERCEPT);
}

#[test]
fn feedback_log_only_grows() {
    let (_dir, store) = fresh();
    let mut len = 0;
    for (i, origin) in [Origin::FeedbackFp, Origin::FeedbackFn, Origin::FeedbackFp].into_iter().enumerate() {
        store
            .append_feedback_log(&FeedbackEntry {
                timestamp: format!("2026-01-0{}T00:00:00Z", i + 1),
                smell: "LongMethod".into(),
                origin,
                element_id: "a.B#m(int,int)".into(),
                application: "app".into(),
            })
            .unwrap();
        let now = fs::metadata(store.feedback_log_path()).unwrap().len();
        assert!(now > len);
        len = now;
    }
    let log = store.feedback_log().unwrap();
    assert_eq!(log.len(), 3);
    assert_eq!(log[1].origin, Origin::FeedbackFn);
}

#[test]
fn watermarks_persist_per_smell() {
    let (_dir, store) = fresh();
    assert_eq!(store.watermark("LongMethod").unwrap(), Watermark::default());
    store.set_watermark("LongMethod", Watermark { samples: 5, feedback: 2 }).unwrap();
    store.set_watermark("LargeClass", Watermark { samples: 1, feedback: 0 }).unwrap();
    assert_eq!(store.watermark("LongMethod").unwrap(), Watermark { samples: 5, feedback: 2 });
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn row() -> impl Strategy<Value = SampleRow> {
        (
            "[a-z]{1,6}(\\.[a-z]{1,6}){0,2}",
            "[A-Z][a-zA-Z0-9]{0,8}",
            "[a-z][a-zA-Z]{0,8}\\((int(,int){0,3})?\\)",
            prop::collection::vec(prop_oneof![(0u32..500).prop_map(f64::from), 0.0f64..1e6], 5),
            0u8..2,
            prop_oneof![Just(Origin::Expert), Just(Origin::FeedbackFp), Just(Origin::FeedbackFn)],
            0u32..1000,
        )
            .prop_map(|(package, class, method, values, label, origin, t)| SampleRow {
                application: "app".into(),
                package,
                class,
                method: Some(method),
                values,
                label,
                origin,
                timestamp: format!("2026-01-01T00:00:{t:03}Z"),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn append_then_load_is_identity(rows in prop::collection::vec(row(), 0..20)) {
            let (_dir, store) = fresh();
            let smell = SmellKind::long_method();
            let mut unique = Vec::new();
            let mut seen = HashSet::new();
            for r in rows {
                if seen.insert(owned_key(&r)) {
                    unique.push(r);
                }
            }
            let (first, second) = unique.split_at(unique.len() / 2);
            store.append_rows(&smell, first).unwrap();
            store.append_rows(&smell, second).unwrap();
            let table = store.load_table_or_empty(&smell).unwrap();
            prop_assert_eq!(table.rows, unique);
        }
    }
}
