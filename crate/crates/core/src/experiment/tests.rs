use super::*;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

#[test]
fn parses_minimal_config() {
    let c = cfg(r#"
experiment = "thm1.1-band"
dim = 1
seed = 4
[family]
kind = "boundary_accumulation"
rate = 1.0
members = 3
"#);
    assert_eq!(c.experiment, ExperimentKind::BoundednessBand);
    assert_eq!(c.sampler, SamplerSizes::default());
    assert!(matches!(
        c.family,
        Some(FamilySpec::BoundaryAccumulation {
            members: 3,
            first: 1,
            ..
        })
    ));
}

#[test]
fn rejects_unknown_fields() {
    let e = ExperimentConfig::from_toml("experiment = \"thm1.1-band\"\ndim = 1\nbogus = 2\n");
    assert!(matches!(e, Err(Error::Config(_))));
    let e = ExperimentConfig::from_toml("experiment = \"nope\"\ndim = 1\n");
    assert!(matches!(e, Err(Error::Config(_))));
}

#[test]
fn hypothesis_violation_names_t_p() {
    let c = cfg(r#"
experiment = "thm6.2-band"
dim = 2
[params]
t = 2.0
ps = [0.5]
[family]
kind = "random_cloud"
count = 4
"#);
    match run(&c) {
        Err(Error::Config(m)) => assert!(m.contains("t > t_p"), "{m}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn exponent_relations_are_checked() {
    let c = cfg("experiment = \"thm1.2-band\"\ndim = 1\n[params]\np = 4.0\nq = 2.0\nr = 3.0\n");
    assert!(matches!(validate(&c), Err(Error::Config(_))));
    let c = cfg("experiment = \"thm1.2-band\"\ndim = 1\n[params]\np = 2.0\nq = 4.0\n");
    assert!(matches!(validate(&c), Err(Error::Config(_))));
    let c = cfg("experiment = \"thm1.1-band\"\ndim = 1\n[params]\ns = 1.5\n");
    assert!(matches!(validate(&c), Err(Error::Config(_))));
}

#[test]
fn band_violation_names_member() {
    let c = cfg(r#"
experiment = "thm1.1-band"
dim = 1
test_mode = true
[family]
kind = "boundary_accumulation"
rate = 1.0
members = 2
[[bands]]
min = 1e6
max = 2e6
"#);
    let r = run(&c).unwrap();
    assert!(!r.passed());
    assert_eq!(r.violations.len(), 2);
    assert!(r.violations[0].contains("atoms=1"));
}

#[test]
fn wcomp_rows_and_csv_schema() {
    let c = cfg(r#"
experiment = "sec7-wcomp"
dim = 1
[disk]
phi = [[0.0, 0.0], [0.5, 0.0]]
section = 32
grid = 64
top = 6
"#);
    let r = run(&c).unwrap();
    assert_eq!(r.rows.len(), 6);
    for row in &r.rows {
        assert!((row.ratio - 1.0).abs() < 1e-8, "{row:?}");
    }
    let csv = r.to_csv().unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "schema_version,experiment,member,param,quantity_a,quantity_b,value_a,value_b,ratio"
    );
    // The member label carries a comma and must be quoted.
    assert!(csv.lines().nth(1).unwrap().contains("\"N=32,m=64\""));
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["seed"], 0);
}

#[test]
fn outputs_are_written_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = |tag: &str| {
        format!(
            r#"
experiment = "thm1.1-band"
dim = 2
seed = 3
[family]
kind = "random_cloud"
count = 6
members = 2
[output]
csv = "{0}/{tag}.csv"
json = "{0}/{tag}.json"
"#,
            dir.path().display()
        )
    };
    run(&cfg(&text("a"))).unwrap();
    run(&cfg(&text("b"))).unwrap();
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}
