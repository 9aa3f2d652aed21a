use std::path::PathBuf;
use std::process::{Command, Output};

use dimers::graph::honeycomb_hexagon;
use dimers::height::tileable;
use dimers_cli::docs::*;
use dimers_cli::svg;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimers")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, body: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn out_path(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

const HONEYCOMB: &str = "[[1,0,0],[1,1,0],[1,0,1]]";

/// Parses, re-serializes and parses again; both values must agree and the
/// text must be reproduced exactly.
fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(text: &str) -> T {
    let a: T = serde_json::from_str(text).unwrap();
    let again = serde_json::to_string_pretty(&a).unwrap() + "\n";
    assert_eq!(again, text);
    let b: T = serde_json::from_str(&again).unwrap();
    assert_eq!(a, b);
    a
}

#[test]
fn counts_and_tileability() {
    let r8 = scratch("r8.json", r#"{"version": 1, "lattice": "square", "shape": {"type": "rectangle", "m": 8, "n": 8}}"#);
    let o = bin(&["count", &r8]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "12988816\n");
    let doc: ScalarDoc = round_trip(&stdout(&bin(&["count", &r8, "--json"])));
    assert_eq!((doc.value.as_str(), doc.version.as_str()), ("12988816", VERSION));

    let corner = scratch(
        "corner.json",
        r#"{"version": 1, "lattice": "square", "shape": {"type": "rectangle", "m": 8, "n": 8}, "remove": [[0, 0], [7, 7]]}"#,
    );
    let o = bin(&["tileable", &corner]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "false\n"));
    assert_eq!(stdout(&bin(&["count", &corner])), "0\n");

    let w = out_path("witness.json");
    assert_eq!(stdout(&bin(&["tileable", &r8, "--witness", &w])), "true\n");
    let m: MatchingDoc = round_trip(&std::fs::read_to_string(&w).unwrap());
    assert_eq!(m.edges.len(), 32);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bin(&["count"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    let bad = scratch("bad.json", r#"{"version": 7, "lattice": "square", "shape": {"type": "rectangle", "m": 2, "n": 2}}"#);
    assert_eq!(bin(&["count", &bad]).status.code(), Some(1));
    assert_eq!(bin(&["count", "/no/such/file.json"]).status.code(), Some(1));
    // infeasible: no dimer cover, slope outside the triangle
    let odd = scratch("odd.json", r#"{"version": 1, "lattice": "square", "shape": {"type": "rectangle", "m": 3, "n": 3}}"#);
    assert_eq!(bin(&["height", &odd]).status.code(), Some(2));
    assert_eq!(bin(&["surface-tension", "--s", "0.9", "--t", "0.5"]).status.code(), Some(2));
    // tolerance: loop integrals cannot meet an absurd bound
    assert_eq!(bin(&["limit-shape", "--per-unit", "8", "--loop-tol", "1e-14"]).status.code(), Some(3));
}

#[test]
fn spectral_scalars() {
    let f: f64 = stdout(&bin(&["free-energy", "--poly", HONEYCOMB])).trim().parse().unwrap();
    assert!((f - 0.323066).abs() < 1e-4);
    let s: f64 = stdout(&bin(&["surface-tension", "--s", "0.3", "--t", "0.2"])).trim().parse().unwrap();
    let s2: f64 = stdout(&bin(&["surface-tension", "--poly", HONEYCOMB, "--s", "0.3", "--t", "0.2"])).trim().parse().unwrap();
    assert!((s - s2).abs() < 1e-8);
    let r: f64 = stdout(&bin(&["ronkin", "--poly", HONEYCOMB, "--x", "0", "--y", "0"])).trim().parse().unwrap();
    assert_eq!(r, f);

    let p: PhaseDoc = round_trip(&stdout(&bin(&["phase", "--poly", HONEYCOMB, "--x", "-3", "--y", "-3"])));
    assert_eq!((p.phase.as_str(), p.slope), ("frozen", (0.0, 0.0)));
    let p: PhaseDoc = round_trip(&stdout(&bin(&["phase", "--poly", HONEYCOMB, "--s", "0.3", "--t", "0.3"])));
    assert_eq!(p.phase, "liquid");
}

#[test]
fn torus_commands() {
    let t1 = scratch("t1.json", r#"{"version": 1, "lattice": "honeycomb", "shape": {"type": "torus", "l": 1}}"#);
    let cp: CharpolyDoc = round_trip(&stdout(&bin(&["charpoly", &t1])));
    assert_eq!(cp.terms.len(), 3);
    assert_eq!(cp.newton_polygon, vec![(0, 0), (1, 0), (0, 1)]);
    let tz: TorusZDoc = round_trip(&stdout(&bin(&["torus-z", &t1, "--n", "1", "--json"])));
    assert_eq!(tz.z, "3");

    let o = bin(&["height-dist", "--n", "3"]);
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(o.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().len(), 5);
    let total: u64 = rd.records().map(|r| r.unwrap().iter().skip(1).map(|v| v.parse::<u64>().unwrap()).sum::<u64>()).sum();
    let z: u64 = stdout(&bin(&["torus-z", &t1, "--n", "3"])).trim().parse().unwrap();
    assert_eq!(total, z);
}

#[test]
fn amoeba_report_and_picture() {
    let pic = out_path("amoeba.svg");
    let o = bin(&["amoeba", "--poly", HONEYCOMB, "--res", "80", "--svg", &pic]);
    assert!(o.status.success());
    let doc: AmoebaDoc = round_trip(&stdout(&o));
    assert_eq!((doc.bounded, doc.unbounded), (0, 3));
    let body = std::fs::read_to_string(&pic).unwrap();
    assert!(body.starts_with("<svg") && body.contains(VERSION) && body.contains("<path"));
    let o = bin(&["amoeba", "--poly", HONEYCOMB, "--window", "-2,2,-2,2", "--res", "40"]);
    let doc: AmoebaDoc = round_trip(&stdout(&o));
    assert_eq!(doc.x_range, (-2.0, 2.0));
}

#[test]
fn sampling_is_reproducible() {
    let hex = scratch("hex.json", r#"{"version": 1, "lattice": "honeycomb", "shape": {"type": "hexagon", "a": 3, "b": 2, "c": 3}}"#);
    let a = bin(&["sample", &hex, "--count", "5", "--seed", "9"]);
    let b = bin(&["sample", &hex, "--count", "5", "--seed", "9", "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let doc: SampleDoc = round_trip(&stdout(&a));
    assert_eq!((doc.samples.len(), doc.seed, doc.log_probs.len()), (5, 9, 5));
    let g = bin(&["sample", &hex, "--count", "6", "--method", "glauber", "--chains", "3"]);
    let doc: SampleDoc = round_trip(&stdout(&g));
    assert_eq!((doc.samples.len(), doc.method.as_str()), (6, "glauber"));

    let s1 = out_path("s1.svg");
    let s2 = out_path("s2.svg");
    bin(&["sample", &hex, "--seed", "3", "--svg", &s1]);
    bin(&["sample", &hex, "--seed", "3", "--svg", &s2]);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());

    let o = bin(&["stats", &hex, "--count", "400", "--exact", "--seed", "2"]);
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(o.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().iter().last(), Some("z"));
    for r in rd.records() {
        let z: f64 = r.unwrap()[8].parse().unwrap();
        assert!(z.abs() < 5.0);
    }
}

#[test]
fn heights_as_csv() {
    let hex = scratch("hex2.json", r#"{"version": 1, "lattice": "honeycomb", "shape": {"type": "hexagon", "a": 2, "b": 2, "c": 2}}"#);
    let o = bin(&["height", &hex]);
    let text = stdout(&o);
    assert!(text.starts_with(&format!("# {VERSION}\n")));
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    // every bounded face: the 7 interior hexagons
    assert_eq!(rows.len(), 7);
    for r in &rows {
        let exact: Vec<i64> = r[4].split('/').map(|v| v.parse().unwrap()).collect();
        let val = exact[0] as f64 / exact.get(1).copied().unwrap_or(1) as f64;
        assert_eq!(val, r[3].parse::<f64>().unwrap());
    }
}

#[test]
fn lozenge_tiles_cover_the_region() {
    let g = honeycomb_hexagon(3, 2, 4).unwrap();
    let (_, m) = tileable(&g);
    let m = m.unwrap();
    let area = |p: &[(f64, f64)]| {
        (0..p.len()).map(|i| p[i].0 * p[(i + 1) % p.len()].1 - p[(i + 1) % p.len()].0 * p[i].1).sum::<f64>().abs() / 2.0
    };
    let mut total = 0.0;
    for e in m.edges() {
        let t = svg::tile(&g, e);
        for i in 0..4 {
            let (a, b) = (t[i], t[(i + 1) % 4]);
            assert!(((a.0 - b.0).hypot(a.1 - b.1) - 1.0).abs() < 1e-12);
        }
        total += area(&t);
    }
    // two unit triangles per tile, every triangle used once
    let tri = 3f64.sqrt() / 4.0;
    assert!((total - (g.nw() + g.nb()) as f64 * tri).abs() < 1e-9);
    let pic = svg::tiling(&g, &m);
    assert_eq!(pic.matches("<polygon").count(), g.nw());
}

#[test]
fn limit_shape_outputs() {
    let poly = scratch("poly.json", r#"{"vertices": [[1, 0], [1, 1], [0, 1], [-1, 0], [-1, -1], [0, -1]]}"#);
    let (s, h, p) = (out_path("slopes.csv"), out_path("heights.csv"), out_path("shape.svg"));
    let o = bin(&["limit-shape", "--polygon", &poly, "--per-unit", "8", "--minimize", "--slopes", &s, "--heights", &h, "--svg", &p]);
    assert!(o.status.success());
    let doc: LimitShapeDoc = round_trip(&stdout(&o));
    assert_eq!(doc.degree, 2);
    assert!(doc.minimizer.as_ref().unwrap().linf_cells <= 2.0);
    let rows = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&s).unwrap().records().count();
    assert_eq!(rows, doc.nodes);
    assert!(std::fs::read_to_string(&p).unwrap().contains("<circle"));
}

#[test]
fn fluctuation_table() {
    let o = bin(&["fluctuations", "--kmax", "1000", "--points", "8", "--rmax", "20"]);
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.iter().filter(|r| &r[0] == "variance").count(), 8);
    let slope = rows.iter().find(|r| &r[0] == "variance_slope").unwrap();
    let (got, want): (f64, f64) = (slope[2].parse().unwrap(), slope[3].parse().unwrap());
    assert!((got - want).abs() < 0.05 * want);
    assert_eq!(bin(&["fluctuations", "--weights", "1,1,3"]).status.code(), Some(1));
}
