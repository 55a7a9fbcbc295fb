//! Acceptance criteria. Runs without the libtest harness so that every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use positools::charclass::{chern_forms, fulton_bundle_classes, schur_form, Partition};
use positools::curvature::{random_dual_nakano, random_nakano, CurvatureTensor, MatrixMap};
use positools::discriminant::{alexandroff_check, double_mixed_discriminant, mixed_discriminant};
use positools::fiber::{verify_jacobi_trudi, verify_nakano_pushforward, verify_segre, QuadratureRule};
use positools::linalg::{self, CMat, C64, ONE, ZERO};
use positools::multilinear::{form_operator, restrict, ComplexPlane};
use positools::opsearch::{
    choi_matrix, h_prime_pair, k_positive, kraus_decompose, kraus_residual, random_positive_map,
    search_open_problem, zoo, MapKind, SearchConfig, ZooParam, CHOI_TOL,
};
use positools::psi::{tilde_top_chern, top_chern_on_plane};
use positools::rankmin::Budget;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_s) {
        return Err(format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()));
    }
    Ok(())
}

fn schur_positivity() -> Outcome {
    let start = Instant::now();
    let partitions: Vec<Partition> = (1..=3).flat_map(|k| Partition::all(k, 3)).collect();
    let mut worst = f64::INFINITY;
    for s in 0..50u64 {
        for (family, t) in [("dual-nakano", random_dual_nakano(3, 3, 9, s)), ("nakano", random_nakano(3, 3, 9, s))] {
            for a in &partitions {
                let op = form_operator(&schur_form(&t, a).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                let m = op.min_eigenvalue();
                worst = worst.min(m);
                ensure!(m >= -1e-9, "{family} seed {s}, partition {a}: min eigenvalue {m:e}");
            }
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("100 tensors × {} partitions, min eigenvalue {worst:e}", partitions.len()))
}

fn plane_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let (n, r) = [(2, 2), (3, 2), (3, 3)][i as usize % 3];
        let t = CurvatureTensor::random(n, r, 1000 + i);
        let mut g = linalg::rng(2000 + i);
        let plane = ComplexPlane::random(&mut g, n, r);
        let a = top_chern_on_plane(&t, &plane).map_err(|e| e.to_string())?;
        let b = restrict(&chern_forms(&t)[r], &plane).map_err(|e| e.to_string())?;
        let rel = (a - b).abs() / b.abs().max(1e-300);
        worst = worst.max(rel);
        ensure!(rel <= 1e-9, "pair {i} (n={n}, r={r}): {a} vs {b}");
    }
    within(start.elapsed(), 30)?;
    Ok(format!("100 pairs, max relative deviation {worst:e}"))
}

fn tilde_identity() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let d = 2 + i as usize % 2;
        let t = CurvatureTensor::random(d, d, 3000 + i);
        let a = tilde_top_chern(&t).map_err(|e| e.to_string())?;
        let b = form_operator(&chern_forms(&t)[d]).map_err(|e| e.to_string())?;
        let dev = linalg::max_abs_diff(a.matrix(), b.matrix()) / linalg::max_abs(b.matrix()).max(1.0);
        worst = worst.max(dev);
        ensure!(dev <= 1e-9, "tensor {i} (n=r={d}): deviation {dev:e}");
    }
    Ok(format!("100 tensors, max deviation {worst:e}"))
}

fn choi_bridge() -> Outcome {
    let mut g = linalg::rng(4);
    let mut maps: Vec<(String, MatrixMap)> = Vec::new();
    let zoo_entries = [
        ("identity", ZooParam::Dim(3)),
        ("transpose", ZooParam::Dim(3)),
        ("zero", ZooParam::Dim(2)),
        ("conjugation", ZooParam::Matrix(linalg::random_matrix(&mut g, 3, 2))),
        ("schneider-transpose", ZooParam::Matrix(linalg::random_matrix(&mut g, 3, 3))),
        ("choi3", ZooParam::None),
        ("reduction", ZooParam::Dim(3)),
        ("k-positive", ZooParam::DimLevel(3, 1)),
        ("k-positive", ZooParam::DimLevel(3, 2)),
    ];
    for (name, p) in &zoo_entries {
        maps.push((format!("{name} {p:?}"), zoo(name, p).map_err(|e| e.to_string())?));
    }
    for s in 0..50u64 {
        let (n, r) = (1 + s as usize % 3, 1 + s as usize / 3 % 3);
        maps.push((format!("cp seed {s}"), random_positive_map(n, r, MapKind::Cp, s).map_err(|e| e.to_string())?.map));
    }
    let (mut cp_count, mut worst_residual, mut worst_hpp) = (0, 0.0f64, 0.0f64);
    for (label, h) in &maps {
        let choi = choi_matrix(h);
        let psd = choi.is_psd(CHOI_TOL);
        let top = k_positive(h, h.n().min(h.r()), 1e-9, &Budget::default());
        ensure!(psd == top.is_nonnegative(), "{label}: Choi PSD {psd}, top level {}", top.label());
        match kraus_decompose(h) {
            Ok(ks) => {
                ensure!(psd, "{label}: Kraus decomposition for a non-CP map");
                let res = kraus_residual(h, &ks);
                worst_residual = worst_residual.max(res);
                ensure!(res <= 1e-10, "{label}: Kraus residual {res:e}");
                cp_count += 1;
            }
            Err(_) => ensure!(!psd, "{label}: CP map without Kraus decomposition"),
        }
        let (_, hpp) = h_prime_pair(h);
        let d = linalg::max_abs_diff(&hpp, &choi.matrix().transpose());
        worst_hpp = worst_hpp.max(d);
        ensure!(d <= 1e-12, "{label}: H″ differs from Choiᵀ by {d:e}");
    }
    Ok(format!(
        "{} maps ({cp_count} CP), max Kraus residual {worst_residual:e}, max H″ deviation {worst_hpp:e}",
        maps.len()
    ))
}

fn discriminant_anchors() -> Outcome {
    let dmd = |h: &MatrixMap| double_mixed_discriminant(h).map_err(|e| e.to_string());
    let diag = |d: &[f64]| CMat::from_fn(d.len(), d.len(), |i, j| if i == j { C64::from(d[i]) } else { ZERO });
    let cases = [
        ("identity", dmd(&MatrixMap::identity(2))?, 1.0),
        ("transpose", dmd(&MatrixMap::transpose(2))?, 1.0),
        ("conjugation by diag(1,2)", dmd(&MatrixMap::conjugation(&diag(&[1.0, 2.0])))?, 4.0),
    ];
    for (name, got, want) in cases {
        ensure!((got - want).abs() <= 1e-12, "{name}: {got} vs {want}");
    }
    let i2 = CMat::identity(2, 2);
    let d_ii = mixed_discriminant(&[i2.clone(), i2]).map_err(|e| e.to_string())?;
    ensure!(d_ii == ONE, "D(I,I) = {d_ii}");
    let d_split = mixed_discriminant(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).map_err(|e| e.to_string())?;
    ensure!(d_split == C64::from(0.5), "D(diag(1,0),diag(0,1)) = {d_split}");
    Ok("identity 1, transpose 1, diag(1,2) conjugation 4, D(I,I) = 1, D(E11,E22) = 1/2".into())
}

fn open_problem_harness() -> Outcome {
    let start = Instant::now();
    let r2 = SearchConfig {
        r: 2,
        samples: 10_000,
        kinds: MapKind::ALL.iter().copied().filter(|k| k.supports(2)).collect(),
        seed: 2024,
    };
    let r3 = SearchConfig {
        r: 3,
        samples: 10_000,
        kinds: vec![MapKind::Cp, MapKind::CoCp, MapKind::Decomposable],
        seed: 2025,
    };
    let mut lines = Vec::new();
    for cfg in [r2, r3] {
        let (records, summary) = search_open_problem(&cfg).map_err(|e| e.to_string())?;
        ensure!(records.len() == cfg.samples, "r={}: {} records", cfg.r, records.len());
        if cfg.r == 3 {
            ensure!(
                records.iter().all(|rec| rec.certificate.is_certified()),
                "r=3: uncertified sample"
            );
        }
        ensure!(summary.review.is_empty(), "r={}: REVIEW at {:?}", cfg.r, summary.review);
        ensure!(summary.invariant_holds, "r={}: decomposable minimum {:e}", cfg.r, summary.decomposable_min);
        ensure!(summary.min_value >= -1e-10, "r={}: minimum {:e} at {:?}", cfg.r, summary.min_value, summary.argmin);
        lines.push(format!("r={} min {:e}", cfg.r, summary.min_value));
    }
    within(start.elapsed(), 600)?;
    Ok(format!("2 × 10⁴ samples, {}", lines.join(", ")))
}

fn segre_pushforward() -> Outcome {
    let rule = QuadratureRule::default();
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let n = 1 + i as usize % 3;
        let t = CurvatureTensor::random(n, 2, 5000 + i);
        for k in 1..=n.min(2) {
            let rep = verify_segre(&t, k, &rule).map_err(|e| e.to_string())?;
            worst = worst.max(rep.rel_deviation);
            ensure!(rep.rel_deviation <= 1e-4, "tensor {i} (n={n}), k={k}: {:e}", rep.rel_deviation);
            if k == 2 && i < 4 {
                let finer = verify_segre(&t, k, &rule.refined()).map_err(|e| e.to_string())?;
                ensure!(
                    finer.rel_deviation < rep.rel_deviation,
                    "tensor {i}: refinement {:e} ≥ {:e}",
                    finer.rel_deviation,
                    rep.rel_deviation
                );
            }
        }
    }
    Ok(format!("10 tensors, max relative deviation {worst:e}, refinement decreases error"))
}

fn jacobi_trudi() -> Outcome {
    let rule = QuadratureRule::default();
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let n = 2 + i as usize % 2;
        let t = CurvatureTensor::random(n, 2, 6000 + i);
        for a in [Partition::row(2), Partition::column(2)] {
            let rep = verify_jacobi_trudi(&t, &a, &rule).map_err(|e| e.to_string())?;
            worst = worst.max(rep.rel_deviation);
            ensure!(rep.rel_deviation <= 1e-4, "tensor {i}, partition {a}: {:e}", rep.rel_deviation);
            if a == Partition::column(2) {
                let seg = verify_segre(&t, 2, &rule).map_err(|e| e.to_string())?;
                let d = rep.rhs.distance(&seg.rhs) / seg.lhs.max_abs().max(1e-300);
                ensure!(d <= 2e-4, "tensor {i}: (1,1) route vs Segre {d:e}");
            }
        }
    }
    Ok(format!("10 tensors × 2 partitions, max relative deviation {worst:e}"))
}

fn nakano_pushforward() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let (n, r) = (2 + i as usize / 2 % 2, 2 + i as usize % 2);
        let t = CurvatureTensor::random(n, r, 7000 + i);
        let rep = verify_nakano_pushforward(&t, &[i as usize % r], 32, 8000 + i).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_deviation);
        ensure!(rep.max_deviation <= 1e-8, "tensor {i} (n={n}, r={r}): {:e}", rep.max_deviation);
    }
    Ok(format!("10 tensors × 32 fiber points, max deviation {worst:e}"))
}

fn fulton_classes() -> Outcome {
    for m in 1..=10i64 {
        let (c1, c2) = fulton_bundle_classes(m).map_err(|e| e.to_string())?;
        ensure!(c1.coeffs == [0, 2 * m + 4, 0], "m={m}: c1 {:?}", c1.coeffs);
        ensure!(c2.coeffs == [0, 0, m * m + 8 * m + 16], "m={m}: c2 {:?}", c2.coeffs);
    }
    Ok("m = 1..10 exact".into())
}

fn alexandroff() -> Outcome {
    let mut mins = Vec::new();
    for r in 1..=3 {
        let rep = alexandroff_check(r, 10_000, 9000 + r as u64);
        ensure!(rep.min >= -1e-12, "r={r}: min {:e}", rep.min);
        mins.push(format!("r={r} min {:e}", rep.min));
    }
    Ok(format!("10⁴ tuples per rank, {}", mins.join(", ")))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_positools"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let (tensor, _) = run_cli(&["tensor", "--n", "3", "--r", "3", "--family", "dual-nakano", "--terms", "5", "--seed", "11"], d)?;
    std::fs::write(d.join("t.json"), &tensor).map_err(|e| e.to_string())?;
    std::fs::write(d.join("cfg.json"), r#"{"r":3,"samples":60,"kinds":["cp","cocp","choi3","reduction","k-positive"],"seed":3}"#)
        .map_err(|e| e.to_string())?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["tensor", "--n", "3", "--r", "2", "--seed", "5"],
        vec!["classify", "t.json", "--seed", "7"],
        vec!["schur", "t.json", "--partition", "2,1", "--test-positivity"],
        vec!["verify", "--suite", "tilde-c", "--seed", "3"],
        vec!["verify", "--suite", "plane", "--seed", "3"],
        vec!["verify", "--suite", "segre", "--trials", "2", "--seed", "3"],
        vec!["verify", "--suite", "jacobi-trudi", "--trials", "2", "--seed", "3"],
        vec!["verify", "--suite", "nakano-push", "--trials", "4", "--seed", "3"],
        vec!["zoo", "conjugation", "--rows", "3", "--cols", "2", "--seed", "9"],
        vec!["zoo", "choi3", "--seed", "2"],
    ];
    for args in &commands {
        let (a, code_a) = run_cli(args, d)?;
        let (b, code_b) = run_cli(args, d)?;
        ensure!(code_a == 0 && code_b == 0, "{args:?}: exit codes {code_a}, {code_b}");
        ensure!(!a.is_empty() && a == b, "{args:?}: outputs differ");
    }
    let mut logs = Vec::new();
    for log in ["a.jsonl", "b.jsonl"] {
        let (out, code) = run_cli(&["search", "--config", "cfg.json", "--log", log], d)?;
        ensure!(code == 0, "search exit code {code}");
        logs.push((out, std::fs::read(d.join(log)).map_err(|e| e.to_string())?));
    }
    ensure!(logs[0] == logs[1], "search outputs or logs differ");
    Ok(format!("{} commands plus search run twice, byte-identical", commands.len() + 1))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("Schur-form positivity", schur_positivity),
        ("top-Chern plane identity", plane_identity),
        ("tilde-c identity", tilde_identity),
        ("Choi bridge", choi_bridge),
        ("double mixed discriminant anchors", discriminant_anchors),
        ("open-problem harness", open_problem_harness),
        ("Segre pushforward", segre_pushforward),
        ("local Jacobi-Trudi", jacobi_trudi),
        ("Nakano pushforward operator", nakano_pushforward),
        ("Fulton bundle classes", fulton_classes),
        ("Alexandroff inequality", alexandroff),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
