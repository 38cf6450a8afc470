//! Acceptance checks, one line per criterion. Every numeric target is exact; the time limits
//! are printed next to the measured time and enforced.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tropdp::coxideal::{self, Dval, Var};
use tropdp::degenerate::{self, build_type_a, build_type_b, build_type_zero};
use tropdp::golden::{golden_compare, row};
use tropdp::graph::{k33, petersen};
use tropdp::matroid::{self, EnumOptions, RaySource};
use tropdp::modification::{build_del_pezzo, example_m05, sample_generic, DelPezzoSurface, Valuation};
use tropdp::num::q;
use tropdp::polyhedra::{classify_cell, unimodular_fan_map, CellTag, Fan2};
use tropdp::rootsys::{self, lines, lines_meet, neighbors, LineLabel, RootSystem, RootVector};
use tropdp::trees::{involution_check, relabel_d4, restriction_identity};
use tropdp::tropcurves::{classify_type, SurfaceType, TropPoint2};
use tropdp::cli;
use tropdp::num::Q;

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

const D4_SAMPLES: usize = 20;
const D3_SAMPLES: usize = 100;
const SAMPLE_RANGE: i64 = 20;

fn criterion_1() -> Outcome {
    let dp = ok(build_del_pezzo(5, None, None))?;
    let s = dp.stats.as_tuple();
    ensure!(s == (1, 0, 10, 0, 0, 0, 0, 15), "degree-5 stats {s:?}");
    let apex = *dp.complex.vertex_set().iter().next().unwrap();
    ensure!(ok(dp.complex.link_at_vertex(apex))?.is_isomorphic(&petersen()), "apex link is not Petersen");
    let surface = ok(Fan2::of_complex(&dp.complex))?;

    let (m, sym) = matroid::k4();
    let fan = ok(matroid::enumerate_bergman(&m, m.flat_rays(RaySource::ConnectedFlats), &sym, EnumOptions::default()))?;
    ensure!(fan.f_vector == vec![1, 10, 15], "K4 f-vector {:?}", fan.f_vector);
    // coordinates of R^6 / R(1,...,1)
    let project = |r: &Vec<i64>| -> Vec<i64> { (0..5).map(|i| r[i] - r[5]).collect() };
    let bergman = Fan2 {
        rays: fan.rays.iter().map(project).collect(),
        cones: fan.cones_of_dim(2).iter().map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect(),
    };
    ensure!(
        surface.rays[0].len() == 5,
        "degree-5 fan lives in dimension {}, not 5",
        surface.rays[0].len()
    );
    let mat = unimodular_fan_map(&surface, &bergman).ok_or("no unimodular map between the fans")?;
    Ok(format!("f-vector (10, 15), Petersen link, unimodular map {mat:?}"))
}

fn square_vertices(dp: &DelPezzoSurface) -> std::result::Result<BTreeSet<usize>, String> {
    let mut out = BTreeSet::new();
    for c in dp.complex.cells.iter().filter(|c| c.dim == 2) {
        if ok(classify_cell(c))? == CellTag::Square {
            out.extend(c.verts.iter().copied());
        }
    }
    Ok(out)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = Duration::ZERO;
    for k in 0..D4_SAMPLES {
        let (pts, _) = ok(sample_generic(4, SAMPLE_RANGE, &mut rng))?;
        let t0 = Instant::now();
        let dp = ok(build_del_pezzo(4, Some(pts[0].clone()), None))?;
        let dt = t0.elapsed();
        worst = worst.max(dt);
        let tag = format!("sample {k} P5={:?}", pts[0]);
        let s = dp.stats.as_tuple();
        ensure!(s == (12, 20, 48, 8, 1, 0, 32, 40), "{tag}: stats {s:?}");
        ensure!(dp.trees.len() == 16, "{tag}: {} trees", dp.trees.len());
        let g = &dp.trees[&LineLabel::G(0)];
        for (l, t) in &dp.trees {
            ensure!(t.leaves().len() == 5 && t.is_trivalent(), "{tag}: tree of {l} is not trivalent on 5 leaves");
            let r = ok(relabel_d4(g, *l))?;
            ensure!(r.same_metric_tree(t), "{tag}: relabeled G tree differs from the tree of {l}");
        }
        let s_verts = square_vertices(&dp)?;
        ensure!(s_verts.len() == 4, "{tag}: quadrilateral has {} vertices", s_verts.len());
        for v in dp.complex.vertex_set() {
            let link = ok(dp.complex.link_at_vertex(v))?;
            if s_verts.contains(&v) {
                ensure!(link.is_isomorphic(&petersen()), "{tag}: S vertex {v} link is not Petersen");
            } else {
                ensure!(link.is_isomorphic(&k33()), "{tag}: T vertex {v} link is not K3,3");
            }
        }
        ensure!(dt < Duration::from_secs(10), "{tag}: {dt:?} exceeds 10 s");
    }
    Ok(format!("{D4_SAMPLES} samples, worst build {worst:.2?} (limit 10 s)"))
}

/// Tree laws of one cubic surface: involution, restriction identity on all disjoint pairs,
/// and leaves equal to the Schläfli neighbourhood.
fn tree_laws(dp: &DelPezzoSurface) -> std::result::Result<usize, String> {
    let ls = ok(lines(3))?;
    ensure!(dp.trees.len() == 27, "{} trees", dp.trees.len());
    let mut pairs = 0;
    for &l in &ls {
        let t = &dp.trees[&l];
        let leaves: BTreeSet<LineLabel> = t.leaves().into_iter().collect();
        let nb: BTreeSet<LineLabel> = ok(neighbors(l, 3))?.into_iter().collect();
        ensure!(leaves == nb, "leaves of {l} are not its neighbours");
        ensure!(ok(involution_check(t, l))?, "involution check fails for {l}");
        for &l2 in &ls {
            if l2 != l && !lines_meet(l, l2, 3) {
                ensure!(ok(restriction_identity(t, l, &dp.trees[&l2], l2))?, "restriction fails for ({l}, {l2})");
                pairs += 1;
            }
        }
    }
    Ok(pairs)
}

struct CubicRun {
    laws: std::result::Result<usize, String>,
}

fn criterion_3(runs: &mut Vec<CubicRun>) -> Outcome {
    let r78 = ok(row("aa2a3b"))?;
    let r77 = ok(row("aa2a3a4"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = [0usize; 2];
    let mut worst = Duration::ZERO;
    for k in 0..D3_SAMPLES {
        let (pts, _) = ok(sample_generic(3, SAMPLE_RANGE, &mut rng))?;
        let tag = format!("sample {k} P5={:?} P6={:?}", pts[0], pts[1]);
        let t0 = Instant::now();
        let dp = ok(build_del_pezzo(3, Some(pts[0].clone()), Some(pts[1].clone())))?;
        let dt = t0.elapsed();
        worst = worst.max(dt);
        ensure!(dt < Duration::from_secs(120), "{tag}: {dt:?} exceeds 2 min");
        let four = dp.trees.values().filter(|t| t.max_internal_degree() == 4).count();
        let high = dp.trees.values().filter(|t| t.max_internal_degree() > 4).count();
        let class = match (golden_compare(&dp.stats, &r78).is_empty(), golden_compare(&dp.stats, &r77).is_empty()) {
            (true, false) => 0,
            (false, true) => 1,
            _ => return Err(format!("{tag}: stats {} match neither generic row", dp.stats)),
        };
        ensure!(high == 0 && four == [0, 3][class], "{tag}: {four} trees with a 4-valent vertex in class {class}");
        let pt = |p: &(Q, Q)| TropPoint2::affine(p.0.clone(), p.1.clone());
        let (ty, _) = ok(classify_type(&pt(&pts[0]), &pt(&pts[1])))?;
        let expect = if class == 1 { SurfaceType::TypeParallelogram } else { SurfaceType::TypeOther };
        ensure!(ty == expect, "{tag}: parallelogram verdict {ty} in class {class}");
        counts[class] += 1;
        runs.push(CubicRun { laws: tree_laws(&dp) });
    }
    Ok(format!(
        "{D3_SAMPLES} samples: {} of type (aa2a3b), {} of type (aa2a3a4), verdict consistent; worst build {worst:.2?} (limit 2 min)",
        counts[0], counts[1]
    ))
}

fn criterion_4(runs: &[CubicRun]) -> Outcome {
    ensure!(!runs.is_empty(), "no cubic surfaces were built");
    let mut pairs = 0;
    for (k, r) in runs.iter().enumerate() {
        pairs += r.laws.clone().map_err(|e| format!("surface {k}: {e}"))?;
    }
    Ok(format!("{} surfaces, {pairs} restriction identities, all involutions and neighbourhoods (checked on the criterion 3 builds)", runs.len()))
}

fn criterion_5() -> Outcome {
    let d4 = ok(coxideal::universal_cox_d4())?;
    let n4: usize = d4.iter().map(|g| g.trinomials.len()).sum();
    ensure!(n4 == 45, "{n4} degree-4 trinomials");
    for g in &d4 {
        for t in &g.trinomials {
            ensure!(ok(t.is_homogeneous())? && ok(t.degree())? == g.degree, "{t} breaks the grading of {}", g.name);
            let again = ok(coxideal::parse_trinomial(&t.to_string(), 4))?;
            ensure!(&again == t, "{t} does not round-trip");
        }
    }
    let d3 = ok(coxideal::universal_cox_d3())?;
    ensure!(d3.len() == 27 && d3.iter().all(|(_, g)| g.trinomials.len() == 10), "degree-3 groups are not 27 x 10");
    let all: BTreeSet<_> = d3.iter().flat_map(|(_, g)| g.trinomials.iter().map(|t| t.canonical())).collect();
    ensure!(all.len() == 270, "{} distinct degree-3 trinomials", all.len());
    for t in &all {
        for s in &RootSystem::e6().simple {
            ensure!(all.contains(&ok(coxideal::reflect_trinomial(t, s))?), "not closed under W(E6) at {t}");
        }
    }
    let seed = ok(coxideal::cox_d3_seed())?;
    let g1 = &d3.iter().find(|(l, _)| *l == LineLabel::G(1)).ok_or("no G1 group")?.1;
    ensure!(g1.canonical_set() == seed.canonical_set(), "G1 group differs from the printed one");
    ensure!(ok(coxideal::involution_fixes_group(LineLabel::G(1), &d3))?, "G1 involution moves its group");
    for l in ok(lines(3))? {
        let w = BTreeMap::from([(Var::L(l), q(1))]);
        for (_, g) in &d3 {
            for t in &g.trinomials {
                ensure!(ok(coxideal::trop_eval(t, &w, &Dval::Trivial))?, "ray e_{l} fails on {t}");
            }
        }
    }
    Ok("45 homogeneous degree-4 trinomials; 270 = 27 x 10 degree-3, W(E6)-closed, G1 matches, 27 rays pass".into())
}

fn criterion_6() -> Outcome {
    let zero = ok(example_m05(&Valuation::Finite(q(0))))?;
    ensure!(zero.is_fan(), "v = 0 is not a fan");
    let inf = ok(example_m05(&Valuation::Infinite))?;
    ensure!(inf.is_fan(), "v = inf is not a fan");
    let c = inf.to_complex(1);
    let apex = *c.vertex_set().iter().next().unwrap();
    ensure!(ok(c.link_at_vertex(apex))?.is_isomorphic(&petersen()), "v = inf link is not Petersen");
    let one = ok(example_m05(&Valuation::Finite(q(1))))?;
    ensure!(!one.is_fan(), "v = 1 is a fan");
    let edges = one.bounded_edges();
    ensure!(edges.len() == 1 && edges[0].2 > Q::zero(), "v = 1 bounded edges {edges:?}");
    Ok(format!("fans at 0 and inf (Petersen), one bounded edge of length {} at 1", edges[0].2))
}

fn criterion_7() -> Outcome {
    let compare = |dp: &DelPezzoSurface, name: &str| -> std::result::Result<(), String> {
        let diffs = golden_compare(&dp.stats, &ok(row(name))?);
        ensure!(diffs.is_empty(), "row {name}: differences {diffs:?}");
        Ok(())
    };
    let t0 = Instant::now();
    compare(&ok(build_type_zero())?, "0")?;
    let root = ok(RootVector::parse("d1+d3+d5", 6))?;
    compare(&ok(build_type_a(&root))?, "a")?;
    let systems = rootsys::a2_cubed_systems();
    for s in &systems {
        let dp = ok(build_type_b(s))?;
        compare(&dp, "b")?;
        let shapes: BTreeSet<String> = dp.trees.values().map(|t| t.shape()).collect();
        ensure!(shapes.len() == 1, "type (b) trees fall into {} shapes", shapes.len());
        for (l, t) in &dp.trees {
            let mut p = degenerate::leaf_partition(t);
            p.sort_unstable_by(|a, b| b.cmp(a));
            ensure!(p == vec![4, 3, 3], "tree of {l} has leaf partition {p:?}");
        }
    }
    let dt = t0.elapsed();
    ensure!(dt < Duration::from_secs(5 * (2 + systems.len() as u64)), "took {dt:?}");
    Ok(format!("rows 0, a, b; {} type (b) systems with 4+3+3 trees; {dt:.2?}", systems.len()))
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let (mut m, _) = matroid::k4();
    let circuits: Vec<Vec<usize>> = m.compute_circuits(None).to_vec();
    ensure!(circuits.len() == 7, "K4 has {} circuits", circuits.len());
    // minimal dependent sets by brute force over all subsets
    let dependent = |s: &[usize]| m.rank_of(s) < s.len();
    let mut brute: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..64 {
        let s: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
        let minimal = s.iter().all(|&x| {
            let t: Vec<usize> = s.iter().copied().filter(|&y| y != x).collect();
            !dependent(&t)
        });
        if dependent(&s) && minimal {
            brute.push(s);
        }
    }
    let got: BTreeSet<Vec<usize>> = circuits.iter().cloned().collect();
    ensure!(got == brute.iter().cloned().collect(), "circuit list differs from brute force");
    for signs in 0u32..64 {
        let w: Vec<Q> = (0..6).map(|i| if signs >> i & 1 == 1 { q(1) } else { q(-1) }).collect();
        let expect = brute.iter().all(|c| {
            let min = c.iter().map(|&i| &w[i]).min().unwrap();
            c.iter().filter(|&&i| &w[i] == min).count() >= 2
        });
        ensure!(ok(m.in_bergman(&w))? == expect, "in_bergman wrong at sign pattern {signs:06b}");
        ensure!(ok(m.contains(&w))? == expect, "flat membership wrong at sign pattern {signs:06b}");
    }
    let (e7, _) = matroid::root_matroid(&RootSystem::e7());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sizes = BTreeSet::new();
    for _ in 0..200 {
        let c = e7.random_circuit(&mut rng).ok_or("no random E7 circuit")?;
        ensure!(e7.is_circuit(&c), "{c:?} is not a circuit");
        sizes.insert(c.len());
    }
    for k in 3..=8 {
        let c = e7.random_circuit_of_size(k, 2000, &mut rng).ok_or(format!("no E7 circuit of size {k} found"))?;
        ensure!(c.len() == k && e7.is_circuit(&c), "bad circuit of size {k}");
        sizes.insert(k);
    }
    for k in [2, 9] {
        ensure!(e7.random_circuit_of_size(k, 500, &mut rng).is_none(), "found an E7 circuit of size {k}");
    }
    ensure!(sizes.iter().all(|k| (3..=8).contains(k)), "E7 circuit sizes {sizes:?}");
    let dt = t0.elapsed();
    ensure!(dt < Duration::from_secs(60), "took {dt:?}");
    Ok(format!("K4: 7 circuits, 64 sign patterns agree; E7 sampled sizes {sizes:?}; {dt:.2?}"))
}

fn criterion_9() -> Outcome {
    let t0 = Instant::now();
    let (m, sym) = matroid::root_matroid(&RootSystem::e6());
    let fan = ok(matroid::enumerate_bergman(&m, m.flat_rays(RaySource::ConnectedFlats), &sym, EnumOptions::default()))?;
    ensure!(fan.complete, "enumeration stopped at the cone cap");
    let target = vec![1, 750, 17679, 105930, 219240, 142560];
    ensure!(fan.f_vector == target, "f-vector {:?}", fan.f_vector);
    let dt = t0.elapsed();
    ensure!(dt < Duration::from_secs(4 * 3600), "took {dt:?}");
    Ok(format!("f-vector {:?}, orbits {:?}; {dt:.2?}", fan.f_vector, fan.orbit_f_vector))
}

fn criterion_10() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["build", "--degree", "5"],
        vec!["build", "--degree", "4", "--p5", "3,1"],
        vec!["build", "--degree", "3", "--p5", "18,-42", "--p6", "72,96"],
        vec!["classify", "--p5", "18,-42", "--p6", "72,96", "--trees"],
        vec!["stats", "--degree", "4", "--p5", "3,1"],
        vec!["bergman", "--matroid", "k4", "--coarse"],
        vec!["bergman", "--matroid", "k4"],
        vec!["cox", "--degree", "3", "--emit", "json"],
        vec!["cox", "--degree", "4", "--check", "all"],
        vec!["degenerate", "--kind", "0"],
        vec!["degenerate", "--kind", "a"],
        vec!["degenerate", "--kind", "b", "--system-index", "7"],
        vec!["m05", "--v", "1"],
        vec!["m05", "--v", "inf"],
        vec!["golden"],
        vec!["golden", "--row", "b"],
    ];
    for c in &commands {
        let mut outs = Vec::new();
        for threads in ["1", "4", "1"] {
            let mut args = vec!["tropdp", "--threads", threads];
            args.extend(c.iter().copied());
            let (code, text) = cli::run(args);
            ensure!(code == 0, "`{}` exited {code}: {text}", c.join(" "));
            outs.push(text);
        }
        ensure!(outs.windows(2).all(|w| w[0] == w[1]), "`{}` output differs between runs", c.join(" "));
    }
    Ok(format!("{} commands byte-identical over 3 runs with 1 and 4 threads", commands.len()))
}

fn main() {
    let mut runs = Vec::new();
    let mut failed = 0;
    let mut record = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let dt = t0.elapsed();
        match r {
            Ok(d) => println!("criterion {n:>2}: PASS ({dt:.2?}) {d}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL ({dt:.2?}) {e}");
            }
        }
    };
    record(1, &mut criterion_1);
    record(2, &mut criterion_2);
    record(3, &mut || criterion_3(&mut runs));
    record(4, &mut || criterion_4(&runs));
    record(5, &mut criterion_5);
    record(6, &mut criterion_6);
    record(7, &mut criterion_7);
    record(8, &mut criterion_8);
    record(9, &mut criterion_9);
    record(10, &mut criterion_10);
    println!("acceptance: {} of 10 criteria pass", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
