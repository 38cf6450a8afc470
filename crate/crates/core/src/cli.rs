//! Command-line front end. Every command writes its artifact to `--out` (or standard output)
//! and returns one of the stable exit codes: 0 success, 2 non-generic input, 3 resource cap,
//! 64 usage error, 1 any other failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::coxideal::{self, CoxGroup};
use crate::degenerate::DegenerateSpec;
use crate::golden;
use crate::matroid::{self, EnumOptions, FanRecord, RaySource};
use crate::modification::{build_del_pezzo_seeded, example_m05, DelPezzoSurface, Valuation, DEFAULT_SEED};
use crate::num::{fmt_q, parse_pair, parse_q, Q};
use crate::polyhedra::{PolyComplex, SurfaceStats};
use crate::rootsys::{a2_cubed_systems, RootSystem, RootVector};
use crate::trees::classify_arrangement;
use crate::tropcurves::{classify_type, conic_criterion, TropPoint2};
use crate::{Error, Result};

/// Environment variable naming a directory for cached fan tables.
pub const CACHE_ENV: &str = "TROPDP_CACHE";

#[derive(Parser, Debug)]
#[command(name = "tropdp", version, about = "Tropical del Pezzo surfaces of degree 5, 4 and 3")]
pub struct Cli {
    /// Worker threads; results never depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Parser, Debug, Clone)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub degree: u8,
    /// Tropical coordinates of P5, as "x,y" with integer or p/q entries.
    #[arg(long)]
    pub p5: Option<String>,
    #[arg(long)]
    pub p6: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatroidName {
    K4,
    E6,
    E7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Newick,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    #[value(name = "0")]
    Zero,
    A,
    B,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a del Pezzo surface and write it as JSON.
    Build {
        #[command(flatten)]
        s: SurfaceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a cubic surface from P5, P6 by the tropical triangle and the built trees.
    Classify {
        #[arg(long)]
        p5: String,
        #[arg(long)]
        p6: String,
        /// Also build the surface and classify its 27 trees.
        #[arg(long)]
        trees: bool,
    },
    /// Cell statistics of a surface file or of a freshly built surface.
    Stats {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        degree: Option<u8>,
        #[arg(long)]
        p5: Option<String>,
        #[arg(long)]
        p6: Option<String>,
    },
    /// Boundary trees of a built surface.
    Trees {
        #[command(flatten)]
        s: SurfaceArgs,
        #[arg(long, value_enum, default_value = "newick")]
        format: TreeFormat,
    },
    /// Enumerate the Bergman fan of a root matroid.
    Bergman {
        #[arg(long, value_enum)]
        matroid: MatroidName,
        /// Rays are connected flats (otherwise all proper flats).
        #[arg(long)]
        coarse: bool,
        /// Permit enumerations known to exceed desk resources.
        #[arg(long)]
        allow_huge: bool,
        #[arg(long, default_value_t = 5_000_000)]
        cone_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cox relations of degree 5, 4 or 3.
    Cox {
        #[arg(long)]
        degree: u8,
        /// Run the named checks ("all").
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        emit: Option<String>,
    },
    /// Degenerate cubic surfaces of type 0, (a) and (b).
    Degenerate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value = "d1+d3+d5")]
        root: String,
        #[arg(long, default_value_t = 0)]
        system_index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The three-step modification with parameter valuation v (a rational or "inf").
    M05 {
        #[arg(long)]
        v: String,
    },
    /// The table of combinatorial types, or a comparison of a surface file against it.
    Golden {
        #[arg(long)]
        row: Option<String>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonGeneric(_) => 2,
        Error::Resource(_) => 3,
        Error::Parse(_) | Error::Domain(_) => 64,
        _ => 1,
    }
}

fn pair(s: &Option<String>) -> Result<Option<(Q, Q)>> {
    s.as_deref().map(parse_pair).transpose()
}

fn stats_json(s: &SurfaceStats) -> Value {
    json!({
        "vertices": s.vertices,
        "bounded_edges": s.bounded_edges,
        "rays": s.rays,
        "triangles": s.triangles,
        "squares": s.squares,
        "other_bounded_2cells": s.other_bounded_2cells,
        "flaps": s.flaps,
        "cones": s.cones,
    })
}

/// Canonical JSON of a surface: complex, labeled rays, trees and statistics.
pub fn surface_json(dp: &DelPezzoSurface, kind: &str) -> Value {
    let pt = |p: &Option<(Q, Q)>| p.as_ref().map(|(x, y)| json!([fmt_q(x), fmt_q(y)]));
    let rays: BTreeMap<String, Value> = dp.ray_labels.iter().map(|(l, v)| (l.to_string(), json!(v))).collect();
    let trees: BTreeMap<String, Value> = dp.trees.iter().map(|(l, t)| (l.to_string(), t.to_json())).collect();
    json!({
        "kind": kind,
        "degree": dp.degree,
        "p5": pt(&dp.p5),
        "p6": pt(&dp.p6),
        "stats": stats_json(&dp.stats),
        "complex": dp.complex.to_json(),
        "rays": rays,
        "trees": trees,
    })
}

fn build(s: &SurfaceArgs) -> Result<DelPezzoSurface> {
    build_del_pezzo_seeded(s.degree, pair(&s.p5)?, pair(&s.p6)?, s.seed)
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<String> {
    match out {
        Some(p) => {
            std::fs::write(p, format!("{text}\n"))?;
            Ok(format!("wrote {}", p.display()))
        }
        None => Ok(text),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn read_json(p: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(p)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

fn complex_stats(v: &Value) -> Result<(SurfaceStats, bool)> {
    let c = PolyComplex::from_json(v.get("complex").unwrap_or(v))?;
    Ok((c.stats()?, c.check_balanced().0))
}

fn bergman(m: MatroidName, coarse: bool, allow_huge: bool, cone_cap: usize) -> Result<FanRecord> {
    if m == MatroidName::E7 && !allow_huge {
        return Err(Error::Resource("the Bergman fan of E7 is beyond desk resources; pass --allow-huge to try".into()));
    }
    let name = format!("bergman-{:?}-{}.json", m, if coarse { "coarse" } else { "fine" }).to_lowercase();
    let cache = std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join(name));
    if let Some(p) = &cache {
        if let Ok(text) = std::fs::read_to_string(p) {
            return FanRecord::from_json(&text);
        }
    }
    let (mat, sym) = match m {
        MatroidName::K4 => matroid::k4(),
        MatroidName::E6 => matroid::root_matroid(&RootSystem::e6()),
        MatroidName::E7 => matroid::root_matroid(&RootSystem::e7()),
    };
    let opts = EnumOptions { cone_cap, ..Default::default() };
    let source = if coarse { RaySource::ConnectedFlats } else { RaySource::AllFlats };
    let fan = matroid::enumerate_bergman(&mat, mat.flat_rays(source), &sym, opts)?;
    if !fan.complete {
        return Err(Error::Resource(format!("cone cap {cone_cap} reached; partial f-vector {:?}", fan.f_vector)));
    }
    if let Some(p) = &cache {
        std::fs::write(p, fan.to_json()?)?;
    }
    Ok(fan)
}

fn cox(degree: u8, check: &Option<String>, emit_json: bool) -> Result<String> {
    let groups: Vec<CoxGroup> = match degree {
        5 => {
            let ts = coxideal::plucker_d5();
            let d = ts[0].degree()?;
            vec![CoxGroup { name: "Plucker".into(), degree: d, trinomials: ts }]
        }
        4 => coxideal::universal_cox_d4()?,
        3 => coxideal::universal_cox_d3()?.into_iter().map(|(_, g)| g).collect(),
        d => return Err(Error::Domain(format!("degree {d} is not 3, 4 or 5"))),
    };
    if let Some(c) = check {
        if c != "all" {
            return Err(Error::Domain(format!("unknown check {c}; use \"all\"")));
        }
        let n: usize = groups.iter().map(|g| g.trinomials.len()).sum();
        let mut failed = Vec::new();
        for g in &groups {
            for t in &g.trinomials {
                if !t.is_homogeneous()? || t.degree()? != g.degree {
                    failed.push(format!("{t} is not homogeneous of the group degree"));
                }
            }
        }
        if degree == 3 {
            let named = coxideal::universal_cox_d3()?;
            if groups.len() != 27 || groups.iter().any(|g| g.trinomials.len() != 10) {
                failed.push("group sizes are not 27 x 10".into());
            }
            let seed = coxideal::cox_d3_seed()?;
            if !named.iter().any(|(_, g)| g.canonical_set() == seed.canonical_set()) {
                failed.push("the printed G1 group is missing".into());
            }
            for (l, _) in &named {
                if !coxideal::involution_fixes_group(*l, &named)? {
                    failed.push(format!("involution of {l} moves its group"));
                }
            }
            if !coxideal::schlafli_rays_pass(&named)? {
                failed.push("a Schlafli-cone ray fails a trinomial".into());
            }
        }
        let shape = groups.iter().map(|g| g.trinomials.len().to_string()).collect::<Vec<_>>();
        let sizes = if shape.iter().all(|x| *x == shape[0]) {
            format!("{}x{}", groups.len(), shape[0])
        } else {
            shape.join("+")
        };
        if failed.is_empty() {
            return Ok(format!("{n} trinomials, {sizes}, all checks pass"));
        }
        return Err(Error::Consistency(format!("{n} trinomials, {sizes}; failed: {}", failed.join("; "))));
    }
    if emit_json {
        return Ok(pretty(&serde_json::to_value(&groups)?));
    }
    let mut lines = Vec::new();
    for g in &groups {
        lines.push(format!("[{}] degree {:?}", g.name, g.degree));
        lines.extend(g.trinomials.iter().map(|t| format!("  {t}")));
    }
    Ok(lines.join("\n"))
}

fn m05(v: &str) -> Result<String> {
    let val = if v == "inf" || v == "infinity" { Valuation::Infinite } else { Valuation::Finite(parse_q(v)?) };
    let s = example_m05(&val)?;
    let complex = s.to_complex(1);
    let edges: Vec<String> = s.bounded_edges().iter().map(|(_, _, l)| fmt_q(l)).collect();
    let link = if s.is_fan() {
        let g = complex.link_at_vertex(s.used_vertices()[0])?;
        Some(json!({"nodes": g.n(), "petersen": g.is_isomorphic(&crate::graph::petersen())}))
    } else {
        None
    };
    Ok(pretty(&json!({
        "v": v,
        "is_fan": s.is_fan(),
        "bounded_edge_lengths": edges,
        "stats": stats_json(&complex.stats()?),
        "apex_link": link,
        "complex": complex.to_json(),
    })))
}

fn golden_cmd(row: &Option<String>, input: &Option<PathBuf>) -> Result<String> {
    let Some(p) = input else {
        let rows = match row {
            Some(r) => vec![golden::row(r)?],
            None => golden::table1(),
        };
        return Ok(pretty(&serde_json::to_value(rows)?));
    };
    let (stats, _) = complex_stats(&read_json(p)?)?;
    if let Some(r) = row {
        let diff = golden::golden_compare(&stats, &golden::row(r)?);
        if diff.is_empty() {
            return Ok(format!("{r}: match"));
        }
        let parts: Vec<String> = diff.iter().map(|(f, a, b)| format!("{f} {a} != {b}")).collect();
        return Err(Error::Consistency(format!("{r}: {}", parts.join(", "))));
    }
    let m = golden::matching_rows(&stats);
    if m.is_empty() {
        return Err(Error::Consistency(format!("{stats} matches no row")));
    }
    Ok(format!("matches {}", m.join(", ")))
}

/// Runs one parsed command and returns the text for standard output.
pub fn dispatch(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Build { s, out } => emit(pretty(&surface_json(&build(s)?, "del_pezzo")), out),
        Command::Classify { p5, p6, trees } => {
            let (a, b) = (parse_pair(p5)?, parse_pair(p6)?);
            let (pa, pb) = (TropPoint2::affine(a.0.clone(), a.1.clone()), TropPoint2::affine(b.0.clone(), b.1.clone()));
            let (ty, cell) = classify_type(&pa, &pb)?;
            let mut v = json!({
                "type": ty.to_string(),
                "triangle_shape": serde_json::to_value(&cell.shape)?,
                "conic_criterion": conic_criterion(&pa, &pb)?,
            });
            if *trees {
                let dp = build_del_pezzo_seeded(3, Some(a), Some(b), DEFAULT_SEED)?;
                let ts: Vec<_> = dp.trees.values().cloned().collect();
                v["arrangement"] = json!(classify_arrangement(&ts).to_string());
                v["matching_rows"] = json!(golden::matching_rows(&dp.stats));
            }
            Ok(pretty(&v))
        }
        Command::Stats { input, degree, p5, p6 } => {
            let (stats, balanced) = match input {
                Some(p) => complex_stats(&read_json(p)?)?,
                None => {
                    let degree = degree.ok_or_else(|| Error::Domain("stats needs --in or --degree".into()))?;
                    let dp = build(&SurfaceArgs { degree, p5: p5.clone(), p6: p6.clone(), seed: DEFAULT_SEED })?;
                    let b = dp.complex.check_balanced().0;
                    (dp.stats, b)
                }
            };
            Ok(pretty(&json!({"stats": stats_json(&stats), "balanced": balanced, "rows": golden::matching_rows(&stats)})))
        }
        Command::Trees { s, format } => {
            let dp = build(s)?;
            Ok(match format {
                TreeFormat::Newick => dp.trees.iter().map(|(l, t)| format!("{l}\t{}", t.to_newick())).collect::<Vec<_>>().join("\n"),
                TreeFormat::Json => {
                    let m: BTreeMap<String, Value> = dp.trees.iter().map(|(l, t)| (l.to_string(), t.to_json())).collect();
                    pretty(&json!(m))
                }
                TreeFormat::Dot => dp.trees.iter().map(|(l, t)| t.to_dot(&l.to_string())).collect::<Vec<_>>().join("\n"),
            })
        }
        Command::Bergman { matroid, coarse, allow_huge, cone_cap, out } => {
            let fan = bergman(*matroid, *coarse, *allow_huge, *cone_cap)?;
            match out {
                Some(p) => {
                    std::fs::write(p, fan.to_json()?)?;
                    Ok(format!("f-vector {:?} orbits {:?}", fan.f_vector, fan.orbit_f_vector))
                }
                None => fan.to_json(),
            }
        }
        Command::Cox { degree, check, emit } => cox(*degree, check, emit.as_deref() == Some("json")),
        Command::Degenerate { kind, root, system_index, out } => {
            let spec = match kind {
                Kind::Zero => DegenerateSpec::Zero,
                Kind::A => DegenerateSpec::A(RootVector::parse(root, 6)?),
                Kind::B => {
                    let all = a2_cubed_systems();
                    let s = all
                        .get(*system_index)
                        .ok_or_else(|| Error::Domain(format!("system index {system_index} is not below {}", all.len())))?;
                    DegenerateSpec::B(s.clone())
                }
            };
            let dp = spec.build()?;
            emit(pretty(&surface_json(&dp, &format!("degenerate_{}", spec.kind()))), out)
        }
        Command::M05 { v } => m05(v),
        Command::Golden { row, input } => golden_cmd(row, input),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code and the
/// text destined for standard output or standard error.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            return (code, e.to_string());
        }
    };
    match dispatch(&cli) {
        Ok(text) => (0, text),
        Err(e) => (exit_code(&e), e.to_string()),
    }
}

pub fn main() -> i32 {
    let (code, text) = run(std::env::args_os());
    if code == 0 {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut v = vec!["tropdp"];
        v.extend_from_slice(args);
        let (code, text) = run(v);
        assert_eq!(code, 0, "{text}");
        text
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["tropdp", "frobnicate"]).0, 64);
        assert_eq!(run(["tropdp", "bergman", "--matroid", "e7"]).0, 3);
        assert_eq!(run(["tropdp", "build", "--degree", "4", "--p5", "0,0"]).0, 2);
        assert_eq!(run(["tropdp", "degenerate", "--kind", "a", "--root", "d1+d2"]).0, 64);
        assert_eq!(run(["tropdp", "build", "--degree", "7"]).0, 64);
    }

    #[test]
    fn k4_fan_and_degree_five() {
        let fan = FanRecord::from_json(&run_ok(&["bergman", "--matroid", "k4", "--coarse"])).unwrap();
        assert_eq!(fan.f_vector, vec![1, 10, 15]);
        let v: Value = serde_json::from_str(&run_ok(&["build", "--degree", "5"])).unwrap();
        assert_eq!(v["stats"]["rays"], 10);
        assert_eq!(v["stats"]["cones"], 15);
    }

    #[test]
    fn cox_reports() {
        let d4 = run_ok(&["cox", "--degree", "4", "--check", "all"]);
        assert!(d4.starts_with("45 trinomials, ") && d4.ends_with("all checks pass"), "{d4}");
        assert_eq!(run_ok(&["cox", "--degree", "3", "--check", "all"]), "270 trinomials, 27x10, all checks pass");
    }

    #[test]
    fn golden_and_degenerate() {
        let dir = std::env::temp_dir().join(format!("tropdp-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("b.json");
        run_ok(&["degenerate", "--kind", "b", "--system-index", "3", "--out", f.to_str().unwrap()]);
        assert_eq!(run_ok(&["golden", "--row", "b", "--in", f.to_str().unwrap()]), "b: match");
        let (code, text) = run(["tropdp", "golden", "--row", "a", "--in", f.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(text.contains("vertices 12 != 8"));
        assert_eq!(run_ok(&["golden", "--in", f.to_str().unwrap()]), "matches b");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn m05_output() {
        let v: Value = serde_json::from_str(&run_ok(&["m05", "--v", "inf"])).unwrap();
        assert_eq!(v["is_fan"], true);
        assert_eq!(v["apex_link"]["petersen"], true);
        let v: Value = serde_json::from_str(&run_ok(&["m05", "--v", "1"])).unwrap();
        assert_eq!(v["is_fan"], false);
        assert_eq!(v["bounded_edge_lengths"], json!(["1"]));
    }
}
