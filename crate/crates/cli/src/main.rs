//! `dianalytic`: validate, canonicalize, classify and render maps declared in `.kmap` files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dianalytic::Complex64;
use serde_json::{json, Value as Json};

use dianalytic::dsl::{self, ErrorKind, Job, MapDecl, Spec};
use dianalytic::dynamics::{
    basin_field, julia_boundary, BasinClass, DEFAULT_EPS, DEFAULT_MAX_ITER,
};
use dianalytic::maps::{
    canonicalize, is_h_invariant, pair_zeros, validate_form1, CanonicalBranch, DianalyticMap,
    MapError, MapForm,
};
use dianalytic::render::{
    overlay_net, render_basin, write_ppm, Image, Palette, NEUTRAL_BACKGROUND,
};
use dianalytic::roots::DEFAULT_ROOT_TOL;
use dianalytic::rotation::{
    classify_rotation, fixed_points, orbit, period_on_p2, period_on_sphere, rotation_descriptor,
    steiner_net, Rationality, RotationError, DEFAULT_Q_MAX, DEFAULT_RATIONAL_TOL,
};
use dianalytic::{chordal_distance, ExtComplex};

/// Samples used by `validate` for the h-invariance test.
const INVARIANCE_SAMPLES: usize = 1000;
const INVARIANCE_TOL: f64 = 1e-9;
const PAIRING_TOL: f64 = 1e-9;

/// Start point for the period measurements of `classify`.
const CLASSIFY_SAMPLE: Complex64 = Complex64::new(0.5, 0.25);

#[derive(Parser, Debug)]
#[command(
    name = "dianalytic",
    version,
    about = "Dianalytic self-maps of the real projective plane"
)]
struct Cli {
    /// Emit one JSON object instead of the text report.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every declared map: degree, h-invariance, zero pairing.
    Validate { spec: PathBuf },
    /// Rewrite a form1 map as a canonical zero product.
    Canonicalize {
        spec: PathBuf,
        #[arg(long)]
        map: String,
    },
    /// Fixed points, axis, angle, rationality and periods of a moebius map.
    Classify {
        spec: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = DEFAULT_Q_MAX)]
        q_max: u64,
        #[arg(long, default_value_t = DEFAULT_RATIONAL_TOL)]
        tol: f64,
    },
    /// Basin picture and Julia boundary statistics of a julia job.
    Julia {
        spec: PathBuf,
        #[arg(long)]
        job: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        max_iter: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steiner net of a moebius map over a neutral background.
    Steiner {
        spec: PathBuf,
        #[arg(long)]
        job: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orbit records, one JSON object per line.
    Orbit {
        spec: PathBuf,
        #[arg(long)]
        job: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quick built-in consistency checks.
    Selftest,
}

/// A failed command and its exit status.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Parse(String),
    Io(String),
    NonConvergence(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Io(_) => 3,
            Failure::NonConvergence(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m)
            | Failure::Parse(m)
            | Failure::Io(m)
            | Failure::NonConvergence(m) => m,
        }
    }
}

/// Text and JSON renderings of one command's result plus its exit status.
struct Report {
    text: String,
    json: Json,
    code: u8,
}

impl Report {
    fn ok(text: String, json: Json) -> Self {
        Report {
            text,
            json,
            code: 0,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { spec } => cmd_validate(&spec),
        Command::Canonicalize { spec, map } => cmd_canonicalize(&spec, &map),
        Command::Classify {
            spec,
            map,
            q_max,
            tol,
        } => cmd_classify(&spec, &map, q_max, tol),
        Command::Julia {
            spec,
            job,
            eps,
            max_iter,
            out,
        } => cmd_julia(&spec, &job, eps, max_iter, out),
        Command::Steiner { spec, job, out } => cmd_steiner(&spec, &job, out),
        Command::Orbit { spec, job, out } => cmd_orbit(&spec, &job, out),
        Command::Selftest => Ok(cmd_selftest()),
    };
    match result {
        Ok(report) => {
            if cli.json {
                println!("{}", report.json);
            } else {
                print!("{}", report.text);
            }
            ExitCode::from(report.code)
        }
        Err(failure) => {
            if cli.json {
                println!(
                    "{}",
                    json!({ "error": failure.message(), "exit_code": failure.code() })
                );
            }
            eprintln!("{}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn load(path: &Path) -> Result<Spec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    dsl::parse(&text).map_err(|e| {
        let msg = e
            .to_string()
            .lines()
            .map(|l| format!("{}:{l}", path.display()))
            .collect::<Vec<_>>()
            .join("\n");
        match e.kind {
            ErrorKind::Lexical | ErrorKind::Syntax => Failure::Parse(msg),
            ErrorKind::Semantic => Failure::Validation(msg),
        }
    })
}

fn build_map<'a>(spec: &'a Spec, name: &str) -> Result<(&'a MapDecl, DianalyticMap), Failure> {
    let decl = spec
        .map(name)
        .ok_or_else(|| Failure::Validation(format!("no map named '{name}'")))?;
    // the file already passed semantic validation
    let map = decl
        .build()
        .map_err(|d| Failure::Validation(d[0].to_string()))?;
    Ok((decl, map))
}

fn build_job(spec: &Spec, name: &str) -> Result<Job, Failure> {
    let decl = spec
        .job(name)
        .ok_or_else(|| Failure::Validation(format!("no job named '{name}'")))?;
    decl.build()
        .map_err(|d| Failure::Validation(d[0].to_string()))
}

fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", z.re, z.im.abs())
}

fn fmt_point(z: ExtComplex) -> String {
    match z {
        ExtComplex::Finite(z) => fmt_complex(z),
        ExtComplex::Infinity => "inf".into(),
    }
}

fn json_point(z: ExtComplex) -> Json {
    match z {
        ExtComplex::Finite(z) => json!([z.re, z.im]),
        ExtComplex::Infinity => json!("inf"),
    }
}

fn write_image(img: &Image, path: &Path) -> Result<(), Failure> {
    write_ppm(img, path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- validate

fn cmd_validate(path: &Path) -> Result<Report, Failure> {
    let spec = load(path)?;
    let mut text = String::new();
    let mut entries = Vec::new();
    let mut all_pass = true;
    for decl in &spec.maps {
        let (_, map) = build_map(&spec, &decl.name)?;
        let degree = map.degree().ok();
        let inv = is_h_invariant(&map, INVARIANCE_SAMPLES, INVARIANCE_TOL);
        let (pairing_ok, pairing) = match &map.form {
            MapForm::Product(b) => match pair_zeros(b.zeros(), PAIRING_TOL) {
                Ok(p) => (
                    true,
                    format!(
                        "paired ({} pairs, {} at origin)",
                        p.pairs.len(),
                        p.zeros_at_origin
                    ),
                ),
                Err(e) => (false, format!("unpaired: {e}")),
            },
            MapForm::Blaschke(_) => (true, "paired by construction".into()),
            MapForm::Form1(f) => match validate_form1(f.coeffs(), &f.denominator(), 0.0) {
                Ok(true) => (true, "mirrored denominator".into()),
                _ => (false, "denominator is not the conjugate reversal".into()),
            },
            _ => (true, "n/a".into()),
        };
        let pass = inv.pass && pairing_ok;
        all_pass &= pass;
        let _ = writeln!(
            text,
            "map {} ({}{}): degree {}, h-invariance {} (max defect {:.3e} at {}), pairing: {} => {}",
            decl.name,
            map.kind_name(),
            if map.conj { ", conj" } else { "" },
            degree.map_or("-".to_string(), |d| d.to_string()),
            if inv.pass { "pass" } else { "FAIL" },
            inv.max_defect,
            fmt_point(inv.worst_point),
            pairing,
            if pass { "PASS" } else { "FAIL" },
        );
        entries.push(json!({
            "map": decl.name,
            "kind": map.kind_name(),
            "conj": map.conj,
            "degree": degree,
            "h_invariant": inv.pass,
            "max_defect": inv.max_defect,
            "worst_point": json_point(inv.worst_point),
            "pairing": pairing,
            "pass": pass,
        }));
    }
    let code = if all_pass { 0 } else { 1 };
    Ok(Report {
        text,
        json: json!({ "pass": all_pass, "maps": entries }),
        code,
    })
}

// ---------------------------------------------------------------- canonicalize

/// Deterministic sample points spread over the sphere.
fn sample_points(n: usize) -> Vec<ExtComplex> {
    (0..n)
        .map(|k| {
            let r = (0.05 + 3.0 * k as f64 / n as f64).powi(2);
            ExtComplex::Finite(Complex64::from_polar(r, 2.399_963_229_728_653 * k as f64))
        })
        .collect()
}

fn cmd_canonicalize(path: &Path, name: &str) -> Result<Report, Failure> {
    let spec = load(path)?;
    let (decl, map) = build_map(&spec, name)?;
    let MapForm::Form1(f) = &map.form else {
        return Err(Failure::Validation(format!(
            "map '{name}' is {}, not form1",
            map.kind_name()
        )));
    };
    let c = canonicalize(f, DEFAULT_ROOT_TOL).map_err(|e| match e {
        MapError::Roots(_) => Failure::NonConvergence(format!("map '{name}': {e}")),
        other => Failure::Validation(format!("map '{name}': {other}")),
    })?;
    let residual = sample_points(100)
        .into_iter()
        .map(|z| chordal_distance(f.apply(z), c.evaluate(z)))
        .fold(0.0, f64::max);
    let mut out = MapDecl::canonical(&decl.name, &c.map);
    out.conj = decl.conj;
    let line = dsl::format_map_decl(&out);
    let mut text = String::new();
    if c.branch == CanonicalBranch::Reciprocal {
        let _ = writeln!(
            text,
            "# leading coefficient vanishes: {name} = -1/C for the map C below"
        );
    }
    let _ = writeln!(text, "{line}");
    let _ = writeln!(
        text,
        "# round-trip residual (max chordal, 100 points): {residual:.3e}"
    );
    let json = json!({
        "map": decl.name,
        "branch": if c.branch == CanonicalBranch::Numerator { "numerator" } else { "reciprocal" },
        "alpha": c.map.alpha(),
        "zeros": c.map.zeros().iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        "residual": residual,
        "decl": line,
    });
    Ok(Report::ok(text, json))
}

// ---------------------------------------------------------------- classify

fn cmd_classify(path: &Path, name: &str, q_max: u64, tol: f64) -> Result<Report, Failure> {
    let spec = load(path)?;
    let (decl, map) = build_map(&spec, name)?;
    let MapForm::Moebius(g) = &map.form else {
        return Err(Failure::Validation(format!(
            "map '{name}' is {}, not moebius",
            map.kind_name()
        )));
    };
    let descriptor = match rotation_descriptor(g) {
        Ok(d) => d,
        Err(RotationError::Identity) => {
            let text = format!("map {}: identity (every point is fixed)\n", decl.name);
            return Ok(Report::ok(
                text,
                json!({ "map": decl.name, "identity": true }),
            ));
        }
        Err(e) => return Err(Failure::Validation(e.to_string())),
    };
    let (p1, p2) = fixed_points(g).map_err(|e| Failure::Validation(e.to_string()))?;
    let verdict = classify_rotation(descriptor.angle, q_max, tol);
    let z0 = ExtComplex::Finite(CLASSIFY_SAMPLE);
    let n_max = q_max as usize;
    let sphere = period_on_sphere(g, z0, n_max, tol).ok();
    let projected = period_on_p2(g, z0, n_max, tol).ok();
    let [ax, ay, az] = descriptor.axis;
    let q = descriptor.quaternion;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "map {}: moebius{}",
        decl.name,
        if map.conj {
            " (conj; analysis of the lift)"
        } else {
            ""
        }
    );
    let _ = writeln!(text, "fixed points: {}, {}", fmt_point(p1), fmt_point(p2));
    let _ = writeln!(text, "axis: ({ax}, {ay}, {az})");
    let _ = writeln!(text, "angle: {} rad", descriptor.angle);
    let _ = writeln!(text, "quaternion: ({}, {}, {}, {})", q.w, q.x, q.y, q.z);
    let _ = match verdict {
        Rationality::Rational { p, q } => writeln!(text, "rotation: Rational{{{p},{q}}}"),
        Rationality::Irrational => {
            writeln!(text, "rotation: Irrational (q_max {q_max}, tol {tol:e})")
        }
    };
    let sample = fmt_complex(CLASSIFY_SAMPLE);
    let _ = match sphere {
        Some(n) => writeln!(text, "sphere period at {sample}: {n}"),
        None => writeln!(text, "sphere period at {sample}: none within {n_max}"),
    };
    let _ = match projected {
        Some(p) => writeln!(
            text,
            "P2 period at {sample}: {}{}",
            p.period,
            if p.halved { " (halved)" } else { "" }
        ),
        None => writeln!(text, "P2 period at {sample}: none within {n_max}"),
    };

    let json = json!({
        "map": decl.name,
        "identity": false,
        "fixed_points": [json_point(p1), json_point(p2)],
        "axis": descriptor.axis,
        "angle": descriptor.angle,
        "quaternion": [q.w, q.x, q.y, q.z],
        "rational": match verdict {
            Rationality::Rational { p, q } => json!({ "p": p, "q": q }),
            Rationality::Irrational => Json::Null,
        },
        "sample": [CLASSIFY_SAMPLE.re, CLASSIFY_SAMPLE.im],
        "sphere_period": sphere,
        "p2_period": projected.map(|p| json!({ "period": p.period, "halved": p.halved })),
    });
    Ok(Report::ok(text, json))
}

// ---------------------------------------------------------------- julia

fn cmd_julia(
    path: &Path,
    name: &str,
    eps: Option<f64>,
    max_iter: Option<u32>,
    out: Option<PathBuf>,
) -> Result<Report, Failure> {
    let spec = load(path)?;
    let Job::Julia(job) = build_job(&spec, name)? else {
        return Err(Failure::Validation(format!(
            "job '{name}' is not a julia job"
        )));
    };
    let (_, map) = build_map(&spec, &job.map)?;
    let MapForm::Blaschke(b) = &map.form else {
        return Err(Failure::Validation(format!(
            "map '{}' is not a blaschke map",
            job.map
        )));
    };
    let eps = eps.unwrap_or(job.eps);
    let max_iter = max_iter.unwrap_or(job.max_iter);
    if !(eps > 0.0 && eps < 1.0) || max_iter == 0 {
        return Err(Failure::Validation(
            "--eps must lie in (0, 1) and --max-iter be positive".into(),
        ));
    }
    let field = basin_field(b, job.window, job.res, max_iter, eps);
    let estimate =
        julia_boundary(&field).map_err(|e| Failure::Validation(format!("job '{name}': {e}")))?;
    let img = render_basin(&field, &Palette::default());
    let out = out.unwrap_or_else(|| PathBuf::from(&job.out));
    write_image(&img, &out)?;

    let diag = job.window.pixel_diagonal(job.res);
    let (dx, _) = job.window.pixel_size(job.res);
    let counts = [
        BasinClass::ZeroBasin,
        BasinClass::InfinityBasin,
        BasinClass::Undecided,
    ]
    .map(|c| field.count(c));
    let mut text = String::new();
    let _ = writeln!(
        text,
        "job {name}: map {}, {}x{}, center {}, width {}",
        job.map,
        job.res.0,
        job.res.1,
        fmt_complex(job.window.center),
        job.window.width
    );
    let _ = writeln!(
        text,
        "cells: zero {}, infinity {}, undecided {}",
        counts[0], counts[1], counts[2]
    );
    let _ = writeln!(text, "boundary pixels: {}", estimate.boundary_pixels.len());
    let _ = writeln!(text, "mean_radius: {}", estimate.stats.mean_radius);
    let _ = writeln!(
        text,
        "max_abs_dev: {} (pixel width {dx}, diagonal {diag})",
        estimate.stats.max_abs_dev
    );
    let _ = writeln!(text, "wrote {}", out.display());
    let json = json!({
        "job": name,
        "map": job.map,
        "resolution": [job.res.0, job.res.1],
        "zero_cells": counts[0],
        "infinity_cells": counts[1],
        "undecided_cells": counts[2],
        "boundary_pixels": estimate.boundary_pixels.len(),
        "mean_radius": estimate.stats.mean_radius,
        "max_abs_dev": estimate.stats.max_abs_dev,
        "pixel_width": dx,
        "pixel_diagonal": diag,
        "out": out.display().to_string(),
    });
    Ok(Report::ok(text, json))
}

// ---------------------------------------------------------------- steiner

fn cmd_steiner(path: &Path, name: &str, out: Option<PathBuf>) -> Result<Report, Failure> {
    let spec = load(path)?;
    let Job::Steiner(job) = build_job(&spec, name)? else {
        return Err(Failure::Validation(format!(
            "job '{name}' is not a steiner job"
        )));
    };
    let (_, map) = build_map(&spec, &job.map)?;
    let MapForm::Moebius(g) = &map.form else {
        return Err(Failure::Validation(format!(
            "map '{}' is not a moebius map",
            job.map
        )));
    };
    let (p1, p2) =
        fixed_points(g).map_err(|e| Failure::Validation(format!("map '{}': {e}", job.map)))?;
    let net = steiner_net(p1, p2, job.meridians, job.latitudes)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let base = Image::filled(job.res.0, job.res.1, NEUTRAL_BACKGROUND);
    let img = overlay_net(&base, &net, &job.window);
    let out = out.unwrap_or_else(|| PathBuf::from(&job.out));
    write_image(&img, &out)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "job {name}: map {}, fixed points {}, {}",
        job.map,
        fmt_point(p1),
        fmt_point(p2)
    );
    let _ = writeln!(
        text,
        "meridians: {}, latitudes: {}",
        net.meridians.len(),
        net.latitudes.len()
    );
    let _ = writeln!(text, "incidence defect: {:.3e}", net.incidence_defect());
    let _ = writeln!(
        text,
        "orthogonality defect: {:.3e} rad",
        net.orthogonality_defect()
    );
    let _ = writeln!(text, "wrote {}", out.display());
    let json = json!({
        "job": name,
        "map": job.map,
        "fixed_points": [json_point(p1), json_point(p2)],
        "meridians": net.meridians.len(),
        "latitudes": net.latitudes.len(),
        "incidence_defect": net.incidence_defect(),
        "orthogonality_defect": net.orthogonality_defect(),
        "out": out.display().to_string(),
    });
    Ok(Report::ok(text, json))
}

// ---------------------------------------------------------------- orbit

/// One orbit record; coordinates are `null` at infinity.
fn orbit_record(step: usize, z: ExtComplex) -> Json {
    match z {
        ExtComplex::Finite(w) => json!({ "step": step, "re": w.re, "im": w.im, "abs": w.norm() }),
        ExtComplex::Infinity => json!({ "step": step, "re": null, "im": null, "abs": null }),
    }
}

fn cmd_orbit(path: &Path, name: &str, out: Option<PathBuf>) -> Result<Report, Failure> {
    let spec = load(path)?;
    let Job::Orbit(job) = build_job(&spec, name)? else {
        return Err(Failure::Validation(format!(
            "job '{name}' is not an orbit job"
        )));
    };
    let (_, map) = build_map(&spec, &job.map)?;
    let points = orbit(&map, ExtComplex::from(job.start), job.steps);
    let records: Vec<Json> = points
        .iter()
        .enumerate()
        .map(|(k, z)| orbit_record(k, *z))
        .collect();
    let lines: String = records.iter().map(|r| format!("{r}\n")).collect();
    let target = out.or(job.out.map(PathBuf::from));
    match target {
        None => Ok(Report::ok(lines, Json::Array(records))),
        Some(path) => {
            std::fs::write(&path, &lines)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let text = format!(
                "job {name}: {} records written to {}\n",
                records.len(),
                path.display()
            );
            Ok(Report::ok(
                text,
                json!({ "job": name, "records": records.len(), "out": path.display().to_string() }),
            ))
        }
    }
}

// ---------------------------------------------------------------- selftest

fn cmd_selftest() -> Report {
    let checks: Vec<(&str, Result<(), String>)> = vec![
        ("dsl round trip", selftest_dsl()),
        ("fixed points of (z-1)/(1+z)", selftest_fixed_points()),
        ("canonical round trip", selftest_canonical()),
        ("z^3 julia circle at 128x128", selftest_julia()),
    ];
    let mut text = String::new();
    let mut entries = Vec::new();
    let mut all = true;
    for (name, result) in &checks {
        all &= result.is_ok();
        let _ = match result {
            Ok(()) => writeln!(text, "PASS {name}"),
            Err(e) => writeln!(text, "FAIL {name}: {e}"),
        };
        entries.push(
            json!({ "check": name, "pass": result.is_ok(), "detail": result.as_ref().err() }),
        );
    }
    Report {
        text,
        json: json!({ "pass": all, "checks": entries }),
        code: if all { 0 } else { 1 },
    }
}

fn selftest_dsl() -> Result<(), String> {
    let text = "map f = blaschke(theta=0.25, p=1, zeros=[0.3+0.2i])\nmap g = moebius(a=1, b=-1)\njob j = orbit(map=g, start=0.5)\n";
    let spec = dsl::parse(text).map_err(|e| e.to_string())?;
    let again = dsl::parse(&dsl::format_spec(&spec)).map_err(|e| e.to_string())?;
    (again == spec)
        .then_some(())
        .ok_or_else(|| "re-parsed spec differs".into())
}

fn selftest_fixed_points() -> Result<(), String> {
    let g = dianalytic::maps::MoebiusRotation::from_zero(0.0, Complex64::new(1.0, 0.0));
    let (p1, p2) = fixed_points(&g).map_err(|e| e.to_string())?;
    let err = chordal_distance(p1, ExtComplex::new(0.0, 1.0))
        .max(chordal_distance(p2, ExtComplex::new(0.0, -1.0)));
    (err < 1e-12)
        .then_some(())
        .ok_or_else(|| format!("off by {err:e}"))
}

fn selftest_canonical() -> Result<(), String> {
    use dianalytic::maps::{expand, CanonicalMap};
    let zeros = vec![
        Complex64::new(0.5, 0.1),
        Complex64::new(-0.2, 0.7),
        Complex64::new(1.5, -0.4),
    ];
    let c = CanonicalMap::new(1.0, zeros).map_err(|e| e.to_string())?;
    let back = canonicalize(&expand(&c), DEFAULT_ROOT_TOL).map_err(|e| e.to_string())?;
    let err = sample_points(50)
        .into_iter()
        .map(|z| chordal_distance(c.apply(z), back.evaluate(z)))
        .fold(0.0, f64::max);
    (err < 1e-9)
        .then_some(())
        .ok_or_else(|| format!("residual {err:e}"))
}

fn selftest_julia() -> Result<(), String> {
    let f = dianalytic::maps::HInvariantBlaschke::new(0.0, 1, vec![]).map_err(|e| e.to_string())?;
    let window = dianalytic::dynamics::Window::square(Complex64::new(0.0, 0.0), 4.0);
    let field = basin_field(&f, window, (128, 128), DEFAULT_MAX_ITER, DEFAULT_EPS);
    let est = julia_boundary(&field).map_err(|e| e.to_string())?;
    let limit = 2.0 * window.pixel_diagonal((128, 128));
    (est.stats.max_abs_dev <= limit)
        .then_some(())
        .ok_or_else(|| format!("max_abs_dev {} exceeds {limit}", est.stats.max_abs_dev))
}
