use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use voxelvol::asymptotics::CoefficientTable;
use voxelvol::configs::{orbit_classes, ClassTable};
use voxelvol::error::{Error, Result};
use voxelvol::estimators::{
    build_euler_system_2d, build_nonexistence_system_3d, build_nonexistence_system_3d_quadrature, check_feasibility,
    FeasibilityReport, LinearSystem, WeightVector,
};
use voxelvol::experiments::{hitmiss_csv, hitmiss_vs_theory, rotation_matrix, run, DesignSpec, HitMissDesign};
use voxelvol::imaging::{brute_force_count, count_configurations, voxelize, BinaryImage, LatticePose};
use voxelvol::phantoms::PhantomSpec;
use voxelvol::quadrature::QuadOptions;

use super::{CoeffMode, Command, TableFormat};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a T,
}

fn write_manifest<T: Serialize>(path: &Path, command: &str, config: &T) -> Result<()> {
    let m = Manifest {
        tool: "voxelvol",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
    };
    fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if (2..=3).contains(&d) {
        Ok(())
    } else {
        Err(usage(format!("dimension must be 2 or 3, got {d}")))
    }
}

fn read_bvox(path: &Path) -> Result<BinaryImage> {
    let f = fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    BinaryImage::read_bvox(f)
}

fn parse_rotation(d: usize, text: Option<&String>) -> Result<Option<Vec<Vec<f64>>>> {
    text.map(|t| serde_json::from_str(t).map_err(|e| usage(format!("--rotation: {e}"))))
        .transpose()
        .and_then(|rows: Option<Vec<Vec<f64>>>| {
            rotation_matrix(d, rows.as_ref())?;
            Ok(rows)
        })
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Classes { dim, format } => {
            check_dim(dim)?;
            let table = ClassTable::new(&orbit_classes(dim)?)?;
            let text = match format {
                TableFormat::Json => serde_json::to_string_pretty(&table)? + "\n",
                TableFormat::Csv => table.to_csv(),
            };
            emit(None, &text)
        }
        Command::Coeffs {
            dim,
            mode,
            phantom,
            rotation,
            tol,
            out,
        } => {
            check_dim(dim)?;
            let partition = orbit_classes(dim)?;
            let opts = QuadOptions::with_tol(tol);
            let table = match mode {
                CoeffMode::Psi | CoeffMode::Mu => {
                    if phantom.is_some() {
                        return Err(usage("isotropic coefficients take no phantom"));
                    }
                    CoefficientTable::isotropic_closed_form(&partition, &opts)?
                }
                CoeffMode::Phi | CoeffMode::Lambda => {
                    let path = phantom.ok_or_else(|| usage("--phantom is required for phi and lambda"))?;
                    let body = read_json::<PhantomSpec>(&path)?.build()?;
                    if body.dim != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: body.dim,
                        });
                    }
                    let rows = parse_rotation(dim, rotation.as_ref())?;
                    let rot = rotation_matrix(dim, rows.as_ref())?;
                    CoefficientTable::for_body(&partition, &body, &rot, &opts)?
                }
            };
            emit(out.as_ref(), &table.to_csv())
        }
        Command::Voxelize {
            phantom,
            a,
            rotation,
            c,
            margin,
            out,
        } => {
            let spec: PhantomSpec = read_json(&phantom)?;
            let body = spec.build()?;
            let d = body.dim;
            let rows = parse_rotation(d, rotation.as_ref())?;
            let c = c.unwrap_or_else(|| vec![0.0; d]);
            let pose = LatticePose::new(d, a, rotation_matrix(d, rows.as_ref())?, &c)?;
            let margin = margin.unwrap_or(2.0 * a);
            let img = voxelize(&body, &pose, margin)?;
            let f = fs::File::create(&out)?;
            img.write_bvox(std::io::BufWriter::new(f))?;
            let config = json!({
                "phantom": spec,
                "a": a,
                "R": pose.rows(),
                "c": c,
                "margin": margin,
                "dims": img.dims,
                "origin": img.origin,
                "out": out,
            });
            let mut manifest = out.clone().into_os_string();
            manifest.push(".manifest.json");
            write_manifest(Path::new(&manifest), "voxelize", &config)
        }
        Command::Count { input, oracle, out } => {
            let img = read_bvox(&input)?;
            let hist = if oracle {
                brute_force_count(&img)?
            } else {
                count_configurations(&img)?
            };
            emit(out.as_ref(), &hist.to_csv())
        }
        Command::Estimate { input, weights } => {
            let img = read_bvox(&input)?;
            let partition = orbit_classes(img.dim())?;
            let text = fs::read_to_string(&weights).map_err(|e| usage(format!("{}: {e}", weights.display())))?;
            let w = WeightVector::from_json(&text, &partition)?;
            let hist = count_configurations(&img)?;
            let est = w.evaluate_histogram(&hist, &partition, img.pose.a)?;
            emit(None, &format!("{est}\n"))
        }
        Command::Experiment {
            design,
            out,
            seed,
            replicates,
            spacings,
        } => {
            let mut spec: DesignSpec = read_json(&design)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(r) = replicates {
                spec.replicates = r;
            }
            if let Some(a) = spacings {
                spec.spacings = a;
            }
            spec.resolve()?;
            fs::create_dir_all(&out)?;
            write_manifest(&out.join("manifest.json"), "experiment", &spec)?;
            let record = run(&spec)?;
            fs::write(out.join("results.csv"), record.results_csv())?;
            fs::write(out.join("summary.csv"), record.summary_csv())?;
            fs::write(out.join("records.json"), serde_json::to_string(&record.replicates)? + "\n")?;
            if let Some(fit) = &record.fit {
                let report = json!({
                    "c_minus1": fit.c_minus1,
                    "c0": fit.c0,
                    "se": {"c_minus1": fit.se_c_minus1, "c0": fit.se_c0},
                    "residual": fit.residual,
                    "dof": fit.dof,
                    "ci": fit.ci,
                    "sigmas": fit.sigmas,
                });
                fs::write(out.join("fit.json"), serde_json::to_string_pretty(&report)? + "\n")?;
                println!(
                    "c_minus1 = {} ± {}\nc0 = {} ± {}",
                    fit.c_minus1, fit.se_c_minus1, fit.c0, fit.se_c0
                );
            } else {
                print!("{}", record.summary_csv());
            }
            Ok(())
        }
        Command::Hitmiss {
            design,
            out,
            seed,
            replicates,
        } => {
            let mut spec: HitMissDesign = read_json(&design)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(r) = replicates {
                spec.replicates = r;
            }
            fs::create_dir_all(&out)?;
            write_manifest(&out.join("manifest.json"), "hitmiss", &spec)?;
            let rows = hitmiss_vs_theory(&spec)?;
            let csv = hitmiss_csv(&rows);
            fs::write(out.join("hitmiss.csv"), &csv)?;
            print!("{csv}");
            Ok(())
        }
        Command::Feasibility { dim, quadrature, out } => {
            let systems: Vec<(&str, LinearSystem)> = match dim {
                2 => vec![("euler-2d", build_euler_system_2d())],
                3 if quadrature => vec![(
                    "nonexistence-3d",
                    build_nonexistence_system_3d_quadrature(&orbit_classes(3)?, &QuadOptions::with_tol(1e-10))?,
                )],
                3 => vec![("nonexistence-3d", build_nonexistence_system_3d())],
                d => return Err(usage(format!("feasibility systems exist for d = 2, 3, not {d}"))),
            };
            let mut reports: Vec<(String, LinearSystem, FeasibilityReport)> = Vec::new();
            for (name, sys) in systems {
                let rep = check_feasibility(&sys, 1e-9);
                let verdict = match (rep.feasible, rep.unique) {
                    (false, _) => "infeasible".to_owned(),
                    (true, true) => "feasible (unique)".to_owned(),
                    (true, false) => format!("feasible ({}-dimensional solution set)", rep.null_space.len()),
                };
                println!("{name}: {verdict}, residual {:e}", rep.residual);
                if rep.feasible {
                    let sol: Vec<String> = sys
                        .unknowns
                        .iter()
                        .zip(&rep.solution)
                        .map(|(u, x)| format!("{u} = {x}"))
                        .collect();
                    println!("  {}", sol.join(", "));
                }
                reports.push((name.to_owned(), sys, rep));
            }
            if let Some(path) = out {
                let body: Vec<_> = reports
                    .iter()
                    .map(|(n, s, r)| json!({"name": n, "system": s, "report": r}))
                    .collect();
                fs::write(path, serde_json::to_string_pretty(&body)? + "\n")?;
            }
            Ok(())
        }
    }
}
