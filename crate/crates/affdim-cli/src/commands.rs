//! One function per subcommand. Every command follows the same shape: load
//! and build the system, run the library pipeline, then write `report.json`
//! (system + knobs + headline results, enough to re-run the command), the
//! CSV tables, and a gnuplot script that plots them.

use std::fs;
use std::path::Path;

use affdim::dimension::dimension_report;
use affdim::error::{Error, Result};
use affdim::experiments::{
    box_count_series, box_dim_estimate, exact_word_measure, sample_measure,
    slice_entropy_experiment, CurveMode, CurveOptions,
};
use affdim::ifs::{DiagonalIFS, WeightedIFS};
use affdim::measures::{kv_gap, DiscreteMeasure, PartitionSpec};
use affdim::schema::{
    curve_csv, fmt9, measure_csv, parse_weight_list, profile_csv, series_csv, slice_csv,
    BackendChoice, IfsFile,
};
use affdim::separation::{
    exact_overlap_search, matches_pm_one_template, pm10_root_check, pm10_root_check_exact,
    separation_profile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{
    BoxdimArgs, CurveArgs, DimsArgs, KvtestArgs, OverlapsArgs, SampleArgs, SliceArgs, SystemOpts,
    WeightOpt,
};

/// Tolerance handed to the affinity-dimension bisection.
const AFFINITY_TOL: f64 = 1e-12;

/// Slack below zero tolerated in a smoothing gap before it counts as a
/// violation; matches the library's entropy arithmetic precision.
const GAP_TOL: f64 = 1e-9;

fn read_system(opts: &SystemOpts) -> Result<(IfsFile, DiagonalIFS)> {
    let text = fs::read_to_string(&opts.ifs).map_err(|e| {
        Error::InvalidInput(format!("cannot read {}: {e}", opts.ifs.display()))
    })?;
    let file = IfsFile::from_json(&text)?;
    let ifs = file.build(backend(opts))?;
    Ok((file, ifs))
}

fn backend(opts: &SystemOpts) -> BackendChoice {
    if opts.exact {
        BackendChoice::Exact
    } else if opts.float {
        BackendChoice::Float
    } else {
        BackendChoice::Auto
    }
}

fn backend_name(opts: &SystemOpts) -> &'static str {
    match backend(opts) {
        BackendChoice::Auto => "auto",
        BackendChoice::Exact => "exact",
        BackendChoice::Float => "float",
    }
}

/// Weight resolution order: --p flag, then the file's "p", then uniform.
fn weighted(file: &IfsFile, ifs: DiagonalIFS, opt: &WeightOpt) -> Result<WeightedIFS> {
    let from_flag = opt.p.as_deref().map(parse_weight_list).transpose()?;
    match from_flag.or(file.weights()?) {
        Some(p) => WeightedIFS::new(ifs, p),
        None => Ok(WeightedIFS::uniform(ifs)),
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::InvalidInput(format!("cannot create {}: {e}", dir.display()))
    })?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Serialize the manifest and write it as `report.json`.
fn write_report(dir: &Path, manifest: &Value) -> Result<String> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize report: {e}")))?;
    write_file(dir, "report.json", &text)?;
    Ok(text)
}

/// A gnuplot script with the shared prologue; `body` holds the plot lines.
fn plot_script(body: &str) -> String {
    format!(
        "# generated by affdim; run: gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set key left top\n\
         {body}\n"
    )
}

pub fn dims(args: &DimsArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    let w = weighted(&file, ifs, &args.weights)?;
    let report = dimension_report(&w, AFFINITY_TOL)?;
    let d = report.d as f64;
    let manifest = json!({
        "command": "dims",
        "system": file,
        "weights": w.p(),
        "backend": backend_name(&args.system),
        "params": {},
        "outputs": ["report.json"],
        "results": {
            "report": report,
            "predicted_set_dimension": report.affinity_dim.min(d),
            "predicted_measure_dimension": report.lyapunov_dim.min(d),
        },
    });
    let text = write_report(&args.output.out, &manifest)?;
    println!("{text}");
    Ok(())
}

pub fn overlaps(args: &OverlapsArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    if args.max_len == 0 {
        return Err(Error::InvalidInput("--max-len must be at least 1".into()));
    }
    let levels: Vec<usize> = (1..=args.max_len).collect();
    let mut coords = Vec::with_capacity(ifs.d());
    let mut outputs = vec!["report.json".to_string(), "plot.gp".to_string()];
    let mut plots = Vec::with_capacity(ifs.d());
    for j in 0..ifs.d() {
        let slice = ifs.coordinate_slice(j)?;
        let witness = exact_overlap_search(&slice, args.max_len, args.budget)?;
        let profile = separation_profile(&slice, &levels, args.budget)?;
        // The polynomial criterion applies only to the two-map unit-offset
        // template; elsewhere the search result stands alone.
        let pm10 = if matches_pm_one_template(&slice) {
            let root = match slice.exact_maps() {
                Some(maps) => {
                    let r = maps[0].coords[0].slope.clone();
                    pm10_root_check_exact(&r, args.max_degree, args.budget)?
                }
                None => {
                    let r = slice.map(0).coords[0].slope.abs();
                    pm10_root_check(r, args.max_degree, args.budget)?
                }
            };
            json!({ "applies": true, "witness": root })
        } else {
            json!({ "applies": false })
        };
        let csv_name = format!("cn_coord{}.csv", j + 1);
        write_file(&args.output.out, &csv_name, &profile_csv(&profile))?;
        plots.push(format!(
            "'{csv_name}' using 1:3 with linespoints title 'coord {}'",
            j + 1
        ));
        outputs.push(csv_name);
        coords.push(json!({
            "coordinate": j + 1,
            "overlap": witness,
            "scanned_to": args.max_len,
            "unit_poly_root_check": pm10,
        }));
    }
    let body = format!(
        "set xlabel 'word length n'\nset ylabel 'c_n'\nplot {}",
        plots.join(", \\\n     ")
    );
    write_file(&args.output.out, "plot.gp", &plot_script(&body))?;
    let manifest = json!({
        "command": "overlaps",
        "system": file,
        "backend": backend_name(&args.system),
        "params": { "max_len": args.max_len, "max_degree": args.max_degree,
                    "budget": args.budget },
        "outputs": outputs,
        "results": { "coordinates": coords },
    });
    write_report(&args.output.out, &manifest)?;
    let found = coords_with_overlap(&manifest);
    println!(
        "{} coordinate(s) scanned to length {}, {found} with an overlap -> {}",
        ifs.d(),
        args.max_len,
        args.output.out.join("report.json").display()
    );
    Ok(())
}

fn coords_with_overlap(manifest: &Value) -> usize {
    manifest["results"]["coordinates"]
        .as_array()
        .map(|cs| cs.iter().filter(|c| !c["overlap"].is_null()).count())
        .unwrap_or(0)
}

pub fn entropy_curve(args: &CurveArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    let w = weighted(&file, ifs, &args.weights)?;
    let opts = CurveOptions {
        mode: if args.count.is_some() {
            CurveMode::MonteCarlo
        } else {
            CurveMode::Exact
        },
        sample_count: args.count.unwrap_or(0),
        word_depth: args.depth,
        seed: args.seed,
        miller_madow: false,
        budget: args.budget,
    };
    let curve = affdim::experiments::entropy_curve(&w, args.n, &opts)?;
    write_file(&args.output.out, "curve.csv", &curve_csv(&curve))?;
    let body = "set xlabel 'step n'\nset ylabel 'bits per step'\n\
                plot 'curve.csv' using 1:3 with linespoints title 'rate', \\\n     \
                'curve.csv' using 1:4 with lines title 'predicted limit'";
    write_file(&args.output.out, "plot.gp", &plot_script(body))?;
    let manifest = json!({
        "command": "entropy-curve",
        "system": file,
        "weights": w.p(),
        "backend": backend_name(&args.system),
        "params": { "n": args.n, "count": args.count, "depth": args.depth,
                    "seed": args.seed, "budget": args.budget },
        "outputs": ["report.json", "curve.csv", "plot.gp"],
        "results": { "curve": curve },
    });
    write_report(&args.output.out, &manifest)?;
    let last = curve.rows.last().expect("curve has at least one row");
    println!(
        "rate {} at step {} against predicted {} -> {}",
        fmt9(last.rate),
        last.n,
        fmt9(curve.target.unwrap_or(f64::NAN)),
        args.output.out.join("curve.csv").display()
    );
    Ok(())
}

/// Parse an inclusive "a:b" regression window.
fn parse_window(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidInput(format!("window must be \"a:b\", got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a = a.trim().parse::<usize>().map_err(|_| bad())?;
    let b = b.trim().parse::<usize>().map_err(|_| bad())?;
    if a > b {
        return Err(Error::InvalidInput(format!(
            "window is empty: {a} > {b}"
        )));
    }
    Ok((a, b))
}

pub fn boxdim(args: &BoxdimArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    let window = match &args.window {
        Some(text) => parse_window(text)?,
        None => (4.min(args.n), args.n),
    };
    let series = box_count_series(&ifs, 1, args.n, args.budget)?;
    let fit = box_dim_estimate(&series, window)?;
    write_file(&args.output.out, "boxcount.csv", &series_csv(&series))?;
    let body = format!(
        "set xlabel 'level n'\nset ylabel 'log2 count'\n\
         fit_slope = {}\nfit_icept = {}\n\
         plot 'boxcount.csv' using 1:3 with points title 'log2 N_n', \\\n     \
         fit_slope*x + fit_icept with lines title 'fit'",
        fmt9(fit.slope),
        fmt9(fit.intercept)
    );
    write_file(&args.output.out, "plot.gp", &plot_script(&body))?;
    let manifest = json!({
        "command": "boxdim",
        "system": file,
        "backend": backend_name(&args.system),
        "params": { "n": args.n, "window": [window.0, window.1],
                    "budget": args.budget },
        "outputs": ["report.json", "boxcount.csv", "plot.gp"],
        "results": { "fit": fit, "rows": series.rows },
    });
    write_report(&args.output.out, &manifest)?;
    println!(
        "box-dimension slope {} over levels {}..{} -> {}",
        fmt9(fit.slope),
        window.0,
        window.1,
        args.output.out.join("boxcount.csv").display()
    );
    Ok(())
}

pub fn slice(args: &SliceArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    let w = weighted(&file, ifs, &args.weights)?;
    let theta = exact_word_measure(&w, args.depth, args.budget)?;
    let chi = w.lyapunov_exponents();
    let report = slice_entropy_experiment(
        &theta, &chi, args.count, args.mstep, args.n, args.eps, args.budget,
    )?;
    write_file(&args.output.out, "slices.csv", &slice_csv(&report))?;
    let plots: Vec<String> = (0..chi.len())
        .map(|j| {
            format!(
                "'slices.csv' using 1:{} with linespoints title 'coord {}'",
                j + 2,
                j + 1
            )
        })
        .collect();
    let body = format!(
        "set xlabel 'step q'\nset ylabel 'bits per level'\nplot {}",
        plots.join(", \\\n     ")
    );
    write_file(&args.output.out, "plot.gp", &plot_script(&body))?;
    let manifest = json!({
        "command": "slice",
        "system": file,
        "weights": w.p(),
        "backend": backend_name(&args.system),
        "params": { "depth": args.depth, "count": args.count, "n": args.n,
                    "mstep": args.mstep, "eps": args.eps, "budget": args.budget },
        "outputs": ["report.json", "slices.csv", "plot.gp"],
        "results": { "report": report },
    });
    write_report(&args.output.out, &manifest)?;
    let shares: Vec<String> = report.fractions.iter().map(|&f| fmt9(f)).collect();
    println!(
        "saturated-step fractions per coordinate: {} -> {}",
        shares.join(", "),
        args.output.out.join("slices.csv").display()
    );
    Ok(())
}

/// A random probability measure on the level-`n` dyadic lattice in one
/// dimension: 2 to 12 atoms on integer multiples of 2^-n, masses normalized.
fn random_lattice_measure(rng: &mut ChaCha8Rng, n: i64) -> Result<DiscreteMeasure> {
    let step = (-(n as f64)).exp2();
    let count = rng.gen_range(2..=12);
    let raw: Vec<(Vec<f64>, f64)> = (0..count)
        .map(|_| {
            let ticks = rng.gen_range(-40i64..=40) as f64;
            (vec![ticks * step], rng.gen_range(0.05..1.0))
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, m)| m).sum();
    DiscreteMeasure::new(1, raw.into_iter().map(|(p, m)| (p, m / total)).collect())
}

pub fn kvtest(args: &KvtestArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::InvalidInput("--count must be at least 1".into()));
    }
    let spec = PartitionSpec::new(vec![1.0], args.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut csv = String::from("trial,k,gap_bits\n");
    let mut min_gap = f64::INFINITY;
    for trial in 0..args.count {
        let k = [2usize, 3, 5][trial % 3];
        let theta = random_lattice_measure(&mut rng, args.n)?;
        let sigma = random_lattice_measure(&mut rng, args.n)?;
        let gap = kv_gap(&theta, &sigma, k, &spec, args.budget)?;
        if gap < -GAP_TOL {
            return Err(Error::PropertyViolation(format!(
                "smoothing gap {gap} is negative at trial {trial} (k = {k})"
            )));
        }
        min_gap = min_gap.min(gap);
        csv.push_str(&format!("{trial},{k},{}\n", fmt9(gap)));
    }
    write_file(&args.output.out, "kvgaps.csv", &csv)?;
    let body = "set xlabel 'trial'\nset ylabel 'gap (bits)'\n\
                plot 'kvgaps.csv' using 1:3 with points title 'smoothing gap'";
    write_file(&args.output.out, "plot.gp", &plot_script(body))?;
    let manifest = json!({
        "command": "kvtest",
        "params": { "count": args.count, "n": args.n, "seed": args.seed,
                    "budget": args.budget },
        "outputs": ["report.json", "kvgaps.csv", "plot.gp"],
        "results": { "trials": args.count, "min_gap_bits": min_gap },
    });
    write_report(&args.output.out, &manifest)?;
    println!(
        "{} smoothing gaps, all nonnegative, min {} -> {}",
        args.count,
        fmt9(min_gap),
        args.output.out.join("kvgaps.csv").display()
    );
    Ok(())
}

pub fn sample(args: &SampleArgs) -> Result<()> {
    let (file, ifs) = read_system(&args.system)?;
    let w = weighted(&file, ifs, &args.weights)?;
    let m = sample_measure(&w, args.depth, args.count, args.seed)?;
    write_file(&args.output.out, "points.csv", &measure_csv(&m))?;
    let body = if m.d() >= 2 {
        "set xlabel 'x1'\nset ylabel 'x2'\nset size ratio -1\n\
         plot 'points.csv' using 1:2 with dots title 'samples'"
            .to_string()
    } else {
        "set xlabel 'x1'\nset ylabel 'mass'\n\
         plot 'points.csv' using 1:2 with impulses title 'samples'"
            .to_string()
    };
    write_file(&args.output.out, "plot.gp", &plot_script(&body))?;
    let manifest = json!({
        "command": "sample",
        "system": file,
        "weights": w.p(),
        "backend": backend_name(&args.system),
        "params": { "depth": args.depth, "count": args.count, "seed": args.seed },
        "outputs": ["report.json", "points.csv", "plot.gp"],
        "results": { "points": args.count, "distinct_atoms": m.atom_count() },
    });
    write_report(&args.output.out, &manifest)?;
    println!(
        "{} draws, {} distinct atoms -> {}",
        args.count,
        m.atom_count(),
        args.output.out.join("points.csv").display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse_and_reject() {
        assert_eq!(parse_window("4:12").unwrap(), (4, 12));
        assert_eq!(parse_window(" 8 : 14 ").unwrap(), (8, 14));
        assert!(parse_window("12").is_err());
        assert!(parse_window("a:b").is_err());
        assert!(parse_window("9:3").is_err());
    }

    #[test]
    fn lattice_measures_are_seed_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let ma = random_lattice_measure(&mut a, 4).unwrap();
        let mb = random_lattice_measure(&mut b, 4).unwrap();
        assert_eq!(ma.atoms(), mb.atoms());
    }
}
