use std::time::Instant;

use serde_json::{json, Map, Value};

use bs_coalescent::rng::{derive_seed, replicate};
use bs_coalescent::stats::median;
use bs_coalescent::verification::run_coupling_experiment;
use bs_coalescent::Result as CoreResult;

use crate::args::{CouplingArgs, Format};
use crate::output::OutDir;
use crate::Failure;

/// Smallest population size for which the coupling parameters make sense.
const MIN_N: usize = 100;

fn validate(args: &CouplingArgs) -> Result<(), Failure> {
    if args.n_grid.is_empty() {
        return Err(Failure::config("--n-grid is empty"));
    }
    if let Some(&n) = args.n_grid.iter().find(|&&n| n < MIN_N) {
        return Err(Failure::config(format!(
            "--n-grid entries must be at least {MIN_N}, got {n}"
        )));
    }
    if args.n_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Failure::config("--n-grid must be non-decreasing"));
    }
    if args.replicates < 1 {
        return Err(Failure::config("--replicates must be at least 1"));
    }
    if args.grid_points < 2 {
        return Err(Failure::config("--grid-points must be at least 2"));
    }
    Ok(())
}

pub fn run(args: &CouplingArgs) -> Result<(), Failure> {
    validate(args)?;
    let start = Instant::now();
    let seed = args.common.seed;
    let mut out = OutDir::create(&args.common.out)?;
    let mut csv = String::from("n,replicates,median_sup,jump_sets_coincide\n");
    let mut rows = Vec::new();
    let mut paths = Map::new();
    let mut medians = Vec::new();
    for (j, &n) in args.n_grid.iter().enumerate() {
        let master = derive_seed(seed, j as u64);
        let runs = replicate(master, args.replicates, |_, rng| {
            run_coupling_experiment(n, args.grid_points, rng)
        })
        .into_iter()
        .collect::<CoreResult<Vec<_>>>()?;
        let sups: Vec<f64> = runs.iter().map(|r| r.sup_distance).collect();
        let med = median(&sups);
        let coincide = runs.iter().filter(|r| r.jump_sets_coincide()).count();
        if coincide < runs.len() {
            eprintln!(
                "warning: n = {n}: jump sets differ in {} replicate(s)",
                runs.len() - coincide
            );
        }
        csv.push_str(&format!("{n},{},{med:?},{coincide}\n", runs.len()));
        rows.push(json!({"n": n, "replicates": runs.len(), "median_sup": med, "jump_sets_coincide": coincide}));
        medians.push(med);
        let first = &runs[0];
        match args.common.format {
            Format::Csv => {
                let mut x = Vec::new();
                first.x.write_csv(&mut x)?;
                out.write(&format!("coupling_n{n}_{j}_x.csv"), &x)?;
                let mut y = Vec::new();
                first.y.write_csv(&mut y)?;
                out.write(&format!("coupling_n{n}_{j}_y.csv"), &y)?;
            }
            Format::Json => {
                paths.insert(format!("{n}_{j}"), json!({"x": first.x, "y": first.y}));
            }
        }
    }
    match args.common.format {
        Format::Csv => out.write("coupling_summary.csv", csv.as_bytes())?,
        Format::Json => out.write_json("coupling.json", &json!({"rows": rows, "paths": Value::Object(paths)}))?,
    }
    if medians.windows(2).any(|w| w[1] > w[0]) {
        eprintln!("warning: median sup distance is not non-increasing across the grid: {medians:?}");
    }
    println!(
        "coupling: {} grid point(s), {} replicate(s) each, {:.3}s, output in {}",
        args.n_grid.len(),
        args.replicates,
        start.elapsed().as_secs_f64(),
        out.path().display()
    );
    Ok(())
}
