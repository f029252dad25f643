use std::time::Instant;

use bs_coalescent::verification::{select, write_json, write_summary_csv, Suite, VerifyConfig, ACCEPTANCE, EXTRA};

use crate::args::VerifyArgs;
use crate::output::OutDir;
use crate::Failure;

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(p) => VerifyConfig::load(p)?,
        None => VerifyConfig::default(),
    };
    let suite: Suite = args.suite.parse().expect("suite parsing is infallible");
    let chosen = select(&suite).map_err(|e| {
        let known: Vec<&str> = ACCEPTANCE.iter().chain(EXTRA.iter()).map(|c| c.name).collect();
        Failure::config(format!(
            "{e}; expected `fast`, `all` or names from: {}",
            known.join(", ")
        ))
    })?;
    let seed = args.common.seed;
    let start = Instant::now();
    let mut reports = Vec::with_capacity(chosen.len());
    for c in chosen {
        let t = Instant::now();
        let r = (c.run)(&cfg, seed)?;
        println!(
            "{} {:<32} statistic={:+.4e} replicates={} ({:.2}s)",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.statistic,
            r.replicates,
            t.elapsed().as_secs_f64()
        );
        reports.push(r);
    }
    let mut out = OutDir::create(&args.common.out)?;
    let mut json = Vec::new();
    write_json(&mut json, &reports)?;
    json.push(b'\n');
    out.write("report.json", &json)?;
    let mut csv = Vec::new();
    write_summary_csv(&mut csv, &reports)?;
    out.write("summary.csv", &csv)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    println!(
        "verify: {} of {} passed, {:.2}s, report in {}",
        reports.len() - failed,
        reports.len(),
        start.elapsed().as_secs_f64(),
        out.path().display()
    );
    if failed > 0 {
        return Err(Failure::TestsFailed(failed));
    }
    Ok(())
}
