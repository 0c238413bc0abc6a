//! One function per subcommand. Every argument is validated before any
//! sampling starts.

use std::fs;

use mallows_core::limits::blocks::{e_from_features, gamma_matrix_from_features, BlockFeatures};
use mallows_core::limits::experiment::sub_seed;
use mallows_core::limits::{run_regime_experiment, ExperimentConfig, StatRow};
use mallows_core::pattern::{binomial, occ, DEFAULT_BUDGET};
use mallows_core::process::{occ_process, ProcessPrefix};
use mallows_core::rng::{run_replicates, RngStream};
use mallows_core::samplers::{sample_block_sum, sample_mallows, MallowsParams};
use mallows_core::{sample_coupled, Permutation};
use num_bigint::BigUint;

use crate::output::{Cell, Table};
use crate::{
    config_err, emit, run_err, with_writer, BlocksArgs, CliError, CountArgs, CoupledArgs,
    EstimateArgs, ExperimentArgs, Format, OutputArgs, ProcessArgs, SampleArgs, Status,
};

fn parse_perm(what: &str, s: &str) -> Result<Permutation, CliError> {
    s.parse().map_err(|e| config_err(format!("{what} `{s}`: {e}")))
}

fn check_n(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(config_err("--n must be at least 1"));
    }
    Ok(())
}

fn check_replicates(r: usize) -> Result<(), CliError> {
    if r == 0 {
        return Err(config_err("--replicates must be at least 1"));
    }
    Ok(())
}

/// Checks `q` in `(0, 1)`, the range of every infinite-permutation sampler.
fn check_q_open(q: f64) -> Result<(), CliError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(config_err(format!("--q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// Finite Mallows parameters for any `q > 0`. For `q > 1` the sampler runs
/// at `1/q` and the result is reversed, which has the Mallows(n, q) law.
fn finite_params(n: usize, q: f64) -> Result<(MallowsParams, bool), CliError> {
    check_n(n)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(config_err(format!("--q must be positive and finite, got {q}")));
    }
    let reversed = q > 1.0;
    let params = MallowsParams::new(n, if reversed { 1.0 / q } else { q }).map_err(config_err)?;
    Ok((params, reversed))
}

fn draw(params: &MallowsParams, reversed: bool, side: mallows_core::Side, rng: &mut RngStream) -> Permutation {
    let s = sample_mallows(params, side, rng);
    if reversed {
        s.reverse()
    } else {
        s
    }
}

fn spaced(p: &Permutation) -> String {
    let v: Vec<String> = p.values().iter().map(usize::to_string).collect();
    v.join(" ")
}

/// Rejects patterns whose count would need the exhaustive counter on more
/// than its subset budget.
fn check_countable(pi: &Permutation, n: usize) -> Result<(), CliError> {
    let r = pi.len();
    let fast = r <= 3 || pi.is_identity() || pi.reverse().is_identity();
    if !fast && r <= n && binomial(n, r) > BigUint::from(DEFAULT_BUDGET) {
        return Err(config_err(format!(
            "counting a pattern of size {r} in size {n} needs C({n}, {r}) subsets, above the budget of {DEFAULT_BUDGET}"
        )));
    }
    Ok(())
}

fn format_or(o: &OutputArgs, default: Format) -> Format {
    o.format.unwrap_or(default)
}

pub fn sample(a: SampleArgs) -> Result<Status, CliError> {
    let (params, reversed) = finite_params(a.n, a.q)?;
    check_replicates(a.replicates)?;
    let format = format_or(&a.output, Format::Lines);
    let perms = run_replicates(a.seed, 0, a.replicates, |rng| draw(&params, reversed, a.side, rng));
    if format == Format::Lines {
        return with_writer(a.output.out.as_ref(), |w| {
            for p in &perms {
                writeln!(w, "{}", spaced(p)).map_err(run_err)?;
            }
            Ok(())
        })
        .map(|()| Status::Ok);
    }
    let mut t = Table::new(&["replicate", "n", "q", "inv", "permutation"]);
    for (i, p) in perms.iter().enumerate() {
        t.push(vec![
            Cell::int(i as u64),
            Cell::int(a.n as u64),
            Cell::real(a.q),
            Cell::int(p.inv()),
            Cell::Text(spaced(p)),
        ]);
    }
    emit(&t, format, a.output.out.as_ref()).map(|()| Status::Ok)
}

pub fn count(a: CountArgs) -> Result<Status, CliError> {
    let pi = parse_perm("pattern", &a.pattern)?;
    let format = format_or(&a.output, Format::Csv);
    let mut t = Table::new(&["replicate", "n", "q", "pattern", "occ"]);
    let rows: Vec<(Option<f64>, usize, BigUint)> = match &a.perm {
        Some(s) => {
            let p = parse_perm("permutation", s)?;
            check_countable(&pi, p.len())?;
            vec![(None, p.len(), occ(&pi, &p).map_err(run_err)?)]
        }
        None => {
            let (n, q) = (a.n.unwrap_or(0), a.q.unwrap_or(f64::NAN));
            let (params, reversed) = finite_params(n, q)?;
            check_replicates(a.replicates)?;
            check_countable(&pi, n)?;
            run_replicates(a.seed, 0, a.replicates, |rng| {
                occ(&pi, &draw(&params, reversed, mallows_core::Side::Left, rng))
            })
            .into_iter()
            .map(|c| c.map(|c| (Some(q), n, c)).map_err(run_err))
            .collect::<Result<_, _>>()?
        }
    };
    for (i, (q, n, c)) in rows.into_iter().enumerate() {
        t.push(vec![
            Cell::int(i as u64),
            Cell::int(n as u64),
            Cell::Real(q),
            Cell::Text(pi.label()),
            Cell::Int(c),
        ]);
    }
    emit(&t, format, a.output.out.as_ref()).map(|()| Status::Ok)
}

pub fn blocks(a: BlocksArgs) -> Result<Status, CliError> {
    check_n(a.n)?;
    check_q_open(a.q)?;
    check_replicates(a.replicates)?;
    let format = format_or(&a.output, Format::Csv);
    let samples = run_replicates(a.seed, 0, a.replicates, |rng| sample_block_sum(a.n, a.q, rng))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(run_err)?;
    let mut t = Table::new(&["replicate", "index", "kind", "start", "size", "permutation"]);
    for (i, s) in samples.iter().enumerate() {
        let parts = s
            .blocks
            .iter()
            .map(|b| ("block", b))
            .chain(s.remainder.iter().map(|r| ("remainder", r)));
        let mut start = 1;
        for (k, (kind, p)) in parts.enumerate() {
            t.push(vec![
                Cell::int(i as u64),
                Cell::int(k as u64 + 1),
                Cell::Text(kind.into()),
                Cell::int(start as u64),
                Cell::int(p.len() as u64),
                Cell::Text(spaced(p)),
            ]);
            start += p.len();
        }
    }
    emit(&t, format, a.output.out.as_ref()).map(|()| Status::Ok)
}

pub fn coupled(a: CoupledArgs) -> Result<Status, CliError> {
    check_n(a.n)?;
    if !(a.q > 0.0 && a.q <= 1.0) {
        return Err(config_err(format!("--q must lie in (0, 1], got {}", a.q)));
    }
    check_replicates(a.replicates)?;
    let format = format_or(&a.output, Format::Csv);
    let pairs = run_replicates(a.seed, 0, a.replicates, |rng| sample_coupled(a.n, a.q, rng))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(run_err)?;
    let mut t = Table::new(&["replicate", "n", "q", "error_count", "errors", "tau", "u"]);
    for (i, p) in pairs.iter().enumerate() {
        let errors: Vec<String> = p.errors.iter().map(usize::to_string).collect();
        t.push(vec![
            Cell::int(i as u64),
            Cell::int(a.n as u64),
            Cell::real(a.q),
            Cell::int(p.error_count() as u64),
            Cell::Text(errors.join(" ")),
            Cell::Text(spaced(&p.tau)),
            Cell::Text(spaced(&p.u)),
        ]);
    }
    emit(&t, format, a.output.out.as_ref()).map(|()| Status::Ok)
}

pub fn process(a: ProcessArgs) -> Result<Status, CliError> {
    let pi = parse_perm("pattern", &a.pattern)?;
    check_n(a.n)?;
    let grid = a.grid.0;
    if grid.iter().any(|&t| !(0.0..1.0).contains(&t)) {
        return Err(config_err("grid times must lie in [0, 1)"));
    }
    let horizon = grid.iter().copied().fold(0.0, f64::max);
    if horizon == 0.0 {
        return Err(config_err("the grid needs a time above 0"));
    }
    check_countable(&pi, a.n)?;
    let format = format_or(&a.output, Format::Csv);

    let prefix = ProcessPrefix::sample(a.n, horizon, &mut RngStream::new(a.seed, 0)).map_err(run_err)?;
    let e = if a.block_samples > 0 {
        let estimates = grid
            .iter()
            .enumerate()
            .map(|(g, &t)| {
                // At time 0 the permutation is the identity.
                if t == 0.0 {
                    return Ok(if pi.is_identity() { 1.0 } else { 0.0 });
                }
                let feat = BlockFeatures::collect(t, std::slice::from_ref(&pi), a.block_samples, sub_seed(a.seed, g as u64 + 1))?;
                e_from_features(&feat, &pi).map(|e| e.estimate)
            })
            .collect::<Result<Vec<f64>, _>>()
            .map_err(run_err)?;
        Some(estimates)
    } else {
        None
    };
    let rows = occ_process(&pi, a.n, &grid, &prefix, e.as_deref()).map_err(run_err)?;
    let mut t = Table::new(&["t", "occ", "e_estimate", "centered"]);
    for r in rows {
        t.push(vec![
            Cell::real(r.t),
            Cell::Int(r.occ),
            Cell::Real(r.e_estimate),
            Cell::Real(r.centered),
        ]);
    }
    emit(&t, format, a.output.out.as_ref()).map(|()| Status::Ok)
}

/// `(q; q)_inf`, the reciprocal of the mean block size.
fn q_pochhammer_inf(q: f64) -> f64 {
    let mut prod = 1.0;
    let mut qk = q;
    while qk > 1e-18 {
        prod *= 1.0 - qk;
        qk *= q;
    }
    prod
}

pub fn estimate(a: EstimateArgs) -> Result<Status, CliError> {
    let pi = parse_perm("pattern", &a.pattern)?;
    check_q_open(a.q)?;
    if a.replicates < 2 {
        return Err(config_err("--replicates must be at least 2"));
    }
    let format = format_or(&a.output, Format::Csv);
    let feat = BlockFeatures::collect(a.q, std::slice::from_ref(&pi), a.replicates, a.seed).map_err(run_err)?;
    let mut rows = Vec::new();

    let (v, se) = feat.data.batched(|v| vec![1.0 / v.mean[0]]);
    let target = q_pochhammer_inf(a.q);
    rows.push(StatRow::check(
        "inverse_mean_block_size",
        v[0],
        Some(se[0]),
        target,
        (v[0] - target).abs() <= 3.0 * se[0],
    ));

    let e = e_from_features(&feat, &pi).map_err(run_err)?;
    rows.push(if pi.label() == "21" {
        let target = a.q / (1.0 - a.q);
        StatRow::check("e", e.estimate, Some(e.se), target, (e.estimate - target).abs() <= 3.0 * e.se)
    } else {
        StatRow::info("e", e.estimate, Some(e.se))
    });

    let d = pi.block_decomposition().len();
    let g = gamma_matrix_from_features(&feat, d, std::slice::from_ref(&pi)).map_err(run_err)?;
    rows.push(StatRow::info(format!("gamma[d={d}]"), g.matrix[0][0], Some(g.se[0][0])));

    emit(&Table::from_stats(&rows), format, a.output.out.as_ref()).map(|()| Status::Ok)
}

pub fn experiment(a: ExperimentArgs) -> Result<Status, CliError> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| config_err(format!("{}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(config_err)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    cfg.validate().map_err(config_err)?;
    let format = format_or(&a.output, Format::Csv);
    if format == Format::Lines {
        return Err(config_err("the lines format is only available for sample"));
    }
    let report = run_regime_experiment(&cfg).map_err(run_err)?;
    match format {
        Format::Json => with_writer(a.output.out.as_ref(), |w| {
            let json = report.to_json().map_err(run_err)?;
            writeln!(w, "{json}").map_err(run_err)
        })?,
        _ => emit(&Table::from_stats(&report.rows), format, a.output.out.as_ref())?,
    }
    Ok(if report.passed() {
        Status::Ok
    } else {
        Status::ThresholdsFailed
    })
}
