use rayon::prelude::*;

use distilkit::distillability as dist;
use distilkit::tomography::{self as tomo, PipelineOptions, Source, Verdict};

use crate::args::{Family, SweepArgs, SweepOver, SweepParam};
use crate::output::{csv_err, csv_writer, sig12, CliError, Context, Staged};

fn grid(a: &SweepArgs) -> Result<Vec<f64>, CliError> {
    let values = match (&a.values, a.from, a.to, a.step) {
        (Some(v), _, _, _) => v.clone(),
        (None, Some(from), Some(to), Some(step)) => {
            if !(step > 0.0) || to < from {
                Vec::new()
            } else {
                let n = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| from + i as f64 * step).collect()
            }
        }
        _ => return Err(CliError::Usage("give --from/--to/--step or --values".into())),
    };
    if values.is_empty() {
        return Err(CliError::Usage("sweep range is empty".into()));
    }
    Ok(values)
}

fn header(over: SweepOver) -> &'static [&'static str] {
    match over {
        SweepOver::F2 => &["f2", "budget_exhausted"],
        SweepOver::Ppt => &["ppt", "min_eigenvalue"],
        SweepOver::Undistill1 => &["schmidt_value", "violation"],
        SweepOver::TomoPipeline => &[
            "verdict",
            "f_m",
            "trace_distance",
            "projection_distance",
            "deviation",
            "chernoff",
        ],
    }
}

fn row(a: &SweepArgs, value: f64, seed: u64) -> Result<Vec<String>, CliError> {
    let mut family = a.family.clone();
    let mut shots = a.shots;
    match a.param {
        SweepParam::P => {
            family.family.get_or_insert(Family::Werner);
            family.p = Some(value);
        }
        SweepParam::F => {
            family.family.get_or_insert(Family::Isotropic);
            family.f = Some(value);
        }
        SweepParam::Shots => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(CliError::Usage(format!("shots must be a positive integer, got {value}")));
            }
            shots = value as u64;
        }
    }
    let state = family.build(seed)?;
    let opts = a.search.options();
    Ok(match a.over {
        SweepOver::F2 => {
            let r = dist::f2(&state, &opts, seed).stage("f2")?;
            vec![sig12(r.value), r.budget_exhausted.to_string()]
        }
        SweepOver::Ppt => {
            let (ppt, m) = dist::is_ppt(&state);
            vec![ppt.to_string(), sig12(m)]
        }
        SweepOver::Undistill1 => {
            let r = dist::single_copy_distillable(&state, &opts, seed).stage("undistill1")?;
            vec![sig12(r.value), (!r.budget_exhausted).to_string()]
        }
        SweepOver::TomoPipeline => {
            let p = PipelineOptions { n: 1, shots, search: opts };
            let r = tomo::estimation_pipeline(&Source::State(state), &p, seed).stage("tomo-pipeline")?;
            let verdict = match r.verdict {
                Verdict::Distillable => "distillable",
                Verdict::NoViolation => "no_violation",
            };
            vec![
                verdict.into(),
                sig12(r.f_m),
                sig12(r.trace_distance),
                sig12(r.projection_distance),
                sig12(r.deviation),
                sig12(r.chernoff),
            ]
        }
    })
}

/// One CSV row per (value, repeat); row `i` runs with seed `base + i`.
pub fn run(ctx: &Context, a: &SweepArgs) -> Result<bool, CliError> {
    let values = grid(a)?;
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be >= 1".into()));
    }
    if a.param == SweepParam::Shots && a.over != SweepOver::TomoPipeline {
        return Err(CliError::Usage("a shots sweep needs --over tomo-pipeline".into()));
    }
    ctx.require_out()?;
    let jobs: Vec<(usize, usize, f64)> = values
        .iter()
        .enumerate()
        .flat_map(|(vi, &v)| (0..a.repeats).map(move |r| (vi * a.repeats + r, r, v)))
        .collect();
    let rows: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|&(i, r, v)| {
            let seed = ctx.seed.wrapping_add(i as u64);
            let mut cells = vec![i.to_string(), sig12(v), r.to_string(), seed.to_string()];
            cells.extend(row(a, v, seed)?);
            Ok(cells)
        })
        .collect::<Result<_, CliError>>()?;

    let mut w = csv_writer(ctx, a)?;
    let param = match a.param {
        SweepParam::P => "p",
        SweepParam::F => "f",
        SweepParam::Shots => "shots",
    };
    let mut head = vec!["row", param, "repeat", "seed"];
    head.extend_from_slice(header(a.over));
    w.write_record(&head).map_err(csv_err)?;
    for r in &rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    println!("sweep: {} rows{}", rows.len(), ctx.out_note());
    Ok(false)
}
