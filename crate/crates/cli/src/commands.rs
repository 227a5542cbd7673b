use serde::Serialize;
use serde_json::json;

use distilkit::activation::{
    activation_witness, apply_activation, jam_check, search_activator, ActivationInstance,
    SearchBudget,
};
use distilkit::distillability::{self as dist, WitnessReport};
use distilkit::linalg::{trace_product, MatrixJson};
use distilkit::states::{self, phi_projector};
use distilkit::symmetry::{self, EnsembleFile, MixtureSearch};
use distilkit::tomography::{self as tomo, PipelineOptions, Source, Verdict};

use crate::args::*;
use crate::output::{csv_err, csv_writer, sig12, CliError, Context, Staged};

type Outcome = Result<bool, CliError>;

pub fn state(ctx: &Context, a: &FamilyArgs) -> Outcome {
    let s = a.build(ctx.seed)?;
    ctx.write_json(a, &json!({ "state": s }))?;
    println!(
        "state {}x{} on {} pair(s){}",
        s.dim_a(),
        s.dim_b(),
        s.pairs(),
        ctx.out_note()
    );
    Ok(false)
}

fn witness_summary(ctx: &Context, what: &str, r: &WitnessReport) {
    let verdict = if r.budget_exhausted { "no violation found" } else { "violation" };
    println!("{what} {} ({verdict}){}", sig12(r.value), ctx.out_note());
}

pub fn f2(ctx: &Context, a: &SearchCmd) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let r = dist::f2(&s, &a.search.options(), ctx.seed).stage("f2")?;
    ctx.write_json(a, &r)?;
    witness_summary(ctx, "f2", &r);
    Ok(!r.budget_exhausted)
}

pub fn fd(ctx: &Context, a: &FdArgs) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let lambda = a.lambda.unwrap_or(1.0 / a.target_dim.max(1) as f64);
    let r = dist::fd(&s, a.target_dim, lambda, &a.search.options(), ctx.seed).stage("fd")?;
    ctx.write_json(a, &r)?;
    witness_summary(ctx, "fd", &r);
    Ok(!r.budget_exhausted)
}

pub fn ppt(ctx: &Context, a: &StateArgs) -> Outcome {
    let s = a.load(ctx.seed)?;
    let (ppt, min_eig) = dist::is_ppt(&s);
    ctx.write_json(a, &json!({ "ppt": ppt, "min_eigenvalue": min_eig }))?;
    println!(
        "ppt {} (min eigenvalue {}){}",
        ppt,
        sig12(min_eig),
        ctx.out_note()
    );
    Ok(!ppt)
}

pub fn undistill1(ctx: &Context, a: &SearchCmd) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let r = dist::single_copy_distillable(&s, &a.search.options(), ctx.seed).stage("undistill1")?;
    ctx.write_json(a, &r)?;
    witness_summary(ctx, "schmidt-rank-2 value", &r);
    Ok(!r.budget_exhausted)
}

pub fn ncopy(ctx: &Context, a: &NcopyArgs) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let r = dist::n_copy_distillable(&s, a.n, &a.search.options(), ctx.seed).stage("ncopy")?;
    ctx.write_json(a, &r)?;
    witness_summary(ctx, &format!("{}-copy schmidt-rank-2 value", a.n), &r);
    Ok(!r.budget_exhausted)
}

pub fn symmetrize(ctx: &Context, a: &SymmetrizeArgs) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let before = symmetry::symmetry_residual(&s);
    let out = if a.double {
        symmetry::double_symmetrize(&s)
    } else {
        symmetry::symmetrize(&s)
    };
    let after = symmetry::symmetry_residual(&out);
    ctx.write_json(
        a,
        &json!({ "state": out, "residual_before": before, "residual_after": after }),
    )?;
    println!(
        "symmetrized {} pairs, residual {} -> {}{}",
        s.pairs(),
        sig12(before),
        sig12(after),
        ctx.out_note()
    );
    Ok(false)
}

pub fn mixpow(ctx: &Context, a: &MixpowArgs) -> Outcome {
    let e = load_ensemble(&a.ensemble)?;
    let s = symmetry::mixture_of_powers(&e, a.k).stage("mixpow")?;
    let (ppt, min_eig) = dist::is_ppt(&s);
    let residual = symmetry::symmetry_residual(&s);
    ctx.write_json(
        a,
        &json!({ "state": s, "symmetry_residual": residual, "ppt": ppt, "min_eigenvalue": min_eig }),
    )?;
    println!(
        "mixture of {} members on {} pairs, ppt {}{}",
        e.len(),
        a.k,
        ppt,
        ctx.out_note()
    );
    Ok(false)
}

pub fn definetti(ctx: &Context, a: &DefinettiArgs) -> Outcome {
    let b = symmetry::definetti_bound(a.d, a.k, a.n).stage("definetti-bound")?;
    ctx.write_json(a, &json!({ "bound": b }))?;
    println!("{b}");
    Ok(false)
}

pub fn defclose(ctx: &Context, a: &DefcloseArgs) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let opts = MixtureSearch {
        restarts: a.restarts,
        iters: a.iters,
        support: a.support,
        seed: ctx.seed,
    };
    let (dist, ensemble) = symmetry::best_product_mixture_distance(&s, &opts).stage("defclose")?;
    let bound = match a.parent_n {
        Some(n) => Some(symmetry::definetti_bound(s.dim_a().max(s.dim_b()), s.pairs(), n).stage("defclose")?),
        None => None,
    };
    ctx.write_json(
        a,
        &json!({ "distance": dist, "bound": bound, "ensemble": EnsembleFile::from(&ensemble) }),
    )?;
    println!("distance to product-power mixtures {}{}", sig12(dist), ctx.out_note());
    Ok(false)
}

pub fn tomo_frame(ctx: &Context, a: &FrameArgs) -> Outcome {
    let frame = match a.dim_b {
        Some(b) => tomo::pair_frame(a.dim_a, b),
        None => tomo::minimal_ic_povm(a.dim_a),
    }
    .stage("tomo-frame")?;
    let elements: Vec<MatrixJson> = frame.elements().iter().map(MatrixJson::from).collect();
    let duals: Vec<MatrixJson> = frame.duals().iter().map(MatrixJson::from).collect();
    ctx.write_json(
        a,
        &json!({ "dim": frame.dim(), "outcomes": frame.len(), "elements": elements, "duals": duals }),
    )?;
    println!("frame on dimension {} with {} outcomes{}", frame.dim(), frame.len(), ctx.out_note());
    Ok(false)
}

#[derive(Serialize)]
struct CountRow {
    outcome_index: usize,
    count: u64,
}

pub fn tomo_sim(ctx: &Context, a: &TomoSimArgs) -> Outcome {
    let s = a.input.load(ctx.seed)?;
    let rho = states::partial_trace(&s, &[0]).stage("source")?;
    let frame = tomo::pair_frame(rho.dim_a(), rho.dim_b()).stage("measure")?;
    let counts = tomo::simulate_measurements(&rho, &frame, a.shots, ctx.seed).stage("measure")?;
    match a.format {
        Format::Csv => {
            let mut w = csv_writer(ctx, a)?;
            for (i, &c) in counts.counts().iter().enumerate() {
                w.serialize(CountRow { outcome_index: i, count: c }).map_err(csv_err)?;
            }
            w.flush().map_err(csv_err)?;
        }
        Format::Json => {
            ctx.require_out()?;
            ctx.write_json(a, &counts)?;
        }
    }
    println!("{} shots over {} outcomes{}", counts.shots(), counts.len(), ctx.out_note());
    Ok(false)
}

pub fn tomo_pipeline(ctx: &Context, a: &PipelineArgs) -> Outcome {
    let source = match &a.ensemble {
        Some(path) => Source::Ensemble(load_ensemble(path)?),
        None => Source::State(a.input.load(ctx.seed)?),
    };
    let opts = PipelineOptions {
        n: a.n,
        shots: a.shots,
        search: a.search.options(),
    };
    let r = tomo::estimation_pipeline(&source, &opts, ctx.seed).stage("tomo-pipeline")?;
    ctx.write_json(a, &r)?;
    let verdict = match r.verdict {
        Verdict::Distillable => "distillable",
        Verdict::NoViolation => "no violation",
    };
    println!(
        "{verdict}: f_m {} trace distance {}{}",
        sig12(r.f_m),
        sig12(r.trace_distance),
        ctx.out_note()
    );
    Ok(r.verdict == Verdict::Distillable)
}

pub fn chernoff(ctx: &Context, a: &ChernoffArgs) -> Outcome {
    let c = tomo::chernoff_tail(a.delta, a.n, a.cardinality).stage("chernoff")?;
    ctx.write_json(a, &c)?;
    println!("{}", sig12(c.bound));
    Ok(false)
}

fn instance(rho: &std::path::Path, sigma: &std::path::Path) -> Result<ActivationInstance, CliError> {
    ActivationInstance::new(load_state(rho)?, load_state(sigma)?).stage("activation")
}

const JAM_TOL: f64 = 1e-9;

pub fn activate_check(ctx: &Context, a: &ActivateCheckArgs) -> Outcome {
    let inst = instance(&a.rho, &a.sigma)?;
    let witness = activation_witness(inst.rho(), inst.sigma()).stage("witness")?;
    let (out, weight) = apply_activation(&inst).stage("protocol")?;
    let fidelity = trace_product(&out, &phi_projector(2)).re / weight;
    let jam = jam_check(&inst, a.trials, ctx.seed).stage("jam")?;
    ctx.write_json(
        a,
        &json!({
            "witness": witness,
            "fidelity": fidelity,
            "success_weight": weight,
            "rho": inst.rho(),
            "c": jam.c,
            "max_relative_deviation": jam.max_relative_deviation,
        }),
    )?;
    println!(
        "witness {} fidelity {}{}",
        sig12(witness),
        sig12(fidelity),
        ctx.out_note()
    );
    Ok(witness < -JAM_TOL)
}

pub fn activate_search(ctx: &Context, a: &ActivateSearchArgs) -> Outcome {
    let sigma = load_state(&a.sigma)?;
    let budget = SearchBudget {
        candidates: a.budget,
        sweep_points: a.sweep_points,
        random_fraction: a.random_fraction,
    };
    let r = search_activator(&sigma, &budget, ctx.seed).stage("activate-search")?;
    ctx.write_json(a, &r)?;
    let verdict = if r.budget_exhausted { "budget exhausted" } else { "activator found" };
    println!(
        "{verdict}: witness {} fidelity {} after {} candidates{}",
        sig12(r.witness),
        sig12(r.fidelity),
        r.evaluated,
        ctx.out_note()
    );
    Ok(!r.budget_exhausted)
}

pub fn jam(ctx: &Context, a: &JamArgs) -> Outcome {
    let inst = instance(&a.rho, &a.sigma)?;
    let j = jam_check(&inst, a.trials, ctx.seed).stage("jam-check")?;
    ctx.write_json(a, &j)?;
    println!(
        "c {} max relative deviation {}{}",
        sig12(j.c),
        sig12(j.max_relative_deviation),
        ctx.out_note()
    );
    if j.max_relative_deviation > JAM_TOL || j.c <= 0.0 {
        return Err(CliError::Numerical(format!(
            "proportionality deviation {:e} exceeds {JAM_TOL:e}",
            j.max_relative_deviation
        )));
    }
    Ok(false)
}
