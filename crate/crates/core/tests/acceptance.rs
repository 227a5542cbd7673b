//! Acceptance suite. Each test prints one PASS/FAIL line straight to stderr
//! (bypassing output capture) and then asserts the same condition.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use common::{fista_closest, unit_trace_hermitian_scaled};
use distilkit::activation::{
    activation_witness, apply_activation, compose_target, jam_check, search_activator,
    ActivationInstance, SearchBudget,
};
use distilkit::distillability::{f2, is_ppt, single_copy_distillable, SearchOptions};
use distilkit::linalg::{eigvalsh, max_abs_entry, min_eigenvalue, trace_norm_hermitian, trace_product};
use distilkit::states::{
    isotropic, max_entangled, partial_trace, partial_transpose, phi_projector, random_hermitian,
    random_induced, random_multi_pair, random_ppt, werner, BipartiteState,
};
use distilkit::symmetry::{conjugate, definetti_bound, mixture_of_powers, symmetrize, Ensemble, Permutation};
use distilkit::tomography::{
    chernoff_tail, closest_density, estimation_pipeline, minimal_ic_povm, pair_frame, PipelineOptions,
    Source, Verdict,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{tag} [{id:>2}] {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

#[test]
fn criterion_01_partial_transpose_spectrum() {
    let t = Instant::now();
    let mut residual = 0.0f64;
    let mut multiplicities_ok = true;
    for d in 2..=4 {
        let eig = eigvalsh(&partial_transpose(&max_entangled(d)));
        let x = 1.0 / d as f64;
        let pos = eig.iter().filter(|&&l| (l - x).abs() <= 1e-12).count();
        let neg = eig.iter().filter(|&&l| (l + x).abs() <= 1e-12).count();
        multiplicities_ok &= pos == d * (d + 1) / 2 && neg == d * (d - 1) / 2;
        for l in eig {
            residual = residual.max((l.abs() - x).abs());
        }
    }
    let el = t.elapsed();
    report(
        1,
        "partial-transpose spectrum of φ_d",
        multiplicities_ok && residual <= 1e-12 && el < Duration::from_secs(1),
        format!("multiplicities ok {multiplicities_ok}, residual {residual:.1e} (tol 1e-12), {}", secs(el)),
    );
}

#[test]
fn criterion_02_ppt_states_get_no_singlet_boost() {
    let t = Instant::now();
    let opts = SearchOptions::default();
    let results: Vec<(f64, bool)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let d = if i < 100 { 2 } else { 3 };
            let mut rng = distilkit::seeded_rng(20_000 + i);
            let s = random_ppt(&mut rng, d, 2 * d * d, 100_000).unwrap();
            let v = f2(&s, &opts, i).unwrap().value;
            let single = single_copy_distillable(&s, &opts, i).unwrap();
            (v, !single.budget_exhausted)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let violations = results.iter().filter(|r| r.1).count();
    let el = t.elapsed();
    report(
        2,
        "PPT states: f2 <= 1/2 and no single-copy violation",
        worst <= 0.5 + 1e-6 && violations == 0 && el < Duration::from_secs(300),
        format!("200 states, max f2 {worst:.9} (tol 0.5+1e-6), violations {violations}, {}", secs(el)),
    );
}

#[test]
fn criterion_03_werner_threshold() {
    let t = Instant::now();
    let opts = SearchOptions::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for i in 0..=20 {
        let p = i as f64 * 0.05;
        let w = werner(2, p);
        let v = f2(&w, &opts, i).unwrap().value;
        let (ppt, _) = is_ppt(&w);
        let above = v > 0.5 + 1e-6;
        let pass = if i >= 11 {
            v > 0.5 + 1e-4
        } else if i <= 9 {
            v <= 0.5 + 1e-6
        } else {
            true
        } && above != ppt;
        if !pass {
            notes.push(format!("p={p:.2}: f2 {v}, ppt {ppt}"));
        }
        ok &= pass;
    }
    let el = t.elapsed();
    report(
        3,
        "Werner d=2 threshold at p = 1/2",
        ok && el < Duration::from_secs(60),
        format!("21 grid points, mismatches {:?}, {}", notes, secs(el)),
    );
}

#[test]
fn criterion_04_symmetrization_channel() {
    let mut rng = distilkit::seeded_rng(4);
    let perms = Permutation::all(3);
    let (mut idem, mut inv, mut marg) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let w = random_multi_pair(&mut rng, 2, 2, 3);
        let s = symmetrize(&w);
        idem = idem.max(max_abs_entry(&(symmetrize(&s).matrix() - s.matrix())));
        for p in &perms {
            let c = conjugate(p, &s).unwrap();
            inv = inv.max(max_abs_entry(&(c.matrix() - s.matrix())));
        }
        let m0 = partial_trace(&s, &[0]).unwrap();
        for j in 1..3 {
            let mj = partial_trace(&s, &[j]).unwrap();
            marg = marg.max(max_abs_entry(&(mj.matrix() - m0.matrix())));
        }
    }
    report(
        4,
        "symmetrization: idempotent, permutation invariant, equal marginals",
        idem <= 1e-12 && inv <= 1e-12 && marg <= 1e-12 && perms.len() == 6,
        format!("50 states, residuals {idem:.1e} / {inv:.1e} / {marg:.1e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_05_mixture_of_powers() {
    let mut rng = distilkit::seeded_rng(5);
    let perms2 = Permutation::all(2);
    let perms3 = Permutation::all(3);
    let (mut sym, mut marg, mut ppt_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for e in 0..40 {
        let all_ppt = e >= 20;
        let members: Vec<BipartiteState> = (0..3)
            .map(|_| {
                if all_ppt {
                    random_ppt(&mut rng, 2, 8, 100_000).unwrap()
                } else {
                    random_induced(&mut rng, 2, 2, 4)
                }
            })
            .collect();
        let raw: Vec<f64> = (0..3).map(|i| 1.0 + i as f64 + e as f64 % 3.0).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        weights[2] = 1.0 - weights[0] - weights[1];
        let ens = Ensemble::new(weights, members).unwrap();
        let avg = ens.average();
        for k in [2, 3] {
            let s = mixture_of_powers(&ens, k).unwrap();
            let perms = if k == 2 { &perms2 } else { &perms3 };
            for p in perms {
                sym = sym.max(max_abs_entry(&(conjugate(p, &s).unwrap().matrix() - s.matrix())));
            }
            for j in 0..k {
                let m = partial_trace(&s, &[j]).unwrap();
                marg = marg.max(max_abs_entry(&(m.matrix() - avg.matrix())));
            }
            if all_ppt {
                ppt_min = ppt_min.min(is_ppt(&s).1);
            }
        }
    }
    report(
        5,
        "mixtures of powers: symmetric, marginals equal the average, PPT preserved",
        sym <= 1e-12 && marg <= 1e-12 && ppt_min >= -1e-9,
        format!(
            "40 ensembles x k=2,3, symmetry {sym:.1e}, marginal {marg:.1e} (tol 1e-12), min PT eigenvalue of PPT mixtures {ppt_min:.3e} (tol -1e-9)"
        ),
    );
}

#[test]
fn criterion_06_definetti_bound() {
    let v = definetti_bound(2, 1, 100).unwrap();
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    // 20 points: growing in k at fixed n, then shrinking in n at fixed k
    for k in 1..=10 {
        let b = definetti_bound(3, k, 50).unwrap();
        monotone &= b > prev;
        prev = b;
    }
    prev = f64::INFINITY;
    for i in 0..10 {
        let b = definetti_bound(3, 2, 10 + 10 * i).unwrap();
        monotone &= b < prev;
        prev = b;
    }
    report(
        6,
        "de Finetti bound formula",
        v == 0.64 && monotone,
        format!("bound(2,1,100) = {v}, monotone over 20 points {monotone}"),
    );
}

#[test]
fn criterion_07_frame_roundtrip() {
    let mut rng = distilkit::seeded_rng(7);
    let mut worst = 0.0f64;
    for m in 2..=4 {
        let f = minimal_ic_povm(m).unwrap();
        for _ in 0..100 {
            let x = random_hermitian(&mut rng, m);
            let back = f.invert(&f.probabilities(&x));
            worst = worst.max(trace_norm_hermitian(&(&back - &x)));
        }
    }
    let pf = pair_frame(2, 2).unwrap();
    let phi = max_entangled(2);
    let prod = trace_norm_hermitian(&(pf.invert(&pf.probabilities(phi.matrix())) - phi.matrix()));
    report(
        7,
        "dual-frame roundtrip",
        worst <= 1e-9 && prod <= 1e-9,
        format!("m=2,3,4 x 100 Hermitian, max trace-norm error {worst:.1e}; product frame on φ₂ {prod:.1e} (tol 1e-9)"),
    );
}

#[test]
fn criterion_08_tomography_convergence() {
    let t = Instant::now();
    let w = werner(2, 0.75);
    let opts = |shots| PipelineOptions {
        n: 1,
        shots,
        search: SearchOptions {
            restarts: 8,
            iters: 300,
            tol: 1e-10,
        },
    };
    let mut medians = Vec::new();
    let mut tail_ok = true;
    let mut tail_notes = Vec::new();
    for shots in [100u64, 1_000, 10_000, 100_000] {
        let runs: Vec<(f64, f64)> = (0..50u64)
            .into_par_iter()
            .map(|seed| {
                let r = estimation_pipeline(&Source::State(w.clone()), &opts(shots), 800 + seed).unwrap();
                (r.trace_distance, r.deviation)
            })
            .collect();
        let mut td: Vec<f64> = runs.iter().map(|r| r.0).collect();
        td.sort_by(f64::total_cmp);
        medians.push((td[24] + td[25]) / 2.0);
        let bound = chernoff_tail(0.1, shots, 16).unwrap().bound;
        if bound < 1.0 {
            let rate = runs.iter().filter(|r| r.1 > 0.1).count() as f64 / 50.0;
            tail_ok &= rate <= bound;
            tail_notes.push(format!("n={shots}: rate {rate} vs bound {bound:.2e}"));
        }
    }
    let monotone = medians.windows(2).all(|p| p[1] <= p[0]);
    let last = *medians.last().unwrap();
    let el = t.elapsed();
    report(
        8,
        "tomography convergence on Werner(0.75)",
        last <= 0.05 && monotone && tail_ok && el < Duration::from_secs(600),
        format!(
            "median trace distance {:?} (<= 0.05 at 1e5, nonincreasing {monotone}); tail {:?}; {}",
            medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            tail_notes,
            secs(el)
        ),
    );
}

#[test]
fn criterion_09_pipeline_sign() {
    let search = SearchOptions {
        restarts: 8,
        iters: 300,
        tol: 1e-10,
    };
    let opts = PipelineOptions {
        n: 1,
        shots: 100_000,
        search,
    };
    let mut rng = distilkit::seeded_rng(9);
    let ppt = random_ppt(&mut rng, 2, 8, 100_000).unwrap();
    let r = estimation_pipeline(&Source::State(ppt), &opts, 1).unwrap();
    let ppt_ok = r.f_m == 0.0 && r.verdict == Verdict::NoViolation;
    let mut notes = vec![format!("ppt f_m {}", r.f_m)];
    let mut ok = ppt_ok;
    for (name, s) in [("φ₂", max_entangled(2)), ("Werner(0.75)", werner(2, 0.75))] {
        let direct = 0.5 - f2(&s, &SearchOptions::default(), 0).unwrap().value;
        let r = estimation_pipeline(&Source::State(s), &opts, 2).unwrap();
        let gap = (r.f_m - direct).abs();
        ok &= gap <= 0.02;
        notes.push(format!("{name} f_m {:.4} vs {direct:.4} (gap {gap:.4})", r.f_m));
    }
    report(9, "pipeline sign at 1e5 shots", ok, format!("{}, tol 0.02", notes.join("; ")));
}

#[test]
fn criterion_10_jamiolkowski_identity() {
    let mut rng = distilkit::seeded_rng(10);
    let mut worst = 0.0f64;
    let mut c_min = f64::INFINITY;
    let mut c_spread = 0.0f64;
    let mut triples = 0;
    for d in [2, 3] {
        for i in 0..20 {
            let inst = ActivationInstance::new(
                random_induced(&mut rng, d, d, 1 + i % 4),
                random_induced(&mut rng, 2 * d, 2 * d, 1 + i % 5),
            )
            .unwrap();
            let j = jam_check(&inst, 5, 1000 + i as u64).unwrap();
            triples += j.used;
            worst = worst.max(j.max_relative_deviation);
            c_min = c_min.min(j.c);
            c_spread = c_spread.max((j.c - 1.0).abs());
        }
    }
    report(
        10,
        "Jamiolkowski proportionality",
        worst <= 1e-9 && c_min > 0.0 && triples >= 200,
        format!("{triples} triples at d=2,3, max relative deviation {worst:.1e} (tol 1e-9), min c {c_min:.12}, |c-1| <= {c_spread:.1e}"),
    );
}

#[test]
fn criterion_11_activation_sign_equivalence() {
    let mut rng = distilkit::seeded_rng(11);
    let mut agree = 0;
    let mut decided = 0;
    let mut negatives = 0;
    for i in 0..100 {
        let rho = random_induced(&mut rng, 2, 2, 1 + i % 3);
        let sigma = random_induced(&mut rng, 4, 4, 1 + i % 2);
        let w = activation_witness(&rho, &sigma).unwrap();
        let inst = ActivationInstance::new(rho, sigma).unwrap();
        let (out, weight) = apply_activation(&inst).unwrap();
        let fid = trace_product(&out, &phi_projector(2)).re / weight;
        if w.abs() > 1e-9 {
            decided += 1;
            agree += ((w < 0.0) == (fid > 0.5)) as usize;
        }
        negatives += (w < 0.0) as usize;
    }
    let target = compose_target(&BipartiteState::maximally_mixed(2, 2, 1), &max_entangled(2)).unwrap();
    let found = search_activator(&target, &SearchBudget::default(), 0).unwrap();
    report(
        11,
        "activation witness sign equals fidelity > 1/2",
        agree == decided && found.fidelity >= 1.0 - 1e-9,
        format!(
            "{agree}/{decided} agree outside ±1e-9 ({negatives} negative); embedded φ₂ search fidelity {:.12}",
            found.fidelity
        ),
    );
}

#[test]
fn criterion_12_closest_state_optimality() {
    let t = Instant::now();
    let gaps: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let scale = [0.1, 0.3, 1.0][i as usize % 3];
            let x = unit_trace_hermitian_scaled(1200 + i, 4, scale);
            let (sigma, _) = closest_density(&x).unwrap();
            assert!(min_eigenvalue(&sigma) >= -1e-12);
            let ours = trace_norm_hermitian(&(&sigma - &x));
            (ours - fista_closest(&x)).abs()
        })
        .collect();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    report(
        12,
        "closest_state matches projected-gradient oracle",
        worst <= 1e-6,
        format!("100 inputs, max objective gap {worst:.1e} (tol 1e-6), {}", secs(t.elapsed())),
    );
}

#[test]
fn ppt_source_is_strictly_inside() {
    // the PPT source of criterion 9 sits well inside the PPT set
    let mut rng = distilkit::seeded_rng(9);
    let ppt = random_ppt(&mut rng, 2, 8, 100_000).unwrap();
    assert!(is_ppt(&ppt).1 > 0.0);
    assert!(is_ppt(&isotropic(2, 0.5)).0);
}
