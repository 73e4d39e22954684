//! Acceptance criteria 1-11, one pass/fail line each.
//!
//! The report goes to stderr and is visible under a plain `cargo test`.

use rand::{Rng, SeedableRng};
use std::io::Write;
use sphere_flows::combinat::{count_nc_trees, count_planar_trees, enumerate_nc_trees, enumerate_planar_trees};
use sphere_flows::field::{build_field, EquilibriumKind, Mode, RationalField, SpherePoint};
use sphere_flows::flow::{commutation_defect, cycle_period, integrate, integrate_original, IntegratorConfig, Verdict};
use sphere_flows::nondeg::{check_nondegeneracy, NondegConfig, Witness};
use sphere_flows::poly::C64;
use sphere_flows::portrait::{
    antipolynomial_trees, build_portraits, check_duality, reduced_connection_graph, Policies,
};
use sphere_flows::realize::{
    dual_pair_catalog, realize_antipolynomial, realize_polynomial, realize_rational, RealizeConfig,
};
use sphere_flows::separatrix::{
    blowup_quadrature, boundary_saddles, circle_tangencies, crossing_angles, trace_all,
    trace_boundary_separatrices, trace_pole_separatrices, BoundaryKind, Color, Separatrix,
    SeparatrixConfig, Terminal,
};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

/// Published prefixes of the two counting sequences.
const PLANAR_PUBLISHED: [u128; 9] = [1, 1, 2, 3, 6, 14, 34, 95, 280];
const NC_PUBLISHED: [u128; 8] = [1, 1, 3, 7, 28, 108, 507, 2431];
/// Closed-form values beyond the enumeration budget, frozen after the
/// closed form was checked against enumeration on the overlap.
const PLANAR_FROZEN: [(usize, u128); 4] = [(13, 8714), (14, 28640), (15, 95640), (16, 323396)];
const NC_FROZEN: [(usize, u128); 4] = [(10, 65169), (11, 351156), (12, 1926372), (13, 10746856)];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn terminal_id(s: &Separatrix) -> Option<usize> {
    match s.terminal {
        Some(Terminal::Equilibrium { id }) => Some(id),
        _ => None,
    }
}

fn wrap_pi(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn criterion_1() -> Check {
    for d in 2..=12 {
        let n = enumerate_planar_trees(d, Policies::STRICT).map_err(|e| e.to_string())?.len() as u128;
        if d <= 10 {
            ensure(n == PLANAR_PUBLISHED[d - 2], || format!("d={d}: enumerated {n}, published {}", PLANAR_PUBLISHED[d - 2]))?;
        }
        ensure(n == count_planar_trees(d), || format!("d={d}: enumerated {n}, closed form {}", count_planar_trees(d)))?;
    }
    for (d, v) in PLANAR_FROZEN {
        ensure(count_planar_trees(d) == v, || format!("d={d}: closed form {}", count_planar_trees(d)))?;
    }
    Ok(format!("enumeration = closed form for d=2..12, A_15 = {}", count_planar_trees(16)))
}

fn criterion_2() -> Check {
    for dp in 1..=9 {
        let n = enumerate_nc_trees(dp, true).map_err(|e| e.to_string())?.len() as u128;
        if dp <= 8 {
            ensure(n == NC_PUBLISHED[dp - 1], || format!("d'={dp}: enumerated {n}, published {}", NC_PUBLISHED[dp - 1]))?;
        }
        ensure(n == count_nc_trees(dp), || format!("d'={dp}: enumerated {n}, closed form {}", count_nc_trees(dp)))?;
    }
    for (dp, v) in NC_FROZEN {
        ensure(count_nc_trees(dp) == v, || format!("d'={dp}: closed form {}", count_nc_trees(dp)))?;
    }
    Ok("enumeration = closed form for d'=1..9, closed form to d'=13".into())
}

fn criterion_3() -> Check {
    let trees = enumerate_nc_trees(4, true).map_err(|e| e.to_string())?;
    let codes: std::collections::BTreeSet<String> = trees.iter().map(|t| t.canonical(true)).collect();
    let self_dual = trees.iter().filter(|t| t.is_self_dual(true)).count();
    ensure(codes.len() == 7, || format!("{} codes", codes.len()))?;
    ensure(self_dual == 3, || format!("{self_dual} self-dual"))?;
    Ok("7 codes, 3 self-dual".into())
}

fn criterion_4() -> Check {
    let f = build_field(&[c(1.0, 0.0), c(-1.0, 0.0)], &[], c(1.0, 0.0)).map_err(|e| e.to_string())?;
    let recs = f.classify();
    let kind_at = |w: C64| recs.iter().find(|r| r.location.as_w().is_some_and(|x| (x - w).norm() < 1e-12)).map(|r| r.kind);
    ensure(kind_at(c(1.0, 0.0)) == Some(EquilibriumKind::Source), || "+1 is not a source".into())?;
    ensure(kind_at(c(-1.0, 0.0)) == Some(EquilibriumKind::Sink), || "-1 is not a sink".into())?;
    let seps = trace_all(&f, &SeparatrixConfig::default()).map_err(|e| e.to_string())?;
    let p = build_portraits(&f, &seps).map_err(|e| e.to_string())?;
    ensure(seps.is_empty() && p.c_plus.num_edges() == 0 && p.c_minus.num_edges() == 0, || "portraits not empty".into())?;
    let cfg = IntegratorConfig::default();
    let tr = integrate(&f, SpherePoint::w(c(0.0, 0.1)), PI / 2.0, 10.0, &cfg).map_err(|e| e.to_string())?;
    let period = match tr.verdict {
        Verdict::Periodic { period } => period,
        v => return Err(format!("imaginary-time orbit: {v:?}")),
    };
    ensure((period - PI).abs() < 1e-5, || format!("period {period}"))?;
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let w0 = c(-0.8 + 0.4 * i as f64, -0.8 + 0.4 * j as f64);
            let d = commutation_defect(&f, SpherePoint::w(w0), 0.3, 0.3, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max(d);
        }
    }
    ensure(worst < 1e-7, || format!("commutation defect {worst:e}"))?;
    Ok(format!("period {period:.9}, max commutation defect {worst:.1e}"))
}

fn criterion_5() -> Check {
    let f = build_field(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], &[], c(1.0, 0.0))
        .map_err(|e| e.to_string())?;
    let centers: Vec<C64> = f
        .classify()
        .iter()
        .filter(|r| r.kind == EquilibriumKind::Center)
        .filter_map(|r| r.location.as_w())
        .collect();
    ensure(centers.len() == 2 && centers.iter().all(|w| w.re.abs() < 1e-12 && (w.im.abs() - 1.0).abs() < 1e-12), || {
        format!("centers {centers:?}")
    })?;
    let ti = cycle_period(&f, &[1]).map_err(|e| e.to_string())?;
    let tmi = cycle_period(&f, &[3]).map_err(|e| e.to_string())?;
    ensure((ti - c(-PI / 2.0, 0.0)).norm() < 1e-15 && (tmi - c(PI / 2.0, 0.0)).norm() < 1e-15, || {
        format!("cycle periods {ti} {tmi}")
    })?;
    let mut cfg = IntegratorConfig::default();
    cfg.detect_periodic = false;
    let mut closure: f64 = 0.0;
    for start in [c(0.1, 1.0), c(0.0, -0.85)] {
        let tr = integrate_original(&f, SpherePoint::w(start), 0.0, PI / 2.0, &cfg).map_err(|e| e.to_string())?;
        let end = tr.last().point.as_w().ok_or("orbit left the w chart")?;
        closure = closure.max((end - start).norm());
    }
    ensure(closure < 1e-5, || format!("closure error {closure:e}"))?;
    let r = check_nondegeneracy(&f, &NondegConfig::default());
    let subsets: Vec<Vec<usize>> = r
        .cond_iii
        .witnesses()
        .iter()
        .filter_map(|w| match w {
            Witness::Subset { subset, .. } => Some(subset.clone()),
            _ => None,
        })
        .collect();
    ensure(!r.cond_iii.passed() && subsets.contains(&vec![1]) && subsets.contains(&vec![3]), || {
        format!("cond_iii witnesses {subsets:?}")
    })?;
    Ok(format!("T(i) = {:.15}, T(-i) = {:.15}, closure {closure:.1e}", ti.re, tmi.re))
}

fn cubic(q: f64, theta: f64) -> RationalField {
    let e1 = C64::from_polar(1.0, theta);
    build_field(&[e1, -e1 * q], &[c(0.0, 0.0)], c(-1.0, 0.0)).expect("valid cubic example")
}

fn red_angles(f: &RationalField, cfg: &SeparatrixConfig) -> Result<Vec<f64>, String> {
    let seps = trace_pole_separatrices(f, 2, cfg).map_err(|e| e.to_string())?;
    let reds: Vec<Separatrix> = seps.into_iter().filter(|s| s.color == Color::Red).collect();
    let ang = crossing_angles(f, 1e3, &reds, cfg, true).map_err(|e| e.to_string())?;
    Ok(ang.into_iter().map(|(_, a)| a).collect())
}

fn criterion_6() -> Check {
    let cfg = SeparatrixConfig::default();
    let mut worst: f64 = 0.0;
    for q in [0.5, 1.0, 2.0] {
        let a = red_angles(&cubic(q, 0.0), &cfg)?;
        ensure(a.len() == 2, || format!("q={q}: {} crossings", a.len()))?;
        let err = ((a[0] - a[1]).abs() - 2.0 * PI / (1.0 + q)).abs();
        ensure(err < 1e-2, || format!("q={q}: angle gap error {err}"))?;
        worst = worst.max(err);
    }
    let a0 = red_angles(&cubic(2.0, 0.0), &cfg)?;
    let a1 = red_angles(&cubic(2.0, 0.7), &cfg)?;
    let shift = a0.iter().zip(&a1).map(|(x, y)| wrap_pi(y - x - 0.7).abs()).fold(0.0, f64::max);
    ensure(shift < 1e-3, || format!("rotation error {shift}"))?;
    Ok(format!("gap error {worst:.1e}, rotation error {shift:.1e}"))
}

fn criterion_7() -> Check {
    // w' = w^4 (1 - w): multiplicity d = 4 at the origin
    let d = 4;
    let zeros: Vec<C64> = vec![c(0.0, 0.0); d].into_iter().chain([c(1.0, 0.0)]).collect();
    let f = RationalField::with_multiplicities(zeros, vec![], c(-1.0, 0.0)).map_err(|e| e.to_string())?;
    let set = boundary_saddles(&f).map_err(|e| e.to_string())?;
    // The boundary carries 2d saddles, labeled 0..2d-1; the 2(d-1) count is
    // that of the separating sectors at the origin.
    ensure(set.angles.len() == 2 * d, || format!("{} boundary saddles", set.angles.len()))?;
    let tangencies = circle_tangencies(&f, c(0.0, 0.0), 0.01, 3600).len();
    ensure(tangencies == 2 * (d - 1), || format!("{tangencies} tangencies at the origin"))?;
    ensure(set.kinds[0] == BoundaryKind::BlueSaddle, || "label 0 is not blue".into())?;
    let cfg = SeparatrixConfig::default();
    let seps = trace_boundary_separatrices(&f, &cfg).map_err(|e| e.to_string())?;
    let one = f.classify().iter().find(|r| r.location.as_w() == Some(c(1.0, 0.0))).map(|r| r.id);
    ensure(terminal_id(&seps[0]).is_some() && terminal_id(&seps[0]) == one, || "separatrix 0 does not end at w=1".into())?;
    let last = 2 * d - 1;
    ensure(seps[1].color == Color::Red && seps[last].color == Color::Red, || "straddling pair is not red".into())?;
    let ang = crossing_angles(&f, 0.01, &[seps[1].clone(), seps[last].clone()], &cfg, false).map_err(|e| e.to_string())?;
    ensure(ang.len() == 2 && ang.iter().all(|(_, a)| a.abs() < 0.05), || format!("angles {ang:?}"))?;
    ensure(ang[0].1 * ang[1].1 < 0.0, || "pair does not straddle the real axis".into())?;
    Ok(format!(
        "{} separating sectors at 0, {} boundary saddles (labels 0..{last}), psi = {:+.2e}, {:+.2e}",
        tangencies,
        set.angles.len(),
        ang[0].1,
        ang[1].1
    ))
}

fn criterion_8() -> Check {
    let cfg = RealizeConfig::default();
    let mut n = 0;
    for d in 2..=6 {
        for (code, tree) in sphere_flows::combinat::planar_trees(d, Policies::STRICT).map_err(|e| e.to_string())? {
            let plan = realize_polynomial(&tree, &cfg).map_err(|e| format!("{code}: {e}"))?;
            let seps = trace_boundary_separatrices(&plan.field, &cfg.separatrix).map_err(|e| e.to_string())?;
            let found = reduced_connection_graph(&plan.field, &seps).map_err(|e| e.to_string())?;
            let want = tree.uncolored().canonical_code(Policies::STRICT);
            let got = found.uncolored().canonical_code(Policies::STRICT);
            ensure(plan.field.mode() == Mode::Polynomial && got == want, || format!("{want} realized as {got}"))?;
            n += 1;
        }
    }
    ensure(n == 13, || format!("{n} targets"))?;
    Ok(format!("{n}/13 trees recovered"))
}

fn criterion_9() -> Check {
    let cfg = RealizeConfig::default();
    let cat = dual_pair_catalog(2);
    for pair in &cat {
        let plan = realize_rational(pair, &cfg).map_err(|e| e.to_string())?;
        let seps = trace_all(&plan.field, &cfg.separatrix).map_err(|e| e.to_string())?;
        let p = build_portraits(&plan.field, &seps).map_err(|e| e.to_string())?;
        let got = [p.c_plus.canonical_code(Policies::STRICT), p.c_minus.canonical_code(Policies::STRICT)];
        ensure(got == pair.codes(), || format!("{:?} realized as {got:?}", pair.codes()))?;
        ensure(check_duality(&p.c_plus, &p.c_minus).passed(), || "duality failed".into())?;
    }
    Ok(format!("{}/{} dual pairs recovered", cat.len(), cat.len()))
}

fn criterion_10() -> Check {
    let cfg = RealizeConfig::default();
    let trees = enumerate_nc_trees(4, true).map_err(|e| e.to_string())?;
    let (mut worst, mut samples): (f64, usize) = (0.0, 0);
    for t in &trees {
        let plan = realize_antipolynomial(t, &cfg).map_err(|e| format!("{}: {e}", t.canonical(true)))?;
        ensure(plan.verification.passed, || format!("{}: verification failed", t.canonical(true)))?;
        let f = &plan.field;
        let seps = trace_all(f, &cfg.separatrix).map_err(|e| e.to_string())?;
        let (red, blue) = antipolynomial_trees(f, &seps).map_err(|e| e.to_string())?;
        ensure(red.canonical(false) == t.canonical(false) && blue.canonical(false) == t.dual().canonical(false), || {
            format!("{} realized as {}", t.canonical(false), red.canonical(false))
        })?;
        let ham = f.hamiltonian_data().map_err(|e| e.to_string())?;
        let radius = 1.5 * f.scene_radius();
        let icfg = IntegratorConfig {
            detect_periodic: false,
            ..IntegratorConfig::default()
        };
        for k in 0..20 {
            let start = C64::from_polar(radius * (0.3 + 0.035 * k as f64), 2.0 * PI * k as f64 / 20.0 + 0.1);
            let tr = integrate(f, SpherePoint::w(start), 0.0, 30.0, &icfg).map_err(|e| e.to_string())?;
            let h0 = ham.h(start);
            // every orbit leaves for infinity, where F grows like |w|^(d'+2)
            // and rounding in F alone exceeds the tolerance; drift is
            // measured inside the scene
            for s in &tr.samples {
                if let Some(w) = s.point.as_w().filter(|w| w.norm() <= 2.0 * f.scene_radius()) {
                    worst = worst.max((ham.h(w) - h0).abs());
                    samples += 1;
                }
            }
        }
    }
    ensure(worst < 1e-6, || format!("Hamiltonian drift {worst:e}"))?;
    Ok(format!("7/7 realized, max drift of H over 140 orbits ({samples} samples in the scene) {worst:.1e}"))
}

fn random_normalized(rng: &mut impl Rng, d: usize) -> Option<RationalField> {
    let pts: Vec<C64> = (0..2 * d - 2)
        .map(|_| C64::from_polar(rng.gen_range(0.0f64..1.0).sqrt() * 2.0, rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let a = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
    build_field(&pts[..d], &pts[d..], a).ok()
}

/// `Ok(())` when every invariant holds, `Err(Ok(reason))` when the field
/// could not be analyzed, `Err(Err(reason))` when an invariant is violated.
fn structural_invariants(f: &RationalField) -> Result<(), Result<String, String>> {
    let eta = f.residues().map_err(|e| Ok(e.to_string()))?;
    let sum: C64 = eta.iter().sum();
    if sum.norm() >= 1e-9 {
        return Err(Err(format!("residue sum {sum}")));
    }
    let recs = f.classify();
    let count = |k: EquilibriumKind| recs.iter().filter(|r| r.kind == k).count();
    let (dp, dm) = (count(EquilibriumKind::Source), count(EquilibriumKind::Sink));
    if dp + dm != f.d_prime() + 2 {
        return Err(Err(format!("d+ + d- = {}", dp + dm)));
    }
    let cfg = SeparatrixConfig::default();
    let seps = trace_all(f, &cfg).map_err(|e| Ok(e.to_string()))?;
    let p = build_portraits(f, &seps).map_err(|e| Ok(e.to_string()))?;
    for g in [&p.c_plus, &p.c_minus] {
        if !g.is_connected() || g.euler_characteristic() != 2 {
            return Err(Err(format!("portrait with V-E+F = {}", g.euler_characteristic())));
        }
    }
    if !check_duality(&p.c_plus, &p.c_minus).passed() {
        return Err(Err("duality".into()));
    }
    for s in &seps {
        let want = match s.color {
            Color::Red => EquilibriumKind::Source,
            Color::Blue => EquilibriumKind::Sink,
        };
        match terminal_id(s) {
            Some(id) if recs[id].kind == want => {}
            t => return Err(Err(format!("{:?} separatrix ends at {t:?}", s.color))),
        }
        let t = s.blowup_time.ok_or_else(|| Ok("missing blow-up time".to_string()))?;
        let q = blowup_quadrature(f, s).map_err(|e| Ok(e.to_string()))?;
        if (q.re - t).abs() >= 1e-5 || q.im.abs() >= 1e-6 {
            return Err(Err(format!("blow-up time {t} vs integral {q}")));
        }
    }
    Ok(())
}

fn criterion_11() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let ncfg = NondegConfig::default();
    let (mut fields, mut ok, mut near) = (0, 0, Vec::new());
    while fields < 100 {
        let d = 3 + fields % 4;
        let Some(f) = random_normalized(&mut rng, d) else { continue };
        if !check_nondegeneracy(&f, &ncfg).overall {
            continue;
        }
        fields += 1;
        match structural_invariants(&f) {
            Ok(()) => ok += 1,
            Err(Ok(reason)) => near.push(reason),
            Err(Err(wrong)) => return Err(format!("field {fields} (d={d}): {wrong}")),
        }
    }
    ensure(ok >= 98, || format!("{ok}/100 analyzable; {near:?}"))?;
    Ok(format!("{ok}/100 fully analyzable, {} reported near-degenerate {near:?}", near.len()))
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Check, Duration); 11] = [
        (1, criterion_1, Duration::from_secs(60)),
        (2, criterion_2, Duration::from_secs(60)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(5)),
        (5, criterion_5, Duration::from_secs(10)),
        (6, criterion_6, Duration::from_secs(30)),
        (7, criterion_7, Duration::from_secs(30)),
        (8, criterion_8, Duration::from_secs(600)),
        (9, criterion_9, Duration::from_secs(600)),
        (10, criterion_10, Duration::from_secs(600)),
        (11, criterion_11, Duration::from_secs(900)),
    ];
    let mut failed = Vec::new();
    for (k, run, limit) in criteria {
        let t0 = Instant::now();
        let result = run();
        let dt = t0.elapsed();
        let line = match (&result, dt <= limit) {
            (Ok(msg), true) => format!("PASS criterion {k:>2} ({:.2}s): {msg}", dt.as_secs_f64()),
            (Ok(msg), false) => format!("FAIL criterion {k:>2} ({:.2}s > {}s): {msg}", dt.as_secs_f64(), limit.as_secs()),
            (Err(e), _) => format!("FAIL criterion {k:>2} ({:.2}s): {e}", dt.as_secs_f64()),
        };
        // Written to the raw handle so the report shows without --nocapture.
        let _ = writeln!(std::io::stderr(), "{line}");
        if !line.starts_with("PASS") {
            failed.push(k);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
