//! Acceptance suite. Prints one `criterion N: PASS|FAIL ...` line per
//! criterion and exits non-zero if any criterion fails.

use std::cmp::Ordering;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use lacunae::cnd_kernels::cnd_gram_test;
use lacunae::free_words::ball;
use lacunae::lacunarity::{pow2, prop51_check, psi_lacunary_delta, rudin_lacunarity_estimate, DEFAULT_RUDIN_RADIUS};
use lacunae::magnus::{closed_form_profile, j_profile, magnus_embed, transference_check};
use lacunae::magnus_order::{order_compare_default, Relation};
use lacunae::nc_fourier::{bmo_kernel, c_delta, default_t_grid_for, h1_kernel, schur_sums, trace_moment, Coeff};
use lacunae::norm_estimation::{bmo_norm_estimate, h1_norm_estimate, operator_norm_estimate, NormConfig};
use lacunae::paley::{coefficient_norms, lambda4_check, matrix_unit, paley_split, scalar, series};
use lacunae::{FourierElement, LengthFunction, Real, Word};
use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

/// Uniformly random reduced word of length `len`, letter by letter.
fn random_word(rng: &mut impl Rng, rank: usize, len: usize) -> Word {
    let mut letters: Vec<(usize, i64)> = Vec::with_capacity(len);
    while letters.len() < len {
        let g = rng.gen_range(1..=rank);
        let e = if rng.gen_bool(0.5) { 1 } else { -1 };
        if letters.last() == Some(&(g, -e)) {
            continue;
        }
        letters.push((g, e));
    }
    Word::reduce(rank, letters).unwrap()
}

fn random_word_upto(rng: &mut impl Rng, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    random_word(rng, rank, len)
}

fn w(rank: usize, s: &str) -> Word {
    Word::parse(rank, s).unwrap()
}

fn dyadic(rank: usize, ks: std::ops::RangeInclusive<u32>) -> Vec<Word> {
    ks.map(|k| Word::power(rank, 1, pow2(k)).unwrap()).collect()
}

fn ones(n: usize) -> Vec<Coeff> {
    vec![scalar(1.0); n]
}

fn relation(g: &Word, h: &Word) -> Relation {
    order_compare_default(g, h).unwrap().relation
}

fn decided(r: Relation) -> Option<Ordering> {
    r.to_ordering()
}

fn magnus_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut bad = 0;
    for _ in 0..1000 {
        let g = random_word_upto(&mut rng, 2, 8);
        let h = random_word_upto(&mut rng, 2, 8);
        let gh = g.multiply(&h).unwrap();
        let product = magnus_embed(&g, 6).multiply(&magnus_embed(&h, 6)).unwrap();
        let identity = [&g, &h, &gh].iter().all(|x| {
            let p = j_profile(x).unwrap();
            &p.j_ab + &p.j_ba == &p.j_a * &p.j_b
        });
        if magnus_embed(&gh, 6) != product || !identity {
            bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (bad == 0 && secs < 10.0, format!("{bad} mismatches in 1000 pairs, {secs:.2}s"))
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..1000 {
        let g = random_word_upto(&mut rng, 2, 16);
        if j_profile(&g).unwrap() != closed_form_profile(&g).unwrap() {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} disagreements in 1000 words"))
}

fn order_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let (mut triples, mut undecided) = (0, 0);
    while triples < 500 {
        let g = random_word_upto(&mut rng, 2, 6);
        let h = random_word_upto(&mut rng, 2, 6);
        let f = random_word_upto(&mut rng, 2, 6);
        let (gh, hg, hf, gf) = (relation(&g, &h), relation(&h, &g), relation(&h, &f), relation(&g, &f));
        let (Some(gh_o), Some(hf_o), Some(gf_o), Some(_)) = (decided(gh), decided(hf), decided(gf), decided(hg)) else {
            undecided += 1;
            continue;
        };
        triples += 1;
        if hg != gh.reverse() || (gh_o == Ordering::Equal) != (g == h) {
            failures.push(format!("antisymmetry {g} {h}"));
        }
        if gh_o == hf_o && gf_o != gh_o {
            failures.push(format!("transitivity {g} {h} {f}"));
        }
    }
    let mut samples = 0;
    while samples < 500 {
        let g = random_word_upto(&mut rng, 2, 5);
        let h = random_word_upto(&mut rng, 2, 5);
        let x = random_word_upto(&mut rng, 2, 5);
        let y = random_word_upto(&mut rng, 2, 5);
        let xgy = x.multiply(&g).unwrap().multiply(&y).unwrap();
        let xhy = x.multiply(&h).unwrap().multiply(&y).unwrap();
        let (before, after) = (relation(&g, &h), relation(&xgy, &xhy));
        if decided(before).is_none() || decided(after).is_none() {
            undecided += 1;
            continue;
        }
        samples += 1;
        if before != after {
            failures.push(format!("bi-invariance {g} {h} {x} {y}"));
        }
    }
    if relation(&w(2, "a"), &w(2, "b")) != Relation::Greater {
        failures.push("(a, b) is not greater".into());
    }
    for m in -20i64..=20 {
        for n in -20i64..=20 {
            let r = relation(&Word::power(1, 1, m).unwrap(), &Word::power(1, 1, n).unwrap());
            if decided(r) != Some(m.cmp(&n)) {
                failures.push(format!("rank 1: a^{m} vs a^{n}"));
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "500 triples, 500 translates, {undecided} undecided skipped, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn conditional_negativity() -> Outcome {
    let start = Instant::now();
    let set = ball(2, 2).unwrap();
    let mut notes = vec![format!("ball(2,2) has {} words", set.len())];
    let mut ok = set.len() == 17;
    for spec in ["word", "q:0.5", "q:1", "q:2", "psiz"] {
        let psi = LengthFunction::parse(2, spec).unwrap();
        let r = cnd_gram_test(&psi, &set, None).unwrap();
        let lmax = r.max_constrained_eigenvalue.unwrap_or(f64::INFINITY);
        let pass = r.verdict.passed() && lmax <= 1e-9 * r.matrix_scale;
        ok &= pass;
        notes.push(format!("{spec}: {lmax:.2e}"));
    }
    let negated = LengthFunction::scaled(Real::integer(-1), LengthFunction::WordLength);
    let on_ball = cnd_gram_test(&negated, &set, None).unwrap();
    let pair = cnd_gram_test(&negated, &[Word::identity(2), w(2, "a")], None).unwrap();
    let witness_ok = match &pair.witness {
        Some(wit) => {
            let v = &wit.vector;
            v.len() == 2 && (v[0] + v[1]).abs() < 1e-12 && (v[0].abs() - 1.0).abs() < 1e-12 && (wit.value - 2.0).abs() < 1e-12
        }
        None => false,
    };
    ok &= !on_ball.verdict.passed() && !pair.verdict.passed() && witness_ok;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    notes.push(format!("negated length fails with witness (1,-1) value 2: {witness_ok}, {secs:.2}s"));
    (ok, notes.join(", "))
}

fn lacunarity_certificates() -> Outcome {
    let seq = dyadic(1, 0..=6);
    let cert = psi_lacunary_delta(&LengthFunction::WordLength, &seq).unwrap();
    let delta_ok = cert.delta == Some(Real::ratio(1, 2)) && cert.delta.as_ref().is_some_and(Real::is_exact);

    let commutators: Vec<Word> = (0..=5u32)
        .map(|k| {
            let n = pow2(k);
            let m = -n.clone();
            Word::reduce(2, [(1, n.clone()), (2, n), (1, m.clone()), (2, m)]).unwrap()
        })
        .collect();
    let p51 = prop51_check(&commutators).unwrap();
    let p51_ok = p51.verdict.passed()
        && p51.criterion == Some(3)
        && p51.j_ab.iter().enumerate().all(|(k, j)| *j == BigInt::from(4u64.pow(k as u32)));

    let rudin = rudin_lacunarity_estimate(&seq, 1, None, DEFAULT_RUDIN_RADIUS).unwrap();
    let ok = delta_ok && p51_ok && rudin.n_hat == 2;
    (
        ok,
        format!(
            "delta = {}, prop51 criterion {:?} with J_AB = 4^k: {p51_ok}, rank-1 N = {}",
            cert.delta.map(|d| d.to_string()).unwrap_or_default(),
            p51.criterion,
            rudin.n_hat
        ),
    )
}

fn kernel_constants() -> Outcome {
    let psi = LengthFunction::WordLength;
    let seq = dyadic(1, 0..=6);
    let x = series(1, &seq, &ones(seq.len())).unwrap();
    let bound = c_delta(0.5);
    let expected = 3.0 + 1.0 / (1.0 - (-0.25f64).exp());
    let grid = default_t_grid_for(&x, &psi).unwrap();
    let mut worst: f64 = 0.0;
    for &t in &grid {
        let (col, row) = schur_sums(&bmo_kernel(&x, &psi, t).unwrap()).unwrap();
        worst = worst.max(col).max(row);
    }
    let lengths: Vec<f64> = seq.iter().map(|h| psi.evaluate_f64(h).unwrap()).collect();
    let k = h1_kernel(&lengths);
    let diag_ok = (0..k.nrows()).all(|i| k[(i, i)] == 0.25);
    let ok = grid.len() == 48 && (bound - expected).abs() < 1e-12 && worst <= bound && diag_ok;
    (
        ok,
        format!(
            "max Schur sum {worst:.6} <= c_delta(1/2) = {bound:.6} over {} t's, H1 diagonal 1/4: {diag_ok}",
            grid.len()
        ),
    )
}

fn single_term() -> Outcome {
    let cfg = NormConfig::default();
    let psi = LengthFunction::WordLength;
    let c = Complex64::new(3.0, -4.0);
    let x = FourierElement::from_scalars(2, [(w(2, "a^2 b"), c)]).unwrap();
    let bmo = bmo_norm_estimate(&x, &psi, None, 4, &cfg).unwrap();
    let target = 4.0 / 27.0 * c.norm_sqr();
    let trace_sq = bmo.trace_bound.powi(2);
    let trace_ok = (trace_sq - target).abs() <= 1e-9 * target.max(1.0);
    let h1 = h1_norm_estimate(&x, &psi, 8, &cfg).unwrap();
    let h1_ok = (h1.value - c.norm() / 2.0).abs() <= 1e-6;
    (
        trace_ok && h1_ok,
        format!(
            "trace bound^2 = {trace_sq:.12} vs (4/27)|c|^2 = {target:.12} [{}]; h1 = {:.9} vs |c|/2 = {} [{}]",
            if trace_ok { "ok" } else { "mismatch" },
            h1.value,
            c.norm() / 2.0,
            if h1_ok { "ok" } else { "mismatch" }
        ),
    )
}

fn theorem1_upper() -> Outcome {
    let start = Instant::now();
    let cfg = NormConfig::default();
    let psi = LengthFunction::WordLength;
    let seq = dyadic(1, 1..=6);
    let x = series(1, &seq, &ones(seq.len())).unwrap();
    let bmo = bmo_norm_estimate(&x, &psi, None, 10, &cfg).unwrap();
    let h1 = h1_norm_estimate(&x, &psi, 10, &cfg).unwrap();
    let bmo_rhs = c_delta(0.5) * 6.0;
    let h1_rhs = 0.5 * 6f64.sqrt() + 1e-6;
    let secs = start.elapsed().as_secs_f64();
    let ok = bmo.operator_bound.powi(2) <= bmo_rhs && bmo.trace_bound.powi(2) <= bmo_rhs && h1.value <= h1_rhs && secs < 60.0;
    (
        ok,
        format!(
            "bmo^2 = {:.6} <= {bmo_rhs:.6}, h1 = {:.6} <= {h1_rhs:.6}, {secs:.2}s",
            bmo.operator_bound.powi(2),
            h1.value
        ),
    )
}

fn spectral_sanity() -> Outcome {
    let cfg = NormConfig::default();
    let x = FourierElement::from_scalars(
        2,
        ["a", "a^-1", "b", "b^-1"].map(|s| (w(2, s), Complex64::new(1.0, 0.0))),
    )
    .unwrap();
    let kesten = 2.0 * 3f64.sqrt();
    let ests: Vec<f64> = [4, 6, 8]
        .iter()
        .map(|&r| operator_norm_estimate(&x, r, &cfg).unwrap().estimate)
        .collect();
    let at8 = ests[2];
    let ok = at8 >= 0.9 * kesten && at8 <= kesten && ests.windows(2).all(|p| p[0] <= p[1]);
    (ok, format!("R = 4, 6, 8: {:.6} {:.6} {:.6}; 2*sqrt(3) = {kesten:.6}", ests[0], ests[1], ests[2]))
}

fn paley_split_check() -> Outcome {
    let targets = dyadic(1, 0..=6);
    let y = series(1, &dyadic(1, 0..=4), &ones(5)).unwrap();
    let r = paley_split(&y, &y, &targets).unwrap();
    let chains = r.checks.iter().all(|c| c.holds);
    let a = FourierElement::lambda(&w(1, "a"));
    let single = paley_split(&a, &a, &[w(1, "a^2")]).unwrap();
    let one = Coeff::from_element(1, 1, Complex64::new(1.0, 0.0));
    let exact = single.a == vec![Coeff::zeros(1, 1)] && single.b == vec![one];
    let ok = r.residual == 0.0 && chains && exact;
    (
        ok,
        format!(
            "residual {}, K = {}, row {:.4} / column {:.4} <= {:.4}, (a, a; a^2) gives A = 0, B = 1: {exact}",
            r.residual,
            r.k,
            r.row_norm_a,
            r.column_norm_b,
            (r.k as f64).sqrt() * r.y_l2 * r.z_l2
        ),
    )
}

fn exact_l4() -> Outcome {
    let x = FourierElement::from_scalars(1, [("a", 1.0), ("a^-1", 1.0)].map(|(s, c)| (w(1, s), Complex64::new(c, 0.0)))).unwrap();
    let m = trace_moment(&x, 2).unwrap();
    let exact_ok = m.exact == Some((BigInt::from(6), BigInt::from(0)));
    let seq = dyadic(1, 0..=6);
    let l4 = lambda4_check(1, &seq, &ones(seq.len()), &LengthFunction::WordLength).unwrap();
    (
        exact_ok && l4.passed,
        format!("tau((x*x)^2) = {} (exact: {exact_ok}), lambda4 passes: {}", m.re, l4.passed),
    )
}

fn row_column_gap() -> Outcome {
    let mut ok = true;
    let mut ratios = Vec::new();
    for n in [2usize, 4, 8] {
        let coeffs: Vec<Coeff> = (0..n).map(|k| matrix_unit(n, 0, k)).collect();
        let norms = coefficient_norms(&coeffs).unwrap();
        let ratio = norms.max() / norms.min();
        ok &= ratio == n as f64;
        ratios.push(format!("n = {n}: {ratio}"));
    }
    (ok, ratios.join(", "))
}

fn transference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = 0;
    for _ in 0..1000 {
        let g = random_word_upto(&mut rng, 2, 12);
        if !transference_check(&g).unwrap().holds {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} failures in 1000 words"))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 13] = [
        (1, magnus_exactness),
        (2, closed_forms),
        (3, order_soundness),
        (4, conditional_negativity),
        (5, lacunarity_certificates),
        (6, kernel_constants),
        (7, single_term),
        (8, theorem1_upper),
        (9, spectral_sanity),
        (10, paley_split_check),
        (11, exact_l4),
        (12, row_column_gap),
        (13, transference),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, run) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
