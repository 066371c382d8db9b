//! Acceptance run: executes the canned suite, checks every criterion and
//! prints one PASS/FAIL line each. Exits non-zero on any failure that is not
//! listed in `KNOWN_FAILURES`.

use std::collections::BTreeMap;
use std::time::Instant;

use podd_cli::run::with_workers;
use podd_cli::suite::{spec, SUITE};
use podd_cli::{execute, Outcome, Table};
use podd_core::rates::{asymptotic_tail, cavity_rate};

/// Criteria whose claim is false as stated; they still print FAIL.
const KNOWN_FAILURES: &[u32] = &[2];

struct Report {
    lines: Vec<(u32, bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {detail}");
        self.lines.push((id, pass, detail));
    }
}

fn col(table: &Table, name: &str) -> Vec<String> {
    let i = table.column(name).unwrap_or_else(|| panic!("{}: no column {name}", table.file));
    table.rows.iter().map(|r| r[i].clone()).collect()
}

fn num(table: &Table, name: &str) -> Vec<f64> {
    col(table, name).iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect()
}

fn sum(table: &Table, name: &str) -> f64 {
    num(table, name).iter().sum()
}

fn table<'a>(runs: &'a BTreeMap<String, (Outcome, f64)>, name: &str, file: &str) -> &'a Table {
    runs[name].0.table(file).unwrap_or_else(|| panic!("{name}: no {file}"))
}

fn secs(runs: &BTreeMap<String, (Outcome, f64)>, names: &[&str]) -> f64 {
    names.iter().map(|n| runs[*n].1).sum()
}

fn run_suite(workers: usize) -> BTreeMap<String, (Outcome, f64)> {
    let mut out = BTreeMap::new();
    for (name, _) in SUITE {
        let spec = spec(name).expect("canned");
        let start = Instant::now();
        let outcome = with_workers(Some(workers), || execute(&spec)).expect("pool").unwrap_or_else(|e| panic!("{name}: {e}"));
        out.insert(name.to_string(), (outcome, start.elapsed().as_secs_f64()));
    }
    out
}

/// Tail estimates `(k, p_hat, ci, p_star)` of a stationary run.
fn tail_rows(runs: &BTreeMap<String, (Outcome, f64)>, name: &str) -> Vec<(usize, f64, f64, f64)> {
    let t = table(runs, name, "tail.csv");
    let k = num(t, "k");
    let (p, ci, star) = (num(t, "p_hat"), num(t, "ci"), num(t, "p_star"));
    (0..k.len()).map(|i| (k[i] as usize, p[i], ci[i], star[i])).collect()
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    let runs = run_suite(1);

    // 1: identity
    let (a, b) = (table(&runs, "rates_identity", "rates_check.csv"), table(&runs, "rates_monotone", "rates_check.csv"));
    let identity = sum(a, "identity_violations");
    let max_rel = num(a, "max_rel_error").into_iter().fold(0.0, f64::max);
    let t1 = secs(&runs, &["rates_identity"]);
    report.record(
        1,
        identity == 0.0 && max_rel <= 1e-12 && t1 < 60.0,
        format!("rate identity: {} points, {identity} violations, max rel error {max_rel:.2e}, {t1:.1} s", sum(a, "points")),
    );

    // 2: monotonicity where claimed
    let claimed: Vec<bool> = col(b, "monotone_claimed").iter().map(|v| v == "true").collect();
    let count = |name: &str| -> f64 { num(b, name).iter().zip(&claimed).filter(|(_, c)| **c).map(|(v, _)| v).sum() };
    let (below, equal, above) = (count("mono_below"), count("mono_equal"), count("mono_above"));
    let t2 = secs(&runs, &["rates_monotone"]);
    report.record(
        2,
        below + equal + above == 0.0 && t2 < 60.0,
        format!("N+1 rate monotonicity: violations below={below} equal={equal} above={above}, {t2:.1} s"),
    );

    // 3, 4: coupling and uniform bound on both grids
    let coupling = sum(a, "coupling_violations") + sum(b, "coupling_violations");
    report.record(3, coupling == 0.0 && t2 < 60.0, format!("coupling consistency: {coupling} violations"));
    let bound = sum(a, "bound_violations") + sum(b, "bound_violations");
    report.record(4, bound == 0.0, format!("uniform rate bound: {bound} violations"));

    // 5: clans
    let clan = table(&runs, "clan", "clan.csv");
    let bad = col(clan, "violation").iter().filter(|v| *v == "true").count();
    report.record(
        5,
        bad == 0,
        format!("clan size and intersection bounds: {} rows, {bad} CI-adjusted violations, {:.1} s", clan.rows.len(), runs["clan"].1),
    );

    // 6: chaos
    let chaos = table(&runs, "chaos", "chaos.csv");
    let bad = col(chaos, "violation").iter().filter(|v| *v == "true").count();
    let (ns, covs) = (num(chaos, "N"), num(chaos, "cov_mk"));
    let max_at = |n: f64| ns.iter().zip(&covs).filter(|(m, _)| **m == n).map(|(_, c)| *c).fold(0.0, f64::max);
    let ratio = max_at(200.0) / max_at(800.0);
    report.record(
        6,
        bad == 0 && (2.0..=8.0).contains(&ratio),
        format!("chaos bound: {bad} violations of {}, max|cov| ratio N=200/N=800 = {ratio:.2}", chaos.rows.len()),
    );

    // 7: stationary tail, FIFO and PS
    let mut worst = 0.0f64;
    let mut ok = true;
    for name in ["stationary_fifo", "stationary_ps"] {
        for (k, p, ci, star) in tail_rows(&runs, name) {
            if k <= 4 {
                let tol = (3.0 * ci).max(0.015);
                ok &= (p - star).abs() <= tol;
                worst = worst.max((p - star).abs() / tol);
            }
        }
    }
    report.record(7, ok, format!("stationary tail vs fixed point: worst |error|/tolerance = {worst:.3}"));

    // 8: insensitivity under PS
    let laws = ["stationary_ps", "stationary_ps_deterministic", "stationary_ps_hyperexponential"];
    let mut worst = 0.0f64;
    for (i, x) in laws.iter().enumerate() {
        for y in &laws[i + 1..] {
            for (a, b) in tail_rows(&runs, x).iter().zip(tail_rows(&runs, y)) {
                let tol = 3.0 * (a.2 * a.2 + b.2 * b.2).sqrt();
                worst = worst.max((a.1 - b.1).abs() / tol);
            }
        }
    }
    report.record(8, worst <= 1.0, format!("insensitivity under PS: worst |difference|/(3 joint CI) = {worst:.3}"));
    let control: Vec<String> = tail_rows(&runs, "stationary_fifo_hyperexponential")
        .iter()
        .zip(tail_rows(&runs, "stationary_ps"))
        .map(|(f, p)| format!("k={} {:+.4}", f.0, f.1 - p.1))
        .collect();
    println!("INFO  8 FIFO + hyperexponential minus PS + exponential: {}", control.join(", "));

    // 9: cavity fixed point
    let mut flux_err = 0.0f64;
    for d in 2..=5 {
        for lambda in [0.3, 0.5, 0.7, 0.9] {
            for k in 0..=10 {
                let (pk, pk1, pk2) = (asymptotic_tail(d, lambda, k), asymptotic_tail(d, lambda, k + 1), asymptotic_tail(d, lambda, k + 2));
                flux_err = flux_err.max((cavity_rate(d, lambda, pk, pk1) * (pk - pk1) - (pk1 - pk2)).abs());
            }
        }
    }
    let cav = table(&runs, "cavity_tail", "cavity_tail.csv");
    let (p, ci, star) = (num(cav, "p_hat"), num(cav, "ci"), num(cav, "p_star"));
    let resolvable: Vec<usize> = (0..p.len()).filter(|&i| star[i] >= 1e-4).collect();
    let mc_bad = resolvable.iter().filter(|&&i| (p[i] - star[i]).abs() > 3.0 * ci[i]).count();
    report.record(
        9,
        flux_err <= 1e-12 && mc_bad == 0,
        format!(
            "cavity fixed point: max flux error {flux_err:.1e}; Monte Carlo tail {mc_bad} of {} levels outside 3 CI, {:.1} s",
            resolvable.len(),
            runs["cavity_tail"].1
        ),
    );

    // 10: tagged convergence
    let tagged = table(&runs, "tagged_convergence", "tagged.csv");
    let tv = num(tagged, "tv");
    let decreasing = tv.windows(2).all(|w| w[1] < w[0]);
    let last = *tv.last().unwrap();
    let shown: Vec<String> = num(tagged, "N").iter().zip(&tv).map(|(n, v)| format!("N={n}: {v:.5}")).collect();
    report.record(10, decreasing && last < 0.05, format!("tagged TV at t=2: {}", shown.join(", ")));

    // 11: cavity TV decay
    let mut ok = true;
    let mut shown = Vec::new();
    for name in ["decay_exponential", "decay_erlang"] {
        let fit = table(&runs, name, "decay_fit.csv");
        let (rate, r2) = (num(fit, "rate")[0], num(fit, "r_squared")[0]);
        ok &= rate > 0.0 && r2 >= 0.9;
        shown.push(format!("{}: rate {rate:.3}, R^2 {r2:.4}", col(fit, "service")[0]));
    }
    report.record(11, ok, format!("cavity TV decay: {}", shown.join("; ")));

    // 12: determinism across worker counts
    let again = run_suite(3);
    let differing: Vec<&String> = runs.keys().filter(|name| runs[*name].0.rendered() != again[*name].0.rendered()).collect();
    report.record(
        12,
        differing.is_empty(),
        format!("byte-identical CSVs with 1 and 3 workers: {} differing experiments {differing:?}", differing.len()),
    );

    let unexpected: Vec<u32> =
        report.lines.iter().filter(|(id, pass, _)| !pass && !KNOWN_FAILURES.contains(id)).map(|(id, _, _)| *id).collect();
    for (id, pass, _) in &report.lines {
        if !pass && KNOWN_FAILURES.contains(id) {
            println!("NOTE {id:>2} fails as stated: the counterexample counts above show the claimed inequality is false");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
