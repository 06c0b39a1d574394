//! Browser bindings for the qgrass demo page. Each export takes plain
//! numbers and returns a JSON report string, so the same functions are
//! directly testable on the host; a request outside the demo budgets comes
//! back as `{"error": "..."}` rather than a panic.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use qgrass::gf::FieldSpec;
use qgrass::grassmann::{grassmannian_count, mu_n};
use qgrass::qseries::{orbit_weight, total_mass_float, QRat};
use qgrass::spectral::{
    asc_eigencheck, finite_averaging_matrix, hahn_eigencheck, hahn_eigenvalue, markov_walk,
    mc_orbit_distribution, occupancy, stationary_frequencies,
};
use qgrass::verify::rat_to_f64;

const MAX_STEPS: u32 = 5_000_000;
const MAX_SAMPLES: u32 = 300_000;
const MAX_KMAX: u32 = 40;

fn err(message: impl Into<String>) -> String {
    #[derive(Serialize)]
    struct ErrorReport {
        error: String,
    }
    serde_json::to_string(&ErrorReport {
        error: message.into(),
    })
    .unwrap()
}

fn check_field(q: u32) -> Result<FieldSpec, String> {
    FieldSpec::of_order(q as u64).map_err(|e| format!("q = {q}: {e}"))
}

fn rat(r: &QRat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Orbit weights `w(k)` of the invariant measure, with running partial sums
/// and the limiting total mass.
#[wasm_bindgen]
pub fn orbit_measure_report(q: u32, kmax: u32) -> String {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        weight: String,
        weight_approx: f64,
        partial_sum: f64,
        stationary: f64,
    }
    #[derive(Serialize)]
    struct Report {
        q: u32,
        total_mass: f64,
        rows: Vec<Row>,
    }
    if let Err(e) = check_field(q) {
        return err(e);
    }
    if kmax > MAX_KMAX {
        return err(format!("kmax capped at {MAX_KMAX}"));
    }
    let total = total_mass_float(q as u64);
    let mut partial = 0.0;
    let rows = (0..=kmax)
        .map(|k| {
            let w = orbit_weight(k as usize, q as u64);
            let approx = rat_to_f64(&w);
            partial += approx;
            Row {
                k,
                weight: rat(&w),
                weight_approx: approx,
                partial_sum: partial,
                stationary: approx / total,
            }
        })
        .collect();
    serde_json::to_string(&Report {
        q,
        total_mass: total,
        rows,
    })
    .unwrap()
}

/// Monte Carlo orbit-index statistics of uniform subspaces of `Gr(2n, n)`
/// against the exact distribution.
#[wasm_bindgen]
pub fn orbit_sample_report(q: u32, n: u32, samples: u32, seed: u32) -> String {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        count: u64,
        empirical: f64,
        exact: String,
        exact_approx: f64,
        standard_error: f64,
    }
    #[derive(Serialize)]
    struct Report {
        q: u32,
        n: u32,
        samples: u32,
        grassmannian_total: String,
        rows: Vec<Row>,
    }
    if let Err(e) = check_field(q) {
        return err(e);
    }
    if n == 0 || n > 6 {
        return err("n must be between 1 and 6");
    }
    if samples == 0 || samples > MAX_SAMPLES {
        return err(format!("samples must be between 1 and {MAX_SAMPLES}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let d = mc_orbit_distribution(n as usize, q as u64, samples as u64, &mut rng);
    let rows = (0..=n as usize)
        .map(|k| Row {
            k: k as u32,
            count: d.counts[k],
            empirical: d.empirical(k),
            exact: rat(&d.exact[k]),
            exact_approx: d.exact_f64(k),
            standard_error: d.standard_error(k),
        })
        .collect();
    serde_json::to_string(&Report {
        q,
        n,
        samples,
        grassmannian_total: grassmannian_count(2 * n as usize, n as usize, q as u64).to_string(),
        rows,
    })
    .unwrap()
}

/// Averaging Markov walk occupancy against the stationary law.
#[wasm_bindgen]
pub fn walk_report(q: u32, k0: u32, steps: u32, seed: u32) -> String {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        occupancy: f64,
        stationary: f64,
    }
    #[derive(Serialize)]
    struct Report {
        q: u32,
        k0: u32,
        steps: u32,
        final_state: u32,
        rows: Vec<Row>,
    }
    if let Err(e) = check_field(q) {
        return err(e);
    }
    if steps == 0 || steps > MAX_STEPS {
        return err(format!("steps must be between 1 and {MAX_STEPS}"));
    }
    if k0 > 12 {
        return err("k0 capped at 12");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let traj = markov_walk(q as u64, k0 as usize, steps as usize, &mut rng);
    let occ = occupancy(&traj);
    let stationary = stationary_frequencies(q as u64, occ.len() - 1);
    let rows = occ
        .iter()
        .enumerate()
        .map(|(k, &o)| Row {
            k: k as u32,
            occupancy: o,
            stationary: stationary[k],
        })
        .collect();
    serde_json::to_string(&Report {
        q,
        k0,
        steps,
        final_state: *traj.last().unwrap() as u32,
        rows,
    })
    .unwrap()
}

/// Spectral report at truncation level `n`: q-Hahn eigenvalues (with exact
/// residual maxima), the finite averaging-matrix spectrum, and the infinite
/// limit `q^-j`.
#[wasm_bindgen]
pub fn spectrum_report(q: u32, n: u32) -> String {
    #[derive(Serialize)]
    struct Row {
        j: u32,
        hahn_eigenvalue: String,
        hahn_eigenvalue_approx: f64,
        hahn_residual_max: f64,
        averaging_eigenvalue: Option<f64>,
        limit_eigenvalue: f64,
        limit_residual_max: f64,
    }
    #[derive(Serialize)]
    struct Report {
        q: u32,
        n: u32,
        mu_total: String,
        rows: Vec<Row>,
    }
    if let Err(e) = check_field(q) {
        return err(e);
    }
    if n == 0 || n > 6 {
        return err("n must be between 1 and 6");
    }
    let n = n as usize;
    let avg = finite_averaging_matrix(n, q as u64).ok();
    let avg_eigs = avg.map(|a| a.eigenvalues());
    let rows = (0..=n)
        .map(|j| {
            let lambda = hahn_eigenvalue(j, n, q as u64);
            let hahn_res = hahn_eigencheck(j, n, q as u64)
                .map(|rs| rs.iter().map(|r| rat_to_f64(r).abs()).fold(0.0, f64::max))
                .unwrap_or(f64::NAN);
            let asc_res = asc_eigencheck(j, q as u64, 20)
                .iter()
                .map(|r| rat_to_f64(r).abs())
                .fold(0.0, f64::max);
            Row {
                j: j as u32,
                hahn_eigenvalue: rat(&lambda),
                hahn_eigenvalue_approx: rat_to_f64(&lambda),
                hahn_residual_max: hahn_res,
                averaging_eigenvalue: avg_eigs.as_ref().and_then(|e| e.get(j)).copied(),
                limit_eigenvalue: (q as f64).powi(-(j as i32)),
                limit_residual_max: asc_res,
            }
        })
        .collect();
    serde_json::to_string(&Report {
        q,
        n: n as u32,
        mu_total: rat(&mu_n(&grassmannian_count(2 * n, n, q as u64), n, q as u64)),
        rows,
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_measure_report_is_valid_json_with_known_values() {
        let v: serde_json::Value =
            serde_json::from_str(&orbit_measure_report(2, 5)).unwrap();
        assert!((v["total_mass"].as_f64().unwrap() - 3.4627466).abs() < 1e-6);
        assert_eq!(v["rows"][0]["weight"], "1");
        assert_eq!(v["rows"][1]["weight"], "2");
        assert_eq!(v["rows"][2]["weight"], "4/9");
    }

    #[test]
    fn reports_reject_bad_parameters() {
        let v: serde_json::Value = serde_json::from_str(&orbit_measure_report(6, 5)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("prime power"));
        let v: serde_json::Value = serde_json::from_str(&walk_report(2, 0, 0, 1)).unwrap();
        assert!(v.get("error").is_some());
        let v: serde_json::Value = serde_json::from_str(&orbit_sample_report(2, 9, 10, 1)).unwrap();
        assert!(v.get("error").is_some());
    }

    #[test]
    fn walk_report_is_deterministic_per_seed() {
        let a = walk_report(2, 0, 50_000, 7);
        let b = walk_report(2, 0, 50_000, 7);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        let occ0 = v["rows"][0]["occupancy"].as_f64().unwrap();
        let st0 = v["rows"][0]["stationary"].as_f64().unwrap();
        assert!((occ0 - st0).abs() < 0.03);
    }

    #[test]
    fn sample_report_matches_exact_distribution() {
        let v: serde_json::Value =
            serde_json::from_str(&orbit_sample_report(2, 2, 20_000, 42)).unwrap();
        assert_eq!(v["rows"][0]["exact"], "16/35");
        assert_eq!(v["rows"][1]["exact"], "18/35");
        assert_eq!(v["rows"][2]["exact"], "1/35");
        for k in 0..=2 {
            let row = &v["rows"][k];
            let dev = (row["empirical"].as_f64().unwrap() - row["exact_approx"].as_f64().unwrap())
                .abs();
            assert!(dev <= 4.0 * row["standard_error"].as_f64().unwrap().max(1e-9));
        }
    }

    #[test]
    fn spectrum_report_shows_zero_residuals() {
        let v: serde_json::Value = serde_json::from_str(&spectrum_report(2, 3)).unwrap();
        for row in v["rows"].as_array().unwrap() {
            assert_eq!(row["hahn_residual_max"].as_f64().unwrap(), 0.0);
            assert_eq!(row["limit_residual_max"].as_f64().unwrap(), 0.0);
        }
        assert_eq!(v["rows"][0]["hahn_eigenvalue"], "0");
        assert!(v["rows"][0]["averaging_eigenvalue"].as_f64().is_some());
    }
}
