//! Deterministic CSV tables and JSON run summaries.
//!
//! Everything here is built for reproducibility: floating-point cells carry
//! 17 significant digits (enough to round-trip an `f64` exactly), rows come
//! out in a fixed order, and nothing time- or machine-dependent is written.
//! Wall-clock measurements belong on stdout, never in a file, so identical
//! configurations produce byte-identical output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discrete::{DiscreteTrajectory, SolverConfig};
use crate::discretize::ConjectureProbeReport;
use crate::error::{Error, Result};
use crate::hj::HjVerifyReport;
use crate::linalg;
use crate::scenarios::{Method, MethodRun, RunConfig, ScenarioInstance};
use crate::symmetry::SymmetryGenerator;

/// Render a float with 17 significant digits, which is lossless for `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hash a run configuration to a short stable identifier. Parameters live
/// in an ordered map and the remaining fields serialize in declaration
/// order, so the digest is stable across runs and platforms.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let text = serde_json::to_string(config)
        .map_err(|e| Error::contract(format!("config serialization failed: {e}")))?;
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    Ok(out)
}

fn quote_cell(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// A CSV document: one header row plus data rows of matching width.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) -> Result<()> {
        if cells.len() != self.headers.len() {
            return Err(Error::contract(format!(
                "row has {} cells, table has {} columns",
                cells.len(),
                self.headers.len()
            )));
        }
        self.rows.push(cells);
        Ok(())
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// CSV text with a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(
            &self
                .headers
                .iter()
                .map(|h| quote_cell(h))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(
                &row.iter()
                    .map(|c| quote_cell(c))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn positions(run: &MethodRun) -> &[Vec<f64>] {
    match run {
        MethodRun::Discrete(t) => &t.configs,
        MethodRun::Continuous(t) => &t.positions,
    }
}

/// Momentum at every sample: stored directly for discrete runs, the image
/// of the velocity under the fiber derivative for continuous ones.
fn momenta(inst: &ScenarioInstance, run: &MethodRun) -> Vec<Vec<f64>> {
    match run {
        MethodRun::Discrete(t) => t.momenta.clone(),
        MethodRun::Continuous(t) => t
            .positions
            .iter()
            .zip(&t.velocities)
            .map(|(q, v)| inst.continuous().grad_v(q, v))
            .collect(),
    }
}

/// Energy at every sample of a run.
pub fn energy_series(
    inst: &ScenarioInstance,
    run: &MethodRun,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    match run {
        MethodRun::Discrete(t) => inst.discrete_energy_series(t, solver),
        MethodRun::Continuous(t) => Ok(t.energy_series(inst.continuous())),
    }
}

fn momentum_map(p: &[f64], gen: &SymmetryGenerator, q: &[f64]) -> f64 {
    linalg::dot(p, &gen.apply(q))
}

fn single_run_table(
    inst: &ScenarioInstance,
    run: &MethodRun,
    solver: &SolverConfig,
) -> Result<Table> {
    let dim = inst.info().dim;
    let h = inst.config().h;
    let qs = positions(run);
    let ps = momenta(inst, run);
    let energies = energy_series(inst, run, solver)?;
    let discrete = matches!(run, MethodRun::Discrete(_));

    let mut headers = vec!["t".to_string()];
    headers.extend((0..dim).map(|i| format!("q[{i}]")));
    headers.extend((0..dim).map(|i| format!("p[{i}]")));
    headers.push("energy".to_string());
    for gen in inst.generators() {
        headers.push(format!("J_{}", gen.label()));
    }
    if discrete {
        headers.push("residual_del".to_string());
    }

    let mut table = Table::new(headers);
    for k in 0..qs.len() {
        let mut row = vec![format_float(k as f64 * h)];
        row.extend(qs[k].iter().map(|x| format_float(*x)));
        row.extend(ps[k].iter().map(|x| format_float(*x)));
        row.push(format_float(energies[k]));
        for gen in inst.generators() {
            row.push(format_float(momentum_map(&ps[k], gen, &qs[k])));
        }
        if let MethodRun::Discrete(t) = run {
            // Residuals exist at interior points only; endpoints stay blank.
            let cell = if k >= 1 && k - 1 < t.del_residuals.len() {
                format_float(t.del_residuals[k - 1])
            } else {
                String::new()
            };
            row.push(cell);
        }
        table.push(row)?;
    }
    Ok(table)
}

fn energy_comparison_table(
    inst: &ScenarioInstance,
    runs: &[(Method, MethodRun)],
    solver: &SolverConfig,
) -> Result<Table> {
    let h = inst.config().h;
    let series = runs
        .iter()
        .map(|(m, run)| Ok((*m, energy_series(inst, run, solver)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = series
        .first()
        .map(|(_, s)| s.len())
        .ok_or_else(|| Error::contract("no runs to tabulate"))?;
    for (m, s) in &series {
        if s.len() != rows {
            return Err(Error::contract(format!(
                "method '{m}' produced {} samples, expected {rows}",
                s.len()
            )));
        }
    }

    let mut headers = vec!["t".to_string()];
    headers.extend(series.iter().map(|(m, _)| format!("energy_{m}")));
    let mut table = Table::new(headers);
    for k in 0..rows {
        let mut row = vec![format_float(k as f64 * h)];
        row.extend(series.iter().map(|(_, s)| format_float(s[k])));
        table.push(row)?;
    }
    Ok(table)
}

/// Per-step table of a simulation. A single run gets the full state table
/// (t, q, p, energy, momentum maps, Euler-Lagrange residual); several runs
/// side by side get one energy column per method.
pub fn simulate_table(
    inst: &ScenarioInstance,
    runs: &[(Method, MethodRun)],
    solver: &SolverConfig,
) -> Result<Table> {
    match runs {
        [] => Err(Error::contract("no runs to tabulate")),
        [(_, run)] => single_run_table(inst, run, solver),
        many => energy_comparison_table(inst, many, solver),
    }
}

/// Method-by-method comparison against a reference run: terminal
/// configuration error and largest energy deviation along the way. With a
/// single method there is nothing to compare, so the error columns are
/// dropped.
pub fn compare_table(
    inst: &ScenarioInstance,
    runs: &[(Method, MethodRun)],
    reference: &MethodRun,
    solver: &SolverConfig,
) -> Result<Table> {
    let ref_q = positions(reference);
    let ref_e = energy_series(inst, reference, solver)?;
    let comparing = runs.len() >= 2;

    let mut headers = vec!["method".to_string(), "final_energy".to_string()];
    if comparing {
        headers.push("q_err_final".to_string());
        headers.push("energy_err_linf".to_string());
    }
    let mut table = Table::new(headers);
    for (m, run) in runs {
        let qs = positions(run);
        let es = energy_series(inst, run, solver)?;
        if qs.len() != ref_q.len() {
            return Err(Error::contract(format!(
                "method '{m}' produced {} samples, reference has {}",
                qs.len(),
                ref_q.len()
            )));
        }
        let mut row = vec![m.to_string(), format_float(*es.last().unwrap())];
        if comparing {
            let dq: Vec<f64> = qs
                .last()
                .unwrap()
                .iter()
                .zip(ref_q.last().unwrap())
                .map(|(a, b)| a - b)
                .collect();
            let e_err = es
                .iter()
                .zip(&ref_e)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            row.push(format_float(linalg::inf_norm(&dq)));
            row.push(format_float(e_err));
        }
        table.push(row)?;
    }
    Ok(table)
}

/// Row-per-pair table of a Hamilton-Jacobi verification walk.
pub fn hj_table(traj: &DiscreteTrajectory, report: &HjVerifyReport) -> Result<Table> {
    let dim = traj.configs.first().map(|q| q.len()).unwrap_or(0);
    let mut headers = vec!["k".to_string()];
    headers.extend((0..dim).map(|i| format!("q[{i}]")));
    headers.extend((0..dim).map(|i| format!("p[{i}]")));
    headers.push("hj_residual".to_string());
    headers.push("hamilton_residual".to_string());
    let mut table = Table::new(headers);
    for row in &report.rows {
        let k = row.k;
        let mut cells = vec![k.to_string()];
        cells.extend(traj.configs[k].iter().map(|x| format_float(*x)));
        cells.extend(traj.momenta[k].iter().map(|x| format_float(*x)));
        cells.push(format_float(row.hj_plus.abs().max(row.hj_minus.abs())));
        cells.push(format_float(row.hamilton));
        table.push(cells)?;
    }
    Ok(table)
}

/// Momentum-map conservation table: one row per generator.
pub fn noether_table(
    inst: &ScenarioInstance,
    traj: &DiscreteTrajectory,
) -> Result<Table> {
    let mut table = Table::new(["generator", "J_initial", "J_final", "drift"]);
    for gen in inst.generators() {
        let series = crate::symmetry::momentum_series(traj, gen);
        let drift = crate::symmetry::momentum_drift(traj, gen);
        table.push(vec![
            gen.label().to_string(),
            format_float(*series.first().unwrap()),
            format_float(*series.last().unwrap()),
            format_float(drift),
        ])?;
    }
    Ok(table)
}

/// Informational table of an ideal-discretization force probe.
pub fn rayleigh_table(dim: usize, report: &ConjectureProbeReport) -> Result<Table> {
    let mut headers = Vec::new();
    headers.extend((0..dim).map(|i| format!("q0[{i}]")));
    headers.extend((0..dim).map(|i| format!("q1[{i}]")));
    headers.push("residual".to_string());
    headers.push("status".to_string());
    let mut table = Table::new(headers);
    for row in &report.rows {
        let mut cells = Vec::new();
        cells.extend(row.q0.iter().map(|x| format_float(*x)));
        cells.extend(row.q1.iter().map(|x| format_float(*x)));
        cells.push(format_float(row.residual));
        cells.push(row.status.clone());
        table.push(cells)?;
    }
    Ok(table)
}

/// Per-method digest of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub final_q: Vec<f64>,
    pub final_p: Vec<f64>,
    pub final_energy: f64,
    /// Largest interior Euler-Lagrange residual; absent for continuous
    /// methods.
    pub max_del_residual: Option<f64>,
    /// Momentum-map drift per generator label.
    pub momentum_drift: BTreeMap<String, f64>,
    /// Largest configuration error against the closed-form solution, when
    /// the scenario has one.
    pub closed_form_error: Option<f64>,
}

/// Reproducibility header plus per-method digests; serialized as the JSON
/// summary next to the CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub h: f64,
    pub steps: usize,
    pub methods: Vec<String>,
    pub per_method: BTreeMap<String, MethodSummary>,
}

/// Build the JSON summary of a finished run.
pub fn run_summary(
    inst: &ScenarioInstance,
    runs: &[(Method, MethodRun)],
    solver: &SolverConfig,
) -> Result<RunSummary> {
    let config = inst.config();
    let mut per_method = BTreeMap::new();
    for (m, run) in runs {
        let qs = positions(run);
        let ps = momenta(inst, run);
        let energies = energy_series(inst, run, solver)?;
        let max_del_residual = match run {
            MethodRun::Discrete(t) => Some(t.max_del_residual()),
            MethodRun::Continuous(_) => None,
        };
        let mut momentum_drift = BTreeMap::new();
        for gen in inst.generators() {
            let series: Vec<f64> = qs
                .iter()
                .zip(&ps)
                .map(|(q, p)| momentum_map(p, gen, q))
                .collect();
            let drift = series
                .iter()
                .fold(0.0_f64, |acc, j| acc.max((j - series[0]).abs()));
            momentum_drift.insert(gen.label().to_string(), drift);
        }
        let closed_form_error = inst.closed_form().map(|closed| {
            qs.iter()
                .enumerate()
                .map(|(k, q)| {
                    let (q_ref, _) = closed(k as f64 * config.h);
                    let dq: Vec<f64> =
                        q.iter().zip(&q_ref).map(|(a, b)| a - b).collect();
                    linalg::inf_norm(&dq)
                })
                .fold(0.0_f64, f64::max)
        });
        per_method.insert(
            m.to_string(),
            MethodSummary {
                final_q: qs.last().unwrap().clone(),
                final_p: ps.last().unwrap().clone(),
                final_energy: *energies.last().unwrap(),
                max_del_residual,
                momentum_drift,
                closed_form_error,
            },
        );
    }
    Ok(RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config)?,
        seed: config.seed,
        scenario: config.scenario.clone(),
        h: config.h,
        steps: config.steps,
        methods: runs.iter().map(|(m, _)| m.to_string()).collect(),
        per_method,
    })
}

impl RunSummary {
    pub fn render_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::contract(format!("summary serialization failed: {e}")))
            .map(|mut s| {
                s.push('\n');
                s
            })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render_json()?).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<RunSummary> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::contract(format!("summary parse failed: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn run_default(
        name: &str,
        methods: &[Method],
        steps: usize,
    ) -> (ScenarioInstance, Vec<(Method, MethodRun)>, SolverConfig) {
        let mut config = scenarios::default_config(name).unwrap();
        config.steps = steps;
        config.methods = methods.to_vec();
        let inst = ScenarioInstance::build(config).unwrap();
        let solver = SolverConfig::default();
        let runs = methods
            .iter()
            .map(|m| (*m, inst.run_method(*m, &solver).unwrap()))
            .collect();
        (inst, runs, solver)
    }

    #[test]
    fn float_format_round_trips_exactly() {
        for x in [0.1, -3.0e17, 2.225e-308, std::f64::consts::PI] {
            let back: f64 = format_float(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn single_run_table_has_schema_and_row_count() {
        let (inst, runs, solver) = run_default("damped-oscillator", &[Method::Midpoint], 10);
        let table = simulate_table(&inst, &runs, &solver).unwrap();
        assert_eq!(
            table.headers(),
            &["t", "q[0]", "p[0]", "energy", "residual_del"]
        );
        assert_eq!(table.rows().len(), 11);
        // Endpoint residual cells stay blank, interior ones are numeric.
        assert_eq!(table.rows()[0][4], "");
        assert!(table.rows()[5][4].parse::<f64>().is_ok());
    }

    #[test]
    fn generator_columns_appear_when_declared() {
        let (inst, runs, solver) = run_default("polar-rayleigh", &[Method::Midpoint], 5);
        let table = simulate_table(&inst, &runs, &solver).unwrap();
        assert!(table.headers().contains(&"J_dtheta".to_string()));
    }

    #[test]
    fn multi_method_table_is_energy_columns() {
        let (inst, runs, solver) = run_default(
            "damped-oscillator",
            &[Method::Midpoint, Method::Rk4, Method::Benchmark],
            8,
        );
        let table = simulate_table(&inst, &runs, &solver).unwrap();
        assert_eq!(
            table.headers(),
            &["t", "energy_midpoint", "energy_rk4", "energy_benchmark"]
        );
        assert_eq!(table.rows().len(), 9);
    }

    #[test]
    fn render_is_deterministic() {
        let (inst, runs, solver) = run_default("damped-oscillator", &[Method::Midpoint], 6);
        let a = simulate_table(&inst, &runs, &solver).unwrap().render();
        let (inst2, runs2, solver2) = run_default("damped-oscillator", &[Method::Midpoint], 6);
        let b = simulate_table(&inst2, &runs2, &solver2).unwrap().render();
        assert_eq!(a, b);
    }

    #[test]
    fn cells_with_commas_are_quoted() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["plain".into(), "needs, quoting \"here\"".into()])
            .unwrap();
        let text = t.render();
        assert!(text.contains("\"needs, quoting \"\"here\"\"\""));
    }

    #[test]
    fn row_arity_is_enforced() {
        let mut t = Table::new(["a", "b"]);
        assert!(t.push(vec!["1".into()]).is_err());
    }

    #[test]
    fn compare_table_degenerates_for_one_method() {
        let (inst, runs, solver) = run_default("damped-oscillator", &[Method::Midpoint], 6);
        let reference = inst.run_method(Method::Benchmark, &solver).unwrap();
        let table = compare_table(&inst, &runs, &reference, &solver).unwrap();
        assert_eq!(table.headers(), &["method", "final_energy"]);

        let (inst2, runs2, _) = run_default(
            "damped-oscillator",
            &[Method::Midpoint, Method::Euler],
            6,
        );
        let table2 = compare_table(&inst2, &runs2, &reference, &solver).unwrap();
        assert_eq!(
            table2.headers(),
            &["method", "final_energy", "q_err_final", "energy_err_linf"]
        );
        assert_eq!(table2.rows().len(), 2);
    }

    #[test]
    fn summary_reports_closed_form_error_for_exact_method() {
        let (inst, runs, solver) = run_default("damped-oscillator", &[Method::Exact], 20);
        let summary = run_summary(&inst, &runs, &solver).unwrap();
        let m = &summary.per_method["exact"];
        assert!(m.closed_form_error.unwrap() < 1e-10);
        assert!(m.max_del_residual.unwrap() < 1e-9);
        assert_eq!(summary.methods, vec!["exact"]);
        assert_eq!(summary.config_hash.len(), 16);
    }

    #[test]
    fn summary_json_round_trips() {
        let (inst, runs, solver) = run_default("polar-rayleigh", &[Method::Midpoint], 5);
        let summary = run_summary(&inst, &runs, &solver).unwrap();
        let dir = std::env::temp_dir().join("vint-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("summary.json");
        summary.save(&path).unwrap();
        let back = RunSummary::load(&path).unwrap();
        assert_eq!(back.config_hash, summary.config_hash);
        assert_eq!(
            back.per_method["midpoint"].final_q,
            summary.per_method["midpoint"].final_q
        );
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = scenarios::default_config("free-2d").unwrap();
        let mut b = scenarios::default_config("free-2d").unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.h = 0.2;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }

    #[test]
    fn noether_table_lists_each_generator() {
        let (inst, runs, _) = run_default("free-2d", &[Method::Midpoint], 10);
        let MethodRun::Discrete(traj) = &runs[0].1 else {
            panic!("midpoint is discrete");
        };
        let table = noether_table(&inst, traj).unwrap();
        assert_eq!(table.rows().len(), 3);
        assert_eq!(table.headers()[0], "generator");
    }
}
