//! Command bodies. The table builders are public so that tests and other
//! front ends can use them without going through the process boundary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{derive_seed, Settings};
use super::output::{Format, Output};
use super::CliError;
use crate::certify::{
    certify_record, fidelity_bound_two_mub, k_max_two_mub, optimal_operating_point, required_contrast_all_mub,
    required_contrast_two_mub, steering_functional, steering_test_from_data, steering_threshold, CertificationReport,
};
use crate::coincidence::{
    monte_carlo_coincidence, simulate_record, CoincidenceMatrix, ExperimentRecord, MatrixMode, NoiseSpec,
};
use crate::error::{Error, Result};
use crate::mubs::{mub_capability, MubCapability, MubSet};
use crate::noise_model::{contrast_from_ratio, NoiseParams};
use crate::states::{flat_spectrum, gaussian_spectrum};

type CliResult<T> = std::result::Result<T, CliError>;

/// Disagreement, in standard errors, that flags a Monte Carlo cell.
pub const MC_FLAG_THRESHOLD: f64 = 5.0;

// contrast-surface

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub mu: f64,
    pub n_over_eta: f64,
    #[serde(with = "crate::serde_float")]
    pub q: f64,
    /// Analytic optimum `r/(1 - 2r)`; infinite when `r >= 1/2`.
    #[serde(with = "crate::serde_float")]
    pub mu_opt: f64,
    /// Largest contrast within this `n_over_eta` row of the grid.
    pub row_optimum: bool,
}

fn check_non_negative(name: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v >= 0.0)) {
        Some(&value) => Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative",
        }),
        None => Ok(()),
    }
}

pub fn contrast_surface(mu: &[f64], ratios: &[f64]) -> Result<Vec<SurfaceRow>> {
    check_non_negative("mu", mu)?;
    check_non_negative("n_over_eta", ratios)?;
    let rows = ratios
        .par_iter()
        .map(|&r| {
            let qs = mu.iter().map(|&m| contrast_from_ratio(m, r)).collect::<Result<Vec<_>>>()?;
            let best = qs
                .iter()
                .enumerate()
                .fold(0, |best, (i, q)| if *q > qs[best] { i } else { best });
            let mu_opt = if r < 0.5 { r / (1.0 - 2.0 * r) } else { f64::INFINITY };
            Ok(mu
                .iter()
                .zip(qs)
                .enumerate()
                .map(|(i, (&m, q))| SurfaceRow {
                    mu: m,
                    n_over_eta: r,
                    q,
                    mu_opt,
                    row_optimum: i == best,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn contrast_surface_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let mu = settings.grid("mu", "1e-4:10:51:log")?;
    let ratios = settings.grid("n_over_eta", "1e-4,1e-3,1e-2,1e-1")?;
    let rows = contrast_surface(&mu, &ratios)?;
    let mut output = Output::new(out, format, settings.hash())?;
    output.table("contrast_surface", &rows)?;
    output.finish("contrast-surface", settings)
}

// required-contrast

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredRow {
    pub k: usize,
    pub d: usize,
    pub q_two_mub: f64,
    pub q_all_mub: f64,
    /// This `d` minimises the two-MUB requirement for `k`.
    pub d_opt: bool,
}

pub fn required_contrast_rows(ks: &[usize], ds: &[usize]) -> Result<Vec<RequiredRow>> {
    let rows = ks
        .par_iter()
        .map(|&k| {
            let op = optimal_operating_point(k)?;
            ds.iter()
                .filter(|&&d| d >= k)
                .map(|&d| {
                    Ok(RequiredRow {
                        k,
                        d,
                        q_two_mub: required_contrast_two_mub(k, d)?,
                        q_all_mub: required_contrast_all_mub(k, d)?,
                        d_opt: d == op.d_opt,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn required_contrast_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let ks = settings.int_grid("k", "3,5,7,11")?;
    let ds = settings.int_grid("d", "2:60:59")?;
    let rows = required_contrast_rows(&ks, &ds)?;
    let mut output = Output::new(out, format, settings.hash())?;
    output.table("required_contrast", &rows)?;
    output.finish("required-contrast", settings)
}

// table1

/// Measured (d, average Q) pairs re-analysed by `table1`.
pub const TABLE1_INPUTS: [(usize, f64); 4] = [(3, 71.0), (5, 70.0), (7, 68.0), (11, 81.0)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub d: usize,
    pub q_exp: f64,
    pub fidelity_pred: f64,
    pub k_pred: usize,
    /// Best dimension for certifying `k = d`.
    pub d_opt: usize,
    pub q_opt: f64,
}

pub fn table1_rows() -> Result<Vec<Table1Row>> {
    TABLE1_INPUTS
        .iter()
        .map(|&(d, q)| {
            let k = k_max_two_mub(q, d);
            // operating point for certifying the full dimension d
            let op = optimal_operating_point(d)?;
            Ok(Table1Row {
                d,
                q_exp: q,
                fidelity_pred: fidelity_bound_two_mub(q, d),
                k_pred: k,
                d_opt: op.d_opt,
                q_opt: op.q_opt,
            })
        })
        .collect()
}

pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut s = format!("{:>4} {:>6} {:>8} {:>7} {:>6} {:>6}\n", "d", "Q_exp", "F_pred", "k_pred", "d_opt", "Q_opt");
    for r in rows {
        s.push_str(&format!(
            "{:>4} {:>6} {:>7.1}% {:>7} {:>6} {:>6.1}\n",
            r.d,
            r.q_exp,
            100.0 * r.fidelity_pred,
            r.k_pred,
            r.d_opt,
            r.q_opt
        ));
    }
    s
}

pub fn table1_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let rows = table1_rows()?;
    print!("{}", format_table1(&rows));
    if out.is_some() {
        let mut output = Output::new(out, format, settings.hash())?;
        output.table("table1", &rows)?;
        output.finish("table1", settings)?;
    }
    Ok(())
}

// simulate

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPoint {
    pub d: usize,
    /// Envelope width; infinite for a flat spectrum.
    pub sigma: f64,
    pub noise: Option<NoiseSpec>,
    pub events: Option<u64>,
    pub seed: u64,
}

/// Builds the record for one point (all MUBs for prime `d`, the
/// computational/Fourier pair otherwise) and certifies it.
pub fn simulate_point(point: &SimulationPoint, config_hash: Option<&str>) -> Result<(ExperimentRecord, CertificationReport)> {
    let spectrum = if point.sigma.is_infinite() {
        flat_spectrum(point.d)?
    } else {
        gaussian_spectrum(point.d, point.sigma)?
    };
    let set = MubSet::best_available(point.d)?;
    let mut record = simulate_record(&spectrum, &set, point.noise, point.events, point.seed)?;
    if let Some(params) = record.params.as_mut() {
        params.sigma = Some(point.sigma);
        params.config_hash = config_hash.map(str::to_string);
    }
    let report = certify_record(&record)?;
    Ok((record, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub index: usize,
    pub d: usize,
    #[serde(with = "crate::serde_float")]
    pub sigma: f64,
    #[serde(with = "crate::serde_float::option")]
    pub target_q: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub average_q: f64,
    pub fidelity_lower_bound: f64,
    pub fidelity_exact: Option<f64>,
    pub k_two_mub: usize,
    pub k_all_mub: Option<usize>,
    pub k_all_mub_predicted: usize,
    pub certified_k: usize,
    pub steering_violated: Option<bool>,
}

impl SimulateRow {
    fn new(index: usize, point: &SimulationPoint, report: &CertificationReport) -> Self {
        let target_q = match point.noise {
            Some(NoiseSpec::TargetContrast(q)) => Some(q),
            _ => None,
        };
        Self {
            index,
            d: point.d,
            sigma: point.sigma,
            target_q,
            average_q: report.average_q,
            fidelity_lower_bound: report.fidelity_lower_bound,
            fidelity_exact: report.fidelity_exact,
            k_two_mub: report.k_two_mub,
            k_all_mub: report.k_all_mub,
            k_all_mub_predicted: report.k_all_mub_predicted,
            certified_k: report.certified_k,
            steering_violated: report.steering.map(|s| s.violated),
        }
    }
}

pub fn simulate_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let ds = settings.int_grid("d", "7")?;
    let sigma = settings.f64("sigma", 1e5)?;
    let physical = [settings.optional_f64("mu")?, settings.optional_f64("n")?, settings.optional_f64("eta")?];
    let noises: Vec<Option<NoiseSpec>> = match physical {
        [Some(mu), Some(n), Some(eta)] => vec![Some(NoiseSpec::Physical(NoiseParams::new(mu, n, eta)?))],
        [None, None, None] => settings
            .grid("target_q", "50")?
            .into_iter()
            .map(|q| Some(NoiseSpec::TargetContrast(q)))
            .collect(),
        _ => return Err(CliError::Validation("physical noise needs all of --mu, --n and --eta".into())),
    };
    let events = settings.optional_u64("events")?;
    let seed = match events {
        Some(_) => settings.seed()?,
        None => settings.optional_u64("seed")?.unwrap_or(0),
    };
    for &d in &ds {
        if mub_capability(d) == MubCapability::TwoBasisOnly {
            log::warn!("d = {d} is not prime; simulating the computational/Fourier pair only");
        }
    }
    let points: Vec<SimulationPoint> = ds
        .iter()
        .flat_map(|&d| noises.iter().map(move |&noise| (d, noise)))
        .enumerate()
        .map(|(i, (d, noise))| SimulationPoint {
            d,
            sigma,
            noise,
            events,
            seed: derive_seed(seed, i as u64),
        })
        .collect();
    let hash = settings.hash();
    let results = points
        .par_iter()
        .map(|p| simulate_point(p, Some(&hash)))
        .collect::<Result<Vec<_>>>()?;

    let mut output = Output::new(out, format, hash)?;
    let mut rows = Vec::with_capacity(points.len());
    for (i, (point, (record, report))) in points.iter().zip(&results).enumerate() {
        if output.has_dir() {
            output.json(&format!("records/record_{i:03}.json"), record)?;
            output.json(&format!("reports/report_{i:03}.json"), report)?;
        }
        rows.push(SimulateRow::new(i, point, report));
    }
    output.table("simulate", &rows)?;
    output.finish("simulate", settings)
}

// certify

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn with_path(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| {
        let inner = CliError::from(e);
        match inner {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

fn normalized(mut m: CoincidenceMatrix, path: &Path) -> CliResult<CoincidenceMatrix> {
    if m.mode() == MatrixMode::Probability && m.normalize_input().map_err(with_path(path))? {
        log::warn!(
            "{}: probability matrix ({}, {}) renormalised",
            path.display(),
            m.signal_mub(),
            m.idler_mub()
        );
    }
    Ok(m)
}

/// Loads one JSON record, or CSV matrices labelled by their headers. The
/// MUB-set size for CSV input defaults to the largest label plus one.
pub fn load_record(inputs: &[PathBuf], mub_count: Option<usize>) -> CliResult<ExperimentRecord> {
    let is_json = |p: &PathBuf| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if inputs.iter().any(is_json) {
        let [path] = inputs else {
            return Err(CliError::Validation("a JSON record must be the only input".into()));
        };
        let mut record = ExperimentRecord::from_json(&read_input(path)?).map_err(with_path(path))?;
        record.matrices = std::mem::take(&mut record.matrices)
            .into_iter()
            .map(|m| normalized(m, path))
            .collect::<CliResult<_>>()?;
        return Ok(record);
    }
    let mut matrices = Vec::with_capacity(inputs.len());
    for path in inputs {
        let m = CoincidenceMatrix::parse_csv(&read_input(path)?).map_err(with_path(path))?;
        matrices.push(normalized(m, path)?);
    }
    let d = matrices.first().map(|m| m.d()).ok_or_else(|| CliError::Validation("no input matrices".into()))?;
    let count = mub_count.unwrap_or_else(|| matrices.iter().map(|m| m.signal_mub().max(m.idler_mub()) + 1).max().unwrap_or(1));
    Ok(ExperimentRecord::new(d, count, matrices)?)
}

pub fn certify_cmd(settings: &mut Settings, out: Option<PathBuf>, inputs: &[PathBuf]) -> CliResult<()> {
    let mub_count = settings.optional_u64("mub_count")?.map(|m| m as usize);
    let record = load_record(inputs, mub_count)?;
    let report = certify_record(&record)?;
    let mut output = Output::new(out, Format::Json, settings.hash())?;
    output.json("report.json", &report)?;
    output.finish("certify", settings)
}

// validate-mc

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub mu: f64,
    pub n: f64,
    pub eta: f64,
    pub trials: u64,
    pub p_same_mc: f64,
    pub p_same_analytic: f64,
    #[serde(with = "crate::serde_float")]
    pub z_same: f64,
    pub p_cross_mc: f64,
    pub p_cross_analytic: f64,
    #[serde(with = "crate::serde_float")]
    pub z_cross: f64,
    #[serde(with = "crate::serde_float")]
    pub q_mc: f64,
    pub q_analytic: f64,
    /// NaN when no cross coincidence was observed.
    #[serde(with = "crate::serde_float")]
    pub z_q: f64,
    pub flagged: bool,
}

fn z_score(observed: f64, expected: f64, se: f64) -> f64 {
    if se > 0.0 {
        (observed - expected) / se
    } else if observed == expected {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares one Monte Carlo cell with the analytic coincidence formulas.
/// `corruption` scales the analytic matched probability (1 for the real
/// check).
pub fn validate_mc_cell(params: &NoiseParams, trials: u64, seed: u64, corruption: f64) -> Result<McRow> {
    let mc = monte_carlo_coincidence(params, trials, seed)?;
    let p_cross = params.accidental_coincidence();
    let p_same = (params.signal_coincidence() + p_cross) * corruption;
    let q_analytic = p_same / p_cross;
    let z_same = z_score(mc.p_same(), p_same, mc.standard_error(p_same));
    let z_cross = z_score(mc.p_cross(), p_cross, mc.standard_error(p_cross));
    let (q_mc, z_q) = if mc.cross_mode == 0 {
        (f64::INFINITY, f64::NAN)
    } else {
        (mc.ratio(), z_score(mc.ratio(), q_analytic, mc.ratio_standard_error(p_same, p_cross)))
    };
    let flagged = [z_same, z_cross, z_q].iter().any(|z| z.abs() > MC_FLAG_THRESHOLD);
    Ok(McRow {
        mu: params.mu,
        n: params.n,
        eta: params.eta,
        trials,
        p_same_mc: mc.p_same(),
        p_same_analytic: p_same,
        z_same,
        p_cross_mc: mc.p_cross(),
        p_cross_analytic: p_cross,
        z_cross,
        q_mc,
        q_analytic,
        z_q,
        flagged,
    })
}

pub fn validate_mc_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let mus = settings.grid("mu", "1e-3,3e-3")?;
    let ns = settings.grid("n", "1e-4,1e-3")?;
    let etas = settings.grid("eta", "0.3,0.5,0.8")?;
    let trials = settings.u64("trials", 10_000_000)?;
    let paired = settings.bool("paired")?;
    let corruption = settings.optional_f64("corrupt_formula")?.unwrap_or(1.0);
    let seed = settings.seed()?;
    if trials == 0 {
        return Err(CliError::Validation("`trials` must be positive".into()));
    }
    let pairs: Vec<(f64, f64)> = if paired {
        if mus.len() != ns.len() {
            return Err(CliError::Validation("--paired needs mu and n grids of equal length".into()));
        }
        mus.iter().copied().zip(ns.iter().copied()).collect()
    } else {
        mus.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect()
    };
    let cells = pairs
        .iter()
        .flat_map(|&(mu, n)| etas.iter().map(move |&eta| NoiseParams::new(mu, n, eta)))
        .collect::<Result<Vec<_>>>()?;
    let hash = settings.hash();
    let rows = cells
        .iter()
        .enumerate()
        .map(|(i, p)| validate_mc_cell(p, trials, derive_seed(seed, i as u64), corruption))
        .collect::<Result<Vec<_>>>()?;
    let flagged = rows.iter().filter(|r| r.flagged).count();
    let mut output = Output::new(out, format, hash)?;
    output.table("validate_mc", &rows)?;
    output.finish("validate-mc", settings)?;
    if flagged > 0 {
        return Err(CliError::Flagged(flagged));
    }
    Ok(())
}

// steering-scan

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringRow {
    pub d: usize,
    #[serde(with = "crate::serde_float")]
    pub q: f64,
    pub functional: f64,
    pub violated: bool,
    /// Threshold contrast for this `d`.
    pub boundary: f64,
    pub data_margin: Option<f64>,
    pub data_violated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub d: usize,
    pub q_star: f64,
}

pub fn steering_boundary(ds: &[usize]) -> Result<Vec<BoundaryRow>> {
    ds.par_iter()
        .map(|&d| Ok(BoundaryRow { d, q_star: steering_threshold(d)? }))
        .collect()
}

/// Functional over the `(d, q)` grid. With `events`, each point also gets a
/// finite-count flat-state record whose entropic verdict is reported.
pub fn steering_scan_rows(ds: &[usize], qs: &[f64], events: Option<u64>, seed: u64) -> Result<Vec<SteeringRow>> {
    let boundary = steering_boundary(ds)?;
    let rows = ds
        .par_iter()
        .zip(&boundary)
        .enumerate()
        .map(|(di, (&d, b))| {
            qs.iter()
                .enumerate()
                .map(|(qi, &q)| {
                    let functional = steering_functional(q, d)?;
                    let (data_margin, data_violated) = match events {
                        Some(n) => {
                            let set = MubSet::two_basis(d)?;
                            let index = (di * qs.len() + qi) as u64;
                            let record = simulate_record(
                                &flat_spectrum(d)?,
                                &set,
                                Some(NoiseSpec::TargetContrast(q)),
                                Some(n),
                                derive_seed(seed, index),
                            )?;
                            let verdict = steering_test_from_data(&record.matrices[0], &record.matrices[1], d)?;
                            (Some(verdict.margin), Some(verdict.violated))
                        }
                        None => (None, None),
                    };
                    Ok(SteeringRow {
                        d,
                        q,
                        functional,
                        violated: functional < 0.0,
                        boundary: b.q_star,
                        data_margin,
                        data_violated,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn steering_scan_cmd(settings: &mut Settings, out: Option<PathBuf>, format: Format) -> CliResult<()> {
    let ds = settings.int_grid("d", "2,3,5,7,11,13")?;
    let qs = settings.grid("q", "2:64:32:log")?;
    let events = settings.optional_u64("events")?;
    let seed = match events {
        Some(_) => settings.seed()?,
        None => 0,
    };
    let rows = steering_scan_rows(&ds, &qs, events, seed)?;
    let boundary = steering_boundary(&ds)?;
    let mut output = Output::new(out, format, settings.hash())?;
    output.table("steering_scan", &rows)?;
    output.table("steering_boundary", &boundary)?;
    output.finish("steering-scan", settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_unit_point() {
        let rows = contrast_surface(&[1.0], &[0.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].q, 3.0);
        assert!(rows[0].row_optimum);
        assert!(contrast_surface(&[-1.0], &[0.1]).is_err());
        assert!(contrast_surface(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn surface_ridge() {
        let mu = super::super::parse_grid("1e-5:1:2001:log").unwrap();
        let ratios = [1e-4, 1e-3, 1e-2, 0.1];
        let rows = contrast_surface(&mu, &ratios).unwrap();
        assert_eq!(rows.len(), mu.len() * ratios.len());
        let step = (mu[1] / mu[0]).ln();
        for r in ratios {
            let best = rows.iter().find(|x| x.n_over_eta == r && x.row_optimum).unwrap();
            assert!((best.mu / best.mu_opt).ln().abs() <= step, "r = {r}");
        }
    }

    #[test]
    fn required_rows_mark_the_optimum() {
        let rows = required_contrast_rows(&[3], &(2..=10).collect::<Vec<_>>()).unwrap();
        assert_eq!(rows.first().unwrap().d, 3);
        let opt: Vec<_> = rows.iter().filter(|r| r.d_opt).collect();
        assert_eq!(opt.len(), 1);
        assert_eq!((opt[0].d, opt[0].q_two_mub), (4, 9.0));
    }

    #[test]
    fn table1_printout() {
        let text = format_table1(&table1_rows().unwrap());
        for needle in ["94.5%", "89.2%", "83.8%", "78.0%", "55.8", "32.5", "20.8", "9.0"] {
            assert!(text.contains(needle), "{needle} missing from\n{text}");
        }
    }

    #[test]
    fn corrupted_formula_is_flagged() {
        let p = NoiseParams::new(1e-3, 1e-4, 0.5).unwrap();
        assert!(!validate_mc_cell(&p, 2_000_000, 3, 1.0).unwrap().flagged);
        assert!(validate_mc_cell(&p, 2_000_000, 3, 1.5).unwrap().flagged);
    }

    #[test]
    fn steering_rows() {
        let rows = steering_scan_rows(&[2, 3], &[2.0, 50.0], Some(100_000), 4).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.violated, r.q > r.boundary);
            assert_eq!(r.data_violated, Some(r.data_margin.unwrap() > 0.0));
        }
    }
}
