use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use vblast_core::analytic::{system_ber_with, AnalyticConfig, BerCurve, Ensemble, PostSnrEnsemble};
use vblast_core::channel::FadingParams;
use vblast_core::convcode::{distance_spectrum, free_distance, is_catastrophic, safe_len_cap};
use vblast_core::exec::Execution;
use vblast_core::mimo::Criterion;
use vblast_core::modem::{q_function, QamParams};
use vblast_core::quad::Quadrature;
use vblast_core::rcpc::{spectrum_table, RcpcFamily, SpectrumRow};
use vblast_core::reference;
use vblast_core::simkit::run_sweep;

use crate::config::{schema, AnalyticRun, GateSpec, SimulateRun, SpectrumRun};
use crate::output::{num, Table};
use crate::CliError;

pub struct Overrides {
    pub seed: Option<u64>,
    pub dmax: Option<u32>,
}

fn numerical(e: vblast_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn base_table(columns: &[&str], command: &str) -> Table {
    let mut t = Table::new(columns);
    t.meta("tool", concat!("vblast ", env!("CARGO_PKG_VERSION"))).meta("command", command);
    t
}

fn is_reference_family(run: &SpectrumRun, family: &RcpcFamily) -> bool {
    let Ok(reference) = reference::family() else { return false };
    run.family.blocking == reference::BLOCKING
        && family.mother() == reference.mother()
        && family.members() == reference.members()
}

pub fn spectrum(run: &SpectrumRun, out: &Path, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let family = run.family.build()?;
    if is_catastrophic(family.mother()) {
        return Err(CliError::Schema("mother code is catastrophic".into()));
    }
    let dmax = ov.dmax.unwrap_or(run.dmax);
    if dmax == 0 {
        return Err(CliError::Schema("dmax must be >= 1".into()));
    }
    if run.compare_reference && !is_reference_family(run, &family) {
        return Err(CliError::Schema("compare_reference needs the built-in [657 435] family".into()));
    }
    let rows = spectrum_table(family.mother(), run.family.blocking, family.members(), dmax, Execution::Parallel)
        .map_err(numerical)?;

    let mut columns = vec!["encoder".to_string(), "matrix".into(), "rate".into(), "d_free".into(), "status".into(), "quantity".into()];
    columns.extend((1..=dmax).map(|d| format!("d{d}")));
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = base_table(&refs, "spectrum");
    table.meta("seed", "none").meta("dmax", dmax).config(run);
    for (i, row) in rows.iter().enumerate() {
        let matrix = family.members()[i].to_string();
        match row {
            SpectrumRow::Catastrophic { rate } => {
                let mut cells = vec![json!(i), json!(matrix), json!(rate.to_string()), Value::Null, json!("catastrophic"), Value::Null];
                cells.extend((1..=dmax).map(|_| Value::Null));
                table.push(cells);
            }
            SpectrumRow::Spectrum { rate, spectrum } => {
                for (quantity, get) in [("c", 0), ("a", 1)] {
                    let mut cells = vec![
                        json!(i),
                        json!(matrix),
                        json!(rate.to_string()),
                        spectrum.d_free.map_or(Value::Null, |d| json!(d)),
                        json!("ok"),
                        json!(quantity),
                    ];
                    cells.extend((1..=dmax).map(|d| json!(if get == 0 { spectrum.c_d(d) } else { spectrum.a_d(d) })));
                    table.push(cells);
                }
            }
        }
    }
    let mut written = table.write(out, "spectrum")?;
    if run.compare_reference {
        let rows = if dmax >= reference::D_MAX {
            rows
        } else {
            spectrum_table(family.mother(), run.family.blocking, family.members(), reference::D_MAX, Execution::Parallel)
                .map_err(numerical)?
        };
        let path = out.join("spectrum_discrepancy.txt");
        std::fs::write(&path, reference::report(&reference::compare(&rows)))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

fn rho_label(rho: f64) -> String {
    format!("{rho}").replace('.', "p")
}

fn curve_columns() -> [&'static str; 9] {
    ["ebn0_db", "post_ebn0", "p_b_qam", "ln_factor", "union_bound", "tail_ratio", "log10_raw", "raw", "clipped"]
}

fn crossing(curve: &BerCurve, level: f64) -> Value {
    curve.crossing_db(level).map_or(Value::Null, num)
}

pub fn analytic(run: &AnalyticRun, out: &Path, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let family = run.family.build()?;
    let grid = run.grid_db.values()?;
    let qam = QamParams::new(run.qam).map_err(schema)?;
    if run.criteria.is_empty() || run.rho.is_empty() {
        return Err(CliError::Schema("criteria and rho lists must be non-empty".into()));
    }
    let ensemble = Ensemble {
        realizations: run.ensemble.realizations,
        seed: ov.seed.unwrap_or(run.ensemble.seed),
    };
    let explicit = run.members.is_some();
    let members: Vec<usize> = run.members.clone().unwrap_or_else(|| (0..family.len()).collect());
    let mut spectra = BTreeMap::new();
    for &member in &members {
        if member >= family.len() {
            return Err(CliError::Schema(format!("member {member} outside a family of {}", family.len())));
        }
        let eq = match family.equivalent(member) {
            Ok(eq) => eq,
            Err(vblast_core::Error::Catastrophic) if !explicit => continue,
            Err(e) => return Err(schema(e)),
        };
        let dmax = match ov.dmax.or(run.dmax) {
            Some(d) => d,
            None => free_distance(&eq).map_err(numerical)? + 10,
        };
        spectra.insert(member, distance_spectrum(&eq, dmax, safe_len_cap(&eq, dmax)).map_err(numerical)?);
    }
    let fading = FadingParams::new(run.m, 0.0).map_err(schema)?;
    if run.tx > run.rx {
        return Err(CliError::Schema("analytic curves need tx <= rx".into()));
    }
    let post = PostSnrEnsemble::new(run.rx, run.tx, fading.m, &ensemble).map_err(schema)?;

    let mut written = Vec::new();
    let mut summary = base_table(
        &["file", "criterion", "member", "rate", "rho", "d_free", "dmax", "crossing_1e-3_db", "crossing_1e-5_db"],
        "analytic",
    );
    summary.meta("seed", ensemble.seed).config(run);
    for &criterion in &run.criteria {
        for (&member, spectrum) in &spectra {
            for &rho in &run.rho {
                let config = AnalyticConfig {
                    qam,
                    fading: FadingParams::new(run.m, rho).map_err(schema)?,
                    rx: run.rx,
                    tx: run.tx,
                    criterion: criterion.into(),
                    correlated: rho > 0.0,
                    rate: family.rate(member),
                    period: family.period(),
                    spectrum: spectrum.clone(),
                    grid_db: grid.clone(),
                    factor: run.factor.into(),
                    branches: run.branches.into(),
                    ensemble,
                    eta: run.eta.into(),
                    quad: Quadrature::default(),
                };
                config.validate().map_err(schema)?;
                let curve = system_ber_with(&config, &post, Execution::Parallel).map_err(numerical)?;
                let crit = Criterion::from(criterion).to_string().to_lowercase();
                let stem = format!("analytic_{crit}_enc{member}_rho{}", rho_label(rho));
                let mut table = base_table(&curve_columns(), "analytic");
                table
                    .meta("seed", ensemble.seed)
                    .meta("criterion", Criterion::from(criterion))
                    .meta("member", member)
                    .meta("rate", family.rate(member))
                    .meta("rho", rho)
                    .meta("correlated", config.correlated)
                    .meta("antennas", format!("{}x{}", run.rx, run.tx))
                    .meta("m", run.m)
                    .config(&config);
                for p in &curve.points {
                    table.push(vec![
                        num(p.ebn0_db),
                        num(p.post_ebn0),
                        num(p.p_b_qam),
                        num(p.ln_factor),
                        num(p.union_bound),
                        num(p.tail_ratio),
                        num(p.log10_raw),
                        num(p.raw),
                        num(p.clipped),
                    ]);
                }
                written.extend(table.write(out, &stem)?);
                summary.push(vec![
                    json!(format!("{stem}.csv")),
                    json!(Criterion::from(criterion).to_string()),
                    json!(member),
                    json!(family.rate(member).to_string()),
                    num(rho),
                    spectrum.d_free.map_or(Value::Null, |d| json!(d)),
                    json!(spectrum.d_max),
                    crossing(&curve, 1e-3),
                    crossing(&curve, 1e-5),
                ]);
            }
        }
    }
    written.extend(summary.write(out, "analytic_summary")?);
    Ok(written)
}

pub struct SimulateOutcome {
    pub written: Vec<PathBuf>,
    pub gate_failures: Vec<String>,
}

pub fn simulate(run: &SimulateRun, out: &Path, ov: &Overrides) -> Result<SimulateOutcome, CliError> {
    let mut run = run.clone();
    if let Some(seed) = ov.seed {
        run.seed = seed;
    }
    let config = run.link()?;
    let summary = run_sweep(&config, Execution::Parallel).map_err(numerical)?;

    let mut gate_failures = Vec::new();
    let quad = Quadrature::default();
    for gate in &run.gates {
        match gate {
            GateSpec::AwgnClosedForm { sigmas } => {
                for p in &summary.points {
                    let x = 10f64.powf(p.ebn0_db / 10.0);
                    let exact = q_function((2.0 * x).sqrt(), &quad).map_err(numerical)?;
                    let z = if p.std_err > 0.0 { (p.ber - exact) / p.std_err } else { f64::INFINITY };
                    if z.abs() > *sigmas {
                        gate_failures.push(format!(
                            "awgn_closed_form at {} dB: BER {:.4e} vs {:.4e} ({z:.2} standard errors)",
                            p.ebn0_db, p.ber, exact
                        ));
                    }
                }
            }
        }
    }

    let mut table = base_table(&["ebn0_db", "trials", "bits", "errors", "ber", "std_err", "std_err_trials", "resampled"], "simulate");
    table
        .meta("seed", summary.seed)
        .meta("wall_clock_s", format!("{:.3}", summary.wall_clock_s))
        .meta("gates", if gate_failures.is_empty() { "pass".to_string() } else { format!("FAIL ({})", gate_failures.len()) })
        .config(&run);
    for p in &summary.points {
        table.push(vec![
            num(p.ebn0_db),
            json!(p.trials),
            json!(p.bits),
            json!(p.errors),
            num(p.ber),
            num(p.std_err),
            num(p.std_err_trials),
            json!(p.resampled),
        ]);
    }
    Ok(SimulateOutcome { written: table.write(out, "simulate")?, gate_failures })
}
