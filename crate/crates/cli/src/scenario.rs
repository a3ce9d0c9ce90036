//! Scenario execution. Each command validates its whole configuration
//! section first, computes every artifact in memory, and only then touches
//! the output directory, so a failed run writes nothing.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use extphase::actionwave::{linear_time_slope, ActionWaveState, Boundary, Grid2};
use extphase::dynamics::{
    hamiltonian_eval, integrate_trajectory, ConstantPotential, HamiltonianSpec, HarmonicPotential,
};
use extphase::phase::mass_shell_residual;
use extphase::relgas::{
    fokker_planck_residual, gt_argmax, sound_velocity, sweep, velocity_cutoff_fraction, GasParams, MomentumGrid,
};
use extphase::resonance::{fit_inverse_width, lifetime_bound_check, read_table, LoadedTable};
use extphase::symmetry::{boost_finite, check_canonical, Branch};
use extphase::wigner::{
    glauber_uncertainty, hydrogen_corrections, wigner_transform, GlauberPacket, SpatialGrid, WavePacket, Wigner1,
};
use extphase::{ExtendedState, Vec3};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{BoundaryConfig, BranchConfig, Format, Issues, PotentialConfig, ScenarioConfig, StateConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{heatmap, line_plot, Overlay};
use crate::table::{Cell, Series, Table};

/// Resonance table shipped with the binary and used when `fit.table` is unset.
pub const BUNDLED_TABLE: &str = include_str!("../fixtures/resonances.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Trajectory,
    Boost,
    Wave,
    Wigner,
    Gas,
    Fit,
    Hydrogen,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Boost => "boost",
            Command::Wave => "wave",
            Command::Wigner => "wigner",
            Command::Gas => "gas",
            Command::Fit => "fit",
            Command::Hydrogen => "hydrogen",
        }
    }
}

/// One output file held in memory until the run succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Written as `manifest.json` next to the artifacts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub tool_version: String,
    pub config: ScenarioConfig,
    pub files: Vec<ManifestEntry>,
}

struct Outputs {
    format: Format,
    plot: bool,
    items: Vec<Artifact>,
}

impl Outputs {
    fn table(&mut self, stem: &str, t: &Table) -> CliResult<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.items.push(Artifact {
            name: format!("{stem}.{ext}"),
            bytes: t.render(self.format)?,
        });
        Ok(())
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
        bytes.push(b'\n');
        self.items.push(Artifact {
            name: name.to_string(),
            bytes,
        });
        Ok(())
    }

    fn svg(&mut self, name: &str, svg: String) {
        self.items.push(Artifact {
            name: name.to_string(),
            bytes: svg.into_bytes(),
        });
    }
}

/// Runs `command` and returns its artifacts (without the manifest).
pub fn run_scenario(command: Command, config: &ScenarioConfig, strict: bool) -> CliResult<Vec<Artifact>> {
    let mut out = Outputs {
        format: config.output.format,
        plot: config.output.plot,
        items: Vec::new(),
    };
    match command {
        Command::Trajectory => trajectory(config, &mut out)?,
        Command::Boost => boost(config, &mut out)?,
        Command::Wave => wave(config, &mut out)?,
        Command::Wigner => wigner(config, &mut out)?,
        Command::Gas => gas(config, &mut out)?,
        Command::Fit => fit(config, strict, &mut out)?,
        Command::Hydrogen => hydrogen(config, &mut out)?,
    }
    Ok(out.items)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn build_manifest(command: Command, config: &ScenarioConfig, artifacts: &[Artifact]) -> Manifest {
    Manifest {
        command,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        files: artifacts
            .iter()
            .map(|a| ManifestEntry {
                path: a.name.clone(),
                sha256: sha256_hex(&a.bytes),
                bytes: a.bytes.len(),
            })
            .collect(),
    }
}

/// Writes the artifacts and `manifest.json` into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact], manifest: &Manifest) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes)?;
    Ok(path)
}

fn extended_state(s: &StateConfig, m0: f64, c: f64) -> ExtendedState {
    let (q, p) = (Vec3::from(s.q), Vec3::from(s.p));
    match s.p0 {
        Some(p0) => ExtendedState::new(s.q0, q, p0, p),
        None => ExtendedState::on_shell(s.q0, q, p, m0, c),
    }
}

fn state_row(t: &mut Table, label: &str, x: &ExtendedState, m0: f64, c: f64) {
    let mut row: Vec<Cell> = vec![label.into()];
    row.extend(x.to_array().iter().map(|v| Cell::Num(*v)));
    row.push(mass_shell_residual(x, m0, c).into());
    row.push(x.energy(c).into());
    t.push(row);
}

fn trajectory(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let (u, t) = (cfg.units, &cfg.trajectory);
    let mut issues = Issues::default();
    u.validate(&mut issues);
    t.state.validate("trajectory.state", &mut issues);
    issues.positive("trajectory.du", t.du);
    issues.check(t.steps >= 1, || "trajectory.steps must be at least 1".into());
    let spec = match t.potential {
        PotentialConfig::None => HamiltonianSpec::free(u.m0, u.c),
        PotentialConfig::Constant { value } => {
            issues.finite("trajectory.potential.value", value);
            HamiltonianSpec::with_potential(Arc::new(ConstantPotential(value)), u.m0, u.c)
        }
        PotentialConfig::Harmonic { k, center } => {
            issues.finite("trajectory.potential.k", k);
            center.iter().for_each(|v| issues.finite("trajectory.potential.center", *v));
            let pot = HarmonicPotential {
                k,
                center: Vec3::from(center),
            };
            HamiltonianSpec::with_potential(Arc::new(pot), u.m0, u.c)
        }
    };
    issues.into_result()?;
    let x0 = extended_state(&t.state, u.m0, u.c);
    if let Err(e) = hamiltonian_eval(&spec, &x0) {
        return Err(CliError::validation(format!("trajectory.state: {e}")));
    }
    let states = integrate_trajectory(&spec, &x0, t.du, t.steps)?;
    let mut table = Table::new(&["u", "q0", "q1", "q2", "q3", "p0", "p1", "p2", "p3"]);
    for s in &states {
        let mut row = vec![s.u];
        row.extend(s.to_array());
        table.push_nums(&row);
    }
    out.table("trajectory", &table)?;
    if out.plot {
        let series = Series::from_csv(&table.to_csv()?)?;
        out.svg("trajectory.svg", line_plot(&series, "u", &["q0", "q1", "q2", "q3"], None, false, "trajectory")?);
    }
    Ok(())
}

fn boost(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let (u, b) = (cfg.units, &cfg.boost);
    let mut issues = Issues::default();
    u.validate(&mut issues);
    b.state.validate("boost.state", &mut issues);
    b.velocity.iter().for_each(|v| issues.finite("boost.velocity", *v));
    let v = Vec3::from(b.velocity);
    if b.branch == BranchConfig::Lorentz {
        issues.check(v.norm() < u.c, || format!("boost.velocity: |V| = {} must be below c = {}", v.norm(), u.c));
    }
    issues.check(b.samples >= 1, || "boost.samples must be at least 1".into());
    issues.into_result()?;

    let branch = match b.branch {
        BranchConfig::Lorentz => Branch::Lorentz,
        BranchConfig::So4 => Branch::So4,
    };
    let x = extended_state(&b.state, u.m0, u.c);
    let y = boost_finite(&x, &v, u.c, branch)?;
    let c = u.c;
    let report = check_canonical(move |s| boost_finite(s, &v, c, branch).expect("velocity validated"), b.samples)?;
    let mut table = Table::new(&["label", "q0", "q1", "q2", "q3", "p0", "p1", "p2", "p3", "mass_shell_residual", "energy"]);
    state_row(&mut table, "original", &x, u.m0, u.c);
    state_row(&mut table, "boosted", &y, u.m0, u.c);
    out.table("boost", &table)?;
    let beta = v.norm() / u.c;
    let parameter = match branch {
        Branch::Lorentz => beta.atanh(),
        Branch::So4 => beta,
    };
    out.json(
        "boost_report.json",
        &json!({
            "branch": b.branch,
            "parameter": parameter,
            "max_bracket_deviation": report.max_deviation,
            "samples": report.samples,
        }),
    )
}

fn wave(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let (u, g, w) = (cfg.units, cfg.grid, &cfg.wave);
    let mut issues = Issues::default();
    u.validate(&mut issues);
    w.width.iter().for_each(|v| issues.positive("wave.width", *v));
    w.center.iter().for_each(|v| issues.finite("wave.center", *v));
    issues.finite("wave.p_parallel", w.p_parallel);
    issues.check(w.steps >= 1, || "wave.steps must be at least 1".into());
    issues.check(w.record_every >= 1, || "wave.record_every must be at least 1".into());
    issues.check(w.record_every == 0 || w.steps / w.record_every.max(1) >= 2, || {
        "wave.steps / wave.record_every must give at least 3 moment samples".into()
    });
    if let Some(du) = w.du {
        issues.positive("wave.du", du);
    }
    let grid = Grid2::new(g.n0, g.n1, g.q0_min, g.q0_max, g.q1_min, g.q1_max);
    if let Err(e) = &grid {
        issues.0.push(format!("grid: {e}"));
    }
    issues.into_result()?;

    let (m0, c, p) = (u.m0, u.c, w.p_parallel);
    let e = (m0 * m0 * c * c + p * p).sqrt();
    let boundary = match w.boundary {
        BoundaryConfig::Periodic => Boundary::Periodic,
        BoundaryConfig::Reflecting => Boundary::Reflecting,
    };
    let state = ActionWaveState::gaussian(
        grid.expect("checked above"),
        (w.center[0], w.center[1]),
        (w.width[0], w.width[1]),
        move |a, b| -e * a + p * b,
        m0,
        c,
        boundary,
    )
    .map_err(|e| CliError::validation(format!("wave: {e}")))?;
    let limit = state.max_stable_step();
    let du = w.du.unwrap_or(limit);
    if du > limit {
        return Err(CliError::validation(format!(
            "wave.du: CFL violation, du = {du} exceeds the stable limit {limit}"
        )));
    }

    let (end, record) = state.evolve_recording(du, w.steps, w.record_every, Default::default())?;
    let mut moments = Table::new(&["u", "mean_t", "mean_E", "mean_p"]);
    for (uu, m) in &record {
        moments.push_nums(&[*uu, m.mean_t, m.mean_e, m.mean_p_parallel]);
    }
    let samples: Vec<(f64, f64)> = record.iter().map(|(uu, m)| (*uu, m.mean_t)).collect();
    let law = linear_time_slope(&samples)?;
    let mass0 = state.total_mass();
    let mean_e = record[0].1.mean_e;

    let mut snap = Table::new(&["q0", "q1", "n", "S"]);
    let action = end.action();
    let gr = end.grid;
    for k in 0..gr.len() {
        snap.push_nums(&[gr.q0(k / gr.n1), gr.q1(k % gr.n1), end.n[k], action[k]]);
    }
    out.table("moments", &moments)?;
    out.table("snapshot", &snap)?;
    out.json(
        "time_law.json",
        &json!({
            "slope": law.slope,
            "intercept": law.intercept,
            "residual_norm": law.residual_norm,
            "expected_slope": mean_e / (m0 * c * c),
            "du": du,
            "relative_mass_drift": (end.total_mass() - mass0).abs() / mass0,
        }),
    )?;
    if out.plot {
        let series = Series::from_csv(&moments.to_csv()?)?;
        let slope = law.slope;
        let icpt = law.intercept;
        let fit = move |x: f64| icpt + slope * x;
        let overlay = Overlay {
            label: format!("fit slope {slope:.4}"),
            f: &fit,
        };
        out.svg("moments.svg", line_plot(&series, "u", &["mean_t"], Some(overlay), true, "mean time vs u")?);
        let field = Series::from_csv(&snap.to_csv()?)?;
        out.svg("density.svg", heatmap(&field, "q0", "q1", "n", "density")?);
    }
    Ok(())
}

fn wigner_table(w: &Wigner1) -> Table {
    let mut t = Table::new(&["q", "p", "f"]);
    for (j, q) in w.q.iter().enumerate() {
        for (l, p) in w.p.iter().enumerate() {
            t.push_nums(&[*q, *p, w.at(j, l)]);
        }
    }
    t
}

fn wigner(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let (u, w) = (cfg.units, &cfg.wigner);
    let mut issues = Issues::default();
    u.validate(&mut issues);
    issues.check(w.n >= 4 && w.n % 2 == 0, || format!("wigner.n must be even and at least 4, got {}", w.n));
    issues.positive("wigner.dx", w.dx);
    issues.positive("wigner.width", w.width);
    issues.positive("wigner.omega", w.omega);
    for (name, v) in [("center", w.center), ("mean_p", w.mean_p), ("q0_center", w.q0_center), ("p0_mean", w.p0_mean)] {
        issues.finite(&format!("wigner.{name}"), v);
    }
    issues.into_result()?;

    let chi = GlauberPacket::new(w.q0_center, w.p0_mean, w.omega, u.sigma, u.c)
        .map_err(|e| CliError::validation(format!("wigner: {e}")))?;
    let grid = SpatialGrid::centered(w.n, w.center, w.dx).map_err(|e| CliError::validation(format!("wigner: {e}")))?;
    let wp = WavePacket::gaussian(chi, grid, w.center, w.width, w.mean_p, u.m0)?;
    let field = wigner_transform(&wp)?;
    let unc = glauber_uncertainty(&chi)?;
    let purity = field.space.overlap(&field.space)?;
    let space = wigner_table(&field.space);
    let time = wigner_table(&field.time);
    out.table("wigner_space", &space)?;
    out.table("wigner_time", &time)?;
    out.json(
        "wigner_summary.json",
        &json!({
            "delta_E": unc.delta_e,
            "delta_t": unc.delta_t,
            "uncertainty_product": unc.product,
            "imag_residue": field.imag_residue(),
            "purity_times_2_pi_sigma": purity * 2.0 * std::f64::consts::PI * u.sigma,
        }),
    )?;
    if out.plot {
        out.svg("wigner_space.svg", heatmap(&Series::from_csv(&space.to_csv()?)?, "q", "p", "f", "spatial Wigner function")?);
        out.svg("wigner_time.svg", heatmap(&Series::from_csv(&time.to_csv()?)?, "q", "p", "f", "time-energy Wigner function")?);
    }
    Ok(())
}

fn gas(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let (u, g) = (cfg.units, &cfg.gas);
    let mut issues = Issues::default();
    u.validate(&mut issues);
    issues.check(!g.temperatures.is_empty(), || "gas.temperatures must not be empty".into());
    issues.check(!g.mus.is_empty(), || "gas.mus must not be empty".into());
    g.temperatures.iter().for_each(|t| issues.positive("gas.temperatures", *t));
    g.mus.iter().for_each(|m| issues.finite("gas.mus", *m));
    issues.positive("gas.volume", g.volume);
    issues.positive("gas.h", g.h);
    issues.positive("gas.fp_half_width", g.fp_half_width);
    issues.finite("gas.gamma", g.gamma);
    issues.check(g.fp_points >= 3, || "gas.fp_points must be at least 3".into());
    let rest = u.m0 * u.c * u.c;
    if let Some(e) = g.eps_max {
        issues.check(e >= rest, || format!("gas.eps_max = {e} is below the rest energy {rest}"));
    }
    issues.into_result()?;

    let base = GasParams {
        mu: g.mus[0],
        t: g.temperatures[0],
        m0: u.m0,
        c: u.c,
        volume: g.volume,
        h: g.h,
    };
    let eps_max = g.eps_max.unwrap_or(f64::INFINITY);
    let rows = sweep(&base, &g.temperatures, &g.mus, eps_max, Default::default())?;
    let mut table = Table::new(&["T", "mu", "N", "E", "eps_star"]);
    for r in &rows {
        table.push_nums(&[r.t, r.mu, r.n, r.e, r.eps_star]);
    }
    let fp = fokker_planck_residual(
        &base,
        &MomentumGrid {
            n: g.fp_points,
            half_width: g.fp_half_width,
        },
        g.gamma,
    )?;
    out.table("sweep", &table)?;
    out.json(
        "gas_summary.json",
        &json!({
            "rest_energy": rest,
            "eps_star_at_rest_energy_temperature": gt_argmax(rest, u.m0, u.c)?,
            "velocity_cutoff_fraction": g.eps_max.map(|e| velocity_cutoff_fraction(e, u.m0, u.c)).transpose()?,
            "sound_velocity": g.temperatures.iter().map(|t| sound_velocity(*t, u.m0)).collect::<Vec<_>>(),
            "fokker_planck_relative_residual": fp.relative(),
        }),
    )?;
    if out.plot {
        let series = Series::from_csv(&table.to_csv()?)?;
        out.svg("sweep.svg", line_plot(&series, "T", &["eps_star"], None, true, "energy of the g_T maximum")?);
    }
    Ok(())
}

fn load_fit_table(cfg: &ScenarioConfig, strict: bool) -> CliResult<LoadedTable> {
    let loaded = match &cfg.fit.table {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::validation(format!("fit.table {}: {e}", path.display())))?;
            read_table(file, strict)
        }
        None => read_table(BUNDLED_TABLE.as_bytes(), strict),
    };
    loaded.map_err(|e| CliError::Validation(vec![format!("fit.table: {e}")]))
}

fn fit(cfg: &ScenarioConfig, strict: bool, out: &mut Outputs) -> CliResult<()> {
    let f = &cfg.fit;
    let mut issues = Issues::default();
    issues.positive("fit.hbar_mev_s", f.hbar_mev_s);
    issues.into_result()?;
    let table = load_fit_table(cfg, strict)?;
    let chosen: Vec<_> = table
        .records
        .iter()
        .filter(|r| f.class.is_none_or(|c| r.class == c))
        .cloned()
        .collect();
    let result = fit_inverse_width(&chosen, None)?;
    let report = lifetime_bound_check(&chosen, f.hbar_mev_s);

    let mut lifetimes = Table::new(&["name", "ratio", "bound_ok"]);
    for e in &report.entries {
        lifetimes.push(vec![e.name.clone().into(), e.ratio.into(), e.bound_ok.into()]);
    }
    let mut series = Table::new(&["name", "class", "width_mev", "ratio"]);
    for r in &chosen {
        series.push(vec![r.name.clone().into(), r.class.as_str().into(), r.width_mev.into(), r.ratio().into()]);
    }
    out.table("lifetime", &lifetimes)?;
    out.table("ratio_series", &series)?;
    out.json("fit.json", &serde_json::to_value(result).map_err(|e| CliError::Numerical(e.to_string()))?)?;
    out.json(
        "fit_details.json",
        &json!({
            "a_std_err": result.a_std_err,
            "C_std_err": result.c_std_err,
            "bound_fraction_ok": report.fraction_ok,
            "row_errors": table.row_errors.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }),
    )?;
    if out.plot {
        let s = Series::from_csv(&series.to_csv()?)?;
        let curve = move |g: f64| result.a + result.c / g;
        let overlay = Overlay {
            label: format!("{:.3} + {:.1}/width", result.a, result.c),
            f: &curve,
        };
        out.svg("fit.svg", line_plot(&s, "width_mev", &["ratio"], Some(overlay), true, "mass/width ratio")?);
    }
    Ok(())
}

fn hydrogen(cfg: &ScenarioConfig, out: &mut Outputs) -> CliResult<()> {
    let h = &cfg.hydrogen;
    let mut issues = Issues::default();
    issues.finite("hydrogen.mean_p2", h.mean_p2);
    issues.finite("hydrogen.mean_p4", h.mean_p4);
    issues.positive("hydrogen.alpha", h.alpha);
    issues.into_result()?;
    let r = hydrogen_corrections(h.mean_p2, h.mean_p4, h.alpha);
    let mut t = Table::new(&["quantity", "value_au"]);
    for (name, v) in [("H_c", r.h_c), ("H1", r.h1), ("H_c_plus_H1", r.h_c + r.h1), ("dirac_ref", r.dirac_ref)] {
        t.push(vec![name.into(), v.into()]);
    }
    out.table("hydrogen", &t)
}
