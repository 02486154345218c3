//! One function per command; each returns a JSON report plus CSV tables.

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, GroupSpec};
use super::output::{fmt_f64, to_value, Table};
use crate::boundary::{estimate_hdim, limit_sample_from_orbit, rp1_coords, BoundaryError, LimitSample, SampleOptions};
use crate::checks::{
    base_point_check, busemann_limit_check, cross_ratio_length_check, gromov_law_check, random_point_near_j,
};
use crate::groups::{
    build_genus2, twist_deform, validate_group, Genus2Params, GroupError, MessGroup, TwistKind,
};
use crate::lorentz::{AdSPoint, GeometryError};
use crate::orbit::{
    enumerate_orbit, estimate_exponent, orbit_points, project_trace_zero, triangle_constant, ExponentEstimate, Orbit,
    OrbitError,
};
use crate::ps::{build_ps_measure, shadow_lemma_report, PsError, PsMeasure, ShadowOptions};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const COMMANDS: [&str; 10] = [
    "validate",
    "orbit",
    "exponent",
    "limitset",
    "hdim",
    "psmeasure",
    "shadowcheck",
    "crosscheck",
    "triangleconst",
    "rigidity",
];

/// Residual bounds for `crosscheck`.
pub const CROSS_RATIO_TOL: f64 = 1e-8;
pub const BASE_POINT_TOL: f64 = 1e-10;
pub const GROMOV_TOL: f64 = 1e-9;
pub const BUSEMANN_TOL: f64 = 1e-3;
pub const BUSEMANN_POWER: i64 = 20;
pub const TRIANGLE_DRIFT_TOL: f64 = 0.1;
/// Base points for the Gromov-law checks are orbit points this close to `o`; farther ones see
/// parts of the sample at `|q(ξ, x)| ≪ 1` and lose digits in the ray construction.
pub const GROMOV_BASE_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ValidationFailure,
    NumericGuard,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ValidationFailure => 2,
            Status::NumericGuard => 3,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Ok
        } else {
            Status::ValidationFailure
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub report: Value,
    /// `(file name, table)` pairs.
    pub tables: Vec<(String, Table)>,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { status: Status::Ok, report, tables: Vec::new() }
    }

    fn with_table(mut self, name: &str, t: Table) -> Self {
        self.tables.push((name.into(), t));
        self
    }
}

/// A failure that ends the command before a full report exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 65, message: message.into() }
    }
}

impl From<GroupError> for Failure {
    fn from(e: GroupError) -> Self {
        let code = match e {
            GroupError::BadWord(_) | GroupError::UnknownCurve(_) | GroupError::NeedsSurfaceRelator => 65,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<OrbitError> for Failure {
    fn from(e: OrbitError) -> Self {
        let code = match e {
            OrbitError::WordTooLong(_) | OrbitError::BadGrid(_) => 65,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<BoundaryError> for Failure {
    fn from(e: BoundaryError) -> Self {
        let e = match e {
            BoundaryError::Orbit(o) => return o.into(),
            other => other,
        };
        let code = match &e {
            BoundaryError::NotAcausal(_) => 2,
            BoundaryError::BadGrid(_) => 65,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<PsError> for Failure {
    fn from(e: PsError) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

/// Runs `name`; unknown names are a usage error.
pub fn run_command(name: &str, cfg: &ExperimentConfig) -> Result<Outcome> {
    match name {
        "validate" => validate(cfg),
        "orbit" => orbit(cfg),
        "exponent" => exponent(cfg),
        "limitset" => limitset(cfg),
        "hdim" => hdim(cfg),
        "psmeasure" => psmeasure(cfg),
        "shadowcheck" => shadowcheck(cfg),
        "crosscheck" => crosscheck(cfg),
        "triangleconst" => triangleconst(cfg),
        "rigidity" => rigidity(cfg),
        other => Err(Failure { code: 64, message: format!("unknown command {other:?}") }),
    }
}

fn group(cfg: &ExperimentConfig) -> Result<MessGroup> {
    Ok(cfg.build_group()?)
}

fn enumerate(cfg: &ExperimentConfig, g: &MessGroup) -> Result<Orbit> {
    Ok(enumerate_orbit(g, cfg.enumeration())?)
}

fn sample(cfg: &ExperimentConfig, g: &MessGroup, orbit: &Orbit) -> Result<LimitSample> {
    let mut s = limit_sample_from_orbit(orbit, SampleOptions { max_points: cfg.limit_points })?;
    if g.is_schottky() {
        s.notes.push("limit set not a circle".into());
    }
    Ok(s)
}

fn group_summary(g: &MessGroup) -> Value {
    json!({
        "fuchsian": g.is_fuchsian(),
        "schottky": g.is_schottky(),
        "rho1": to_value(g.rho1().construction()),
        "rho2": to_value(g.rho2().construction()),
        "labels": g.alphabet().labels(),
        "base_point": g.base().vector().coords(),
    })
}

fn orbit_summary(o: &Orbit) -> Value {
    json!({
        "records": o.len(),
        "max_word_len": o.max_word_len,
        "prune_radius": o.prune_radius,
        "new_per_len": o.new_per_len,
        "completeness_radius": o.completeness_radius(),
        "causal_fraction": o.causal_fraction(),
        "causal_fraction_len_le_6": o.causal_fraction_up_to(6),
    })
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let rep = validate_group(&g, cfg.validation_len);
    let status = Status::from_pass(rep.pass);
    let report = json!({ "group": group_summary(&g), "validation": to_value(&rep), "validation_len": cfg.validation_len });
    Ok(Outcome { status, report, tables: Vec::new() })
}

pub fn orbit_table(o: &Orbit, g: &MessGroup) -> Table {
    let mut t = Table::new(&["word", "len", "dist", "causal_flag", "trace1", "trace2"]);
    for r in &o.records {
        t.push(vec![
            g.alphabet().format(&r.word),
            r.word.len().to_string(),
            fmt_f64(r.dist),
            u8::from(r.causal_flag).to_string(),
            fmt_f64(r.trace1()),
            fmt_f64(r.trace2()),
        ]);
    }
    t
}

pub fn orbit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    match enumerate_orbit(&g, cfg.enumeration()) {
        Ok(o) => {
            let report = json!({ "group": group_summary(&g), "orbit": orbit_summary(&o) });
            Ok(Outcome::ok(report).with_table("orbit.csv", orbit_table(&o, &g)))
        }
        Err(OrbitError::MemoryGuard { completed_len, limit, partial }) => {
            let report = json!({
                "group": group_summary(&g),
                "orbit": orbit_summary(&partial),
                "memory_guard": { "completed_len": completed_len, "limit": limit },
            });
            Ok(Outcome { status: Status::NumericGuard, report, tables: vec![("orbit.csv".into(), orbit_table(&partial, &g))] })
        }
        Err(e) => Err(e.into()),
    }
}

fn exponent_of(cfg: &ExperimentConfig, o: &Orbit) -> Result<ExponentEstimate> {
    Ok(estimate_exponent(o, cfg.r_step, cfg.window)?)
}

fn counts_table(est: &ExponentEstimate) -> Table {
    let mut t = Table::new(&["r", "count"]);
    for &(r, n) in &est.counts {
        t.push(vec![fmt_f64(r), n.to_string()]);
    }
    t
}

pub fn exponent(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let est = exponent_of(cfg, &o)?;
    let report = json!({ "group": group_summary(&g), "orbit": orbit_summary(&o), "exponent": to_value(&est) });
    Ok(Outcome::ok(report).with_table("counts.csv", counts_table(&est)))
}

fn limitset_table(s: &LimitSample, g: &MessGroup) -> Result<Table> {
    let mut t = Table::new(&["word", "m11", "m12", "m21", "m22", "rp1_coord1", "rp1_coord2"]);
    for (p, w) in &s.points {
        let m = p.matrix()?;
        let (a, b) = rp1_coords(p)?;
        t.push(vec![
            g.alphabet().format(w),
            fmt_f64(m.a),
            fmt_f64(m.b),
            fmt_f64(m.c),
            fmt_f64(m.d),
            fmt_f64(a),
            fmt_f64(b),
        ]);
    }
    Ok(t)
}

fn sample_summary(s: &LimitSample) -> Value {
    json!({
        "size": s.len(),
        "skipped_non_hyperbolic": s.skipped_non_hyperbolic,
        "duplicates_removed": s.duplicates_removed,
        "notes": s.notes,
    })
}

pub fn limitset(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let s = sample(cfg, &g, &o)?;
    let report = json!({ "group": group_summary(&g), "sample": sample_summary(&s) });
    Ok(Outcome::ok(report).with_table("limitset.csv", limitset_table(&s, &g)?))
}

pub fn hdim(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let s = sample(cfg, &g, &o)?;
    let est = estimate_hdim(&s, &cfg.eps_grid)?;
    let mut t = Table::new(&["eps", "count"]);
    for &(e, n) in &est.counts {
        t.push(vec![fmt_f64(e), n.to_string()]);
    }
    let report = json!({ "group": group_summary(&g), "sample": sample_summary(&s), "hdim": to_value(&est) });
    Ok(Outcome::ok(report).with_table("hdim_counts.csv", t))
}

fn measure(cfg: &ExperimentConfig, o: &Orbit, est: &ExponentEstimate) -> Result<PsMeasure> {
    let s = est.delta + cfg.shadow.exponent_margin;
    Ok(build_ps_measure(o, s, &o.base, est.poincare_bracket)?)
}

fn measure_summary(mu: &PsMeasure) -> Value {
    json!({
        "s": mu.s,
        "atoms": mu.len(),
        "total": mu.total,
        "skipped_causal": mu.skipped_causal,
        "divergence_side": mu.divergence_side,
        "max_normalized_weight": mu.max_normalized_weight(),
    })
}

pub fn psmeasure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let est = exponent_of(cfg, &o)?;
    let mu = measure(cfg, &o, &est)?;
    let mut t = Table::new(&["word", "dist", "weight", "e1", "e2", "e3", "e4"]);
    for (a, w) in mu.atoms.iter().zip(mu.normalized_weights()) {
        let e = a.point.vector().coords();
        let mut row = vec![g.alphabet().format(&a.word), fmt_f64(a.dist), fmt_f64(w)];
        row.extend(e.iter().map(|&x| fmt_f64(x)));
        t.push(row);
    }
    let report = json!({ "group": group_summary(&g), "delta_hat": est.delta, "measure": measure_summary(&mu) });
    Ok(Outcome::ok(report).with_table("measure.csv", t))
}

fn shadow_options(cfg: &ExperimentConfig) -> ShadowOptions {
    ShadowOptions {
        n_shadows: cfg.shadow.n_shadows,
        shadow_dist_range: cfg.shadow.dist_range,
        n_ball_centres: cfg.shadow.n_ball_centres,
        ball_radii: cfg.shadow.ball_radii.clone(),
        spread_tol: cfg.shadow.spread_tol,
        slope_tol: cfg.shadow.slope_tol,
        seed: cfg.seed,
        ..ShadowOptions::default()
    }
}

pub fn shadowcheck(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let est = exponent_of(cfg, &o)?;
    let mu = measure(cfg, &o, &est)?;
    let rep = shadow_lemma_report(&mu, &o, est.delta, &cfg.shadow.radii, &shadow_options(cfg))?;
    let mut t = Table::new(&["r", "ratio_min", "ratio_max", "spread", "empty_shadows", "pass"]);
    for r in &rep.rows {
        t.push(vec![
            fmt_f64(r.r),
            fmt_f64(r.ratio_min),
            fmt_f64(r.ratio_max),
            fmt_f64(r.spread),
            r.empty_shadows.to_string(),
            u8::from(r.pass).to_string(),
        ]);
    }
    let report = json!({
        "group": group_summary(&g),
        "measure": measure_summary(&mu),
        "shadow": to_value(&rep),
    });
    Ok(Outcome { status: Status::from_pass(rep.pass), report, tables: vec![("shadow.csv".into(), t)] })
}

/// A second base point for the base-point independence check, seeded.
pub fn second_base_point(seed: u64) -> AdSPoint {
    random_point_near_j(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed), 0.3)
}

pub fn crosscheck(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let s = sample(cfg, &g, &o)?;
    let n = cfg.n_checks;
    let rows = cross_ratio_length_check(&g, &s, n, cfg.check_word_len, cfg.seed);
    let cr_max = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let (bp_done, bp_max) = base_point_check(&s, g.base(), &second_base_point(cfg.seed), n, cfg.seed.wrapping_add(1));
    let xs = gromov_base_points(&o);
    let gl = gromov_law_check(&s, &xs, 10 * n, 3.0, 4.0, cfg.seed.wrapping_add(2));
    let bus = busemann_limit_check(&g, BUSEMANN_POWER, n.min(10).max(1), 3, cfg.seed.wrapping_add(3));
    let bus_max = bus.iter().map(|r| r.residual).fold(0.0, f64::max);

    let cr_pass = rows.len() == n && cr_max <= CROSS_RATIO_TOL;
    let bp_pass = bp_done == n && bp_max <= BASE_POINT_TOL;
    let gl_pass = gl.configurations > 0 && gl.cosh_identity_max_err <= GROMOV_TOL && gl.on_geodesic_max_err <= GROMOV_TOL;
    let bus_pass = !bus.is_empty() && bus_max < BUSEMANN_TOL;
    let pass = cr_pass && bp_pass && gl_pass && bus_pass;

    let mut t = Table::new(&["word", "l1", "l2", "log_cross_ratio", "residual"]);
    for r in &rows {
        t.push(vec![r.word.clone(), fmt_f64(r.l1), fmt_f64(r.l2), fmt_f64(r.log_cross_ratio), fmt_f64(r.residual)]);
    }
    let report = json!({
        "group": group_summary(&g),
        "sample": sample_summary(&s),
        "cross_ratio_length": { "checked": rows.len(), "max_residual": cr_max, "tol": CROSS_RATIO_TOL, "pass": cr_pass },
        "base_point_independence": { "checked": bp_done, "max_rel_gap": bp_max, "tol": BASE_POINT_TOL, "pass": bp_pass },
        "gromov_law": {
            "report": to_value(&gl),
            "tol": GROMOV_TOL,
            "dist_le_one": gl.max_dist <= 1.0 + 1e-12,
            "pass": gl_pass,
        },
        "busemann_limit": {
            "n": BUSEMANN_POWER,
            "checked": bus.len(),
            "max_residual": bus_max,
            "tol": BUSEMANN_TOL,
            "pass": bus_pass,
        },
        "pass": pass,
    });
    Ok(Outcome { status: Status::from_pass(pass), report, tables: vec![("crosscheck.csv".into(), t)] })
}

pub fn gromov_base_points(o: &Orbit) -> Vec<AdSPoint> {
    o.records.iter().filter(|r| r.dist <= GROMOV_BASE_RADIUS).map(|r| r.point(&o.base)).collect()
}

/// Orbit points used for the triangle constant.
pub fn triangle_points(cfg: &ExperimentConfig, o: &Orbit) -> Vec<AdSPoint> {
    let r = cfg.triangle_radius.unwrap_or(f64::INFINITY);
    o.records.iter().filter(|x| x.dist <= r).map(|x| x.point(&o.base)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleReport {
    pub points: usize,
    pub samples: usize,
    pub k_hat: f64,
    pub k_hat_doubled: f64,
    pub drift: f64,
    pub stable: bool,
    /// `k̂` after projecting to the trace-zero plane; Fuchsian groups only.
    pub k_hat_trace_zero: Option<f64>,
}

pub fn triangle_report(cfg: &ExperimentConfig, g: &MessGroup, o: &Orbit) -> TriangleReport {
    let pts = triangle_points(cfg, o);
    let n = cfg.triangle_samples;
    let k1 = triangle_constant(&pts, n, cfg.seed);
    let k2 = triangle_constant(&pts, 2 * n, cfg.seed);
    let drift = if k2 > 0.0 { (k2 - k1).abs() / k2 } else { 0.0 };
    let k_tz = g.is_fuchsian().then(|| {
        let all: Vec<AdSPoint> = orbit_points(o).iter().filter_map(project_trace_zero).collect();
        triangle_constant(&all, n, cfg.seed)
    });
    TriangleReport {
        points: pts.len(),
        samples: n,
        k_hat: k1,
        k_hat_doubled: k2,
        drift,
        stable: k2.is_finite() && drift <= TRIANGLE_DRIFT_TOL,
        k_hat_trace_zero: k_tz,
    }
}

pub fn triangleconst(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = group(cfg)?;
    let o = enumerate(cfg, &g)?;
    let rep = triangle_report(cfg, &g, &o);
    if rep.points < 3 {
        return Err(Failure { code: 3, message: format!("{} orbit points, need 3", rep.points) });
    }
    let report = json!({ "group": group_summary(&g), "triangle": to_value(&rep), "radius": cfg.triangle_radius });
    Ok(Outcome::ok(report))
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityRow {
    pub t: i64,
    pub delta: f64,
    pub delta_stderr: f64,
    pub hdim: f64,
    pub k_hat: f64,
    pub valid: bool,
    pub records: usize,
    pub error: Option<String>,
}

impl RigidityRow {
    fn invalid(t: i64, error: String) -> Self {
        RigidityRow {
            t,
            delta: f64::NAN,
            delta_stderr: f64::NAN,
            hdim: f64::NAN,
            k_hat: f64::NAN,
            valid: false,
            records: 0,
            error: Some(error),
        }
    }
}

fn rigidity_row(cfg: &ExperimentConfig, params: Genus2Params, t: i64, curve: &str, with_hdim: bool) -> RigidityRow {
    let attempt = || -> Result<RigidityRow> {
        let rho = build_genus2(params)?;
        let rho2 = twist_deform(&rho, TwistKind::Dehn(t), curve)?;
        let g = MessGroup::new(rho, rho2, cfg.build_group()?.base().clone())?;
        let v = validate_group(&g, cfg.validation_len);
        if !v.pass {
            return Err(Failure { code: 2, message: v.verdict });
        }
        let o = enumerate(cfg, &g)?;
        let est = exponent_of(cfg, &o)?;
        let hdim = if with_hdim {
            let s = sample(cfg, &g, &o)?;
            estimate_hdim(&s, &cfg.eps_grid)?.hdim
        } else {
            f64::NAN
        };
        let k_hat = triangle_constant(&triangle_points(cfg, &o), cfg.triangle_samples, cfg.seed);
        Ok(RigidityRow {
            t,
            delta: est.delta,
            delta_stderr: est.slope_stderr,
            hdim,
            k_hat,
            valid: true,
            records: o.len(),
            error: None,
        })
    };
    attempt().unwrap_or_else(|f| RigidityRow::invalid(t, f.message))
}

/// Rows are computed independently, one per twist, in the order given.
pub fn rigidity_scan(cfg: &ExperimentConfig) -> Result<Vec<RigidityRow>> {
    let rc = cfg.rigidity.as_ref().ok_or_else(|| Failure::config("rigidity needs a \"rigidity\" section"))?;
    if rc.twists.is_empty() {
        return Err(Failure::config("rigidity.twists is empty"));
    }
    if !rc.twists.contains(&0) {
        return Err(Failure::config("rigidity.twists must include 0"));
    }
    let params = match &cfg.group {
        GroupSpec::Genus2 { lambda, commutator_trace, m, .. } => {
            Genus2Params { lambda: *lambda, m: *m, commutator_trace: *commutator_trace }
        }
        _ => return Err(Failure::config("rigidity needs a genus2 group")),
    };
    Ok(rc.twists.iter().map(|&t| rigidity_row(cfg, params, t, &rc.curve, rc.hdim)).collect())
}

pub fn rigidity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rows = rigidity_scan(cfg)?;
    let mut t = Table::new(&["t", "delta", "delta_stderr", "hdim", "k_hat", "valid", "records"]);
    for r in &rows {
        t.push(vec![
            r.t.to_string(),
            fmt_f64(r.delta),
            fmt_f64(r.delta_stderr),
            fmt_f64(r.hdim),
            fmt_f64(r.k_hat),
            u8::from(r.valid).to_string(),
            r.records.to_string(),
        ]);
    }
    let (trend_ok, drop) = rigidity_trend(&rows);
    let report = json!({ "rows": to_value(&rows), "nonincreasing_within_noise": trend_ok, "drop_from_zero": drop });
    let status = if rows.iter().all(|r| r.valid) { Status::Ok } else { Status::ValidationFailure };
    Ok(Outcome { status, report, tables: vec![("rigidity_scan.csv".into(), t)] })
}

/// Rows sorted by `|t|`: whether `δ̂` never rises by more than 0.02, and `δ̂(0) − δ̂(t_max)`.
pub fn rigidity_trend(rows: &[RigidityRow]) -> (bool, f64) {
    let mut valid: Vec<&RigidityRow> = rows.iter().filter(|r| r.valid).collect();
    valid.sort_by_key(|r| (r.t.abs(), r.t));
    let ok = valid.windows(2).all(|w| w[1].delta <= w[0].delta + 0.02);
    let drop = match (valid.first(), valid.last()) {
        (Some(a), Some(b)) if a.t == 0 => a.delta - b.delta,
        _ => f64::NAN,
    };
    (ok, drop)
}
