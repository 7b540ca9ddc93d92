use std::fmt;
use std::str::FromStr;

use dmkit_core::classical::classical_margins;
use dmkit_core::disk::{
    disk_margin, freq_margin_trace, guaranteed_margins, nyquist_exclusion, verify_destabilizing,
    worst_perturbation_lti, DiskGeometry, DiskKind, DiskMarginResult, DiskSpec, LoopFactor, Verdict,
};
use dmkit_core::lti::{poles, scalar_close, ChannelFactor};
use dmkit_core::mu::{
    build_m, loop_at_a_time_margins, multiloop_margin_with, verify_multiloop_destabilizing, AnalysisPoints,
    LoopLocation, MultiLoopOptions, DEFAULT_SEED,
};
use dmkit_core::specnorm::{default_grid, FrequencyGrid};
use dmkit_core::{Error, LtiModel, StateSpace};
use nalgebra::DMatrix;

use crate::error::CliError;
use crate::model::LoadedModel;
use crate::report::*;

/// Samples of `trace` and `exclusion` when `--grid` is absent.
pub const DEFAULT_SAMPLES: usize = 500;
/// Log points of the `mimo` sweep when `--grid` is absent.
pub const DEFAULT_MU_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classical,
    DiskMargin,
    Trace,
    Mimo,
    Exclusion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classical => "classical",
            Command::DiskMargin => "diskmargin",
            Command::Trace => "trace",
            Command::Mimo => "mimo",
            Command::Exclusion => "exclusion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// `N` log points over the default window, or `lo:hi:N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Points(usize),
    Range { lo: f64, hi: f64, n: usize },
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::input(format!("grid must be N or lo:hi:N, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [n] => Ok(GridSpec::Points(n.trim().parse().map_err(|_| bad())?)),
            [lo, hi, n] => Ok(GridSpec::Range {
                lo: lo.trim().parse().map_err(|_| bad())?,
                hi: hi.trim().parse().map_err(|_| bad())?,
                n: n.trim().parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Points(n) => write!(f, "{n}"),
            GridSpec::Range { lo, hi, n } => write!(f, "{lo}:{hi}:{n}"),
        }
    }
}

impl GridSpec {
    /// Finite sample grid for a loop.
    fn samples(self, l: &LtiModel) -> Result<FrequencyGrid, CliError> {
        match self {
            GridSpec::Points(n) => {
                if n < 2 {
                    return Err(CliError::input("grid needs at least 2 points"));
                }
                let g = default_grid(l, n)?;
                Ok(FrequencyGrid::new(g.finite_positive().collect())?)
            }
            GridSpec::Range { lo, hi, n } => Ok(FrequencyGrid::logspace(lo, hi, n)?),
        }
    }
}

/// Perturbation points of `mimo`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointsSpec {
    Input,
    Output,
    Io,
    List(Vec<usize>),
}

impl FromStr for PointsSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "input" => Ok(PointsSpec::Input),
            "output" => Ok(PointsSpec::Output),
            "io" => Ok(PointsSpec::Io),
            _ => s
                .split(',')
                .map(|c| c.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map(PointsSpec::List)
                .map_err(|_| CliError::input(format!("points must be input, output, io or a channel list, got {s:?}"))),
        }
    }
}

impl fmt::Display for PointsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointsSpec::Input => f.write_str("input"),
            PointsSpec::Output => f.write_str("output"),
            PointsSpec::Io => f.write_str("io"),
            PointsSpec::List(l) => {
                let s: Vec<String> = l.iter().map(usize::to_string).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub skew: f64,
    pub grid: Option<GridSpec>,
    pub worst_case: bool,
    pub points: PointsSpec,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            skew: 0.0,
            grid: None,
            worst_case: false,
            points: PointsSpec::Input,
            seed: DEFAULT_SEED,
        }
    }
}

/// Seed from `DMKIT_SEED` (decimal or `0x` hex), else the library default.
pub fn seed_from(value: Option<&str>) -> Result<u64, CliError> {
    let Some(v) = value else {
        return Ok(DEFAULT_SEED);
    };
    let v = v.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|_| CliError::input(format!("DMKIT_SEED must be an unsigned integer, got {v:?}")))
}

fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

fn kind_name(k: DiskKind) -> &'static str {
    match k {
        DiskKind::Interior => "interior",
        DiskKind::HalfPlane => "half-plane",
        DiskKind::Exterior => "exterior",
    }
}

fn disk_report(g: &DiskGeometry) -> DiskReport {
    DiskReport {
        kind: kind_name(g.kind).into(),
        gamma_min: g.gamma_min.into(),
        gamma_max: g.gamma_max.into(),
        center: Num(g.center),
        radius: Num(g.radius),
    }
}

fn check_skew(skew: f64) -> Result<(), CliError> {
    if skew.is_finite() {
        Ok(())
    } else {
        Err(CliError::input("skew must be finite"))
    }
}

pub fn classical(m: &LoadedModel) -> Result<(ClassicalReport, Vec<Diagnostic>), CliError> {
    let l = m.siso_loop()?;
    let c = classical_margins(&l)?;
    let closed = scalar_close(&l, &[ChannelFactor::Gain(1.0)])?;
    let mut cl_poles = poles(&closed)?;
    cl_poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut diags = Vec::new();
    if !c.gain.other_stable_intervals.is_empty() {
        diags.push(Diagnostic::warning(
            "disconnected_gain_intervals",
            "the loop is also stable for gains outside (g_lower, g_upper)",
        ));
    }
    if c.gain_crossover_freqs.is_empty() {
        diags.push(Diagnostic::info("no_gain_crossover", "|L(jw)| never crosses 1"));
    }
    if c.phase_crossover_freqs.is_empty() {
        diags.push(Diagnostic::info(
            "no_phase_crossover",
            "L(jw) never crosses the negative real axis",
        ));
    }
    let report = ClassicalReport {
        g_lower: c.g_lower.into(),
        g_upper: c.g_upper.into(),
        freq_lower: c.gain.freq_lower.map(Num),
        freq_upper: c.gain.freq_upper.map(Num),
        phi_upper: c.phi_upper.into(),
        phase_freq: c.critical_phase_freq.map(Num),
        gain_crossover_freqs: nums(&c.gain_crossover_freqs),
        phase_crossover_freqs: nums(&c.phase_crossover_freqs),
        other_stable_gain_intervals: c
            .gain
            .other_stable_intervals
            .iter()
            .map(|&(a, b)| [Num(a), Num(b)])
            .collect(),
        closed_loop_poles: cl_poles.into_iter().map(ComplexNum::from).collect(),
    };
    Ok((report, diags))
}

fn worst_case(l: &LtiModel, r: &DiskMarginResult) -> Result<WorstCaseReport, Error> {
    let p = worst_perturbation_lti(r.delta0, r.omega_crit, r.sigma())?;
    let v = verify_destabilizing(l, &LoopFactor::from(&p), r.omega_crit)?;
    let verdict = match v.verdict {
        Verdict::Destabilizing => "destabilizing",
        Verdict::NotDestabilizing => "not-destabilizing",
        Verdict::IllPosed => "ill-posed",
    };
    Ok(WorstCaseReport {
        beta: p.beta.map(Num),
        delta_hat: (&p.delta_hat).into(),
        f_hat: (&p.f_hat).into(),
        verification: VerificationSummary {
            verdict: verdict.into(),
            passed: v.passed(),
            omega0: Num(v.omega0),
            nearest_pole: v.nearest_pole.map(ComplexNum::from),
            distance: Num(v.distance),
            tolerance: Num(v.tolerance),
        },
    })
}

pub fn diskmargin(m: &LoadedModel, opts: &Options) -> Result<(DiskMarginReport, Vec<Diagnostic>), CliError> {
    check_skew(opts.skew)?;
    let l = m.siso_loop()?;
    let r = disk_margin(&l, opts.skew)?;
    let mut diags = Vec::new();
    let wc = if opts.worst_case {
        match worst_case(&l, &r) {
            Ok(w) => {
                if !w.verification.passed {
                    diags.push(Diagnostic::warning(
                        "worst_case_not_verified",
                        "closing the loop through f_hat did not place a pole at j*omega_crit",
                    ));
                }
                Some(w)
            }
            Err(e @ (Error::Construction(_) | Error::Unsupported(_))) => {
                diags.push(Diagnostic::warning("worst_case_unavailable", e.to_string()));
                None
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    if r.geometry.kind != DiskKind::Interior {
        diags.push(Diagnostic::info(
            "unbounded_disk",
            format!("disk is a {}; some guarantees are infinite", kind_name(r.geometry.kind)),
        ));
    }
    let report = DiskMarginReport {
        sigma: Num(r.sigma()),
        alpha: Num(r.alpha()),
        peak_gain: Num(r.peak_gain),
        omega_crit: Num(r.omega_crit),
        delta0: r.delta0.into(),
        f0: r.f0.map(ComplexNum::from),
        disk: disk_report(&r.geometry),
        phi_m: r.guaranteed_pm.into(),
        worst_case: wc,
    };
    Ok((report, diags))
}

pub fn trace(m: &LoadedModel, opts: &Options) -> Result<(TraceReport, Vec<Diagnostic>), CliError> {
    check_skew(opts.skew)?;
    let l = m.siso_loop()?;
    let grid = opts.grid.unwrap_or(GridSpec::Points(DEFAULT_SAMPLES)).samples(&l)?;
    let t = freq_margin_trace(&l, opts.skew, &grid)?;
    let gm = t.gamma_m();
    let rows = grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, &w)| TraceRow {
            omega: Num(w),
            alpha: Num(t.alpha_of_omega[i]),
            gamma_min: Num(t.gm_of_omega[i].0),
            gamma_max: Num(t.gm_of_omega[i].1),
            gamma_m: Num(gm[i]),
            phi_m_deg: Num(t.pm_of_omega[i].to_degrees()),
        })
        .collect();
    let mut diags = Vec::new();
    if !t.flagged.is_empty() {
        diags.push(Diagnostic::warning(
            "samples_on_poles",
            format!("{} samples fall on closed-loop poles and hold nan", t.flagged.len()),
        ));
    }
    let (a, w) = t.min_alpha().unwrap_or((f64::NAN, f64::NAN));
    Ok((
        TraceReport {
            sigma: Num(opts.skew),
            min_alpha: Num(a),
            min_alpha_freq: Num(w),
            rows,
        },
        diags,
    ))
}

pub fn exclusion(
    m: &LoadedModel,
    opts: &Options,
) -> Result<(ExclusionReport, Vec<NyquistSample>, Vec<Diagnostic>), CliError> {
    check_skew(opts.skew)?;
    let l = m.siso_loop()?;
    let r = disk_margin(&l, opts.skew)?;
    let disk = nyquist_exclusion(DiskSpec::new(r.alpha(), opts.skew))?;
    let grid = opts.grid.unwrap_or(GridSpec::Points(DEFAULT_SAMPLES)).samples(&l)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut min_dist = f64::INFINITY;
    let mut diags = Vec::new();
    for &w in grid.points() {
        match l.eval_siso(w) {
            Ok(z) => {
                min_dist = min_dist.min((z.re - disk.center).hypot(z.im));
                samples.push(NyquistSample {
                    omega: Num(w),
                    re: Num(z.re),
                    im: Num(z.im),
                });
            }
            Err(Error::PoleOnAxis(_)) => {
                diags.push(Diagnostic::warning("sample_on_pole", format!("L has a pole at j{w}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let tangency = r.f0.filter(|f| f.norm() > 0.0).map(|f| ComplexNum::from(-1.0 / f));
    let report = ExclusionReport {
        sigma: Num(opts.skew),
        alpha: Num(r.alpha()),
        center: Num(disk.center),
        radius: Num(disk.radius),
        intercepts: [Num(disk.intercepts.0), Num(disk.intercepts.1)],
        omega_crit: Num(r.omega_crit),
        tangency_point: tangency,
        min_center_distance: Num(min_dist),
        sample_count: samples.len(),
    };
    Ok((report, samples, diags))
}

/// Channel numbering of the io loop: plant inputs, then plant outputs.
fn io_channels(points: &PointsSpec, nu: usize, ny: usize) -> Vec<usize> {
    match points {
        PointsSpec::Input => (0..nu).collect(),
        PointsSpec::Output => (nu..nu + ny).collect(),
        PointsSpec::Io => (0..nu + ny).collect(),
        PointsSpec::List(l) => l.clone(),
    }
}

pub fn mimo(m: &LoadedModel, opts: &Options) -> Result<(MimoReport, Vec<Diagnostic>), CliError> {
    check_skew(opts.skew)?;
    let p = &m.plant;
    let k = match &m.controller {
        Some(k) => k.clone(),
        None => {
            // a bare loop is analysed at its own channels
            if p.n_inputs() != p.n_outputs() {
                return Err(CliError::input("a loop without a controller must be square"));
            }
            if matches!(opts.points, PointsSpec::Output | PointsSpec::Io) {
                return Err(CliError::input(
                    "output and io points need a controller block; a bare loop has only input points",
                ));
            }
            LtiModel::negative(StateSpace::static_gain(DMatrix::identity(p.n_inputs(), p.n_inputs())))
        }
    };
    let points = match &opts.points {
        PointsSpec::Input => AnalysisPoints::Input,
        PointsSpec::Output => AnalysisPoints::Output,
        PointsSpec::Io => AnalysisPoints::InputOutput,
        PointsSpec::List(l) => AnalysisPoints::Channels(l.clone()),
    };
    let sys = build_m(p, &k, &points, opts.skew)?;
    let mut mopts = MultiLoopOptions {
        seed: opts.seed,
        ..MultiLoopOptions::default()
    };
    mopts.grid_points = DEFAULT_MU_POINTS;
    match opts.grid {
        Some(GridSpec::Points(n)) => mopts.grid_points = n,
        Some(GridSpec::Range { lo, hi, n }) => mopts.grid = Some(FrequencyGrid::logspace(lo, hi, n)?.with_sentinels()),
        None => {}
    }
    let r = multiloop_margin_with(&sys, &mopts)?;
    let ((gmin, gmax), pm) = guaranteed_margins(DiskSpec::new(r.alpha_lower, opts.skew))?;

    let (nu, ny) = (p.n_inputs(), p.n_outputs());
    let channels = io_channels(&opts.points, nu, ny);
    let mut table = Vec::with_capacity(channels.len());
    for &c in &channels {
        let (loc, ch, name) = if c < nu {
            (LoopLocation::Input, c, "input")
        } else {
            (LoopLocation::Output, c - nu, "output")
        };
        let (cm, dm) = loop_at_a_time_margins(p, &k, ch, loc, opts.skew)?;
        table.push(LoopAtATimeRow {
            location: name.into(),
            channel: ch,
            g_lower: cm.g_lower.into(),
            g_upper: cm.g_upper.into(),
            phi_upper: cm.phi_upper.into(),
            alpha: Num(dm.alpha()),
            gamma_min: dm.geometry.gamma_min.into(),
            gamma_max: dm.geometry.gamma_max.into(),
            phi_m: dm.guaranteed_pm.into(),
        });
    }

    let mut diags = Vec::new();
    if r.inconclusive {
        diags.push(Diagnostic::warning(
            "inconclusive_bracket",
            format!(
                "mu bounds differ by more than 10%: alpha in [{}, {}]",
                Num(r.alpha_lower),
                Num(r.alpha_upper)
            ),
        ));
    }
    let check = match r.f_worst.iter().copied().collect::<Option<Vec<_>>>() {
        Some(f) if r.alpha_upper.is_finite() => {
            let v = verify_multiloop_destabilizing(p, &k, &points, &f, r.omega_crit)?;
            Some(MultiLoopCheck {
                stable: v.stable,
                ill_posed: v.ill_posed,
                nearest_pole: v.nearest_pole.map(ComplexNum::from),
                distance: Num(v.distance),
            })
        }
        _ => {
            diags.push(Diagnostic::info(
                "worst_case_not_checked",
                "worst-case factors include an infinite entry",
            ));
            None
        }
    };

    let report = MimoReport {
        sigma: Num(opts.skew),
        points: opts.points.to_string(),
        channels,
        alpha_lower: Num(r.alpha_lower),
        alpha_upper: Num(r.alpha_upper),
        omega_crit: Num(r.omega_crit),
        mu_upper: Num(r.mu_at_crit.upper),
        mu_lower: Num(r.mu_at_crit.lower),
        gamma_min: gmin.into(),
        gamma_max: gmax.into(),
        phi_m: pm.into(),
        delta_worst: r.delta_worst.iter().copied().map(ComplexNum::from).collect(),
        f_worst: r.f_worst.iter().map(|f| f.map(ComplexNum::from)).collect(),
        inconclusive: r.inconclusive,
        worst_case_check: check,
        loop_at_a_time: table,
    };
    Ok((report, diags))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn trace_csv(t: &TraceReport) -> Result<String, CliError> {
    csv_text(
        &["omega", "alpha", "gamma_min", "gamma_max", "gamma_m", "phi_m_deg"],
        t.rows.iter().map(|r| {
            [r.omega, r.alpha, r.gamma_min, r.gamma_max, r.gamma_m, r.phi_m_deg]
                .iter()
                .map(Num::to_string)
                .collect()
        }),
    )
}

pub fn samples_csv(s: &[NyquistSample]) -> Result<String, CliError> {
    csv_text(
        &["omega", "re", "im"],
        s.iter()
            .map(|r| vec![r.omega.to_string(), r.re.to_string(), r.im.to_string()]),
    )
}

pub fn loop_table_csv(m: &MimoReport) -> Result<String, CliError> {
    csv_text(
        &[
            "location",
            "channel",
            "g_lower",
            "g_upper",
            "phi_upper_deg",
            "alpha",
            "gamma_min",
            "gamma_max",
            "phi_m_deg",
        ],
        m.loop_at_a_time.iter().map(|r| {
            vec![
                r.location.clone(),
                r.channel.to_string(),
                r.g_lower.value.to_string(),
                r.g_upper.value.to_string(),
                r.phi_upper.deg.to_string(),
                r.alpha.to_string(),
                r.gamma_min.value.to_string(),
                r.gamma_max.value.to_string(),
                r.phi_m.deg.to_string(),
            ]
        }),
    )
}

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub model_path: String,
    pub options: Options,
    pub format: Format,
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}

fn document<R: serde::Serialize>(
    inv: &Invocation,
    m: &LoadedModel,
    results: R,
    diagnostics: Vec<Diagnostic>,
) -> Result<String, CliError> {
    let o = &inv.options;
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        tool: "dmkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: CommandEcho {
            name: inv.command.name().into(),
            model: inv.model_path.clone(),
            skew: Num(o.skew),
            grid: o.grid.map(|g| g.to_string()),
            worst_case: o.worst_case,
            points: (inv.command == Command::Mimo).then(|| o.points.to_string()),
            seed: o.seed,
        },
        input: InputInfo {
            path: inv.model_path.clone(),
            sha256: m.digest.clone(),
        },
        results,
        diagnostics,
        generated_at: timestamp(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Runs a command and renders its output.
pub fn run(inv: &Invocation) -> Result<String, CliError> {
    let m = LoadedModel::load(std::path::Path::new(&inv.model_path))?;
    run_loaded(inv, &m)
}

pub fn run_loaded(inv: &Invocation, m: &LoadedModel) -> Result<String, CliError> {
    let o = &inv.options;
    let no_csv = |what: &str| CliError::input(format!("{what} has no csv output; use --format json"));
    match inv.command {
        Command::Classical => {
            if inv.format == Format::Csv {
                return Err(no_csv("classical"));
            }
            let (r, d) = classical(m)?;
            document(inv, m, r, d)
        }
        Command::DiskMargin => {
            if inv.format == Format::Csv {
                return Err(no_csv("diskmargin"));
            }
            let (r, d) = diskmargin(m, o)?;
            document(inv, m, r, d)
        }
        Command::Trace => {
            let (r, d) = trace(m, o)?;
            match inv.format {
                Format::Csv => trace_csv(&r),
                Format::Json => document(inv, m, r, d),
            }
        }
        Command::Exclusion => {
            let (r, s, d) = exclusion(m, o)?;
            match inv.format {
                Format::Csv => samples_csv(&s),
                Format::Json => document(inv, m, r, d),
            }
        }
        Command::Mimo => {
            let (r, d) = mimo(m, o)?;
            match inv.format {
                Format::Csv => loop_table_csv(&r),
                Format::Json => document(inv, m, r, d),
            }
        }
    }
}
