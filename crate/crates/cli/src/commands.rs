use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wmt_core::experiments::{
    gen_gaussian_curve_with_stats, gen_weighted_family, simulate_dipole, DipoleSpec,
    GaussianCurveSpec, JumpSpec, NoiseSpec,
};
use wmt_core::io::{read_sequence, write_atomic, write_pyramid, write_sequence, Format};
use wmt_core::measures::default_levels;
use wmt_core::multiscale::{
    detect_anomalies, optimality_number, threshold_details, OmegaOptions,
};
use wmt_core::transport_ops::distance;
use wmt_core::{analyze, synthesize, Error, Measure64, Pyramid64, Result, Sequence64};

use crate::report::{FlagRow, RunReport};

/// Settings shared by every subcommand.
pub struct Common {
    pub p: f64,
    pub format: Option<Format>,
    pub out_dir: PathBuf,
}

impl Common {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn read(&self, path: &Path) -> Result<Sequence64> {
        read_sequence(path, self.format.unwrap_or_else(|| Format::from_path(path))).map_err(|e| with_path(e, path))
    }

    /// Writes `sequence.json` or `sequence.csv` depending on `--format`.
    fn write_seq(&self, seq: &Sequence64, report: &mut RunReport) -> Result<()> {
        let format = self.format.unwrap_or(Format::Json);
        let name = match format {
            Format::Json => "sequence.json",
            Format::Csv => "sequence.csv",
        };
        let path = self.out(name);
        write_sequence(seq, &path, format)?;
        report.output(path);
        Ok(())
    }

    fn write_text(&self, name: &str, text: &str, report: &mut RunReport) -> Result<()> {
        let path = self.out(name);
        write_atomic(&path, text.as_bytes())?;
        report.output(path);
        Ok(())
    }
}

/// Names the file in I/O errors, which otherwise only carry the OS message.
fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn levels_for(seq: &Sequence64, levels: Option<u32>) -> u32 {
    levels.unwrap_or_else(|| default_levels(seq.len()))
}

fn norms_csv(pyr: &Pyramid64) -> String {
    let mut out = String::from("level,index,time,norm\n");
    for (k, norms) in pyr.norms().iter().enumerate() {
        let level = k as u32 + 1;
        for (i, n) in norms.iter().enumerate() {
            writeln!(out, "{level},{i},{},{n}", pyr.time(level, i)).expect("writing to a String");
        }
    }
    out
}

fn anomalies_csv(flags: &[FlagRow]) -> String {
    let mut out = String::from("level,index,time,norm\n");
    for f in flags {
        writeln!(out, "{},{},{},{}", f.level, f.index, f.time, f.norm).expect("writing to a String");
    }
    out
}

fn max_distance(a: &Sequence64, b: &Sequence64, p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Misaligned(format!(
            "sequences have {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    a.elements()
        .iter()
        .zip(b.elements())
        .try_fold(0.0, |m, (x, y)| Ok(f64::max(m, distance(x, y, p)?)))
}

fn omega_of(seq: &Sequence64, levels: u32, p: f64, shift: bool) -> Result<f64> {
    let opts = OmegaOptions {
        shift_averaged: shift,
        weights: None,
    };
    Ok(optimality_number(seq, levels, p, &opts)?.omega)
}

pub fn analyze_cmd(c: &Common, input: &Path, levels: Option<u32>, shift: bool) -> Result<()> {
    let mut report = RunReport::new("analyze");
    report.input(input);
    let seq = c.read(input)?;
    let levels = levels_for(&seq, levels);
    let pyr = analyze(&seq, levels, c.p)?;
    let omega = if shift {
        omega_of(&seq, levels, c.p, true)?
    } else {
        pyr.level_summaries().iter().map(|s| s.0).sum()
    };
    let path = c.out("pyramid.json");
    write_pyramid(&pyr, &path)?;
    report.output(path);
    c.write_text("norms.csv", &norms_csv(&pyr), &mut report)?;
    report.norm_table(&pyr);
    report.optimality = Some(omega);
    report.metric("levels", levels);
    println!("omega: {omega:.6}");
    report.finish(&c.out_dir)
}

pub fn synthesize_cmd(c: &Common, pyramid: &Path, reference: Option<&Path>) -> Result<()> {
    let mut report = RunReport::new("synthesize");
    report.input(pyramid);
    let pyr: Pyramid64 = wmt_core::io::read_pyramid(pyramid).map_err(|e| with_path(e, pyramid))?;
    let seq = synthesize(&pyr)?;
    c.write_seq(&seq, &mut report)?;
    report.norm_table(&pyr);
    if let Some(r) = reference {
        report.input(r);
        let err = max_distance(&seq, &c.read(r)?, pyr.p())?;
        report.metric("max_error", err);
        println!("max error: {err:.3e}");
    }
    report.finish(&c.out_dir)
}

pub fn denoise_cmd(
    c: &Common,
    input: &Path,
    threshold: f64,
    levels: Option<u32>,
    truth: Option<&Path>,
) -> Result<()> {
    if !(threshold >= 0.0) {
        return Err(Error::BadParameter(format!("threshold {threshold} must be >= 0")));
    }
    let mut report = RunReport::new("denoise");
    report.input(input);
    let seq = c.read(input)?;
    let levels = levels_for(&seq, levels);
    let pyr = analyze(&seq, levels, c.p)?;
    let kept = threshold_details(&pyr, threshold);
    let out = synthesize(&kept)?;
    c.write_seq(&out, &mut report)?;
    let path = c.out("pyramid.json");
    write_pyramid(&kept, &path)?;
    report.output(path);
    c.write_text("norms.csv", &norms_csv(&kept), &mut report)?;
    report.norm_table(&kept);

    let zeroed = pyr.nonzero_details() - kept.nonzero_details();
    let deviation = max_distance(&out, &seq, c.p)?;
    report.metric("threshold", threshold);
    report.metric("levels", levels);
    report.metric("zeroed_details", zeroed);
    report.metric("max_deviation_from_input", deviation);
    println!("zeroed details: {zeroed}");
    println!("max deviation from input: {deviation:.6}");
    if let Some(t) = truth {
        report.input(t);
        let truth = c.read(t)?;
        let before = max_distance(&seq, &truth, c.p)?;
        let after = max_distance(&out, &truth, c.p)?;
        report.metric("input_distance_to_truth", before);
        report.metric("output_distance_to_truth", after);
        println!("max distance to truth: {before:.6} -> {after:.6}");
    }
    report.finish(&c.out_dir)
}

pub fn detect_cmd(
    c: &Common,
    input: &Path,
    levels: Option<u32>,
    k_sigma: f64,
    all_levels: bool,
) -> Result<()> {
    if !(k_sigma >= 0.0) {
        return Err(Error::BadParameter(format!("k-sigma {k_sigma} must be >= 0")));
    }
    let mut report = RunReport::new("detect");
    report.input(input);
    let seq = c.read(input)?;
    let levels = levels_for(&seq, levels);
    let pyr = analyze(&seq, levels, c.p)?;
    let flags: Vec<FlagRow> = detect_anomalies(&pyr, k_sigma)
        .iter()
        .filter(|f| all_levels || f.level == levels)
        .map(FlagRow::from)
        .collect();
    for f in &flags {
        println!("level {} index {} time {:.6} norm {:.6}", f.level, f.index, f.time, f.norm);
    }
    c.write_text("anomalies.csv", &anomalies_csv(&flags), &mut report)?;
    c.write_text("norms.csv", &norms_csv(&pyr), &mut report)?;
    report.norm_table(&pyr);
    report.metric("k_sigma", k_sigma);
    report.metric("levels", levels);
    report.anomalies = flags;
    report.finish(&c.out_dir)
}

pub fn optimality_cmd(c: &Common, input: &Path, levels: Option<u32>, shift: bool) -> Result<()> {
    let mut report = RunReport::new("optimality");
    report.input(input);
    let seq = c.read(input)?;
    let levels = levels_for(&seq, levels);
    let omega = omega_of(&seq, levels, c.p, shift)?;
    report.optimality = Some(omega);
    report.metric("levels", levels);
    report.metric("shift_averaged", shift);
    println!("omega: {omega:.6}");
    report.finish(&c.out_dir)
}

fn read_spec<S: serde::de::DeserializeOwned>(path: &Path) -> Result<S> {
    let text = std::fs::read_to_string(path).map_err(|e| with_path(e.into(), path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })
}

pub struct DipoleArgs {
    pub spec: Option<PathBuf>,
    pub particles: Option<usize>,
    pub steps: Option<usize>,
    pub timestep: Option<f64>,
    pub noise: Option<f64>,
    pub seed: Option<u64>,
}

pub fn simulate_dipole_cmd(c: &Common, a: &DipoleArgs) -> Result<()> {
    let mut report = RunReport::new("simulate-dipole");
    let mut spec: DipoleSpec<f64> = match &a.spec {
        Some(p) => {
            report.input(p);
            read_spec(p)?
        }
        None => DipoleSpec::default(),
    };
    if let Some(v) = a.particles {
        spec.n_particles = v;
    }
    if let Some(v) = a.steps {
        spec.n_steps = v;
    }
    if let Some(v) = a.timestep {
        spec.timestep = v;
    }
    if let Some(v) = a.noise {
        spec.field_noise_sigma = v;
    }
    if let Some(v) = a.seed {
        spec.rng_seed = v;
    }
    let seq = simulate_dipole(&spec)?;
    c.write_seq(&seq, &mut report)?;
    let mut csv = String::from("step,time,atom,x,y\n");
    for (k, m) in seq.elements().iter().enumerate() {
        let d = m.as_discrete().expect("simulations produce discrete measures");
        for (j, atom) in d.atoms().enumerate() {
            let t = k as f64 * spec.timestep;
            writeln!(csv, "{k},{t},{j},{},{}", atom[0], atom[1]).expect("writing to a String");
        }
    }
    c.write_text("trajectories.csv", &csv, &mut report)?;
    report.metric("spec", serde_json::to_value(spec).expect("spec serializes"));
    println!("measures: {}", seq.len());
    report.finish(&c.out_dir)
}

pub struct CurveArgs {
    pub spec: Option<PathBuf>,
    pub samples: Option<usize>,
    pub bump: Option<f64>,
    pub noise_mean: Option<f64>,
    pub noise_var: Option<f64>,
    pub no_taper: bool,
    pub jump: Option<f64>,
    pub seed: Option<u64>,
}

fn curve_csv(seq: &Sequence64) -> String {
    let mut out = String::from("index,time,mean,variance\n");
    for (i, m) in seq.elements().iter().enumerate() {
        if let Measure64::Gaussian(g) = m {
            writeln!(out, "{i},{},{},{}", seq.time(i), g.mean(), g.variance()).expect("writing to a String");
        }
    }
    out
}

pub fn gen_gaussian_cmd(c: &Common, a: &CurveArgs) -> Result<()> {
    let mut report = RunReport::new("gen-gaussian");
    let mut spec: GaussianCurveSpec<f64> = match &a.spec {
        Some(p) => {
            report.input(p);
            read_spec(p)?
        }
        None => GaussianCurveSpec::default(),
    };
    if let Some(v) = a.samples {
        spec.n_samples = v;
    }
    if let Some(v) = a.bump {
        spec.bump_amplitude = v;
    }
    if a.noise_mean.is_some() || a.noise_var.is_some() {
        let base = spec.noise.unwrap_or(NoiseSpec {
            mean_sigma: 0.0,
            var_sigma: 0.0,
            taper: true,
        });
        spec.noise = Some(NoiseSpec {
            mean_sigma: a.noise_mean.unwrap_or(base.mean_sigma),
            var_sigma: a.noise_var.unwrap_or(base.var_sigma),
            taper: base.taper,
        });
    }
    if a.no_taper {
        if let Some(n) = spec.noise.as_mut() {
            n.taper = false;
        }
    }
    if let Some(v) = a.jump {
        spec.jump = Some(JumpSpec { variance_scale: v });
    }
    if let Some(v) = a.seed {
        spec.rng_seed = v;
    }
    let out = gen_gaussian_curve_with_stats(&spec)?;
    c.write_seq(&out.sequence, &mut report)?;
    c.write_text("curve.csv", &curve_csv(&out.sequence), &mut report)?;
    report.metric("clamped_variances", out.clamped);
    report.metric("spec", serde_json::to_value(spec).expect("spec serializes"));
    println!("measures: {}", out.sequence.len());
    report.finish(&c.out_dir)
}

pub fn gen_family_cmd(c: &Common, input: &Path, k: f64, levels: Option<u32>) -> Result<()> {
    let mut report = RunReport::new("gen-family");
    report.input(input);
    let smooth = c.read(input)?;
    let seq = gen_weighted_family(&smooth, k)?;
    c.write_seq(&seq, &mut report)?;
    c.write_text("curve.csv", &curve_csv(&seq), &mut report)?;
    let levels = levels_for(&seq, levels);
    let omega = omega_of(&seq, levels, c.p, false)?;
    report.optimality = Some(omega);
    report.metric("k", k);
    report.metric("levels", levels);
    println!("omega: {omega:.6}");
    report.finish(&c.out_dir)
}
