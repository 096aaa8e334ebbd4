//! The four benchmark cases (4-qubit state grid, unit spacing), running them
//! per method with file output, and the resource comparison table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuit::{QftOptions, ResourceReport};
use crate::diffusion::{
    binomial_kernel_density, diffuse_qft, diffuse_qrw, DiffusionOptions, ItemizedResources, Method,
    DEFAULT_ALIAS_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::filter::{convolve_circular, convolve_circular_fft};
use crate::grid::{format_sig12, tv_distance, AxisSpec, DensitySpec, GridAxis, PointMassDensity};
use crate::statevector::ShotHistogram;

/// TV distance above which a run counts as an oracle failure.
pub const ORACLE_TV_TOL: f64 = 1e-10;

pub const DEFAULT_SHOTS: u64 = 100_000;

/// Simulated probabilities below this are roundoff when the oracle is zero.
pub const SPARSE_CUTOFF: f64 = 1e-14;

/// One diffusion test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    /// Label used in file names and tables.
    pub id: String,
    #[serde(default = "default_axis")]
    pub axis: AxisSpec,
    pub advected: DensitySpec,
    pub noise: DensitySpec,
    pub qrw_repeats: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    /// Noise label for tables, e.g. `N(0,1^2)`.
    #[serde(default)]
    pub noise_label: String,
    #[serde(default)]
    pub advected_label: String,
}

fn default_axis() -> AxisSpec {
    AxisSpec { xi_min: 0.0, delta: 1.0, num_qubits: 4 }
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn gaussian(mean: f64, std: f64) -> DensitySpec {
    DensitySpec::Gaussian { mean: vec![mean], std: vec![std] }
}

/// The binomial table `{1/16, 1/4, 3/8, 1/4, 1/16}` on `{-4, -2, 0, 2, 4}`.
pub fn four_step_table() -> DensitySpec {
    DensitySpec::Table {
        support: [-4.0, -2.0, 0.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect(),
        weights: vec![1.0 / 16.0, 0.25, 0.375, 0.25, 1.0 / 16.0],
    }
}

impl CaseSpec {
    /// Benchmark case 1-4.
    pub fn benchmark(id: u8) -> Result<Self> {
        let (advected, advected_label, noise, noise_label, qrw_repeats) = match id {
            1 => (gaussian(7.0, 1.0), "N(7,1^2)", gaussian(0.0, 1.0), "N(0,1^2)", 1),
            2 => (gaussian(7.0, 1.0), "N(7,1^2)", gaussian(0.0, 2.0), "N(0,2^2)", 4),
            3 => (DensitySpec::Delta { point: vec![7.0] }, "P(7)=1", gaussian(0.0, 1.0), "N(0,1^2)", 4),
            4 => (DensitySpec::Delta { point: vec![7.0] }, "P(7)=1", four_step_table(), "4 steps (pseudo)", 4),
            _ => return Err(Error::Validation(format!("unknown case {id}; expected 1..4"))),
        };
        Ok(Self {
            id: id.to_string(),
            axis: default_axis(),
            advected,
            noise,
            qrw_repeats,
            shots: DEFAULT_SHOTS,
            seed: 0,
            noise_label: noise_label.into(),
            advected_label: advected_label.into(),
        })
    }

    pub fn all_benchmarks() -> Vec<Self> {
        (1..=4).map(|i| Self::benchmark(i).expect("valid id")).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn state_axis(&self) -> Result<GridAxis> {
        self.axis.build()
    }

    pub fn advected_density(&self) -> Result<PointMassDensity> {
        self.advected.build(&[self.state_axis()?])
    }

    pub fn noise_density(&self) -> Result<PointMassDensity> {
        self.noise.build(&[self.axis.build_signed()?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Overrides the case's shot count.
    pub shots: Option<u64>,
    /// Overrides the case's seed.
    pub seed: Option<u64>,
    /// Overrides the case's walk repeat count.
    pub repeats: Option<usize>,
    pub qft: QftOptions,
    pub alias_threshold: f64,
    /// Write zero-weight rows in density CSVs.
    pub dense: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            shots: None,
            seed: None,
            repeats: None,
            qft: QftOptions::default(),
            alias_threshold: DEFAULT_ALIAS_THRESHOLD,
            dense: true,
        }
    }
}

/// Everything one case/method run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub case: String,
    pub method: Method,
    pub axis: GridAxis,
    pub exact_marginal: Vec<f64>,
    pub oracle: Vec<f64>,
    pub oracle_tv: f64,
    pub histogram: Option<ShotHistogram>,
    pub resources: Option<ItemizedResources>,
    pub wraparound_mass: f64,
    pub repeats: Option<usize>,
    pub seed: u64,
    pub shots: u64,
    pub warnings: Vec<String>,
}

impl CaseOutcome {
    pub fn oracle_ok(&self) -> bool {
        self.oracle_tv <= ORACLE_TV_TOL
    }

    /// `flat_index,coord_dim0,exact,[sampled,]oracle`.
    pub fn density_csv(&self, dense: bool) -> String {
        let freqs = self.histogram.as_ref().map(ShotHistogram::frequencies);
        let mut out = String::from("flat_index,coord_dim0,exact,");
        if freqs.is_some() {
            out.push_str("sampled,");
        }
        out.push_str("oracle\n");
        for (i, (&e, &o)) in self.exact_marginal.iter().zip(&self.oracle).enumerate() {
            let s = freqs.as_ref().map(|f| f[i]);
            if !dense && e.abs() < SPARSE_CUTOFF && o == 0.0 && s.is_none_or(|s| s == 0.0) {
                continue;
            }
            let _ = write!(out, "{i},{},{}", self.axis.coordinate(i), format_sig12(clean(e)));
            if let Some(s) = s {
                let _ = write!(out, ",{}", format_sig12(s));
            }
            let _ = writeln!(out, ",{}", format_sig12(clean(o)));
        }
        out
    }

    /// Result JSON: case, method, marginal, histogram, resources, wraparound, seed, shots.
    pub fn result_json(&self) -> serde_json::Value {
        json!({
            "case": self.case,
            "method": self.method,
            "exact_marginal": self.exact_marginal,
            "histogram": self.histogram.as_ref().map(|h| h.counts.clone()).unwrap_or_default(),
            "resources": self.resources.map(|r| r.total),
            "itemized_resources": self.resources,
            "wraparound_mass": self.wraparound_mass,
            "oracle_tv": self.oracle_tv,
            "repeats": self.repeats,
            "seed": self.seed,
            "shots": self.shots,
            "warnings": self.warnings,
        })
    }
}

/// Negative zero and subnormal residue print as `0`.
fn clean(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// Runs `case` with `method` in memory.
pub fn evaluate_case(case: &CaseSpec, method: Method, opts: &RunOptions) -> Result<CaseOutcome> {
    let advected = case.advected_density()?;
    let noise = case.noise_density()?;
    let seed = opts.seed.unwrap_or(case.seed);
    let shots = opts.shots.unwrap_or(case.shots);
    let dopts = DiffusionOptions { qft: opts.qft, alias_threshold: opts.alias_threshold, shots: Some(shots), seed };
    let repeats = opts.repeats.unwrap_or(case.qrw_repeats);

    let (exact, oracle, histogram, resources, wrap, warnings, repeats) = match method {
        Method::Qft => {
            let r = diffuse_qft(&advected, &noise, &dopts)?;
            let oracle = convolve_circular(&advected, &noise)?;
            (r.exact_marginal, oracle, r.histogram, Some(r.resources), r.wraparound_mass, r.warnings, None)
        }
        Method::Qrw => {
            let r = diffuse_qrw(&advected, repeats, &dopts)?;
            let kernel = binomial_kernel_density(advected.axes(), repeats)?;
            let oracle = convolve_circular(&advected, &kernel)?;
            (r.exact_marginal, oracle, r.histogram, Some(r.resources), r.wraparound_mass, r.warnings, Some(repeats))
        }
        Method::Classical => {
            let fft = convolve_circular_fft(&advected, &noise)?;
            let direct = convolve_circular(&advected, &noise)?;
            let wrap = crate::diffusion::wraparound_mass(&advected, &noise)?;
            (fft.into_weights(), direct, None, None, wrap, Vec::new(), None)
        }
    };
    let oracle = oracle.into_weights();
    Ok(CaseOutcome {
        case: case.id.clone(),
        method,
        axis: case.state_axis()?,
        oracle_tv: tv_distance(&exact, &oracle),
        exact_marginal: exact,
        oracle,
        histogram,
        resources,
        wraparound_mass: wrap,
        repeats,
        seed,
        shots: if method == Method::Classical { 0 } else { shots },
        warnings,
    })
}

/// Runs `case` with `method` and writes density CSV, histogram CSV, result
/// JSON, run manifest and a gnuplot script into `out_dir`.
pub fn run_case(
    case: &CaseSpec,
    method: Method,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<(CaseOutcome, Vec<PathBuf>)> {
    let outcome = evaluate_case(case, method, opts)?;
    fs::create_dir_all(out_dir)?;
    let stem = format!("case{}_{}", case.id, method);
    let mut files = Vec::new();
    fn write(files: &mut Vec<PathBuf>, dir: &Path, name: String, body: String) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    }
    write(&mut files, out_dir, format!("{stem}_density.csv"), outcome.density_csv(opts.dense))?;
    if let Some(h) = &outcome.histogram {
        write(
            &mut files,
            out_dir,
            format!("{stem}_histogram.csv"),
            h.to_csv(&outcome.exact_marginal, Some(&outcome.axis)),
        )?;
    }
    write(
        &mut files,
        out_dir,
        format!("{stem}_result.json"),
        serde_json::to_string_pretty(&outcome.result_json())? + "\n",
    )?;
    write(&mut files, out_dir, format!("{stem}.gp"), gnuplot_script(&stem, outcome.histogram.is_some()))?;
    let manifest = json!({
        "case": case,
        "method": method,
        "seed": outcome.seed,
        "shots": outcome.shots,
        "repeats": outcome.repeats,
        "options": opts,
        "oracle_tv": outcome.oracle_tv,
        "oracle_ok": outcome.oracle_ok(),
        "versions": { "qgbf": env!("CARGO_PKG_VERSION") },
        "files": files.iter().chain(std::iter::once(&out_dir.join(format!("{stem}_manifest.json")))).map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    write(&mut files, out_dir, format!("{stem}_manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok((outcome, files))
}

fn gnuplot_script(stem: &str, sampled: bool) -> String {
    let mut s = format!(
        "set datafile separator ','\nset key top right\nset xlabel 'x'\nset ylabel 'probability'\n\
         set style fill solid 0.4\nset terminal pngcairo size 800,500\nset output '{stem}.png'\n"
    );
    if sampled {
        let _ = writeln!(
            s,
            "plot '{stem}_density.csv' skip 1 using 2:4 with boxes title 'sampled', \\\n     \
             '{stem}_density.csv' skip 1 using 2:5 with linespoints title 'exact (oracle)'"
        );
    } else {
        let _ = writeln!(
            s,
            "plot '{stem}_density.csv' skip 1 using 2:3 with boxes title 'exact', \\\n     \
             '{stem}_density.csv' skip 1 using 2:4 with linespoints title 'oracle'"
        );
    }
    s
}

/// Reference gate counts and depths reported for the benchmark cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceRow {
    pub case: u8,
    pub method: Method,
    pub steps: usize,
    pub report: ResourceReport,
}

pub const fn reference(case: u8, method: Method, steps: usize, oneq: usize, twoq: usize, depth: usize) -> ReferenceRow {
    ReferenceRow { case, method, steps, report: ResourceReport { one_qubit_gates: oneq, two_qubit_gates: twoq, depth } }
}

/// Published counts. Cases 3 and 4 share one walk row since their walk circuits coincide.
pub const REFERENCE_TABLE: [ReferenceRow; 8] = [
    reference(1, Method::Qrw, 1, 576, 361, 732),
    reference(2, Method::Qrw, 4, 2259, 1411, 2832),
    reference(3, Method::Qrw, 4, 2258, 1411, 2832),
    reference(4, Method::Qrw, 4, 2258, 1411, 2832),
    reference(1, Method::Qft, 0, 104, 66, 89),
    reference(2, Method::Qft, 0, 104, 66, 89),
    reference(3, Method::Qft, 0, 103, 66, 89),
    reference(4, Method::Qft, 0, 95, 59, 89),
];

pub fn reference_row(case: &str, method: Method) -> Option<ReferenceRow> {
    REFERENCE_TABLE.iter().copied().find(|r| r.case.to_string() == case && r.method == method)
}

/// Adder and walk resources for one case, with walk/adder ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseComparison {
    pub case: String,
    pub advected_label: String,
    pub noise_label: String,
    pub qrw_repeats: usize,
    pub qft: ItemizedResources,
    pub qrw: ItemizedResources,
    pub gate_ratio: f64,
    pub depth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceTable {
    pub rows: Vec<CaseComparison>,
}

/// Builds both circuits for every case and tabulates their resources.
pub fn compare_methods(cases: &[CaseSpec], opts: &RunOptions) -> Result<ResourceTable> {
    let dopts = DiffusionOptions { qft: opts.qft, alias_threshold: opts.alias_threshold, shots: None, seed: 0 };
    let rows = cases
        .iter()
        .map(|case| {
            let advected = case.advected_density()?;
            let repeats = opts.repeats.unwrap_or(case.qrw_repeats);
            let qft = diffuse_qft(&advected, &case.noise_density()?, &dopts)?.resources;
            let qrw = diffuse_qrw(&advected, repeats, &dopts)?.resources;
            Ok(CaseComparison {
                case: case.id.clone(),
                advected_label: case.advected_label.clone(),
                noise_label: case.noise_label.clone(),
                qrw_repeats: repeats,
                gate_ratio: qrw.total.total_gates() as f64 / qft.total.total_gates() as f64,
                depth_ratio: qrw.total.depth as f64 / qft.total.depth as f64,
                qft,
                qrw,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ResourceTable { rows })
}

impl ResourceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "case,method,part,steps_or_noise,oneq,twoq,depth,ref_oneq,ref_twoq,ref_depth,gate_ratio_qrw_over_qft,depth_ratio_qrw_over_qft\n",
        );
        for r in &self.rows {
            for (method, res, label) in [
                (Method::Qft, &r.qft, r.noise_label.clone()),
                (Method::Qrw, &r.qrw, format!("{} steps", r.qrw_repeats)),
            ] {
                let reference = reference_row(&r.case, method)
                    .filter(|x| method == Method::Qft || x.steps == r.qrw_repeats)
                    .map(|x| x.report);
                for (part, rep) in
                    [("total", res.total), ("state_prep", res.state_prep), ("adder", res.adder), ("swaps", res.swaps)]
                {
                    let refs = match (part, reference) {
                        ("total", Some(x)) => format!("{},{},{}", x.one_qubit_gates, x.two_qubit_gates, x.depth),
                        _ => ",,".into(),
                    };
                    let ratios = if part == "total" && method == Method::Qrw {
                        format!("{:.4},{:.4}", r.gate_ratio, r.depth_ratio)
                    } else {
                        ",".into()
                    };
                    let _ = writeln!(
                        out,
                        "{},{method},{part},{label},{},{},{},{refs},{ratios}",
                        r.case, rep.one_qubit_gates, rep.two_qubit_gates, rep.depth
                    );
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5} {:<10} {:<10} {:<18} {:>6} {:>6} {:>6}   {:>16}   {:>6} {:>6}",
            "case", "method", "p(x_adv)", "steps / p(w)", "1Q", "2Q", "depth", "reference", "gates", "depth"
        );
        let _ = writeln!(out, "{:<72}{:>17}", "", "qrw/qft ratios");
        for r in &self.rows {
            for (method, res, label) in [
                (Method::Qrw, &r.qrw, format!("{} steps", r.qrw_repeats)),
                (Method::Qft, &r.qft, r.noise_label.clone()),
            ] {
                let reference = reference_row(&r.case, method)
                    .filter(|x| method == Method::Qft || x.steps == r.qrw_repeats)
                    .map(|x| format!("{}/{}/{}", x.report.one_qubit_gates, x.report.two_qubit_gates, x.report.depth))
                    .unwrap_or_else(|| "-".into());
                let ratios = if method == Method::Qrw {
                    format!("{:>6.2} {:>6.2}", r.gate_ratio, r.depth_ratio)
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "{:<5} {:<10} {:<10} {:<18} {:>6} {:>6} {:>6}   {:>16}   {}",
                    r.case,
                    method,
                    r.advected_label,
                    label,
                    res.total.one_qubit_gates,
                    res.total.two_qubit_gates,
                    res.total.depth,
                    reference,
                    ratios
                );
                for (part, rep) in [("prep", res.state_prep), ("adder", res.adder), ("swaps", res.swaps)] {
                    let _ = writeln!(
                        out,
                        "{:<5} {:<10} {:<10} {:<18} {:>6} {:>6} {:>6}",
                        "",
                        "",
                        "",
                        format!("  {part}"),
                        rep.one_qubit_gates,
                        rep.two_qubit_gates,
                        rep.depth
                    );
                }
            }
        }
        out
    }
}
