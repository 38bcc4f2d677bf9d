use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use vtest::asymptotics::{auto_test, chi_square_test, normal_test, null_mixture};
use vtest::bench::{run_bench, BenchConfig};
use vtest::distance::{load_distance_manifest, write_block_distance_set};
use vtest::model::{load_block_partition, load_matrix, write_matrix, MatrixFormat};
use vtest::sim::{
    estimate_power, replicate_p_values, roc_auc, Dataset, Model, NullKind, NullModelConfig,
    RateEstimate, ScenarioConfig, TestKind, TestSpec,
};
use vtest::tracy_widom::{tw_test, tw_test_numeric, write_f1_table};
use vtest::vstat::{bootstrap_test, permutation_test, PValueType, ResamplingPlan, TestInput};
use vtest::{BlockPartition, Method, Metric, NumericMatrix};

use crate::report::{InputInfo, RunReport, SpecInfo};
use crate::{
    BenchArgs, DistancesArgs, F1Args, FormatArg, MatrixArgs, MethodArg, ModelArgs, PValueArg,
    RateArgs, RocArgs, SimulateArgs, TestArgs, TestChoice, TwArgs,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or invalid input; exit code 2.
    Usage(String),
    /// Anything else; exit code 1.
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<vtest::Error> for CliError {
    fn from(e: vtest::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Internal(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, report: &RunReport) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(report).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn p_value_type(p: PValueArg) -> PValueType {
    match p {
        PValueArg::Valid => PValueType::Valid,
        PValueArg::Unbiased => PValueType::Unbiased,
    }
}

fn format_of(f: Option<FormatArg>) -> MatrixFormat {
    match f {
        Some(FormatArg::GenotypeDosage) => MatrixFormat::GenotypeDosage,
        _ => MatrixFormat::Delimited,
    }
}

struct Loaded {
    matrix: NumericMatrix,
    keep: Vec<usize>,
    info: InputInfo,
}

/// Load, column-filter and optionally binarize `--input`.
fn load(args: &MatrixArgs) -> Result<Loaded> {
    let path = args
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let format = format_of(args.format);
    let raw = load_matrix(path, format)?;
    let p_input = raw.n_cols();
    let keep = match args.min_freq {
        Some(f) if !(0.0..=0.5).contains(&f) => {
            return usage(format!("--min-freq must lie in [0, 0.5], got {f}"))
        }
        Some(f) => {
            let ploidy = if format == MatrixFormat::GenotypeDosage {
                2.0
            } else {
                1.0
            };
            raw.frequency_filter(f, ploidy)
        }
        None => (0..p_input).collect(),
    };
    if keep.is_empty() {
        return usage("no columns pass --min-freq");
    }
    let filtered = if keep.len() == p_input {
        raw
    } else {
        raw.select_columns(&keep)
    };
    let matrix = match args.binarize_threshold {
        Some(t) => filtered.binarize(t).to_numeric(),
        None => filtered,
    };
    let info = InputInfo {
        paths: vec![path.display().to_string()],
        kind: "matrix",
        n: matrix.n_rows(),
        p: Some(matrix.n_cols()),
        p_input: Some(p_input),
        binarize_threshold: args.binarize_threshold,
        min_freq: args.min_freq,
        ..Default::default()
    };
    Ok(Loaded { matrix, keep, info })
}

fn partition(
    blocks: Option<&PathBuf>,
    singletons: bool,
    loaded: &mut Loaded,
) -> Result<Option<BlockPartition>> {
    let part = match (blocks, singletons) {
        (Some(path), _) => {
            let full = load_block_partition(path, loaded.info.p_input.unwrap())?;
            loaded.info.paths.push(path.display().to_string());
            Some(full.restrict(&loaded.keep)?)
        }
        (None, true) => Some(BlockPartition::singletons(loaded.matrix.n_cols())),
        (None, false) => None,
    };
    loaded.info.blocks = part.as_ref().map(BlockPartition::n_blocks);
    Ok(part)
}

fn matrix_input(
    loaded: &Loaded,
    part: Option<&BlockPartition>,
    metric: Option<Metric>,
) -> Result<(TestInput, Option<Metric>)> {
    let binary = loaded.matrix.is_binary();
    let metric = match (metric, binary) {
        (Some(m), _) => Some(m),
        (None, true) => Some(Metric::Hamming),
        (None, false) if part.is_some() => {
            return usage("real-valued data with blocks needs an explicit --metric");
        }
        (None, false) => None,
    };
    let input = match part {
        Some(part) => TestInput::from_matrix(&loaded.matrix, Some(part), metric.unwrap())?,
        None if binary => TestInput::Binary(loaded.matrix.binarize(0.5)),
        None => {
            return usage(format!(
                "{} (or pass --binarize-threshold to test 0/1 data)",
                vtest::Error::NonBinaryEsif
            ))
        }
    };
    Ok((input, metric))
}

pub fn test(a: TestArgs) -> Result<()> {
    let plan = ResamplingPlan::new(a.resamples, a.seed, p_value_type(a.pvalue))?;
    let (input, info, metric) = if let Some(manifest) = &a.distances {
        let m = &a.matrix;
        if m.format.is_some() || m.binarize_threshold.is_some() || m.min_freq.is_some() {
            return usage(
                "--format, --binarize-threshold and --min-freq apply to --input, not --distances",
            );
        }
        if a.blocks.is_some() || a.singleton_blocks || a.metric.is_some() {
            return usage(
                "--blocks, --singleton-blocks and --metric cannot be combined with --distances",
            );
        }
        if a.method == MethodArg::Boot {
            return usage("--method boot needs a binary --input matrix, not --distances");
        }
        let set = load_distance_manifest(manifest, None)?;
        let norm = a.norm.unwrap_or(1.0);
        let info = InputInfo {
            paths: vec![manifest.display().to_string()],
            kind: "distances",
            n: set.n(),
            blocks: Some(set.n_blocks()),
            ..Default::default()
        };
        (TestInput::distances(set).with_norm(norm), info, None)
    } else {
        if a.matrix.input.is_none() {
            return usage("one of --input or --distances is required");
        }
        if a.norm.is_some() {
            return usage("--norm applies only to --distances input");
        }
        if a.method == MethodArg::Boot && (a.blocks.is_some() || a.singleton_blocks) {
            return usage("--method boot tests independent binary features and takes no blocks");
        }
        let mut loaded = load(&a.matrix)?;
        let part = partition(a.blocks.as_ref(), a.singleton_blocks, &mut loaded)?;
        let (input, metric) = matrix_input(&loaded, part.as_ref(), a.metric)?;
        (input, loaded.info, metric)
    };
    let result = match a.method {
        MethodArg::Auto => auto_test(&input, &plan, a.auto_threshold)?,
        MethodArg::Perm => permutation_test(&input, &plan)?,
        MethodArg::Chisq => chi_square_test(&input)?,
        MethodArg::Normal => normal_test(&input)?,
        MethodArg::Boot => match &input {
            TestInput::Binary(m) => bootstrap_test(m, &plan)?,
            TestInput::Blocks { .. } => unreachable!(),
        },
    };
    let resampled = matches!(result.method, Method::Permutation | Method::Bootstrap);
    let mixture = match result.method {
        Method::ChiSquare => Some(null_mixture(&input)?),
        _ => None,
    };
    let spec = SpecInfo {
        method_requested: a.method.to_possible_value().unwrap().get_name().to_string(),
        resamples: resampled.then_some(plan.resamples),
        seed: resampled.then_some(plan.seed),
        p_value_type: resampled.then(|| format!("{:?}", plan.p_value_type).to_lowercase()),
        metric: metric.map(|m| m.to_string()),
        norm: Some(input.norm()),
        auto_threshold: (a.method == MethodArg::Auto).then_some(a.auto_threshold),
    };
    let mut report = RunReport::new(info, spec, result);
    report.mixture = mixture;
    emit_json(a.out.as_deref(), &report)
}

pub fn tw(a: TwArgs) -> Result<()> {
    let loaded = load(&a.matrix)?;
    let (result, stat) = if loaded.matrix.is_binary() {
        tw_test(&loaded.matrix.binarize(0.5))?
    } else {
        tw_test_numeric(&loaded.matrix)?
    };
    let spec = SpecInfo {
        method_requested: "tracy_widom".into(),
        resamples: None,
        seed: None,
        p_value_type: None,
        metric: None,
        norm: None,
        auto_threshold: None,
    };
    let mut report = RunReport::new(loaded.info, spec, result);
    report.tracy_widom = Some(stat);
    emit_json(a.out.as_deref(), &report)
}

pub fn distances(a: DistancesArgs) -> Result<()> {
    let mut loaded = load(&a.matrix)?;
    let part = partition(a.blocks.as_ref(), a.singleton_blocks, &mut loaded)?.ok_or_else(|| {
        CliError::Usage("one of --blocks or --singleton-blocks is required".into())
    })?;
    let input = TestInput::from_matrix(&loaded.matrix, Some(&part), a.metric)?;
    let TestInput::Blocks { set, .. } = input else {
        unreachable!()
    };
    let manifest = write_block_distance_set(&a.out_dir, &set)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{}", manifest.display());
    Ok(())
}

fn null_kind(s: &str) -> Option<NullKind> {
    Some(match s {
        "low" | "low_freq" => NullKind::LowFreq,
        "varying" | "varying_freq" => NullKind::VaryingFreq,
        "high" | "high_freq" => NullKind::HighFreq,
        "mixture_gaussian" | "gaussian_mixture" => NullKind::MixtureGaussian,
        _ => return None,
    })
}

/// A model from a config file (scenario if it has `sizes`) or a null kind.
fn model_from(spec: &str, n: Option<usize>, p: Option<usize>, seed: Option<u64>) -> Result<Model> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{spec}: {e}")))?;
        let at = |e: vtest::Error| CliError::Usage(format!("{spec}: {e}"));
        let is_scenario = vtest::sim::parse_kv(&text, &ScenarioConfig::KEYS).is_ok()
            && text.lines().any(|l| l.trim_start().starts_with("sizes"));
        let mut model = if is_scenario {
            Model::Scenario(ScenarioConfig::from_kv(&text).map_err(at)?)
        } else {
            Model::Null(NullModelConfig::from_kv(&text).map_err(at)?)
        };
        if n.is_some() || p.is_some() {
            match &mut model {
                Model::Null(c) => {
                    c.n = n.unwrap_or(c.n);
                    c.p = p.unwrap_or(c.p);
                    c.validate()?;
                }
                Model::Scenario(_) => {
                    return usage("--n/--p cannot override a scenario file; edit sizes and p")
                }
            }
        }
        if let Some(s) = seed {
            match &mut model {
                Model::Null(c) => c.seed = s,
                Model::Scenario(c) => c.seed = s,
            }
        }
        return Ok(model);
    }
    let kind = null_kind(spec).ok_or_else(|| {
        CliError::Usage(format!(
            "{spec:?} is neither a config file nor a null kind (low, varying, high, mixture_gaussian)"
        ))
    })?;
    let (Some(n), Some(p)) = (n, p) else {
        return usage("a null kind needs --n and --p");
    };
    let cfg = NullModelConfig::new(kind, n, p, seed.unwrap_or(0));
    cfg.validate()?;
    Ok(Model::Null(cfg))
}

fn model_args(m: &ModelArgs) -> Result<Model> {
    match (&m.null, &m.scenario) {
        (Some(s), None) => model_from(s, m.n, m.p, m.seed),
        (None, Some(path)) => {
            let model = model_from(&path.display().to_string(), m.n, m.p, m.seed)?;
            if !matches!(model, Model::Scenario(_)) {
                return usage(format!("{} is not a scenario config", path.display()));
            }
            Ok(model)
        }
        _ => usage("one of --null or --scenario is required"),
    }
}

fn describe(model: &Model) -> String {
    match model {
        Model::Null(c) => format!("{}:n={}:p={}", c.kind, c.n, c.p),
        Model::Scenario(c) => {
            let sizes: Vec<String> = c.sizes.iter().map(|s| s.to_string()).collect();
            format!(
                "scenario:sizes={}:p={}:eps={}:{}",
                sizes.join("/"),
                c.p,
                c.epsilon,
                c.mode
            )
        }
    }
}

fn test_spec(t: &TestChoice) -> Result<TestSpec> {
    let kind = match t.test.as_str() {
        "v" => TestKind::Auto,
        "v-perm" => TestKind::Permutation,
        "v-chisq" => TestKind::ChiSquare,
        "v-normal" => TestKind::Normal,
        "v-boot" => TestKind::Bootstrap,
        "tw" => TestKind::TracyWidom,
        other => {
            return usage(format!(
                "unknown --test {other:?} (v, v-perm, v-chisq, v-normal, v-boot, tw)"
            ))
        }
    };
    if t.resamples == 0 {
        return usage("--R must be at least 1");
    }
    Ok(TestSpec {
        kind,
        resamples: t.resamples,
        p_value_type: p_value_type(t.pvalue),
        auto_threshold: t.auto_threshold,
        metric: t.metric,
    })
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let model = model_args(&a.model)?;
    let io = |e: vtest::Error| CliError::Internal(e.to_string());
    match (&model, &a.labels) {
        (Model::Scenario(cfg), labels) => {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                vtest::numeric::mix_seed(cfg.seed, a.replicate),
            );
            let s = vtest::sim::gen_stratified(cfg, &mut rng)?;
            write_matrix(&a.out, &s.matrix.to_numeric()).map_err(io)?;
            if let Some(path) = labels {
                let text: String = s.labels.iter().map(|l| format!("{l}\n")).collect();
                emit(Some(path), &text)?;
            }
        }
        (Model::Null(_), Some(_)) => return usage("--labels applies to scenario data only"),
        (Model::Null(_), None) => {
            let data = model.replicate(a.replicate)?;
            let m = match data {
                Dataset::Binary(b) => b.to_numeric(),
                Dataset::Numeric(m) => m,
            };
            write_matrix(&a.out, &m).map_err(io)?;
        }
    }
    Ok(())
}

pub fn rate(a: RateArgs, power: bool) -> Result<()> {
    let model = model_args(&a.model)?;
    match (&model, power) {
        (Model::Null(_), true) => return usage("power needs --scenario"),
        (Model::Scenario(_), false) => return usage("fpr needs --null"),
        _ => {}
    }
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    if let Some(bad) = a.alpha.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return usage(format!("--alpha values must lie in [0, 1], got {bad}"));
    }
    let spec = test_spec(&a.test)?;
    let p = match &model {
        Model::Scenario(cfg) if a.alpha.len() == 1 => {
            let r = estimate_power(cfg, &spec, a.alpha[0], a.reps)?;
            return emit(
                a.out.as_deref(),
                &rate_table(&model, &a.test.test, &[(a.alpha[0], r)]),
            );
        }
        _ => replicate_p_values(&model, &spec, a.reps)?,
    };
    let rows: Vec<(f64, RateEstimate)> = a
        .alpha
        .iter()
        .map(|&al| (al, RateEstimate::from_p_values(&p, al)))
        .collect();
    emit(a.out.as_deref(), &rate_table(&model, &a.test.test, &rows))
}

fn rate_table(model: &Model, test: &str, rows: &[(f64, RateEstimate)]) -> String {
    let mut s = String::from("config\ttest\talpha\trate\tci_lo\tci_hi\treps\n");
    for (alpha, r) in rows {
        writeln!(
            s,
            "{}\t{test}\t{alpha}\t{}\t{}\t{}\t{}",
            describe(model),
            r.rate,
            r.ci_lo,
            r.ci_hi,
            r.reps
        )
        .unwrap();
    }
    s
}

pub fn roc(a: RocArgs) -> Result<()> {
    // Scenario files keep their own dimensions; a bare null kind borrows the other arm's.
    let file_arm = |spec: &str| -> Result<Option<Model>> {
        if !Path::new(spec).is_file() {
            return Ok(None);
        }
        match model_from(spec, None, None, None)? {
            Model::Null(_) => model_from(spec, a.n, a.p, None).map(Some),
            scenario => Ok(Some(scenario)),
        }
    };
    let kind_arm = |spec: &str, other: Option<&Model>| {
        let d = other.map(dims);
        model_from(spec, a.n.or(d.map(|d| d.0)), a.p.or(d.map(|d| d.1)), None)
    };
    let (null, alt) = match (file_arm(&a.null)?, file_arm(&a.alt)?) {
        (Some(null), Some(alt)) => (null, alt),
        (Some(null), None) => {
            let alt = kind_arm(&a.alt, Some(&null))?;
            (null, alt)
        }
        (None, alt) => {
            let null = kind_arm(&a.null, alt.as_ref())?;
            let alt = match alt {
                Some(alt) => alt,
                None => kind_arm(&a.alt, Some(&null))?,
            };
            (null, alt)
        }
    };
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    let spec = test_spec(&a.test)?;
    let r = roc_auc(&null, &alt, &spec, a.reps)?;
    let sd = vtest::sim::auroc_null_sd(a.reps, a.reps);
    let table = format!(
        "null\talt\ttest\treps\tauroc\tnull_sd\n{}\t{}\t{}\t{}\t{}\t{sd}\n",
        describe(&null),
        describe(&alt),
        a.test.test,
        r.replicates,
        r.auroc
    );
    if let Some(path) = &a.points {
        let mut pts = String::from("fpr\ttpr\n");
        for (f, t) in &r.roc_points {
            writeln!(pts, "{f}\t{t}").unwrap();
        }
        emit(Some(path), &pts)?;
    }
    emit(a.out.as_deref(), &table)
}

fn dims(model: &Model) -> (usize, usize) {
    match model {
        Model::Null(c) => (c.n, c.p),
        Model::Scenario(c) => (c.n(), c.p),
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("dimension {s:?} should look like 50x500"));
    let (n, p) = s.split_once('x').ok_or_else(bad)?;
    Ok((
        n.trim().parse().map_err(|_| bad())?,
        p.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let dims: Vec<(usize, usize)> = a
        .dims
        .iter()
        .map(|d| parse_dims(d))
        .collect::<Result<_>>()?;
    if a.repeats == 0 || a.resamples == 0 {
        return usage("--repeats and --R must be at least 1");
    }
    let mut s =
        String::from("n\tp\tR\trepeats\tthreads\tpermutation_s\tchi_square_s\tnormal_s\tspeedup\n");
    for (n, p) in dims {
        let cfg = BenchConfig {
            n,
            p,
            resamples: a.resamples,
            repeats: a.repeats,
            threads: rayon::current_num_threads(),
            seed: a.seed,
        };
        let r = run_bench(&cfg)?;
        writeln!(
            s,
            "{n}\t{p}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.1}",
            cfg.resamples,
            cfg.repeats,
            cfg.threads,
            r.permutation_ms / 1e3,
            r.chi_square_ms / 1e3,
            r.normal_ms / 1e3,
            r.speedup
        )
        .unwrap();
    }
    emit(a.out.as_deref(), &s)
}

pub fn f1_table(a: F1Args) -> Result<()> {
    let mut buf = Vec::new();
    write_f1_table(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(a.out.as_deref(), &String::from_utf8(buf).unwrap())
}
