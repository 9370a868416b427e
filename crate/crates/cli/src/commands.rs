//! One function per subcommand. Each returns the stdout payload; the binary
//! prints it and maps errors to exit codes.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use gradecast_core::dataset::aggregate_factors;
use gradecast_core::metrics::{evaluate, seconds_ms};
use gradecast_core::paper_models::{builtin_model, classify_significance, PaperModelId};
use gradecast_core::registry::CUSTOM_PREFIX;
use gradecast_core::{
    aggregate_responses, build_tree, builtin_schema, fit_ols, load_csv, serialize_csv, split_train_test, synthesize,
    Dataset, Error, FactorCode, FeatureMap, Granularity, LinearModel, Model, PredictRequest, PredictResponse,
    Predictor, QuestionnaireSchema, Registry, SplitSpec, SynthSpec, TreeParams, VariableId,
};
use indexmap::IndexMap;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Algo, EvaluateArgs, ExportArgs, GranularityArg, PredictArgs, SchemaArgs, SignificanceArgs, SynthArgs, TrainArgs};
use crate::{CliError, CliResult};

pub fn load_schema(path: Option<&Path>) -> CliResult<QuestionnaireSchema> {
    match path {
        None => Ok(builtin_schema()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            Ok(QuestionnaireSchema::from_json(&text)?)
        }
    }
}

pub fn render<T: Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("serializable output")
    } else {
        serde_json::to_string(value).expect("serializable output")
    }
}

/// A builtin id or a model file; files get the `custom:<stem>` id.
pub fn resolve_model(spec: &str) -> CliResult<(String, Model)> {
    if let Ok(id) = spec.parse::<PaperModelId>() {
        return Ok((id.as_str().to_string(), Model::Linear(builtin_model(id))));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(CliError::input(format!("unknown model `{spec}` (not a builtin id or a file)")));
    }
    let model = Model::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    Ok((format!("{CUSTOM_PREFIX}{stem}"), model))
}

fn read_csv(path: &Path, schema: &QuestionnaireSchema) -> CliResult<Dataset> {
    let file = fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    load_csv(file, schema).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn shape(d: Dataset, wanted: Option<Granularity>, schema: &QuestionnaireSchema) -> CliResult<Dataset> {
    match (wanted, d.granularity()) {
        (None, _) => Ok(d),
        (Some(w), g) if w == g => Ok(d),
        (Some(Granularity::Factor), Granularity::Variable) => Ok(aggregate_factors(&d, schema)?),
        (Some(w), g) => Err(CliError::input(format!("cannot use a {g} dataset at {w} granularity"))),
    }
}

fn granularity_of(arg: Option<GranularityArg>) -> Option<Granularity> {
    arg.map(|g| match g {
        GranularityArg::Variable => Granularity::Variable,
        GranularityArg::Factor => Granularity::Factor,
    })
}

fn write_out(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, format!("{contents}\n")).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn cmd_train(schema: &QuestionnaireSchema, args: &TrainArgs, pretty: bool) -> CliResult<String> {
    let data = shape(read_csv(&args.csv, schema)?, granularity_of(args.granularity), schema)?;
    let (train, test) = match args.train_fraction {
        Some(f) => {
            let (train, test) = split_train_test(&data, SplitSpec::new(f, args.seed)?)?;
            (train, Some(test))
        }
        None => (data, None),
    };
    if test.is_none() && args.test_out.is_some() {
        return Err(CliError::input("--test-out needs --train-fraction"));
    }

    let start = Instant::now();
    let model = match args.algo {
        Algo::Ols => Model::Linear(fit_ols(&train, train.feature_names())?.0),
        Algo::M5p => {
            let params = TreeParams {
                min_split: args.min_split,
                smoothing_k: args.smoothing_k,
                prune: !args.no_prune,
                ..TreeParams::default()
            };
            params.validate()?;
            Model::Tree(build_tree(&train, &params)?)
        }
    };
    let build_time = start.elapsed();

    write_out(&args.out, &model.to_json())?;
    if let (Some(path), Some(test)) = (&args.test_out, &test) {
        fs::write(path, serialize_csv(test)).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    let summary = json!({
        "model": args.out.display().to_string(),
        "algo": match args.algo { Algo::Ols => "ols", Algo::M5p => "m5p" },
        "granularity": train.granularity(),
        "train_rows": train.len(),
        "test_rows": test.as_ref().map_or(0, Dataset::len),
        "build_time_s": seconds_ms(build_time),
    });
    Ok(render(&summary, pretty))
}

pub fn cmd_evaluate(schema: &QuestionnaireSchema, args: &EvaluateArgs, pretty: bool) -> CliResult<String> {
    let (_, model) = resolve_model(&args.model)?;
    let mut data = shape(read_csv(&args.csv, schema)?, granularity_of(args.granularity), schema)?;
    if model.granularity() == Granularity::Factor && data.granularity() == Granularity::Variable {
        data = aggregate_factors(&data, schema)?;
    }
    let mut report = evaluate(&model, &data, None)?;
    if args.omit_timings {
        report.test_time_s = 0.0;
    }
    let text = render(&report, pretty);
    if let Some(out) = &args.out {
        write_out(out, &text)?;
    }
    Ok(text)
}

fn read_responses(spec: &str) -> CliResult<String> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') {
        return Ok(spec.to_string());
    }
    if spec == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(spec).map_err(|e| CliError::input(format!("{spec}: {e}")))
}

/// Predicts one respondent.
///
/// `{"responses": {...}}` documents carry raw scale values and go through the
/// same registry path as the HTTP service. Any other object is a flat map of
/// already coded feature values.
pub fn cmd_predict(schema: &QuestionnaireSchema, args: &PredictArgs, pretty: bool) -> CliResult<String> {
    let text = read_responses(&args.responses)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("responses: {e}")))?;
    let (id, model) = resolve_model(&args.model)?;

    let response = if value.get("responses").is_some() {
        let responses: IndexMap<String, f64> = serde_json::from_value(value["responses"].clone())
            .map_err(|e| CliError::input(format!("responses: {e}")))?;
        let mut registry = Registry::builtin(schema.clone());
        if let Some(name) = id.strip_prefix(CUSTOM_PREFIX) {
            registry.register_custom(name, model);
        }
        registry.predict(&PredictRequest { model: id, responses })?
    } else {
        let coded: FeatureMap =
            serde_json::from_value(value).map_err(|e| CliError::input(format!("responses: {e}")))?;
        let needs_factors = model.granularity() == Granularity::Factor
            && !coded.is_empty()
            && coded.keys().all(|k| k.parse::<VariableId>().is_ok());
        let (features, factor_values) = if needs_factors {
            let factors = aggregate_responses(&coded, schema)?;
            (factors.clone(), Some(factors))
        } else {
            (coded, None)
        };
        let missing: Vec<String> = model.feature_names().into_iter().filter(|n| !features.contains_key(n)).collect();
        if !missing.is_empty() {
            return Err(CliError::input(format!("missing features: {}", missing.join(", "))));
        }
        let raw = model.predict(&features)?;
        let bounds = gradecast_core::GradeBounds::default();
        PredictResponse { raw, clamped: bounds.clamp(raw), model: id, factor_values }
    };
    Ok(render(&response, pretty))
}

pub fn cmd_schema(schema: &QuestionnaireSchema, args: &SchemaArgs, pretty: bool) -> CliResult<String> {
    let text = if pretty { schema.to_json_pretty() } else { schema.to_json() };
    if let Some(out) = &args.out {
        write_out(out, &text)?;
    }
    Ok(text)
}

pub fn cmd_export(args: &ExportArgs, pretty: bool) -> CliResult<String> {
    let (_, model) = resolve_model(&args.model)?;
    let text = if pretty { model.to_json_pretty() } else { model.to_json() };
    if let Some(out) = &args.out {
        write_out(out, &text)?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct Term {
    feature: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficient: Option<f64>,
    prompt: String,
}

#[derive(Debug, Serialize)]
struct SignificanceOutput {
    model: String,
    counts: IndexMap<&'static str, usize>,
    positive: Vec<Term>,
    negative: Vec<Term>,
    insignificant: Vec<Term>,
}

fn prompt_for(schema: &QuestionnaireSchema, feature: &str) -> String {
    if let Ok(id) = feature.parse::<VariableId>() {
        return schema.prompt(id).to_string();
    }
    match FactorCode::parse(feature) {
        Ok(code) => code.title().to_string(),
        Err(_) => String::new(),
    }
}

pub fn cmd_significance(schema: &QuestionnaireSchema, args: &SignificanceArgs, pretty: bool) -> CliResult<String> {
    let (id, model) = resolve_model(&args.model)?;
    let (label, linear): (String, LinearModel) = match (&model, args.leaf) {
        (Model::Linear(m), None) => (id, m.clone()),
        (Model::Linear(_), Some(_)) => return Err(CliError::input("--leaf only applies to tree models")),
        (Model::Tree(_), None) => return Err(CliError::input("tree model: choose a leaf model with --leaf")),
        (Model::Tree(t), Some(k)) => {
            let leaves = t.leaf_models();
            let m = leaves
                .get(k.wrapping_sub(1))
                .ok_or_else(|| CliError::input(format!("leaf {k} out of range 1..={}", leaves.len())))?;
            (format!("{id} LM{k}"), (*m).clone())
        }
    };
    let universe = match model.granularity() {
        Granularity::Variable => schema.variable_names(),
        Granularity::Factor => schema.factor_names(),
        Granularity::Custom => linear.coefficients.keys().cloned().collect(),
    };
    let report = classify_significance(&linear, &universe);
    let terms = |names: &[String], with_coef: bool| -> Vec<Term> {
        names
            .iter()
            .map(|n| Term {
                feature: n.clone(),
                coefficient: if with_coef { linear.coefficients.get(n).copied() } else { None },
                prompt: prompt_for(schema, n),
            })
            .collect()
    };
    let out = SignificanceOutput {
        model: label,
        counts: [
            ("positive", report.positive.len()),
            ("negative", report.negative.len()),
            ("insignificant", report.insignificant.len()),
        ]
        .into_iter()
        .collect(),
        positive: terms(&report.positive, true),
        negative: terms(&report.negative, true),
        insignificant: terms(&report.insignificant, false),
    };
    if pretty {
        Ok(significance_text(&out))
    } else {
        Ok(render(&out, false))
    }
}

fn significance_text(out: &SignificanceOutput) -> String {
    let mut s = format!(
        "{}: {} positive, {} negative, {} insignificant\n",
        out.model, out.counts["positive"], out.counts["negative"], out.counts["insignificant"]
    );
    for (title, terms) in [("Positive", &out.positive), ("Negative", &out.negative), ("Insignificant", &out.insignificant)] {
        s.push_str(&format!("\n{title}\n"));
        if terms.is_empty() {
            s.push_str("  (none)\n");
        }
        for t in terms {
            match t.coefficient {
                Some(c) => s.push_str(&format!("  {:<5} {:+.4}  {}\n", t.feature, c, t.prompt)),
                None => s.push_str(&format!("  {:<5} {}\n", t.feature, t.prompt)),
            }
        }
    }
    s.pop();
    s
}

pub fn cmd_synth(schema: &QuestionnaireSchema, args: &SynthArgs) -> CliResult<String> {
    let spec = SynthSpec {
        samples: args.samples,
        seed: args.seed,
        noise_sd: args.noise,
        granularity: granularity_of(Some(args.granularity)).unwrap_or(Granularity::Variable),
        ..SynthSpec::default()
    };
    let d = synthesize(schema, &spec).map_err(|e| match e {
        Error::NonFiniteInput => CliError::input("noise must be a finite non-negative number"),
        other => other.into(),
    })?;
    let csv = serialize_csv(&d);
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Ok(render(&json!({ "csv": path.display().to_string(), "rows": d.len() }), false))
        }
        None => Ok(csv.trim_end().to_string()),
    }
}
