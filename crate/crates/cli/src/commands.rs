use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use loghmm::io::{load_model, read_sequences_file, save_model};
use loghmm::{
    baum_welch, datasets, initial_model, posterior_decode, posteriors, score_model, viterbi, Error, Family, HmmModel,
    ModelScore, TrainingConfig, TrainingReport,
};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{BenchmarkArgs, DataArgs, Dataset, DecodeArgs, EvalArgs, FitArgs, Format, Method};

type CliResult<T> = Result<T, String>;

fn msg(e: Error) -> String {
    e.to_string()
}

fn read_data(args: &DataArgs) -> CliResult<Vec<Vec<f64>>> {
    let path = args.data.as_ref().ok_or("--data is required")?;
    read_sequences_file(path, args.column, args.delimiter).map_err(|e| match e {
        Error::Parse { .. } => format!("{}: {e}", path.display()),
        other => other.to_string(),
    })
}

fn load(path: &Path) -> CliResult<HmmModel> {
    let loaded = load_model(path).map_err(msg)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(loaded.model)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Per-state families from `--family` and `--states`: a single family is
/// repeated for every state, a list must have one entry per state.
fn families(names: &[String], default: Option<Family>, states: Option<usize>) -> CliResult<Vec<Family>> {
    let list: Vec<Family> = if names.is_empty() {
        default.into_iter().collect()
    } else {
        names
            .iter()
            .map(|n| Family::from_name(n).map_err(msg))
            .collect::<CliResult<_>>()?
    };
    match (states, list.len()) {
        (_, 0) => Err("either --seed-model or --family is required".into()),
        (Some(0), _) => Err("--states must be at least 1".into()),
        (Some(k), 1) => Ok(vec![list[0]; k]),
        (Some(k), n) if n != k => Err(format!("--states {k} but {n} families given")),
        _ => Ok(list),
    }
}

fn score_value(s: &ModelScore) -> Value {
    json!({
        "log_likelihood": s.log_likelihood,
        "num_params": s.num_params,
        "num_obs": s.num_obs,
        "aic": s.aic,
        "bic": s.bic,
        "aicc": s.aicc,
    })
}

fn score_text(s: &ModelScore) -> String {
    let aicc = s
        .aicc
        .map_or("undefined (n <= p + 1)".to_string(), |v| format!("{v:.6}"));
    format!(
        "log-likelihood  {:.6}\nparameters      {}\nobservations    {}\nAIC             {:.6}\nBIC             {:.6}\nAICc            {aicc}\n",
        s.log_likelihood, s.num_params, s.num_obs, s.aic, s.bic
    )
}

fn states_text(model: &HmmModel) -> String {
    let mut out = String::new();
    for (j, e) in model.emissions().iter().enumerate() {
        let params: Vec<String> = e.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "state {j}: {} {}", e.family(), params.join(" "));
    }
    let _ = writeln!(out, "initial: {:?}", model.initial());
    for (i, row) in model.transitions().iter_rows().enumerate() {
        let _ = writeln!(out, "transitions[{i}]: {row:?}");
    }
    out
}

/// Returns whether training converged.
pub fn fit(args: &FitArgs) -> CliResult<bool> {
    // the earthquake benchmark defaults to the two-state Poisson model
    let (data, default_family, states) = match args.benchmark {
        Some(Dataset::Earthquake) => (
            vec![datasets::earthquakes()],
            Some(Family::Poisson),
            args.states.or(Some(2)),
        ),
        None => (read_data(&args.data)?, None, args.states),
    };
    let config = TrainingConfig {
        max_iterations: args.max_iter,
        rel_tol: args.tol,
        ..TrainingConfig::default()
    };
    config.validate().map_err(msg)?;
    let start_model = match &args.seed_model {
        Some(path) => load(path)?,
        None => initial_model(&data, &families(&args.family, default_family, states)?).map_err(msg)?,
    };

    let clock = Instant::now();
    let (model, report) = baum_welch(&start_model, &data, &config).map_err(msg)?;
    let elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
    let score = score_model(&model, &data).map_err(msg)?;

    if let Some(out) = &args.out {
        save_model(&model, out).map_err(msg)?;
    }
    print!("{}", fit_report(args.format, &model, &report, &score, elapsed_ms));
    if !report.converged {
        eprintln!("warning: not converged after {} iterations", report.iterations);
    }
    Ok(report.converged)
}

fn fit_report(format: Format, model: &HmmModel, report: &TrainingReport, score: &ModelScore, ms: f64) -> String {
    match format {
        Format::Text => {
            let mut out = format!(
                "converged       {}\niterations      {}\nwall time       {ms:.3} ms\n",
                report.converged, report.iterations
            );
            out += &score_text(score);
            for (iteration, state) in &report.collapsed_states {
                let _ = writeln!(out, "note: state {state} collapsed at iteration {iteration}");
            }
            for (iteration, state, note) in &report.fit_notes {
                let _ = writeln!(out, "note: state {state} fit at iteration {iteration}: {note:?}");
            }
            out + &states_text(model)
        }
        Format::Json => {
            let notes: Vec<Value> = report
                .fit_notes
                .iter()
                .map(|(i, s, n)| json!({"iteration": i, "state": s, "note": format!("{n:?}")}))
                .collect();
            let mut v = score_value(score);
            let obj = v.as_object_mut().expect("object");
            obj.insert("converged".into(), json!(report.converged));
            obj.insert("iterations".into(), json!(report.iterations));
            obj.insert("wall_time_ms".into(), json!(ms));
            obj.insert("log_likelihood_trace".into(), json!(report.log_likelihood_trace));
            obj.insert("collapsed_states".into(), json!(report.collapsed_states));
            obj.insert("fit_notes".into(), Value::Array(notes));
            obj.insert("model".into(), loghmm::io::model_to_value(model));
            serde_json::to_string_pretty(&v).expect("finite values") + "\n"
        }
        Format::Csv => {
            let mut out = String::from("iteration,log_likelihood\n");
            for (i, ll) in report.log_likelihood_trace.iter().enumerate() {
                let _ = writeln!(out, "{i},{ll}");
            }
            out
        }
    }
}

pub fn decode(args: &DecodeArgs) -> CliResult<()> {
    let model = load(&args.model)?;
    let data = read_data(&args.data)?;
    let mut paths = Vec::with_capacity(data.len());
    let mut gammas = Vec::with_capacity(data.len());
    for (s, seq) in data.iter().enumerate() {
        let fail = |e: Error| format!("sequence {s}: {e}");
        let fb = posteriors(&model, seq, false).map_err(fail)?;
        let path = match args.method {
            Method::Viterbi => viterbi(&model, seq).map_err(fail)?.path,
            Method::Posterior => posterior_decode(&fb),
        };
        paths.push(path);
        gammas.push(fb.gamma);
    }
    let k = model.num_states();
    let text = match args.format {
        Format::Text => {
            let blocks: Vec<String> = paths
                .iter()
                .map(|p| p.iter().map(|s| format!("{s}\n")).collect())
                .collect();
            blocks.join("\n")
        }
        Format::Csv => {
            let mut out = String::from("sequence,t,state");
            for j in 0..k {
                let _ = write!(out, ",gamma_{j}");
            }
            out.push('\n');
            for (s, (path, gamma)) in paths.iter().zip(&gammas).enumerate() {
                for (t, state) in path.iter().enumerate() {
                    let _ = write!(out, "{s},{t},{state}");
                    for g in gamma.row(t) {
                        let _ = write!(out, ",{g}");
                    }
                    out.push('\n');
                }
            }
            out
        }
        Format::Json => {
            let v = json!({
                "method": match args.method { Method::Viterbi => "viterbi", Method::Posterior => "posterior" },
                "paths": paths,
            });
            serde_json::to_string_pretty(&v).expect("plain values") + "\n"
        }
    };
    emit(args.out.as_deref(), &text)
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let model = load(&args.model)?;
    let data = read_data(&args.data)?;
    let score = score_model(&model, &data).map_err(msg)?;
    let text = match args.format {
        Format::Text => score_text(&score),
        Format::Json => serde_json::to_string_pretty(&score_value(&score)).expect("finite values") + "\n",
        Format::Csv => {
            let aicc = score.aicc.map_or(String::new(), |v| v.to_string());
            format!(
                "log_likelihood,num_params,num_obs,aic,bic,aicc\n{},{},{},{},{},{aicc}\n",
                score.log_likelihood, score.num_params, score.num_obs, score.aic, score.bic
            )
        }
    };
    print!("{text}");
    Ok(())
}

pub fn benchmark(args: &BenchmarkArgs) -> CliResult<()> {
    if args.lengths.is_empty() || args.lengths.contains(&0) {
        return Err("--lengths must list positive sequence lengths".into());
    }
    if args.repeats == 0 {
        return Err("--repeats must be at least 1".into());
    }
    let model = datasets::dishonest_casino();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = String::from("T,seconds,obs_per_ms\n");
    for &t in &args.lengths {
        let seq = simulate_casino(&model, t, &mut rng);
        let mut best = f64::INFINITY;
        for _ in 0..args.repeats {
            let clock = Instant::now();
            let fb = posteriors(&model, &seq, false).map_err(msg)?;
            let secs = clock.elapsed().as_secs_f64();
            std::hint::black_box(fb);
            best = best.min(secs);
        }
        // guard against a zero reading from a coarse clock
        let secs = best.max(1e-9);
        let _ = writeln!(out, "{t},{secs:.9},{:.3}", t as f64 / (secs * 1e3));
    }
    emit(args.out.as_deref(), &out)
}

fn simulate_casino(model: &HmmModel, t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let emit: Vec<WeightedIndex<f64>> = model
        .emissions()
        .iter()
        .map(|e| match e {
            loghmm::Emission::Categorical { probs } => WeightedIndex::new(probs).expect("valid probabilities"),
            _ => unreachable!("casino model is categorical"),
        })
        .collect();
    let rows: Vec<WeightedIndex<f64>> = model
        .transitions()
        .iter_rows()
        .map(|r| WeightedIndex::new(r).expect("valid row"))
        .collect();
    let mut state = WeightedIndex::new(model.initial()).expect("valid initial").sample(rng);
    let mut seq = Vec::with_capacity(t);
    for step in 0..t {
        if step > 0 {
            state = rows[state].sample(rng);
        }
        seq.push(emit[state].sample(rng) as f64);
    }
    seq
}
