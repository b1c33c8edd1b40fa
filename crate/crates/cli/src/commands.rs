//! Subcommand implementations.

use std::path::Path;

use anyhow::{bail, Context, Result};

use privcube_core::{
    evaluate, ingest, pipeline, workload, AttributeSchema, BudgetMode, ContingencyVector,
    PipelineConfig, PrivacySpec, RecoveryMode, StrategyKind, Workload, WorkloadKind,
};

use crate::output::{csv_table, write_file, RunInfo};
use crate::{
    BudgetArgs, BudgetName, EvaluateArgs, IngestArgs, PrivacyArgs, RecoveryName, ReleaseArgs,
    StrategyArgs, StrategyName,
};

fn load_schema(path: &Path) -> Result<AttributeSchema> {
    ingest::load_schema(path).with_context(|| format!("loading schema {}", path.display()))
}

fn load_workload(path: &Path, schema: &AttributeSchema) -> Result<Workload> {
    workload::load_workload(path, schema)
        .with_context(|| format!("loading workload {}", path.display()))
}

fn privacy_spec(args: &PrivacyArgs) -> Result<PrivacySpec> {
    Ok(match args.delta {
        None => PrivacySpec::pure(args.epsilon)?,
        Some(delta) => PrivacySpec::approx(args.epsilon, delta)?,
    })
}

fn strategy_kind(args: &StrategyArgs, schema: &AttributeSchema) -> Result<StrategyKind> {
    Ok(match args.strategy {
        StrategyName::Identity => StrategyKind::Identity,
        StrategyName::Marginals => StrategyKind::WorkloadMarginals,
        StrategyName::Fourier => StrategyKind::Fourier,
        StrategyName::Hierarchical => StrategyKind::Hierarchical,
        StrategyName::User => {
            let path = args
                .user_marginals
                .as_ref()
                .context("--strategy user requires --user-marginals")?;
            let w = load_workload(path, schema)?;
            let specs = w
                .marginal_specs()
                .context("user-marginals file must list marginals")?;
            StrategyKind::UserMarginals(specs.to_vec())
        }
    })
}

fn load_data(path: &Path, schema: &AttributeSchema) -> Result<ContingencyVector> {
    let records = ingest::load_records(path, schema)
        .with_context(|| format!("loading data {}", path.display()))?;
    let (x, _) = ingest::build_contingency(schema, &records)?;
    Ok(x)
}

/// (marginal, cell) label per workload row.
fn query_labels(w: &Workload) -> Vec<(String, String)> {
    match w.kind() {
        WorkloadKind::MarginalSet(specs) => {
            let mut out = Vec::with_capacity(w.query_count());
            for s in specs {
                for gamma in s.alpha.dominated() {
                    out.push((s.alpha.to_string(), gamma.to_string()));
                }
            }
            out
        }
        WorkloadKind::DenseLinear(m) => (0..m.rows())
            .map(|i| (format!("q{i}"), String::new()))
            .collect(),
    }
}

fn float(v: f64) -> String {
    // shortest round-trip form; deterministic for identical bits
    format!("{v}")
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let records = ingest::load_records(&args.data, &schema)?;
    let (x, dict) = ingest::build_contingency(&schema, &records)?;

    let mut info = RunInfo::new("ingest");
    info.push("schema", args.schema.display());
    info.push("data", args.data.display());
    info.push("dimension", schema.dimension());
    info.push("cells", x.len());
    info.push("records", x.total());

    let d = schema.dimension() as usize;
    let rows: Vec<String> = x
        .cells()
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i},{:0width$b},{}", i, float(*v), width = d))
        .collect();
    write_file(
        &args.out,
        "cells.csv",
        &csv_table(&info, "cell,mask,count", &rows),
    )?;

    let mut dict_rows = Vec::new();
    for (attr, values) in schema.attributes().iter().zip(&dict.values) {
        for (code, value) in values.iter().enumerate() {
            dict_rows.push(format!("{},{},{}", attr.name, code, value));
        }
    }
    write_file(
        &args.out,
        "dictionary.csv",
        &csv_table(&info, "attribute,code,value", &dict_rows),
    )?;
    write_file(&args.out, "metadata.txt", &info.as_block())?;
    println!(
        "ingested {} records into {} cells (d = {})",
        x.total(),
        x.len(),
        schema.dimension()
    );
    Ok(())
}

fn pipeline_config(
    strategy: StrategyKind,
    budget: BudgetName,
    recovery: RecoveryName,
    consistency: bool,
    noiseless: bool,
) -> PipelineConfig {
    PipelineConfig {
        strategy,
        budget: match budget {
            BudgetName::Uniform => BudgetMode::Uniform,
            BudgetName::Optimal => BudgetMode::Optimal,
        },
        recovery: match recovery {
            RecoveryName::Natural => RecoveryMode::Natural,
            RecoveryName::Gls => RecoveryMode::Gls,
        },
        consistency,
        noiseless,
    }
}

fn budget_tables(prepared: &pipeline::PreparedPipeline, info: &RunInfo) -> (String, String) {
    let grouping = prepared.grouping();
    let budget = prepared.budget();
    let group_rows: Vec<String> = (0..grouping.group_count())
        .map(|r| {
            format!(
                "{r},{},{}",
                float(grouping.constants()[r]),
                float(budget.eta[r])
            )
        })
        .collect();
    let groups = csv_table(info, "group,constant,eta", &group_rows);
    let labels = prepared.strategy().row_labels();
    let row_rows: Vec<String> = (0..grouping.row_count())
        .map(|i| {
            let sigma = match budget.sigma_diag[i] {
                Some(v) => float(v),
                None => "suppressed".to_string(),
            };
            format!(
                "{i},{},{},{},{}",
                labels[i],
                grouping.group_of()[i],
                float(budget.eps[i]),
                sigma
            )
        })
        .collect();
    let rows = csv_table(info, "row,label,group,epsilon,noise_variance", &row_rows);
    (groups, rows)
}

pub fn budget(args: BudgetArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let w = load_workload(&args.workload, &schema)?;
    let spec = privacy_spec(&args.privacy)?;
    let kind = strategy_kind(&args.strategy, &schema)?;
    let config = pipeline_config(kind, args.budget, RecoveryName::Natural, false, false);
    let prepared = pipeline::prepare(config, &w, schema.dimension(), spec)?;

    let mut info = RunInfo::new("budget");
    info.push("schema", args.schema.display());
    info.push("workload", args.workload.display());
    info.push("strategy", prepared.strategy().kind_name());
    info.push("budget", args.budget_name());
    info.push("epsilon", args.privacy.epsilon);
    if let Some(delta) = args.privacy.delta {
        info.push("delta", delta);
    }
    info.push("groups", prepared.grouping().group_count());
    info.push("rows", prepared.strategy().row_count());
    info.push("objective", float(prepared.budget().objective));
    info.push(
        "optimality",
        match prepared.budget().optimality {
            privcube_core::OptimalityStatus::Optimal => "optimal",
            privcube_core::OptimalityStatus::FeasibleOnly => "feasible, optimality not guaranteed",
        },
    );

    let (groups, rows) = budget_tables(&prepared, &info);
    match &args.out {
        Some(dir) => {
            write_file(dir, "groups.csv", &groups)?;
            write_file(dir, "budgets.csv", &rows)?;
            write_file(dir, "metadata.txt", &info.as_block())?;
        }
        None => {
            print!("{groups}");
            print!("{rows}");
        }
    }
    println!("objective={}", float(prepared.budget().objective));
    Ok(())
}

impl BudgetArgs {
    fn budget_name(&self) -> &'static str {
        match self.budget {
            BudgetName::Uniform => "uniform",
            BudgetName::Optimal => "optimal",
        }
    }
}

pub fn release(args: ReleaseArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let w = load_workload(&args.workload, &schema)?;
    let spec = privacy_spec(&args.privacy)?;
    let kind = strategy_kind(&args.strategy, &schema)?;
    let x = load_data(&args.data, &schema)?;
    let config = pipeline_config(
        kind,
        args.budget,
        args.recovery,
        args.consistency,
        args.noiseless,
    );
    let prepared = pipeline::prepare(config, &w, schema.dimension(), spec)?;
    let bundle = prepared.run(&x, args.seed)?;

    let mut info = RunInfo::new("release");
    info.push("schema", args.schema.display());
    info.push("data", args.data.display());
    info.push("workload", args.workload.display());
    info.push("strategy", bundle.metadata.strategy.as_str());
    info.push("budget", bundle.metadata.budget_mode.as_str());
    info.push("recovery", bundle.metadata.recovery_source.as_str());
    info.push("consistency", args.consistency);
    info.push("noiseless", args.noiseless);
    info.push("epsilon", args.privacy.epsilon);
    if let Some(delta) = args.privacy.delta {
        info.push("delta", delta);
    }
    info.push("seed", args.seed);
    info.push("dimension", schema.dimension());
    info.push("strategy_rows", prepared.strategy().row_count());
    info.push("queries", w.query_count());
    info.push(
        "budget_epsilons",
        prepared
            .budget()
            .eps
            .iter()
            .map(|e| float(*e))
            .collect::<Vec<_>>()
            .join(";"),
    );
    info.push(
        "predicted_total_variance",
        float(bundle.predicted_total_variance),
    );
    info.push("privacy_check", "passed");

    // noisy strategy answers
    let labels = prepared.strategy().row_labels();
    let z_rows: Vec<String> = (0..bundle.z.len())
        .map(|i| match bundle.z.per_row_scale[i] {
            Some(scale) => format!(
                "{i},{},released,{},{}",
                labels[i],
                float(bundle.z.z[i]),
                float(scale)
            ),
            None => format!("{i},{},suppressed,,", labels[i]),
        })
        .collect();
    write_file(
        &args.out,
        "strategy_answers.csv",
        &csv_table(&info, "row,label,status,value,noise_sd", &z_rows),
    )?;

    // recovered workload answers
    let qlabels = query_labels(&w);
    let y_rows: Vec<String> = bundle
        .y
        .iter()
        .enumerate()
        .map(|(i, v)| {
            format!(
                "{i},{},{},{},{}",
                qlabels[i].0,
                qlabels[i].1,
                float(*v),
                float(bundle.predicted_entry_variance[i])
            )
        })
        .collect();
    write_file(
        &args.out,
        "answers.csv",
        &csv_table(
            &info,
            "query,marginal,cell,value,predicted_variance",
            &y_rows,
        ),
    )?;

    if let Some(consistent) = &bundle.consistent {
        let rows: Vec<String> = consistent
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{i},{},{},{}", qlabels[i].0, qlabels[i].1, float(*v)))
            .collect();
        write_file(
            &args.out,
            "consistent.csv",
            &csv_table(&info, "query,marginal,cell,value", &rows),
        )?;
    }

    let (groups, rows) = budget_tables(&prepared, &info);
    write_file(&args.out, "groups.csv", &groups)?;
    write_file(&args.out, "budgets.csv", &rows)?;
    write_file(&args.out, "metadata.txt", &info.as_block())?;
    println!(
        "released {} queries, predicted total variance {}",
        bundle.y.len(),
        float(bundle.predicted_total_variance)
    );
    Ok(())
}

fn parse_config_token(
    token: &str,
    schema: &AttributeSchema,
    user_marginals: &Option<std::path::PathBuf>,
    consistency: bool,
) -> Result<(String, PipelineConfig)> {
    let trimmed = token.trim();
    let (base, optimal) = match trimmed.strip_suffix('+') {
        Some(b) => (b, true),
        None => (trimmed, false),
    };
    let strategy = match base {
        "I" | "i" => StrategyKind::Identity,
        "Q" | "q" => StrategyKind::WorkloadMarginals,
        "F" | "f" => StrategyKind::Fourier,
        "H" | "h" => StrategyKind::Hierarchical,
        "C" | "c" => {
            let path = user_marginals
                .as_ref()
                .context("configs with C require --user-marginals")?;
            let w = workload::load_workload(path, schema)?;
            let specs = w
                .marginal_specs()
                .context("user-marginals file must list marginals")?;
            StrategyKind::UserMarginals(specs.to_vec())
        }
        other => bail!("unknown config token '{other}' (expected I, Q, F, H or C)"),
    };
    // identity's optimal budgeting is uniform; keep the requested mode anyway
    let budget = if optimal {
        BudgetMode::Optimal
    } else {
        BudgetMode::Uniform
    };
    let recovery = match strategy {
        StrategyKind::Hierarchical | StrategyKind::DenseCustom(_) => RecoveryMode::Gls,
        _ => RecoveryMode::Natural,
    };
    Ok((
        trimmed.to_string(),
        PipelineConfig {
            strategy,
            budget,
            recovery,
            consistency,
            noiseless: false,
        },
    ))
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let schema = load_schema(&args.schema)?;
    let w = load_workload(&args.workload, &schema)?;
    let spec = privacy_spec(&args.privacy)?;
    let x = load_data(&args.data, &schema)?;
    let configs: Vec<(String, PipelineConfig)> = args
        .configs
        .split(',')
        .map(|t| parse_config_token(t, &schema, &args.user_marginals, args.consistency))
        .collect::<Result<_>>()?;
    let table = evaluate::compare(&configs, &x, &w, spec, args.trials, args.seed)?;

    let mut info = RunInfo::new("evaluate");
    info.push("schema", args.schema.display());
    info.push("data", args.data.display());
    info.push("workload", args.workload.display());
    info.push("configs", args.configs.as_str());
    info.push("epsilon", args.privacy.epsilon);
    if let Some(delta) = args.privacy.delta {
        info.push("delta", delta);
    }
    info.push("trials", args.trials);
    info.push("seed", args.seed);

    print!("{table}");
    if let Some(dir) = &args.out {
        let mut csv = info.as_comment();
        csv.push_str(&table.to_csv());
        write_file(dir, "comparison.csv", &csv)?;
        write_file(dir, "metadata.txt", &info.as_block())?;
    }
    Ok(())
}
