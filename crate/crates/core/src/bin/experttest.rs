use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use experttest::synthgen::{
    mse_comparison, run_power_vs_pairs, run_toy_study, run_type1_curve, PowerRow, ToyStudyConfig, Type1CurveConfig,
};
use experttest::{
    expert_test_with_matching, format_tau, greedy_match, load_csv, normalize_features, pair_distance_summary,
    run_report, validity_bound, write_rows_csv, ColumnSpec, Dataset, DistanceMetric, Error, LossSpec, Result,
    TestConfig,
};

/// Tests whether expert predictions carry information about outcomes beyond the recorded features.
#[derive(Parser)]
#[command(name = "experttest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test on a CSV file at one pair count.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        pairs: usize,
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the test at several pair counts and print an audit table.
    Report {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        pairs: Vec<usize>,
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Summarize the distances of greedily matched pairs.
    MatchStats {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        pairs: Vec<usize>,
        #[arg(long, default_value = "l2")]
        metric: DistanceMetric,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Repeated tests on the synthetic toy world.
    Toy {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 100)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record the expert's private signal as a second feature.
        #[arg(long)]
        observe_u: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Rejection rate of the δ-expertise world over a grid of n, δ and L.
    Power {
        #[arg(long, value_delimiter = ',', default_value = "200,600,1200")]
        n: Vec<usize>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"
        )]
        delta: Vec<f64>,
        /// Explicit pair counts; otherwise L = n / pair-divisor.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        pair_divisor: usize,
        #[arg(long, default_value_t = 100)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// False-rejection rate on the null cube world across pair counts.
    Validity {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "25,50,75,100,125,150,175,200,225,250")]
        pairs: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Squared error of feature-only, raw expert and rescaled expert predictions in the toy world.
    Mse {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    prediction: String,
    /// Min-max scale each feature to [0, 1] before matching.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// zero-one, squared, or weighted:fp=<r>,fn=<r>
    #[arg(long, default_value = "squared")]
    loss: LossSpec,
    /// l2 or weighted:<w1,...,wd>
    #[arg(long, default_value = "l2")]
    metric: DistanceMetric,
    /// Lipschitz constant of the log-odds, enables the validity bounds.
    #[arg(long = "smoothness-C")]
    smoothness_c: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the machine-readable result here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write plot data as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
        let d = load_csv(&self.input, &ColumnSpec::new(&names, &self.outcome, &self.prediction))?;
        Ok(if self.normalize { normalize_features(&d) } else { d })
    }
}

impl TestArgs {
    fn config(&self, pairs: usize) -> TestConfig {
        TestConfig::new(pairs, self.resamples, self.alpha, self.loss)
            .with_metric(self.metric.clone())
            .with_seed(self.seed)
    }
}

impl OutputArgs {
    fn emit(&self, document: &impl Serialize) -> Result<()> {
        if let Some(path) = &self.json {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, document)?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn emit_rows<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        if let Some(path) = &self.csv {
            write_rows_csv(rows, File::create(path)?)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct DistanceRow {
    rank: usize,
    i: usize,
    j: usize,
    distance: f64,
}

#[derive(Serialize)]
struct ReportPlotRow {
    pairs: usize,
    mismatched_pairs: usize,
    tau: f64,
    effective_p: f64,
    rejected: bool,
}

#[derive(Serialize)]
struct TauRow {
    trial: usize,
    tau: f64,
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Test { data, pairs, test, out } => {
            let d = data.load()?;
            let cfg = test.config(pairs);
            cfg.validate()?;
            if cfg.loss.is_binary() {
                cfg.loss.check_domain(&d.outcomes(), &d.predictions())?;
            }
            let m = greedy_match(&d, pairs, &cfg.metric)?;
            let result = expert_test_with_matching(&d, &m, &cfg)?;
            let validity = test
                .smoothness_c
                .map(|c| validity_bound(&d, &m, c, cfg.alpha, cfg.resamples))
                .transpose()?;
            println!(
                "n={} L={} K={} loss={} mismatched={}",
                d.len(),
                pairs,
                cfg.resamples,
                cfg.loss,
                result.mismatch_count
            );
            if let Some(s) = result.binary_swap_counts {
                println!(
                    "swaps: increase={} decrease={} neutral={}",
                    s.increase, s.decrease, s.neutral
                );
            }
            println!(
                "tau={} effective_p={:.4} rejected at alpha={}: {}",
                format_tau(result.tau, cfg.resamples),
                result.effective_p,
                cfg.alpha,
                if result.rejected { "yes" } else { "no" }
            );
            if let Some(v) = &validity {
                println!(
                    "epsilon*={:.4} type-I bound={:.4} (union {:.4}) adjusted alpha={:.4}",
                    v.epsilon_star, v.tight_bound, v.union_bound, v.adjusted_threshold
                );
            }
            out.emit(&json!({ "config": cfg, "n": d.len(), "result": result, "validity": validity }))
        }
        Command::Report { data, pairs, test, out } => {
            let d = data.load()?;
            let report = run_report(&d, &pairs, &test.config(1), test.smoothness_c)?;
            print!("{}", report.render_table());
            out.emit(&report)?;
            let rows: Vec<ReportPlotRow> = report
                .rows
                .iter()
                .map(|r| ReportPlotRow {
                    pairs: r.pairs,
                    mismatched_pairs: r.mismatched_pairs,
                    tau: r.tau,
                    effective_p: r.effective_p,
                    rejected: r.rejected,
                })
                .collect();
            out.emit_rows(&rows)
        }
        Command::MatchStats {
            data,
            pairs,
            metric,
            out,
        } => {
            let d = data.load()?;
            let max_pairs = pairs.iter().copied().max().unwrap_or(0);
            let m = greedy_match(&d, max_pairs, &metric)?;
            println!(
                "{:>7} {:>7} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "L", "zero", "min", "q1", "median", "q3", "max"
            );
            let mut summaries = Vec::new();
            for &l in &pairs {
                let prefix = m.prefix(l);
                if let Some(s) = pair_distance_summary(&prefix) {
                    println!(
                        "{:>7} {:>7} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                        l, s.zero_count, s.min, s.q1, s.median, s.q3, s.max
                    );
                    summaries.push(json!({ "pairs": l, "summary": s }));
                }
            }
            out.emit(&json!({ "n": d.len(), "metric": metric, "summaries": summaries }))?;
            let rows: Vec<DistanceRow> = m
                .pairs()
                .iter()
                .zip(m.distances())
                .enumerate()
                .map(|(rank, (&(i, j), &distance))| DistanceRow {
                    rank: rank + 1,
                    i,
                    j,
                    distance,
                })
                .collect();
            out.emit_rows(&rows)
        }
        Command::Toy {
            n,
            pairs,
            resamples,
            alpha,
            trials,
            seed,
            observe_u,
            out,
        } => {
            let cfg = ToyStudyConfig {
                n,
                pairs,
                resamples,
                alpha,
                include_u_in_features: observe_u,
                trials,
                master_seed: seed,
            };
            let outcome = run_toy_study(&cfg)?;
            println!(
                "rejection rate {:.3} ± {:.3} ({} of {} trials)",
                outcome.rate, outcome.mc_sd, outcome.rejections, outcome.trials
            );
            out.emit(&json!({ "config": cfg, "outcome": outcome }))?;
            let rows: Vec<TauRow> = outcome
                .taus
                .iter()
                .enumerate()
                .map(|(trial, &tau)| TauRow { trial, tau })
                .collect();
            out.emit_rows(&rows)
        }
        Command::Power {
            n,
            delta,
            pairs,
            pair_divisor,
            resamples,
            alpha,
            trials,
            seed,
            out,
        } => {
            if pairs.is_empty() && pair_divisor == 0 {
                return Err(Error::InvalidConfig("pair-divisor must be at least 1".into()));
            }
            let mut rows: Vec<PowerRow> = Vec::new();
            for &size in &n {
                let counts = if pairs.is_empty() {
                    vec![size / pair_divisor]
                } else {
                    pairs.clone()
                };
                for &dl in &delta {
                    rows.extend(run_power_vs_pairs(size, dl, &counts, resamples, alpha, trials, seed)?);
                }
            }
            println!("{:>7} {:>6} {:>7} {:>7} {:>7}", "n", "delta", "L", "rate", "mc_sd");
            for r in &rows {
                println!(
                    "{:>7} {:>6} {:>7} {:>7.3} {:>7.3}",
                    r.n, r.delta, r.pairs, r.rate, r.mc_sd
                );
            }
            out.emit(&json!({
                "config": { "resamples": resamples, "alpha": alpha, "trials": trials, "seed": seed },
                "rows": rows,
            }))?;
            out.emit_rows(&rows)
        }
        Command::Validity {
            n,
            pairs,
            resamples,
            alpha,
            trials,
            seed,
            out,
        } => {
            let cfg = Type1CurveConfig::new(n, pairs, resamples, alpha, trials, seed);
            let rows = run_type1_curve(&cfg)?;
            println!("{:>7} {:>7} {:>7} {:>7}", "n", "L", "rate", "mc_sd");
            for r in &rows {
                println!("{:>7} {:>7} {:>7.3} {:>7.3}", r.n, r.pairs, r.rate, r.mc_sd);
            }
            out.emit(&json!({ "config": cfg, "rows": rows }))?;
            out.emit_rows(&rows)
        }
        Command::Mse { n, trials, seed, out } => {
            let cmp = mse_comparison(n, trials, seed)?;
            println!("algorithm (E[Y|X]): {}", cmp.algorithm);
            println!("human:              {}", cmp.human);
            println!("human, rescaled:    {}", cmp.rescaled);
            out.emit(&json!({ "n": n, "seed": seed, "comparison": cmp }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.class(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
