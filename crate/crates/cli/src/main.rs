//! `qce` — command line for the quantized certainty-equivalent LQR toolkit.
//!
//! Subcommands: `simulate` (single trials or trial batches), `bench` (the
//! benchmark tables and curves), `converse` (lower-bound calculators and
//! hard-instance verification), `codec` (bit-exact encode/decode round
//! trips), and `verify` (the runtime property suites).

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use qce_core::codec::{
    self, absolute_init, adaptive_multiplier, build_codebook, quantize_innovation, BitStream,
};
use qce_core::control_math::{
    dare_residual, solve_dare_default, solve_dlyap, spectral_radius, CostPair, SystemPair,
};
use qce_core::converse::{
    bits_lower_bound, build_hard_instance, comm_budget_bound, default_c, inflation_factors,
    instance_identity_residual, sample_gain_cube, verify_fixed_point,
};
use qce_core::error::Error;
use qce_core::experiments::{
    benchmark_system, curve_rows, median, run_experiment, summarize, trigger_gap_table,
    variant_config, write_curves_csv, write_json, SystemName, Variant,
};
use qce_core::plant_sim::SimConfig;
use qce_core::protocol::{run_trial, SafeSet, TrialConfig, TrialResult, TriggerVariant};

#[derive(Parser)]
#[command(name = "qce", version, about = "Rate-limited adaptive LQR toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run closed-loop trials of one controller variant on one system.
    Simulate(SimulateArgs),
    /// Reproduce the benchmark tables and regret/bit curves.
    Bench(BenchArgs),
    /// Evaluate the communication lower bound and verify hard instances.
    Converse(ConverseArgs),
    /// Encode or decode uplink integer codes.
    Codec(CodecArgs),
    /// Run the property suites; nonzero exit if any fails.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark system name.
    #[arg(long)]
    system: Option<String>,
    /// Controller variant: practical | theoretical | unquantized.
    #[arg(long)]
    variant: Option<String>,
    /// Horizon T.
    #[arg(long, visible_alias = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Codebook resolution.
    #[arg(long)]
    rho: Option<f64>,
    /// Confidence parameter.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    /// Trigger variant: bootstrap | theoretical.
    #[arg(long)]
    trigger: Option<String>,
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long)]
    rho_threshold: Option<f64>,
    #[arg(long)]
    fallback_multiplier: Option<f64>,
    /// Exploration-variance override (the practical variant defaults to 1).
    #[arg(long)]
    sigma_in_sq: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

/// File form of the simulate configuration; all fields optional.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    system: Option<String>,
    variant: Option<String>,
    horizon: Option<usize>,
    trials: Option<usize>,
    rho: Option<f64>,
    delta: Option<f64>,
    seed: Option<u64>,
    sigma_w: Option<f64>,
    trigger: Option<String>,
    n_mc: Option<usize>,
    rho_threshold: Option<f64>,
    fallback_multiplier: Option<f64>,
    sigma_in_sq: Option<f64>,
    c0: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated system names; defaults to every validating system.
    #[arg(long, value_delimiter = ',')]
    systems: Vec<String>,
    #[arg(long, visible_alias = "T", default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trigger_seeds: usize,
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ConverseArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, visible_alias = "T", default_value_t = 1_048_576)]
    horizon: u64,
    #[arg(long, default_value_t = 1)]
    dx: usize,
    #[arg(long, default_value_t = 1)]
    du: usize,
    /// Gain-ball radius of the instance class.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_w: f64,
    /// Instance constant; defaults to just above its feasibility bound.
    #[arg(long)]
    c: Option<f64>,
    /// Codebook resolution for the inflation factors.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    /// Random instances verified against the Riccati solver.
    #[arg(long, default_value_t = 25)]
    verify_instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CodecArgs {
    #[command(subcommand)]
    direction: CodecDirection,
}

#[derive(Subcommand)]
enum CodecDirection {
    /// Encode integers; prints the concatenated bit string and `len:hex`.
    Encode(CodecEncodeArgs),
    /// Decode a bit string or `len:hex` stream back to integers.
    Decode(CodecDecodeArgs),
}

#[derive(Args)]
struct CodecEncodeArgs {
    /// Elias Gamma encode these positive integers.
    #[arg(long, num_args = 1.., conflicts_with = "signed_eg")]
    eg: Vec<u64>,
    /// Signed Elias Gamma encode these integers.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    signed_eg: Vec<i64>,
}

#[derive(Args)]
struct CodecDecodeArgs {
    /// Decode as a sequence of Elias Gamma codewords.
    #[arg(long, conflicts_with = "signed_eg")]
    eg: bool,
    /// Decode as a sequence of signed Elias Gamma codewords.
    #[arg(long)]
    signed_eg: bool,
    /// Raw bit string, e.g. 00101.
    #[arg(long, conflicts_with = "hex")]
    bits: Option<String>,
    /// Hex stream with explicit bit length, e.g. 5:28.
    #[arg(long)]
    hex: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Converse(args) => cmd_converse(args),
        Command::Codec(args) => cmd_codec(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_trigger(s: &str) -> Result<TriggerVariant, Error> {
    match s {
        "bootstrap" => Ok(TriggerVariant::Bootstrap),
        "theoretical" => Ok(TriggerVariant::Theoretical),
        other => Err(Error::Config(format!("unknown trigger `{other}`"))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let file: SimulateFile = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SimulateFile::default(),
    };
    // precedence: flags > config file > defaults
    let system: SystemName = args
        .system
        .or(file.system)
        .unwrap_or_else(|| "scalar".into())
        .parse()?;
    let variant: Variant = args
        .variant
        .or(file.variant)
        .unwrap_or_else(|| "practical".into())
        .parse()?;
    let horizon = args.horizon.or(file.horizon).unwrap_or(10_000);
    let trials = args.trials.or(file.trials).unwrap_or(1);
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let sigma_w = args.sigma_w.or(file.sigma_w).unwrap_or(1.0);

    let bench = benchmark_system(system)?;
    let mut cfg = variant_config(
        variant,
        SimConfig {
            horizon,
            seed,
            sigma_w,
        },
    );
    if let Some(rho) = args.rho.or(file.rho) {
        cfg.rho = rho;
    }
    if let Some(delta) = args.delta.or(file.delta) {
        cfg.delta = delta;
    }
    if let Some(t) = args.trigger.or(file.trigger) {
        cfg.trigger.variant = parse_trigger(&t)?;
    }
    if let Some(n) = args.n_mc.or(file.n_mc) {
        cfg.trigger.n_mc = n;
    }
    if let Some(r) = args.rho_threshold.or(file.rho_threshold) {
        cfg.trigger.rho_threshold = r;
    }
    if let Some(m) = args.fallback_multiplier.or(file.fallback_multiplier) {
        cfg.trigger.fallback_multiplier = m;
    }
    if let Some(s) = args.sigma_in_sq.or(file.sigma_in_sq) {
        cfg.sigma_in_sq_override = Some(s);
    }
    if let Some(c0) = args.c0.or(file.c0) {
        cfg.c0 = c0;
    }

    std::fs::create_dir_all(&args.out_dir)?;
    if trials == 1 {
        let res = run_trial(&bench.sys, &bench.cost, &bench.k0, &cfg)?;
        let path = args
            .out_dir
            .join(format!("trial_{system}_{variant}_seed{seed}.json"));
        write_json(&path, &res)?;
        println!(
            "{system}/{variant} seed {seed}: regret {:.1}, bits {}, k_safe {:?} -> {}",
            res.final_regret(),
            res.total_bits(),
            res.k_safe,
            path.display()
        );
    } else {
        let mut results: Vec<TrialResult> = Vec::with_capacity(trials);
        for i in 0..trials {
            let mut c = cfg;
            c.sim.seed = seed + i as u64;
            results.push(run_trial(&bench.sys, &bench.cost, &bench.k0, &c)?);
        }
        let rows = curve_rows(&results);
        let stem = format!("{system}_{variant}");
        match args.format {
            OutputFormat::Csv => {
                let path = args.out_dir.join(format!("{stem}.csv"));
                write_curves_csv(&path, &rows)?;
                println!("wrote {}", path.display());
            }
            OutputFormat::Json => {
                let path = args.out_dir.join(format!("{stem}.json"));
                write_json(&path, &rows)?;
                println!("wrote {}", path.display());
            }
        }
        let finals: Vec<f64> = results.iter().map(|r| r.final_regret()).collect();
        let bits: Vec<f64> = results.iter().map(|r| r.total_bits() as f64).collect();
        println!(
            "{system}/{variant} x{trials}: median regret {:.1}, median bits {:.0}",
            median(&finals),
            median(&bits)
        );
    }
    Ok(())
}

/// One row of the benchmark comparison table.
#[derive(Debug, Serialize)]
struct ResultsRow {
    system: String,
    dx: usize,
    du: usize,
    rho_a: f64,
    ce_median_regret: f64,
    qce_median_regret: f64,
    overhead_pct: f64,
    qce_median_bits: f64,
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let systems: Vec<SystemName> = if args.systems.is_empty() {
        SystemName::ALL
            .iter()
            .copied()
            .filter(|&n| benchmark_system(n).is_ok())
            .collect()
    } else {
        args.systems
            .iter()
            .map(|s| SystemName::from_str(s))
            .collect::<Result<_, _>>()?
    };
    std::fs::create_dir_all(&args.out_dir)?;

    let benches: Vec<_> = systems
        .iter()
        .map(|&n| benchmark_system(n))
        .collect::<Result<Vec<_>, _>>()?;

    let trigger_rows = trigger_gap_table(
        &benches,
        args.horizon,
        args.delta,
        args.trigger_seeds,
        args.seed,
    )?;
    write_json(&args.out_dir.join("trigger_table.json"), &trigger_rows)?;
    {
        let mut w = csv::Writer::from_path(args.out_dir.join("trigger_table.csv"))?;
        for row in &trigger_rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    println!("theoretical trigger gap at T = {}:", args.horizon);
    for r in &trigger_rows {
        println!(
            "  {:<18} ||P|| {:>8.2}  C_safe {:>10.3e}  2eps {:>10.3e}  sqrt(Conf) {:>10.3e}",
            r.system, r.p_norm, r.c_safe, r.two_eps_target, r.median_sqrt_conf
        );
    }

    let mut table = Vec::new();
    for bench in &benches {
        let exp = run_experiment(
            bench,
            &[Variant::UnquantizedCe, Variant::PracticalQce],
            args.horizon,
            args.trials,
            args.seed,
        )?;
        for (variant, trials) in &exp.sets {
            let rows = curve_rows(trials);
            let path = args.out_dir.join(format!("{}_{variant}.csv", bench.name));
            write_curves_csv(&path, &rows)?;
        }
        let summary = summarize(&exp);
        write_json(
            &args.out_dir.join(format!("{}_experiment.json", bench.name)),
            &summary,
        )?;
        table.push(ResultsRow {
            system: bench.name.to_string(),
            dx: bench.sys.dx(),
            du: bench.sys.du(),
            rho_a: spectral_radius(&bench.sys.a),
            ce_median_regret: summary.ce_median_regret.unwrap_or(f64::NAN),
            qce_median_regret: summary.qce_median_regret.unwrap_or(f64::NAN),
            overhead_pct: summary.overhead_pct.unwrap_or(f64::NAN),
            qce_median_bits: summary.median_bits.unwrap_or(f64::NAN),
        });
    }
    write_json(&args.out_dir.join("results_table.json"), &table)?;
    println!(
        "\nmedian regret over {} trials at T = {}:",
        args.trials, args.horizon
    );
    for r in &table {
        println!(
            "  {:<18} ({},{})  rho(A) {:.2}  CE {:>9.0}  QCE {:>9.0}  overhead {:>+7.1}%  bits {:>6.0}",
            r.system,
            r.dx,
            r.du,
            r.rho_a,
            r.ce_median_regret,
            r.qce_median_regret,
            r.overhead_pct,
            r.qce_median_bits
        );
    }
    println!("\nartifacts in {}", args.out_dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct InstanceVerification {
    instances: usize,
    max_identity_residual: f64,
    max_gain_gap: f64,
    max_cost_rel_gap: f64,
}

fn cmd_converse(args: ConverseArgs) -> Result<(), Error> {
    let cost = CostPair::identity(args.dx, args.du);
    let c = args.c.unwrap_or_else(|| default_c(args.r, &cost));
    let report = bits_lower_bound(
        args.alpha,
        args.horizon,
        args.dx,
        args.du,
        args.r,
        &cost,
        args.sigma_w,
        args.c1,
        c,
    )?;
    let inflation = inflation_factors(args.rho, args.c0)?;
    let ds = args.dx * args.dx + args.dx * args.du;
    let budget = comm_budget_bound(ds, args.rho, args.horizon)?;

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
    let mut verification = InstanceVerification {
        instances: args.verify_instances,
        max_identity_residual: 0.0,
        max_gain_gap: 0.0,
        max_cost_rel_gap: 0.0,
    };
    for _ in 0..args.verify_instances {
        let k = sample_gain_cube(&mut rng, args.dx, args.du, args.r);
        let inst = build_hard_instance(&k, &cost, args.sigma_w, c)?;
        let gap = verify_fixed_point(&inst, &cost)?;
        verification.max_identity_residual = verification
            .max_identity_residual
            .max(instance_identity_residual(&inst));
        verification.max_gain_gap = verification.max_gain_gap.max(gap.gain_gap);
        verification.max_cost_rel_gap = verification.max_cost_rel_gap.max(gap.cost_rel_gap);
    }

    let out = serde_json::json!({
        "bounds": report,
        "inflation": inflation,
        "communication_budget": budget,
        "instance_verification": verification,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_codec(args: CodecArgs) -> Result<(), Error> {
    match args.direction {
        CodecDirection::Encode(enc) => {
            let mut stream = BitStream::new();
            if !enc.eg.is_empty() {
                for &n in &enc.eg {
                    codec::eg_encode_into(&mut stream, n)?;
                }
            } else if !enc.signed_eg.is_empty() {
                for &z in &enc.signed_eg {
                    codec::signed_eg_encode_into(&mut stream, z)?;
                }
            } else {
                return Err(Error::Config(
                    "nothing to encode: pass --eg or --signed-eg".into(),
                ));
            }
            println!("{}", stream.to_bit_string());
            println!("{}:{}", stream.len(), stream.to_hex());
        }
        CodecDirection::Decode(dec) => {
            let stream = match (&dec.bits, &dec.hex) {
                (Some(bits), None) => BitStream::from_bit_string(bits)?,
                (None, Some(hex)) => {
                    let (len, hex) = hex
                        .split_once(':')
                        .ok_or_else(|| Error::Config("hex input must be `bitlen:hex`".into()))?;
                    let len: usize = len
                        .parse()
                        .map_err(|_| Error::Config("invalid bit length".into()))?;
                    BitStream::from_hex(hex, len)?
                }
                _ => return Err(Error::Config("pass exactly one of --bits or --hex".into())),
            };
            let mut reader = stream.reader();
            let mut values = Vec::new();
            while reader.remaining() > 0 {
                if dec.signed_eg {
                    values.push(codec::signed_eg_decode(&mut reader)?.to_string());
                } else if dec.eg {
                    values.push(codec::eg_decode(&mut reader)?.to_string());
                } else {
                    return Err(Error::Config("pass --eg or --signed-eg".into()));
                }
            }
            println!("{}", values.join(" "));
        }
    }
    Ok(())
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("PASS {name}");
        } else {
            self.failures += 1;
            println!("FAIL {name}: {detail}");
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Error> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
    let mut suite = Suite { failures: 0 };

    // Elias Gamma lengths and round trips
    let mut ok = true;
    for n in 1..=100_000u64 {
        if codec::eg_len(n) != 2 * (n as f64).log2().floor() as usize + 1 {
            ok = false;
            break;
        }
    }
    let mut stream = BitStream::new();
    let values: Vec<u64> = (0..1000).map(|_| rng.random_range(1..=1_000_000)).collect();
    for &v in &values {
        codec::eg_encode_into(&mut stream, v)?;
    }
    let mut reader = stream.reader();
    for &v in &values {
        ok &= codec::eg_decode(&mut reader)? == v;
    }
    ok &= reader.remaining() == 0;
    suite.check("elias-gamma-lengths-and-roundtrip", ok, String::new());

    // covering guarantee
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for ds in [1usize, 2, 6] {
        let cb = build_codebook(ds, 0.5)?;
        for _ in 0..2000 {
            let dir = DVector::from_fn(ds, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let norm = dir.norm().max(1e-12);
            let radius: f64 = rng.random::<f64>();
            let v = dir * (radius / norm);
            let s = 0.1 + rng.random::<f64>() * 5.0;
            let (_, rec) = quantize_innovation(&(&v * s), s, &cb)?;
            let err = (&v * s - rec).norm() / s;
            worst = worst.max(err);
            ok &= err <= 0.5 + 1e-9;
        }
    }
    suite.check("codebook-covering-radius", ok, format!("worst {worst:.4}"));

    // dyadic init precision
    let mut ok = true;
    for _ in 0..500 {
        let ds = rng.random_range(1..=8);
        let theta =
            DVector::from_fn(ds, |_, _| 10.0 * rng.sample::<f64, _>(rand_distr::StandardNormal));
        let eps = 10f64.powf(rng.random_range(-4.0..0.5));
        let (_, rec) = absolute_init(&theta, eps)?;
        ok &= (&rec - &theta).norm() <= eps * (1.0 + 1e-12);
    }
    suite.check("absolute-init-error-bound", ok, String::new());

    // multiplier no-overflow
    let mut ok = true;
    for _ in 0..1000 {
        let norm = rng.random::<f64>() * 50.0;
        let base = 1e-6 + rng.random::<f64>();
        ok &= norm <= adaptive_multiplier(norm, base) as f64 * base * (1.0 + 1e-12);
    }
    suite.check("adaptive-multiplier-no-overflow", ok, String::new());

    // projection idempotence and non-expansiveness
    let safe = SafeSet::new(
        DVector::from_fn(6, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal)),
        0.3,
        2,
        1,
    );
    let mut ok = true;
    for _ in 0..500 {
        let t1 = DVector::from_fn(6, |_, _| 2.0 * rng.sample::<f64, _>(rand_distr::StandardNormal));
        let t2 = DVector::from_fn(6, |_, _| 2.0 * rng.sample::<f64, _>(rand_distr::StandardNormal));
        let p1 = safe.project(&t1);
        let p2 = safe.project(&t2);
        ok &= safe.contains(&p1);
        ok &= (safe.project(&p1) - &p1).norm() <= 1e-10;
        ok &= (&p1 - &p2).norm() <= (&t1 - &t2).norm() + 1e-10;
    }
    suite.check("safe-projection-properties", ok, String::new());

    // Riccati golden values and residuals
    let scalar = benchmark_system(SystemName::Scalar)?;
    let sol = solve_dare_default(&scalar.sys, &scalar.cost)
        .map_err(|e| Error::RiccatiFailure(e.to_string()))?;
    let ok = (sol.p_op_norm() - 1.7738).abs() / 1.7738 < 1e-3
        && dare_residual(&sol.p, &scalar.sys, &scalar.cost) <= 1e-8 * (1.0 + sol.p.norm());
    suite.check(
        "riccati-scalar-golden",
        ok,
        format!("||P|| {:.5}", sol.p_op_norm()),
    );

    let m = DMatrix::from_element(1, 1, 0.9);
    let q = DMatrix::from_element(1, 1, 2.0);
    let x = solve_dlyap(&m, &q)?.x[(0, 0)];
    suite.check(
        "dlyap-scalar-closed-form",
        (x - 2.0 / (1.0 - 0.81)).abs() < 1e-9,
        format!("x {x:.6}"),
    );

    // hard instances against the Riccati solver
    let mut ok = true;
    let mut max_gap: f64 = 0.0;
    for (dx, du) in [(1usize, 1usize), (2, 1), (2, 2)] {
        let cost = CostPair::identity(dx, du);
        let c = default_c(0.5, &cost);
        for _ in 0..30 {
            let k = sample_gain_cube(&mut rng, dx, du, 0.5);
            let inst = build_hard_instance(&k, &cost, 1.0, c)?;
            ok &= instance_identity_residual(&inst) <= 1e-10;
            let gap = verify_fixed_point(&inst, &cost)?;
            max_gap = max_gap.max(gap.gain_gap);
            ok &= gap.gain_gap <= 1e-7 && gap.cost_rel_gap <= 1e-8;
        }
    }
    suite.check(
        "hard-instance-oracle",
        ok,
        format!("max gain gap {max_gap:.2e}"),
    );

    // shared-state exactness and overflow-freeness on a live trial
    let mut cfg = TrialConfig::theoretical(SimConfig {
        horizon: 1 << 12,
        seed: args.seed,
        sigma_w: 1.0,
    });
    cfg.trigger.variant = TriggerVariant::Bootstrap;
    let res = run_trial(&scalar.sys, &scalar.cost, &scalar.k0, &cfg)?;
    let mut ok = res.mirror_exact && res.k_safe.is_some();
    for e in &res.epochs {
        if let (Some(norm), Some(scale)) = (e.innovation_norm, e.scale) {
            ok &= norm <= scale * (1.0 + 1e-12);
        }
        if let (Some(err), Some(scale)) = (e.reconstruction_error, e.scale) {
            ok &= err <= cfg.rho * scale + 1e-12;
        }
    }
    ok &= res.bits_breakdown.total() == res.total_bits();
    suite.check(
        "trial-shared-state-and-ledger",
        ok,
        format!("k_safe {:?}", res.k_safe),
    );

    // bound calculators
    let cost11 = CostPair::identity(1, 1);
    let rep = bits_lower_bound(0.5, 1 << 20, 1, 1, 0.5, &cost11, 1.0, 1.0, 1.3)?;
    let infl = inflation_factors(1e-6, 1.0)?;
    suite.check(
        "bound-calculators",
        rep.coefficient == 0.25 && infl.q_slow < 1e-10 && infl.q_fast < 1e-10,
        format!("coefficient {}", rep.coefficient),
    );

    // malformed inputs are rejected
    let ok = SystemPair::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1)).is_err()
        && matches!("nonsense".parse::<SystemName>(), Err(Error::UnknownSystem(_)));
    suite.check("input-validation", ok, String::new());

    if suite.failures > 0 {
        Err(Error::ValidationFailure(format!(
            "{} property suite(s) failed",
            suite.failures
        )))
    } else {
        println!("all property suites passed");
        Ok(())
    }
}
