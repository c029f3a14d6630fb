//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a computational failure, 2 on a usage
//! error (including an invalid `POLYOSTAT_PRECISION`).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Number, Value};

use crate::enumerate;
use crate::error::{Error, Result};
use crate::families::{self, FamilyId};
use crate::markov;
use crate::moments::{self, FamilyModel, PerimeterStats};
use crate::numeric::{self, Precision};
use crate::qseries::{KernelModel, DEFAULT_J_MAX};
use crate::simulate;
use crate::spectral::{self, SpectralConstants, DEFAULT_K_MAX};

/// Agreement required by `gf-check`.
pub const GF_TOLERANCE: f64 = 1e-5;

#[derive(Parser, Debug)]
#[command(name = "polyostat", version, about = "Perimeter statistics of column-built polyominoes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Width, column-chain and perimeter constants.
    Constants(Common),
    /// Exact counts by area (optionally the full table or a perimeter histogram).
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        /// Emit `n,m,j,count` rows.
        #[arg(long)]
        table: bool,
        /// Emit the perimeter histogram at area `n-max` (at most 14).
        #[arg(long)]
        perimeter: bool,
    },
    /// Gaussian check report (json) or one streamed trajectory (csv).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 400)]
        m: usize,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Local limit theorem residual of the exact width law.
    Llt {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
    /// Compare μ₄, σ₄² with the values read off the known perimeter GF.
    GfCheck(Common),
    /// Row sums, stationarity, reversibility and mixing of the column chain.
    ChainCheck(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(value_parser = family_parser())]
    family: FamilyId,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    j_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn family_parser() -> impl clap::builder::TypedValueParser<Value = FamilyId> {
    use clap::builder::TypedValueParser;
    PossibleValuesParser::new(FamilyId::ALL.map(FamilyId::name))
        .map(|s: String| FamilyId::from_str(&s).expect("listed family"))
}

pub fn run(args: &[String]) -> i32 {
    if let Err(e) = Precision::from_env() {
        eprintln!("polyostat: {e}");
        return 2;
    }
    let argv = std::iter::once("polyostat".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("polyostat: {e}");
            match e {
                Error::UnknownFamily(_) | Error::BadPrecision(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Twelve significant digits, shortest round-trip rendering.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    round12(x).to_string()
}

fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
    } else {
        Value::Null
    }
}

fn big(x: &num_bigint::BigUint) -> Value {
    Number::from_str(&x.to_string()).map_or_else(|_| Value::String(x.to_string()), Value::Number)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(common: &Common, object: Map<String, Value>) -> Result<()> {
    let mut out = open_out(&common.out)?;
    match common.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &Value::Object(object))
                .map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in &object {
                let cell = match v {
                    Value::Null => String::new(),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(out, "{k},{cell}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Constants(c) => constants(&c),
        Command::Enumerate { common, n_max, table, perimeter } => {
            enumerate_cmd(&common, n_max, table, perimeter)
        }
        Command::Simulate { common, m, trials, seed } => simulate_cmd(&common, m, trials, seed),
        Command::Llt { common, n_max } => {
            let r = enumerate::llt_residual(common.family, n_max)?;
            let mut o = Map::new();
            o.insert("family".into(), common.family.name().into());
            o.insert("n".into(), n_max.into());
            o.insert("residual".into(), num(r));
            emit(&common, o)
        }
        Command::GfCheck(c) => gf_check(&c),
        Command::ChainCheck(c) => chain_check(&c),
    }
}

/// Model at the requested truncations; the cached default when none given.
fn family_model(c: &Common) -> Result<(std::sync::Arc<FamilyModel>, KernelModel, usize)> {
    let k_max = c.k_max.unwrap_or(DEFAULT_K_MAX);
    let j_max = c.j_max.unwrap_or(DEFAULT_J_MAX);
    let default = KernelModel::default_for(c.family);
    if k_max == DEFAULT_K_MAX && j_max == DEFAULT_J_MAX {
        return Ok((moments::family_model(c.family)?, default, k_max));
    }
    let model = KernelModel::new(c.family, j_max, default.l_max.max(k_max))?;
    Ok((std::sync::Arc::new(FamilyModel::build(&model, k_max)?), model, k_max))
}

fn constants(c: &Common) -> Result<()> {
    let (fm, model, k_max) = family_model(c)?;
    let stats = if c.k_max.is_none() && c.j_max.is_none() {
        moments::joint_stats(c.family)?
    } else {
        moments::joint_stats_with(&fm)
    };
    let mut o = Map::new();
    insert_constants(&mut o, &fm.spectral, &stats);
    o.insert("k_max".into(), k_max.into());
    o.insert("j_max".into(), model.j_max.into());
    o.insert("l_max".into(), model.l_max.into());
    o.insert("precision".into(), precision_name().into());
    let spec = families::spec(c.family);
    o.insert("horizontal_increment".into(), spec.horizontal_increment.into());
    o.insert("gf_supported".into(), spec.supports_known_gf.into());
    let (gm, gs) = if spec.supports_known_gf {
        let (a, b) = spectral::gf_perimeter_constants(c.family)?;
        (num(a), num(b))
    } else {
        (Value::Null, Value::Null)
    };
    o.insert("gf_mu4".into(), gm);
    o.insert("gf_sigma4_sq".into(), gs);
    emit(c, o)
}

fn precision_name() -> &'static str {
    match numeric::precision() {
        Precision::Extended => "extended",
        Precision::Double => "double",
    }
}

fn insert_constants(o: &mut Map<String, Value>, sc: &SpectralConstants, s: &PerimeterStats) {
    o.insert("family".into(), sc.family.name().into());
    for (k, v) in [
        ("rho", sc.rho),
        ("mu1", sc.mu1),
        ("sigma1_sq", sc.sigma1_sq),
        ("mu2", sc.mu2),
        ("sigma2_sq", sc.sigma2_sq),
        ("C1", sc.c1),
        ("C2", sc.c2),
        ("C1_total", sc.c1_total),
        ("C2_total", sc.c2_total),
        ("mu3", s.mu3),
        ("sigma3_sq", s.sigma3_sq),
        ("sigmaQ_sq", s.sigma_q_sq),
        ("C_XQ", s.c_xq),
        ("rho_XQ", s.rho_xq),
        ("alpha", s.alpha),
        ("beta", s.beta),
        ("gamma", s.gamma),
        ("mu4", s.mu4),
        ("sigma4_sq", s.sigma4_sq),
        ("beta_star", s.beta_star),
        ("mu4_star", s.mu4_star),
        ("sigma4_star_sq", s.sigma4_star_sq),
        ("sigma_x_sq", s.sigma_x_sq),
        ("sigmaX_sq", s.sigma_big_x_sq),
    ] {
        o.insert(k.into(), num(v));
    }
}

fn enumerate_cmd(c: &Common, n_max: usize, table: bool, perimeter: bool) -> Result<()> {
    if perimeter {
        let h = enumerate::exact_perimeter_histogram(c.family, n_max)?;
        if c.format == Format::Csv {
            let mut out = open_out(&c.out)?;
            h.write_csv(&mut out)?;
            out.flush()?;
            return Ok(());
        }
        let mut o = Map::new();
        o.insert("family".into(), c.family.name().into());
        o.insert("n".into(), n_max.into());
        let hist: Map<String, Value> =
            h.counts.iter().map(|(p, n)| (p.to_string(), Value::from(*n as u64))).collect();
        o.insert("histogram".into(), Value::Object(hist));
        o.insert("mean".into(), num(h.mean()));
        o.insert("variance".into(), num(h.variance()));
        return emit(c, o);
    }
    let t = enumerate::count_table(c.family, n_max)?;
    if c.format == Format::Csv {
        let mut out = open_out(&c.out)?;
        if table {
            t.write_csv(&mut out)?;
        } else {
            writeln!(out, "n,total")?;
            for (n, total) in t.totals().iter().enumerate() {
                writeln!(out, "{},{total}", n + 1)?;
            }
        }
        out.flush()?;
        return Ok(());
    }
    let mut o = Map::new();
    o.insert("family".into(), c.family.name().into());
    o.insert("n_max".into(), n_max.into());
    o.insert("totals".into(), Value::Array(t.totals().iter().map(big).collect()));
    if table {
        let rows = (1..=n_max)
            .flat_map(|n| (1..=n).flat_map(move |m| (1..=n).map(move |j| (n, m, j))))
            .filter_map(|(n, m, j)| {
                let v = t.count(m, n, j);
                (v != num_bigint::BigUint::default())
                    .then(|| Value::Array(vec![n.into(), m.into(), j.into(), big(&v)]))
            })
            .collect();
        o.insert("table".into(), Value::Array(rows));
    }
    emit(c, o)
}

fn simulate_cmd(c: &Common, m: usize, trials: usize, seed: u64) -> Result<()> {
    if c.format == Format::Csv {
        let mut out = open_out(&c.out)?;
        simulate::stream_trajectory(c.family, m, seed, &mut out)?;
        out.flush()?;
        return Ok(());
    }
    let r = simulate::gaussian_check(c.family, m, trials, seed)?;
    let mut o = Map::new();
    o.insert("family".into(), c.family.name().into());
    o.insert("m".into(), m.into());
    o.insert("trials".into(), trials.into());
    o.insert("seed".into(), seed.into());
    o.insert("n".into(), r.n.into());
    o.insert("z_mu2".into(), num(r.z_mu2));
    o.insert("z_var2".into(), r.z_var2.map_or(Value::Null, num));
    o.insert("z_mu4s".into(), num(r.z_mu4s));
    o.insert("z_var4s".into(), r.z_var4s.map_or(Value::Null, num));
    o.insert("ks".into(), num(r.ks));
    o.insert("variance_checked".into(), r.variance_checked.into());
    o.insert("generator".into(), r.generator.into());
    emit(c, o)
}

fn gf_check(c: &Common) -> Result<()> {
    let (gm, gs) = spectral::gf_perimeter_constants(c.family)?;
    let s = moments::joint_stats(c.family)?;
    let (dm, ds) = ((gm - s.mu4).abs(), (gs - s.sigma4_sq).abs());
    let mut o = Map::new();
    o.insert("family".into(), c.family.name().into());
    o.insert("gf_mu4".into(), num(gm));
    o.insert("gf_sigma4_sq".into(), num(gs));
    o.insert("moments_mu4".into(), num(s.mu4));
    o.insert("moments_sigma4_sq".into(), num(s.sigma4_sq));
    o.insert("diff_mu4".into(), num(dm));
    o.insert("diff_sigma4_sq".into(), num(ds));
    o.insert("tolerance".into(), num(GF_TOLERANCE));
    o.insert("pass".into(), (dm < GF_TOLERANCE && ds < GF_TOLERANCE).into());
    emit(c, o)
}

fn chain_check(c: &Common) -> Result<()> {
    let (fm, _, _) = family_model(c)?;
    if c.format == Format::Csv {
        let mut out = open_out(&c.out)?;
        markov::write_chain_csv(&fm.chain, &mut out)?;
        out.flush()?;
        return Ok(());
    }
    let r = markov::chain_checks(&fm.chain);
    let mut o = Map::new();
    o.insert("family".into(), c.family.name().into());
    o.insert("k_max".into(), r.k_max.into());
    o.insert("row_sum_residual".into(), num(r.row_sum_residual));
    o.insert("stationarity_residual".into(), num(r.stationarity_residual));
    o.insert("reversibility_residual".into(), num(r.reversibility_residual));
    o.insert("mixing_tv".into(), num(r.mixing_tv));
    o.insert(
        "weight_identity_residual".into(),
        num(markov::weight_identity_residual(&fm.spectral, 30)),
    );
    o.insert(
        "dominant_root_winding".into(),
        spectral::verify_dominant_root(c.family, 1.1)?.into(),
    );
    emit(c, o)
}
