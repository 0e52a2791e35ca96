use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use slp_core::circuit::{parse, parse_basis, serialize, Basis, BasisFn, ConstValue};
use slp_core::eval::dyadic::decimal_string;
use slp_core::eval::{decide_sign, eval_interval, oracle_eval, Sign};
use slp_core::harness::{
    differential_verify, parse_weights, random_circuit, GeneratorParams, Pass,
};
use slp_core::poly::{parse_rational, Poly};
use slp_core::transforms::UnaryAlmostSquareSpec;
use slp_core::{gap_exponent, Circuit};

/// Sign decision and reductions for straight-line programs.
#[derive(Parser)]
#[command(name = "slp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print NEG, ZERO or POS.
    Sign {
        file: PathBuf,
        /// Print YES when the value is positive, NO otherwise.
        #[arg(long)]
        posslp: bool,
    },
    /// Print an enclosure of the value of width at most 2^-bits.
    Eval {
        file: PathBuf,
        #[arg(long)]
        bits: u64,
    },
    /// Print the gap exponent E and magnitude exponent M of the output.
    Gap { file: PathBuf },
    /// Rewrite a circuit with one of the reductions.
    Transform {
        #[arg(long)]
        pass: PassName,
        #[command(flatten)]
        opts: PassOpts,
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Check a pass against independent evaluation on random circuits.
    Verify {
        #[arg(long)]
        pass: PassName,
        #[command(flatten)]
        opts: PassOpts,
        /// Largest circuit size; case sizes are drawn from 1..=size.
        #[arg(long)]
        size: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        gen: GenOpts,
        /// Emit one JSON record per case and a summary record.
        #[arg(long)]
        records: bool,
    },
    /// Print a random circuit.
    Gen {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        gen: GenOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PassName {
    Regularize,
    Newton,
    Mulpoly,
    Sqfromf,
}

#[derive(Args)]
struct PassOpts {
    /// mulpoly: coefficients of p, constant term first, comma separated.
    #[arg(long)]
    poly: Option<String>,
    /// mulpoly and sqfromf: the constant alpha.
    #[arg(long)]
    alpha: Option<String>,
    /// sqfromf: the interval radius beta.
    #[arg(long)]
    beta: Option<String>,
    /// sqfromf: the seed constant k.
    #[arg(long)]
    k: Option<String>,
    /// sqfromf: basis descriptor with an almostsq function and a constant k.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct GenOpts {
    /// Basis descriptor file; defaults to B2 or the pass's input basis.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Gate kind weights, e.g. const1:2,add:3,root2:1.
    #[arg(long)]
    weights: Option<String>,
    /// Largest number of root gates.
    #[arg(long)]
    root_cap: Option<usize>,
}

enum Failure {
    Usage(String),
    Internal(String),
}

type Outcome = Result<ExitCode, Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn internal(e: impl ToString) -> Failure {
    Failure::Internal(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Circuit, Failure> {
    parse(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn rational(flag: &str, text: &str) -> Result<BigRational, Failure> {
    parse_rational(text).ok_or_else(|| usage(format!("--{flag}: bad rational {text:?}")))
}

fn build_pass(name: PassName, o: &PassOpts) -> Result<Pass, Failure> {
    Ok(match name {
        PassName::Regularize => Pass::Regularize,
        PassName::Newton => Pass::Newton,
        PassName::Mulpoly => {
            let p = match &o.poly {
                Some(t) => Poly::new(
                    t.split(',')
                        .map(|c| rational("poly", c.trim()))
                        .collect::<Result<_, _>>()?,
                ),
                None => Poly::from_ints(&[0, 0, 1]),
            };
            let alpha = o
                .alpha
                .as_deref()
                .map(|a| rational("alpha", a))
                .transpose()?;
            Pass::MulPoly {
                p,
                alpha: alpha.unwrap_or_else(|| BigRational::from_integer(1.into())),
            }
        }
        PassName::Sqfromf => {
            let mut spec = match &o.spec {
                Some(path) => spec_from_basis(&parse_basis(&read(path)?).map_err(usage)?)?,
                None => UnaryAlmostSquareSpec::standard(),
            };
            if let Some(a) = &o.alpha {
                spec.alpha = rational("alpha", a)?;
            }
            if let Some(b) = &o.beta {
                spec.beta = rational("beta", b)?;
            }
            if let Some(k) = &o.k {
                spec.k = rational("k", k)?;
            }
            if let Some(t) = &o.poly {
                spec.f = Poly::new(
                    t.split(',')
                        .map(|c| rational("poly", c.trim()))
                        .collect::<Result<_, _>>()?,
                );
            }
            spec.validate().map_err(usage)?;
            Pass::SqFromF(spec)
        }
    })
}

fn spec_from_basis(b: &Basis) -> Result<UnaryAlmostSquareSpec, Failure> {
    let f = b.functions().find_map(|(_, f)| match f {
        BasisFn::UnaryAlmostSquare { alpha, beta, poly } => {
            Some((alpha.clone(), beta.clone(), poly.clone()))
        }
        _ => None,
    });
    let Some((alpha, beta, f)) = f else {
        return Err(usage("spec: no almostsq function"));
    };
    let k = match b.constant("k") {
        Some(ConstValue::Rational(k)) => k.clone(),
        _ => return Err(usage("spec: no rational constant k")),
    };
    Ok(UnaryAlmostSquareSpec { alpha, beta, f, k })
}

fn gen_params(
    basis: Basis,
    size: usize,
    seed: u64,
    g: &GenOpts,
) -> Result<GeneratorParams, Failure> {
    let mut p = GeneratorParams::new(basis, size, seed);
    if let Some(w) = &g.weights {
        p = p.with_weights(parse_weights(w).map_err(usage)?);
    }
    if let Some(cap) = g.root_cap {
        p = p.with_root_cap(cap);
    }
    Ok(p)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Sign { file, posslp } => {
            let c = load(&file)?;
            let s = decide_sign(&c).map_err(internal)?;
            match posslp {
                true => println!("{}", if s == Sign::Pos { "YES" } else { "NO" }),
                false => println!("{s}"),
            }
        }
        Command::Eval { file, bits } => {
            let c = load(&file)?;
            let x = match c.basis().field() {
                Some(_) => oracle_eval(&c, -(bits as i64)).map_err(internal)?,
                None => eval_interval(&c, bits).map_err(internal)?,
            };
            let digits = (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
            println!(
                "[{}, {}]",
                decimal_string(&x.lo().to_rational(), digits),
                decimal_string(&x.hi().to_rational(), digits)
            );
        }
        Command::Gap { file } => {
            let c = load(&file)?;
            let (e, m) = gap_exponent(&c).map_err(internal)?;
            println!("E {e}");
            println!("M {m}");
        }
        Command::Transform {
            pass,
            opts,
            file,
            output,
        } => {
            let pass = build_pass(pass, &opts)?;
            let c = load(&file)?;
            let out = pass.apply(&c).map_err(|e| match e {
                slp_core::transforms::TransformError::Disallowed { .. }
                | slp_core::transforms::TransformError::Parameter(_) => usage(e),
                _ => internal(e),
            })?;
            fs::write(&output, serialize(&out) + "\n")
                .map_err(|e| usage(format!("{}: {e}", output.display())))?;
            println!("{} -> {} gates", c.size(), out.size());
        }
        Command::Verify {
            pass,
            opts,
            size,
            count,
            seed,
            gen,
            records,
        } => {
            if size == 0 {
                return Err(usage("--size must be positive"));
            }
            let pass = build_pass(pass, &opts)?;
            let params = match &gen.basis {
                Some(path) => {
                    let basis = parse_basis(&read(path)?).map_err(usage)?;
                    gen_params(basis, size, seed, &gen)?
                }
                None => {
                    let mut p = pass.generator(size, seed);
                    if let Some(w) = &gen.weights {
                        p = p.with_weights(parse_weights(w).map_err(usage)?);
                    }
                    if let Some(cap) = gen.root_cap {
                        p = p.with_root_cap(cap);
                    }
                    p
                }
            };
            let report = differential_verify(&pass, &params, count);
            match records {
                true => print!("{}", report.records()),
                false => print!("{}", report.render()),
            }
            if !report.disagreements.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Gen { size, seed, gen } => {
            let basis = match &gen.basis {
                Some(path) => parse_basis(&read(path)?).map_err(usage)?,
                None => Basis::b(2),
            };
            let c = random_circuit(&gen_params(basis, size, seed, &gen)?).map_err(usage)?;
            println!("{}", serialize(&c));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
