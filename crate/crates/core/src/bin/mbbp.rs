use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mbbp::bounds::{bound_curves, curves_to_csv, union_bound, BoundKind};
use mbbp::codebook::{
    build_code, dual, format_word_list, parse_word_list, search_low_weight_codewords, weight_distribution, CodeName,
};
use mbbp::gf2::BinaryMatrix;
use mbbp::orbits::{beta_class, classify_families_with, default_sigma_max, families_to_csv, partition_orbits, Cog, FamilyOptions};
use mbbp::sim::{dual_cogs, run_campaign_with, CampaignConfig, CSV_HEADER};
use mbbp::stoppingsets::{count_stopping_sets_with, CountOptions};
use mbbp::{Error, Result};

#[derive(Parser)]
#[command(name = "mbbp", version, about = "Multiple-bases belief-propagation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a code's parameters, generator and parity-check matrices.
    BuildCode {
        #[arg(long)]
        code: CodeName,
    },
    /// Cog families of minimum-weight dual codewords as CSV.
    Families {
        #[arg(long)]
        code: CodeName,
        #[arg(long)]
        sigma_max: Option<usize>,
        /// Cog list to classify instead of the enumerated orbits.
        #[arg(long)]
        cogs: Option<PathBuf>,
        /// Compute every signature instead of one per doubling-map class.
        #[arg(long)]
        no_beta_classes: bool,
    },
    /// Count stopping sets of a parity-check matrix: CSV `sigma,count`.
    Stopsets {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        sigma_max: usize,
        /// Abort after this many search nodes (counts become lower bounds).
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run a Monte Carlo campaign from a JSON configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        workers: Option<usize>,
        /// CSV output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated decoder list overriding the configuration.
        #[arg(long, value_delimiter = ',')]
        variant: Option<Vec<String>>,
        /// Comma-separated SNR grid in dB overriding the configuration.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Option<Vec<f64>>,
        #[arg(long)]
        max_frames: Option<u64>,
        #[arg(long)]
        target_frame_errors: Option<u64>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        family: Option<usize>,
    },
    /// Union and Gallager bounds: CSV `snr_db,kind,value`.
    Bounds {
        #[arg(long)]
        code: CodeName,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,2,3,4,5,6,7,8")]
        snr: Vec<f64>,
        /// Comma-separated subset of union_ber, union_fer, gallager_fer.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<BoundKind>>,
    },
    /// Simulated ML frame error rate next to the union FER bound.
    MlCheck {
        #[arg(long)]
        code: CodeName,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_frames: u64,
        #[arg(long, default_value_t = 200)]
        target_frame_errors: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Randomized search for low-weight dual codewords, printed as cogs.
    SearchCogs {
        #[arg(long)]
        code: CodeName,
        #[arg(long)]
        max_weight: usize,
        #[arg(long, default_value_t = 1000)]
        rounds: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    let mut out = io::stdout();
    match cmd {
        Command::BuildCode { code } => {
            let c = build_code(code)?;
            let d = c.d.map_or("unknown".to_string(), |d| d.to_string());
            writeln!(out, "# {} [n={}, k={}, d={}]", c.name, c.n, c.k, d)?;
            writeln!(out, "# generator")?;
            write!(out, "{}", c.generator())?;
            writeln!(out, "# parity-check")?;
            write!(out, "{}", c.parity_check())?;
        }
        Command::Families {
            code,
            sigma_max,
            cogs,
            no_beta_classes,
        } => {
            let c = build_code(code)?;
            let list = match cogs {
                Some(p) => {
                    let words = parse_word_list(&fs::read_to_string(p)?, c.n)?;
                    words.iter().map(|w| Cog::from_word(w, c.cyclic_len())).collect()
                }
                None => dual_cogs(&c)?,
            };
            let mut opts = FamilyOptions::new(sigma_max.unwrap_or_else(|| default_sigma_max(&c)));
            opts.use_beta_classes = !no_beta_classes;
            let fams = classify_families_with(&list, &c, &opts)?;
            write!(out, "{}", families_to_csv(&fams))?;
        }
        Command::Stopsets {
            matrix,
            sigma_max,
            budget,
        } => {
            let h: BinaryMatrix = fs::read_to_string(&matrix)?.parse()?;
            let mut opts = CountOptions::new(sigma_max);
            opts.node_budget = budget;
            opts.matrix_id = matrix.display().to_string();
            let report = count_stopping_sets_with(&h, &opts)?;
            if !report.complete {
                eprintln!("warning: node budget exhausted; counts are lower bounds");
            }
            write!(out, "{}", report.to_csv())?;
        }
        Command::Simulate {
            config,
            seed,
            workers,
            out: path,
            variant,
            snr,
            max_frames,
            target_frame_errors,
            l,
            family,
        } => {
            let mut cfg = CampaignConfig::from_json(&fs::read_to_string(config)?)?;
            cfg.seed = Some(seed);
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if let Some(s) = snr {
                cfg.snr_grid_db = s;
            }
            if let Some(m) = max_frames {
                cfg.max_frames = m;
            }
            if let Some(t) = target_frame_errors {
                cfg.target_frame_errors = t;
            }
            if l.is_some() {
                cfg.l = l;
            }
            if let Some(f) = family {
                cfg.family = f;
            }
            cfg.validate()?;
            let mut sink: Box<dyn Write + Send> = match path {
                Some(p) => Box::new(fs::File::create(p)?),
                None => Box::new(io::stdout()),
            };
            writeln!(sink, "{CSV_HEADER}")?;
            let mut campaign = || {
                run_campaign_with(&cfg, |r| {
                    writeln!(sink, "{}", r.csv_row())?;
                    sink.flush()?;
                    Ok(())
                })
            };
            match workers {
                Some(w) => rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?
                    .install(campaign)?,
                None => campaign()?,
            };
        }
        Command::Bounds { code, snr, kinds } => {
            let c = build_code(code)?;
            let wd = weight_distribution(&c).ok();
            let kinds = kinds.unwrap_or_else(|| {
                if wd.is_some() {
                    BoundKind::ALL.to_vec()
                } else {
                    vec![BoundKind::GallagerFer]
                }
            });
            let curves = bound_curves(c.n, c.k, wd.as_ref(), &snr, &kinds)?;
            write!(out, "{}", curves_to_csv(&curves, c.n, c.k))?;
        }
        Command::MlCheck {
            code,
            snr,
            max_frames,
            target_frame_errors,
            seed,
        } => {
            let c = build_code(code)?;
            let wd = weight_distribution(&c)?;
            let mut cfg = CampaignConfig::new(code, &["ml"], snr, seed);
            cfg.max_frames = max_frames;
            cfg.target_frame_errors = target_frame_errors;
            writeln!(out, "snr_db,frames,frame_errors,fer,ci_low,ci_high,union_fer,below_bound")?;
            run_campaign_with(&cfg, |r| {
                let (lo, hi) = r.fer_interval();
                let bound = union_bound(&wd, c.n, c.k, r.snr_db, BoundKind::UnionFer)?;
                writeln!(
                    out,
                    "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{}",
                    r.snr_db,
                    r.frames,
                    r.frame_errors,
                    r.fer(),
                    lo,
                    hi,
                    bound,
                    lo <= bound
                )?;
                Ok(())
            })?;
        }
        Command::SearchCogs {
            code,
            max_weight,
            rounds,
            seed,
        } => {
            let c = build_code(code)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let words = search_low_weight_codewords(&dual(&c), max_weight, rounds, &mut rng);
            let nc = c.cyclic_len();
            let part = partition_orbits(&words, nc);
            let mut reps: Vec<Cog> = part.cogs.iter().map(|g| beta_class(g, nc)).collect();
            reps.sort();
            reps.dedup();
            let words: Vec<_> = reps.into_iter().map(|g| g.word).collect();
            writeln!(out, "# {} dual codewords of weight <= {max_weight}, one cog per doubling-map class", c.name)?;
            writeln!(out, "# randomized search, seed {seed}, {rounds} rounds; not exhaustive")?;
            write!(out, "{}", format_word_list(&words))?;
        }
    }
    Ok(())
}
