//! `cskit`: scoring, fusion, rescoring, augmentation and loss tools for
//! code-switching ASR.
//!
//! Exit status: 0 on success, 2 on usage, I/O, format or contract errors,
//! 1 on internal failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use cskit::dsp::{self, FbankConfig, MaskFill, SpecAugConfig};
use cskit::formats::{self, Corpus};
use cskit::losses::{self, KlDirection, LossTerms, LossWeights, PosteriorSeq};
use cskit::rescore::{self, FusionWeights};
use cskit::rover::{self, VoteWeights};
use cskit::scoring;
use cskit::seeding::derive_u64;
use cskit::synth::{self, SynthConfig};
use cskit::textaug;
use cskit::{Error, TokenizedCorpus};

#[derive(Parser)]
#[command(
    name = "cskit",
    version,
    about = "Code-switching ASR evaluation and system combination"
)]
struct Cli {
    /// Worker threads for per-utterance parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mix error rate of a hypothesis transcript against a reference.
    Score(ScoreArgs),
    /// ROVER fusion of several systems with language-weighted voting.
    Rover(RoverArgs),
    /// Re-rank an n-best list with external/internal LM scores.
    Rescore(RescoreArgs),
    /// Pair same-dialogue sentences to triple LM training text.
    Textaug(TextaugArgs),
    /// Speed-perturb a WAV file.
    Speed(SpeedArgs),
    /// Extract log-Mel filterbank features from WAV files.
    Fbank(FbankArgs),
    /// Apply SpecAugment to a feature file.
    Specaug(SpecaugArgs),
    /// Evaluate attention, CTC, consistency and joint losses.
    Loss(LossArgs),
    /// Write a synthetic multi-system corpus with injected errors.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
    /// Print key=value lines instead of tables.
    #[arg(long)]
    kv: bool,
}

#[derive(Args)]
struct RoverArgs {
    /// System transcripts; order matters (earlier systems win ties).
    #[arg(long, num_args = 1.., required = true)]
    hyps: Vec<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    en_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    mandarin_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    other_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    null_weight: f64,
    /// Reference transcript; with --sweep, required.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// English weight range `lo:hi`; prints `weight<TAB>mer` rows.
    #[arg(long, requires = "reference")]
    sweep: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    sweep_step: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RescoreArgs {
    #[arg(long)]
    nbest: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    lambda_lm: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_ilm: f64,
    /// Divide combined scores by the number of scoring units.
    #[arg(long)]
    length_norm: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TextaugArgs {
    /// Transcript file; line order is chronological order.
    #[arg(long)]
    text: PathBuf,
    /// `utt_id<TAB>dialogue_id` map.
    #[arg(long)]
    dialogues: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpeedArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    factor: f64,
}

#[derive(Args)]
struct FbankArgs {
    /// WAV files; the utterance id is the file stem.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    frame_len: f64,
    #[arg(long, default_value_t = 10.0)]
    frame_shift: f64,
    #[arg(long, default_value_t = 80)]
    n_mels: usize,
}

#[derive(Args)]
struct SpecaugArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Global seed; each utterance uses a seed derived from it and its id.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    freq_masks: usize,
    #[arg(long, default_value_t = 10)]
    max_freq_width: usize,
    #[arg(long, default_value_t = 2)]
    time_masks: usize,
    #[arg(long, default_value_t = 50)]
    max_time_width: usize,
    /// Time-warp window in frames; 0 disables warping.
    #[arg(long, default_value_t = 80)]
    warp_window: usize,
    /// Fill masks with the utterance mean instead of 0.
    #[arg(long)]
    mean_fill: bool,
}

#[derive(Args)]
struct LossArgs {
    /// Decoder posteriors for the real utterance (feature-matrix text).
    #[arg(long)]
    att_real: PathBuf,
    /// Decoder posteriors for the synthetic utterance.
    #[arg(long)]
    att_synth: PathBuf,
    /// Frame-level CTC posteriors for the real utterance.
    #[arg(long)]
    ctc_real: PathBuf,
    /// Frame-level CTC posteriors for the synthetic utterance.
    #[arg(long)]
    ctc_synth: PathBuf,
    /// Space-separated label indices.
    #[arg(long, allow_hyphen_values = true)]
    labels: String,
    /// Labels for the decoder posteriors, one per row (default: --labels).
    #[arg(long)]
    att_labels: Option<String>,
    #[arg(long, default_value_t = 0)]
    blank: usize,
    /// CTC weight.
    #[arg(long, default_value_t = 0.3)]
    lambda1: f64,
    /// Consistency weight.
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
    /// Use KL(synthetic || real) instead of KL(real || synthetic).
    #[arg(long)]
    reverse_kl: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    utterances: usize,
    #[arg(long, default_value_t = 8)]
    systems: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        eprintln!("cskit: internal error: {info}");
        std::process::exit(1);
    }));
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("cskit: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cskit: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> cskit::Result<()> {
    match cmd {
        Command::Score(a) => score(a),
        Command::Rover(a) => rover_cmd(a),
        Command::Rescore(a) => rescore_cmd(a),
        Command::Textaug(a) => textaug_cmd(a),
        Command::Speed(a) => speed(a),
        Command::Fbank(a) => fbank(a),
        Command::Specaug(a) => specaug(a),
        Command::Loss(a) => loss(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> cskit::Result<()> {
    match out {
        Some(p) => formats::write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn tokenized(path: &Path) -> cskit::Result<TokenizedCorpus> {
    Ok(formats::read_transcripts(path)?.tokenized())
}

fn score(a: ScoreArgs) -> cskit::Result<()> {
    let refs = tokenized(&a.reference)?;
    let hyps = tokenized(&a.hyp)?;
    let rep = scoring::score_corpus(&refs, &hyps)?;
    emit(
        None,
        &if a.kv {
            rep.to_key_values()
        } else {
            rep.to_table()
        },
    )
}

fn parse_range(s: &str, step: f64) -> cskit::Result<Vec<f64>> {
    let bad = || {
        Error::InvalidArgument(format!(
            "--sweep expects lo:hi with 0 < lo <= hi, got {s:?}"
        ))
    };
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(bad());
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "--sweep-step must be > 0, got {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn rover_cmd(a: RoverArgs) -> cskit::Result<()> {
    if a.hyps.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rover needs at least 2 --hyps files, got {}",
            a.hyps.len()
        )));
    }
    let weights = VoteWeights::new(
        a.mandarin_weight,
        a.en_weight,
        a.other_weight,
        a.null_weight,
    )?;
    let systems: Vec<TokenizedCorpus> = a
        .hyps
        .iter()
        .map(|p| tokenized(p))
        .collect::<cskit::Result<_>>()?;
    info!("fusing {} systems", systems.len());

    if let Some(range) = &a.sweep {
        let refs = tokenized(a.reference.as_deref().expect("clap requires --ref"))?;
        let grid = parse_range(range, a.sweep_step)?;
        let sw = rover::sweep(&systems, &refs, &grid, &weights)?;
        emit(a.out.as_deref(), &sw.to_tsv())?;
        eprintln!("argmin weight: {}", sw.best_weight());
        return Ok(());
    }

    let fused = rover::fuse(&systems, &weights)?;
    emit(a.out.as_deref(), &formats::format_tokenized(&fused))?;
    if let Some(r) = &a.reference {
        let rep = scoring::score_corpus(&tokenized(r)?, &fused)?;
        eprintln!("fused MER: {}", scoring::fmt_rate(rep.mer()));
    }
    Ok(())
}

fn rescore_cmd(a: RescoreArgs) -> cskit::Result<()> {
    let nbest = formats::read_nbest(&a.nbest)?;
    let w = FusionWeights::new(a.lambda_lm, a.lambda_ilm)?.with_length_normalization(a.length_norm);
    let winners = rescore::rerank(&nbest, &w)?;
    emit(
        a.out.as_deref(),
        &formats::format_transcripts(winners.iter().map(|(id, e)| (id, &e.text))),
    )
}

fn textaug_cmd(a: TextaugArgs) -> cskit::Result<()> {
    let corpus: Corpus = formats::read_transcripts(&a.text)?;
    let map = formats::read_dialogue_map(&a.dialogues)?;
    let dialogues = textaug::group_dialogues(&corpus, &map)?;
    let lines = textaug::augment(&dialogues, a.seed);
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

fn speed(a: SpeedArgs) -> cskit::Result<()> {
    let w = dsp::read_wav(&a.input)?;
    let out = dsp::speed_perturb(&w, a.factor)?;
    info!("{} -> {} samples", w.len(), out.len());
    dsp::write_wav(&a.output, &out)
}

fn utt_id_of(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn fbank(a: FbankArgs) -> cskit::Result<()> {
    let cfg = FbankConfig {
        frame_len_ms: a.frame_len,
        frame_shift_ms: a.frame_shift,
        n_mels: a.n_mels,
    };
    let extract = |p: &PathBuf| -> cskit::Result<(String, dsp::FeatureMatrix)> {
        Ok((utt_id_of(p), dsp::fbank(&dsp::read_wav(p)?, &cfg)?))
    };
    let set: Vec<_> = {
        use rayon::prelude::*;
        a.input
            .par_iter()
            .map(extract)
            .collect::<cskit::Result<_>>()?
    };
    formats::write_features(&a.output, &set)
}

fn specaug(a: SpecaugArgs) -> cskit::Result<()> {
    let set = formats::read_features(&a.input)?;
    let base = SpecAugConfig {
        n_freq_masks: a.freq_masks,
        max_freq_width: a.max_freq_width,
        n_time_masks: a.time_masks,
        max_time_width: a.max_time_width,
        warp_window: a.warp_window,
        seed: a.seed,
        fill: if a.mean_fill {
            MaskFill::Mean
        } else {
            MaskFill::Zero
        },
    };
    let out: Vec<_> = {
        use rayon::prelude::*;
        set.par_iter()
            .map(|(id, m)| {
                let cfg = SpecAugConfig {
                    seed: derive_u64(a.seed, id),
                    ..base
                };
                Ok((id.clone(), dsp::spec_augment(m, &cfg)?))
            })
            .collect::<cskit::Result<_>>()?
    };
    formats::write_features(&a.output, &out)
}

fn parse_labels(s: &str) -> cskit::Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad label {t:?}")))
        })
        .collect()
}

fn single_posterior(path: &Path) -> cskit::Result<PosteriorSeq> {
    let set = formats::read_features(path)?;
    match set.as_slice() {
        [(_, m)] => PosteriorSeq::from_features(m),
        _ => Err(Error::InvalidArgument(format!(
            "{}: expected exactly one matrix, found {}",
            path.display(),
            set.len()
        ))),
    }
}

fn loss(a: LossArgs) -> cskit::Result<()> {
    let labels = parse_labels(&a.labels)?;
    let att_labels = match &a.att_labels {
        Some(s) => parse_labels(s)?,
        None => labels.clone(),
    };
    let weights = LossWeights::new(a.lambda1, a.lambda2)?;
    let att_real = single_posterior(&a.att_real)?;
    let att_synth = single_posterior(&a.att_synth)?;
    let ctc_real = single_posterior(&a.ctc_real)?;
    let ctc_synth = single_posterior(&a.ctc_synth)?;
    let dir = if a.reverse_kl {
        KlDirection::SynthToReal
    } else {
        KlDirection::RealToSynth
    };
    let terms = LossTerms {
        att_real: losses::cross_entropy(&att_real, &att_labels)?,
        att_synth: losses::cross_entropy(&att_synth, &att_labels)?,
        ctc_real: losses::ctc_nll(&ctc_real, &labels, a.blank)?,
        ctc_synth: losses::ctc_nll(&ctc_synth, &labels, a.blank)?,
        consistency: losses::kl_consistency_dir(&att_real, &att_synth, dir)?,
    };
    let joint = losses::joint_loss(&terms, &weights);
    emit(
        None,
        &format!(
            "att_real={}\natt_synth={}\nctc_real={}\nctc_synth={}\nconsistency={}\njoint={}\n",
            terms.att_real,
            terms.att_synth,
            terms.ctc_real,
            terms.ctc_synth,
            terms.consistency,
            joint
        ),
    )
}

fn synth_cmd(a: SynthArgs) -> cskit::Result<()> {
    if a.systems == 0 {
        return Err(Error::InvalidArgument("--systems must be >= 1".into()));
    }
    let c = synth::generate(&SynthConfig {
        utterances: a.utterances,
        systems: a.systems,
        seed: a.seed,
        ..Default::default()
    });
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    formats::write_file(
        &a.out_dir.join("ref.txt"),
        &formats::format_tokenized(&c.refs),
    )?;
    for (i, s) in c.systems.iter().enumerate() {
        let p = a.out_dir.join(format!("sys{}.txt", i + 1));
        formats::write_file(&p, &formats::format_tokenized(s))?;
    }
    info!(
        "wrote {} systems to {}",
        c.systems.len(),
        a.out_dir.display()
    );
    Ok(())
}
