use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use dga_core::conventional::Method;
use dga_core::evaluation::{confusion, kfold_cv, metrics, train_test_split_indices, EvalReport};
use dga_core::features::{
    build_features, optimal_k_search, ranked_params, KSearchParams, K_MAX, K_MIN,
};
use dga_core::gas::PARAM_NAMES;
use dga_core::gbt::{GbtConfig, GbtModel};
use dga_core::io::{
    generate_synthetic, load_dataset, load_model, save_model, write_atomic, write_dataset,
    ModelFile, DEFAULT_CLASS_COUNTS,
};
use dga_core::itd::{itd_single_stage, DEFAULT_ALPHA};
use dga_core::ranking::{rank_params, rank_params_detailed, RankOrder};
use dga_core::{Error, FaultLabel, GasSample, Result};

use crate::{Command, GasArgs, GbtArgs, MethodChoice, RankSource};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Rank { data, source } => rank(data.as_deref(), source.canonical),
        Command::Features {
            data,
            k,
            source,
            out,
        } => {
            let samples = load_dataset(&data)?;
            let order = rank_order(&samples, &source)?;
            warn_k(k);
            let fm = build_features(&samples, &order, k)?;
            let mut tsv = String::from("id\tlabel");
            for i in 1..=k {
                write!(tsv, "\tprc{i}").unwrap();
            }
            tsv.push('\n');
            for ((id, label), row) in fm.ids.iter().zip(&fm.labels).zip(&fm.rows) {
                write!(tsv, "{id}\t{}", label_str(*label)).unwrap();
                for v in row {
                    write!(tsv, "\t{v}").unwrap();
                }
                tsv.push('\n');
            }
            emit(out.as_deref(), &tsv)
        }
        Command::Searchk {
            data,
            kmin,
            kmax,
            seed,
            source,
            out,
        } => {
            let samples = load_dataset(&data)?;
            let order = rank_order(&samples, &source)?;
            let params = KSearchParams {
                k_min: kmin,
                k_max: kmax,
                split_seed: seed,
                ..KSearchParams::default()
            };
            let result = optimal_k_search(&samples, &order, &params)?;
            let mut tsv = String::from("k\taccuracy\n");
            for (k, acc) in &result.accuracy_curve {
                writeln!(tsv, "{k}\t{acc}").unwrap();
            }
            match out {
                Some(path) => {
                    write_atomic(&path, tsv.as_bytes())?;
                    println!("best_k\t{}", result.best_k);
                    Ok(())
                }
                None => emit(None, &tsv),
            }
        }
        Command::Train {
            data,
            k,
            seed,
            model,
            source,
            gbt,
        } => {
            let samples = load_dataset(&data)?;
            let order = rank_order(&samples, &source)?;
            warn_k(k);
            let fm = build_features(&samples, &order, k)?;
            let labels = fm.require_labels()?;
            let trained = GbtModel::train(&fm.rows, &labels, &gbt_config(&gbt), seed)?;
            let predicted = trained.predict_many(&fm.rows)?;
            let acc = metrics(&confusion(&labels, &predicted)?)?.accuracy;
            save_model(&model, &ModelFile::new(trained, order, k))?;
            println!(
                "samples\t{}\nk\t{k}\ntraining_accuracy\t{acc}",
                samples.len()
            );
            Ok(())
        }
        Command::Evaluate {
            data,
            model,
            holdout,
            cv,
            smote,
            seed,
            json,
        } => {
            let samples = load_dataset(&data)?;
            let file = load_model(&model)?;
            let fm = build_features(&samples, &file.rank_order, file.k)?;
            let labels = fm.require_labels()?;
            let config = &file.model.config;
            if let Some(folds) = cv {
                let report = kfold_cv(&fm, folds, seed, smote, config)?;
                return if json {
                    emit(None, &to_json(&report))
                } else {
                    let mut text = String::new();
                    for (i, r) in report.folds.iter().enumerate() {
                        writeln!(
                            text,
                            "fold {}: accuracy {:.4} kappa {:.4}",
                            i + 1,
                            r.accuracy,
                            r.kappa
                        )
                        .unwrap();
                    }
                    text.push_str("pooled:\n");
                    text.push_str(&report_table(&report.pooled));
                    emit(None, &text)
                };
            }
            let report = match holdout {
                Some(test_frac) => {
                    if !(test_frac > 0.0 && test_frac < 1.0) {
                        return Err(Error::InvalidInput(format!(
                            "holdout must lie in (0, 1), got {test_frac}"
                        )));
                    }
                    let (train, test) = train_test_split_indices(fm.len(), 1.0 - test_frac, seed)?;
                    let pick_rows =
                        |ix: &[usize]| ix.iter().map(|&i| fm.rows[i].clone()).collect::<Vec<_>>();
                    let pick_labels =
                        |ix: &[usize]| ix.iter().map(|&i| labels[i]).collect::<Vec<_>>();
                    let m =
                        GbtModel::train(&pick_rows(&train), &pick_labels(&train), config, seed)?;
                    metrics(&confusion(
                        &pick_labels(&test),
                        &m.predict_many(&pick_rows(&test))?,
                    )?)?
                }
                None => metrics(&confusion(&labels, &file.model.predict_many(&fm.rows)?)?)?,
            };
            if json {
                emit(None, &to_json(&report))
            } else {
                emit(None, &report_table(&report))
            }
        }
        Command::Diagnose {
            data,
            gases,
            model,
            compare,
        } => {
            let file = load_model(&model)?;
            let samples = match data {
                Some(path) => load_dataset(&path)?,
                None => vec![gas_sample(&gases)?],
            };
            let fm = build_features(&samples, &file.rank_order, file.k)?;
            let predicted = file.model.predict_many(&fm.rows)?;
            let mut tsv = String::from("id\tactual\tpredicted");
            if compare {
                tsv.push_str("\tduval\trogers\tiec");
            }
            tsv.push('\n');
            for (s, p) in samples.iter().zip(&predicted) {
                write!(tsv, "{}\t{}\t{p}", s.id, label_str(s.label)).unwrap();
                if compare {
                    for m in Method::ALL {
                        write!(tsv, "\t{}", outcome_str(m, s)).unwrap();
                    }
                }
                tsv.push('\n');
            }
            emit(None, &tsv)
        }
        Command::Conventional { data, method } => {
            let samples = load_dataset(&data)?;
            let methods: Vec<Method> = match method {
                MethodChoice::One(m) => vec![m],
                MethodChoice::All => Method::ALL.to_vec(),
            };
            let mut tsv = String::from("id\tactual");
            for m in &methods {
                write!(tsv, "\t{m}").unwrap();
            }
            tsv.push('\n');
            for s in &samples {
                write!(tsv, "{}\t{}", s.id, label_str(s.label)).unwrap();
                for &m in &methods {
                    write!(tsv, "\t{}", outcome_str(m, s)).unwrap();
                }
                tsv.push('\n');
            }
            emit(None, &tsv)
        }
        Command::Decompose {
            data,
            k,
            source,
            out,
        } => {
            let samples = load_dataset(&data)?;
            let order = rank_order(&samples, &source)?;
            warn_k(k);
            if !(2..=37).contains(&k) {
                return Err(Error::InvalidInput(format!(
                    "k must lie in 2..=37, got {k}"
                )));
            }
            let mut tsv = String::from("id\tposition\tparam\tx\tbaseline\tprc\n");
            for s in &samples {
                let x = ranked_params(s, &order, k);
                let r = itd_single_stage(&x, DEFAULT_ALPHA)?;
                for (pos, &param) in order.as_slice()[..k].iter().enumerate() {
                    writeln!(
                        tsv,
                        "{}\t{}\t{param}\t{}\t{}\t{}",
                        s.id,
                        pos + 1,
                        x[pos],
                        r.baseline[pos],
                        r.prc[pos]
                    )
                    .unwrap();
                }
            }
            emit(out.as_deref(), &tsv)
        }
        Command::Synth { seed, out, counts } => {
            let counts: [usize; 6] = match counts {
                Some(c) => c
                    .try_into()
                    .map_err(|_| Error::InvalidInput("--counts needs six values".into()))?,
                None => DEFAULT_CLASS_COUNTS,
            };
            let samples = generate_synthetic(seed, &counts);
            write_dataset(&out, &samples)?;
            println!("wrote {} samples to {}", samples.len(), out.display());
            Ok(())
        }
    }
}

fn rank(data: Option<&Path>, canonical: bool) -> Result<()> {
    let (order, skew) = match (data, canonical) {
        (Some(path), false) => {
            let r = rank_params_detailed(&load_dataset(path)?)?;
            (r.order, Some(r.skewness))
        }
        (Some(path), true) => {
            let r = rank_params_detailed(&load_dataset(path)?)?;
            (RankOrder::canonical(), Some(r.skewness))
        }
        (None, _) => (RankOrder::canonical(), None),
    };
    let mut tsv = String::from("rank\tparam\tname\tskewness\n");
    for (pos, &p) in order.as_slice().iter().enumerate() {
        let s = skew.map(|s| s[p - 1].to_string()).unwrap_or_default();
        writeln!(tsv, "{}\t{p}\t{}\t{s}", pos + 1, PARAM_NAMES[p - 1]).unwrap();
    }
    emit(None, &tsv)
}

fn rank_order(samples: &[GasSample], source: &RankSource) -> Result<RankOrder> {
    if source.canonical {
        Ok(RankOrder::canonical())
    } else {
        rank_params(samples)
    }
}

fn warn_k(k: usize) {
    if !(K_MIN..=K_MAX).contains(&k) {
        eprintln!("warning: k = {k} is outside the usual range {K_MIN}..={K_MAX}");
    }
}

fn gbt_config(args: &GbtArgs) -> GbtConfig {
    GbtConfig {
        rounds: args.rounds,
        learning_rate: args.learning_rate,
        max_depth: args.max_depth,
        ..GbtConfig::default()
    }
}

fn gas_sample(g: &GasArgs) -> Result<GasSample> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required")))
    };
    GasSample::new(
        "input",
        [
            need(g.h2, "h2")?,
            need(g.ch4, "ch4")?,
            need(g.c2h6, "c2h6")?,
            need(g.c2h4, "c2h4")?,
            need(g.c2h2, "c2h2")?,
        ],
        None,
    )
}

fn label_str(label: Option<FaultLabel>) -> &'static str {
    label.map_or("", FaultLabel::as_str)
}

/// Method outcome, or `n/a` where the method is undefined for the sample.
fn outcome_str(method: Method, sample: &GasSample) -> String {
    method
        .diagnose(sample)
        .map_or_else(|_| "n/a".into(), |o| o.to_string())
}

fn report_table(r: &EvalReport) -> String {
    let mut text = String::from("class\tsensitivity\tprecision\tf1\n");
    for (c, label) in FaultLabel::ALL.iter().enumerate() {
        writeln!(
            text,
            "{label}\t{:.4}\t{:.4}\t{:.4}",
            r.sensitivity[c], r.precision[c], r.f1[c]
        )
        .unwrap();
    }
    writeln!(
        text,
        "accuracy\t{:.4}\nmacro_f1\t{:.4}\nkappa\t{:.4}",
        r.accuracy, r.macro_f1, r.kappa
    )
    .unwrap();
    text.push_str("confusion (rows actual, columns predicted)\n");
    for label in FaultLabel::ALL {
        write!(text, "\t{label}").unwrap();
    }
    text.push('\n');
    for (c, label) in FaultLabel::ALL.iter().enumerate() {
        write!(text, "{label}").unwrap();
        for v in r.matrix.counts[c] {
            write!(text, "\t{v}").unwrap();
        }
        text.push('\n');
    }
    text
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}
