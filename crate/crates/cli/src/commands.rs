use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{NaiveDate, Timelike};
use solarcast_core::dataset::{generate_synthetic, load_csv, split, write_csv, IrradianceSeries, Regime, Scaler};
use solarcast_core::mar::{MarConfig, MarModel, Strategy, MODEL_MAGIC};
use solarcast_core::metrics::{summarize, ForecastReport, ForecastRow, Summary};
use solarcast_core::nn::{
    load_models, nn_forecast, save_models, train_cnn, train_lstm, ConvSpec, LstmSpec, NeuralModel, NN_MODEL_MAGIC,
    WINDOW_LEN,
};
use solarcast_core::stats::{
    autocorrelation, ensemble_deduct, ensemble_profile, pacf_from_acf, select_order, DEFAULT_ORDER_THRESHOLD,
};
use solarcast_core::Error;

use crate::config::{usage, ModelChoice, OrderChoice, RunConfig};
use crate::plot::{Figure, Line, PALETTE};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
/// Lags examined when the order is chosen automatically.
const AUTO_ORDER_MAX_LAG: usize = 20;
/// Test days drawn as overlay plots.
const PLOT_DAYS: usize = 3;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn load_split(cfg: &RunConfig) -> Result<(IrradianceSeries, IrradianceSeries)> {
    let series = load_csv(cfg.data_path()?)?;
    Ok(split(&series, cfg.split)?)
}

/// Training series in the domain the order is chosen in: standardized, and
/// ensemble-deducted unless `z_domain`.
fn diagnostic_values(train: &IrradianceSeries, z_domain: bool) -> Result<Vec<f64>> {
    let z = Scaler::fit(train)?.standardize(train)?;
    if z_domain {
        return Ok(z.into_values());
    }
    let profile = ensemble_profile(&z)?;
    Ok(ensemble_deduct(&z, &profile)?.into_values())
}

fn resolve_order(cfg: &RunConfig, train: &IrradianceSeries) -> Result<usize> {
    match cfg.order {
        OrderChoice::Fixed(m) => Ok(m),
        OrderChoice::Auto => {
            let values = diagnostic_values(train, false)?;
            let pacf = pacf_from_acf(&autocorrelation(&values, AUTO_ORDER_MAX_LAG)?)?;
            Ok(select_order(&pacf, DEFAULT_ORDER_THRESHOLD))
        }
    }
}

/// Rows need this many preceding in-window samples so every model forecasts
/// the same timestamps.
fn shared_support(order: usize) -> usize {
    order.max(WINDOW_LEN)
}

pub fn synth(cfg: &RunConfig, days: usize, regime: Regime) -> Result<()> {
    let out = cfg.out_path()?;
    let series = generate_synthetic(days, regime, cfg.seed)?;
    let header = cfg.header("synth", &[format!("days={days}"), format!("regime={regime}")]);
    let mut w = create(out)?;
    write_csv(&mut w, &series, &header).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {} samples to {}", series.len(), out.display());
    Ok(())
}

pub fn diagnose(cfg: &RunConfig, max_lag: usize, z_domain: bool) -> Result<()> {
    let (train, _) = load_split(cfg)?;
    let values = diagnostic_values(&train, z_domain)?;
    let acf = autocorrelation(&values, max_lag)?;
    let pacf = pacf_from_acf(&acf)?;
    let order = select_order(&pacf, DEFAULT_ORDER_THRESHOLD);
    let domain = if z_domain { "z" } else { "ens" };
    let header = cfg.header(
        "diagnose",
        &[
            format!("max_lag={max_lag}"),
            format!("domain={domain}"),
            format!("recommended_order={order}"),
        ],
    );
    let mut csv = comment_block(&header);
    csv.push_str("lag,acf,pacf\n");
    for lag in 0..=max_lag {
        let _ = writeln!(csv, "{lag},{},{}", acf.at(lag), pacf.at(lag));
    }
    match &cfg.out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("recommended order: {order}");
        }
        None => {
            print!("{csv}");
            eprintln!("recommended order: {order}");
        }
    }
    Ok(())
}

enum Fitted {
    Mar(MarModel),
    Nn(Vec<NeuralModel>),
}

impl Fitted {
    fn name(&self) -> String {
        match self {
            Fitted::Mar(m) if m.ensemble_enabled => "mar".into(),
            Fitted::Mar(_) => "ar".into(),
            Fitted::Nn(ms) => ms[0].kind().to_string(),
        }
    }

    fn order(&self) -> usize {
        match self {
            Fitted::Mar(m) => m.order,
            Fitted::Nn(_) => WINDOW_LEN,
        }
    }

    fn forecast(&self, test: &IrradianceSeries, horizon: usize, support: usize) -> Result<Vec<ForecastRow>> {
        Ok(match self {
            Fitted::Mar(m) => m.forecast_with_support(test, horizon, support)?,
            Fitted::Nn(ms) => {
                let m = ms
                    .iter()
                    .find(|m| m.horizon == horizon)
                    .ok_or(Error::UnfittedHorizon(horizon))?;
                nn_forecast(m, test, horizon, support)?
            }
        })
    }

    fn report(&self, test: &IrradianceSeries, horizons: &[usize], support: usize) -> Result<ForecastReport> {
        let mut rows = Vec::new();
        for &h in horizons {
            rows.extend(self.forecast(test, h, support)?);
        }
        Ok(ForecastReport::new(self.name(), rows)?)
    }

    fn save(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut w = create(path)?;
        match self {
            Fitted::Mar(m) => m.save(&mut w, header),
            Fitted::Nn(ms) => save_models(&mut w, ms, header),
        }
        .with_context(|| format!("writing {}", path.display()))
    }

    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .unwrap_or("");
        if first == MODEL_MAGIC {
            Ok(Fitted::Mar(MarModel::load(text.as_bytes())?))
        } else if first == NN_MODEL_MAGIC {
            Ok(Fitted::Nn(load_models(text.as_bytes())?))
        } else {
            Err(Error::ModelFormat(format!("{}: unrecognised model file", path.display())).into())
        }
    }
}

fn train_model(cfg: &RunConfig, choice: ModelChoice, train: &IrradianceSeries, order: usize) -> Result<Fitted> {
    let strategy = if cfg.recursive { Strategy::Recursive } else { Strategy::Direct };
    let mar = |ensemble_enabled| MarConfig {
        order,
        horizons: cfg.horizons.clone(),
        window: cfg.daylight,
        ensemble_enabled,
        strategy,
    };
    Ok(match choice {
        ModelChoice::Mar => Fitted::Mar(MarModel::fit_all_horizons(train, &mar(cfg.ensemble))?),
        ModelChoice::Ar => Fitted::Mar(MarModel::fit_all_horizons(train, &mar(false))?),
        ModelChoice::Cnn => {
            let d = ConvSpec::default();
            let spec = ConvSpec {
                epochs: cfg.epochs.unwrap_or(d.epochs),
                seed: cfg.seed,
                ..d
            };
            let models = cfg
                .horizons
                .iter()
                .map(|&h| {
                    eprintln!("training cnn, horizon {h}");
                    train_cnn(train, &spec, h, cfg.daylight)
                })
                .collect::<solarcast_core::Result<Vec<_>>>()?;
            Fitted::Nn(models)
        }
        ModelChoice::Lstm => {
            let d = LstmSpec::default();
            let spec = LstmSpec {
                epochs: cfg.epochs.unwrap_or(d.epochs),
                seed: cfg.seed,
                ..d
            };
            let models = cfg
                .horizons
                .iter()
                .map(|&h| {
                    eprintln!("training lstm, horizon {h}");
                    train_lstm(train, &spec, h, cfg.daylight)
                })
                .collect::<solarcast_core::Result<Vec<_>>>()?;
            Fitted::Nn(models)
        }
    })
}

fn loss_curves_csv(models: &[NeuralModel], header: &[String]) -> String {
    let mut s = comment_block(header);
    s.push_str("horizon,epoch,loss\n");
    for m in models {
        for (e, l) in m.loss_curve.iter().enumerate() {
            let _ = writeln!(s, "{},{e},{l}", m.horizon);
        }
    }
    s
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_path()?;
    let (train, _) = load_split(cfg)?;
    let order = resolve_order(cfg, &train)?;
    let fitted = train_model(cfg, cfg.model, &train, order)?;
    let header = cfg.header("fit", &[format!("selected_order={}", fitted.order())]);
    fitted.save(out, &header)?;
    if let Fitted::Nn(models) = &fitted {
        let mut name = out.as_os_str().to_owned();
        name.push(".loss.csv");
        write_file(Path::new(&name), &loss_curves_csv(models, &header))?;
    }
    println!("fitted {} (order {}) -> {}", fitted.name(), fitted.order(), out.display());
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, model_file: &Path) -> Result<()> {
    let out = cfg.out_path()?;
    let (_, test) = load_split(cfg)?;
    let fitted = Fitted::load(model_file)?;
    let report = fitted.report(&test, &cfg.horizons, shared_support(fitted.order()))?;
    let header = cfg.header("evaluate", &[format!("model_file={}", model_file.display())]);
    let summary = write_reports(out, &header, &[report], &test, cfg)?;
    print!("{}", summary.to_table());
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_path()?;
    let (train, test) = load_split(cfg)?;
    let order = resolve_order(cfg, &train)?;
    let support = shared_support(order);
    let results: Vec<Result<ForecastReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = ModelChoice::ALL
            .iter()
            .map(|&choice| {
                let (train, test) = (&train, &test);
                s.spawn(move || train_model(cfg, choice, train, order)?.report(test, &cfg.horizons, support))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("model thread panicked"))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    let header = cfg.header("compare", &[format!("selected_order={order}")]);
    let summary = write_reports(out, &header, &reports, &test, cfg)?;
    print!("{}", summary.to_table());
    Ok(())
}

fn rows_csv(reports: &[ForecastReport], header: &[String]) -> String {
    let mut s = comment_block(header);
    s.push_str("model,horizon,timestamp,actual,predicted\n");
    for rep in reports {
        for r in &rep.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                rep.model,
                r.horizon,
                r.timestamp.format(TIMESTAMP_FORMAT),
                r.actual,
                r.predicted
            );
        }
    }
    s
}

fn hour_of_day(t: chrono::NaiveDateTime) -> f64 {
    t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0
}

fn overlay(
    reports: &[ForecastReport],
    test: &IrradianceSeries,
    day: usize,
    horizon: usize,
    cfg: &RunConfig,
    header: &[String],
) -> (NaiveDate, Figure) {
    let first = day * test.samples_per_day();
    let date = test.timestamp(first).date();
    let step = test.step_minutes();
    let observed: Vec<(f64, f64)> = (0..test.samples_per_day())
        .filter(|&slot| cfg.daylight.contains_slot(slot, step))
        .map(|slot| (hour_of_day(test.timestamp(first + slot)), test.values()[first + slot]))
        .collect();
    let mut lines = vec![Line {
        label: "observed".into(),
        color: "#222222".into(),
        dashed: false,
        points: observed,
    }];
    for (i, rep) in reports.iter().enumerate() {
        let points = rep
            .rows
            .iter()
            .filter(|r| r.horizon == horizon && r.timestamp.date() == date)
            .map(|r| (hour_of_day(r.timestamp), r.predicted))
            .collect();
        lines.push(Line {
            label: rep.model.to_uppercase(),
            color: PALETTE[i % PALETTE.len()].into(),
            dashed: true,
            points,
        });
    }
    let minutes = horizon as u32 * step;
    let fig = Figure {
        title: format!("Observed vs predicted, {date}, {minutes} min ahead"),
        x_label: "hour of day".into(),
        y_label: "irradiance (W/m^2)".into(),
        comments: header.to_vec(),
        lines,
    };
    (date, fig)
}

fn write_reports(
    dir: &Path,
    header: &[String],
    reports: &[ForecastReport],
    test: &IrradianceSeries,
    cfg: &RunConfig,
) -> Result<Summary> {
    if dir.is_file() {
        return Err(usage(format!("--out {} must be a directory", dir.display())));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summary = summarize(reports, test.step_minutes(), cfg.mape_threshold)?;
    write_file(&dir.join("rows.csv"), &rows_csv(reports, header))?;
    write_file(&dir.join("summary.csv"), &(comment_block(header) + &summary.to_csv()))?;
    write_file(&dir.join("summary.txt"), &(comment_block(header) + &summary.to_table()))?;

    let mut plotted = 0;
    for day in 0..test.days().min(PLOT_DAYS) {
        for &h in &cfg.horizons {
            let (date, fig) = overlay(reports, test, day, h, cfg, header);
            let name = format!("overlay_h{h}_{date}.svg");
            write_file(&dir.join(name), &fig.to_svg())?;
            plotted += 1;
        }
    }
    eprintln!(
        "wrote rows.csv, summary.csv, summary.txt and {} plots to {}",
        plotted,
        dir.display()
    );
    Ok(summary)
}
