//! ECDC report ingestion and the CSV/SVG artifacts of a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::model::{DeathSeries, PriorSpec, DIM, PARAM_NAMES};
use crate::plot;
use crate::quantities::ForecastSummary;
use crate::sampler::diagnostics::ParamDiagnostics;
use crate::sampler::{ChainDraws, DrawMatrix};
use crate::stats::{self, Interval};
use crate::{Error, Result};

/// A frozen ECDC extract for China, 31/12/2019 to 31/03/2020.
pub const CHINA_SNAPSHOT: &str = include_str!("../data/ecdc_china_snapshot.csv");

/// Population of China in millions consistent with the published posterior
/// mean of `log p` and about 3325 deaths. The ECDC feed itself carries 1433.78.
pub const CHINA_POPULATION_MILLIONS_ALT: f64 = 1393.0;

const DATE_FORMAT: &str = "%d/%m/%Y";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReportRow {
    pub date: NaiveDate,
    /// May be negative in raw feeds (retroactive corrections).
    pub deaths: i64,
    pub country: String,
    pub population: Option<u64>,
}

/// Parses an ECDC daily report. Needs `dateRep`, `deaths`,
/// `countriesAndTerritories` and `popData2019` or `popData2018`; other columns
/// are ignored. Row numbers in errors count data rows from 1.
pub fn parse_ecdc_csv(bytes: &[u8]) -> Result<Vec<RawReportRow>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::BadRow {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |names: &[&str]| {
        names
            .iter()
            .find_map(|n| headers.iter().position(|h| h.trim() == *n))
            .ok_or_else(|| Error::MissingColumn(names.join("|")))
    };
    let date_col = find(&["dateRep"])?;
    let deaths_col = find(&["deaths"])?;
    let country_col = find(&["countriesAndTerritories"])?;
    let pop_col = find(&["popData2019", "popData2018"])?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::BadRow {
            row,
            message: e.to_string(),
        })?;
        let field = |col: usize| record.get(col).unwrap_or("").trim();
        let date =
            NaiveDate::parse_from_str(field(date_col), DATE_FORMAT).map_err(|_| Error::BadRow {
                row,
                message: format!("unparseable date `{}`", field(date_col)),
            })?;
        let deaths = field(deaths_col)
            .parse::<i64>()
            .map_err(|_| Error::BadRow {
                row,
                message: format!("non-integer deaths `{}`", field(deaths_col)),
            })?;
        let population = match field(pop_col) {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|_| Error::BadRow {
                row,
                message: format!("non-integer population `{s}`"),
            })?),
        };
        rows.push(RawReportRow {
            date,
            deaths,
            country: field(country_col).to_string(),
            population,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltSeries {
    pub series: DeathSeries,
    /// Calendar date of the first series day.
    pub first_date: NaiveDate,
    pub warnings: Vec<String>,
}

/// Builds the series of `country` starting at its first reported death, with
/// that day numbered `origin`. Missing days count as zero deaths and negative
/// counts are clamped to zero (with a warning).
pub fn build_series(rows: &[RawReportRow], country: &str, origin: i64) -> Result<BuiltSeries> {
    build_series_with_population(rows, country, origin, None)
}

/// As [`build_series`], with an optional population (millions) that replaces
/// the one in the feed.
pub fn build_series_with_population(
    rows: &[RawReportRow],
    country: &str,
    origin: i64,
    population_millions: Option<f64>,
) -> Result<BuiltSeries> {
    if origin != 0 && origin != 1 {
        return Err(Error::InvalidConfig(format!(
            "origin must be 0 or 1, got {origin}"
        )));
    }
    let mut by_date: BTreeMap<NaiveDate, &RawReportRow> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.country == country) {
        if by_date.insert(row.date, row).is_some() {
            return Err(Error::InvalidSeries(format!(
                "{country}: duplicate report for {}",
                row.date
            )));
        }
    }
    if by_date.is_empty() {
        return Err(Error::CountryNotFound(country.to_string()));
    }
    let first = *by_date
        .iter()
        .find(|(_, r)| r.deaths > 0)
        .ok_or_else(|| Error::NoDeaths(country.to_string()))?
        .0;
    let last = *by_date.keys().next_back().expect("nonempty");

    let population = match population_millions {
        Some(p) => p,
        None => {
            by_date
                .values()
                .rev()
                .find_map(|r| r.population)
                .ok_or_else(|| Error::MissingPopulation(country.to_string()))? as f64
                / 1e6
        }
    };

    let mut warnings = Vec::new();
    let mut deaths = Vec::new();
    for date in first.iter_days().take_while(|d| *d <= last) {
        let count = match by_date.get(&date) {
            Some(r) if r.deaths < 0 => {
                warnings.push(format!(
                    "{country} {date}: negative count {} clamped to 0",
                    r.deaths
                ));
                0
            }
            Some(r) => r.deaths as u64,
            None => 0,
        };
        deaths.push(count);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(BuiltSeries {
        series: DeathSeries::from_counts(origin, deaths, population)?,
        first_date: first,
        warnings,
    })
}

pub const CHINA_CORRECTION_DATES: [(i32, u32, u32); 2] = [(2020, 2, 13), (2020, 2, 14)];
const REPORTED_PAIR: (u64, u64) = (254, 13);
const CORRECTED_PAIR: (u64, u64) = (134, 133);

/// Replaces the China reports of 13 and 14 February 2020 (254 and 13 deaths)
/// by their average, split as 134 and 133. Returns a warning when the expected
/// pair is absent; an already corrected pair is left alone silently.
pub fn apply_china_correction_rows(rows: &mut [RawReportRow]) -> Option<String> {
    let dates = CHINA_CORRECTION_DATES
        .map(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d).expect("valid date"));
    let find = |rows: &[RawReportRow], date| {
        rows.iter()
            .position(|r| r.country == "China" && r.date == date)
    };
    let (Some(a), Some(b)) = (find(rows, dates[0]), find(rows, dates[1])) else {
        return Some(not_applicable());
    };
    match (rows[a].deaths, rows[b].deaths) {
        (x, y) if (x, y) == (REPORTED_PAIR.0 as i64, REPORTED_PAIR.1 as i64) => {
            rows[a].deaths = CORRECTED_PAIR.0 as i64;
            rows[b].deaths = CORRECTED_PAIR.1 as i64;
            None
        }
        (x, y) if (x, y) == (CORRECTED_PAIR.0 as i64, CORRECTED_PAIR.1 as i64) => None,
        _ => Some(not_applicable()),
    }
}

/// The same correction on a built series, at explicit day indices.
pub fn apply_china_correction(
    series: &DeathSeries,
    day_a: i64,
    day_b: i64,
) -> (DeathSeries, Option<String>) {
    let mut out = series.clone();
    let index = |d: i64| series.day().iter().position(|&x| x == d);
    let (Some(a), Some(b)) = (index(day_a), index(day_b)) else {
        return (out, Some(not_applicable()));
    };
    let deaths = out.deaths_mut();
    let pair = (deaths[a], deaths[b]);
    if pair == REPORTED_PAIR {
        deaths[a] = CORRECTED_PAIR.0;
        deaths[b] = CORRECTED_PAIR.1;
        (out, None)
    } else if pair == CORRECTED_PAIR {
        (out, None)
    } else {
        (out, Some(not_applicable()))
    }
}

fn not_applicable() -> String {
    let msg = "China correction not applicable: the 254/13 pair of 13-14 Feb 2020 is absent; data left unchanged".to_string();
    log::warn!("{msg}");
    msg
}

/// Posterior summary of one parameter on the reporting scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
}

/// Row order of summary.csv.
pub const SUMMARY_ORDER: [&str; DIM] = ["beta", "log_alpha", "eta", "log_p"];

/// Summaries of reporting-scale draws in [`SUMMARY_ORDER`].
pub fn summarize_parameters(draws: &DrawMatrix) -> Result<Vec<ParameterSummary>> {
    SUMMARY_ORDER
        .iter()
        .map(|name| {
            let j = draws
                .names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
            let values = draws.pooled(j);
            if values.is_empty() {
                return Err(Error::EmptyDraws);
            }
            let sorted = stats::sorted(&values);
            Ok(ParameterSummary {
                parameter: name.to_string(),
                mean: stats::mean(&values),
                sd: stats::sd(&values),
                q2_5: stats::quantile_sorted(&sorted, 0.025),
                q50: stats::quantile_sorted(&sorted, 0.5),
                q97_5: stats::quantile_sorted(&sorted, 0.975),
            })
        })
        .collect()
}

/// Transfer prior from summary rows (any order).
pub fn prior_from_summary(
    rows: &[ParameterSummary],
    inflation: f64,
    p_free: bool,
) -> Result<PriorSpec> {
    let mut mean = [0.0; DIM];
    let mut sd = [0.0; DIM];
    for (j, name) in PARAM_NAMES.iter().enumerate() {
        let row = rows
            .iter()
            .find(|r| r.parameter == *name)
            .ok_or_else(|| Error::MissingColumn(format!("summary row `{name}`")))?;
        mean[j] = row.mean;
        sd[j] = row.sd;
    }
    PriorSpec::transfer(mean, sd, inflation, p_free)
}

/// Everything a fit or forecast writes.
#[derive(Debug, Clone, Copy)]
pub struct RunArtifacts<'a> {
    /// Reporting scale (`log_p, log_alpha, beta, eta`).
    pub draws: &'a DrawMatrix,
    pub forecast: &'a ForecastSummary,
    /// `None` when diagnostics could not be computed (single chain).
    pub diagnostics: Option<&'a [ParamDiagnostics]>,
    pub observed: &'a DeathSeries,
}

pub const DRAWS_FILE: &str = "draws.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const BANDS_DAILY_FILE: &str = "bands_daily.csv";
pub const BANDS_CUMULATIVE_FILE: &str = "bands_cumulative.csv";
pub const QUANTITIES_FILE: &str = "quantities.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const OBSERVED_FILE: &str = "observed.csv";
pub const DAILY_PLOT: &str = "daily.svg";
pub const CUMULATIVE_PLOT: &str = "cumulative.svg";

/// Writes all CSV artifacts and both plots into `dir` (created if needed).
pub fn write_outputs(dir: &Path, run: &RunArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_draws(&dir.join(DRAWS_FILE), run.draws)?;
    write_summary(&dir.join(SUMMARY_FILE), &summarize_parameters(run.draws)?)?;
    write_band(&dir.join(BANDS_DAILY_FILE), &run.forecast.daily_band)?;
    write_band(
        &dir.join(BANDS_CUMULATIVE_FILE),
        &run.forecast.cumulative_band,
    )?;
    write_quantities(&dir.join(QUANTITIES_FILE), &quantity_rows(run.forecast))?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), run.diagnostics)?;
    write_observed(&dir.join(OBSERVED_FILE), run.observed)?;
    render_plots(dir)
}

/// Regenerates daily.svg and cumulative.svg from the band and observed CSVs.
pub fn render_plots(dir: &Path) -> Result<()> {
    let daily = read_band(&dir.join(BANDS_DAILY_FILE))?;
    let cumulative = read_band(&dir.join(BANDS_CUMULATIVE_FILE))?;
    let observed = read_observed(&dir.join(OBSERVED_FILE))?;
    let mut running = 0.0;
    let observed_cumulative: Vec<(i64, f64)> = observed
        .iter()
        .map(|&(d, y)| {
            running += y;
            (d, running)
        })
        .collect();
    write_text(
        &dir.join(DAILY_PLOT),
        &plot::band_svg("Daily deaths", "deaths per day", &daily, &observed),
    )?;
    write_text(
        &dir.join(CUMULATIVE_PLOT),
        &plot::band_svg(
            "Cumulative deaths",
            "cumulative deaths",
            &cumulative,
            &observed_cumulative,
        ),
    )
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let found = r.headers().map_err(|e| csv_error(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(
            path,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            Ok(rec.iter().map(str::to_string).collect())
        })
        .collect()
}

fn num<T: std::str::FromStr>(path: &Path, row: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::format(path, format!("row {row}: cannot parse `{field}`")))
}

const DRAWS_HEADER: [&str; 8] = [
    "chain",
    "iter",
    "log_p",
    "log_alpha",
    "beta",
    "eta",
    "lp",
    "divergent",
];

pub fn write_draws(path: &Path, draws: &DrawMatrix) -> Result<()> {
    let rows = draws.chains().iter().enumerate().flat_map(|(c, chain)| {
        (0..chain.len()).map(move |i| {
            let mut row = vec![(c + 1).to_string(), (i + 1).to_string()];
            row.extend(draws.draw(c, i).iter().map(f64::to_string));
            row.push(chain.lp[i].to_string());
            row.push(u8::from(chain.divergent[i]).to_string());
            row
        })
    });
    write_rows(path, &DRAWS_HEADER, rows)
}

/// Reads draws.csv. Sampler statistics that are not stored (acceptance,
/// depth, step size, mass) come back as placeholders.
pub fn read_draws(path: &Path) -> Result<DrawMatrix> {
    let rows = read_rows(path, &DRAWS_HEADER)?;
    let mut chains: Vec<ChainDraws> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let chain: usize = num(path, i + 1, &row[0])?;
        if chain == 0 || chain > chains.len() + 1 {
            return Err(Error::format(
                path,
                format!("row {}: chains must be numbered 1, 2, ...", i + 1),
            ));
        }
        if chain == chains.len() + 1 {
            chains.push(ChainDraws {
                values: Vec::new(),
                lp: Vec::new(),
                divergent: Vec::new(),
                accept_stat: Vec::new(),
                tree_depth: Vec::new(),
                stepsize: f64::NAN,
                inv_mass: vec![f64::NAN; DIM],
            });
        }
        let c = &mut chains[chain - 1];
        for field in &row[2..6] {
            c.values.push(num(path, i + 1, field)?);
        }
        c.lp.push(num(path, i + 1, &row[6])?);
        c.divergent.push(num::<u8>(path, i + 1, &row[7])? != 0);
        c.accept_stat.push(f64::NAN);
        c.tree_depth.push(0);
    }
    DrawMatrix::new(PARAM_NAMES.iter().map(|s| s.to_string()).collect(), chains)
        .map_err(|e| Error::format(path, e.to_string()))
}

const SUMMARY_HEADER: [&str; 6] = ["parameter", "mean", "sd", "q2.5", "q50", "q97.5"];

pub fn write_summary(path: &Path, rows: &[ParameterSummary]) -> Result<()> {
    write_rows(
        path,
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            [r.parameter.clone()]
                .into_iter()
                .chain([r.mean, r.sd, r.q2_5, r.q50, r.q97_5].map(|v| v.to_string()))
        }),
    )
}

pub fn read_summary(path: &Path) -> Result<Vec<ParameterSummary>> {
    read_rows(path, &SUMMARY_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ParameterSummary {
                parameter: r[0].clone(),
                mean: num(path, i + 1, &r[1])?,
                sd: num(path, i + 1, &r[2])?,
                q2_5: num(path, i + 1, &r[3])?,
                q50: num(path, i + 1, &r[4])?,
                q97_5: num(path, i + 1, &r[5])?,
            })
        })
        .collect()
}

const BAND_HEADER: [&str; 4] = ["day", "mean", "q2.5", "q97.5"];

pub fn write_band(path: &Path, band: &[Interval]) -> Result<()> {
    write_rows(
        path,
        &BAND_HEADER,
        band.iter().enumerate().map(|(i, b)| {
            [
                (i + 1).to_string(),
                b.mean.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ]
        }),
    )
}

pub fn read_band(path: &Path) -> Result<Vec<Interval>> {
    read_rows(path, &BAND_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let day: usize = num(path, i + 1, &r[0])?;
            if day != i + 1 {
                return Err(Error::format(
                    path,
                    format!("row {}: expected day {}", i + 1, i + 1),
                ));
            }
            Ok(Interval {
                mean: num(path, i + 1, &r[1])?,
                lower: num(path, i + 1, &r[2])?,
                upper: num(path, i + 1, &r[3])?,
            })
        })
        .collect()
}

/// One row of quantities.csv or sensitivity.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityRow {
    pub quantity: String,
    pub value: Interval,
}

pub fn quantity_rows(f: &ForecastSummary) -> Vec<QuantityRow> {
    [
        ("time_to_threshold", f.time_to_threshold),
        ("inflection_point", f.inflection_point),
        ("total_deaths", f.total_deaths),
    ]
    .into_iter()
    .map(|(q, value)| QuantityRow {
        quantity: q.to_string(),
        value,
    })
    .collect()
}

const QUANTITIES_HEADER: [&str; 4] = ["quantity", "mean", "q2.5", "q97.5"];

pub fn write_quantities(path: &Path, rows: &[QuantityRow]) -> Result<()> {
    write_rows(
        path,
        &QUANTITIES_HEADER,
        rows.iter().map(|r| {
            [
                r.quantity.clone(),
                r.value.mean.to_string(),
                r.value.lower.to_string(),
                r.value.upper.to_string(),
            ]
        }),
    )
}

pub fn read_quantities(path: &Path) -> Result<Vec<QuantityRow>> {
    read_rows(path, &QUANTITIES_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(QuantityRow {
                quantity: r[0].clone(),
                value: Interval {
                    mean: num(path, i + 1, &r[1])?,
                    lower: num(path, i + 1, &r[2])?,
                    upper: num(path, i + 1, &r[3])?,
                },
            })
        })
        .collect()
}

/// Scenario rows of a sensitivity analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub scenario: String,
    pub row: QuantityRow,
}

const SENSITIVITY_HEADER: [&str; 5] = ["scenario", "quantity", "mean", "q2.5", "q97.5"];

pub fn write_sensitivity(path: &Path, rows: &[ScenarioRow]) -> Result<()> {
    write_rows(
        path,
        &SENSITIVITY_HEADER,
        rows.iter().map(|r| {
            [
                r.scenario.clone(),
                r.row.quantity.clone(),
                r.row.value.mean.to_string(),
                r.row.value.lower.to_string(),
                r.row.value.upper.to_string(),
            ]
        }),
    )
}

pub fn read_sensitivity(path: &Path) -> Result<Vec<ScenarioRow>> {
    read_rows(path, &SENSITIVITY_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ScenarioRow {
                scenario: r[0].clone(),
                row: QuantityRow {
                    quantity: r[1].clone(),
                    value: Interval {
                        mean: num(path, i + 1, &r[2])?,
                        lower: num(path, i + 1, &r[3])?,
                        upper: num(path, i + 1, &r[4])?,
                    },
                },
            })
        })
        .collect()
}

const DIAGNOSTICS_HEADER: [&str; 4] = ["parameter", "rhat", "ess", "divergences"];

/// Diagnostics rows; without diagnostics every value is `NA`.
pub fn write_diagnostics(path: &Path, diagnostics: Option<&[ParamDiagnostics]>) -> Result<()> {
    let rows: Vec<[String; 4]> = match diagnostics {
        Some(d) => d
            .iter()
            .map(|p| {
                [
                    p.name.clone(),
                    p.rhat.to_string(),
                    p.ess_bulk.to_string(),
                    p.divergences.to_string(),
                ]
            })
            .collect(),
        None => PARAM_NAMES
            .iter()
            .map(|n| [n.to_string(), "NA".into(), "NA".into(), "NA".into()])
            .collect(),
    };
    write_rows(path, &DIAGNOSTICS_HEADER, rows)
}

/// Reads diagnostics.csv; `None` when the file records them as unavailable.
pub fn read_diagnostics(path: &Path) -> Result<Option<Vec<ParamDiagnostics>>> {
    let rows = read_rows(path, &DIAGNOSTICS_HEADER)?;
    if rows.iter().all(|r| r[1] == "NA") {
        return Ok(None);
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ParamDiagnostics {
                name: r[0].clone(),
                rhat: num(path, i + 1, &r[1])?,
                ess_bulk: num(path, i + 1, &r[2])?,
                divergences: num(path, i + 1, &r[3])?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

const OBSERVED_HEADER: [&str; 2] = ["day", "deaths"];

pub fn write_observed(path: &Path, series: &DeathSeries) -> Result<()> {
    write_rows(
        path,
        &OBSERVED_HEADER,
        series
            .day()
            .iter()
            .zip(series.deaths())
            .map(|(d, y)| [d.to_string(), y.to_string()]),
    )
}

pub fn read_observed(path: &Path) -> Result<Vec<(i64, f64)>> {
    read_rows(path, &OBSERVED_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok((
                num(path, i + 1, &r[0])?,
                num::<u64>(path, i + 1, &r[1])? as f64,
            ))
        })
        .collect()
}

/// Files that [`render_plots`] needs.
pub fn plot_inputs(dir: &Path) -> [PathBuf; 3] {
    [BANDS_DAILY_FILE, BANDS_CUMULATIVE_FILE, OBSERVED_FILE].map(|f| dir.join(f))
}
