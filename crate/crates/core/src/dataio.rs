//! vTEC records, feature encoding, solar-index smoothing, fold planning and
//! a synthetic data generator.
//!
//! Cyclic inputs are encoded as quadrature pairs so that 23:00 and 00:00
//! (and 31 December / 1 January) are neighbours in feature space:
//!
//! ```text
//! sinhour = sin(2π·hour/24)      coshour = cos(2π·hour/24)
//! sinday  = sin(2π·daynum/365)   cosday  = cos(2π·daynum/365)
//! ```
//!
//! The solar-activity input is a smooth curve (mean plus a sum of sinusoids)
//! fitted to monthly mean sunspot numbers and sampled at each record's
//! timestamp.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprtree::{Inputs, NUM_VARS};

pub const DAYS_PER_YEAR: u16 = 365;

/// One hourly vTEC observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawRecord {
    pub year: i32,
    /// 1..=365; day 366 of leap years is clamped to 365 on ingestion.
    pub daynum: u16,
    /// 0..=23
    pub hour: u8,
    /// TECU, finite and non-negative.
    pub vtec: f64,
}

impl RawRecord {
    pub fn new(year: i32, daynum: u16, hour: u8, vtec: f64) -> Result<Self> {
        if daynum == 0 || daynum > DAYS_PER_YEAR + 1 {
            return Err(Error::Data(format!("daynum {daynum} outside 1..=365")));
        }
        if hour > 23 {
            return Err(Error::Data(format!("hour {hour} outside 0..=23")));
        }
        if !vtec.is_finite() || vtec < 0.0 {
            return Err(Error::Data(format!("vtec {vtec} must be finite and >= 0")));
        }
        Ok(RawRecord {
            year,
            daynum: daynum.min(DAYS_PER_YEAR),
            hour,
            vtec,
        })
    }

    fn sort_key(&self) -> (i32, u16, u8) {
        (self.year, self.daynum, self.hour)
    }
}

/// Encoded model inputs plus the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodedRow {
    pub sinhour: f64,
    pub coshour: f64,
    pub sinday: f64,
    pub cosday: f64,
    pub ssn: f64,
    pub target_vtec: f64,
}

impl EncodedRow {
    pub fn inputs(&self) -> Inputs {
        [self.sinhour, self.coshour, self.sinday, self.cosday, self.ssn]
    }
}

/// Column-major table of encoded rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    columns: [Vec<f64>; NUM_VARS],
    target: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: impl IntoIterator<Item = EncodedRow>) -> Self {
        let mut d = Dataset::new();
        for r in rows {
            d.push(r);
        }
        d
    }

    pub fn push(&mut self, row: EncodedRow) {
        for (col, v) in self.columns.iter_mut().zip(row.inputs()) {
            col.push(v);
        }
        self.target.push(row.target_vtec);
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn row(&self, i: usize) -> EncodedRow {
        EncodedRow {
            sinhour: self.columns[0][i],
            coshour: self.columns[1][i],
            sinday: self.columns[2][i],
            cosday: self.columns[3][i],
            ssn: self.columns[4][i],
            target_vtec: self.target[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = EncodedRow> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    pub fn columns(&self) -> [&[f64]; NUM_VARS] {
        [
            &self.columns[0],
            &self.columns[1],
            &self.columns[2],
            &self.columns[3],
            &self.columns[4],
        ]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::from_rows(indices.iter().map(|&i| self.row(i)))
    }
}

pub fn encode_hour(hour: u32) -> Result<(f64, f64)> {
    if hour > 23 {
        return Err(Error::Data(format!("hour {hour} outside 0..=23")));
    }
    let angle = 2.0 * PI * hour as f64 / 24.0;
    Ok((angle.sin(), angle.cos()))
}

pub fn encode_day(daynum: u32) -> Result<(f64, f64)> {
    if daynum == 0 || daynum > DAYS_PER_YEAR as u32 {
        return Err(Error::Data(format!("daynum {daynum} outside 1..=365")));
    }
    let angle = 2.0 * PI * daynum as f64 / DAYS_PER_YEAR as f64;
    Ok((angle.sin(), angle.cos()))
}

/// Monthly mean sunspot number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonthlyMean {
    pub year: i32,
    /// 1..=12
    pub month: u8,
    pub mean_ssn: f64,
}

/// Months elapsed since January of `epoch_year`, sampled at mid-month.
fn month_time(epoch_year: i32, year: i32, month: u8) -> f64 {
    (year - epoch_year) as f64 * 12.0 + (month as f64 - 1.0) + 0.5
}

/// Months elapsed since January of `epoch_year` at a record's timestamp.
pub fn record_time(epoch_year: i32, year: i32, daynum: u16, hour: u8) -> f64 {
    let frac_year = (daynum as f64 - 1.0 + hour as f64 / 24.0) / DAYS_PER_YEAR as f64;
    (year - epoch_year) as f64 * 12.0 + 12.0 * frac_year
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidComponent {
    pub amplitude: f64,
    /// Radians per month.
    pub angular_frequency: f64,
    pub phase: f64,
}

impl SinusoidComponent {
    pub fn period_months(&self) -> f64 {
        2.0 * PI / self.angular_frequency
    }
}

/// `mean_level + Σ amplitude·sin(angular_frequency·t + phase)`, `t` in
/// months since January of `epoch_year`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunspotModel {
    pub epoch_year: i32,
    pub mean_level: f64,
    pub components: Vec<SinusoidComponent>,
    /// RMSE of the fit on the series it was fitted to.
    pub residual_rmse: f64,
}

impl SunspotModel {
    pub fn value_at(&self, t_months: f64) -> f64 {
        self.mean_level
            + self
                .components
                .iter()
                .map(|c| c.amplitude * (c.angular_frequency * t_months + c.phase).sin())
                .sum::<f64>()
    }

    pub fn value_at_record(&self, year: i32, daynum: u16, hour: u8) -> f64 {
        self.value_at(record_time(self.epoch_year, year, daynum, hour))
    }
}

struct LinearFit {
    coefficients: Vec<f64>,
    sse: f64,
}

fn linear_fit(t: &[f64], y: &[f64], omegas: &[f64]) -> LinearFit {
    let n = t.len();
    let p = 1 + 2 * omegas.len();
    let design = DMatrix::from_fn(n, p, |r, c| {
        if c == 0 {
            1.0
        } else {
            let w = omegas[(c - 1) / 2];
            if (c - 1) % 2 == 0 {
                (w * t[r]).sin()
            } else {
                (w * t[r]).cos()
            }
        }
    });
    let rhs = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-10)
        .unwrap_or_else(|_| DVector::zeros(p));
    let resid = &rhs - &design * &coef;
    LinearFit {
        coefficients: coef.iter().copied().collect(),
        sse: resid.norm_squared(),
    }
}

fn golden_section(mut lo: f64, mut hi: f64, iterations: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Candidate periods (months): a log-spaced sweep of the resolvable band plus
/// a dense linear sweep around the 11-year solar cycle.
fn candidate_periods(span_months: f64) -> Vec<f64> {
    let p_min: f64 = 3.0;
    let p_max = (2.0 * span_months).max(p_min * 2.0);
    let steps = 400;
    let mut periods: Vec<f64> = (0..=steps)
        .map(|k| p_min * (p_max / p_min).powf(k as f64 / steps as f64))
        .collect();
    periods.extend((96..=168).map(|p| p as f64));
    periods.sort_by(f64::total_cmp);
    periods.dedup();
    periods
}

/// Least-squares fit of `mean + Σ_k a_k sin(ω_k t + φ_k)` to a monthly series.
///
/// Frequencies are added one at a time: each new frequency is chosen by a grid
/// scan followed by golden-section refinement, with amplitudes and phases
/// solved linearly for every candidate. After each addition all frequencies
/// are locally re-refined, accepting only improvements, so the residual is
/// non-increasing in `n_components`.
pub fn fit_sunspot(series: &[MonthlyMean], n_components: usize) -> Result<SunspotModel> {
    if n_components == 0 {
        return Err(Error::Config("sunspot fit needs at least one component".into()));
    }
    let params = 1 + 3 * n_components;
    if series.len() < 24 || series.len() < params {
        return Err(Error::Data(format!(
            "sunspot fit needs at least max(24, {params}) monthly samples, got {}",
            series.len()
        )));
    }
    if let Some(bad) = series.iter().find(|m| !m.mean_ssn.is_finite() || m.month == 0 || m.month > 12) {
        return Err(Error::Data(format!("invalid monthly sample {bad:?}")));
    }
    let epoch_year = series.iter().map(|m| m.year).min().expect("non-empty");
    let t: Vec<f64> = series.iter().map(|m| month_time(epoch_year, m.year, m.month)).collect();
    let y: Vec<f64> = series.iter().map(|m| m.mean_ssn).collect();
    let span = t.iter().copied().fold(f64::NEG_INFINITY, f64::max) - t.iter().copied().fold(f64::INFINITY, f64::min);

    let sse_with = |omegas: &[f64]| linear_fit(&t, &y, omegas).sse;
    let periods = candidate_periods(span.max(1.0));
    let mut omegas: Vec<f64> = Vec::with_capacity(n_components);
    let mut best_sse = sse_with(&[]);

    for _ in 0..n_components {
        let mut trial = omegas.clone();
        trial.push(0.0);
        let k = trial.len() - 1;
        let scan: Vec<f64> = periods
            .iter()
            .map(|&p| {
                trial[k] = 2.0 * PI / p;
                sse_with(&trial)
            })
            .collect();
        let best = (0..periods.len())
            .min_by(|&a, &b| scan[a].total_cmp(&scan[b]))
            .expect("non-empty grid");
        let lo_p = periods[best.saturating_sub(1)];
        let hi_p = periods[(best + 1).min(periods.len() - 1)];
        let (w_lo, w_hi) = (2.0 * PI / hi_p, 2.0 * PI / lo_p);
        let (w, sse) = golden_section(w_lo, w_hi, 80, |w| {
            let mut tr = trial.clone();
            tr[k] = w;
            sse_with(&tr)
        });
        let (w, sse) = if sse <= scan[best] { (w, sse) } else { (2.0 * PI / periods[best], scan[best]) };
        if sse <= best_sse {
            omegas.push(w);
            best_sse = sse;
        } else {
            // Numerically no better than without; keep the component anyway
            // with the scanned frequency so the model has the requested shape.
            omegas.push(2.0 * PI / periods[best]);
            best_sse = sse_with(&omegas).min(best_sse);
        }

        // Local re-refinement of every frequency; improvements only.
        for _pass in 0..2 {
            for j in 0..omegas.len() {
                let w0 = omegas[j];
                let (w, sse) = golden_section(w0 * 0.97, w0 * 1.03, 60, |w| {
                    let mut tr = omegas.clone();
                    tr[j] = w;
                    sse_with(&tr)
                });
                if sse < best_sse {
                    omegas[j] = w;
                    best_sse = sse;
                }
            }
        }
    }

    let fit = linear_fit(&t, &y, &omegas);
    let components = omegas
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let a_sin = fit.coefficients[1 + 2 * k];
            let a_cos = fit.coefficients[2 + 2 * k];
            SinusoidComponent {
                amplitude: a_sin.hypot(a_cos),
                angular_frequency: w,
                phase: a_cos.atan2(a_sin),
            }
        })
        .collect();
    Ok(SunspotModel {
        epoch_year,
        mean_level: fit.coefficients[0],
        components,
        residual_rmse: (fit.sse / y.len() as f64).sqrt(),
    })
}

/// Encodes raw records into model inputs using a fitted solar-index curve.
pub fn encode_records(records: &[RawRecord], sunspot: &SunspotModel) -> Result<Dataset> {
    let mut data = Dataset::new();
    for r in records {
        let (sinhour, coshour) = encode_hour(r.hour as u32)?;
        let (sinday, cosday) = encode_day(r.daynum as u32)?;
        data.push(EncodedRow {
            sinhour,
            coshour,
            sinday,
            cosday,
            ssn: sunspot.value_at_record(r.year, r.daynum, r.hour),
            target_vtec: r.vtec,
        });
    }
    Ok(data)
}

/// Errors unless records are in non-decreasing (year, daynum, hour) order.
pub fn check_chronological(records: &[RawRecord]) -> Result<()> {
    match records.windows(2).position(|w| w[0].sort_key() > w[1].sort_key()) {
        Some(i) => Err(Error::Data(format!(
            "records not in chronological order at index {}",
            i + 1
        ))),
        None => Ok(()),
    }
}

/// Partition of `0..len` into `k` contiguous folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    /// `k + 1` boundaries; fold `f` is `boundaries[f]..boundaries[f + 1]`.
    pub boundaries: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn fold(&self, f: usize) -> Range<usize> {
        self.boundaries[f]..self.boundaries[f + 1]
    }

    /// Every index outside fold `f`, ascending.
    pub fn training_indices(&self, f: usize) -> Vec<usize> {
        let n = *self.boundaries.last().expect("non-empty");
        let held = self.fold(f);
        (0..n).filter(|i| !held.contains(i)).collect()
    }
}

/// Splits `len` chronologically ordered rows into `k` contiguous folds whose
/// sizes differ by at most one; the earliest folds absorb the remainder.
pub fn build_folds(len: usize, k: usize) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::Config("number of folds must be >= 1".into()));
    }
    if len < k {
        return Err(Error::Data(format!("dataset of {len} rows is smaller than {k} folds")));
    }
    let base = len / k;
    let extra = len % k;
    let mut boundaries = Vec::with_capacity(k + 1);
    let mut at = 0;
    boundaries.push(0);
    for f in 0..k {
        at += base + usize::from(f < extra);
        boundaries.push(at);
    }
    Ok(FoldPlan { boundaries })
}

/// Randomly partitions training indices into a fitness set holding
/// `round_half_up(fraction · n)` of them and a validation set with the rest.
/// Both returned sets are sorted ascending.
pub fn split_training<R: Rng + ?Sized>(
    training: &[usize],
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} must be in (0, 1)")));
    }
    let n = training.len();
    let n_fit = (fraction * n as f64 + 0.5).floor() as usize;
    let mut shuffled = training.to_vec();
    shuffled.shuffle(rng);
    let mut fitness = shuffled[..n_fit].to_vec();
    let mut validation = shuffled[n_fit..].to_vec();
    fitness.sort_unstable();
    validation.sort_unstable();
    Ok((fitness, validation))
}

/// Parameters of the synthetic vTEC generator.
///
/// ```text
/// ssn(t)      = ssn_mean − ssn_amplitude·cos(2π·(t − ssn_min_year)·12/ssn_period_months)
/// solar(t)    = solar_offset + ssn(t)/solar_scale
/// diurnal(h)  = max(0, sin(π·(h − sunrise_hour)/daylight_hours))
/// seasonal(d) = 1 + seasonal_amplitude·cos(2π·(d − seasonal_peak_day)/365)
/// vtec        = max(0, base + amplitude·solar·diurnal·seasonal + N(0, noise²))
/// ```
///
/// `t` is in fractional years.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub start_year: i32,
    /// Inclusive.
    pub end_year: i32,
    pub base: f64,
    pub amplitude: f64,
    pub sunrise_hour: f64,
    pub daylight_hours: f64,
    pub seasonal_amplitude: f64,
    pub seasonal_peak_day: f64,
    pub solar_offset: f64,
    pub solar_scale: f64,
    pub ssn_mean: f64,
    pub ssn_amplitude: f64,
    pub ssn_period_months: f64,
    pub ssn_min_year: f64,
    /// Standard deviation of the noise on generated monthly sunspot means.
    pub ssn_noise: f64,
    /// Standard deviation of the additive vTEC noise, TECU.
    pub noise: f64,
    /// Keep a uniformly drawn subset of this many hourly rows (chronological).
    pub rows: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start_year: 1998,
            end_year: 2009,
            base: 5.0,
            amplitude: 20.0,
            sunrise_hour: 5.0,
            daylight_hours: 14.0,
            seasonal_amplitude: 0.35,
            seasonal_peak_day: 172.0,
            solar_offset: 0.5,
            solar_scale: 100.0,
            ssn_mean: 80.0,
            ssn_amplitude: 70.0,
            ssn_period_months: 132.0,
            ssn_min_year: 1996.4,
            ssn_noise: 8.0,
            noise: 2.0,
            rows: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.end_year < self.start_year {
            return Err(Error::Config(format!(
                "empty synthetic date range {}..={}",
                self.start_year, self.end_year
            )));
        }
        if !(self.noise >= 0.0 && self.ssn_noise >= 0.0) {
            return Err(Error::Config("noise levels must be >= 0".into()));
        }
        if self.daylight_hours <= 0.0 || self.ssn_period_months <= 0.0 || self.solar_scale == 0.0 {
            return Err(Error::Config("daylight_hours, ssn_period_months must be > 0 and solar_scale != 0".into()));
        }
        if self.rows == Some(0) {
            return Err(Error::Config("synthetic rows must be >= 1".into()));
        }
        Ok(())
    }

    pub fn year_count(&self) -> usize {
        (self.end_year - self.start_year + 1).max(0) as usize
    }

    pub fn hourly_rows(&self) -> usize {
        self.year_count() * DAYS_PER_YEAR as usize * 24
    }

    /// Smoothed sunspot number of the generator's solar cycle.
    pub fn true_ssn(&self, t_years: f64) -> f64 {
        let phase = 2.0 * PI * (t_years - self.ssn_min_year) * 12.0 / self.ssn_period_months;
        self.ssn_mean - self.ssn_amplitude * phase.cos()
    }

    pub fn diurnal(&self, hour: u8) -> f64 {
        (PI * (hour as f64 - self.sunrise_hour) / self.daylight_hours).sin().max(0.0)
    }

    pub fn seasonal(&self, daynum: u16) -> f64 {
        1.0 + self.seasonal_amplitude * (2.0 * PI * (daynum as f64 - self.seasonal_peak_day) / DAYS_PER_YEAR as f64).cos()
    }

    /// The generator's value before noise and clipping.
    pub fn noiseless_vtec(&self, year: i32, daynum: u16, hour: u8) -> f64 {
        let t_years = year as f64 + (daynum as f64 - 1.0 + hour as f64 / 24.0) / DAYS_PER_YEAR as f64;
        let solar = self.solar_offset + self.true_ssn(t_years) / self.solar_scale;
        self.base + self.amplitude * solar * self.diurnal(hour) * self.seasonal(daynum)
    }
}

/// Generates hourly records over the configured years (365 days each).
pub fn synth_vtec<R: Rng + ?Sized>(config: &SynthConfig, rng: &mut R) -> Result<Vec<RawRecord>> {
    config.validate()?;
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::Config(e.to_string()))?;
    let total = config.hourly_rows();
    let keep: Option<Vec<usize>> = match config.rows {
        Some(n) if n < total => {
            let mut idx = rand::seq::index::sample(rng, total, n).into_vec();
            idx.sort_unstable();
            Some(idx)
        }
        _ => None,
    };
    let slot = |i: usize| {
        let year = config.start_year + (i / (365 * 24)) as i32;
        let daynum = ((i / 24) % 365 + 1) as u16;
        let hour = (i % 24) as u8;
        (year, daynum, hour)
    };
    let indices: Box<dyn Iterator<Item = usize>> = match keep {
        Some(v) => Box::new(v.into_iter()),
        None => Box::new(0..total),
    };
    let mut out = Vec::with_capacity(config.rows.unwrap_or(total).min(total));
    for i in indices {
        let (year, daynum, hour) = slot(i);
        let mut v = config.noiseless_vtec(year, daynum, hour);
        if config.noise > 0.0 {
            v += noise.sample(rng);
        }
        out.push(RawRecord {
            year,
            daynum,
            hour,
            vtec: v.max(0.0),
        });
    }
    Ok(out)
}

/// Monthly mean sunspot numbers for the generator's cycle, with optional noise.
pub fn synth_sunspot_monthly<R: Rng + ?Sized>(config: &SynthConfig, rng: &mut R) -> Result<Vec<MonthlyMean>> {
    config.validate()?;
    let noise = Normal::new(0.0, config.ssn_noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::with_capacity(config.year_count() * 12);
    for year in config.start_year..=config.end_year {
        for month in 1..=12u8 {
            let t = year as f64 + (month as f64 - 0.5) / 12.0;
            let mut v = config.true_ssn(t);
            if config.ssn_noise > 0.0 {
                v += noise.sample(rng);
            }
            out.push(MonthlyMean {
                year,
                month,
                mean_ssn: v.max(0.0),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column_map<const N: usize>(path: &Path, headers: &csv::StringRecord, names: [&str; N]) -> Result<[usize; N]> {
    let mut out = [0usize; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::DataRow {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column `{name}` (expected header {})", names.join(",")),
        })?;
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(idx).unwrap_or("");
    raw.parse::<T>().map_err(|_| Error::DataRow {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {name} from `{raw}`"),
    })
}

fn read_rows<T>(
    path: &Path,
    mut each: impl FnMut(&csv::StringRecord, u64) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = open_reader(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::DataRow {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(each(&rec, line)?);
    }
    Ok(out)
}

fn with_line<T>(path: &Path, line: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Data(message) => Error::DataRow {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// Reads `year,daynum,hour,vtec`.
pub fn load_raw_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let headers = open_reader(path)?.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let cols = column_map(path, &headers, ["year", "daynum", "hour", "vtec"])?;
    read_rows(path, |rec, line| {
        let year: i32 = field(path, rec, cols[0], "year")?;
        let daynum: u16 = field(path, rec, cols[1], "daynum")?;
        let hour: u8 = field(path, rec, cols[2], "hour")?;
        let vtec: f64 = field(path, rec, cols[3], "vtec")?;
        with_line(path, line, RawRecord::new(year, daynum, hour, vtec))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes lines produced by `body` to `path`, mapping I/O errors to the path.
pub(crate) fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_raw_csv(records: &[RawRecord], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), |w| {
        writeln!(w, "year,daynum,hour,vtec")?;
        for r in records {
            writeln!(w, "{},{},{},{}", r.year, r.daynum, r.hour, r.vtec)?;
        }
        Ok(())
    })
}

/// Reads `sinhour,coshour,sinday,cosday,ssn,vtec`.
pub fn load_encoded_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let headers = open_reader(path)?.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let cols = column_map(path, &headers, ["sinhour", "coshour", "sinday", "cosday", "ssn", "vtec"])?;
    let rows = read_rows(path, |rec, line| {
        let mut v = [0.0f64; 6];
        let names = ["sinhour", "coshour", "sinday", "cosday", "ssn", "vtec"];
        for k in 0..6 {
            v[k] = field(path, rec, cols[k], names[k])?;
            if !v[k].is_finite() {
                return Err(Error::DataRow {
                    path: path.to_path_buf(),
                    line,
                    message: format!("{} is not finite", names[k]),
                });
            }
        }
        Ok(EncodedRow {
            sinhour: v[0],
            coshour: v[1],
            sinday: v[2],
            cosday: v[3],
            ssn: v[4],
            target_vtec: v[5],
        })
    })?;
    Ok(Dataset::from_rows(rows))
}

pub fn write_encoded_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), |w| {
        writeln!(w, "sinhour,coshour,sinday,cosday,ssn,vtec")?;
        for r in data.rows() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.sinhour, r.coshour, r.sinday, r.cosday, r.ssn, r.target_vtec
            )?;
        }
        Ok(())
    })
}

/// Reads `year,month,mean_ssn`.
pub fn load_sunspot_csv(path: impl AsRef<Path>) -> Result<Vec<MonthlyMean>> {
    let path = path.as_ref();
    let headers = open_reader(path)?.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    let cols = column_map(path, &headers, ["year", "month", "mean_ssn"])?;
    read_rows(path, |rec, line| {
        let year: i32 = field(path, rec, cols[0], "year")?;
        let month: u8 = field(path, rec, cols[1], "month")?;
        let mean_ssn: f64 = field(path, rec, cols[2], "mean_ssn")?;
        if !(1..=12).contains(&month) || !mean_ssn.is_finite() {
            return Err(Error::DataRow {
                path: path.to_path_buf(),
                line,
                message: format!("month {month} outside 1..=12 or non-finite mean_ssn"),
            });
        }
        Ok(MonthlyMean { year, month, mean_ssn })
    })
}

pub fn write_sunspot_csv(series: &[MonthlyMean], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), |w| {
        writeln!(w, "year,month,mean_ssn")?;
        for m in series {
            writeln!(w, "{},{},{}", m.year, m.month, m.mean_ssn)?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hour_encoding_examples() {
        assert_eq!(encode_hour(0).unwrap(), (0.0, 1.0));
        let (s, c) = encode_hour(6).unwrap();
        assert!((s - 1.0).abs() < 1e-15 && c.abs() < 1e-15);
        let (s, c) = encode_hour(18).unwrap();
        assert!((s + 1.0).abs() < 1e-15 && c.abs() < 1e-15);
        assert!(encode_hour(24).is_err());
    }

    #[test]
    fn day_encoding_examples() {
        let (s, c) = encode_day(365).unwrap();
        assert!(s.abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
        // sin(2π/365), cos(2π/365) evaluated independently
        let (s, c) = encode_day(1).unwrap();
        assert!((s - 0.017213356).abs() < 1e-8, "{s}");
        assert!((c - 0.999851839).abs() < 1e-8, "{c}");
        let (s0, c0) = encode_day(365).unwrap();
        let jump = ((s - s0).powi(2) + (c - c0).powi(2)).sqrt();
        assert!((jump - 0.0172).abs() < 1e-4, "{jump}");
        assert!(encode_day(0).is_err() && encode_day(366).is_err());
    }

    #[test]
    fn quadrature_identity_and_midnight_wrap() {
        for h in 0..24 {
            let (s, c) = encode_hour(h).unwrap();
            assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }
        for d in 1..=365 {
            let (s, c) = encode_day(d).unwrap();
            assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }
        let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let h = |x| encode_hour(x).unwrap();
        assert!((dist(h(23), h(0)) - dist(h(0), h(1))).abs() < 1e-12);
    }

    #[test]
    fn leap_day_clamped() {
        assert_eq!(RawRecord::new(2000, 366, 0, 1.0).unwrap().daynum, 365);
        assert!(RawRecord::new(2000, 367, 0, 1.0).is_err());
        assert!(RawRecord::new(2000, 10, 0, -1.0).is_err());
    }

    fn series(mut f: impl FnMut(f64) -> f64, months: usize) -> Vec<MonthlyMean> {
        (0..months)
            .map(|i| {
                let year = 1998 + (i / 12) as i32;
                let month = (i % 12 + 1) as u8;
                let t = month_time(1998, year, month);
                MonthlyMean { year, month, mean_ssn: f(t) }
            })
            .collect()
    }

    #[test]
    fn sunspot_recovers_single_cycle() {
        let s = series(|t| 50.0 + 40.0 * (2.0 * PI * t / 132.0).sin(), 144);
        let m = fit_sunspot(&s, 1).unwrap();
        let c = m.components[0];
        assert!((c.amplitude - 40.0).abs() < 0.5, "{c:?}");
        assert!((c.period_months() - 132.0).abs() < 1.0, "{c:?}");
        assert!((m.mean_level - 50.0).abs() < 0.5);
        assert!(m.residual_rmse < 1e-3, "{}", m.residual_rmse);
    }

    #[test]
    fn sunspot_constant_series() {
        let s = series(|_| 42.0, 60);
        let m = fit_sunspot(&s, 1).unwrap();
        assert!(m.components[0].amplitude < 1e-6);
        assert!((m.mean_level - 42.0).abs() < 1e-9);
    }

    #[test]
    fn sunspot_white_noise_explains_little() {
        let normal = Normal::new(0.0, 10.0).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = series(|_| 100.0 + normal.sample(&mut rng), 240);
            let mean = s.iter().map(|m| m.mean_ssn).sum::<f64>() / s.len() as f64;
            let sd = (s.iter().map(|m| (m.mean_ssn - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
            let m = fit_sunspot(&s, 1).unwrap();
            assert!(m.residual_rmse > 0.85 * sd && m.residual_rmse <= sd + 1e-9, "{} vs {sd}", m.residual_rmse);
        }
    }

    #[test]
    fn sunspot_residual_non_increasing_in_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 8.0).unwrap();
        let s = series(
            |t| 80.0 - 70.0 * (2.0 * PI * t / 130.0).cos() + 10.0 * (2.0 * PI * t / 27.0).sin() + normal.sample(&mut rng),
            144,
        );
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let m = fit_sunspot(&s, k).unwrap();
            assert!(m.residual_rmse <= prev + 1e-12, "k={k}: {} > {prev}", m.residual_rmse);
            prev = m.residual_rmse;
        }
    }

    #[test]
    fn sunspot_rejects_short_series() {
        assert!(fit_sunspot(&series(|_| 1.0, 20), 1).is_err());
        assert!(fit_sunspot(&series(|_| 1.0, 30), 10).is_err());
    }

    #[test]
    fn fold_examples() {
        assert_eq!(build_folds(100, 10).unwrap().boundaries, (0..=10).map(|i| i * 10).collect::<Vec<_>>());
        let p = build_folds(103, 10).unwrap();
        let sizes: Vec<usize> = (0..10).map(|f| p.fold(f).len()).collect();
        assert_eq!(sizes, vec![11, 11, 11, 10, 10, 10, 10, 10, 10, 10]);
        let p = build_folds(10, 10).unwrap();
        assert!((0..10).all(|f| p.fold(f).len() == 1));
        assert!(build_folds(9, 10).is_err());
        let t = build_folds(103, 10).unwrap().training_indices(0);
        assert_eq!(t.len(), 92);
        assert_eq!(t[0], 11);
    }

    #[test]
    fn split_examples() {
        let idx: Vec<usize> = (0..100).collect();
        let (a, b) = split_training(&idx, 0.67, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((a.len(), b.len()), (67, 33));
        let (c, d) = split_training(&idx, 0.67, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((&a, &b), (&c, &d));
        let (a, b) = split_training(&[5, 6, 7], 0.67, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((a.len(), b.len()), (2, 1));
        assert!(split_training(&idx, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn synth_diurnal_peak_and_determinism() {
        let cfg = SynthConfig {
            start_year: 2001,
            end_year: 2001,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let recs = synth_vtec(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(recs.len(), 365 * 24);
        assert!(recs[12].vtec > recs[0].vtec);
        let again = synth_vtec(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(recs, again);
        check_chronological(&recs).unwrap();
    }

    #[test]
    fn synth_noise_level() {
        let cfg = SynthConfig {
            noise: 2.0,
            rows: Some(10_000),
            ..SynthConfig::default()
        };
        let recs = synth_vtec(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(recs.len(), 10_000);
        // base is 5 TECU so clipping at zero is negligible at σ = 2
        let resid: Vec<f64> = recs
            .iter()
            .map(|r| r.vtec - cfg.noiseless_vtec(r.year, r.daynum, r.hour))
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let sd = (resid.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64).sqrt();
        assert!((sd - 2.0).abs() < 0.2, "{sd}");
    }

    #[test]
    fn synth_rejects_empty_range() {
        let cfg = SynthConfig {
            start_year: 2005,
            end_year: 2004,
            ..SynthConfig::default()
        };
        assert!(synth_vtec(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            rows: Some(1000),
            ..SynthConfig::default()
        };
        let recs = synth_vtec(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let p = dir.path().join("raw.csv");
        write_raw_csv(&recs, &p).unwrap();
        assert_eq!(load_raw_csv(&p).unwrap(), recs);

        std::fs::write(&p, "year,daynum,hour,vtec\n2000,1,0,3.5\n2000,1,24,3.5\n").unwrap();
        match load_raw_csv(&p).unwrap_err() {
            Error::DataRow { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        std::fs::write(&p, "year,daynum,hour,vtec\n").unwrap();
        assert!(load_raw_csv(&p).unwrap().is_empty());
        std::fs::write(&p, "year,daynum,vtec\n2000,1,2\n").unwrap();
        assert!(load_raw_csv(&p).unwrap_err().to_string().contains("hour"));
        std::fs::write(&p, "year,daynum,hour,vtec\n2000,x,1,2\n").unwrap();
        assert!(load_raw_csv(&p).unwrap_err().to_string().contains(":2:"));

        let sun = synth_sunspot_monthly(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let model = fit_sunspot(&sun, 1).unwrap();
        let enc = encode_records(&recs, &model).unwrap();
        let pe = dir.path().join("enc.csv");
        write_encoded_csv(&enc, &pe).unwrap();
        assert_eq!(load_encoded_csv(&pe).unwrap(), enc);
        // raw data is not an encoded table, and vice versa
        assert!(load_encoded_csv(&p).is_err());
        assert!(load_raw_csv(&pe).is_err());

        let ps = dir.path().join("ssn.csv");
        write_sunspot_csv(&sun, &ps).unwrap();
        assert_eq!(load_sunspot_csv(&ps).unwrap(), sun);
    }

    #[test]
    fn chronological_check() {
        let a = RawRecord::new(2000, 2, 0, 1.0).unwrap();
        let b = RawRecord::new(2000, 1, 5, 1.0).unwrap();
        assert!(check_chronological(&[a, b]).is_err());
        assert!(check_chronological(&[b, a]).is_ok());
    }
}
