//! CSV and JSON file formats.
//!
//! Floats are written with 17 significant digits so a round trip through a
//! file reproduces every value bitwise. Output files are written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::metrics::StepRecord;
use super::runner::{SeriesRow, StreamInput};
use super::streams::OracleStep;
use crate::conformal::BetaValue;
use crate::error::{invalid, Error, Result};
use crate::forecasters::PanelRow;

/// `x` with 17 significant digits; `inf`, `-inf` and `NaN` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = tmp_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// Pretty JSON with 17-significant-digit floats.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `steps.csv` bytes. Expert columns appear when any record carries them.
pub fn steps_csv(records: &[StepRecord]) -> Result<Vec<u8>> {
    let panel = records.iter().any(|r| r.unit.is_some());
    let k = records
        .iter()
        .filter_map(|r| r.expert_alphas.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["t".into()];
    if panel {
        header.push("unit".into());
    }
    for h in [
        "alpha_t",
        "beta_t",
        "err_t",
        "covered",
        "interval_lo",
        "interval_hi",
        "width",
        "interval_flag",
        "eta_t",
        "selected_expert",
    ] {
        header.push(h.into());
    }
    header.extend((0..k).map(|i| format!("alpha_e{i}")));
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in records {
        row.clear();
        row.push(r.t.to_string());
        if panel {
            row.push(r.unit.clone().unwrap_or_default());
        }
        row.push(fmt_f64(r.alpha_t));
        row.push(fmt_f64(r.beta_t));
        row.push(u8::from(r.err_t).to_string());
        row.push(opt(r.covered.map(u8::from)));
        match r.interval {
            Some(iv) => {
                row.push(fmt_f64(iv.lo));
                row.push(fmt_f64(iv.hi));
                row.push(fmt_f64(iv.width));
                row.push(iv.flag.as_str().into());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(r.eta_t.map(fmt_f64).unwrap_or_default());
        row.push(opt(r.selected_expert));
        match &r.expert_alphas {
            Some(a) => row.extend(a.iter().map(|x| fmt_f64(*x))),
            None => row.extend(std::iter::repeat_n(String::new(), k)),
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_steps(path: &Path, records: &[StepRecord]) -> Result<()> {
    write_atomic(path, &steps_csv(records)?)
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
}

/// `t,beta,alpha_star`, with `t` from 1.
pub fn write_beta_stream(path: &Path, steps: &[OracleStep]) -> Result<()> {
    write_table(
        path,
        &["t", "beta", "alpha_star"],
        steps
            .iter()
            .enumerate()
            .map(|(i, s)| vec![(i + 1).to_string(), fmt_f64(s.beta.get()), fmt_f64(s.alpha_star)]),
    )
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let with_scale = rows.iter().any(|r| r.scale.is_some());
    let header: &[&str] = if with_scale {
        &["t", "y", "point_pred", "scale"]
    } else {
        &["t", "y", "point_pred"]
    };
    write_table(
        path,
        header,
        rows.iter().map(|r| {
            let mut v = vec![r.t.to_string(), fmt_f64(r.y), fmt_f64(r.point)];
            if with_scale {
                v.push(r.scale.map(fmt_f64).unwrap_or_default());
            }
            v
        }),
    )
}

pub fn write_panel(path: &Path, rows: &[PanelRow]) -> Result<()> {
    write_table(
        path,
        &["t", "unit", "y", "y_hat", "y_lag"],
        rows.iter().map(|r| {
            vec![
                r.t.to_string(),
                r.unit.clone(),
                fmt_f64(r.y),
                fmt_f64(r.y_hat),
                fmt_f64(r.y_lag),
            ]
        }),
    )
}

/// `t,score` rows.
pub fn write_scores(path: &Path, rows: &[(u64, f64)]) -> Result<()> {
    write_table(
        path,
        &["t", "score"],
        rows.iter().map(|(t, s)| vec![t.to_string(), fmt_f64(*s)]),
    )
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Deserialize)]
struct BetaRow {
    t: u64,
    beta: f64,
}

#[derive(Deserialize)]
struct ScoreRow {
    t: u64,
    score: f64,
}

#[derive(Deserialize)]
struct SeriesCsvRow {
    t: u64,
    y: f64,
    point_pred: f64,
    #[serde(default)]
    scale: Option<f64>,
}

pub fn read_betas(path: &Path) -> Result<Vec<(u64, BetaValue)>> {
    read_rows::<BetaRow>(path)?
        .into_iter()
        .map(|r| Ok((r.t, BetaValue::new(r.beta)?)))
        .collect()
}

pub fn read_scores(path: &Path) -> Result<Vec<(u64, f64)>> {
    Ok(read_rows::<ScoreRow>(path)?.into_iter().map(|r| (r.t, r.score)).collect())
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    Ok(read_rows::<SeriesCsvRow>(path)?
        .into_iter()
        .map(|r| SeriesRow {
            t: r.t,
            y: r.y,
            point: r.point_pred,
            scale: r.scale,
        })
        .collect())
}

pub fn read_panel(path: &Path) -> Result<Vec<PanelRow>> {
    read_rows(path)
}

/// Reads a single-series input, picking the schema from the header row.
pub fn read_stream(path: &Path) -> Result<StreamInput> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = r.headers()?.clone();
    let has = |name: &str| headers.iter().any(|h| h == name);
    if !has("t") {
        return Err(invalid(format!("{}: header must contain a `t` column", path.display())));
    }
    if has("beta") {
        Ok(StreamInput::Betas(read_betas(path)?))
    } else if has("score") {
        Ok(StreamInput::Scores(read_scores(path)?))
    } else if has("y") && has("point_pred") {
        Ok(StreamInput::Series(read_series(path)?))
    } else {
        Err(invalid(format!(
            "{}: expected `t,beta`, `t,score` or `t,y,point_pred[,scale]` columns",
            path.display()
        )))
    }
}

/// Minimal `steps.csv` reader for recomputing metrics.
pub fn read_steps(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ct), Some(ca), Some(cb), Some(ce)) = (col("t"), col("alpha_t"), col("beta_t"), col("err_t")) else {
        return Err(invalid(format!("{}: not a steps file", path.display())));
    };
    let cu = col("unit");
    let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        out.push(StepRecord {
            t: field(ct).parse().map_err(|e| Error::Parse(format!("t: {e}")))?,
            unit: cu.map(|i| field(i).to_string()),
            alpha_t: parse_f(field(ca))?,
            beta_t: parse_f(field(cb))?,
            err_t: match field(ce) {
                "1" => true,
                "0" => false,
                other => return Err(Error::Parse(format!("err_t must be 0 or 1, got '{other}'"))),
            },
            covered: None,
            interval: None,
            eta_t: None,
            selected_expert: None,
            expert_alphas: None,
        });
    }
    Ok(out)
}
