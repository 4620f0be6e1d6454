//! Persistence: snapshot and trajectory binaries, operator files, the flat
//! run configuration with its hash, and the CSV/JSON output schemas.
//!
//! Binary layouts are little-endian IEEE-754 doubles throughout. Snapshot:
//! magic "SNLS1", then d, N, the d periods and the time t as doubles,
//! followed by (2N+1)^d complex doubles in row-major mode order with each
//! axis running -N..N. A trajectory file ("SNLT1") prepends the sample count
//! and stores consecutive (t, coefficients) records with a shared header.
//! CSV and JSON outputs embed the configuration hash and seed; `check-file`
//! re-derives the hash from the embedded configuration text.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::ensemble::{EnsembleConfig, InitialData, Observable};
use crate::error::{Error, Result};
use crate::noise::{NoiseMode, NoiseSpec, SmoothingOperator};
use crate::norms::Trajectory;
use crate::stepper::{Scheme, StepperConfig};
use crate::torus::{NonlinearitySpec, Sign, SpectralField, TorusSpec};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"SNLS1";
pub const TRAJECTORY_MAGIC: &[u8; 5] = b"SNLT1";
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Binary helpers
// ---------------------------------------------------------------------------

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn write_field_coeffs(w: &mut impl Write, field: &SpectralField) -> Result<()> {
    for c in field.coeffs() {
        write_f64(w, c.re)?;
        write_f64(w, c.im)?;
    }
    Ok(())
}

fn read_field_coeffs(r: &mut impl Read, spec: &TorusSpec) -> Result<SpectralField> {
    let mut coeffs = Vec::with_capacity(spec.mode_count());
    for _ in 0..spec.mode_count() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        coeffs.push(Complex64::new(re, im));
    }
    SpectralField::from_coeffs(spec, coeffs)
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn write_torus_header(w: &mut impl Write, spec: &TorusSpec) -> Result<()> {
    write_f64(w, spec.dim() as f64)?;
    write_f64(w, f64::from(spec.cutoff()))?;
    for &a in spec.periods() {
        write_f64(w, a)?;
    }
    Ok(())
}

fn read_torus_header(r: &mut impl Read, path: &Path) -> Result<TorusSpec> {
    let d = read_f64(r)? as usize;
    if !(1..=3).contains(&d) {
        return Err(format_err(path, "dimension out of range"));
    }
    let n = read_f64(r)?;
    let mut periods = Vec::with_capacity(d);
    for _ in 0..d {
        periods.push(read_f64(r)?);
    }
    TorusSpec::with_periods(d, &periods, n as u32)
}

// ---------------------------------------------------------------------------
// Snapshot and trajectory files
// ---------------------------------------------------------------------------

pub fn write_snapshot(path: &Path, field: &SpectralField, t: f64) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    write_torus_header(&mut w, field.spec())?;
    write_f64(&mut w, t)?;
    write_field_coeffs(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, f64)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(format_err(path, "bad magic, not a snapshot"));
    }
    let spec = read_torus_header(&mut r, path)?;
    let t = read_f64(&mut r)?;
    let field = read_field_coeffs(&mut r, &spec)?;
    Ok((field, t))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(TRAJECTORY_MAGIC)?;
    write_torus_header(&mut w, traj.spec())?;
    write_f64(&mut w, traj.len() as f64)?;
    for i in 0..traj.len() {
        let (t, field) = traj.sample(i);
        write_f64(&mut w, t)?;
        write_field_coeffs(&mut w, field)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != TRAJECTORY_MAGIC {
        return Err(format_err(path, "bad magic, not a trajectory"));
    }
    let spec = read_torus_header(&mut r, path)?;
    let count = read_f64(&mut r)? as usize;
    let mut traj = Trajectory::new(&spec);
    for _ in 0..count {
        let t = read_f64(&mut r)?;
        let field = read_field_coeffs(&mut r, &spec)?;
        traj.push(t, field)?;
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Operator files: text header + binary table
// ---------------------------------------------------------------------------

pub fn write_operator(path: &Path, op: &SmoothingOperator, s_list: &[f64]) -> Result<()> {
    let spec = op.spec();
    let mut w = BufWriter::new(fs::File::create(path)?);
    let kind = if op.is_diagonal() { "diagonal" } else { "dense" };
    writeln!(w, "snls-operator v1")?;
    writeln!(w, "kind {kind}")?;
    writeln!(w, "d {}", spec.dim())?;
    writeln!(w, "N {}", spec.cutoff())?;
    let periods: Vec<String> = spec.periods().iter().map(|p| format!("{p}")).collect();
    writeln!(w, "periods {}", periods.join(" "))?;
    let s_text: Vec<String> = s_list.iter().map(|s| format!("{s}")).collect();
    writeln!(w, "s {}", s_text.join(" "))?;
    writeln!(w, "data")?;
    match op {
        SmoothingOperator::Diagonal { multipliers, .. } => {
            for &m in multipliers {
                write_f64(&mut w, m)?;
            }
        }
        SmoothingOperator::Dense { matrix, .. } => {
            for c in matrix {
                write_f64(&mut w, c.re)?;
                write_f64(&mut w, c.im)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_operator(path: &Path) -> Result<SmoothingOperator> {
    let bytes = fs::read(path)?;
    let marker = b"data\n";
    let data_at = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| format_err(path, "missing data marker"))?;
    let header = std::str::from_utf8(&bytes[..data_at])
        .map_err(|_| format_err(path, "header is not UTF-8"))?;
    let mut kind = None;
    let mut d = None;
    let mut n = None;
    let mut periods: Option<Vec<f64>> = None;
    for line in header.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("snls-operator") => {}
            Some("kind") => kind = parts.next().map(str::to_string),
            Some("d") => d = parts.next().and_then(|v| v.parse::<usize>().ok()),
            Some("N") => n = parts.next().and_then(|v| v.parse::<u32>().ok()),
            Some("periods") => {
                periods = Some(
                    parts
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| format_err(path, "bad periods"))?,
                )
            }
            Some("s") | None => {}
            Some(other) => return Err(format_err(path, format!("unknown header key {other}"))),
        }
    }
    let d = d.ok_or_else(|| format_err(path, "missing d"))?;
    let n = n.ok_or_else(|| format_err(path, "missing N"))?;
    let periods = periods.unwrap_or_else(|| vec![1.0; d]);
    let spec = TorusSpec::with_periods(d, &periods, n)?;
    let kind = kind.ok_or_else(|| format_err(path, "missing kind"))?;
    let payload = &bytes[data_at + marker.len()..];
    let m = spec.mode_count();
    match kind.as_str() {
        "diagonal" => {
            if payload.len() != 8 * m {
                return Err(format_err(path, "diagonal table size mismatch"));
            }
            let mults = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            SmoothingOperator::diagonal(&spec, mults)
        }
        "dense" => {
            if payload.len() != 16 * m * m {
                return Err(format_err(path, "dense table size mismatch"));
            }
            let matrix = payload
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect();
            SmoothingOperator::dense(&spec, matrix)
        }
        other => Err(format_err(path, format!("unknown operator kind {other}"))),
    }
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value text with CLI override
// ---------------------------------------------------------------------------

/// Flat run configuration. Keys and values are plain strings; typed access
/// and cross-field validation happen in [`RunConfig::build`]. Canonical
/// serialization is sorted `key=value` lines, which the config hash covers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pairs: BTreeMap<String, String>,
}

/// FNV-1a over the canonical serialization.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid("config", format!("line {}: expected key=value", lineno + 1))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(RunConfig { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Single-line form embedded in output files (fields joined by ';').
    pub fn serialize_inline(&self) -> String {
        self.pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_inline(text: &str) -> Result<Self> {
        Self::parse(&text.replace(';', "\n"))
    }

    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.serialize().as_bytes()))
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.pairs.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn typed<T: std::str::FromStr>(
        &self,
        key: &str,
        default: T,
        violations: &mut Vec<String>,
    ) -> T {
        match self.pairs.get(key) {
            None => default,
            Some(raw) => raw.parse::<T>().unwrap_or_else(|_| {
                violations.push(format!("key `{key}`: cannot parse `{raw}`"));
                default
            }),
        }
    }

    /// Validates every field and cross-field invariant, returning the fully
    /// built domain objects. All violations are reported together.
    pub fn build(&self) -> Result<BuiltConfig> {
        let mut violations = Vec::new();

        let d: usize = self.typed("d", 1, &mut violations);
        let n: u32 = self.typed("N", 16, &mut violations);
        let periods: Vec<f64> = match self.pairs.get("periods") {
            None => vec![1.0; d],
            Some(raw) => {
                let parsed: std::result::Result<Vec<f64>, _> =
                    raw.split(',').map(|v| v.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(v) => v,
                    Err(_) => {
                        violations.push(format!("key `periods`: cannot parse `{raw}`"));
                        vec![1.0; d]
                    }
                }
            }
        };
        let torus = match TorusSpec::with_periods(d, &periods, n) {
            Ok(t) => t,
            Err(e) => {
                violations.push(e.to_string());
                TorusSpec::new(1, 1).unwrap()
            }
        };

        let k: u32 = self.typed("k", 1, &mut violations);
        let sign = match self.get("sign").unwrap_or("defocusing") {
            "defocusing" => Sign::Defocusing,
            "focusing" => Sign::Focusing,
            other => {
                violations.push(format!("key `sign`: unknown value `{other}`"));
                Sign::Defocusing
            }
        };
        let nl = if self.get("nonlinearity").unwrap_or("on") == "off" {
            None
        } else {
            match NonlinearitySpec::new(k, sign) {
                Ok(nl) => Some(nl),
                Err(e) => {
                    violations.push(e.to_string());
                    None
                }
            }
        };

        let scheme = match self.get("scheme").unwrap_or("strang") {
            "strang" => Scheme::DeterministicStrang,
            "additive-exp-euler" => Scheme::AdditiveExpEuler,
            "multiplicative-ito-euler" => Scheme::MultiplicativeItoEuler,
            "multiplicative-strat-midpoint" => Scheme::MultiplicativeStratMidpoint,
            other => {
                violations.push(format!("key `scheme`: unknown value `{other}`"));
                Scheme::DeterministicStrang
            }
        };

        let noise_mode = match self.get("noise").unwrap_or("none") {
            "none" => None,
            "additive-ito" => Some(NoiseMode::AdditiveIto),
            "multiplicative-ito" => Some(NoiseMode::MultiplicativeIto),
            "multiplicative-strat-real" => Some(NoiseMode::MultiplicativeStratReal),
            other => {
                violations.push(format!("key `noise`: unknown value `{other}`"));
                None
            }
        };
        let noise = match noise_mode {
            None => None,
            Some(mode) => {
                match build_operator(self.get("phi").unwrap_or("band:1:1"), &torus) {
                    Ok(op) => match NoiseSpec::new(mode, op) {
                        Ok(spec) => Some(spec),
                        Err(e) => {
                            violations.push(e.to_string());
                            None
                        }
                    },
                    Err(e) => {
                        violations.push(e.to_string());
                        None
                    }
                }
            }
        };

        let dt: f64 = self.typed("dt", 1e-3, &mut violations);
        let dealias = self.get("dealias").unwrap_or("on") != "off";
        let stepper = StepperConfig {
            scheme,
            dt,
            dealias,
            nl,
            noise,
        };
        if let Err(e) = stepper.validate() {
            violations.push(e.to_string());
        }

        let horizon: f64 = self.typed("T", 1.0, &mut violations);
        let paths: usize = self.typed("paths", 1, &mut violations);
        let base_seed: u64 = self.typed("seed", 0, &mut violations);
        let stride: usize = self.typed("stride", 1, &mut violations);

        let u0 = match self.get("u0").unwrap_or("smooth:0.5,0.8") {
            "zero" => InitialData::Zero,
            spec_str => match parse_u0(spec_str) {
                Ok(u0) => u0,
                Err(e) => {
                    violations.push(e.to_string());
                    InitialData::Zero
                }
            },
        };

        let observables = match self.get("observables").unwrap_or("mass,energy") {
            "" => Vec::new(),
            raw => {
                let mut list = Vec::new();
                for item in raw.split(',') {
                    let item = item.trim();
                    if item == "mass" {
                        list.push(Observable::Mass);
                    } else if item == "energy" {
                        list.push(Observable::Energy);
                    } else if let Some(s) = item.strip_prefix("hs:") {
                        match s.parse::<f64>() {
                            Ok(v) => list.push(Observable::Hs(v)),
                            Err(_) => violations.push(format!("observable `{item}`: bad exponent")),
                        }
                    } else {
                        violations.push(format!("unknown observable `{item}`"));
                    }
                }
                list
            }
        };

        let moment_orders: Vec<u32> = match self.pairs.get("moments") {
            None => vec![1],
            Some(raw) => {
                let parsed: std::result::Result<Vec<u32>, _> =
                    raw.split(',').map(|v| v.trim().parse::<u32>()).collect();
                match parsed {
                    Ok(v) => v,
                    Err(_) => {
                        violations.push(format!("key `moments`: cannot parse `{raw}`"));
                        vec![1]
                    }
                }
            }
        };

        // Truncated-evolution block.
        let trunc_r: f64 = self.typed("R", 0.0, &mut violations);
        let trunc_s: f64 = self.typed("s", 0.0, &mut violations);
        let trunc_b: f64 = self.typed("b", 0.375, &mut violations);
        if self.pairs.contains_key("R") {
            if !(trunc_r > 0.0) {
                violations.push("key `R`: cutoff radius must be positive".to_string());
            }
            if !(0.0..0.5).contains(&trunc_b) {
                violations.push("key `b`: sharp-window norms require 0 ≤ b < 1/2".to_string());
            }
        }
        let refresh: usize = self.typed("refresh", 1, &mut violations);

        let hs_s: f64 = self.typed("hs-s", 1.0, &mut violations);

        let ensemble = EnsembleConfig {
            torus: torus.clone(),
            u0,
            paths,
            base_seed,
            stepper: stepper.clone(),
            horizon,
            stride,
            observables,
            moment_orders,
        };
        if let Err(Error::Validation(more)) = ensemble.validate() {
            for v in more {
                if !violations.contains(&v) {
                    violations.push(v);
                }
            }
        }

        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(BuiltConfig {
            config: self.clone(),
            torus,
            stepper,
            ensemble,
            horizon,
            stride,
            hs_s,
            truncation: self.pairs.contains_key("R").then_some((trunc_r, trunc_s, trunc_b, refresh)),
        })
    }
}

fn parse_u0(raw: &str) -> Result<InitialData> {
    if let Some(rest) = raw.strip_prefix("constant:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::invalid("u0", "constant:<re>,<im>"));
        }
        let re = parts[0].parse().map_err(|_| Error::invalid("u0", "bad real part"))?;
        let im = parts[1].parse().map_err(|_| Error::invalid("u0", "bad imaginary part"))?;
        return Ok(InitialData::Constant { re, im });
    }
    if let Some(rest) = raw.strip_prefix("smooth:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::invalid("u0", "smooth:<amplitude>,<decay>"));
        }
        let amplitude = parts[0].parse().map_err(|_| Error::invalid("u0", "bad amplitude"))?;
        let decay = parts[1].parse().map_err(|_| Error::invalid("u0", "bad decay"))?;
        return Ok(InitialData::Smooth { amplitude, decay });
    }
    Err(Error::invalid("u0", format!("unknown initial data `{raw}`")))
}

/// Operator specs: `zero`, `band:<radius>:<amp>` (flat multiplier on the
/// Euclidean ball), `jb:<a>:<amp>` (multiplier amp·⟨n⟩^{-a}), or
/// `file:<path>`.
pub fn build_operator(raw: &str, spec: &TorusSpec) -> Result<SmoothingOperator> {
    if raw == "zero" {
        return Ok(SmoothingOperator::zero(spec));
    }
    if let Some(rest) = raw.strip_prefix("band:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::invalid("phi", "band:<radius>:<amp>"));
        }
        let radius: f64 = parts[0].parse().map_err(|_| Error::invalid("phi", "bad radius"))?;
        let amp: f64 = parts[1].parse().map_err(|_| Error::invalid("phi", "bad amplitude"))?;
        return SmoothingOperator::diagonal_from_fn(spec, |n| {
            let len2: f64 = n.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
            if len2.sqrt() <= radius {
                amp
            } else {
                0.0
            }
        });
    }
    if let Some(rest) = raw.strip_prefix("jb:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::invalid("phi", "jb:<a>:<amp>"));
        }
        let a: f64 = parts[0].parse().map_err(|_| Error::invalid("phi", "bad exponent"))?;
        let amp: f64 = parts[1].parse().map_err(|_| Error::invalid("phi", "bad amplitude"))?;
        return SmoothingOperator::diagonal_from_fn(spec, |n| {
            let len2: f64 = n.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
            amp * (1.0 + len2).powf(-a / 2.0)
        });
    }
    if let Some(path) = raw.strip_prefix("file:") {
        let op = read_operator(Path::new(path))?;
        if op.spec() != spec {
            return Err(Error::invalid("phi", "operator file torus mismatch"));
        }
        return Ok(op);
    }
    Err(Error::invalid("phi", format!("unknown operator spec `{raw}`")))
}

/// Fully validated configuration with all domain objects built.
#[derive(Debug, Clone)]
pub struct BuiltConfig {
    pub config: RunConfig,
    pub torus: TorusSpec,
    pub stepper: StepperConfig,
    pub ensemble: EnsembleConfig,
    pub horizon: f64,
    pub stride: usize,
    pub hs_s: f64,
    /// (R, s, b, refresh stride) when a truncated run was requested.
    pub truncation: Option<(f64, f64, f64, usize)>,
}

// ---------------------------------------------------------------------------
// CSV / JSON outputs
// ---------------------------------------------------------------------------

/// Writer for the observables CSV: columns t, mass, energy, hs_norm,
/// running_xsb. The hs exponent and any truncation parameters live in the
/// comment header; `running_xsb` is empty when tracking is off.
pub struct ObservablesCsv {
    w: BufWriter<fs::File>,
}

impl ObservablesCsv {
    pub fn create(path: &Path, config: &RunConfig) -> Result<Self> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "# snls-observables schema={SCHEMA_VERSION}")?;
        writeln!(
            w,
            "# config_hash={} seed={}",
            config.hash(),
            config.get("seed").unwrap_or("0")
        )?;
        writeln!(w, "# config={}", config.serialize_inline())?;
        writeln!(w, "t,mass,energy,hs_norm,running_xsb")?;
        Ok(ObservablesCsv { w })
    }

    pub fn row(&mut self, t: f64, mass: f64, energy: f64, hs: f64, xsb: Option<f64>) -> Result<()> {
        match xsb {
            Some(v) => writeln!(self.w, "{t},{mass},{energy},{hs},{v}")?,
            None => writeln!(self.w, "{t},{mass},{energy},{hs},")?,
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Verifier CSV: one row per (N, sample, ratio).
pub fn write_verifier_csv(
    path: &Path,
    config: &RunConfig,
    rows: &[(u32, usize, f64)],
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# snls-verifier schema={SCHEMA_VERSION}")?;
    writeln!(
        w,
        "# config_hash={} seed={}",
        config.hash(),
        config.get("seed").unwrap_or("0")
    )?;
    writeln!(w, "# config={}", config.serialize_inline())?;
    writeln!(w, "N,sample,ratio")?;
    for (n, sample, ratio) in rows {
        writeln!(w, "{n},{sample},{ratio}")?;
    }
    w.flush()?;
    Ok(())
}

/// Verifier JSON summary.
pub fn write_verifier_json(
    path: &Path,
    config: &RunConfig,
    estimate: &str,
    sweeps: &[crate::estimates::RatioSweep],
) -> Result<()> {
    let per_n: Vec<serde_json::Value> = sweeps
        .iter()
        .map(|s| {
            serde_json::json!({
                "n": s.n,
                "max": s.max(),
                "mean": s.mean(),
                "samples": s.ratios.len(),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "estimate": estimate,
        "config_hash": config.hash(),
        "config": config.serialize_inline(),
        "seed": config.get("seed").unwrap_or("0").parse::<u64>().unwrap_or(0),
        "profile": sweeps.first().map(|s| s.profile.clone()).unwrap_or_default(),
        "per_n": per_n,
    });
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Ensemble report JSON per the frozen schema.
pub fn write_report_json(
    path: &Path,
    config: &RunConfig,
    report: &crate::ensemble::EnsembleReport,
) -> Result<()> {
    let mut doc = serde_json::to_value(report)?;
    if let serde_json::Value::Object(map) = &mut doc {
        map.insert("schema".to_string(), serde_json::json!(SCHEMA_VERSION));
        map.insert("config".to_string(), serde_json::json!(config.serialize_inline()));
    }
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Re-derives the config hash embedded in a CSV or JSON output file and
/// checks it against the recorded value. Returns the verified hash.
pub fn check_file_hash(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path)?;
    let (recorded, config_text) = if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        let recorded = doc
            .get("config_hash")
            .and_then(|v| v.as_str())
            .ok_or_else(|| format_err(path, "no config_hash field"))?
            .to_string();
        let config = doc
            .get("config")
            .and_then(|v| v.as_str())
            .ok_or_else(|| format_err(path, "no config field"))?
            .to_string();
        (recorded, config)
    } else {
        let mut recorded = None;
        let mut config = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# config_hash=") {
                recorded = rest.split_whitespace().next().map(str::to_string);
            }
            if let Some(rest) = line.strip_prefix("# config=") {
                config = Some(rest.to_string());
            }
        }
        (
            recorded.ok_or_else(|| format_err(path, "no config_hash comment"))?,
            config.ok_or_else(|| format_err(path, "no config comment"))?,
        )
    };
    let rebuilt = RunConfig::parse_inline(&config_text)?;
    let actual = rebuilt.hash();
    if actual != recorded {
        return Err(format_err(
            path,
            format!("config hash mismatch: recorded {recorded}, derived {actual}"),
        ));
    }
    Ok(actual)
}
