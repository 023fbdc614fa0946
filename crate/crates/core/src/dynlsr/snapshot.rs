//! Binary checkpoint of an [`LsrSketchState`].
//!
//! Layout: the 5 magic bytes `DLSR1`, then fixed-width little-endian fields.
//! Matrices are written as `rows: u64, cols: u64` followed by row-major `f64`.
//! The sketch is stored by seed and regenerated on load.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::matcore::{Cholesky, DenseMatrix, DenseVector};
use crate::rng::RngPosition;
use crate::sketch::{JlConfig, JlFamily, JlSketch};

use super::config::{Mode, SamplerConfig, SamplingRule, SketchBackend};
use super::state::{Backend, LsrSketchState, SampleRecord};
use super::DynLsrError;

pub const MAGIC: &[u8; 5] = b"DLSR1";

fn bad(msg: &str) -> DynLsrError {
    DynLsrError::Snapshot(msg.to_string())
}

fn write_matrix<W: Write>(w: &mut W, m: &DenseMatrix) -> std::io::Result<()> {
    w.write_u64::<LE>(m.rows() as u64)?;
    w.write_u64::<LE>(m.cols() as u64)?;
    for &v in m.as_slice() {
        w.write_f64::<LE>(v)?;
    }
    Ok(())
}

fn write_vec<W: Write>(w: &mut W, v: &[f64]) -> std::io::Result<()> {
    w.write_u64::<LE>(v.len() as u64)?;
    for &x in v {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

fn write_rng<W: Write>(w: &mut W, p: &RngPosition) -> std::io::Result<()> {
    w.write_all(&p.seed)?;
    w.write_u64::<LE>(p.stream)?;
    w.write_u128::<LE>(p.word_pos)
}

/// Rejects lengths that cannot fit in the remaining input.
const MAX_LEN: u64 = 1 << 36;

fn read_len<R: Read>(r: &mut R) -> Result<usize, DynLsrError> {
    let n = r.read_u64::<LE>()?;
    if n > MAX_LEN {
        return Err(bad("length field out of range"));
    }
    Ok(n as usize)
}

fn read_matrix<R: Read>(r: &mut R) -> Result<DenseMatrix, DynLsrError> {
    let rows = read_len(r)?;
    let cols = read_len(r)?;
    let n = rows.checked_mul(cols).filter(|&n| n as u64 <= MAX_LEN).ok_or_else(|| bad("matrix too large"))?;
    let mut data = vec![0.0; n];
    r.read_f64_into::<LE>(&mut data)?;
    Ok(DenseMatrix::from_row_major(rows, cols, data)?)
}

fn read_vec<R: Read>(r: &mut R) -> Result<Vec<f64>, DynLsrError> {
    let n = read_len(r)?;
    let mut data = vec![0.0; n];
    r.read_f64_into::<LE>(&mut data)?;
    Ok(data)
}

fn read_rng<R: Read>(r: &mut R) -> Result<RngPosition, DynLsrError> {
    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let stream = r.read_u64::<LE>()?;
    let word_pos = r.read_u128::<LE>()?;
    Ok(RngPosition { seed, stream, word_pos })
}

impl LsrSketchState {
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<(), DynLsrError> {
        let c = &self.cfg;
        w.write_all(MAGIC)?;
        w.write_u8(match c.backend {
            SketchBackend::Explicit => 0,
            SketchBackend::Factored => 1,
        })?;
        w.write_u8(match c.mode {
            Mode::Oblivious => 0,
            Mode::Adaptive => 1,
        })?;
        w.write_u8(match c.rule {
            SamplingRule::Theory => 0,
            SamplingRule::Empirical => 1,
            SamplingRule::KeepAll => 2,
        })?;
        w.write_f64::<LE>(c.epsilon)?;
        w.write_f64::<LE>(c.delta)?;
        w.write_u64::<LE>(c.horizon as u64)?;
        w.write_f64::<LE>(c.sigma_min)?;
        w.write_f64::<LE>(c.sigma_max)?;
        w.write_u64::<LE>(c.seed)?;
        w.write_u64::<LE>(c.recompute_interval.map_or(0, |v| v as u64))?;
        w.write_f64::<LE>(c.jl.c_jl)?;
        w.write_u64::<LE>(c.jl.k_max.map_or(0, |v| v as u64))?;

        w.write_u64::<LE>(self.d as u64)?;
        w.write_u64::<LE>(self.t as u64)?;
        w.write_u64::<LE>(self.since_recompute as u64)?;

        let j = &self.j;
        w.write_u64::<LE>(j.k as u64)?;
        w.write_u64::<LE>(j.n as u64)?;
        w.write_u64::<LE>(j.seed)?;
        w.write_u8(match j.family {
            JlFamily::Rademacher => 0,
            JlFamily::Gaussian => 1,
        })?;
        w.write_f64::<LE>(j.eps_jl)?;
        w.write_u64::<LE>(j.m as u64)?;
        w.write_f64::<LE>(j.delta)?;

        write_rng(w, &RngPosition::capture(&self.sample_rng))?;
        write_rng(w, &RngPosition::capture(&self.sketch_rng))?;

        write_matrix(w, &self.n)?;
        write_matrix(w, &self.h())?;
        match &self.backend {
            Backend::Explicit { b, .. } => write_matrix(w, b)?,
            Backend::Factored { chol } => write_matrix(w, chol.upper())?,
        }
        write_matrix(w, &self.btilde())?;
        write_matrix(w, &self.g())?;
        write_vec(w, &self.u)?;
        write_vec(w, &self.x)?;
        write_vec(w, &self.weights)?;
        w.write_u64::<LE>(self.replay.len() as u64)?;
        for rec in &self.replay {
            w.write_u64::<LE>(rec.t as u64)?;
            w.write_f64::<LE>(rec.tau)?;
            w.write_f64::<LE>(rec.p)?;
            w.write_f64::<LE>(rec.draw)?;
            w.write_f64::<LE>(rec.nu)?;
        }
        Ok(())
    }

    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_snapshot(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self, DynLsrError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let backend = match r.read_u8()? {
            0 => SketchBackend::Explicit,
            1 => SketchBackend::Factored,
            _ => return Err(bad("unknown backend tag")),
        };
        let mode = match r.read_u8()? {
            0 => Mode::Oblivious,
            1 => Mode::Adaptive,
            _ => return Err(bad("unknown mode tag")),
        };
        let rule = match r.read_u8()? {
            0 => SamplingRule::Theory,
            1 => SamplingRule::Empirical,
            2 => SamplingRule::KeepAll,
            _ => return Err(bad("unknown sampling rule tag")),
        };
        let epsilon = r.read_f64::<LE>()?;
        let delta = r.read_f64::<LE>()?;
        let horizon = read_len(r)?;
        let sigma_min = r.read_f64::<LE>()?;
        let sigma_max = r.read_f64::<LE>()?;
        let seed = r.read_u64::<LE>()?;
        let recompute = read_len(r)?;
        let c_jl = r.read_f64::<LE>()?;
        let k_max = read_len(r)?;
        let cfg = SamplerConfig {
            epsilon,
            delta,
            horizon,
            mode,
            sigma_min,
            sigma_max,
            seed,
            recompute_interval: (recompute > 0).then_some(recompute),
            rule,
            backend,
            jl: JlConfig { c_jl, k_max: (k_max > 0).then_some(k_max) },
        };
        cfg.validate()?;

        let d = read_len(r)?;
        let t = read_len(r)?;
        let since_recompute = read_len(r)?;

        let k = read_len(r)?;
        let n = read_len(r)?;
        let jseed = r.read_u64::<LE>()?;
        let family = match r.read_u8()? {
            0 => JlFamily::Rademacher,
            1 => JlFamily::Gaussian,
            _ => return Err(bad("unknown sketch family")),
        };
        let eps_jl = r.read_f64::<LE>()?;
        let m = read_len(r)?;
        let jdelta = r.read_f64::<LE>()?;
        if k.checked_mul(n).is_none_or(|v| v as u64 > MAX_LEN) {
            return Err(bad("sketch too large"));
        }
        let j = JlSketch::regenerate(family, k, n, jseed, eps_jl, m, jdelta);

        let sample_rng = read_rng(r)?.restore();
        let sketch_rng = read_rng(r)?.restore();

        let nmat = read_matrix(r)?;
        let h = read_matrix(r)?;
        let third = read_matrix(r)?;
        let btilde = read_matrix(r)?;
        let g = read_matrix(r)?;
        let u = DenseVector::from(read_vec(r)?);
        let x = DenseVector::from(read_vec(r)?);
        let weights = read_vec(r)?;
        let nrec = read_len(r)?;
        let mut replay = Vec::with_capacity(nrec.min(1 << 20));
        for _ in 0..nrec {
            replay.push(SampleRecord {
                t: read_len(r)?,
                tau: r.read_f64::<LE>()?,
                p: r.read_f64::<LE>()?,
                draw: r.read_f64::<LE>()?,
                nu: r.read_f64::<LE>()?,
            });
        }

        let w = d + 1;
        let s = nmat.rows();
        let shapes_ok = nmat.cols() == w
            && h.rows() == w
            && h.cols() == w
            && btilde.rows() == k
            && btilde.cols() == w
            && g.rows() == d
            && g.cols() == d
            && u.len() == d
            && x.len() == d
            && weights.len() == w + t
            && match backend {
                SketchBackend::Explicit => third.rows() == s && third.cols() == w && n == s,
                SketchBackend::Factored => third.rows() == w && third.cols() == w && n == w,
            };
        if d == 0 || !shapes_ok {
            return Err(bad("inconsistent dimensions"));
        }
        // the factored backend derives H, B̃ and G from R; the stored copies only fix the shapes
        let backend_state = match backend {
            SketchBackend::Explicit => Backend::Explicit { h, b: third, btilde, g },
            SketchBackend::Factored => Backend::Factored { chol: Cholesky::from_upper(third)? },
        };
        Ok(LsrSketchState {
            cfg,
            d,
            t,
            n: nmat,
            backend: backend_state,
            j,
            u,
            x,
            weights,
            sample_rng,
            sketch_rng,
            replay,
            since_recompute,
        })
    }

    pub fn from_snapshot_bytes(mut bytes: &[u8]) -> Result<Self, DynLsrError> {
        Self::read_snapshot(&mut bytes)
    }
}
