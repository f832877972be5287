//! Field values on a tensor grid of points over discrete time frames.
//!
//! # Binary layout
//!
//! All integers and floats are little endian.
//!
//! ```text
//! offset  size         field
//! 0       8            magic "SCTRAJ01"
//! 8       4  u32       format version (1)
//! 12      4  u32       ny
//! 16      4  u32       nx
//! 20      4  u32       channels
//! 24      4  u32       n_times
//! 28      8*nx f64     x coordinates
//! ..      8*ny f64     y coordinates
//! ..      8*n_times    times
//! ..      8*n_times*ny*nx*channels f64 frames, index [t][y][x][c]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::Matrix;

const MAGIC: &[u8; 8] = b"SCTRAJ01";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    channels: usize,
    frames: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl Trajectory {
    pub fn new(times: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>, channels: usize, frames: Vec<f64>) -> Result<Self> {
        if times.is_empty() || xs.is_empty() || ys.is_empty() || channels == 0 {
            return Err(invalid("trajectory needs at least one time, point and channel"));
        }
        if !strictly_increasing(&times) || !strictly_increasing(&xs) || !strictly_increasing(&ys) {
            return Err(invalid("times and coordinates must be strictly increasing"));
        }
        let want = times.len() * xs.len() * ys.len() * channels;
        if frames.len() != want {
            return Err(dim_mismatch(format!("{} frame values, expected {want}", frames.len())));
        }
        Ok(Self { times, xs, ys, channels, frames })
    }

    /// Builds from one `[y][x][c]` frame per time.
    pub fn from_frames(times: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>, channels: usize, frames: Vec<Vec<f64>>) -> Result<Self> {
        let flat = frames.concat();
        Self::new(times, xs, ys, channels, flat)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn frame_len(&self) -> usize {
        self.xs.len() * self.ys.len() * self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let l = self.frame_len();
        &self.frames[k * l..(k + 1) * l]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f64] {
        let l = self.frame_len();
        &mut self.frames[k * l..(k + 1) * l]
    }

    pub fn value(&self, k: usize, iy: usize, ix: usize, c: usize) -> f64 {
        self.frames[((k * self.ys.len() + iy) * self.xs.len() + ix) * self.channels + c]
    }

    /// One channel of frame `k` as an `ny x nx` matrix.
    pub fn channel_frame(&self, k: usize, c: usize) -> Matrix {
        let (ny, nx) = (self.ny(), self.nx());
        let mut m = Matrix::zeros(ny, nx);
        for iy in 0..ny {
            for ix in 0..nx {
                m.set(iy, ix, self.value(k, iy, ix, c));
            }
        }
        m
    }

    /// Frames at the given indices, in order.
    pub fn select_times(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&k| k >= self.n_times()) {
            return Err(invalid("time index out of range"));
        }
        let times = idx.iter().map(|&k| self.times[k]).collect();
        let frames = idx.iter().flat_map(|&k| self.frame(k).iter().copied()).collect();
        Self::new(times, self.xs.clone(), self.ys.clone(), self.channels, frames)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.ny() as u32, self.nx() as u32, self.channels as u32, self.n_times() as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.xs.iter().chain(&self.ys).chain(&self.times).chain(&self.frames) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Layout("not a trajectory file (bad magic)".into()));
        }
        let mut u = [0u32; 5];
        for v in u.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *v = u32::from_le_bytes(b);
        }
        let [version, ny, nx, ch, nt] = u.map(|v| v as usize);
        if version != VERSION as usize {
            return Err(Error::Layout(format!("unsupported trajectory version {version}")));
        }
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let xs = read_f64s(nx)?;
        let ys = read_f64s(ny)?;
        let times = read_f64s(nt)?;
        let frames = read_f64s(nt * ny * nx * ch)?;
        Self::new(times, xs, ys, ch, frames)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::read_from(&mut std::io::BufReader::new(f))
    }

    /// CSV with columns `t,x,y,c0,c1,...`, one row per point per frame.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y");
        for c in 0..self.channels {
            out.push_str(&format!(",c{c}"));
        }
        out.push('\n');
        for k in 0..self.n_times() {
            for iy in 0..self.ny() {
                for ix in 0..self.nx() {
                    out.push_str(&format!("{},{},{}", self.times[k], self.xs[ix], self.ys[iy]));
                    for c in 0..self.channels {
                        out.push_str(&format!(",{}", self.value(k, iy, ix, c)));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let t = Trajectory::new(
            vec![0.0, 0.5],
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0],
            2,
            (0..24).map(|i| i as f64 * 0.1 - 1.0).collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 8 * (3 + 2 + 2 + 24));
        let back = Trajectory::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.value(1, 1, 2, 1), t.frame(1)[11]);
        assert!(t.to_csv().starts_with("t,x,y,c0,c1\n0,0,0,-1,-0.9\n"));
    }

    #[test]
    fn bad_magic() {
        let buf = b"NOTATRAJ\x01\x00\x00\x00".to_vec();
        assert!(matches!(Trajectory::read_from(&mut buf.as_slice()), Err(Error::Layout(_))));
    }
}
