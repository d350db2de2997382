use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{stream_rng, Stream};

/// Labelled points, row-major `n × d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<f64>,
    pub targets: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    pub generator: String,
    pub seed: u64,
}

impl Dataset {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &t in &self.targets {
            counts[t] += 1;
        }
        counts
    }

    /// Writes `x_0,…,x_{d-1},label` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header: Vec<String> = (0..self.d).map(|j| format!("x_{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            rec.push(self.targets[i].to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads the format produced by [`Dataset::write_csv`]. The number of
    /// classes is one more than the largest label seen.
    pub fn read_csv<R: Read>(input: R, generator: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let d = header.len().saturating_sub(1);
        let expected = (0..d).map(|j| format!("x_{j}")).chain(std::iter::once("label".into()));
        if d == 0 || !header.iter().map(str::to_owned).eq(expected) {
            return Err(Error::ShapeMismatch(format!("unexpected dataset header {header:?}")));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for field in rec.iter().take(d) {
                inputs.push(field.parse::<f64>().map_err(|e| Error::ShapeMismatch(e.to_string()))?);
            }
            targets.push(rec[d].parse::<usize>().map_err(|e| Error::ShapeMismatch(e.to_string()))?);
        }
        let n = targets.len();
        let num_classes = targets.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            inputs,
            targets,
            n,
            d,
            num_classes,
            generator: generator.to_owned(),
            seed: 0,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::ShapeMismatch(e.to_string())
}

/// Two interleaved half circles: label 0 on `(cos t, sin t)`, label 1 on
/// `(1 − cos t, ½ − sin t)`, `t` evenly spaced on `[0, π]`, plus isotropic
/// Gaussian noise.
pub fn make_two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("two_moons needs n > 0".into()));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let mut rng = stream_rng(seed, Stream::Data);
    let mut inputs = Vec::with_capacity(2 * n);
    let mut targets = Vec::with_capacity(n);
    let arc = |count: usize, i: usize| {
        if count <= 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    };
    for i in 0..n_outer {
        let t = arc(n_outer, i);
        inputs.extend([t.cos(), t.sin()]);
        targets.push(0);
    }
    for i in 0..n_inner {
        let t = arc(n_inner, i);
        inputs.extend([1.0 - t.cos(), 0.5 - t.sin()]);
        targets.push(1);
    }
    if noise > 0.0 {
        for x in inputs.iter_mut() {
            *x += noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(Dataset {
        inputs,
        targets,
        n,
        d: 2,
        num_classes: 2,
        generator: "two_moons".into(),
        seed,
    })
}

/// `k` isotropic Gaussian clusters in 2-d with per-coordinate standard
/// deviation `spread`, centres evenly spaced on a circle of radius 2.
/// Points are assigned to classes round-robin.
pub fn make_blobs(n: usize, k: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("blobs needs n > 0 and k > 0".into()));
    }
    let mut rng = stream_rng(seed, Stream::Data);
    let mut inputs = Vec::with_capacity(2 * n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        let angle = 2.0 * PI * c as f64 / k as f64;
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        inputs.extend([2.0 * angle.cos() + spread * dx, 2.0 * angle.sin() + spread * dy]);
        targets.push(c);
    }
    Ok(Dataset {
        inputs,
        targets,
        n,
        d: 2,
        num_classes: k,
        generator: "blobs".into(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let ds = make_two_moons(200, 0.0, 1).unwrap();
        for i in 0..ds.n {
            let x = ds.row(i);
            let dist = if ds.targets[i] == 0 {
                assert!(x[1] >= -1e-12);
                ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs()
            } else {
                assert!(x[1] <= 0.5 + 1e-12);
                (((x[0] - 1.0).powi(2) + (x[1] - 0.5).powi(2)).sqrt() - 1.0).abs()
            };
            assert!(dist < 1e-12, "point {i} off arc by {dist}");
        }
    }

    #[test]
    fn moons_are_balanced() {
        let ds = make_two_moons(201, 0.1, 3).unwrap();
        let mut c = ds.class_counts();
        c.sort();
        assert_eq!(c, vec![100, 101]);
    }

    #[test]
    fn generation_is_pure() {
        let a = make_two_moons(50, 0.2, 9).unwrap();
        let b = make_two_moons(50, 0.2, 9).unwrap();
        assert_eq!(a, b);
        let c = make_two_moons(50, 0.2, 10).unwrap();
        assert_ne!(a.inputs, c.inputs);
        assert_eq!(make_blobs(30, 3, 0.5, 1).unwrap(), make_blobs(30, 3, 0.5, 1).unwrap());
        assert!(make_two_moons(0, 0.1, 1).is_err());
    }

    #[test]
    fn blob_within_class_variance() {
        let spread = 0.1;
        let ds = make_blobs(300, 3, spread, 2).unwrap();
        for c in 0..3 {
            let pts: Vec<&[f64]> = (0..ds.n).filter(|&i| ds.targets[i] == c).map(|i| ds.row(i)).collect();
            let m = pts.len() as f64;
            for j in 0..2 {
                let mean = pts.iter().map(|p| p[j]).sum::<f64>() / m;
                let var = pts.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (m - 1.0);
                let rel = (var - spread * spread).abs() / (spread * spread);
                assert!(rel < 0.2, "class {c} coord {j} variance {var}");
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let ds = make_two_moons(7, 0.3, 4).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_0,x_1,label\n"));
        let back = Dataset::read_csv(buf.as_slice(), "two_moons").unwrap();
        assert_eq!(back.inputs, ds.inputs);
        assert_eq!(back.targets, ds.targets);
        assert!(Dataset::read_csv("a,b\n1,2\n".as_bytes(), "x").is_err());
    }
}
