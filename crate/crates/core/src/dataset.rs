//! Simulated or loaded time series for every voxel of a parameter set.
//!
//! Text format (`aggcorr-dataset v1`):
//!
//! ```text
//! # aggcorr-dataset v1
//! # t_len=1000
//! # seed=42
//! # params={...json...}
//! voxel,region,x0,x1,t0,t1,...
//! 0,0,0,0,0.12,-1.3,...
//! ```
//!
//! One row per voxel in dataset order. Values are written in shortest
//! round-trip decimal, so `f64` data reloads bit for bit.

use std::io::{BufRead, Write};
use std::ops::Range;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Neighborhood, RegionId, VoxelIndex};
use crate::model::ModelParams;
use crate::scalar::Real;

const MAGIC: &str = "# aggcorr-dataset v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    params: ModelParams<T>,
    t_len: usize,
    seed: u64,
    voxels: Vec<(RegionId, VoxelIndex)>,
    offsets: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Dataset<T> {
    /// `values` is voxel-major: the series of voxel `v` is
    /// `values[v * t_len..(v + 1) * t_len]`.
    pub fn new(params: ModelParams<T>, t_len: usize, seed: u64, values: Vec<T>) -> Result<Self> {
        params.validate()?;
        if t_len < 2 {
            return Err(Error::SeriesTooShort(t_len));
        }
        let voxels = params.voxels();
        if values.len() != voxels.len() * t_len {
            return Err(Error::LengthMismatch(voxels.len() * t_len, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite value".into()));
        }
        let mut offsets = vec![0];
        for r in &params.regions {
            offsets.push(offsets.last().unwrap() + r.voxel_count());
        }
        Ok(Self { params, t_len, seed, voxels, offsets, values })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn voxels(&self) -> &[(RegionId, VoxelIndex)] {
        &self.voxels
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn series(&self, voxel: usize) -> &[T] {
        &self.values[voxel * self.t_len..(voxel + 1) * self.t_len]
    }

    pub fn region_position(&self, id: RegionId) -> Result<usize> {
        self.params.region_position(id)
    }

    /// Dataset indices of the voxels of the region at `pos`.
    pub fn region_range(&self, pos: usize) -> Range<usize> {
        self.offsets[pos]..self.offsets[pos + 1]
    }

    /// Series of a voxel given its local index inside the region at `pos`.
    pub fn region_series(&self, pos: usize, local: usize) -> &[T] {
        self.series(self.offsets[pos] + local)
    }

    pub fn region_average(&self, pos: usize) -> Vec<T> {
        self.average_of(self.region_range(pos))
    }

    fn average_of(&self, voxels: impl IntoIterator<Item = usize>) -> Vec<T> {
        let mut acc = vec![T::zero(); self.t_len];
        let mut n = 0u64;
        for v in voxels {
            for (a, &x) in acc.iter_mut().zip(self.series(v)) {
                *a = *a + x;
            }
            n += 1;
        }
        let n = T::from_count(n);
        acc.iter_mut().for_each(|a| *a = *a / n);
        acc
    }

    /// Spatial average over a neighborhood of the region at `pos`.
    pub fn neighborhood_average(&self, pos: usize, nb: &Neighborhood) -> Result<Vec<T>> {
        let region = &self.params.regions[pos];
        let idx = nb
            .voxels()
            .iter()
            .map(|v| {
                region.to_local(v).map(|l| self.offsets[pos] + region.local_index(&l)).ok_or_else(|| {
                    Error::InvalidRegion { id: region.id, reason: "neighborhood leaves the region".into() }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.average_of(idx))
    }

    /// The series of a single-voxel neighborhood borrowed in place, or the
    /// neighborhood average otherwise.
    pub fn unit_series(&self, pos: usize, nb: &Neighborhood) -> Result<std::borrow::Cow<'_, [T]>> {
        if nb.nu == 0 {
            let region = &self.params.regions[pos];
            let local = region
                .to_local(&nb.center)
                .ok_or_else(|| Error::InvalidRegion { id: region.id, reason: "voxel outside the region".into() })?;
            Ok(self.region_series(pos, region.local_index(&local)).into())
        } else {
            Ok(self.neighborhood_average(pos, nb)?.into())
        }
    }
}

impl<T: Real + Serialize + DeserializeOwned> Dataset<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let params = serde_json::to_string(&self.params).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "# t_len={}", self.t_len)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# params={params}")?;
        write!(w, "voxel,region")?;
        for c in 0..self.params.dim() {
            write!(w, ",x{c}")?;
        }
        for t in 0..self.t_len {
            write!(w, ",t{t}")?;
        }
        writeln!(w)?;
        for (v, (region, idx)) in self.voxels.iter().enumerate() {
            write!(w, "{v},{region}")?;
            for c in idx.coords() {
                write!(w, ",{c}")?;
            }
            for x in self.series(v) {
                write!(w, ",{}", x.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let fmt = |m: &str| Error::Format(m.to_string());
        let mut lines = r.lines();
        let mut next = || lines.next().transpose().map_err(Error::from);
        if next()?.as_deref() != Some(MAGIC) {
            return Err(fmt("missing dataset header"));
        }
        let mut header = |key: &str| -> Result<String> {
            let line = next()?.ok_or_else(|| fmt("truncated header"))?;
            line.strip_prefix("# ")
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| Error::Format(format!("expected `# {key}=`")))
        };
        let t_len: usize = header("t_len")?.parse().map_err(|_| fmt("bad t_len"))?;
        let seed: u64 = header("seed")?.parse().map_err(|_| fmt("bad seed"))?;
        let params: ModelParams<T> =
            serde_json::from_str(&header("params")?).map_err(|e| Error::Format(e.to_string()))?;
        params.validate()?;
        let dim = params.dim();
        let expected = params.voxels();
        next()?.ok_or_else(|| fmt("missing column header"))?;
        let mut values = Vec::with_capacity(expected.len() * t_len);
        for (v, (region, idx)) in expected.iter().enumerate() {
            let line = next()?.ok_or_else(|| Error::Format(format!("missing row for voxel {v}")))?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 + dim + t_len {
                return Err(Error::Format(format!("row {v}: expected {} fields", 2 + dim + t_len)));
            }
            let int =
                |s: &str| s.trim().parse::<i64>().map_err(|_| Error::Format(format!("row {v}: bad integer {s:?}")));
            let coords = fields[2..2 + dim].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
            if int(fields[0])? != v as i64 || int(fields[1])? != *region as i64 || coords != idx.0 {
                return Err(Error::Format(format!("row {v}: voxel does not match the parameter layout")));
            }
            for s in &fields[2 + dim..] {
                let x: f64 = s.trim().parse().map_err(|_| Error::Format(format!("row {v}: bad value {s:?}")))?;
                values.push(T::lit(x));
            }
        }
        Self::new(params, t_len, seed, values)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CorrelationFunction;
    use crate::model::{identity_table, layout_along_axis, simulate};

    fn params() -> ModelParams<f64> {
        let regions = layout_along_axis(2, 2, &[(0, vec![3, 2], 1.0), (5, vec![2, 2], 2.0)]).unwrap();
        let mut inter = identity_table(2);
        inter[0][1] = 0.3;
        inter[1][0] = 0.3;
        ModelParams::new(
            regions,
            inter,
            CorrelationFunction::intra(10.0, 0.5).unwrap(),
            0.4,
            CorrelationFunction::iid_noise(),
            0.2,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let d = simulate(&params(), 7, 99).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let back = Dataset::<f64>::read_from(&buf[..]).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn file_round_trip() {
        let d = simulate(&params(), 5, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        d.save(&path).unwrap();
        assert_eq!(Dataset::<f64>::load(&path).unwrap(), d);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let d = simulate(&params(), 4, 1).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(Dataset::<f64>::read_from(text.replacen("v1", "v2", 1).as_bytes()).is_err());
        let truncated: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(Dataset::<f64>::read_from(truncated.as_bytes()).is_err());
        let bad = text.replacen("\n6,5,4,0,", "\n6,5,9,0,", 1);
        assert_ne!(bad, text);
        assert!(Dataset::<f64>::read_from(bad.as_bytes()).is_err());
    }

    #[test]
    fn averages_and_units() {
        let p = params();
        let t = 3;
        let values: Vec<f64> = (0..p.voxel_count() * t).map(|x| x as f64).collect();
        let d = Dataset::new(p, t, 0, values).unwrap();
        assert_eq!(d.region_range(1), 6..10);
        assert_eq!(d.region_average(0), vec![7.5, 8.5, 9.5]);
        let nb = Neighborhood { center: VoxelIndex::new([5, 1]), nu: 0, region_id: 5 };
        assert_eq!(&*d.unit_series(1, &nb).unwrap(), d.series(9));
        let far = Neighborhood { center: VoxelIndex::new([0, 0]), nu: 1, region_id: 0 };
        assert!(d.neighborhood_average(0, &far).is_err());
    }
}
