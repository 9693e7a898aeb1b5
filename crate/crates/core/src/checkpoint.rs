//! Binary snapshot of a [`ModelState`], little-endian throughout.
//!
//! Layout: magic `SQHN`, version u32, architecture, then per node the weight
//! matrix (f64), win counts (u64) and grown count (u32), then the root
//! averages (f64) and the iteration counter (u64).

use std::io::{Read, Write};
use std::path::Path;

use crate::arch::{Architecture, LayerSpec};
use crate::error::{Result, SqhnError};
use crate::pattern::InputShape;
use crate::state::ModelState;

const MAGIC: &[u8; 4] = b"SQHN";
const VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: usize) -> Result<()> {
        let v =
            u32::try_from(v).map_err(|_| SqhnError::Format(format!("{v} does not fit in u32")))?;
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => SqhnError::Format("truncated checkpoint".into()),
            _ => SqhnError::Io(e),
        })?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn write_checkpoint<W: Write>(state: &ModelState, out: W) -> Result<()> {
    let mut w = Writer(out);
    w.0.write_all(MAGIC)?;
    w.u32(VERSION as usize)?;
    let arch = state.arch();
    w.u32(arch.input.channels)?;
    w.u32(arch.input.height)?;
    w.u32(arch.input.width)?;
    w.u32(arch.layers.len())?;
    for l in &arch.layers {
        w.u32(l.kernel_h)?;
        w.u32(l.kernel_w)?;
        w.u32(l.capacity)?;
        match l.gamma_grow {
            Some(g) => {
                w.0.write_all(&[1])?;
                w.f64(g)?;
            }
            None => w.0.write_all(&[0])?,
        }
    }
    w.f64(arch.alpha)?;
    w.f64(arch.gamma_grow)?;
    w.f64(arch.lambda_fb)?;
    for node in 0..state.node_count() {
        for &x in state.weights(node) {
            w.f64(x)?;
        }
        for &c in state.counts(node) {
            w.u64(c)?;
        }
        w.u32(state.grown(node))?;
    }
    for &m in state.mu() {
        w.f64(m)?;
    }
    w.u64(state.iteration())?;
    w.0.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<ModelState> {
    let mut r = Reader(input);
    if &r.bytes::<4>()? != MAGIC {
        return Err(SqhnError::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(SqhnError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let input = InputShape::new(r.u32()?, r.u32()?, r.u32()?);
    let n_layers = r.u32()?;
    if n_layers > 64 {
        return Err(SqhnError::Format(format!(
            "implausible layer count {n_layers}"
        )));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let mut spec = LayerSpec::new(r.u32()?, r.u32()?, r.u32()?);
        match r.u8()? {
            0 => {}
            1 => spec.gamma_grow = Some(r.f64()?),
            f => return Err(SqhnError::Format(format!("bad option flag {f}"))),
        }
        layers.push(spec);
    }
    let mut arch = Architecture::new(input, layers);
    arch.alpha = r.f64()?;
    arch.gamma_grow = r.f64()?;
    arch.lambda_fb = r.f64()?;
    let topo = arch.topology()?;
    let n = topo.node_count();
    let mut weights = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    let mut grown = Vec::with_capacity(n);
    for node in 0..n {
        let cap = topo.capacity(node);
        weights.push(
            (0..topo.column_len(node) * cap)
                .map(|_| r.f64())
                .collect::<Result<Vec<_>>>()?,
        );
        counts.push((0..cap).map(|_| r.u64()).collect::<Result<Vec<_>>>()?);
        grown.push(r.u32()?);
    }
    let mu = (0..topo.capacity(topo.root()))
        .map(|_| r.f64())
        .collect::<Result<Vec<_>>>()?;
    let t = r.u64()?;
    let mut rest = [0u8; 1];
    if r.0.read(&mut rest)? != 0 {
        return Err(SqhnError::Format("trailing bytes after checkpoint".into()));
    }
    ModelState::from_parts(arch, weights, counts, mu, grown, t)
}

pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(state, std::io::BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_magic_rejected() {
        assert!(matches!(
            read_checkpoint(&b"NOPE\x01\0\0\0"[..]),
            Err(SqhnError::Format(_))
        ));
    }

    #[test]
    fn empty_state_round_trips() {
        let arch = Architecture::new(
            InputShape::new(1, 4, 4),
            vec![
                LayerSpec::new(2, 2, 3).with_gamma(0.7),
                LayerSpec::new(2, 2, 5),
            ],
        );
        let state = ModelState::build(arch).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&state, &mut buf).unwrap();
        assert_eq!(read_checkpoint(&buf[..]).unwrap(), state);
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
    }
}
