//! Checkpoint files.
//!
//! ```text
//! heurlab-model v1\n
//! input=4 coords=1 conv=8x3,8x3,8x3 pool=avgmax hidden=32 scale=10 seed=0 params=2185\n
//! <params × f64 little-endian>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{ConvSpec, HeuristicModel, ModelConfig, OutputActivation, Pooling};
use crate::{Error, Result, Scalar};

const MAGIC: &str = "heurlab-model v1";

impl<S: Scalar> HeuristicModel<S> {
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let conv: Vec<String> =
            self.config.conv_layers.iter().map(|c| format!("{}x{}", c.out_channels, c.kernel_size)).collect();
        writeln!(out, "{MAGIC}")?;
        writeln!(
            out,
            "input={} coords={} conv={} pool={} hidden={} scale={} seed={} params={}",
            self.config.input_channels,
            u8::from(self.config.coord_planes),
            conv.join(","),
            self.config.pooling.name(),
            self.config.hidden_width,
            self.config.output_scale,
            self.config.seed,
            self.params.len()
        )?;
        let mut bytes = Vec::with_capacity(self.params.len() * 8);
        for p in &self.params {
            bytes.extend_from_slice(&p.to_f64_lossy().to_le_bytes());
        }
        out.write_all(&bytes)
    }

    pub fn read_checkpoint<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut line = String::new();
        let bad = |m: &str| Error::BadCheckpoint(m.to_string());
        reader.read_line(&mut line).map_err(|e| bad(&e.to_string()))?;
        if line.trim_end() != MAGIC {
            return Err(Error::VersionMismatch(line.trim_end().to_string()));
        }
        line.clear();
        reader.read_line(&mut line).map_err(|e| bad(&e.to_string()))?;
        let mut config = ModelConfig {
            input_channels: 0,
            coord_planes: false,
            conv_layers: Vec::new(),
            pooling: Pooling::Average,
            hidden_width: 0,
            output_scale: 1,
            seed: 0,
            output_activation: OutputActivation::Softplus,
        };
        let mut count = None;
        for field in line.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad("header field without '='"))?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad(&format!("bad number in {field}")));
            match key {
                "input" => config.input_channels = num(value)? as usize,
                "coords" => config.coord_planes = num(value)? != 0,
                "pool" => config.pooling = Pooling::parse(value).ok_or_else(|| bad("bad pooling"))?,
                "hidden" => config.hidden_width = num(value)? as usize,
                "scale" => config.output_scale = num(value)? as u32,
                "seed" => config.seed = num(value)?,
                "params" => count = Some(num(value)? as usize),
                "conv" => {
                    for spec in value.split(',') {
                        let (o, k) = spec.split_once('x').ok_or_else(|| bad("bad conv spec"))?;
                        config
                            .conv_layers
                            .push(ConvSpec { out_channels: num(o)? as usize, kernel_size: num(k)? as usize });
                    }
                }
                _ => return Err(bad(&format!("unknown header field {key}"))),
            }
        }
        let count = count.ok_or_else(|| bad("missing parameter count"))?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes).map_err(|e| bad(&e.to_string()))?;
        if bytes.len() != count * 8 {
            return Err(bad(&format!("expected {} parameter bytes, found {}", count * 8, bytes.len())));
        }
        let params =
            bytes.chunks_exact(8).map(|c| S::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap()))).collect();
        HeuristicModel::from_parts(config, params).map_err(|e| bad(&e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf).expect("writing to memory");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_checkpoint(file)
    }
}
