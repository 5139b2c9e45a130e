//! Network container, "TDSVNN01". Payloads are f64 so a reloaded network
//! is the trained network, bit for bit.
//!
//! Header: u32 kind (0 = feed-forward stack with classification heads,
//! 1 = embedding network with statistics pooling). Each serialized layer is
//! u32 rows, cols, activation tag (0 linear, 1 sigmoid, 2 relu, 3 softmax),
//! context half-width, then f64 weights (rows·cols row-major) and biases.
//!
//! Kind 0 carries u32 hidden and head counts, the layers in that order,
//! then a projection flag; when set, the bottleneck projection follows:
//! u32 tap layer (1-based), u32 post-activation flag, u32 input and output
//! dims, f64 mean, basis (row-major), eigenvalues. Kind 1 carries u32
//! frame-layer and segment-layer counts and the embedding layer index,
//! then frame layers, segment layers, and the head.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use tdsv_core::linalg::Mat;
use tdsv_core::nnet::{
    Activation, FrameLayer, Layer, MlpNetwork, PcaProjection, XvectorNetwork,
};

use super::{expect_magic, read_f64s, read_u32, write_f64s, write_u32, FormatError};

const NN_MAGIC: &[u8; 8] = b"TDSVNN01";

/// Bottleneck projection bundled with the network it was trained on. The
/// tap location is recorded so extraction cannot silently pair the
/// projection with activations from a different layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BnProjection {
    pub pca: PcaProjection,
    /// 1-based hidden layer whose output the projection was trained on.
    pub layer: usize,
    /// Whether that output was taken after the nonlinearity.
    pub post_activation: bool,
}

/// Contents of a network file.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkFile {
    Mlp {
        net: MlpNetwork,
        projection: Option<BnProjection>,
    },
    Xvector(XvectorNetwork),
}

fn act_tag(a: Activation) -> u32 {
    match a {
        Activation::Linear => 0,
        Activation::Sigmoid => 1,
        Activation::Relu => 2,
        Activation::Softmax => 3,
    }
}

fn act_from_tag(tag: u32, path: &str) -> Result<Activation, FormatError> {
    match tag {
        0 => Ok(Activation::Linear),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Relu),
        3 => Ok(Activation::Softmax),
        other => Err(FormatError::bad(path, format!("unknown activation tag {other}"))),
    }
}

fn write_layer<W: Write>(
    w: &mut W,
    layer: &Layer,
    context: usize,
    path: &str,
) -> Result<(), FormatError> {
    write_u32(w, layer.w.rows() as u32, path)?;
    write_u32(w, layer.w.cols() as u32, path)?;
    write_u32(w, act_tag(layer.act), path)?;
    write_u32(w, context as u32, path)?;
    write_f64s(w, layer.w.data(), path)?;
    write_f64s(w, &layer.b, path)
}

fn read_layer<R: std::io::Read>(r: &mut R, path: &str) -> Result<(Layer, usize), FormatError> {
    let rows = read_u32(r, path)? as usize;
    let cols = read_u32(r, path)? as usize;
    if rows == 0 || cols == 0 {
        return Err(FormatError::bad(path, "zero-sized layer"));
    }
    let act = act_from_tag(read_u32(r, path)?, path)?;
    let context = read_u32(r, path)? as usize;
    let w = Mat::from_vec(rows, cols, read_f64s(r, rows * cols, path)?);
    let b = read_f64s(r, rows, path)?;
    Ok((Layer { w, b, act }, context))
}

pub fn write_network(path: &Path, file: &NetworkFile) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let out = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(out);
    w.write_all(NN_MAGIC).map_err(|e| FormatError::io(&p, e))?;
    match file {
        NetworkFile::Mlp { net, projection } => {
            write_u32(&mut w, 0, &p)?;
            write_u32(&mut w, net.hidden.len() as u32, &p)?;
            write_u32(&mut w, net.heads.len() as u32, &p)?;
            for layer in net.hidden.iter().chain(&net.heads) {
                write_layer(&mut w, layer, 0, &p)?;
            }
            match projection {
                None => write_u32(&mut w, 0, &p)?,
                Some(proj) => {
                    write_u32(&mut w, 1, &p)?;
                    write_u32(&mut w, proj.layer as u32, &p)?;
                    write_u32(&mut w, proj.post_activation as u32, &p)?;
                    write_u32(&mut w, proj.pca.input_dim() as u32, &p)?;
                    write_u32(&mut w, proj.pca.output_dim() as u32, &p)?;
                    write_f64s(&mut w, &proj.pca.mean, &p)?;
                    write_f64s(&mut w, proj.pca.basis.data(), &p)?;
                    write_f64s(&mut w, &proj.pca.eigenvalues, &p)?;
                }
            }
        }
        NetworkFile::Xvector(net) => {
            write_u32(&mut w, 1, &p)?;
            write_u32(&mut w, net.frame_layers.len() as u32, &p)?;
            write_u32(&mut w, net.segment_layers.len() as u32, &p)?;
            write_u32(&mut w, net.embedding_layer as u32, &p)?;
            for fl in &net.frame_layers {
                write_layer(&mut w, &fl.layer, fl.context, &p)?;
            }
            for layer in &net.segment_layers {
                write_layer(&mut w, layer, 0, &p)?;
            }
            write_layer(&mut w, &net.head, 0, &p)?;
        }
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

pub fn read_network(path: &Path) -> Result<NetworkFile, FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, NN_MAGIC, &p)?;
    match read_u32(&mut r, &p)? {
        0 => {
            let hidden_count = read_u32(&mut r, &p)? as usize;
            let head_count = read_u32(&mut r, &p)? as usize;
            if hidden_count == 0 || head_count == 0 {
                return Err(FormatError::bad(&p, "network needs hidden layers and a head"));
            }
            let mut hidden = Vec::with_capacity(hidden_count);
            for _ in 0..hidden_count {
                hidden.push(read_layer(&mut r, &p)?.0);
            }
            let mut heads = Vec::with_capacity(head_count);
            for _ in 0..head_count {
                heads.push(read_layer(&mut r, &p)?.0);
            }
            let projection = match read_u32(&mut r, &p)? {
                0 => None,
                1 => {
                    let layer = read_u32(&mut r, &p)? as usize;
                    let post_activation = read_u32(&mut r, &p)? != 0;
                    if layer == 0 || layer > hidden_count {
                        return Err(FormatError::bad(
                            &p,
                            format!("projection tap layer {layer} outside 1..={hidden_count}"),
                        ));
                    }
                    let in_dim = read_u32(&mut r, &p)? as usize;
                    let out_dim = read_u32(&mut r, &p)? as usize;
                    let mean = read_f64s(&mut r, in_dim, &p)?;
                    let basis = Mat::from_vec(in_dim, out_dim, read_f64s(&mut r, in_dim * out_dim, &p)?);
                    let eigenvalues = read_f64s(&mut r, out_dim, &p)?;
                    Some(BnProjection {
                        pca: PcaProjection {
                            mean,
                            basis,
                            eigenvalues,
                        },
                        layer,
                        post_activation,
                    })
                }
                other => {
                    return Err(FormatError::bad(&p, format!("bad projection flag {other}")));
                }
            };
            Ok(NetworkFile::Mlp {
                net: MlpNetwork { hidden, heads },
                projection,
            })
        }
        1 => {
            let frame_count = read_u32(&mut r, &p)? as usize;
            let segment_count = read_u32(&mut r, &p)? as usize;
            let embedding_layer = read_u32(&mut r, &p)? as usize;
            if frame_count == 0 || segment_count == 0 {
                return Err(FormatError::bad(&p, "network needs frame and segment layers"));
            }
            if embedding_layer >= segment_count {
                return Err(FormatError::bad(
                    &p,
                    format!("embedding layer {embedding_layer} outside 0..{segment_count}"),
                ));
            }
            let mut frame_layers = Vec::with_capacity(frame_count);
            for _ in 0..frame_count {
                let (layer, context) = read_layer(&mut r, &p)?;
                frame_layers.push(FrameLayer { layer, context });
            }
            let mut segment_layers = Vec::with_capacity(segment_count);
            for _ in 0..segment_count {
                segment_layers.push(read_layer(&mut r, &p)?.0);
            }
            let head = read_layer(&mut r, &p)?.0;
            Ok(NetworkFile::Xvector(XvectorNetwork {
                frame_layers,
                segment_layers,
                head,
                embedding_layer,
            }))
        }
        other => Err(FormatError::bad(&p, format!("unknown network kind {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn layer(rows: usize, cols: usize, act: Activation) -> Layer {
        let w = Mat::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|i| (i as f64) * 0.37 - 1.0).collect(),
        );
        let b = (0..rows).map(|i| i as f64 * 0.11).collect();
        Layer { w, b, act }
    }

    fn sample_mlp() -> NetworkFile {
        NetworkFile::Mlp {
            net: MlpNetwork {
                hidden: vec![
                    layer(4, 3, Activation::Sigmoid),
                    layer(4, 4, Activation::Sigmoid),
                ],
                heads: vec![layer(5, 4, Activation::Softmax), layer(2, 4, Activation::Softmax)],
            },
            projection: Some(BnProjection {
                pca: PcaProjection {
                    mean: vec![0.5, -0.25, 0.125, 2.0],
                    basis: Mat::from_vec(4, 2, (0..8).map(|i| i as f64 / 3.0).collect()),
                    eigenvalues: vec![3.0, 1.5],
                },
                layer: 2,
                post_activation: true,
            }),
        }
    }

    #[test]
    fn mlp_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bn.nnet");
        let file = sample_mlp();
        write_network(&path, &file).unwrap();
        assert_eq!(read_network(&path).unwrap(), file);

        let bytes = std::fs::read(&path).unwrap();
        write_network(&path, &read_network(&path).unwrap()).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn mlp_without_projection_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bn.nnet");
        let file = NetworkFile::Mlp {
            net: MlpNetwork {
                hidden: vec![layer(3, 2, Activation::Relu)],
                heads: vec![layer(4, 3, Activation::Softmax)],
            },
            projection: None,
        };
        write_network(&path, &file).unwrap();
        assert_eq!(read_network(&path).unwrap(), file);
    }

    #[test]
    fn xvector_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("xv.nnet");
        let file = NetworkFile::Xvector(XvectorNetwork {
            frame_layers: vec![
                FrameLayer {
                    layer: layer(6, 9, Activation::Relu),
                    context: 1,
                },
                FrameLayer {
                    layer: layer(6, 6, Activation::Relu),
                    context: 0,
                },
            ],
            segment_layers: vec![layer(5, 12, Activation::Relu)],
            head: layer(3, 5, Activation::Softmax),
            embedding_layer: 0,
        });
        write_network(&path, &file).unwrap();
        assert_eq!(read_network(&path).unwrap(), file);
    }

    #[test]
    fn projection_tap_outside_stack_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bn.nnet");
        let file = match sample_mlp() {
            NetworkFile::Mlp { net, projection } => NetworkFile::Mlp {
                net,
                projection: projection.map(|mut p| {
                    p.layer = 9;
                    p
                }),
            },
            _ => unreachable!(),
        };
        write_network(&path, &file).unwrap();
        let err = read_network(&path).unwrap_err();
        assert!(err.to_string().contains("tap layer 9"), "{err}");
    }

    #[test]
    fn truncated_network_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bn.nnet");
        write_network(&path, &sample_mlp()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            read_network(&path).unwrap_err(),
            FormatError::Truncated { .. }
        ));
    }
}
