use rayon::prelude::*;

use super::NodeSsm;
use crate::error::{Error, Result};
use crate::matfun::{tril_exp_phi1, validate_tril};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Fills `p_bar = exp(Δᵢ P)` and `q_bar = Δᵢ φ₁(Δᵢ P) qᵢ` for every node.
///
/// Gradients: `∂P̄/∂Δ = P·P̄`, `∂Q̄/∂Δ = P̄·q`, `∂Q̄/∂q = Δφ₁(ΔP)`.
pub fn discretize<T: Scalar>(mut node: NodeSsm<T>, p: &Tensor<T>) -> Result<NodeSsm<T>> {
    let (n, s) = (node.num_nodes(), node.state_dim());
    if p.shape() != [s, s] {
        return Err(Error::shape(
            "discretize",
            format!("P is {:?}, state dim {s}", p.shape()),
        ));
    }
    let deltas = node.delta.to_vec();
    if let Some(i) = deltas.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::domain(
            "discretize",
            format!("delta[{i}] = {} is not positive", deltas[i]),
        ));
    }
    for &d in &deltas {
        validate_tril("discretize", p.data(), s, d)?;
    }
    let pm = p.to_vec();
    let ss = s * s;

    // Per node: E = exp(ΔP) and M = Δ·φ₁(ΔP).
    let blocks: Vec<(Vec<T>, Vec<T>)> = deltas
        .par_iter()
        .map(|&d| {
            let (e, mut f) = tril_exp_phi1(&pm, s, d);
            f.iter_mut().for_each(|v| *v *= d);
            (e, f)
        })
        .collect();
    let mut e_all = Vec::with_capacity(n * ss);
    let mut m_all = Vec::with_capacity(n * ss);
    for (e, m) in blocks {
        e_all.extend(e);
        m_all.extend(m);
    }
    if e_all.iter().chain(&m_all).any(|v| !v.is_finite()) {
        return Err(Error::numeric("discretize", "non-finite matrix exponential"));
    }

    let q = node.q.data();
    let mut q_bar = vec![T::zero(); n * s];
    for i in 0..n {
        let m = &m_all[i * ss..(i + 1) * ss];
        for a in 0..s {
            q_bar[i * s + a] = (0..=a).map(|b| m[a * s + b] * q[i * s + b]).sum();
        }
    }

    let p_bar = {
        let (e, pm) = (e_all.clone(), pm.clone());
        Tensor::from_op(
            vec![n, s, s],
            e_all.clone(),
            vec![node.delta.clone()],
            Box::new(move |g| {
                // g_Δᵢ = <gᵢ, P·P̄ᵢ>
                let gd = (0..n)
                    .map(|i| {
                        let (gi, ei) = (&g[i * ss..(i + 1) * ss], &e[i * ss..(i + 1) * ss]);
                        let mut acc = T::zero();
                        for a in 0..s {
                            for b in 0..=a {
                                let pe: T = (b..=a).map(|k| pm[a * s + k] * ei[k * s + b]).sum();
                                acc += gi[a * s + b] * pe;
                            }
                        }
                        acc
                    })
                    .collect();
                vec![Some(gd)]
            }),
        )
    };

    let q_bar = {
        let (e, m, qv) = (e_all, m_all, node.q.to_vec());
        let (dc, qc) = (node.delta.clone(), node.q.clone());
        Tensor::from_op(
            vec![n, s],
            q_bar,
            vec![node.delta.clone(), node.q.clone()],
            Box::new(move |g| {
                let gd = dc.requires_grad().then(|| {
                    (0..n)
                        .map(|i| {
                            let ei = &e[i * ss..(i + 1) * ss];
                            (0..s)
                                .map(|a| {
                                    let eq: T = (0..=a).map(|b| ei[a * s + b] * qv[i * s + b]).sum();
                                    g[i * s + a] * eq
                                })
                                .sum()
                        })
                        .collect()
                });
                let gq = qc.requires_grad().then(|| {
                    let mut out = vec![T::zero(); n * s];
                    for i in 0..n {
                        let mi = &m[i * ss..(i + 1) * ss];
                        for b in 0..s {
                            out[i * s + b] = (b..s).map(|a| mi[a * s + b] * g[i * s + a]).sum();
                        }
                    }
                    out
                });
                vec![gd, gq]
            }),
        )
    };

    node.p_bar = Some(p_bar);
    node.q_bar = Some(q_bar);
    Ok(node)
}

fn discretized<T: Scalar>(op: &'static str, node: &NodeSsm<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    match (&node.p_bar, &node.q_bar) {
        (Some(p), Some(q)) => Ok((p.clone(), q.clone())),
        _ => Err(Error::State(format!("{op}: node SSM has not been discretized"))),
    }
}

/// `h'[i,c,:] = P̄ᵢ·h_agg[i,c,:] + Q̄ᵢ·h0[i,c]`.
pub fn ssm_step<T: Scalar>(h_agg: &Tensor<T>, h0: &Tensor<T>, node: &NodeSsm<T>) -> Result<Tensor<T>> {
    let (p_bar, q_bar) = discretized("ssm_step", node)?;
    let (n, s) = (node.num_nodes(), node.state_dim());
    let (n0, d) = h0.dims2("ssm_step")?;
    if n0 != n || h_agg.shape() != [n, d, s] {
        return Err(Error::shape(
            "ssm_step",
            format!(
                "state {:?}, input {:?}, {n} nodes, state dim {s}",
                h_agg.shape(),
                h0.shape()
            ),
        ));
    }
    let ss = s * s;
    let ds = d * s;
    let (pb, qb, hv, xv) = (p_bar.data(), q_bar.data(), h_agg.data(), h0.data());
    let mut out = vec![T::zero(); n * ds];
    out.par_chunks_mut(ds.max(1)).enumerate().for_each(|(i, oi)| {
        let (pi, qi) = (&pb[i * ss..(i + 1) * ss], &qb[i * s..(i + 1) * s]);
        for c in 0..d {
            let h = &hv[i * ds + c * s..i * ds + (c + 1) * s];
            let x = xv[i * d + c];
            for a in 0..s {
                let acc: T = (0..=a).map(|b| pi[a * s + b] * h[b]).sum();
                oi[c * s + a] = acc + qi[a] * x;
            }
        }
    });

    let (pc, qc, hc, xc) = (p_bar.clone(), q_bar.clone(), h_agg.clone(), h0.clone());
    Ok(Tensor::from_op(
        vec![n, d, s],
        out,
        vec![h_agg.clone(), h0.clone(), p_bar, q_bar],
        Box::new(move |g| {
            let (pb, qb, hv, xv) = (pc.data(), qc.data(), hc.data(), xc.data());
            let g_h = hc.requires_grad().then(|| {
                let mut out = vec![T::zero(); n * ds];
                out.par_chunks_mut(ds.max(1)).enumerate().for_each(|(i, oi)| {
                    let pi = &pb[i * ss..(i + 1) * ss];
                    for c in 0..d {
                        let gc = &g[i * ds + c * s..i * ds + (c + 1) * s];
                        for b in 0..s {
                            oi[c * s + b] = (b..s).map(|a| pi[a * s + b] * gc[a]).sum();
                        }
                    }
                });
                out
            });
            let g_x = xc.requires_grad().then(|| {
                (0..n * d)
                    .map(|ic| {
                        let i = ic / d;
                        let gc = &g[ic * s..(ic + 1) * s];
                        (0..s).map(|a| qb[i * s + a] * gc[a]).sum()
                    })
                    .collect()
            });
            let g_p = pc.requires_grad().then(|| {
                let mut out = vec![T::zero(); n * ss];
                out.par_chunks_mut(ss).enumerate().for_each(|(i, oi)| {
                    for c in 0..d {
                        let base = i * ds + c * s;
                        for a in 0..s {
                            let ga = g[base + a];
                            if ga == T::zero() {
                                continue;
                            }
                            for b in 0..=a {
                                oi[a * s + b] += ga * hv[base + b];
                            }
                        }
                    }
                });
                out
            });
            let g_q = qc.requires_grad().then(|| {
                let mut out = vec![T::zero(); n * s];
                for i in 0..n {
                    for c in 0..d {
                        let x = xv[i * d + c];
                        for a in 0..s {
                            out[i * s + a] += g[i * ds + c * s + a] * x;
                        }
                    }
                }
                out
            });
            vec![g_h, g_x, g_p, g_q]
        }),
    ))
}

/// `y[i,c] = rᵢ · h[i,c,:]`.
pub fn ssm_readout<T: Scalar>(h: &Tensor<T>, node: &NodeSsm<T>) -> Result<Tensor<T>> {
    let (n, s) = (node.num_nodes(), node.state_dim());
    if h.rank() != 3 || h.shape()[0] != n || h.shape()[2] != s {
        return Err(Error::shape(
            "ssm_readout",
            format!("state {:?} for {n} nodes, state dim {s}", h.shape()),
        ));
    }
    let d = h.shape()[1];
    let (hv, rv) = (h.data(), node.r.data());
    let y = (0..n * d)
        .map(|ic| {
            let i = ic / d;
            (0..s).map(|a| rv[i * s + a] * hv[ic * s + a]).sum()
        })
        .collect();
    let (hc, rc) = (h.clone(), node.r.clone());
    Ok(Tensor::from_op(
        vec![n, d],
        y,
        vec![h.clone(), node.r.clone()],
        Box::new(move |g| {
            let (hv, rv) = (hc.data(), rc.data());
            let g_h = hc.requires_grad().then(|| {
                let mut out = vec![T::zero(); n * d * s];
                for ic in 0..n * d {
                    let i = ic / d;
                    for a in 0..s {
                        out[ic * s + a] = g[ic] * rv[i * s + a];
                    }
                }
                out
            });
            let g_r = rc.requires_grad().then(|| {
                let mut out = vec![T::zero(); n * s];
                for ic in 0..n * d {
                    let i = ic / d;
                    for a in 0..s {
                        out[i * s + a] += g[ic] * hv[ic * s + a];
                    }
                }
                out
            });
            vec![g_h, g_r]
        }),
    ))
}
