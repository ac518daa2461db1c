use crate::error::{Error, Result};
use crate::fed::client::ClientUpdate;
use crate::nn::ParamSet;

/// Sample-weighted averaging: `w_new = global + sum_k p_k * delta_k` with
/// `p_k = n_k / sum(n)`, i.e. the n-weighted mean of the local models.
///
/// Sums accumulate in f64 in client-id order before casting back, so the
/// result is independent of the order updates arrive in.
pub fn aggregate_weighted(
    global: &ParamSet<f32>,
    updates: &[ClientUpdate],
) -> Result<ParamSet<f32>> {
    let ordered = ordered_updates(global, updates)?;
    let total_n: f64 = ordered.iter().map(|u| u.n as f64).sum();
    let mut acc = vec![0f64; global.param_count()];
    for u in &ordered {
        let p = u.n as f64 / total_n;
        let mut offset = 0;
        for (_, t) in u.delta.entries() {
            for (av, &dv) in acc[offset..offset + t.len()].iter_mut().zip(t.data()) {
                *av += p * dv as f64;
            }
            offset += t.len();
        }
    }
    apply_accumulated(global, &acc)
}

/// Step-normalized averaging: with `p_k = n_k / sum(n)`, per-step
/// directions `d_k = delta_k / tau_k` and effective steps
/// `tau_eff = sum_k p_k * tau_k`,
/// `w_new = global + tau_eff * sum_k p_k * d_k`.
pub fn aggregate_normalized(
    global: &ParamSet<f32>,
    updates: &[ClientUpdate],
) -> Result<ParamSet<f32>> {
    let ordered = ordered_updates(global, updates)?;
    for u in &ordered {
        if u.tau == 0 {
            return Err(Error::InvalidParam(format!(
                "client {} reports tau = 0",
                u.client_id
            )));
        }
    }
    let total_n: f64 = ordered.iter().map(|u| u.n as f64).sum();
    let tau_eff: f64 = ordered
        .iter()
        .map(|u| (u.n as f64 / total_n) * u.tau as f64)
        .sum();
    let mut acc = vec![0f64; global.param_count()];
    for u in &ordered {
        let coeff = (u.n as f64 / total_n) / u.tau as f64;
        let mut offset = 0;
        for (_, t) in u.delta.entries() {
            for (av, &dv) in acc[offset..offset + t.len()].iter_mut().zip(t.data()) {
                *av += coeff * dv as f64;
            }
            offset += t.len();
        }
    }
    for a in &mut acc {
        *a *= tau_eff;
    }
    apply_accumulated(global, &acc)
}

/// Validate and return updates sorted by client id.
fn ordered_updates<'a>(
    global: &ParamSet<f32>,
    updates: &'a [ClientUpdate],
) -> Result<Vec<&'a ClientUpdate>> {
    if updates.is_empty() {
        return Err(Error::InvalidParam("no client updates to aggregate".into()));
    }
    let mut ordered: Vec<&ClientUpdate> = updates.iter().collect();
    ordered.sort_by_key(|u| u.client_id);
    for pair in ordered.windows(2) {
        if pair[0].client_id == pair[1].client_id {
            return Err(Error::InvalidParam(format!(
                "duplicate client id {} in aggregation",
                pair[0].client_id
            )));
        }
    }
    for u in &ordered {
        global.compatible(&u.delta, "aggregate deltas")?;
        if u.n == 0 {
            return Err(Error::InvalidParam(format!(
                "client {} reports n = 0",
                u.client_id
            )));
        }
    }
    Ok(ordered)
}

fn apply_accumulated(global: &ParamSet<f32>, acc: &[f64]) -> Result<ParamSet<f32>> {
    let mut out = Vec::with_capacity(global.entries().len());
    let mut offset = 0;
    for (name, t) in global.entries() {
        let data = t
            .data()
            .iter()
            .zip(&acc[offset..offset + t.len()])
            .map(|(&g, &a)| (g as f64 + a) as f32)
            .collect();
        offset += t.len();
        out.push((
            name.clone(),
            crate::nn::Tensor::new(t.shape().to_vec(), data)?,
        ));
    }
    ParamSet::new(out)
}
