use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tape::{Tape, Var};
use super::{ModelConfig, Param, ParamKind};
use crate::dynamics::{predict_dominance, ChannelMixer, DominanceReport, GraphClass, Scheme};
use crate::error::{dims, invalid, Error, Result};
use crate::linalg::eigen_spectrum;
use crate::graph::SnaMatrix;
use crate::spectral::{normality_defect, SnaFactors};

/// One gradient matrix per parameter, in parameter order.
pub type Gradients = Vec<DMatrix<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub encoder: Vec<(usize, usize)>,
    pub decoder: Vec<(usize, usize)>,
    pub alpha: usize,
    pub h_re: usize,
    pub h_im: Option<usize>,
    pub w_re: usize,
    pub w_im: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FlodeModel {
    pub(crate) config: ModelConfig,
    pub(crate) in_dim: usize,
    pub(crate) num_classes: usize,
    pub(crate) params: Vec<Param>,
    pub(crate) layout: Layout,
    pub(crate) factors: Arc<SnaFactors>,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

pub(crate) fn build_layout(config: &ModelConfig, in_dim: usize, num_classes: usize) -> (Layout, Vec<(String, ParamKind, usize, usize)>) {
    let k = config.hidden_channels;
    let schrodinger = config.scheme == Scheme::Schrodinger;
    let mut specs = Vec::new();
    let mut add = |name: String, kind, r, c| {
        specs.push((name, kind, r, c));
        specs.len() - 1
    };
    let mut encoder = Vec::new();
    for l in 0..config.encoder_layers {
        let fan_in = if l == 0 { in_dim } else { k };
        let w = add(format!("encoder.{l}.weight"), ParamKind::Weight, fan_in, k);
        let b = add(format!("encoder.{l}.bias"), ParamKind::Bias, 1, k);
        encoder.push((w, b));
    }
    let alpha = add("alpha".into(), ParamKind::Exponent, 1, 1);
    let h_re = add("step.re".into(), ParamKind::StepRe, 1, 1);
    let h_im = schrodinger.then(|| add("step.im".into(), ParamKind::StepIm, 1, 1));
    let w_re = add("mixer.re".into(), ParamKind::MixerRe, 1, k);
    let w_im = schrodinger.then(|| add("mixer.im".into(), ParamKind::MixerIm, 1, k));
    let mut decoder = Vec::new();
    for l in 0..config.decoder_layers {
        let fan_in = match (l, schrodinger) {
            (0, true) => 2 * k,
            _ => k,
        };
        let out = if l + 1 == config.decoder_layers { num_classes } else { k };
        let w = add(format!("decoder.{l}.weight"), ParamKind::Weight, fan_in, out);
        let b = add(format!("decoder.{l}.bias"), ParamKind::Bias, 1, out);
        decoder.push((w, b));
    }
    (Layout { encoder, decoder, alpha, h_re, h_im, w_re, w_im }, specs)
}

/// Builds a model with MLP weights and biases drawn from
/// `uniform(±1/√fan_in)`, `α = 1`, `h = 1`, and mixer entries from
/// `uniform(±1/√K)` (imaginary parts only for Schrödinger layers).
pub fn init_model(
    config: &ModelConfig,
    factors: Arc<SnaFactors>,
    in_dim: usize,
    num_classes: usize,
    seed: u64,
) -> Result<FlodeModel> {
    config.validate()?;
    if in_dim == 0 || num_classes == 0 {
        return Err(invalid("input dimension and class count must be positive"));
    }
    let (layout, specs) = build_layout(config, in_dim, num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = config.hidden_channels as f64;
    let mut params = Vec::with_capacity(specs.len());
    for (idx, (name, kind, r, c)) in specs.into_iter().enumerate() {
        let value = match kind {
            ParamKind::Weight => uniform(&mut rng, r, c, 1.0 / (r as f64).sqrt()),
            ParamKind::Bias => {
                let fan_in = params.last().map_or(1, |p: &Param| p.value.nrows());
                uniform(&mut rng, r, c, 1.0 / (fan_in as f64).sqrt())
            }
            ParamKind::Exponent | ParamKind::StepRe => DMatrix::from_element(1, 1, 1.0),
            ParamKind::StepIm => DMatrix::zeros(1, 1),
            ParamKind::MixerRe | ParamKind::MixerIm => uniform(&mut rng, r, c, 1.0 / k.sqrt()),
        };
        debug_assert_eq!(idx, params.len());
        params.push(Param { name, kind, value });
    }
    Ok(FlodeModel { config: config.clone(), in_dim, num_classes, params, layout, factors })
}

impl FlodeModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn factors(&self) -> &Arc<SnaFactors> {
        &self.factors
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Replaces the value of a named parameter, keeping its shape.
    pub fn set_param(&mut self, name: &str, value: DMatrix<f64>) -> Result<()> {
        let p = self
            .params
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| invalid(format!("no parameter named {name}")))?;
        if p.value.shape() != value.shape() {
            return Err(dims(format!("{name} has shape {:?}, got {:?}", p.value.shape(), value.shape())));
        }
        p.value = value;
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn alpha(&self) -> f64 {
        self.params[self.layout.alpha].value[(0, 0)]
    }

    pub fn step(&self) -> Complex64 {
        let re = self.params[self.layout.h_re].value[(0, 0)];
        let im = self.layout.h_im.map_or(0.0, |i| self.params[i].value[(0, 0)]);
        Complex64::new(re, im)
    }

    /// The learned diagonal channel mixer `W`.
    pub fn mixer(&self) -> ChannelMixer {
        let re = &self.params[self.layout.w_re].value;
        match self.layout.w_im {
            None => ChannelMixer::heat(re.iter().copied().collect()),
            Some(i) => ChannelMixer::schrodinger(
                re.iter().zip(self.params[i].value.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect(),
            ),
        }
    }

    /// `h W`, the mixer seen by the continuous dynamics the layers discretize.
    pub fn effective_mixer(&self) -> ChannelMixer {
        let h = self.step();
        let mut m = self.mixer();
        for w in &mut m.diag_w {
            *w *= h;
        }
        m
    }

    /// Keeps the heat step nonnegative after an optimizer update.
    pub(crate) fn project(&mut self) {
        if self.config.scheme == Scheme::Heat {
            let h = &mut self.params[self.layout.h_re].value[(0, 0)];
            *h = h.max(0.0);
        }
    }
}

fn dropout_mask(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: f64) -> DMatrix<f64> {
    let keep = 1.0 / (1.0 - p);
    DMatrix::from_fn(rows, cols, |_, _| if rng.random::<f64>() < p { 0.0 } else { keep })
}

fn maybe_dropout(tape: &mut Tape, x: Var, p: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Var {
    match rng {
        Some(r) if p > 0.0 => {
            let (n, c) = tape.value(x).shape();
            let m = dropout_mask(r, n, c, p);
            tape.mask(x, m)
        }
        _ => x,
    }
}

fn linear(tape: &mut Tape, x: Var, w: Var, b: Var) -> Var {
    let y = tape.matmul(x, w);
    tape.add_row(y, b)
}

fn check_finite(tape: &Tape, v: Var, what: impl FnOnce() -> String) -> Result<()> {
    if tape.value(v).iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what()))
    }
}

/// Records the full network on `tape`, returning the parameter variables and the logits.
pub(crate) fn record_forward(
    model: &FlodeModel,
    tape: &mut Tape,
    x: &DMatrix<f64>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Vec<Var>, Var)> {
    if x.nrows() != model.factors.dim() || x.ncols() != model.in_dim {
        return Err(dims(format!(
            "features are {:?}, model expects {}x{}",
            x.shape(),
            model.factors.dim(),
            model.in_dim
        )));
    }
    let pv: Vec<Var> = model.params.iter().map(|p| tape.leaf(p.value.clone())).collect();
    let lay = &model.layout;
    let input = tape.leaf(x.clone());
    let mut h = maybe_dropout(tape, input, model.config.input_dropout, &mut rng);
    for (l, &(w, b)) in lay.encoder.iter().enumerate() {
        h = linear(tape, h, pv[w], pv[b]);
        if l + 1 < lay.encoder.len() {
            h = tape.leaky_relu(h);
        }
    }
    let alpha = pv[lay.alpha];
    let (h_re, w_re) = (pv[lay.h_re], pv[lay.w_re]);
    let decoder_in = match (lay.h_im, lay.w_im) {
        (Some(hi), Some(wi)) => {
            let (h_im, w_im) = (pv[hi], pv[wi]);
            let s = model.config.sign.value();
            let mut xr = h;
            let mut xi: Option<Var> = None;
            for layer in 0..model.config.num_layers {
                let yr = tape.spectral_power(xr, alpha);
                let mut zr = tape.col_scale(yr, w_re);
                let mut zi = tape.col_scale(yr, w_im);
                if let Some(xi) = xi {
                    let yi = tape.spectral_power(xi, alpha);
                    let a = tape.col_scale(yi, w_im);
                    zr = tape.sub(zr, a);
                    let b = tape.col_scale(yi, w_re);
                    zi = tape.add(zi, b);
                }
                // i h z = -(h_re z_im + h_im z_re) + i (h_re z_re - h_im z_im)
                let t1 = tape.scalar_mul(zi, h_re);
                let t2 = tape.scalar_mul(zr, h_im);
                let neg_re = tape.add(t1, t2);
                let t3 = tape.scalar_mul(zr, h_re);
                let t4 = tape.scalar_mul(zi, h_im);
                let im_part = tape.sub(t3, t4);
                let d_re = tape.scale(neg_re, s);
                xr = tape.sub(xr, d_re);
                let d_im = tape.scale(im_part, s);
                xi = Some(match xi {
                    Some(prev) => tape.add(prev, d_im),
                    None => d_im,
                });
                check_finite(tape, xr, || format!("graph layer {layer} (real part)"))?;
                check_finite(tape, xi.expect("set above"), || format!("graph layer {layer} (imaginary part)"))?;
            }
            tape.concat_cols(xr, xi.expect("at least one graph layer"))
        }
        _ => {
            let mut xr = h;
            for layer in 0..model.config.num_layers {
                let y = tape.spectral_power(xr, alpha);
                let z = tape.col_scale(y, w_re);
                let hz = tape.scalar_mul(z, h_re);
                xr = tape.sub(xr, hz);
                check_finite(tape, xr, || format!("graph layer {layer}"))?;
            }
            xr
        }
    };
    let mut h = decoder_in;
    for (l, &(w, b)) in lay.decoder.iter().enumerate() {
        if l > 0 {
            h = tape.leaky_relu(h);
        }
        h = maybe_dropout(tape, h, model.config.decoder_dropout, &mut rng);
        h = linear(tape, h, pv[w], pv[b]);
    }
    check_finite(tape, h, || "logits".into())?;
    Ok((pv, h))
}

/// Logits `N × num_classes`. Dropout masks are drawn from `rng` only when
/// `dropout_active` is set.
pub fn forward(model: &FlodeModel, x: &DMatrix<f64>, dropout_active: bool, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let mut tape = Tape::with_factors(&model.factors);
    let (_, logits) = record_forward(model, &mut tape, x, dropout_active.then_some(rng))?;
    Ok(tape.value(logits).clone())
}

fn check_targets(model: &FlodeModel, labels: &[usize], mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(invalid("mask is empty"));
    }
    let n = model.factors.dim();
    if labels.len() != n {
        return Err(dims(format!("{} labels for {n} nodes", labels.len())));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= n) {
        return Err(Error::NodeOutOfRange { index: i, num_nodes: n });
    }
    if let Some(&c) = mask.iter().map(|&i| &labels[i]).find(|&&c| c >= model.num_classes) {
        return Err(invalid(format!("label {c} exceeds the {} classes", model.num_classes)));
    }
    Ok(())
}

pub(crate) fn loss_and_grads_with(
    model: &FlodeModel,
    x: &DMatrix<f64>,
    labels: &[usize],
    mask: &[usize],
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients, Vec<bool>)> {
    check_targets(model, labels, mask)?;
    let mut tape = Tape::with_factors(&model.factors);
    let (pv, logits) = record_forward(model, &mut tape, x, rng)?;
    let loss = tape.softmax_xent(logits, labels, mask);
    let value = tape.value(loss)[(0, 0)];
    if !value.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    let mut grads = tape.backward(loss);
    let out = pv
        .iter()
        .zip(&model.params)
        .map(|(v, p)| grads[v.0].take().unwrap_or_else(|| DMatrix::zeros(p.value.nrows(), p.value.ncols())))
        .collect();
    Ok((value, out, tape.activation_pattern()))
}

/// Mean cross-entropy over `mask` and its gradient for every parameter, without dropout.
pub fn loss_and_grads(model: &FlodeModel, x: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> Result<(f64, Gradients)> {
    loss_and_grads_with(model, x, labels, mask, None).map(|(l, g, _)| (l, g))
}

/// Fraction of `mask` rows whose argmax matches the label; ties resolve to
/// the lowest class index.
pub fn accuracy(logits: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(invalid("mask is empty"));
    }
    let mut hits = 0usize;
    for &i in mask {
        let row = logits.row(i);
        let mut best = 0;
        for c in 1..row.len() {
            if row[c] > row[best] {
                best = c;
            }
        }
        hits += usize::from(best == labels[i]);
    }
    Ok(hits as f64 / mask.len() as f64)
}

/// Accuracy of the model without dropout.
pub fn evaluate(model: &FlodeModel, x: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    check_targets(model, labels, mask)?;
    let mut tape = Tape::with_factors(&model.factors);
    let (_, logits) = record_forward(model, &mut tape, x, None)?;
    accuracy(tape.value(logits), labels, mask)
}

/// Which frequency the learned `(α, hW)` amplifies on the model's operator.
/// Normal operators use the fractional theory; other operators need `α = 1`.
pub fn dominance_audit(model: &FlodeModel) -> Result<DominanceReport> {
    let s = model.factors.reconstruct();
    let spec = eigen_spectrum(&s, false)?;
    let class = if spec.symmetric || normality_defect(&SnaMatrix::from_matrix(s.clone(), model.factors.policy)?) <= 1e-8 {
        GraphClass::UndirectedOrNormal
    } else {
        GraphClass::DirectedAlpha1
    };
    predict_dominance(&spec, &model.effective_mixer(), model.alpha(), model.config.sign, class)
}
