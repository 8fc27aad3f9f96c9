//! Multi-horizon forecast assembly. Direct-recursive (DirRec) ensembles chain
//! one single-output learner per horizon; MIMO learners emit the whole horizon
//! in one pass. Both end in a [`HorizonForecast`] thresholded by [`binarize`].

use chrono::NaiveDate;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{class_weights, MultiLearner, MultiOutputModel, SingleLearner, SingleOutputModel};
use crate::series::{AnchorState, LagConfig, SupervisedRow};

/// Threshold used before any calibration has run.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// `1` wherever `p >= tau`.
pub fn binarize(probabilities: &[f64], tau: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("threshold must lie in [0, 1], got {tau}")));
    }
    Ok(probabilities.iter().map(|&p| u8::from(p >= tau)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonForecast {
    /// Last observed day; the forecast covers the `H` days after it.
    pub anchor_date: NaiveDate,
    pub probabilities: Vec<f64>,
    pub decisions: Vec<u8>,
    pub threshold: f64,
}

impl HorizonForecast {
    pub fn new(anchor_date: NaiveDate, probabilities: Vec<f64>, threshold: f64) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Numerical(format!("forecast probability {p} outside [0, 1]")));
        }
        let decisions = binarize(&probabilities, threshold)?;
        Ok(Self {
            anchor_date,
            probabilities,
            decisions,
            threshold,
        })
    }

    pub fn horizon(&self) -> usize {
        self.probabilities.len()
    }

    pub fn with_threshold(self, threshold: f64) -> Result<Self> {
        Self::new(self.anchor_date, self.probabilities, threshold)
    }

    /// Date of horizon `h` (1-based).
    pub fn date(&self, h: usize) -> NaiveDate {
        self.anchor_date + chrono::Duration::days(h as i64)
    }
}

fn check_state(state: &AnchorState, lag: &LagConfig) -> Result<()> {
    if state.outcome_depth() != lag.outcome_lags
        || state.covariate_depth() != lag.covariate_lags
        || state.horizon() != lag.horizon
    {
        return Err(Error::InsufficientHistory(format!(
            "state at anchor {} has d_y={}, d_c={}, H={}; the forecaster needs d_y={}, d_c={}, H={}",
            state.anchor,
            state.outcome_depth(),
            state.covariate_depth(),
            state.horizon(),
            lag.outcome_lags,
            lag.covariate_lags,
            lag.horizon
        )));
    }
    Ok(())
}

fn check_rows(rows: &[SupervisedRow], lag: &LagConfig) -> Result<()> {
    lag.validate()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientHistory(format!(
            "{} training row(s); at least 2 are needed",
            rows.len()
        )));
    }
    for row in rows {
        check_state(&row.state, lag)?;
        if row.targets.len() != lag.horizon {
            return Err(Error::invalid(format!(
                "row at anchor {} has {} targets, expected {}",
                row.state.anchor,
                row.targets.len(),
                lag.horizon
            )));
        }
    }
    Ok(())
}

/// Balanced class weights computed separately for each horizon, laid out as
/// `weights[row][h]`.
pub fn horizon_weights(rows: &[SupervisedRow], horizon: usize) -> Result<Vec<Vec<f64>>> {
    let per_h = (0..horizon)
        .map(|h| class_weights(&rows.iter().map(|r| r.targets[h]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows
        .iter()
        .map(|r| r.targets.iter().zip(&per_h).map(|(&y, cw)| cw.weight(y)).collect())
        .collect())
}

/// One fitted learner per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirRecEnsemble<M> {
    pub models: Vec<M>,
    pub lag: LagConfig,
    /// Input width of each horizon's learner.
    pub input_widths: Vec<usize>,
}

/// Trains learner `h` on the lag block, the calendar of `t+h` and, in the
/// `h-1` recycled slots, the true outcomes `y_{t+h-1}, ..., y_{t+1}`.
/// `factory(h)` builds the untrained learner for horizon `h` (1-based).
pub fn dirrec_fit<M, F>(factory: F, rows: &[SupervisedRow], lag: &LagConfig) -> Result<DirRecEnsemble<M>>
where
    M: SingleOutputModel,
    F: Fn(usize) -> M + Sync,
{
    check_rows(rows, lag)?;
    let weights = horizon_weights(rows, lag.horizon)?;
    let fitted = (1..=lag.horizon)
        .into_par_iter()
        .map(|h| {
            let features: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let teacher: Vec<f64> = r.targets[..h - 1].iter().rev().map(|&y| y as f64).collect();
                    r.state.recursive_features(h, &teacher)
                })
                .collect();
            let width = features[0].len();
            let x = Array2::from_shape_vec((rows.len(), width), features.concat()).expect("uniform rows");
            let y: Vec<u8> = rows.iter().map(|r| r.targets[h - 1]).collect();
            let w: Vec<f64> = weights.iter().map(|w| w[h - 1]).collect();
            let mut model = factory(h);
            model.fit(x.view(), &y, &w)?;
            Ok((model, width))
        })
        .collect::<Result<Vec<_>>>()?;
    let (models, input_widths) = fitted.into_iter().unzip();
    Ok(DirRecEnsemble {
        models,
        lag: *lag,
        input_widths,
    })
}

/// Runs the chain, feeding each horizon the probabilities of the earlier ones.
pub fn dirrec_predict<M: SingleOutputModel>(ens: &DirRecEnsemble<M>, state: &AnchorState) -> Result<HorizonForecast> {
    check_state(state, &ens.lag)?;
    let mut probs: Vec<f64> = Vec::with_capacity(ens.models.len());
    for (k, model) in ens.models.iter().enumerate() {
        let recycled: Vec<f64> = probs.iter().rev().copied().collect();
        probs.push(model.predict_proba(&state.recursive_features(k + 1, &recycled)));
    }
    HorizonForecast::new(state.anchor_date, probs, DEFAULT_THRESHOLD)
}

/// Fits a multi-output learner with per-horizon balanced class weights.
pub fn mimo_fit<M: MultiOutputModel + ?Sized>(model: &mut M, rows: &[SupervisedRow], lag: &LagConfig) -> Result<()> {
    check_rows(rows, lag)?;
    if model.horizon() != lag.horizon {
        return Err(Error::Config(format!(
            "model horizon {} differs from lag horizon {}",
            model.horizon(),
            lag.horizon
        )));
    }
    let weights = horizon_weights(rows, lag.horizon)?;
    let states: Vec<AnchorState> = rows.iter().map(|r| r.state.clone()).collect();
    let targets: Vec<Vec<u8>> = rows.iter().map(|r| r.targets.clone()).collect();
    model.fit(&states, &targets, &weights)
}

pub fn mimo_predict<M: MultiOutputModel + ?Sized>(model: &M, state: &AnchorState) -> Result<HorizonForecast> {
    if state.horizon() != model.horizon() {
        return Err(Error::invalid(format!(
            "state carries {} calendar days, model horizon is {}",
            state.horizon(),
            model.horizon()
        )));
    }
    let probs = model.predict_vector(state);
    if probs.len() != model.horizon() {
        return Err(Error::Numerical(format!(
            "model returned {} outputs for horizon {}",
            probs.len(),
            model.horizon()
        )));
    }
    HorizonForecast::new(state.anchor_date, probs, DEFAULT_THRESHOLD)
}

/// A single-output learner used as a one-day multi-output model on the
/// horizon-1 DirRec features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStep<M>(pub M);

impl<M: SingleOutputModel> MultiOutputModel for OneStep<M> {
    fn horizon(&self) -> usize {
        1
    }

    fn fit(&mut self, states: &[AnchorState], targets: &[Vec<u8>], weights: &[Vec<f64>]) -> Result<()> {
        if states.is_empty() {
            return Err(Error::invalid("cannot fit on zero rows"));
        }
        let features: Vec<Vec<f64>> = states.iter().map(|s| s.recursive_features(1, &[])).collect();
        let width = features[0].len();
        let x = Array2::from_shape_vec((states.len(), width), features.concat()).expect("uniform rows");
        let y: Vec<u8> = targets.iter().map(|t| t[0]).collect();
        let w: Vec<f64> = weights.iter().map(|w| w[0]).collect();
        self.0.fit(x.view(), &y, &w)
    }

    fn predict_vector(&self, state: &AnchorState) -> Vec<f64> {
        vec![self.0.predict_proba(&state.recursive_features(1, &[]))]
    }
}

/// A fitted forecaster of either strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Forecaster {
    DirRec(DirRecEnsemble<SingleLearner>),
    Mimo { model: MultiLearner, lag: LagConfig },
}

impl Forecaster {
    pub fn lag(&self) -> &LagConfig {
        match self {
            Forecaster::DirRec(e) => &e.lag,
            Forecaster::Mimo { lag, .. } => lag,
        }
    }

    pub fn predict(&self, state: &AnchorState) -> Result<HorizonForecast> {
        match self {
            Forecaster::DirRec(e) => dirrec_predict(e, state),
            Forecaster::Mimo { model, lag } => {
                check_state(state, lag)?;
                mimo_predict(model, state)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticRegression, Mlp, RandomForest, TrainingConfig};
    use crate::series::{Dataset, DailyCovariates, EncodedHistory, EncodingSpec};
    use ndarray::ArrayView2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn history(len: usize, seed: u64) -> EncodedHistory {
        let start = NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Vec::with_capacity(len);
        let mut covs = Vec::with_capacity(len);
        for i in 0..len {
            let mut c = DailyCovariates::empty(start + chrono::Duration::days(i as i64));
            c.num_safety_inspections = rng.random_range(0..3);
            c.num_hazardous_situations = rng.random_range(0..4) * c.num_safety_inspections;
            y.push(u8::from(rng.random::<f64>() < 0.1 + 0.15 * c.num_hazardous_situations.min(3) as f64));
            covs.push(c);
        }
        EncodedHistory::new(&Dataset::from_parts(start, y, covs).unwrap(), &EncodingSpec::default()).unwrap()
    }

    #[test]
    fn binarize_table_week() {
        let p = [0.996, 0.620, 0.002, 0.001, 0.012, 0.001, 0.013];
        assert_eq!(binarize(&p, 0.6).unwrap(), vec![1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(binarize(&p, 0.0).unwrap(), vec![1; 7]);
        assert_eq!(binarize(&[0.35], 0.35).unwrap(), vec![1]);
        assert!(binarize(&p, 1.5).is_err());
    }

    #[test]
    fn raising_threshold_never_adds_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let mut prev = binarize(&p, 0.0).unwrap();
        for k in 1..=20 {
            let next = binarize(&p, k as f64 * 0.05).unwrap();
            assert!(prev.iter().zip(&next).all(|(a, b)| b <= a));
            prev = next;
        }
    }

    #[test]
    fn dirrec_widths_grow_by_one_per_horizon() {
        let hist = history(120, 1);
        let lag = LagConfig::new(3, 2, 3).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        let ens = dirrec_fit(|_| LogisticRegression::new(0.1, 20, 0.0), &rows, &lag).unwrap();
        assert_eq!(ens.models.len(), 3);
        let base = rows[0].state.base_width() + crate::series::CALENDAR_WIDTH;
        assert_eq!(ens.input_widths, vec![base, base + 1, base + 2]);
        assert_eq!(ens.models[2].coefficients().len(), base + 2);
    }

    #[test]
    fn dirrec_h1_is_the_direct_classifier() {
        let hist = history(150, 2);
        let lag = LagConfig::new(4, 4, 1).unwrap();
        let rows = hist.view().build_rows(&lag, 120).unwrap();
        let ens = dirrec_fit(|_| LogisticRegression::new(0.1, 50, 0.01), &rows, &lag).unwrap();

        let x: Vec<f64> = rows.iter().flat_map(|r| r.state.recursive_features(1, &[])).collect();
        let x = Array2::from_shape_vec((rows.len(), x.len() / rows.len()), x).unwrap();
        let y: Vec<u8> = rows.iter().map(|r| r.targets[0]).collect();
        let cw = class_weights(&y).unwrap();
        let w: Vec<f64> = y.iter().map(|&v| cw.weight(v)).collect();
        let mut direct = LogisticRegression::new(0.1, 50, 0.01);
        direct.fit(x.view(), &y, &w).unwrap();

        let mut mimo = OneStep(LogisticRegression::new(0.1, 50, 0.01));
        mimo_fit(&mut mimo, &rows, &lag).unwrap();

        for t in 120..149 {
            let state = hist.view().anchor_state(t, &lag).unwrap();
            let p = dirrec_predict(&ens, &state).unwrap().probabilities;
            assert_eq!(p, vec![direct.predict_proba(&state.recursive_features(1, &[]))]);
            assert_eq!(mimo_predict(&mimo, &state).unwrap().probabilities, p);
        }
    }

    /// Fixed linear-logistic learner on the first few inputs; `fit` records
    /// the first column it was given.
    #[derive(Debug, Clone)]
    struct Fixed {
        w: Vec<f64>,
        b: f64,
        seen: Vec<f64>,
    }

    impl SingleOutputModel for Fixed {
        fn fit(&mut self, x: ArrayView2<'_, f64>, _y: &[u8], _w: &[f64]) -> Result<()> {
            self.seen = x.column(0).to_vec();
            Ok(())
        }

        fn predict_proba(&self, x: &[f64]) -> f64 {
            let z: f64 = self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b;
            1.0 / (1.0 + (-z).exp())
        }
    }

    #[test]
    fn dirrec_recursion_matches_hand_computation() {
        // three days 1, 0, 1 with d_y = 2: the state at t = 2 has lags (1, 0)
        let start = NaiveDate::from_ymd_opt(2023, 1, 2).unwrap();
        let covs = (0..3).map(|i| DailyCovariates::empty(start + chrono::Duration::days(i))).collect();
        let ds = Dataset::from_parts(start, vec![1, 0, 1], covs).unwrap();
        let hist = EncodedHistory::new(&ds, &EncodingSpec::default()).unwrap();
        let lag = LagConfig::new(2, 1, 2).unwrap();
        let state = hist.view().anchor_state(2, &lag).unwrap();
        let ens = DirRecEnsemble {
            // h = 1 sees (y_t, y_{t-1}, ...); h = 2 sees (p1, y_t, y_{t-1}, ...)
            models: vec![
                Fixed { w: vec![0.5, -1.5], b: -0.2, seen: vec![] },
                Fixed { w: vec![2.0, 0.3, 0.7], b: -1.0, seen: vec![] },
            ],
            lag,
            input_widths: vec![],
        };
        let out = dirrec_predict(&ens, &state).unwrap();
        let p1 = 1.0 / (1.0 + (-(0.5 * 1.0 - 1.5 * 0.0 - 0.2f64)).exp());
        let p2 = 1.0 / (1.0 + (-(2.0 * p1 + 0.3 * 1.0 + 0.7 * 0.0 - 1.0f64)).exp());
        assert_eq!(out.probabilities, vec![p1, p2]);
    }

    #[test]
    fn dirrec_trains_with_teacher_forcing() {
        let hist = history(60, 4);
        let lag = LagConfig::new(2, 2, 3).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        let ens = dirrec_fit(|_| Fixed { w: vec![], b: 0.0, seen: vec![] }, &rows, &lag).unwrap();
        let y1: Vec<f64> = rows.iter().map(|r| r.targets[0] as f64).collect();
        let y2: Vec<f64> = rows.iter().map(|r| r.targets[1] as f64).collect();
        assert_eq!(ens.models[1].seen, y1);
        assert_eq!(ens.models[2].seen, y2);
        // horizon 1 starts with the most recent outcome lag
        let lag0: Vec<f64> = rows.iter().map(|r| r.state.outcome_lags[0]).collect();
        assert_eq!(ens.models[0].seen, lag0);
    }

    #[test]
    fn constant_learners_propagate_constants() {
        let hist = history(40, 5);
        let lag = LagConfig::new(2, 2, 4).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        let ens = dirrec_fit(|_| Fixed { w: vec![], b: 0.0, seen: vec![] }, &rows, &lag).unwrap();
        let state = hist.view().anchor_state(35, &lag).unwrap();
        assert_eq!(dirrec_predict(&ens, &state).unwrap().probabilities, vec![0.5; 4]);
    }

    #[test]
    fn dirrec_fit_is_deterministic() {
        let hist = history(100, 6);
        let lag = LagConfig::new(3, 3, 2).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        let fit = || dirrec_fit(|h| RandomForest::new(5, 3, 10 + h as u64), &rows, &lag).unwrap();
        assert_eq!(fit(), fit());
    }

    #[test]
    fn too_few_rows_or_wrong_state_fail() {
        let hist = history(30, 7);
        let lag = LagConfig::new(2, 2, 2).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        assert!(dirrec_fit(|_| LogisticRegression::default(), &rows[..1], &lag).is_err());
        let ens = dirrec_fit(|_| LogisticRegression::default(), &rows, &lag).unwrap();
        let other = hist.view().anchor_state(20, &LagConfig::new(3, 2, 2).unwrap()).unwrap();
        assert!(matches!(dirrec_predict(&ens, &other), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn mimo_outputs_full_horizon_and_is_pure() {
        let hist = history(80, 8);
        let lag = LagConfig::new(3, 3, 7).unwrap();
        let rows = hist.view().build_rows(&lag, hist.len()).unwrap();
        let cfg = TrainingConfig { hidden_units: 4, epochs: 2, ..TrainingConfig::default() };
        let mut mlp = Mlp::new(cfg, 7);
        mlp.zero_output_init = true;
        mlp.initialize(&rows.iter().map(|r| r.state.clone()).collect::<Vec<_>>()).unwrap();
        let state = hist.view().anchor_state(79, &lag).unwrap();
        let f = mimo_predict(&mlp, &state).unwrap();
        assert_eq!(f.probabilities, vec![0.5; 7]);
        assert_eq!(f.decisions, vec![1; 7]);

        mimo_fit(&mut mlp, &rows, &lag).unwrap();
        let a = mimo_predict(&mlp, &state).unwrap();
        assert_eq!(a.horizon(), 7);
        assert_eq!(a, mimo_predict(&mlp, &state).unwrap());
    }
}
