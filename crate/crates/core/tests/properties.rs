use std::collections::{HashMap, HashSet};
use std::f64::consts::LN_2;

use mp2_core::data::{
    binarize, sample_pairs, split_leave_latest_out, IdMap, Interaction, TestCase, DEFAULT_THRESHOLD,
};
use mp2_core::eval::{evaluate, hit_rate_at_k, ndcg_at_k, RepresentationScorer};
use mp2_core::layers::{
    embed_lookup, mlp_forward, Activation, MlpSpec, SparseLookup, TowerParams,
};
use mp2_core::losses::{pairwise_logistic, pairwise_logistic_margin, pointwise_ce};
use mp2_core::models::{label_weight, momentum_update, Hyperparams, ModelKind, ModelState, WeightingMode};
use mp2_core::numerics::{Matrix, OptimizerKind, OptimizerState, RngSeed};
use proptest::prelude::*;

fn vec_of(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

fn column_tower(values: Vec<f64>) -> TowerParams<f64> {
    TowerParams::from_parts(Matrix::column(values), vec![], vec![], Activation::Relu).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn losses_nonnegative_and_finite(z in -700.0f64..700.0, w in -700.0f64..700.0) {
        for y in [0.0, 1.0] {
            let l = pointwise_ce(z, y);
            prop_assert!(l.is_finite() && l >= 0.0);
        }
        let p = pairwise_logistic(z, w);
        prop_assert!(p.is_finite() && p >= 0.0);
    }

    #[test]
    fn losses_decrease_in_correct_direction(a in -30.0f64..30.0, gap in 1e-3f64..5.0) {
        let b = a + gap;
        prop_assert!(pointwise_ce(b, 1.0) < pointwise_ce(a, 1.0));
        prop_assert!(pointwise_ce(a, 0.0) < pointwise_ce(b, 0.0));
        prop_assert!(pairwise_logistic_margin(b) < pairwise_logistic_margin(a));
    }

    #[test]
    fn pairwise_symmetric_sum(d in -50.0f64..50.0) {
        let s = pairwise_logistic_margin(d) + pairwise_logistic_margin(-d);
        prop_assert!(s >= 2.0 * LN_2 - 1e-15);
        if d.abs() > 1e-6 {
            prop_assert!(s > 2.0 * LN_2);
        }
    }

    #[test]
    fn ema_is_a_convex_combination(
        m in vec_of(6, -5.0, 5.0),
        v in vec_of(6, -5.0, 5.0),
        alpha in 0.0f64..=1.0,
    ) {
        let mut mt = column_tower(m.clone());
        momentum_update(&mut mt, &column_tower(v.clone()), alpha).unwrap();
        for ((&new, &a), &b) in mt.embedding.as_slice().iter().zip(&m).zip(&v) {
            prop_assert!(new >= a.min(b) && new <= a.max(b));
        }
    }

    #[test]
    fn weights_in_unit_interval(dj in 0.0f64..50.0, dt in 0.0f64..50.0) {
        for mode in [WeightingMode::Joint, WeightingMode::Separate, WeightingMode::Uniform] {
            let w = label_weight(dj, dt, mode).unwrap();
            for x in [w.item_j, w.item_t] {
                prop_assert!(x > 0.0 && x <= 1.0);
            }
        }
        let joint = label_weight(dj, dt, WeightingMode::Joint).unwrap().item_j;
        prop_assert_eq!(joint == 1.0, dj + dt == 0.0);
    }

    #[test]
    fn lookup_is_linear_in_weights(
        table in vec_of(12, -1.0, 1.0),
        a in vec_of(2, -2.0, 2.0),
        lambda in -3.0f64..3.0,
    ) {
        let t = Matrix::new(4, 3, table).unwrap();
        let base = SparseLookup::new(vec![0, 2], a).unwrap();
        let lhs = embed_lookup(&base.scaled(lambda), &t).unwrap();
        let rhs: Vec<f64> = embed_lookup(&base, &t).unwrap().iter().map(|x| lambda * x).collect();
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn mlp_forward_deterministic_and_relu_homogeneous(
        x in vec_of(4, -2.0, 2.0),
        c in 0.1f64..10.0,
        seed in any::<u64>(),
    ) {
        let spec = MlpSpec::new(vec![4, 5, 3], Activation::Relu).unwrap();
        let tower = TowerParams::<f64>::init(1, 4, Some(&spec), RngSeed(seed)).unwrap();
        let (y1, c1) = mlp_forward(&x, &tower).unwrap();
        let (y2, _) = mlp_forward(&x, &tower).unwrap();
        prop_assert_eq!(y1, y2);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let (_, c2) = mlp_forward(&scaled, &tower).unwrap();
        for (za, zb) in c1.pre_activations.iter().flatten().zip(c2.pre_activations.iter().flatten()) {
            prop_assert!((zb - c * za).abs() <= 1e-10 * (1.0 + (c * za).abs()));
        }
    }

    #[test]
    fn zero_learning_rate_is_bit_identical(
        p in vec_of(5, -3.0, 3.0),
        g in vec_of(5, -3.0, 3.0),
        adam in any::<bool>(),
    ) {
        let kind = if adam { OptimizerKind::Adam } else { OptimizerKind::Sgd };
        let mut params = Matrix::column(p.clone());
        let mut state = OptimizerState::new(kind, 0.0, 5, 1).unwrap();
        state.apply_step(&mut params, &Matrix::column(g)).unwrap();
        prop_assert_eq!(params.as_slice(), p.as_slice());
    }

    #[test]
    fn sgd_is_linear_in_gradient(
        p in vec_of(4, -3.0, 3.0),
        g1 in vec_of(4, -3.0, 3.0),
        g2 in vec_of(4, -3.0, 3.0),
        lr in 1e-4f64..1.0,
    ) {
        let run = |g: &[f64]| {
            let mut m = Matrix::column(p.clone());
            OptimizerState::sgd(lr, &m).unwrap().apply_step(&mut m, &Matrix::column(g.to_vec())).unwrap();
            m.into_vec()
        };
        let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
        let both = run(&sum);
        let one = run(&g1);
        let two = run(&g2);
        for i in 0..4 {
            let expected = one[i] + two[i] - p[i];
            prop_assert!((both[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    /// Over at most five steps the bias-corrected ratio m̂/√v̂ stays within
    /// about 1% of 1 for any gradient sequence and scale.
    #[test]
    fn adam_step_bounded_by_learning_rate(
        grads in prop::collection::vec(vec_of(3, -1.0, 1.0), 1..6),
        scale in -6i32..6,
        lr in 1e-4f64..1e-1,
    ) {
        let s = 10f64.powi(scale);
        let mut params = Matrix::zeros(3, 1);
        let mut state = OptimizerState::adam(lr, &params).unwrap();
        for g in grads {
            let before = params.clone();
            let g = Matrix::column(g.iter().map(|x| x * s).collect());
            state.apply_step(&mut params, &g).unwrap();
            prop_assert!(params.max_abs_diff(&before) <= lr * 1.02);
        }
    }

    #[test]
    fn metrics_monotone(r1 in 1usize..200, r2 in 1usize..200, k1 in 1usize..50, k2 in 1usize..50) {
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let (ks, kl) = (k1.min(k2), k1.max(k2));
        prop_assert!(hit_rate_at_k(lo, ks) >= hit_rate_at_k(hi, ks));
        prop_assert!(ndcg_at_k(lo, ks) >= ndcg_at_k(hi, ks));
        prop_assert!(hit_rate_at_k(lo, kl) >= hit_rate_at_k(lo, ks));
        prop_assert!(ndcg_at_k(lo, kl) >= ndcg_at_k(lo, ks));
    }

    #[test]
    fn id_map_is_a_bijection(raw in prop::collection::vec("[a-z0-9]{1,6}", 1..40)) {
        let mut map = IdMap::new();
        for r in &raw {
            map.intern(r);
        }
        let distinct: HashSet<&String> = raw.iter().collect();
        prop_assert_eq!(map.len(), distinct.len());
        for r in &raw {
            let dense = map.encode(r).unwrap();
            prop_assert_eq!(map.decode(dense), Some(r.as_str()));
        }
    }

    #[test]
    fn pairs_respect_ratings_and_binarize(
        ratings in prop::collection::vec((0usize..5, 0usize..30, 1u8..=5), 1..120),
        per_user in 1usize..15,
        seed in any::<u64>(),
    ) {
        let data: Vec<Interaction> = ratings
            .iter()
            .enumerate()
            .map(|(i, &(user, item, r))| Interaction { user, item, rating: r as f64, timestamp: i as i64 })
            .collect();
        let mut latest: HashMap<(usize, usize), f64> = HashMap::new();
        for it in &data {
            latest.insert((it.user, it.item), it.rating);
        }
        for s in sample_pairs(&data, per_user, DEFAULT_THRESHOLD, RngSeed(seed)) {
            let rj = latest[&(s.user, s.item_j)];
            let rt = latest[&(s.user, s.item_t)];
            prop_assert!(rj > rt);
            prop_assert_eq!(s.y_j, binarize(rj, DEFAULT_THRESHOLD));
            prop_assert_eq!(s.y_t, binarize(rt, DEFAULT_THRESHOLD));
        }
    }

    #[test]
    fn split_never_leaks_test_pairs(
        ratings in prop::collection::vec((0usize..6, 0usize..40, 1u8..=5, 0i64..50), 1..150),
        seed in any::<u64>(),
    ) {
        let data: Vec<Interaction> = ratings
            .iter()
            .map(|&(user, item, r, timestamp)| Interaction { user, item, rating: r as f64, timestamp })
            .collect();
        let mut split = split_leave_latest_out(&data, 6, 300, DEFAULT_THRESHOLD);
        let train: HashSet<(usize, usize)> = split.train.iter().map(|it| (it.user, it.item)).collect();
        for tc in &split.test {
            prop_assert!(!train.contains(&(tc.user, tc.item)));
        }
        split.attach_negatives(20, RngSeed(seed)).unwrap();
        let seen = split.interacted();
        for tc in &split.test {
            prop_assert!(tc.negatives.iter().all(|n| !seen[tc.user].contains(n)));
        }
    }

    #[test]
    fn evaluation_ignores_monotone_transforms(seed in any::<u64>(), shift in -3.0f64..3.0, scale in 0.1f64..5.0) {
        let score = move |u: usize, i: usize| {
            let h = RngSeed(seed).derive_indexed("s", (u * 1000 + i) as u64).0;
            (h % 1000) as f64 / 1000.0
        };
        let transformed = move |u: usize, i: usize| (scale * score(u, i) + shift).exp();
        let cases: Vec<TestCase> = (0..20)
            .map(|u| TestCase { user: u, item: 0, negatives: (1..=30).collect() })
            .collect();
        let a = evaluate(&score, &cases, &[5, 20]).unwrap();
        let b = evaluate(&transformed, &cases, &[5, 20]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pair_logit_orders_like_vanilla_scores(seed in 0u64..500) {
        let hyper = Hyperparams { embedding_dim: 3, mlp_layers: vec![2], seed, ..Hyperparams::default() };
        let model = ModelState::<f64>::new(ModelKind::Mp2, hyper, 3, 4).unwrap();
        let s = mp2_core::data::TripletSample { user: (seed % 3) as usize, item_j: 1, item_t: 3, y_j: true, y_t: false };
        let f = model.forward_triplet(&s).unwrap();
        let u = model.user_representation(s.user).unwrap();
        let sj = mp2_core::models::score(&u, &model.item_representation(1).unwrap()).unwrap();
        let st = mp2_core::models::score(&u, &model.item_representation(3).unwrap()).unwrap();
        let pair = f.logit_pair.unwrap();
        prop_assert_eq!(pair.signum(), (sj - st).signum());
    }
}

#[test]
fn metrics_stay_in_unit_interval_with_either_item_tower() {
    let hyper = Hyperparams { embedding_dim: 4, mlp_layers: vec![3], ..Hyperparams::default() };
    let mut model = ModelState::<f64>::new(ModelKind::Mp2, hyper, 10, 40).unwrap();
    let momentum = model.item_momentum.as_mut().unwrap();
    for m in momentum.matrices_mut() {
        for x in m.as_mut_slice() {
            *x = -*x * 3.0;
        }
    }
    let cases: Vec<TestCase> = (0..10)
        .map(|u| TestCase { user: u, item: u, negatives: (20..40).collect() })
        .collect();
    let vanilla = RepresentationScorer::vanilla(&model).unwrap();
    let swapped =
        RepresentationScorer::from_towers(&model.user_tower, model.item_momentum.as_ref().unwrap()).unwrap();
    for scorer in [vanilla, swapped] {
        let m = evaluate(&scorer, &cases, &[5, 20]).unwrap();
        assert!(m.hit_rate.iter().chain(&m.ndcg).all(|x| (0.0..=1.0).contains(x)));
    }
}
