use approx::assert_abs_diff_eq;

use super::*;
use crate::math::sigmoid;
use crate::ItemId;

fn sizes(words: usize, items: usize) -> VocabSizes {
    VocabSizes {
        words,
        users: 2,
        items,
        aspect_words: 3,
        values: 3,
    }
}

fn zero_model(variant: Variant, dim: usize, items: usize) -> Model {
    let config = variant.config(dim);
    Model {
        params: ModelParams::zeros(&config, sizes(4, items)),
        config,
    }
}

fn set_identity(t: &mut Table) {
    for r in 0..t.rows() {
        t.row_mut(r)[r] = 1.0;
    }
}

#[test]
fn zero_projection_gives_zero_query() {
    let mut m = zero_model(Variant::Full, 3, 2);
    m.params.word.row_mut(1).copy_from_slice(&[1.0, -2.0, 0.3]);
    assert_eq!(m.project_query(&[1, 2]).unwrap(), vec![0.0; 3]);
    assert_eq!(m.embed_aspect(&[0]).unwrap(), vec![0.0; 3]);
}

#[test]
fn one_dim_projection() {
    let mut m = zero_model(Variant::Full, 1, 2);
    m.params.query_w.row_mut(0)[0] = 1.0;
    m.params.word.row_mut(0)[0] = 0.5;
    m.params.word.row_mut(1)[0] = 1.5;
    let q = m.project_query(&[0, 1]).unwrap();
    assert_abs_diff_eq!(q[0], 1.0f64.tanh(), epsilon = 1e-15);
    assert_abs_diff_eq!(q[0], 0.761594, epsilon = 1e-6);
    assert_eq!(m.project_query(&[1, 0]).unwrap(), q);
    assert!(m.project_query(&[]).is_err());
}

#[test]
fn aspect_projection_identity_and_sharing() {
    let mut m = zero_model(Variant::Full, 2, 2);
    set_identity(m.params.aspect_w.as_mut().unwrap());
    m.params
        .aspect_word
        .row_mut(2)
        .copy_from_slice(&[0.4, -1.2]);
    let a = m.embed_aspect(&[2]).unwrap();
    assert_abs_diff_eq!(a[0], 0.4f64.tanh(), epsilon = 1e-15);
    assert_abs_diff_eq!(a[1], (-1.2f64).tanh(), epsilon = 1e-15);
    assert!(m.embed_aspect(&[]).is_err());

    let mut cfg = Variant::Full.config(2);
    cfg.share_query_aspect_projection = true;
    let mut s = Model {
        params: ModelParams::init(&cfg, sizes(3, 2), 4),
        config: cfg,
    };
    assert!(s.params.aspect_w.is_none());
    let row = s.params.word.row(1).to_vec();
    s.params.aspect_word.row_mut(1).copy_from_slice(&row);
    assert_eq!(
        s.embed_aspect(&[1]).unwrap(),
        s.project_query(&[1]).unwrap()
    );
}

#[test]
fn initial_score() {
    let mut m = zero_model(Variant::Full, 2, 2);
    assert_eq!(
        m.score_item_initial(&[1.0, 1.0], &[1.0, 1.0], 0).unwrap(),
        0.0
    );
    m.params.item.row_mut(1).copy_from_slice(&[1.0, 2.0]);
    assert_abs_diff_eq!(
        m.score_item_initial(&[0.0, 1.0], &[1.0, 0.0], 1).unwrap(),
        1.5,
        epsilon = 1e-15
    );
    m.config.lambda = 1.0;
    let a = m.score_item_initial(&[5.0, -3.0], &[1.0, 0.0], 1).unwrap();
    let b = m.score_item_initial(&[-7.0, 9.0], &[1.0, 0.0], 1).unwrap();
    assert_eq!(a, b);
    assert!(m.score_item_initial(&[0.0, 0.0], &[0.0, 0.0], 9).is_err());
}

#[test]
fn aspect_probability() {
    let mut m = zero_model(Variant::Full, 2, 1);
    assert_eq!(m.prob_aspect(&[1.0, 1.0], 0).unwrap(), 0.5);
    m.params.item.row_mut(0).copy_from_slice(&[1.0, 0.0]);
    let p = m.prob_aspect(&[2.0, 0.0], 0).unwrap();
    assert_abs_diff_eq!(p, sigmoid(2.0), epsilon = 1e-15);
    assert_abs_diff_eq!(p, 0.880797, epsilon = 1e-6);
    assert_abs_diff_eq!(
        m.prob_aspect(&[-2.0, 0.0], 0).unwrap(),
        1.0 - p,
        epsilon = 1e-15
    );
}

#[test]
fn value_probability() {
    let mut m = zero_model(Variant::Full, 1, 1);
    assert_eq!(m.prob_value(0, Polarity::Positive, &[0.3], 0).unwrap(), 0.5);
    m.params.value_pos.row_mut(1)[0] = 2.0;
    m.params.item.row_mut(0)[0] = 0.5;
    let p = m.prob_value(1, Polarity::Positive, &[0.5], 0).unwrap();
    assert_abs_diff_eq!(p, 0.880797, epsilon = 1e-6);

    let mut sep = zero_model(Variant::NoSep, 1, 1);
    sep.params.value_pos.row_mut(1)[0] = 2.0;
    sep.params.item.row_mut(0)[0] = 0.5;
    let pos = sep.prob_value(1, Polarity::Positive, &[0.5], 0).unwrap();
    let neg = sep.prob_value(1, Polarity::Negative, &[0.5], 0).unwrap();
    assert_abs_diff_eq!(pos + neg, 1.0, epsilon = 1e-15);

    let hem = zero_model(Variant::Hem, 1, 1);
    assert!(matches!(
        hem.prob_value(0, Polarity::Negative, &[0.0], 0),
        Err(Error::Config(_))
    ));

    let mut broken = zero_model(Variant::Full, 1, 1);
    broken.params.value_neg = None;
    assert!(matches!(
        broken.prob_value(0, Polarity::Negative, &[0.0], 0),
        Err(Error::Config(_))
    ));
}

#[test]
fn feedback_score_reductions() {
    let m = zero_model(Variant::Full, 2, 2);
    let aspects = vec![vec![0], vec![1, 2]];
    let (u, q) = ([0.2, 0.1], [0.3, -0.4]);
    let base = m.score_item_initial(&u, &q, 1).unwrap();
    let empty = FeedbackSet::new();
    assert_eq!(
        m.score_item_feedback(&u, &q, &empty, &aspects, 1).unwrap(),
        base
    );

    let mut fb = FeedbackSet::new();
    fb.add_positive(1, 2);
    let s = m.score_item_feedback(&u, &q, &fb, &aspects, 1).unwrap();
    assert_abs_diff_eq!(s, base + 0.25f64.ln(), epsilon = 1e-12);
}

#[test]
fn feedback_never_raises_score() {
    let m = Model::init(Variant::Full.config(4), sizes(4, 3), 9).unwrap();
    let aspects = vec![vec![0], vec![1, 2], vec![2]];
    let u = m.user_vector(Some(1)).unwrap();
    let q = m.project_query(&[0, 3]).unwrap();
    let mut fb = FeedbackSet::new();
    let mut last = m.score_item_feedback(&u, &q, &fb, &aspects, 2).unwrap();
    for (a, v, pos) in [(0, 1, true), (1, 2, false), (2, 0, true)] {
        if pos {
            fb.add_positive(a, v);
        } else {
            fb.add_negative(a, v);
        }
        let s = m.score_item_feedback(&u, &q, &fb, &aspects, 2).unwrap();
        assert!(s <= last);
        last = s;
    }
}

#[test]
fn ties_by_item_id() {
    let m = zero_model(Variant::Full, 2, 4);
    let ranked = m
        .rank_items(Some(0), &[0], &FeedbackSet::new(), &[3, 1, 2, 0], &[])
        .unwrap();
    let ids: Vec<_> = ranked.iter().map(|r| r.0).collect();
    assert_eq!(ids, vec![0, 1, 2, 3]);
}

#[test]
fn rank_matches_brute_force() {
    let m = Model::init(Variant::Full.config(5), sizes(4, 10), 21).unwrap();
    let aspects = vec![vec![0], vec![1, 2], vec![2, 0]];
    let mut fb = FeedbackSet::new();
    fb.add_positive(0, 1);
    fb.add_negative(1, 2);
    fb.add_negative(2, 0);
    let cands: Vec<ItemId> = (0..10).collect();
    let ranked = m
        .rank_items(Some(1), &[1, 3], &fb, &cands, &aspects)
        .unwrap();

    // brute force: score every item from scratch and sort
    let u = m.params.user.row(1).to_vec();
    let q = m.project_query(&[1, 3]).unwrap();
    let mut brute: Vec<(ItemId, f64)> = cands
        .iter()
        .map(|&i| (i, m.score_item_feedback(&u, &q, &fb, &aspects, i).unwrap()))
        .collect();
    brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    assert_eq!(ranked, brute);
}

#[test]
fn init_is_seeded_and_bounded() {
    let cfg = Variant::Full.config(8);
    let a = ModelParams::init(&cfg, sizes(5, 4), 3);
    let b = ModelParams::init(&cfg, sizes(5, 4), 3);
    let c = ModelParams::init(&cfg, sizes(5, 4), 4);
    assert_eq!(a.checksum(), b.checksum());
    assert_ne!(a.checksum(), c.checksum());
    let bound = 0.5 / 8.0;
    for t in a.tables() {
        assert!(t.as_slice().iter().all(|x| x.abs() <= bound));
    }
    assert!(ModelParams::init(&Variant::NoSep.config(8), sizes(5, 4), 3)
        .value_neg
        .is_none());
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for variant in Variant::ALL {
        let m = Model::init(variant.config(3), sizes(6, 4), 17).unwrap();
        let path = dir.path().join(format!("{}.bin", variant.name()));
        m.save(&path).unwrap();
        let back = Model::load(&path).unwrap();
        assert_eq!(back.params.checksum(), m.params.checksum());
        assert_eq!(back, m);
    }
    let m = Model::init(Variant::Full.config(3), sizes(6, 4), 17).unwrap();
    let path = dir.path().join("m.bin");
    m.save(&path).unwrap();
    assert!(Model::load_for(&path, sizes(6, 4)).is_ok());
    assert!(matches!(
        Model::load_for(&path, sizes(7, 4)),
        Err(Error::ModelFormat(_))
    ));
    let bytes = m.to_bytes();
    assert!(Model::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    assert!(Model::from_bytes(b"NOPE").is_err());
}
