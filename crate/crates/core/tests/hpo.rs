use fuelmoist::hpo::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit() -> ParamSpace {
    ParamSpace::new(vec![("x".into(), Dimension::Uniform { lo: 0.0, hi: 1.0 })]).unwrap()
}

fn quad(a: &Assignment) -> fuelmoist::Result<f64> {
    Ok((a.real("x")? - 0.3).powi(2))
}

#[test]
fn uniform_draws_have_mean_half() {
    let s = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mean = (0..10_000).map(|_| sample_random(&s, &mut rng).real("x").unwrap()).sum::<f64>() / 10_000.0;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn log_uniform_is_uniform_in_log10() {
    let s = ParamSpace::new(vec![("lr".into(), Dimension::LogUniform { lo: 1e-4, hi: 1e-1 })]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 5000;
    let mut u: Vec<f64> =
        (0..n).map(|_| (sample_random(&s, &mut rng).real("lr").unwrap().log10() + 4.0) / 3.0).collect();
    u.sort_by(f64::total_cmp);
    // Kolmogorov-Smirnov statistic against U(0,1); 1.63/sqrt(n) is the 1% critical value
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - v).abs()))
        .fold(0.0, f64::max);
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
    assert!(u[0] >= 0.0 && u[n - 1] <= 1.0);
}

fn constructed_history(s: &ParamSpace) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hist = Vec::new();
    for i in 0..40 {
        let good = i % 4 == 0;
        let jitter = rand::Rng::random_range(&mut rng, -0.03..0.03);
        let x: f64 = if good { 0.3 + jitter } else { 0.8 + jitter };
        let a = Assignment { values: vec![("x".into(), ParamValue::Real(x))] };
        hist.push(Trial::completed(i, a, if good { 0.1 } else { 1.0 }));
    }
    assert!(s.contains(&hist[0].params));
    hist
}

#[test]
fn tpe_concentrates_on_good_region() {
    let s = unit();
    let st = TpeState::new(constructed_history(&s));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inside = (0..1000)
        .filter(|_| {
            let x = tpe_suggest(&st, &s, &mut rng).unwrap().real("x").unwrap();
            assert!((0.0..=1.0).contains(&x));
            (0.1..=0.5).contains(&x)
        })
        .count();
    assert!(inside >= 950, "{inside}");
}

#[test]
fn tpe_prefers_frequent_good_category() {
    let s = ParamSpace::new(vec![(
        "c".into(),
        Dimension::Categorical { options: vec!["a".into(), "b".into()] },
    )])
    .unwrap();
    let mut hist = Vec::new();
    let cat = |v: &str| Assignment { values: vec![("c".into(), ParamValue::Cat(v.into()))] };
    for i in 0..10 {
        hist.push(Trial::completed(i, cat(if i < 9 { "a" } else { "b" }), 0.0 + i as f64 * 1e-3));
    }
    for i in 10..40 {
        hist.push(Trial::completed(i, cat(if i % 2 == 0 { "a" } else { "b" }), 1.0 + i as f64 * 1e-3));
    }
    let st = TpeState::new(hist);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = (0..1000).filter(|_| tpe_suggest(&st, &s, &mut rng).unwrap().cat("c").unwrap() == "a").count();
    assert!(a > 500, "{a}");
}

#[test]
fn flat_history_falls_back_to_random() {
    let s = unit();
    let hist: Vec<Trial> = (0..10)
        .map(|i| Trial::completed(i, Assignment { values: vec![("x".into(), ParamValue::Real(0.9))] }, 2.0))
        .collect();
    let st = TpeState::new(hist);
    let mut a = ChaCha8Rng::seed_from_u64(3);
    let mut b = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(tpe_suggest(&st, &s, &mut a).unwrap(), sample_random(&s, &mut b));
}

#[test]
fn optimize_finds_quadratic_minimum_and_is_reproducible() {
    let s = unit();
    let cfg = OptimizeConfig { n_trials: 200, seed: 7, ..Default::default() };
    let (best, hist) = optimize(quad, &s, &cfg, vec![]).unwrap();
    assert!((best.params.real("x").unwrap() - 0.3).abs() < 0.05);
    assert_eq!(optimize(quad, &s, &cfg, vec![]).unwrap().1, hist);
    let bsf = best_so_far(&hist);
    assert!(bsf.windows(2).all(|w| w[1] <= w[0]));
    assert!(hist.iter().all(|t| s.contains(&t.params)));
}

#[test]
fn n_trials_equal_n_random_is_pure_random() {
    let s = unit();
    let cfg = OptimizeConfig { n_trials: 30, n_random: 30, seed: 1, ..Default::default() };
    let (_, hist) = optimize(quad, &s, &cfg, vec![]).unwrap();
    let cfg_more = OptimizeConfig { n_trials: 30, n_random: 1000, ..cfg };
    assert_eq!(optimize(quad, &s, &cfg_more, vec![]).unwrap().1, hist);
}

#[test]
fn failed_trials_excluded_but_recorded() {
    let s = unit();
    let cfg = OptimizeConfig { n_trials: 60, n_random: 20, seed: 3, ..Default::default() };
    let f = |a: &Assignment| {
        let x = a.real("x")?;
        if x > 0.7 {
            Err(fuelmoist::Error::InvalidArgument("boom".into()))
        } else {
            Ok((x - 0.3).powi(2))
        }
    };
    let (best, hist) = optimize(f, &s, &cfg, vec![]).unwrap();
    assert!(hist.iter().any(|t| t.status == TrialStatus::Failed));
    assert!(hist.iter().all(|t| (t.status == TrialStatus::Complete) == t.objective.is_some()));
    assert_eq!(best.status, TrialStatus::Complete);
}

#[test]
fn budget_one_returns_single_random_trial() {
    let cfg = OptimizeConfig { n_trials: 1, seed: 5, ..Default::default() };
    let (best, hist) = optimize(quad, &unit(), &cfg, vec![]).unwrap();
    assert_eq!(hist.len(), 1);
    assert_eq!(best, hist[0]);
}
