use proptest::prelude::*;
use skewimpute::pipeline::bin_events;
use skewimpute::sim::bethe::MIN_MOMENTUM;
use skewimpute::sim::{
    apply_missingness, eta_for_fraction, generate_events, mean_dedx, overall_missing_fraction, split_bin, Event,
    Mechanism, MissingnessSpec, SimConfig,
};
use skewimpute::species::Species;

fn events(n: usize, seed: u64) -> Vec<Event> {
    generate_events(&SimConfig { n_events: n, seed, ..SimConfig::default() }).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn species_abundances_within_four_standard_errors() {
    let ev = events(50_000, 2);
    let n = ev.len() as f64;
    for (s, p) in [(Species::Pion, 0.80), (Species::Kaon, 0.15), (Species::Proton, 0.05)] {
        let got = ev.iter().filter(|e| e.species == s).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((got - p).abs() < 4.0 * se, "{s}: {got}");
    }
}

#[test]
fn momenta_stay_above_the_validity_floor() {
    let ev = events(20_000, 3);
    assert!(ev.iter().all(|e| e.momentum > MIN_MOMENTUM && e.momentum < 1.0));
    let bins = bin_events(&SimConfig::default(), &ev).unwrap();
    assert_eq!(bins.len(), 20);
    assert!(bins[0].events.is_empty());
    assert!(bins[1..].iter().all(|b| !b.events.is_empty()));
}

#[test]
fn kaon_losses_are_centered_near_zero() {
    // Straggling is right-skewed, so the median sits a little below the mean.
    let ev = events(30_000, 4);
    let kaon: Vec<f64> = ev.iter().filter(|e| e.species == Species::Kaon).flat_map(|e| e.e.clone()).collect();
    let m = median(kaon);
    assert!(m < 0.0 && m > -0.3, "kaon median {m}");
}

#[test]
fn species_separate_less_at_higher_momentum() {
    let cfg = SimConfig { n_events: 60_000, seed: 5, ..SimConfig::default() };
    let bins = bin_events(&cfg, &generate_events(&cfg).unwrap()).unwrap();
    let fisher = |b: usize, a: Species, c: Species| {
        let avg = |s: Species| -> Vec<f64> {
            bins[b].events.iter().filter(|e| e.species == s).map(|e| e.e.iter().sum::<f64>() / 6.0).collect()
        };
        let (ma, sa) = mean_sd(&avg(a));
        let (mc, sc) = mean_sd(&avg(c));
        (ma - mc).abs() / (0.5 * (sa * sa + sc * sc)).sqrt()
    };
    let low = fisher(5, Species::Proton, Species::Pion);
    let high = fisher(18, Species::Proton, Species::Pion);
    assert!(low > 4.0, "low-momentum separation {low}");
    assert!(high < low, "{high} vs {low}");
    assert!(fisher(5, Species::Kaon, Species::Pion) > fisher(18, Species::Kaon, Species::Pion));
}

#[test]
fn mcar_rate_within_four_standard_errors() {
    let ev = events(20_000, 6);
    for eta in [0.05, 0.2, 0.4] {
        let data = apply_missingness(&ev, &MissingnessSpec::mcar(eta, 11)).unwrap();
        let cells = (data.n_rows() * data.n_cols()) as f64;
        let got = data.n_missing_cells() as f64 / cells;
        let se = (eta * (1.0 - eta) / cells).sqrt();
        assert!((got - eta).abs() < 4.0 * se, "eta {eta}: {got}");
    }
}

#[test]
fn mnar_drops_low_deposits_more_often() {
    let ev = events(20_000, 7);
    let data = apply_missingness(&ev, &MissingnessSpec { mechanism: Mechanism::Mnar { threshold: 0.15, width: 0.03 }, seed: 3 }).unwrap();
    let rate = |s: Species| {
        let rows: Vec<usize> = (0..ev.len()).filter(|&i| ev[i].species == s && ev[i].momentum < 0.5).collect();
        let miss: usize = rows.iter().map(|&i| data.row_mask(i).iter().filter(|o| !**o).count()).sum();
        miss as f64 / (rows.len() * 6) as f64
    };
    assert!(rate(Species::Pion) > rate(Species::Kaon));
    assert!(rate(Species::Kaon) > rate(Species::Proton));
}

#[test]
fn generation_does_not_depend_on_thread_count() {
    let cfg = SimConfig { n_events: 3000, seed: 9, ..SimConfig::default() };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let a = pool(1).install(|| generate_events(&cfg).unwrap());
    let b = pool(3).install(|| generate_events(&cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn split_is_disjoint_and_covers_the_bin() {
    let s = split_bin(1001, 4, 7);
    let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test_pool).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..1001).collect::<Vec<_>>());
    assert_eq!(s.train.len() + s.validation.len(), 500);
    assert_eq!(s.train.len(), 400);
    assert_ne!(split_bin(1001, 4, 8), s);
}

proptest! {
    #[test]
    fn missing_fraction_inverts(f in 0.001f64..0.99, d in 1u32..40) {
        let eta = eta_for_fraction(f, d).unwrap();
        prop_assert!((overall_missing_fraction(eta, d).unwrap() - f).abs() < 1e-10);
    }

    // Without a density correction the pion band rises past the kaon band
    // near 0.93 GeV/c.
    #[test]
    fn heavier_species_lose_more(p in 0.06f64..0.9) {
        let pi = mean_dedx(Species::Pion, p).unwrap();
        let k = mean_dedx(Species::Kaon, p).unwrap();
        let pr = mean_dedx(Species::Proton, p).unwrap();
        prop_assert!(pr > k && k > pi);
    }

    #[test]
    fn loss_falls_with_momentum_below_the_minimum(p in 0.06f64..0.9, dp in 0.001f64..0.05) {
        for s in [Species::Kaon, Species::Proton] {
            let bg = (p + dp) / s.mass();
            prop_assume!(bg < 3.0);
            prop_assert!(mean_dedx(s, p + dp).unwrap() < mean_dedx(s, p).unwrap());
        }
    }
}
