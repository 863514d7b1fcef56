use proptest::prelude::*;

use survcop::baseline::Baseline;
use survcop::copula::{kendall_tau, tau_inverse, Copula, CopulaFamily, Wrt};
use survcop::data::{BivariateData, MarginData};
use survcop::model::{BaselineKind, MarginParams, Model, ModelSpec, ParamSet};
use survcop::regression::{MarginModel, Regression, RegressionClass};

fn family() -> impl Strategy<Value = CopulaFamily> {
    prop::sample::select(CopulaFamily::ALL.to_vec())
}

/// A θ inside the family's domain, from a τ in the attainable range.
fn copula() -> impl Strategy<Value = Copula> {
    (family(), 0.02f64..0.98).prop_map(|(f, s)| {
        let (lo, hi) = f.tau_range();
        let tau = lo.max(-0.9) + s * (hi.min(0.9) - lo.max(-0.9));
        tau_inverse(f, tau).unwrap().copula
    })
}

fn toy_data() -> BivariateData {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 2) as f64, i as f64 / 6.0 - 1.0]).collect();
    let names = vec!["a".to_string(), "b".to_string()];
    let y: Vec<f64> = (0..12).map(|i| 0.2 + 0.3 * i as f64).collect();
    let d: Vec<bool> = (0..12).map(|i| i % 3 != 0).collect();
    let m = MarginData::new(y, d, &rows, names).unwrap();
    BivariateData::new((0..12).map(|i| i.to_string()).collect(), m.clone(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_within_frechet_bounds(c in copula(), u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let value = c.cdf(&[u, v]).unwrap();
        prop_assert!(value >= (u + v - 1.0).max(0.0) - 1e-12);
        prop_assert!(value <= u.min(v) + 1e-12);
    }

    #[test]
    fn partials_are_conditional_distributions(c in copula(), u in 0.01f64..0.99, v in 0.01f64..0.98) {
        let p = c.partial(u, v, Wrt::First).unwrap();
        let q = c.partial(u, v + 0.01, Wrt::First).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        prop_assert!(q >= p - 1e-12);
        prop_assert!(c.density(u, v).unwrap() >= 0.0);
    }

    #[test]
    fn tau_inversion_round_trips(c in copula()) {
        let tau = c.kendall_tau();
        let back = tau_inverse(c.family(), tau).unwrap().copula;
        prop_assert!((kendall_tau(c.family(), back.theta()) - tau).abs() < 1e-8);
    }

    #[test]
    fn pack_round_trips(
        c in copula(),
        baseline in prop::sample::select(BaselineKind::ALL.to_vec()),
        class in prop::sample::select(RegressionClass::ALL.to_vec()),
        seed in prop::collection::vec(0.1f64..3.0, 40),
        betas in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let mut spec = ModelSpec::new(c.family(), baseline, class);
        spec.size = Some(3);
        let model = Model::resolve(spec, &toy_data()).unwrap();
        let margin = |j: usize| {
            let k = model.structure[j].n_kappa();
            let bs = betas[4 * j..4 * j + 2].to_vec();
            let bl = match class {
                RegressionClass::Yp => betas[4 * j + 2..4 * j + 4].to_vec(),
                RegressionClass::Ph => bs.clone(),
                RegressionClass::Po => vec![0.0; 2],
            };
            MarginParams { kappa: seed[20 * j..20 * j + k].to_vec(), beta_short: bs, beta_long: bl }
        };
        let p = ParamSet { theta: c.theta(), margins: [margin(0), margin(1)] };
        let z = model.pack(&p).unwrap();
        prop_assert_eq!(z.len(), model.n_params());
        let back = model.unpack(&z).unwrap();
        prop_assert!((back.theta - p.theta).abs() <= 1e-9 * p.theta.abs().max(1.0));
        for j in 0..2 {
            for (a, b) in back.margins[j].kappa.iter().zip(&p.margins[j].kappa) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            prop_assert_eq!(&back.margins[j].beta_short, &p.margins[j].beta_short);
            prop_assert_eq!(&back.margins[j].beta_long, &p.margins[j].beta_long);
        }
    }

    #[test]
    fn inverse_survival_round_trips(
        alpha in 0.5f64..3.0,
        lambda in 0.3f64..2.0,
        bs in prop::collection::vec(-1.5f64..1.5, 2),
        bl in prop::collection::vec(-1.5f64..1.5, 2),
        x in prop::collection::vec(-2.0f64..2.0, 2),
        u in 0.001f64..0.999,
    ) {
        let m = MarginModel::new(Baseline::weibull(alpha, lambda).unwrap(), Regression::yp(bs, bl).unwrap());
        let t = m.inverse_survival(&x, u).unwrap();
        prop_assert!((m.survival(&x, t).unwrap() - u).abs() < 1e-9);
    }
}
