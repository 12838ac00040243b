use bayesmr::init::{jittered_inits, map_estimate_from, map_from_moments, mean_field_vi, MapOptions, ViOptions};
use bayesmr::model::{to_unconstrained, Bounds};
use bayesmr::simgen::{generate_replicate, Pleiotropy, ScenarioConfig};
use bayesmr::target::Gaussian;
use bayesmr::{LogDensity, MRDataset, ModelConfig, MrModel, ParameterSet, UnconstrainedState};

/// Ordinary least squares by Gaussian elimination on the normal equations.
fn ols(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut m = vec![vec![0.0; p + 1]; p];
    for (r, yi) in rows.iter().zip(y) {
        for a in 0..p {
            for b in 0..p {
                m[a][b] += r[a] * r[b];
            }
            m[a][p] += r[a] * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=p {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..p).map(|i| m[i][p] / m[i][i]).collect()
}

fn scenario_one(theta: f64) -> ScenarioConfig {
    ScenarioConfig::new("1", Pleiotropy::Balanced, 520, theta)
}

#[test]
fn frozen_map_is_least_squares() {
    let (data, _) = generate_replicate(&scenario_one(0.35), 3).unwrap();
    // wide bounds keep the transform's Jacobian from moving the mode
    let mut config = ModelConfig::default();
    let wide = Bounds::new(-1e4, 1e4);
    config.prior_bounds.omega_x = wide;
    config.prior_bounds.omega_y = wide;
    config.prior_bounds.theta = wide;
    let model = MrModel::new(&data, &config).unwrap();
    let j = data.j();

    // no confounding and no direct effects: the posterior mode of the free
    // coefficients is the pair of separate regressions
    let mut start = ParameterSet::neutral(j, false);
    start.omega_x = 3.0;
    start.omega_y = -3.0;
    start.sigma_x = 0.2;
    start.sigma_y = 0.2;
    start.sigma_alpha = 49.0;
    let start = to_unconstrained(&start, &config).unwrap();
    let names = model.layout().names();
    let free = |n: &str| {
        ["omega_x", "omega_y", "theta", "sigma_x", "sigma_y"].contains(&n) || n.starts_with("alpha.")
    };
    let options = MapOptions {
        max_iterations: 20_000,
        gradient_tolerance: 1e-5,
        frozen: names.iter().map(|n| !free(n)).collect(),
    };
    let map = map_estimate_from(&model, &start.values, &options).unwrap();
    assert!(map.gradient_norm < 1e-4, "gradient norm {}", map.gradient_norm);
    let p = model.constrain(&map.state.values);

    let x_rows: Vec<Vec<f64>> = (0..data.n())
        .map(|i| std::iter::once(1.0).chain(data.genotype_row(i).iter().copied()).collect())
        .collect();
    let bx = ols(&x_rows, data.exposure());
    let y_rows: Vec<Vec<f64>> = data.exposure().iter().map(|x| vec![1.0, *x]).collect();
    let by = ols(&y_rows, data.outcome());

    assert!((p.omega_x - bx[0]).abs() < 1e-5, "{} vs {}", p.omega_x, bx[0]);
    for k in 0..j {
        assert!((p.alpha[k] - bx[k + 1]).abs() < 1e-5, "alpha {k}: {} vs {}", p.alpha[k], bx[k + 1]);
    }
    assert!((p.omega_y - by[0]).abs() < 1e-5, "{} vs {}", p.omega_y, by[0]);
    assert!((p.theta - by[1]).abs() < 1e-5, "{} vs {}", p.theta, by[1]);
    assert_eq!(p.delta_x, 0.0);
    assert!(p.beta.iter().all(|b| *b == 0.0));
}

#[test]
fn map_recovers_causal_effect() {
    for r in 0..5 {
        let (data, truth) = generate_replicate(&scenario_one(0.35), r).unwrap();
        let model = MrModel::new(&data, &ModelConfig::default()).unwrap();
        let map = map_from_moments(&model, &data).unwrap();
        let theta = model.constrain(&map.state.values).theta;
        assert!((theta - truth.theta).abs() < 0.15, "replicate {r}: {theta}");
        if map.converged {
            assert!(map.gradient_norm < 1e-4);
        }
    }
}

#[test]
fn variational_fit_of_gaussian() {
    let mean = vec![1.0, -2.0, 0.5];
    let cov = vec![0.5, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 2.0];
    let target = Gaussian::new(mean.clone(), cov);
    let options = ViOptions { seed: 4, ..Default::default() };
    let fit = mean_field_vi(&target, &[0.0; 3], &options).unwrap();
    for (m, t) in fit.mean.values.iter().zip(&mean) {
        assert!((m - t).abs() < 0.05, "{m} vs {t}");
    }
    assert!(fit.improved);
    let again = mean_field_vi(&target, &[0.0; 3], &options).unwrap();
    assert_eq!(fit.mean, again.mean);
}

#[test]
fn jitter_contract() {
    let (data, _): (MRDataset, _) = generate_replicate(&scenario_one(0.0), 0).unwrap();
    let model = MrModel::new(&data, &ModelConfig::default()).unwrap();
    let center = map_from_moments(&model, &data).unwrap().state;
    let same = jittered_inits(&model, &center, 1, 0.0, 1).unwrap();
    assert_eq!(same, vec![center.clone()]);
    let a = jittered_inits(&model, &center, 4, 0.1, 1).unwrap();
    let b = jittered_inits(&model, &center, 4, 0.1, 2).unwrap();
    assert_ne!(a, b);
    for s in a.iter().chain(&b) {
        assert!(model.log_density(&s.values).is_finite());
    }
    let bad = UnconstrainedState::new(vec![0.0; 2]);
    assert!(jittered_inits(&model, &bad, 2, 0.1, 1).is_err());
}
