use conformal_cauchy::densities::{pushforward_params, FamilyParam, Transform};
use conformal_cauchy::estimation::{mle_numeric, mle_sphere, MleConfig, MleResult, SphereMleResult};
use conformal_cauchy::geometry::{random_orthogonal, ComplexParam, ExtendedComplexParam, ExtendedPoint};
use conformal_cauchy::moebius::{stereographic_point, Exponent, MoebiusChain, MoebiusMap};
use conformal_cauchy::moments::mom_estimate;
use conformal_cauchy::oracle::ks::{ks_critical_value_two_sample, ks_two_sample};
use conformal_cauchy::sampling::{sample_euclid_cauchy, sample_sphere_cauchy, RngStream};
use conformal_cauchy::Vector;

fn random_map(d: usize, rng: &mut RngStream) -> MoebiusMap {
    let orth = random_orthogonal(d, rng);
    let gamma = 0.5 + rng.uniform();
    let a = Vector::from_fn(d, |_, _| rng.standard_normal());
    let b = Vector::from_fn(d, |_, _| rng.standard_normal());
    let eps = if rng.uniform() < 0.5 { Exponent::Zero } else { Exponent::Two };
    MoebiusMap::new(orth, gamma, a, b, eps).unwrap()
}

fn finite(p: ExtendedPoint) -> Vector {
    p.into_finite().expect("finite image")
}

#[test]
fn pushed_samples_follow_pushed_parameter() {
    let mut rng = RngStream::new(31, 0);
    let theta = ComplexParam::new(Vector::from_element(1, 0.4), 0.8).unwrap();
    let chain = MoebiusChain::new(vec![random_map(1, &mut rng), random_map(1, &mut rng)]).unwrap();
    let xs = sample_euclid_cauchy(&theta, 4000, &mut rng).unwrap();
    let pushed: Vec<f64> = xs
        .iter()
        .filter_map(|x| chain.apply(&ExtendedPoint::Finite(x.clone())).unwrap().into_finite())
        .map(|v| v[0])
        .collect();
    let image = chain.apply_param(&ExtendedComplexParam::Finite(theta)).unwrap();
    let image = image.as_finite().unwrap().clone();
    let direct: Vec<f64> = sample_euclid_cauchy(&image, 4000, &mut rng).unwrap().iter().map(|v| v[0]).collect();
    let d = ks_two_sample(&pushed, &direct);
    assert!(d < ks_critical_value_two_sample(pushed.len(), direct.len(), 0.01), "KS = {d}");
}

#[test]
fn projected_sphere_samples_are_euclidean_cauchy() {
    let mut rng = RngStream::new(32, 0);
    let phi = Vector::from_column_slice(&[0.2, -0.1, 0.5]);
    let ys = sample_sphere_cauchy(&phi, 4000, &mut rng).unwrap();
    let theta = match pushforward_params(&Transform::Stereographic, &FamilyParam::Sphere(ExtendedPoint::Finite(phi))) {
        Ok(FamilyParam::Euclidean(t)) => t.as_finite().unwrap().clone(),
        other => panic!("{other:?}"),
    };
    let xs = sample_euclid_cauchy(&theta, 4000, &mut rng).unwrap();
    for k in 0..2 {
        let a: Vec<f64> = ys.iter().filter_map(|y| stereographic_point(y).unwrap().into_finite()).map(|v| v[k]).collect();
        let b: Vec<f64> = xs.iter().map(|v| v[k]).collect();
        assert!(ks_two_sample(&a, &b) < ks_critical_value_two_sample(a.len(), b.len(), 0.01));
    }
}

#[test]
fn mle_is_equivariant_under_chains() {
    let mut rng = RngStream::new(33, 0);
    let cfg = MleConfig::default();
    for d in 1..=2 {
        let truth = ComplexParam::new(Vector::zeros(d), 1.0).unwrap();
        let data = sample_euclid_cauchy(&truth, 12, &mut rng).unwrap();
        let chain = MoebiusChain::new(vec![random_map(d, &mut rng), random_map(d, &mut rng)]).unwrap();
        let moved: Vec<Vector> = data.iter().map(|x| finite(chain.apply(&ExtendedPoint::Finite(x.clone())).unwrap())).collect();
        let fit = mle_numeric(&data, &cfg).unwrap();
        let fit_moved = mle_numeric(&moved, &cfg).unwrap();
        let (MleResult::Estimate { theta: a, .. }, MleResult::Estimate { theta: b, .. }) = (fit, fit_moved) else {
            panic!("expected estimates")
        };
        let pushed = chain.apply_param(&ExtendedComplexParam::Finite(a)).unwrap();
        let pushed = pushed.as_finite().unwrap();
        let err = (pushed.mu() - b.mu()).amax().max((pushed.sigma() - b.sigma()).abs());
        assert!(err < 1e-6 * (1.0 + b.norm()), "d = {d}, err = {err}");
    }
}

#[test]
fn sphere_estimators_agree() {
    let mut rng = RngStream::new(34, 0);
    let phi = Vector::from_column_slice(&[0.0, 0.6, 0.0]);
    let ys = sample_sphere_cauchy(&phi, 2000, &mut rng).unwrap();
    let mom = mom_estimate(&ys).unwrap();
    let SphereMleResult::Estimate { phi: mle, .. } = mle_sphere(&ys, &MleConfig::default()).unwrap() else {
        panic!("expected an estimate")
    };
    assert!((&mom.phi - &phi).norm() < 0.06);
    assert!((&mle - &phi).norm() < 0.06);
}
