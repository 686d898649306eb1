use unmix_core::baselines::{fcls_unmix, sunsal_unmix, AdmmParams};
use unmix_core::metrics::{armse, evaluate, EvalInputs, MixingModel};
use unmix_core::synth::{synthesize_dataset, synthetic_library, GammaSpec, SlicParams, SynthConfig};

fn scene(gamma: f64, snr_db: Option<f64>) -> unmix_core::synth::SyntheticDataset {
    let cfg = SynthConfig {
        rows: 20,
        cols: 20,
        p_initial: 2,
        blob_count: 3,
        slic: SlicParams::default_for(400),
        gamma: GammaSpec::Uniform(gamma),
        snr_db,
        seed: 11,
    };
    synthesize_dataset(&cfg, &synthetic_library(24, 12, 11).unwrap()).unwrap()
}

#[test]
fn fcls_inverts_a_noise_free_linear_scene() {
    let d = scene(0.0, None);
    assert_eq!(d.abundances.endmembers(), 4);
    d.abundances.validate().unwrap();
    let est = fcls_unmix(&d.cube, &d.endmembers).unwrap();
    assert!(armse(&d.abundances, &est).unwrap() < 1e-6);
    let report = evaluate(EvalInputs {
        truth: Some(&d.abundances),
        estimate: &est,
        cube: Some(&d.cube),
        endmembers: Some(&d.endmembers),
        model: &MixingModel::Linear,
    })
    .unwrap();
    assert!(report.asam.unwrap() < 1e-6);
    assert_eq!(report.pixels, 400);
}

#[test]
fn nonlinearity_and_noise_degrade_the_linear_baselines() {
    let clean = scene(0.0, None);
    let hard = scene(0.8, Some(20.0));
    let e_clean = armse(&clean.abundances, &fcls_unmix(&clean.cube, &clean.endmembers).unwrap()).unwrap();
    let e_fcls = armse(&hard.abundances, &fcls_unmix(&hard.cube, &hard.endmembers).unwrap()).unwrap();
    let s = sunsal_unmix(&hard.cube, &hard.endmembers, &AdmmParams::default()).unwrap();
    let e_sunsal = armse(&hard.abundances, &s.abundances).unwrap();
    assert!(e_fcls > 10.0 * e_clean.max(1e-9), "{e_fcls} vs {e_clean}");
    assert!(e_sunsal.is_finite() && e_sunsal > 1e-3);
}
