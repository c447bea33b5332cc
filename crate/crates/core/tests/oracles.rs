use necklace_core::necklace::{
    contact_set, contact_set_bruteforce, contact_set_with, envelope_bruteforce, periodic_contact_set, Algorithm,
};
use necklace_core::seed::derive_seed;
use necklace_core::substrate::{gen_iid_exponential, gen_sos_substrate, SosParams};
use necklace_core::{Boundary, ShapeModel};

#[test]
fn fast_algorithms_match_bruteforce() {
    let shapes = [
        ShapeModel::cone(0.3).unwrap(),
        ShapeModel::cone(0.05).unwrap(),
        ShapeModel::parabola(0.1).unwrap(),
        ShapeModel::parabola(1.5).unwrap(),
        ShapeModel::semicircle(0.02).unwrap(),
        ShapeModel::sos_wulff(5.0, 0.05).unwrap(),
    ];
    for shape in &shapes {
        for i in 0..40 {
            let s = gen_iid_exponential(60, derive_seed(17, i)).unwrap();
            let fast = contact_set(&s, shape).unwrap();
            let slow = contact_set_bruteforce(&s, shape).unwrap();
            assert_eq!(fast.sites(), slow.sites(), "{:?} instance {i}", shape.kind());
            fast.verify(&s).unwrap();
        }
    }
}

#[test]
fn specialised_scans_match_generic_stack() {
    for i in 0..200 {
        let s = gen_iid_exponential(150, derive_seed(23, i)).unwrap();
        let lambda = [0.01, 0.1, 0.7][i as usize % 3];
        // bisection cannot hang a cone between anchors steeper than λ, so
        // the cone's stack scan uses its max-of-tents form
        let cone = ShapeModel::cone(lambda).unwrap();
        assert_eq!(
            contact_set_with(&s, &cone, Algorithm::Tent).unwrap().sites(),
            contact_set_with(&s, &cone, Algorithm::Stack).unwrap().sites(),
        );
        let parabola = ShapeModel::parabola(lambda).unwrap();
        assert_eq!(
            contact_set_with(&s, &parabola, Algorithm::Hull).unwrap().sites(),
            contact_set_with(&s, &parabola, Algorithm::StackGeneric).unwrap().sites(),
        );
    }
}

#[test]
fn envelope_agrees_with_lowered_translates() {
    let shape = ShapeModel::parabola(0.2).unwrap();
    for i in 0..5 {
        let s = gen_iid_exponential(50, derive_seed(5, i)).unwrap();
        let exact = contact_set(&s, &shape).unwrap().envelope_at_sites().unwrap();
        let sampled = envelope_bruteforce(&s, &shape, 0.005).unwrap().at_sites(50);
        for (e, m) in exact.iter().zip(&sampled) {
            assert!((e - m).abs() < 0.02, "{e} vs {m}");
        }
    }
}

#[test]
fn periodic_sos_substrate_necklace() {
    let s = gen_sos_substrate(256, SosParams::new(1.0, 0.5), 3).unwrap();
    assert_eq!(s.boundary(), Boundary::Periodic);
    let shape = ShapeModel::parabola(0.05).unwrap();
    let neck = periodic_contact_set(&s, &shape).unwrap();
    neck.verify(&s).unwrap();
    assert_eq!(neck.gap_lengths().iter().sum::<usize>(), 256);
    for shift in [1, 17, 255] {
        let rotated = periodic_contact_set(&s.rotated(shift), &shape).unwrap();
        let mut expect: Vec<usize> = neck.sites().iter().map(|b| (b + shift) % 256).collect();
        expect.sort_unstable();
        assert_eq!(rotated.sites(), expect);
    }
}
