use hybrid2pc::ml::{nn_infer, plan_manifest, svm_classify, svm_manifest, svm_plain, LayerSpec, NetSpec, Network, NnOutput, NnPlan, Profile, SvmModel};
use hybrid2pc::session::run_local;
use hybrid2pc::RingParams;
use rand::{Rng, SeedableRng};

fn fig2() -> NetSpec {
    NetSpec::from_json(
        r#"{"input":[1,28,28],"layers":[
            {"type":"conv","kernel":5,"stride":2,"padding":2,"maps":5},
            {"type":"relu"},
            {"type":"fc","outputs":100},
            {"type":"relu"},
            {"type":"fc","outputs":10},
            {"type":"argmax"}]}"#,
    )
    .unwrap()
}

#[test]
fn svm_small() {
    let ring = RingParams::default_for(32).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for d in [1usize, 10, 100] {
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = SvmModel::from_f64(ring, &w, rng.gen_range(-1.0..1.0)).unwrap();
        let xq: Vec<u64> = x.iter().map(|&v| ring.encode(v).unwrap().raw.0).collect();
        let m = svm_manifest(ring, d);
        let (mr, xr) = (&model, &xq);
        let r = run_local(&m, |p| svm_classify(p, Some(mr), None, d), |p| svm_classify(p, None, Some(xr), d)).unwrap();
        assert_eq!(r.out0, None);
        assert_eq!(r.out1, Some(svm_plain(&model, &xq)));
    }
}

#[test]
fn cnn_profiles() {
    let ring = RingParams::default_for(64).unwrap();
    let spec = fig2();
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    let w: Vec<Vec<f64>> = spec
        .weight_shapes()
        .unwrap()
        .iter()
        .map(|s| (0..s.iter().product::<usize>()).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect();
    let net = Network::from_f64(spec.clone(), ring, &w).unwrap();
    let img: Vec<u64> = (0..784).map(|_| ring.encode(rng.gen_range(0.0..1.0)).unwrap().raw.0).collect();
    for profile in [Profile::Lan, Profile::Wan] {
        let plan = NnPlan::new(&spec, ring, profile).unwrap();
        let m = plan_manifest(&plan).unwrap();
        let t = std::time::Instant::now();
        let (pr, nr, ir) = (&plan, &net, &img);
        let r = run_local(&m, |p| nn_infer(p, pr, Some(nr), None), |p| nn_infer(p, pr, None, Some(ir))).unwrap();
        eprintln!("{profile:?}: {:?} {:?}", t.elapsed(), r.out1);
        assert_eq!(r.out1.unwrap(), net.infer_plain(&plan, &img).unwrap());
        let _ = NnOutput::Class(0);
        let _ = LayerSpec::Relu;
    }
}
