use retromark::scatter::{bragg_angles, sweep_rcs, sweep_stats, PatchPlaneSpec, TagAssembly};
use retromark::synthesis::{build_quantized_lens, lens_to_mask, table1_library, LensSpec, MaskMode};

fn tag(mode: MaskMode) -> TagAssembly {
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).unwrap();
    let mask = lens_to_mask(&lens, 4, mode).unwrap();
    TagAssembly::new(mask, PatchPlaneSpec::default(), 20.0)
}

#[test]
fn patch_plane_lobes_sit_on_bragg_angles() {
    let t = tag(MaskMode::Quantized);
    let bare = TagAssembly::patch_only(PatchPlaneSpec::default(), t.wavelength_mm, t.pitch_mm);
    let sweep = sweep_rcs(&bare, -90.0, 90.0, 1.0).unwrap();
    assert_eq!(sweep.len(), 181);
    let maxima = sweep.local_maxima();
    let bragg = bragg_angles(2.48, t.wavelength_mm, &[1, -1]).unwrap();
    for (_, b) in &bragg.angles {
        assert!(maxima.iter().any(|m| (m - b).abs() <= 1.0), "no lobe near {b}: {maxima:?}");
    }
    // broadside specular peak
    assert!(maxima.contains(&0.0), "{maxima:?}");
}

#[test]
fn lens_flattens_the_response() {
    let t = tag(MaskMode::Quantized);
    let bare = TagAssembly::patch_only(PatchPlaneSpec::default(), t.wavelength_mm, t.pitch_mm);
    let full = sweep_rcs(&t, -40.0, 40.0, 1.0).unwrap();
    let patch = sweep_rcs(&bare, -40.0, 40.0, 1.0).unwrap();
    let sf = sweep_stats(&full, 80.0).unwrap();
    let sp = sweep_stats(&patch, 80.0).unwrap();
    eprintln!("tag {sf:?}\npatch {sp:?}");
    assert!(sf.variation_db < sp.variation_db);
    assert!(full.at(20.0).unwrap() - patch.at(20.0).unwrap() > 10.0);
    // even in θ for the symmetric assembly
    let v = full.rcs_dbsm();
    for k in 0..v.len() {
        assert!((v[k] - v[v.len() - 1 - k]).abs() < 1e-9);
    }
}
