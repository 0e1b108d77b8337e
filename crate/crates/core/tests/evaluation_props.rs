use proptest::prelude::*;
use roofkit_core::evaluation::{footprint_iou, mae_rmse};
use roofkit_core::raster::{HeightMap, Mask};

fn pair() -> impl Strategy<Value = (HeightMap, HeightMap, Mask)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(0.0f64..20.0, w * h),
            prop::collection::vec(0.0f64..20.0, w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
            .prop_map(move |(a, b, mut fp)| {
                fp[0] = true;
                (
                    HeightMap::new(w, h, 1.0, a).unwrap(),
                    HeightMap::new(w, h, 1.0, b).unwrap(),
                    Mask::new(w, h, fp).unwrap(),
                )
            })
    })
}

proptest! {
    #[test]
    fn mae_never_exceeds_rmse((pred, gt, m) in pair()) {
        let (mae, rmse) = mae_rmse(&pred, &gt, &m).unwrap();
        prop_assert!(mae <= rmse * (1.0 + 1e-12));
        prop_assert_eq!(mae_rmse(&gt, &pred, &m).unwrap(), (mae, rmse));
    }

    #[test]
    fn constant_error_gives_equal_metrics((gt, _, m) in pair(), offset in 0.01f64..5.0) {
        let shifted: Vec<f64> = gt.data().iter().map(|v| v + offset).collect();
        let pred = HeightMap::new(gt.width(), gt.height(), 1.0, shifted).unwrap();
        let (mae, rmse) = mae_rmse(&pred, &gt, &m).unwrap();
        prop_assert!((mae - offset).abs() < 1e-9 && (rmse - offset).abs() < 1e-9);
    }

    #[test]
    fn iou_is_a_fraction((pred, _, m) in pair(), threshold in 0.0f64..10.0) {
        let iou = footprint_iou(&pred, &m, threshold).unwrap();
        prop_assert!((0.0..=1.0).contains(&iou));
    }
}
