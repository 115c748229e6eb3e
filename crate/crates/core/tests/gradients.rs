mod common;

use common::{assert_passed, build, opts, rand, shape};
use mirnet_core::blocks::{
    grad_check_block, probe_loss, ChannelAttention, Conv, Dau, Direction, FusionKind, Mirnet, Mrb, NetworkConfig, PRelu,
    Resize, Rrg, Skff, SpatialAttention, SPATIAL_KERNEL,
};
use mirnet_core::optim::{charbonnier_loss, CharbonnierConfig, LossMode};
use mirnet_core::tensor::{grad_check_many, Tensor};

#[test]
fn conv_with_bias_stride_and_padding() {
    for (stride, pad, k) in [(1, 1, 3), (2, 1, 3), (1, 0, 1), (2, 2, 5)] {
        let inputs = [rand(shape(2, 3, 7, 6), 1), rand(shape(4, 3, k, k), 2), rand(shape(1, 4, 1, 1), 3)];
        let r = grad_check_many(
            |t, v| {
                let y = t.conv2d(v[0], v[1], Some(v[2]), stride, pad)?;
                probe_loss(t, y, 9)
            },
            &inputs,
            &opts(None),
        )
        .unwrap();
        assert_passed(&format!("conv k{k} s{stride} p{pad}"), &r);
    }
}

#[test]
fn elementwise_and_pooling_ops() {
    let x = rand(shape(2, 3, 5, 4), 4);
    let slope_c = rand(shape(1, 3, 1, 1), 5).reshape(mirnet_core::tensor::Shape::vector(3).unwrap()).unwrap();
    let slope_1 = Tensor::scalar(0.3).reshape(mirnet_core::tensor::Shape::vector(1).unwrap()).unwrap();
    for (name, slope) in [("prelu per-channel", slope_c), ("prelu shared", slope_1)] {
        let r = grad_check_many(
            |t, v| {
                let y = t.prelu(v[0], v[1])?;
                probe_loss(t, y, 1)
            },
            &[x.clone(), slope],
            &opts(None),
        )
        .unwrap();
        assert_passed(name, &r);
    }
    type Op = fn(&mut mirnet_core::tensor::Tape<f64>, mirnet_core::tensor::Var) -> mirnet_core::Result<mirnet_core::tensor::Var>;
    let unary: [(&str, Op); 5] = [
        ("sigmoid", |t, v| t.sigmoid(v)),
        ("gap", |t, v| t.global_avg_pool(v)),
        ("channel_pool", |t, v| t.channel_pool(v)),
        ("blur_pool", |t, v| t.blur_pool(v)),
        ("upsample2x", |t, v| t.upsample2x(v)),
    ];
    let even = rand(shape(2, 3, 6, 4), 6);
    for (name, op) in unary {
        let r = grad_check_many(
            |t, v| {
                let y = op(t, v[0])?;
                probe_loss(t, y, 2)
            },
            std::slice::from_ref(&even),
            &opts(None),
        )
        .unwrap();
        assert_passed(name, &r);
    }
}

#[test]
fn binary_ops_concat_and_softmax() {
    let a = rand(shape(2, 3, 4, 4), 7);
    let b = rand(shape(2, 3, 4, 4), 8);
    let g = rand(shape(2, 3, 1, 1), 9);
    let r = grad_check_many(
        |t, v| {
            let s = t.sub(v[0], v[1])?;
            let m = t.mul(s, v[2])?;
            let c = t.concat(&[m, v[1], v[0]])?;
            let y = t.add(c, c)?;
            probe_loss(t, y, 3)
        },
        &[a, b, g],
        &opts(None),
    )
    .unwrap();
    assert_passed("sub/mul/concat/add", &r);

    let logits: Vec<_> = (0..3).map(|i| rand(shape(2, 4, 1, 1), 20 + i)).collect();
    let r = grad_check_many(
        |t, v| {
            let w = t.branch_softmax(v)?;
            let c = t.concat(&w)?;
            probe_loss(t, c, 4)
        },
        &logits,
        &opts(None),
    )
    .unwrap();
    assert_passed("branch_softmax", &r);
}

#[test]
fn building_blocks() {
    let (conv, p) = build(1, |b| Conv::new(b, "c", 3, 2, 3, true));
    let r = grad_check_block(&p, &[rand(shape(1, 3, 5, 5), 1)], &opts(None), |t, b, v| conv.forward(t, b, v[0])).unwrap();
    assert_passed("conv block", &r);

    let (act, p) = build(2, |b| PRelu::new(b, "a", 3));
    let r = grad_check_block(&p, &[rand(shape(1, 3, 4, 4), 2)], &opts(None), |t, b, v| act.forward(t, b, v[0])).unwrap();
    assert_passed("prelu block", &r);

    let (skff, p) = build(3, |b| Skff::new(b, "s", 4, 3));
    let xs: Vec<_> = (0..3).map(|i| rand(shape(2, 4, 4, 4), 30 + i)).collect();
    let r = grad_check_block(&p, &xs, &opts(None), |t, b, v| skff.forward(t, b, v)).unwrap();
    assert_passed("skff", &r);

    let (ca, p) = build(4, |b| ChannelAttention {
        squeeze: Conv::new(b, "sq", 4, 4, 1, true),
        act: PRelu::new(b, "act", 4),
        excite: Conv::new(b, "ex", 4, 4, 1, true),
    });
    let r = grad_check_block(&p, &[rand(shape(2, 4, 4, 4), 4)], &opts(None), |t, b, v| ca.forward(t, b, v[0])).unwrap();
    assert_passed("channel attention", &r);

    let (sa, p) = build(5, |b| SpatialAttention { conv: Conv::new(b, "conv", 2, 1, SPATIAL_KERNEL, true) });
    let r = grad_check_block(&p, &[rand(shape(2, 3, 6, 6), 5)], &opts(None), |t, b, v| sa.forward(t, b, v[0])).unwrap();
    assert_passed("spatial attention", &r);

    let (dau, p) = build(6, |b| Dau::new(b, "dau", 4));
    let r = grad_check_block(&p, &[rand(shape(1, 4, 6, 6), 6)], &opts(Some(40)), |t, b, v| dau.forward(t, b, v[0])).unwrap();
    assert_passed("dau", &r);

    for (dir, c) in [(Direction::Down, 2), (Direction::Up, 4)] {
        let (rs, p) = build(7, |b| Resize::new(b, "r", dir, c));
        let r = grad_check_block(&p, &[rand(shape(1, c, 6, 4), 7)], &opts(None), |t, b, v| rs.forward(t, b, v[0])).unwrap();
        assert_passed(&format!("resize {dir:?}"), &r);
    }
}

#[test]
fn composite_blocks() {
    for kind in [FusionKind::Skff, FusionKind::Sum, FusionKind::Concat] {
        let (mrb, p) = build(8, |b| Mrb::new(b, "mrb", 2, 2, 2, kind));
        let r = grad_check_block(&p, &[rand(shape(1, 2, 4, 4), 8)], &opts(Some(12)), |t, b, v| mrb.forward(t, b, v[0]))
            .unwrap();
        assert_passed(&format!("mrb {}", kind.name()), &r);
    }

    let cfg = NetworkConfig { base_channels: 2, n_streams: 2, n_columns: 1, image_channels: 3, ..NetworkConfig::desk() };
    let (rrg, p) = build(9, |b| Rrg::new(b, "rrg", &cfg));
    let r = grad_check_block(&p, &[rand(shape(1, 2, 4, 4), 9)], &opts(Some(12)), |t, b, v| rrg.forward(t, b, v[0])).unwrap();
    assert_passed("rrg", &r);

    let (net, p) = build(10, |b| Mirnet::new(b, &cfg).unwrap());
    let r = grad_check_block(&p, &[rand(shape(1, 3, 4, 4), 10)], &opts(Some(8)), |t, b, v| net.forward(t, b, v[0])).unwrap();
    assert_passed("network", &r);
}

#[test]
fn charbonnier_both_modes() {
    for mode in [LossMode::PerPixelMean, LossMode::GlobalNorm] {
        let cfg = CharbonnierConfig { mode, ..CharbonnierConfig::default() };
        let r = grad_check_many(
            |t, v| charbonnier_loss(t, v[0], v[1], &cfg),
            &[rand(shape(2, 3, 4, 4), 11), rand(shape(2, 3, 4, 4), 12)],
            &opts(None),
        )
        .unwrap();
        assert_passed(mode.name(), &r);
    }
}
