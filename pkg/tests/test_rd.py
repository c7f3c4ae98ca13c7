import pytest
import torch

from aglnet import rd

from oracles import assert_grads_match, fr_ledger_widths, fr_transcription


def make_refiner(channels=8, q_exponent=0, iterations=3, seed=0, dtype=torch.float32):
    torch.manual_seed(seed)
    cfg = rd.FRConfig(level=1, q_exponent=q_exponent, iterations=iterations)
    return rd.FeatureRefiner(channels, cfg).to(dtype)


def test_config_rejects_non_decreasing_splits():
    with pytest.raises(ValueError):
        rd.FRConfig(level=1, q_exponent=0, split_counts=(2, 3, 4))
    with pytest.raises(ValueError):
        rd.FRConfig(level=1, q_exponent=0, split_counts=(4, 4, 2))


def test_refiner_rejects_indivisible_width():
    with pytest.raises(ValueError):
        rd.FeatureRefiner(6, rd.FRConfig(level=1, q_exponent=2))


@pytest.mark.parametrize("channels,q", [(4, 0), (8, 1), (64, 2), (64, 0)])
def test_stage_ledger_matches_expected_widths(channels, q):
    refiner = make_refiner(channels, q)
    expected = fr_ledger_widths(channels, q, rd.DEFAULT_SPLITS)
    for conv, (conv_out, stage_out) in zip(refiner.stage_convs, expected):
        assert conv.conv.out_channels == conv_out
    assert refiner.head.in_channels == expected[-1][1]
    assert refiner.reexpand.conv.in_channels == expected[-1][1]
    assert refiner.reexpand.conv.out_channels == rd.DEFAULT_SPLITS[0] * channels


def test_aux_channel_totals():
    assert [rd.aux_channel_total(m) for m in (4, 3, 2)] == [32, 16, 8]


@pytest.mark.parametrize("iterations", [1, 2, 3, 4])
def test_refiner_output_shape_across_iterations(iterations):
    refiner = make_refiner(8, 1, iterations=iterations).eval()
    feat = torch.randn(2, 8, 8, 8)
    r_prev = torch.randn(2, 1, 4, 4)
    r_s = torch.randn(2, 1, 8, 8)
    with torch.no_grad():
        out = refiner(feat, r_prev, r_s)
    assert out.shape == (2, 1, 8, 8)
    assert torch.isfinite(out).all()


@pytest.mark.parametrize("seed", range(20))
def test_refiner_matches_stagewise_transcription(seed):
    refiner = make_refiner(4, 0, seed=seed, dtype=torch.float64).eval()
    g = torch.Generator().manual_seed(seed + 100)
    feat = torch.randn(1, 4, 8, 8, generator=g, dtype=torch.float64)
    r_prev = torch.randn(1, 1, 4, 4, generator=g, dtype=torch.float64)
    r_s = torch.randn(1, 1, 8, 8, generator=g, dtype=torch.float64)
    with torch.no_grad():
        got = refiner(feat, r_prev, r_s)
        want, stages = fr_transcription(refiner, feat, r_prev, r_s)
    assert (got - want).abs().max() < 1e-6
    assert len(stages) == len(rd.DEFAULT_SPLITS)


def test_rd_threads_predictions_coarse_to_fine():
    torch.manual_seed(3)
    decoder = rd.RD(8).eval()
    pyramid = [
        torch.randn(1, 8, 16, 16),
        torch.randn(1, 8, 8, 8),
        torch.randn(1, 8, 4, 4),
    ]
    r4 = torch.randn(1, 1, 16, 16)
    r_s = torch.randn(1, 1, 16, 16)
    with torch.no_grad():
        r3, r2, r1 = decoder(pyramid, r4, r_s)
    assert r3.shape == (1, 1, 4, 4)
    assert r2.shape == (1, 1, 8, 8)
    assert r1.shape == (1, 1, 16, 16)


def test_rd_rejects_wrong_exponent_count():
    with pytest.raises(ValueError):
        rd.RD(8, q_exponents=(1, 0))


def test_refiner_gradients_match_finite_differences():
    refiner = make_refiner(2, 0, iterations=2, seed=5, dtype=torch.float64)
    refiner.train()
    g = torch.Generator().manual_seed(6)
    feat = torch.randn(1, 2, 4, 4, generator=g, dtype=torch.float64, requires_grad=True)
    r_prev = torch.randn(1, 1, 4, 4, generator=g, dtype=torch.float64, requires_grad=True)
    r_s = torch.randn(1, 1, 4, 4, generator=g, dtype=torch.float64, requires_grad=True)
    params = [p for p in refiner.parameters() if p.requires_grad]

    def loss():
        return refiner(feat, r_prev, r_s).pow(2).mean()

    assert_grads_match(loss, params + [feat, r_prev, r_s], rtol=1e-4, atol=1e-6, max_entries=15)
