import numpy as np
import pytest
from skimage.metrics import structural_similarity

from maskdiff.metrics import PSNR_CAP, MetricsRow, SSIMConfig, evaluate, format_table, psnr_from_mse, ssim
from maskdiff.phantoms import make_phantom


def test_identity():
    ref = make_phantom("shepp_logan", 32)
    row = evaluate(ref, ref)
    assert row.mse == 0 and row.psnr == PSNR_CAP and row.ssim == pytest.approx(1.0)
    assert row.cell() == "300.00/1.0000/0.000"


def test_uniform_offset():
    ref = make_phantom("shepp_logan", 64)
    row = evaluate(ref + 0.1, ref)
    assert row.mse == pytest.approx(0.01, rel=1e-12)
    assert row.psnr == pytest.approx(20.0, rel=1e-12)


def test_psnr_definition():
    assert psnr_from_mse(1e-4) == pytest.approx(40.0)
    assert psnr_from_mse(0.0) == PSNR_CAP


def test_normalized_to_reference_peak():
    ref = make_phantom("gaussian_blobs", 32, seed=1)
    rec = ref + 0.05 * np.random.default_rng(0).standard_normal(ref.shape)
    assert evaluate(7 * rec, 7 * ref).psnr == pytest.approx(evaluate(rec, ref).psnr, rel=1e-12)


def test_ssim_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a, b = rng.random((32, 32)), rng.random((32, 32))
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-14)


def test_ssim_matches_reference_implementation():
    rng = np.random.default_rng(2)
    ref = np.abs(make_phantom("shepp_logan", 64))
    for scale in (0.02, 0.1, 0.3):
        rec = np.clip(ref + scale * rng.standard_normal(ref.shape), 0, None)
        theirs = structural_similarity(
            rec, ref, data_range=1.0, gaussian_weights=True, sigma=1.5, use_sample_covariance=False
        )
        assert ssim(rec, ref, SSIMConfig()) == pytest.approx(theirs, abs=1e-10)


def test_shape_and_zero_reference_errors():
    with pytest.raises(ValueError):
        evaluate(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        evaluate(np.ones((4, 4)), np.zeros((4, 4)))


def test_cell_format():
    assert MetricsRow(33.456, 0.91234, 1.2345e-4).cell() == "33.46/0.9123/1.234"


def test_format_table():
    text = format_table(["a", "bb"], [["1", "2"], ["333", "4"]])
    assert text.splitlines() == ["a    bb", "1    2", "333  4"]
