import json

import numpy as np
import pytest

from fovenhance.cli import main
from fovenhance.io import read_image, write_image

from _stimuli import pink_image

COMMON = ["--depth", "5", "--threshold-slope", "0", "--threshold-intercept", "2.5"]


@pytest.fixture(scope="module")
def src(tmp_path_factory):
    p = tmp_path_factory.mktemp("in") / "pink.png"
    img = np.clip(0.5 + 0.15 * pink_image(256, 3) / pink_image(256, 3).std(), 0, 1)
    write_image(p, np.repeat(img[..., None], 3, axis=2), 16)
    return p


def test_enhance(src, tmp_path):
    out, rep = tmp_path / "o.png", tmp_path / "r.json"
    assert main(["enhance", str(src), str(out), "--report", str(rep), *COMMON]) == 0
    assert read_image(out).shape == (256, 256, 3)
    assert "slope_fits" in json.loads(rep.read_text())
    assert (tmp_path / "r_histogram.csv").exists()


def test_enhance_deterministic(src, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    main(["enhance", str(src), str(a), "--seed", "4", *COMMON])
    main(["enhance", str(src), str(b), "--seed", "4", *COMMON])
    assert a.read_bytes() == b.read_bytes()


def test_analyze_and_diagnose(src, tmp_path):
    assert main(["analyze", str(src), str(tmp_path / "an"), "--level", "1", "--depth", "5"]) == 0
    assert (tmp_path / "an" / "level1_theta.png").exists()
    assert main(["diagnose", str(src), str(tmp_path / "dg"), *COMMON]) == 0
    fit = json.loads((tmp_path / "dg" / "slope_fit_unfoveated.json").read_text())
    assert np.isfinite(fit["slope"])


def test_compare(src, tmp_path):
    assert main(["compare", str(src), str(tmp_path / "cmp"), "--grades", "foveated,phase_aligned",
                 *COMMON]) == 0
    assert {p.name for p in (tmp_path / "cmp").iterdir()} == {
        "foveated.png", "phase_aligned.png", "report.json"}


def test_kernels_and_example(tmp_path, capsys):
    assert main(["kernels", str(tmp_path)]) == 0
    assert (tmp_path / "frequency_response.csv").read_text().startswith("freq,")
    assert main(["example-config"]) == 0
    assert "config_version: 1" in capsys.readouterr().out


def test_bench(tmp_path):
    out = tmp_path / "b.json"
    assert main(["bench", "--size", "256", "--no-naive", "--repeats", "1", "--output", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["timings"]["runtime_combination"] > 0


def test_exit_codes(src, tmp_path):
    assert main(["enhance", str(tmp_path / "none.png"), str(tmp_path / "o.png")]) == 3
    bad = tmp_path / "bad.yaml"
    bad.write_text("config_version: 7\n")
    assert main(["enhance", str(src), str(tmp_path / "o.png"), "--config", str(bad)]) == 2
    assert main(["enhance", str(src), str(tmp_path / "o.png"), "--depth", "12"]) == 2
    assert main(["compare", str(src), str(tmp_path / "c"), "--grades", "foveated"]) == 2
    with pytest.raises(SystemExit):
        main(["enhance", str(src), str(tmp_path / "o.png"), "--gaze", "nope"])


def test_bench_too_small():
    assert main(["bench", "--size", "64"]) == 2
