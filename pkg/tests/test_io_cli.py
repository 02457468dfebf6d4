"""PNG round-trips, trace CSV format, and the command-line interface."""

import json

import numpy as np
import pytest
from PIL import Image

from dipcontrol import (
    TraceRecord,
    load_image,
    read_trace_csv,
    save_image,
    synthetic_photo,
    write_trace_csv,
)
from dipcontrol.cli import main


class TestLoadSave:
    def test_value_mapping(self, tmp_path):
        arr = np.zeros((4, 4), dtype=np.uint8)
        arr[0, 0] = 255
        Image.fromarray(arr, mode="L").save(tmp_path / "t.png")
        img = load_image(tmp_path / "t.png")
        assert img.shape == (1, 1, 4, 4)
        assert img[0, 0, 0, 0] == 1.0
        assert img[0, 0, 1, 1] == 0.0

    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(8, 9, 3), dtype=np.uint8)
        Image.fromarray(arr, mode="RGB").save(tmp_path / "rgb.png")
        img = load_image(tmp_path / "rgb.png")
        save_image(img, tmp_path / "back.png")
        with Image.open(tmp_path / "back.png") as back:
            np.testing.assert_array_equal(np.asarray(back), arr)

    def test_sixteen_bit_rejected(self, tmp_path):
        arr = np.zeros((4, 4), dtype=np.uint16)
        Image.fromarray(arr, mode="I;16").save(tmp_path / "deep.png")
        with pytest.raises(ValueError, match="mode"):
            load_image(tmp_path / "deep.png")

    def test_non_png_rejected(self, tmp_path):
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(tmp_path / "t.jpg")
        with pytest.raises(ValueError, match="PNG"):
            load_image(tmp_path / "t.jpg")

    def test_half_rounds_up(self, tmp_path):
        img = np.full((1, 1, 2, 2), 0.5)
        save_image(img, tmp_path / "half.png")
        with Image.open(tmp_path / "half.png") as back:
            assert np.asarray(back)[0, 0] == 128

    def test_out_of_range_clamped(self, tmp_path):
        img = np.array([[[-0.2, 1.3], [0.0, 1.0]]])[None]
        save_image(img, tmp_path / "clamp.png")
        with Image.open(tmp_path / "clamp.png") as back:
            np.testing.assert_array_equal(np.asarray(back), [[0, 255], [0, 255]])

    def test_grayscale_stays_single_channel(self, tmp_path):
        img = synthetic_photo(8, 8, channels=1, seed=1)
        save_image(img, tmp_path / "gray.png")
        assert load_image(tmp_path / "gray.png").shape == (1, 1, 8, 8)


def make_rows(n=3, bands=5, with_psnr=True):
    rows = []
    for i in range(1, n + 1):
        rows.append(
            TraceRecord(
                iteration=i * 10,
                loss=0.1 / i,
                psnr=20.0 + i if with_psnr else None,
                r_ratio=3.0 - 0.1 * i,
                fbc=np.linspace(0.9, 0.1, bands),
            )
        )
    return rows


class TestTraceCsv:
    def test_header_and_column_count(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(make_rows(bands=5), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,loss,psnr,r_ratio,fbc_1,fbc_2,fbc_3,fbc_4,fbc_5"
        assert all(len(line.split(",")) == 9 for line in lines)

    def test_empty_psnr_cells(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(make_rows(with_psnr=False), path)
        second = path.read_text().splitlines()[1].split(",")
        assert second[2] == ""

    def test_non_increasing_refused(self, tmp_path):
        rows = make_rows()
        rows[2].iteration = rows[1].iteration
        with pytest.raises(ValueError, match="increasing"):
            write_trace_csv(rows, tmp_path / "bad.csv")

    def test_roundtrip_at_precision(self, tmp_path):
        path = tmp_path / "trace.csv"
        rows = make_rows()
        write_trace_csv(rows, path)
        parsed = read_trace_csv(path)
        for row, rec in zip(parsed, rows):
            assert row["iteration"] == rec.iteration
            assert row["loss"] == pytest.approx(rec.loss, rel=1e-5)
            assert row["fbc_1"] == pytest.approx(rec.fbc[0], rel=1e-5)
        # serializing the parsed values again is byte-identical
        rows2 = [
            TraceRecord(r["iteration"], r["loss"], r["psnr"], r["r_ratio"],
                        [r[f"fbc_{i+1}"] for i in range(5)])
            for r in parsed
        ]
        write_trace_csv(rows2, tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_text() == path.read_text()

    def test_lf_line_endings(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(make_rows(), path)
        raw = path.read_bytes()
        assert b"\r" not in raw


@pytest.fixture
def noisy_pair(tmp_path):
    clean = synthetic_photo(16, 16, seed=2)
    rng = np.random.default_rng(3)
    noisy = np.clip(clean + rng.normal(0, 0.1, clean.shape), 0, 1).astype(np.float32)
    save_image(clean, tmp_path / "clean.png")
    save_image(noisy, tmp_path / "noisy.png")
    return tmp_path


SMALL_NET = ["--channels", "8", "--stages", "2", "--trace-every", "2", "--log-every", "0"]


class TestCli:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["denoise", "--nonsense"])
        assert err.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["transmogrify"])
        assert err.value.code == 2

    def test_missing_input_is_runtime_error(self, tmp_path):
        code = main(["denoise", "--in", str(tmp_path / "absent.png"), "--iters", "1"] + SMALL_NET)
        assert code == 1

    def test_denoise_writes_outputs_and_echo(self, noisy_pair, capsys):
        out = noisy_pair / "restored.png"
        trace = noisy_pair / "trace.csv"
        code = main(
            ["denoise", "--in", str(noisy_pair / "noisy.png"), "--ref", str(noisy_pair / "clean.png"),
             "--out", str(out), "--trace", str(trace), "--iters", "4", "--stop", "off",
             "--seed", "5"] + SMALL_NET
        )
        assert code == 0
        assert out.exists() and trace.exists()
        echo = json.loads((noisy_pair / "restored_config.json").read_text())
        assert echo["seed"] == 5 and echo["command"] == "denoise"
        assert echo["iters_effective"] == 4
        printed = capsys.readouterr().out
        assert "stop iteration" in printed and "PSNR" in printed

    def test_inpaint_with_generated_mask(self, noisy_pair):
        out = noisy_pair / "inpainted.png"
        code = main(
            ["inpaint", "--in", str(noisy_pair / "noisy.png"), "--mask", "central:0.25",
             "--out", str(out), "--iters", "3", "--stop", "off", "--seed", "1"] + SMALL_NET
        )
        assert code == 0 and out.exists()

    def test_superres_default_iters_respected(self, noisy_pair):
        echo_out = noisy_pair / "up.png"
        code = main(
            ["superres", "--in", str(noisy_pair / "noisy.png"), "--factor", "4",
             "--out", str(echo_out), "--iters", "2", "--stop", "off"] + SMALL_NET
        )
        assert code == 0
        up = load_image(echo_out)
        assert up.shape[-2:] == (64, 64)

    def test_measure_fbc_mode(self, noisy_pair):
        seq = noisy_pair / "seq"
        seq.mkdir()
        for i in range(3):
            save_image(synthetic_photo(16, 16, seed=i), seq / f"frame_{i}.png")
        out_csv = noisy_pair / "fbc.csv"
        code = main(
            ["measure-fbc", "--in", str(seq), "--target", str(noisy_pair / "clean.png"),
             "--bands", "5", "--out", str(out_csv)]
        )
        assert code == 0
        rows = read_trace_csv(out_csv)
        assert len(rows) == 3
        assert rows[0]["loss"] is None  # pure measurement, no optimization
        assert rows[0]["fbc_1"] is not None

    def test_enhance_writes_output(self, noisy_pair):
        out = noisy_pair / "enhanced.png"
        code = main(
            ["enhance", "--in", str(noisy_pair / "clean.png"), "--lam", "1",
             "--out", str(out), "--iters", "2", "--seed", "2"] + SMALL_NET
        )
        assert code == 0 and out.exists()
