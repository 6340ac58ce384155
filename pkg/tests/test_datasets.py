import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import lgsqe
from lgsqe.errors import FormatError, LengthError, VersionError

from conftest import random_image_set


def write_idx(path, images: np.ndarray) -> None:
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, count, rows, cols))
        fh.write(images.astype(np.uint8).tobytes())


class TestIdx:
    def test_hand_built_fixture(self, tmp_path):
        raw = np.arange(18, dtype=np.uint8).reshape(2, 3, 3)
        path = tmp_path / "two.idx"
        write_idx(path, raw)
        loaded = lgsqe.load_idx(path)
        assert loaded.count == 2
        assert loaded.channels == 1
        np.testing.assert_array_equal(loaded.pixels[..., 0], raw.astype(np.float32) / 255.0)
        assert loaded.pixels.min() >= 0.0 and loaded.pixels.max() <= 1.0

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">IIII", 0, 2, 3, 3) + bytes(18))
        with pytest.raises(FormatError):
            lgsqe.load_idx(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 3, 3) + bytes(17))
        with pytest.raises(LengthError):
            lgsqe.load_idx(path)


class TestCifar:
    def test_two_record_fixture(self, tmp_path):
        raw = (np.arange(2 * 3073) % 256).astype(np.uint8)
        path = tmp_path / "batch.bin"
        path.write_bytes(raw.tobytes())
        loaded = lgsqe.load_cifar_bin(path)
        assert loaded.count == 2
        assert loaded.side == 32 and loaded.channels == 3
        # independent index arithmetic: channel-planar record layout
        for img, row, col, ch in [(0, 0, 0, 0), (0, 5, 7, 1), (1, 31, 31, 2), (1, 12, 3, 0)]:
            byte = raw[img * 3073 + 1 + ch * 1024 + row * 32 + col]
            assert loaded.pixels[img, row, col, ch] == np.float32(byte / 255.0)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        assert lgsqe.load_cifar_bin(path).count == 0

    def test_bad_length(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(bytes(3072))
        with pytest.raises(LengthError):
            lgsqe.load_cifar_bin(path)


class TestLgt:
    @given(
        count=st.integers(0, 6),
        side=st.integers(2, 9),
        channels=st.sampled_from([1, 3]),
        generated=st.booleans(),
        seed=st.integers(0, 2**16),
    )
    @settings(max_examples=30)
    def test_round_trip_bit_identical(self, tmp_path_factory, count, side, channels, generated, seed):
        tmp = tmp_path_factory.mktemp("lgt")
        rng = np.random.default_rng(seed)
        pixels = rng.random((count, side, side, channels), dtype=np.float32)
        original = lgsqe.ImageSet(pixels, "generated" if generated else "real")
        path = tmp / "dump.lgt"
        lgsqe.save_raw_tensor(original, path)
        reloaded = lgsqe.load_raw_tensor(path)
        assert reloaded.provenance == original.provenance
        assert reloaded.pixels.tobytes() == original.pixels.tobytes()

    def test_header_fields(self, tmp_path):
        images = random_image_set(100, side=28, seed=1, provenance="generated")
        path = tmp_path / "g.lgt"
        lgsqe.save_raw_tensor(images, path)
        raw = path.read_bytes()
        assert raw[:4] == b"LGT1"
        assert struct.unpack("<IIII", raw[4:20]) == (100, 28, 28, 1)
        assert raw[20] == 1
        assert lgsqe.load_raw_tensor(path).count == 100

    def test_zero_count(self, tmp_path):
        path = tmp_path / "empty.lgt"
        path.write_bytes(b"LGT1" + struct.pack("<IIII", 0, 28, 28, 1) + bytes([1]))
        loaded = lgsqe.load_raw_tensor(path)
        assert loaded.count == 0 and loaded.provenance == "generated"

    def test_payload_mismatch(self, tmp_path):
        path = tmp_path / "bad.lgt"
        path.write_bytes(b"LGT1" + struct.pack("<IIII", 2, 2, 2, 1) + bytes([0]) + bytes(4))
        with pytest.raises(LengthError):
            lgsqe.load_raw_tensor(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "v2.lgt"
        path.write_bytes(b"LGT2" + struct.pack("<IIII", 0, 2, 2, 1) + bytes([0]))
        with pytest.raises(VersionError):
            lgsqe.load_raw_tensor(path)

    def test_not_lgt(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"\x00\x00\x00\x00" + bytes(32))
        with pytest.raises(FormatError):
            lgsqe.load_raw_tensor(path)


class TestAutoDetect:
    def test_sniffs_all_three(self, tmp_path):
        idx_path = tmp_path / "a.idx"
        write_idx(idx_path, np.zeros((1, 4, 4), dtype=np.uint8))
        cifar_path = tmp_path / "b.bin"
        cifar_path.write_bytes(bytes(3073))
        lgt_path = tmp_path / "c.lgt"
        lgsqe.save_raw_tensor(random_image_set(1, side=4), lgt_path)
        assert lgsqe.load_images(idx_path).side == 4
        assert lgsqe.load_images(cifar_path).side == 32
        assert lgsqe.load_images(lgt_path).side == 4


class TestSplit:
    def test_counts_arithmetic(self):
        real = random_image_set(1000, seed=1)
        generated = random_image_set(1000, seed=2, provenance="generated")
        split = lgsqe.make_labeled_split(real, generated, test_fraction=0.2, real_fraction=1.0, seed=0)
        assert split.train_real.count == 800 and split.train_generated.count == 800
        assert split.test_real.count == 200 and split.test_generated.count == 200

    def test_real_fraction_shrinks_only_real_train(self):
        real = random_image_set(1000, seed=1)
        generated = random_image_set(1000, seed=2, provenance="generated")
        split = lgsqe.make_labeled_split(real, generated, test_fraction=0.2, real_fraction=0.2, seed=0)
        assert split.train_real.count == 160
        assert split.train_generated.count == 800
        assert split.test_real.count == 200 and split.test_generated.count == 200

    def test_same_seed_identical(self):
        real = random_image_set(50, seed=1)
        generated = random_image_set(60, seed=2, provenance="generated")
        a = lgsqe.make_labeled_split(real, generated, seed=3)
        b = lgsqe.make_labeled_split(real, generated, seed=3)
        np.testing.assert_array_equal(a.train_real_idx, b.train_real_idx)
        np.testing.assert_array_equal(a.test_generated_idx, b.test_generated_idx)

    def test_different_seed_differs(self):
        real = random_image_set(500, seed=1)
        generated = random_image_set(500, seed=2, provenance="generated")
        a = lgsqe.make_labeled_split(real, generated, seed=3)
        b = lgsqe.make_labeled_split(real, generated, seed=4)
        assert not np.array_equal(a.test_real_idx, b.test_real_idx)

    @given(
        n_real=st.integers(5, 60),
        n_gen=st.integers(5, 60),
        test_fraction=st.floats(0.1, 0.9),
        real_fraction=st.floats(0.1, 1.0),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=40)
    def test_disjoint_and_bounded(self, n_real, n_gen, test_fraction, real_fraction, seed):
        real = random_image_set(n_real, seed=1)
        generated = random_image_set(n_gen, seed=2, provenance="generated")
        split = lgsqe.make_labeled_split(real, generated, test_fraction, real_fraction, seed)
        assert not set(split.train_real_idx) & set(split.test_real_idx)
        assert not set(split.train_generated_idx) & set(split.test_generated_idx)
        assert split.train_generated.count + split.test_generated.count == n_gen

    def test_union_labels(self):
        real = random_image_set(10, seed=1)
        generated = random_image_set(10, seed=2, provenance="generated")
        split = lgsqe.make_labeled_split(real, generated, seed=0)
        _, labels = split.train_union()
        assert set(labels.tolist()) == {0, 1}
        assert labels.sum() == split.train_generated.count

    def test_empty_source_rejected(self):
        real = random_image_set(10, seed=1)
        empty = lgsqe.ImageSet(np.empty((0, 8, 8, 1), dtype=np.float32), "generated")
        with pytest.raises(ValueError):
            lgsqe.make_labeled_split(real, empty)

    def test_bad_fractions_rejected(self):
        real = random_image_set(10, seed=1)
        generated = random_image_set(10, seed=2, provenance="generated")
        with pytest.raises(ValueError):
            lgsqe.make_labeled_split(real, generated, test_fraction=1.0)
        with pytest.raises(ValueError):
            lgsqe.make_labeled_split(real, generated, real_fraction=0.0)


class TestImageSet:
    def test_rejects_out_of_range_pixels(self):
        with pytest.raises(ValueError):
            lgsqe.ImageSet(np.full((1, 4, 4, 1), 1.5, dtype=np.float32))

    def test_rejects_non_square(self):
        with pytest.raises(Exception):
            lgsqe.ImageSet(np.zeros((1, 4, 5, 1), dtype=np.float32))

    def test_immutable(self):
        images = random_image_set(2)
        with pytest.raises(ValueError):
            images.pixels[0, 0, 0, 0] = 0.0
