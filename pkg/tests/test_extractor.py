import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gate_level_ph, term_table
from sramrng import (
    ArityError,
    ConstraintError,
    InsufficientInputError,
    PhConfig,
    PowerError,
    RangeError,
    TagSpec,
    create_tag,
    entropy_capacity,
    extract_all,
    harvest,
    ph_hash,
)
from sramrng.entropy import monobit_test
from sramrng.extractor import ideal_extract, output_width


def words_strategy(w):
    return st.lists(st.integers(0, (1 << w) - 1), min_size=16, max_size=16)


class TestPhHash:
    def test_zero(self):
        assert ph_hash([0] * 16, [0] * 16).value == 0

    def test_hand_arithmetic(self):
        m = [1, 3] + [0] * 14
        k = [2, 4] + [0] * 14
        assert ph_hash(m, k, PhConfig(16)).value == 21

    def test_all_ones_w16(self):
        top = (1 << 16) - 1
        out = ph_hash([top] * 16, [top] * 16, PhConfig(16))
        assert out.value == 137_434_759_200
        assert out.value < 2**37 and out.width_bits == 37

    def test_all_ones_w64(self):
        top = (1 << 64) - 1
        out = ph_hash([top] * 16, [top] * 16, PhConfig(64))
        assert 2**132 <= out.value < 2**133 and out.width_bits == 133

    def test_bits_roundtrip(self):
        out = ph_hash([1, 3] + [0] * 14, [2, 4] + [0] * 14)
        bits = out.bits()
        assert bits.size == 37
        assert int("".join(map(str, bits)), 2) == 21

    def test_errors(self):
        with pytest.raises(ArityError):
            ph_hash([0] * 15, [0] * 16)
        with pytest.raises(ArityError):
            ph_hash([0] * 16, [0] * 17)
        with pytest.raises(RangeError):
            ph_hash([1 << 16] + [0] * 15, [0] * 16)
        with pytest.raises(RangeError):
            ph_hash([-1] + [0] * 15, [0] * 16)
        with pytest.raises(ConstraintError):
            PhConfig(word_bits=32)
        with pytest.raises(ConstraintError):
            PhConfig(pairs=4)

    @pytest.mark.parametrize("w", [2, 3, 4])
    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_matches_gate_level_oracle(self, w, data):
        m = data.draw(words_strategy(w))
        k = data.draw(words_strategy(w))
        assert ph_hash(m, k, w).value == gate_level_ph(m, k, w)

    @settings(max_examples=200, deadline=None)
    @given(words_strategy(16), words_strategy(16))
    def test_width_bound_w16(self, m, k):
        assert ph_hash(m, k, PhConfig(16)).value < 2**37

    def test_exhaustive_term_table_w2(self):
        table = term_table(2)
        for (a, b, c, d), v in table.items():
            m = [a, c] + [0] * 14
            k = [b, d] + [0] * 14
            assert ph_hash(m, k, 2).value == v


class TestExtractAll:
    @pytest.mark.parametrize(
        "n_bits, w, chunks, out_bits",
        [(2048, 64, 1, 133), (2048, 16, 4, 148), (512, 16, 1, 37), (3008, 16, 5, 185)],
    )
    def test_yield(self, n_bits, w, chunks, out_bits):
        mem = np.random.default_rng(n_bits).integers(0, 2, n_bits)
        rep = extract_all(mem, PhConfig(w))
        assert rep.chunks == chunks
        assert rep.extractor_yield_bits == out_bits
        assert rep.discarded_bits == n_bits - chunks * 32 * w

    def test_capacity_of_2048_bits(self):
        assert extract_all(np.zeros(2048, dtype=np.uint8)).entropy_capacity_bits == 210

    def test_layout_message_then_key(self):
        # word 0 (message m1) = 1, word 16 (key k1) = 2, word 1 = 3, word 17 = 4
        words = [0] * 32
        words[0], words[16], words[1], words[17] = 1, 2, 3, 4
        mem = np.array([(wd >> (15 - i)) & 1 for wd in words for i in range(16)], dtype=np.uint8)
        rep = extract_all(mem, PhConfig(16))
        assert int("".join(map(str, rep.bits)), 2) == 21
        assert rep.hex() == "0000000015"

    def test_w64_path_matches_ph_hash(self):
        rng = np.random.default_rng(3)
        mem = rng.integers(0, 2, 2048).astype(np.uint8)
        words = [int("".join(map(str, mem[i * 64:(i + 1) * 64])), 2) for i in range(32)]
        expect = ph_hash(words[:16], words[16:], PhConfig(64)).value
        assert int("".join(map(str, extract_all(mem, PhConfig(64)).bits)), 2) == expect

    def test_vectorized_matches_scalar_w16(self):
        rng = np.random.default_rng(4)
        mem = rng.integers(0, 2, 512 * 3).astype(np.uint8)
        bits = extract_all(mem).bits
        for c in range(3):
            chunk = mem[c * 512:(c + 1) * 512]
            words = [int("".join(map(str, chunk[i * 16:(i + 1) * 16])), 2) for i in range(32)]
            v = ph_hash(words[:16], words[16:]).value
            assert int("".join(map(str, bits[c * 37:(c + 1) * 37])), 2) == v

    def test_too_short(self):
        with pytest.raises(InsufficientInputError):
            extract_all(np.zeros(511, dtype=np.uint8))
        with pytest.raises(InsufficientInputError):
            extract_all([])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(512, 6000), st.sampled_from([16, 64]), st.integers(0, 1000))
    def test_yield_arithmetic(self, n, w, seed):
        mem = np.random.default_rng(seed).integers(0, 2, n)
        if n < 32 * w:
            with pytest.raises(InsufficientInputError):
                extract_all(mem, PhConfig(w))
            return
        rep = extract_all(mem, PhConfig(w))
        assert rep.extractor_yield_bits == (n // (32 * w)) * output_width(w)
        assert np.array_equal(rep.bits, extract_all(mem, PhConfig(w)).bits)


class TestHarvest:
    def test_default_tag(self):
        tag = create_tag(seed=1)
        tag.power_on(0.0)
        rep = harvest(tag)
        assert (rep.chunks, rep.extractor_yield_bits, rep.entropy_capacity_bits) == (5, 185, 309)
        assert rep.source_bytes == 376

    def test_does_not_touch_memory(self):
        tag = create_tag(seed=1)
        tag.power_on(0.0)
        before = tag.read_bits()
        a = harvest(tag).bits
        b = harvest(tag).bits
        assert np.array_equal(a, b)
        assert np.array_equal(before, tag.read_bits())

    def test_cold_boot_changes_output(self):
        tag = create_tag(seed=2)
        tag.power_on(0.0)
        a = harvest(tag).bits
        tag.power_off(0.0)
        tag.power_on(60.0)
        b = harvest(tag).bits
        free_noisy = int(tag.noisy_mask[136 * 8:].sum())
        # collision needs every noisy free cell to land the same way: <= 2^-free_noisy
        assert free_noisy > 200
        assert not np.array_equal(a, b)

    def test_unpowered(self):
        with pytest.raises(PowerError):
            harvest(create_tag(seed=1))

    def test_small_free_region(self):
        tag = create_tag(TagSpec(total_bytes=100, reserved_bytes=60), seed=1)
        tag.power_on(0.0)
        with pytest.raises(InsufficientInputError):
            harvest(tag)


class TestEntropyCapacity:
    @pytest.mark.parametrize(
        "free, density, expected",
        [(376, 0.103, 309), (144, 0.103, 118), (0, 0.7, 0), (256, 0.103, 210), (364, 0.103, 299)],
    )
    def test_values(self, free, density, expected):
        assert entropy_capacity(free, density) == expected

    def test_exact_floor(self):
        # 1000 * 8 * 0.125 = 1000 exactly; binary float error must not drop it to 999
        assert entropy_capacity(1000, 0.125) == 1000
        assert entropy_capacity(125, 0.1) == 100

    def test_range(self):
        with pytest.raises(ConstraintError):
            entropy_capacity(-1, 0.1)
        with pytest.raises(ConstraintError):
            entropy_capacity(10, 1.5)


def test_universality_smoke():
    """Low 32 output bits of PH on uniform input are balanced per position."""
    rng = np.random.default_rng(2024)
    n = 10_000
    mem = rng.integers(0, 2, (n, 512)).astype(np.uint8)
    weights = 1 << np.arange(15, -1, -1, dtype=np.int64)
    words = mem.reshape(n, 32, 16).astype(np.int64) @ weights
    s = words[:, :16] + words[:, 16:]
    values = (s[:, 0::2] * s[:, 1::2]).sum(axis=1)
    low = ((values[:, None] >> np.arange(32)) & 1).astype(np.uint8)
    freq = low.mean(axis=0)
    sd = np.sqrt(0.25 / n)
    assert np.all(np.abs(freq - 0.5) <= 5 * sd)
    assert monobit_test(low.ravel()[:320_000], alpha=0.01).passed
    # the vectorized probe agrees with the library on a sample
    for i in range(5):
        assert extract_all(mem[i]).bits.tolist() == [int(c) for c in format(int(values[i]), "037b")]


def test_ideal_extract():
    mem = np.random.default_rng(0).integers(0, 2, 3008)
    a = ideal_extract(mem, 309)
    assert a.size == 309
    assert np.array_equal(a, ideal_extract(mem, 309))
    assert not np.array_equal(a, ideal_extract(1 - mem, 309))
