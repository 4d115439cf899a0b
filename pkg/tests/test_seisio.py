import numpy as np
import pytest

from wavekit.model import Field3D, Grid
from wavekit.seisio import (
    Coordinate3,
    FileFormatError,
    Seismogram,
    read_model,
    read_receiver_coords,
    read_seismogram,
    read_source_coords,
    read_wavelet,
    write_model,
    write_receiver_coords,
    write_seismogram,
    write_source_coords,
    write_wavelet,
)

RNG = np.random.default_rng(11)


def random_coords(n):
    return [Coordinate3(*xyz) for xyz in RNG.uniform(-1e3, 1e3, (n, 3))]


class TestCoordinates:
    def test_source_roundtrip(self, tmp_path):
        path = tmp_path / "src_coord.bin"
        coords = random_coords(27)
        write_source_coords(path, coords)
        assert path.stat().st_size == 27 * 3 * 8
        assert read_source_coords(path, 27) == coords

    def test_paper_source_grid(self, tmp_path):
        vals = [20.0, 120.0, 220.0]
        coords = [Coordinate3(x, y, z) for x in vals for y in vals for z in vals]
        path = tmp_path / "src_coord.bin"
        write_source_coords(path, coords)
        back = read_source_coords(path, 27)
        assert len(back) == 27
        assert all(c.x in vals and c.y in vals and c.z in vals for c in back)

    def test_empty_file_zero_sources(self, tmp_path):
        path = tmp_path / "src_coord.bin"
        write_source_coords(path, [])
        assert read_source_coords(path, 0) == []

    def test_wrong_size_reports_expected_bytes(self, tmp_path):
        path = tmp_path / "src_coord.bin"
        np.zeros(25).tofile(path)
        with pytest.raises(FileFormatError, match="expected 24 bytes, found 200"):
            read_source_coords(path, 1)

    def test_receiver_roundtrip_and_truncation(self, tmp_path):
        path = tmp_path / "rcv_coord_0.bin"
        coords = random_coords(25)
        write_receiver_coords(path, coords)
        assert read_receiver_coords(path) == coords
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FileFormatError, match="not a multiple"):
            read_receiver_coords(path)


class TestWavelet:
    def test_bitwise_roundtrip(self, tmp_path):
        path = tmp_path / "source.bin"
        samples = RNG.standard_normal(500)
        write_wavelet(path, samples)
        assert np.array_equal(read_wavelet(path, 500), samples)

    def test_zero_samples(self, tmp_path):
        path = tmp_path / "source.bin"
        write_wavelet(path, [])
        assert read_wavelet(path, 0).size == 0

    def test_wrong_size_names_both_counts(self, tmp_path):
        path = tmp_path / "source.bin"
        write_wavelet(path, np.zeros(400))
        with pytest.raises(FileFormatError, match="expected 4000 bytes, found 3200"):
            read_wavelet(path, 500)


class TestSeismogram:
    def test_paper_shot_byte_count(self, tmp_path):
        # 25 traces x 500 samples of float64 = 12500 doubles = 100000 bytes
        seis = Seismogram(0, 1e-3, RNG.standard_normal((25, 500)))
        path = tmp_path / "dobs_0.bin"
        write_seismogram(path, seis)
        assert path.stat().st_size == 25 * 500 * 8 == 100_000

    def test_roundtrip_bitwise(self, tmp_path):
        path = tmp_path / "dobs_3.bin"
        data = RNG.standard_normal((7, 120))
        write_seismogram(path, Seismogram(3, 2e-3, data))
        back = read_seismogram(path, 120, shot_id=3, dt=2e-3)
        assert back.n_receivers == 7
        assert np.array_equal(back.data, data)

    def test_zero_traces(self, tmp_path):
        path = tmp_path / "dobs_0.bin"
        path.write_bytes(b"")
        seis = read_seismogram(path, 500)
        assert seis.data.shape == (0, 500)

    def test_indivisible_size_rejected(self, tmp_path):
        path = tmp_path / "dobs_0.bin"
        np.zeros(750).tofile(path)
        with pytest.raises(FileFormatError, match="not a multiple"):
            read_seismogram(path, 500)


class TestModelIO:
    def test_constant_roundtrip(self, tmp_path):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0, nb=25)
        path = tmp_path / "velocity_model.bin"
        write_model(path, Field3D(g, np.full(g.interior_shape, 2500.0)))
        assert path.stat().st_size == 25**3 * 8 == 125_000
        assert np.all(read_model(path, g).values == 2500.0)

    def test_layout_fixture_2x2x2(self, tmp_path):
        # offset(ix, iy, iz) = (ix*ny + iy)*nz + iz, z fastest
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        v = np.empty((2, 2, 2))
        for ix in range(2):
            for iy in range(2):
                for iz in range(2):
                    v[ix, iy, iz] = 100 * ix + 10 * iy + iz
        path = tmp_path / "v.bin"
        write_model(path, Field3D(g, v))
        flat = np.fromfile(path, dtype="<f8")
        assert list(flat) == [0, 1, 10, 11, 100, 101, 110, 111]

    def test_extended_field_writes_interior_only(self, tmp_path):
        g = Grid(4, 4, 4, 1.0, 1.0, 1.0, nb=2)
        inner = RNG.standard_normal(g.interior_shape)
        ext = np.pad(inner, 2, mode="edge")
        path = tmp_path / "v.bin"
        write_model(path, Field3D(g, ext))
        assert np.array_equal(read_model(path, g).values, inner)

    def test_size_mismatch_rejected(self, tmp_path):
        g = Grid(4, 4, 4, 1.0, 1.0, 1.0)
        path = tmp_path / "v.bin"
        np.zeros(63).tofile(path)
        with pytest.raises(FileFormatError, match="expected 512 bytes"):
            read_model(path, g)

    def test_non_finite_rejected(self, tmp_path):
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        path = tmp_path / "v.bin"
        np.full(8, np.inf).tofile(path)
        with pytest.raises(FileFormatError, match="non-finite"):
            read_model(path, g)


class TestRoundTripProperty:
    def test_random_payload_roundtrips(self, tmp_path):
        for trial in range(20):
            n = int(RNG.integers(1, 40))
            coords = random_coords(n)
            write_source_coords(tmp_path / "c.bin", coords)
            assert read_source_coords(tmp_path / "c.bin", n) == coords

            samples = RNG.standard_normal(int(RNG.integers(1, 200)))
            write_wavelet(tmp_path / "w.bin", samples)
            assert np.array_equal(read_wavelet(tmp_path / "w.bin", samples.size), samples)

            ns = int(RNG.integers(1, 60))
            data = RNG.standard_normal((int(RNG.integers(1, 12)), ns))
            write_seismogram(tmp_path / "s.bin", Seismogram(0, 1e-3, data))
            assert np.array_equal(read_seismogram(tmp_path / "s.bin", ns).data, data)
