import json
import logging

import mpmath
import pytest
from hypothesis import given, strategies as st

from hml import cache
from hml.modforms import hecke_eigenforms
from hml.numeric import Precision
from hml.petersson import solve_harmonic_weights

PREC = Precision(128)


@pytest.fixture(autouse=True)
def fresh_memo():
    cache._get.cache_clear()
    yield
    cache._get.cache_clear()


def test_hex_round_trip_examples():
    with mpmath.workprec(200):
        for v in (mpmath.mpf(0), mpmath.mpf(1) / 3, -mpmath.pi, mpmath.mpf(2) ** -300):
            assert cache.hex_to_mpf(cache.mpf_to_hex(v)) == v
    assert cache.hex_to_mpf(cache.mpf_to_hex(12345678901234567890123)) == 12345678901234567890123
    with pytest.raises(cache.CacheCorrupt):
        cache.hex_to_mpf("1.5")


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_hex_round_trip_floats(v):
    assert float(cache.hex_to_mpf(cache.mpf_to_hex(v))) == v


def test_round_trip_matches_fresh_build(tmp_path):
    got = cache.cache_get_or_build(24, 60, PREC, tmp_path)
    cache._get.cache_clear()
    reloaded = cache.cache_get_or_build(24, 60, PREC, tmp_path)
    fresh = solve_harmonic_weights(24, hecke_eigenforms(24, 60, PREC), prec=PREC)
    for a, b, c in zip(got.forms, reloaded.forms, fresh.forms):
        assert a.lam == b.lam == c.lam
    assert got.weights == reloaded.weights == fresh.weights


def test_second_call_reads_cache(tmp_path, monkeypatch):
    cache.cache_get_or_build(12, 40, PREC, tmp_path)
    cache._get.cache_clear()

    def boom(*a, **kw):
        raise AssertionError("rebuilt")

    monkeypatch.setattr(cache, "hecke_eigenforms", boom)
    basis = cache.cache_get_or_build(12, 30, PREC, tmp_path)
    assert len(basis.forms[0].lam) == 30
    assert basis.forms[0].a[1] == -24


def test_corrupt_entry_rebuilds(tmp_path, caplog):
    cache.cache_get_or_build(12, 20, PREC, tmp_path)
    cache._get.cache_clear()
    path = cache.cache_path(tmp_path, 12)
    payload = json.loads(path.read_text())
    payload["forms"][0]["lambda_hex"][1] = cache.mpf_to_hex(mpmath.mpf(5))
    path.write_text(json.dumps(payload))
    with caplog.at_level(logging.WARNING, logger="hml.cache"):
        basis = cache.cache_get_or_build(12, 20, PREC, tmp_path)
    assert "unusable" in caplog.text
    assert basis.forms[0].a[1] == -24
    assert cache.load_entry(path) is not None


def test_truncated_file_rebuilds(tmp_path):
    path = cache.cache_path(tmp_path, 12)
    cache.cache_get_or_build(12, 20, PREC, tmp_path)
    cache._get.cache_clear()
    path.write_text(path.read_text()[:50])
    assert cache.cache_get_or_build(12, 20, PREC, tmp_path).forms[0].a[2] == 252


def test_larger_request_rebuilds(tmp_path):
    cache.cache_get_or_build(16, 20, PREC, tmp_path)
    cache._get.cache_clear()
    basis = cache.cache_get_or_build(16, 50, PREC, tmp_path)
    assert len(basis.forms[0].lam) == 50
    assert cache.load_entry(cache.cache_path(tmp_path, 16))["n_max"] == 50


def test_lower_precision_load_rounds(tmp_path):
    hi = cache.cache_get_or_build(24, 30, Precision(192), tmp_path)
    lo = cache.cache_get_or_build(24, 30, Precision(96), tmp_path)
    with mpmath.workprec(96):
        for a, b in zip(hi.forms, lo.forms):
            assert all(+x == y for x, y in zip(a.lam, b.lam))


def test_default_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("HML_CACHE_DIR", str(tmp_path))
    assert cache.default_cache_dir() == tmp_path
