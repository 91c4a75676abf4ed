import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ngafft.fft import (
    FORWARD,
    INVERSE,
    CArray,
    dft_direct,
    execute,
    factorize,
    fft,
    fft2,
    ifft,
    plan_fft,
)
from ngafft.formats import ALL_FORMATS, FLOAT16, FLOAT32, FLOAT64, POSIT8, POSIT16, TAKUM8, ops
from ngafft.reference import cos_sin_2pi, ref, ref_from_float

TIGHT = gmpy2.mpfr("1e-30")


def _ref_vector(n, seed, batch=()):
    rng = np.random.default_rng(seed)
    return CArray(ref_from_float(rng.standard_normal(batch + (n,))),
                  ref_from_float(rng.standard_normal(batch + (n,))))


def _norm2(c: CArray):
    return sum(x * x for x in c.re.ravel()) + sum(x * x for x in c.im.ravel())


def _rel(a: CArray, b: CArray):
    d = CArray(a.re - b.re, a.im - b.im)
    return gmpy2.sqrt(_norm2(d) / _norm2(b))


def test_factorization_and_strategies():
    assert factorize(1020) == [2, 2, 3, 5, 17]
    assert plan_fft(4096).strategy == (2,) * 12
    assert plan_fft(1020).strategy == (2, 2, 3, 5, 17)
    assert plan_fft(678).strategy == (2, 3, ("bluestein", 113, 256))
    assert plan_fft(31).strategy == (31,)
    assert plan_fft(37).strategy == (("bluestein", 37, 128),)


def test_rejects_bad_lengths():
    with pytest.raises(ValueError):
        plan_fft(0)
    with pytest.raises(ValueError):
        execute(plan_fft(8), _ref_vector(6, 0))


def test_plans_are_cached_and_deterministic():
    assert plan_fft(60, FORWARD, POSIT16) is plan_fft(60, FORWARD, POSIT16)
    x = ops.from_float(POSIT16, np.random.default_rng(0).standard_normal(60))
    a = fft(CArray(x, np.zeros_like(x)), POSIT16)
    plan_fft.cache_clear()
    b = fft(CArray(x, np.zeros_like(x)), POSIT16)
    np.testing.assert_array_equal(a.re, b.re)
    np.testing.assert_array_equal(a.im, b.im)


def test_twiddles_rounded_once():
    for fmt in (FLOAT16, POSIT8, TAKUM8):
        for n in (12, 113):
            tw = plan_fft(n, FORWARD, fmt).twiddles
            for k in range(n):
                c, s = cos_sin_2pi(-k, n)
                assert tw.re[k] == ops.from_ref(fmt, [c])[0]
                assert tw.im[k] == ops.from_ref(fmt, [s])[0]


@pytest.mark.parametrize("fmt", [None, FLOAT16, POSIT8])
def test_delta_and_constant(fmt):
    from ngafft.arith import arith_for

    A = arith_for(fmt)
    one, zero = A.from_ref([ref(1)])[0], A.zeros(())
    delta = CArray(A.from_ref([ref(1), 0, 0, 0]), A.zeros(4))
    out = fft(delta, fmt)
    assert all(v == one for v in out.re) and all(v == zero for v in out.im)
    const = CArray(A.from_ref([ref(1)] * 4), A.zeros(4))
    out = fft(const, fmt)
    assert out.re[0] == A.from_ref([ref(4)])[0]
    assert all(v == zero for v in out.re[1:]) and all(v == zero for v in out.im)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12, 31, 37, 60, 64, 113, 128])
def test_matches_direct_dft(n):
    x = _ref_vector(n, n, batch=(2,))
    assert _rel(fft(x), dft_direct(x)) < TIGHT
    assert _rel(ifft(x), dft_direct(x, INVERSE)) < TIGHT


@pytest.mark.parametrize("n", [8, 60, 113, 678, 4096])
def test_parseval_and_round_trip(n):
    x = _ref_vector(n, 100 + n)
    X = fft(x)
    assert abs(_norm2(x) - _norm2(X) / n) / _norm2(x) < TIGHT
    assert _rel(ifft(X), x) < TIGHT


def test_linearity():
    x, y = _ref_vector(60, 1), _ref_vector(60, 2)
    a, b = ref("0.75"), ref(-3)
    combo = CArray(a * x.re + b * y.re, a * x.im + b * y.im)
    X, Y = fft(x), fft(y)
    assert _rel(fft(combo), CArray(a * X.re + b * Y.re, a * X.im + b * Y.im)) < TIGHT


@pytest.mark.parametrize("fmt", ALL_FORMATS, ids=str)
def test_zeros_stay_zero(fmt):
    z = np.zeros((3, 60), dtype=np.uint64)
    for op in (fft, ifft):
        out = op(CArray(z, z), fmt)
        assert not out.re.any() and not out.im.any()


def test_non_finite_inputs_propagate():
    x = ops.from_float(FLOAT16, np.array([1.0, np.inf, 0.0, 2.0]))
    out = fft(CArray(x, np.zeros_like(x)), FLOAT16)
    assert not ops.isfinite(FLOAT16, out.re).all()


def test_bluestein_agrees_with_direct_in_float32():
    rng = np.random.default_rng(3)
    xr, xi = rng.standard_normal(113), rng.standard_normal(113)
    got = fft(CArray(ops.from_float(FLOAT32, xr), ops.from_float(FLOAT32, xi)), FLOAT32)
    got = ops.to_float(FLOAT32, got.re) + 1j * ops.to_float(FLOAT32, got.im)
    # direct O(n^2) DFT, every operation rounded to float32
    xr32, xi32 = xr.astype(np.float32), xi.astype(np.float32)
    k = np.arange(113)
    ang = np.array([[cos_sin_2pi(-(j * kk) % 113, 113) for j in k] for kk in k], dtype=object)
    c = np.vectorize(float)(ang[..., 0]).astype(np.float32)
    s = np.vectorize(float)(ang[..., 1]).astype(np.float32)
    direct = np.empty(113, dtype=complex)
    for kk in k:
        acc_r = acc_i = np.float32(0)
        for j in k:
            acc_r = np.float32(acc_r + np.float32(np.float32(xr32[j] * c[kk, j]) - np.float32(xi32[j] * s[kk, j])))
            acc_i = np.float32(acc_i + np.float32(np.float32(xr32[j] * s[kk, j]) + np.float32(xi32[j] * c[kk, j])))
        direct[kk] = complex(acc_r, acc_i)
    assert np.linalg.norm(got - direct) / np.linalg.norm(direct) < 1e-4


def test_float64_matches_numpy():
    rng = np.random.default_rng(4)
    for n in (60, 113, 678, 1020):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        out = fft(CArray(ops.from_float(FLOAT64, x.real), ops.from_float(FLOAT64, x.imag)), FLOAT64)
        got = ops.to_float(FLOAT64, out.re) + 1j * ops.to_float(FLOAT64, out.im)
        assert np.linalg.norm(got - np.fft.fft(x)) / np.linalg.norm(np.fft.fft(x)) < 1e-14


def test_fft2_examples():
    one = CArray(np.array([[ref(3)]], dtype=object), np.array([[ref(0)]], dtype=object))
    assert fft2(one).re[0, 0] == 3
    u, v = _ref_vector(8, 5), _ref_vector(8, 6)
    outer = CArray(np.outer(u.re, v.re) - np.outer(u.im, v.im), np.outer(u.re, v.im) + np.outer(u.im, v.re))
    U, V = fft(u), fft(v)
    want = CArray(np.outer(U.re, V.re) - np.outer(U.im, V.im), np.outer(U.re, V.im) + np.outer(U.im, V.re))
    assert _rel(fft2(outer), want) < TIGHT
    img = _ref_vector(12, 7, batch=(9,))
    assert _rel(fft2(fft2(img), INVERSE), img) < TIGHT
    with pytest.raises(ValueError):
        fft2(CArray(np.zeros((0, 3)), np.zeros((0, 3))))


def test_fft2_inverse_scales_per_axis_in_format():
    # the inverse applies round(1/rows) and round(1/cols) separately
    x = ops.from_float(POSIT8, np.ones((3, 5)))
    z = np.zeros_like(x)
    X = fft2(CArray(x, z), FORWARD, POSIT8)
    assert ops.to_float(POSIT8, X.re)[0, 0] == 15
    back = fft2(X, INVERSE, POSIT8)
    assert ops.isfinite(POSIT8, back.re).all()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 300))
def test_any_length_round_trips_at_reference(n):
    x = _ref_vector(n, n)
    assert _rel(ifft(fft(x)), x) < TIGHT
