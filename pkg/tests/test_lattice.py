import re

import numpy as np
import pytest

from ostbc_lab.codes import builtin_code_ids, encode, get_code
from ostbc_lab.lattice import (
    ChannelRealization,
    RealLattice,
    build_F,
    build_check_H,
    build_symbolic_lattice,
    complex_stack,
    deinterleave,
    evaluate_lattice,
    evaluate_lattice_batch,
    h_index,
    interleaving_perm,
    linform_value,
    verify_lattice,
    vectorize_received,
    write_hcheck_csv,
)

# Expected symbolic rows of the real lattice, frozen after hand-derivation.
# Tokens: 0, [-]h<i>, [-]r(h<i>), r(<signed h sum>); r scales by 1/sqrt(2).
GOLDEN_ROWS = {
    ("g2", 1): {
        0: "h1 -h2 h3 -h4",
        1: "h2 h1 h4 h3",
        2: "h3 h4 -h1 -h2",
        3: "h4 -h3 -h2 h1",
    },
    ("g3", 2): {
        0: "h1 -h2 h3 -h4 h5 -h6 0 0",
        1: "h2 h1 h4 h3 h6 h5 0 0",
        16: "h7 -h8 h9 -h10 h11 -h12 0 0",
        17: "h8 h7 h10 h9 h12 h11 0 0",
        30: "0 0 h11 h12 -h9 -h10 -h7 -h8",
        31: "0 0 h12 -h11 -h10 h9 -h8 h7",
    },
    ("g4", 1): {
        0: "h1 -h2 h3 -h4 h5 -h6 h7 -h8",
        1: "h2 h1 h4 h3 h6 h5 h8 h7",
        2: "h3 -h4 -h1 h2 h7 -h8 -h5 h6",
        3: "h4 h3 -h2 -h1 h8 h7 -h6 -h5",
        12: "h5 h6 -h7 -h8 -h1 -h2 h3 h4",
        13: "h6 -h5 -h8 h7 -h2 h1 h4 -h3",
        14: "h7 h8 h5 h6 -h3 -h4 -h1 -h2",
        15: "h8 -h7 h6 -h5 -h4 h3 -h2 h1",
    },
    ("h3", 1): {
        0: "h1 -h2 h3 -h4 r(h5) -r(h6)",
        1: "h2 h1 h4 h3 r(h6) r(h5)",
        2: "h3 h4 -h1 -h2 r(h5) -r(h6)",
        3: "h4 -h3 -h2 h1 r(h6) r(h5)",
        4: "-h5 0 0 -h6 r(h1+h3) r(h2+h4)",
        5: "-h6 0 0 h5 r(h2+h4) -r(h1+h3)",
        6: "0 -h6 h5 0 r(h1-h3) r(h2-h4)",
        7: "0 h5 h6 0 r(h2-h4) r(-h1+h3)",
    },
}


def parse_token(token):
    """One golden-row token -> LinForm tuple of (h index, tag)."""
    if token == "0":
        return ()
    outer = 1
    if token.startswith("-"):
        outer, token = -1, token[1:]
    if token.startswith("r(") and token.endswith(")"):
        terms = []
        for sign, num in re.findall(r"([+-]?)h(\d+)", token[2:-1]):
            s = -1 if sign == "-" else 1
            terms.append((int(num) - 1, 2 * s * outer))
        return tuple(sorted(terms))
    num = int(re.fullmatch(r"h(\d+)", token).group(1))
    return ((num - 1, outer),)


def sample_channel_matrix(rng, n, m):
    return (rng.standard_normal((n, m))
            + 1j * rng.standard_normal((n, m))) / np.sqrt(2.0)


def test_h_vector_indexing():
    rng = np.random.default_rng(0)
    H = sample_channel_matrix(rng, 3, 2)
    ch = ChannelRealization.from_matrix(H)
    for j in range(2):
        for l in range(3):
            assert ch.h[h_index(l, j, False, 3)] == H[l, j].real
            assert ch.h[h_index(l, j, True, 3)] == H[l, j].imag
    assert np.sum(ch.h ** 2) == pytest.approx(np.sum(np.abs(H) ** 2))


def test_from_h_round_trip():
    rng = np.random.default_rng(1)
    h = rng.standard_normal(12)
    ch = ChannelRealization.from_h(h, 3, 2)
    np.testing.assert_array_equal(ChannelRealization.from_matrix(ch.matrix).h, h)


def test_interleaving_perm():
    np.testing.assert_array_equal(interleaving_perm(3), [0, 3, 1, 4, 2, 5])


def test_vectorize_received_example():
    y = np.array([[1 + 2j], [3 + 4j]])
    np.testing.assert_array_equal(vectorize_received(y), [1, 2, 3, 4])
    np.testing.assert_array_equal(vectorize_received(np.zeros((2, 1))), np.zeros(4))


def test_vectorize_round_trip():
    rng = np.random.default_rng(2)
    y = sample_channel_matrix(rng, 4, 3)  # any T x M block
    back = deinterleave(vectorize_received(y)).reshape(4, 3, order="F")
    np.testing.assert_array_equal(back, y)


def test_complex_stack_layout():
    y = np.array([[1 + 2j], [3 + 4j]])
    st = complex_stack(y)
    np.testing.assert_array_equal(st.z, [1 + 2j, 3 + 4j])
    np.testing.assert_array_equal(st.zprime, [1, 3, 2, 4])


@pytest.mark.parametrize("key", GOLDEN_ROWS)
def test_symbolic_rows_match_goldens(key):
    cid, m = key
    sym = build_symbolic_lattice(get_code(cid), m)
    for r, row_text in GOLDEN_ROWS[key].items():
        want = tuple(parse_token(tok) for tok in row_text.split())
        assert sym.entries[r] == want, f"{cid} row {r}"


@pytest.mark.parametrize("key", GOLDEN_ROWS)
def test_numeric_rows_match_goldens(key):
    cid, m = key
    code = get_code(cid)
    sym = build_symbolic_lattice(code, m)
    rng = np.random.default_rng(5)
    for _ in range(100):
        ch = ChannelRealization.from_matrix(sample_channel_matrix(rng, code.n, m))
        hc = evaluate_lattice(sym, ch.h)
        for r, row_text in GOLDEN_ROWS[key].items():
            want = [linform_value(parse_token(tok), ch.h)
                    for tok in row_text.split()]
            np.testing.assert_array_equal(hc[r], want)


def test_build_F_alamouti_column():
    fa, fb = build_F(get_code("g2"), np.array([[1.0 + 0j], [0.0]]))
    np.testing.assert_array_equal(fa[:, 0], [1, 0])


def test_build_F_zero_channel():
    fa, fb = build_F(get_code("g2"), np.zeros((2, 1), dtype=complex))
    assert not fa.any() and not fb.any()


@pytest.mark.parametrize("cid", builtin_code_ids())
@pytest.mark.parametrize("m", [1, 2])
def test_build_F_consistency_with_encoder(cid, m):
    code = get_code(cid)
    rng = np.random.default_rng(7)
    for _ in range(100):
        H = sample_channel_matrix(rng, code.n, m)
        s = rng.standard_normal(code.k) + 1j * rng.standard_normal(code.k)
        fa, fb = build_F(code, H)
        z = fa @ s.real + fb @ s.imag
        want = (encode(code, s) @ H).ravel(order="F")
        scale = max(np.max(np.abs(want)), 1e-30)
        assert np.max(np.abs(z - want)) <= 1e-12 * scale


@pytest.mark.parametrize("cid", builtin_code_ids())
@pytest.mark.parametrize("m", [1, 2])
def test_orthogonality_and_sigma(cid, m):
    code = get_code(cid)
    rng = np.random.default_rng(9)
    for _ in range(100):
        ch = ChannelRealization.from_matrix(sample_channel_matrix(rng, code.n, m))
        lat = build_check_H(code, ch)
        gram = lat.hcheck.T @ lat.hcheck
        dev = gram - lat.sigma * np.eye(2 * code.k)
        assert np.max(np.abs(dev)) <= 1e-9 * lat.sigma
        assert lat.sigma == pytest.approx(
            code.c * np.sum(np.abs(ch.matrix) ** 2), rel=1e-9)
        rep = verify_lattice(lat)
        assert rep.passed and not rep.degenerate


@pytest.mark.parametrize("cid", builtin_code_ids())
def test_model_consistency(cid):
    code = get_code(cid)
    rng = np.random.default_rng(13)
    for m in (1, 2):
        for _ in range(100):
            H = sample_channel_matrix(rng, code.n, m)
            s = rng.standard_normal(code.k) + 1j * rng.standard_normal(code.k)
            lat = build_check_H(code, H)
            x = np.empty(2 * code.k)
            x[0::2], x[1::2] = s.real, s.imag
            want = vectorize_received(encode(code, s) @ H)
            got = lat.hcheck @ x
            scale = max(np.max(np.abs(want)), 1e-30)
            assert np.max(np.abs(got - want)) <= 1e-12 * scale


def test_verify_flags_corruption():
    lat = build_check_H(get_code("g2"), np.array([[1.0 + 0.5j], [-0.25 + 1j]]))
    bad = lat.hcheck.copy()
    bad[0, 1] += 1.0
    rep = verify_lattice(RealLattice(code_id="g2", m=1, hcheck=bad,
                                     sigma=lat.sigma, c=1))
    assert not rep.passed
    assert rep.max_offdiag_rel > rep.tol


def test_verify_degenerate_channel():
    lat = build_check_H(get_code("g2"), np.zeros((2, 1), dtype=complex))
    rep = verify_lattice(lat)
    assert rep.degenerate and not rep.passed
    assert rep.sigma == 0.0


def test_wrong_channel_rows_rejected():
    with pytest.raises(ValueError):
        build_check_H(get_code("g2"), np.zeros((3, 1), dtype=complex))


def test_batch_evaluation_matches_single():
    code = get_code("g3")
    sym = build_symbolic_lattice(code, 2)
    rng = np.random.default_rng(17)
    hb = rng.standard_normal((8, 12))
    batch = evaluate_lattice_batch(sym, hb)
    for i in range(8):
        np.testing.assert_array_equal(batch[i], evaluate_lattice(sym, hb[i]))


def test_hcheck_csv_round_trip(tmp_path):
    lat = build_check_H(get_code("h3"), np.array(
        [[0.3 - 0.2j], [1.1 + 0.7j], [-0.4 + 0.9j]]))
    path = tmp_path / "hc.csv"
    write_hcheck_csv(lat, path)
    parsed = np.array([[float(v) for v in line.split(",")]
                       for line in path.read_text().splitlines()
                       if not line.startswith("#")])
    np.testing.assert_array_equal(parsed, lat.hcheck)
