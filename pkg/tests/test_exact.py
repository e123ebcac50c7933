import itertools
import math

import numpy as np
import pytest

from multiorder.errors import CapacityError
from multiorder.exact import (
    all_pair_interactions,
    delta_v_pair,
    efficiency_decomposition,
    interaction_exact,
    interaction_matrix,
    interactions_for_pair,
    shapley_interaction_index,
    shapley_value_exact,
    shapley_values,
    theorem2_rhs,
)
from multiorder.games import (
    AdditiveGame,
    Coalition,
    PairwiseAndGame,
    ParityGame,
    TableGame,
    delta_v,
)
from multiorder.theory import efficiency_weight


def brute_interaction(game, i, j, m):
    """Independent oracle: average the raw increment over itertools contexts."""
    rest = [k for k in range(game.n) if k not in (i, j)]
    total = 0.0
    count = 0
    for combo in itertools.combinations(rest, m):
        total += delta_v(game, i, j, Coalition.from_iterable(game.n, combo))
        count += 1
    return total / count


def test_interaction_exact_additive_zero():
    game = AdditiveGame(np.arange(1.0, 7.0))
    for m in range(5):
        assert interaction_exact(game, 1, 4, m) == pytest.approx(0.0, abs=1e-12)


def test_interaction_exact_and_game_one():
    game = PairwiseAndGame(7, 2, 5)
    for m in range(6):
        assert interaction_exact(game, 2, 5, m) == 1.0


def test_interaction_exact_parity_alternates():
    game = ParityGame(6)
    for m in range(5):
        expected = 2.0 if m % 2 == 1 else -2.0
        assert interaction_exact(game, 0, 3, m) == expected
        assert brute_interaction(game, 0, 3, m) == expected


def test_interaction_exact_matches_brute_force_on_random_game():
    rng = np.random.default_rng(10)
    game = TableGame.random(7, rng)
    for m in range(6):
        assert interaction_exact(game, 1, 4, m) == pytest.approx(
            brute_interaction(game, 1, 4, m), rel=1e-12, abs=1e-12
        )


def test_interaction_exact_order_out_of_range():
    with pytest.raises(ValueError):
        interaction_exact(ParityGame(5), 0, 1, 4)


def test_all_pair_interactions_capacity():
    class Big(ParityGame):
        pass

    with pytest.raises(CapacityError):
        all_pair_interactions(Big(17))


def test_interaction_matrix_symmetric():
    rng = np.random.default_rng(11)
    mat = interaction_matrix(TableGame.random(6, rng), m=2)
    off = ~np.eye(6, dtype=bool)
    assert np.array_equal(mat.values[off], mat.values.T[off])
    assert np.isnan(np.diag(mat.values)).all()


def test_shapley_additive_recovers_coefficients():
    coeffs = np.array([0.3, -1.2, 2.5, 0.0, 4.0])
    game = AdditiveGame(coeffs)
    assert np.allclose(shapley_values(game), coeffs, atol=1e-12)


def test_shapley_and_game_hand_enumeration():
    # n=3, v = 1[{0,1} in S]. Orderings where each player completes the pair:
    # phi_0 = phi_1 = 1/2, phi_2 = 0.
    game = PairwiseAndGame(3, 0, 1)
    phi = shapley_values(game)
    assert phi == pytest.approx([0.5, 0.5, 0.0], abs=1e-12)


def test_shapley_efficiency_on_random_games():
    rng = np.random.default_rng(12)
    for _ in range(10):
        n = int(rng.integers(3, 9))
        game = TableGame.random(n, rng)
        total = shapley_values(game).sum()
        v_full = game.table[-1]
        v_empty = game.table[0]
        assert total == pytest.approx(v_full - v_empty, rel=1e-9, abs=1e-9)


def test_shapley_capacity_guard():
    with pytest.raises(CapacityError):
        shapley_value_exact(ParityGame(21), 0)


def test_shapley_interaction_index_values():
    assert shapley_interaction_index(AdditiveGame(np.ones(5)), 0, 1) == pytest.approx(0.0, abs=1e-12)
    assert shapley_interaction_index(PairwiseAndGame(3, 1, 2), 1, 2) == pytest.approx(1.0)
    assert shapley_interaction_index(ParityGame(6), 0, 1) == pytest.approx(-0.4)


def test_shapley_interaction_index_is_mean_of_orders():
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = int(rng.integers(3, 9))
        game = TableGame.random(n, rng)
        i, j = rng.choice(n, size=2, replace=False)
        by_orders = sum(interaction_exact(game, int(i), int(j), m) for m in range(n - 1))
        assert shapley_interaction_index(game, int(i), int(j)) == pytest.approx(
            by_orders / (n - 1), rel=1e-9, abs=1e-12
        )


def test_efficiency_weight_values():
    assert efficiency_weight(2, 0) == 0.5
    assert efficiency_weight(10, 0) == pytest.approx(0.1)
    assert efficiency_weight(10, 8) == pytest.approx(1.0 / 90.0)
    with pytest.raises(ValueError):
        efficiency_weight(10, 9)
    with pytest.raises(ValueError):
        efficiency_weight(10, -1)


def test_efficiency_decomposition_n2_identity():
    rng = np.random.default_rng(14)
    game = TableGame(rng.normal(size=4))
    d = efficiency_decomposition(game)
    assert d.reconstruction == pytest.approx(d.v_full, rel=1e-12, abs=1e-12)
    # ordered-pair convention: I(0) counted once per direction, weight 1/2 each
    i0 = game.table[3] - game.table[1] - game.table[2] + game.table[0]
    assert d.order_sums[0] == pytest.approx(2 * i0, abs=1e-12)


def test_efficiency_decomposition_and_game_brute_force():
    d = efficiency_decomposition(PairwiseAndGame(3, 0, 1))
    assert d.v_empty == 0.0
    assert np.allclose(d.mu, 0.0)
    # 2 ordered pairs x (w0*1 + w1*1) = 2 * (1/3 + 1/6) = 1
    assert d.reconstruction == pytest.approx(1.0, abs=1e-12)
    assert d.v_full == 1.0


def test_efficiency_decomposition_random_games():
    rng = np.random.default_rng(15)
    for n in range(3, 9):
        for _ in range(5):
            game = TableGame.random(n, rng)
            d = efficiency_decomposition(game)
            tol = 1e-9 * max(1.0, abs(d.v_full))
            assert abs(d.reconstruction - d.v_full) <= tol


def test_linearity_of_interactions():
    rng = np.random.default_rng(16)
    for n in (4, 6, 8):
        u = TableGame.random(n, rng)
        v = TableGame.random(n, rng)
        w = TableGame(u.table + v.table)
        iu = all_pair_interactions(u)
        iv = all_pair_interactions(v)
        iw = all_pair_interactions(w)
        off = ~np.isnan(iw)
        assert np.allclose(iw[off], (iu + iv)[off], atol=1e-12)


def test_nullity_dummy_variable():
    # v(S) = u(S minus d) + c*[d in S], u(empty) = 0: d is a dummy.
    rng = np.random.default_rng(17)
    n, d, c = 6, 2, 1.7
    sub = rng.normal(size=1 << (n - 1))
    sub[0] = 0.0
    others = [k for k in range(n) if k != d]

    def compress(bits):
        return sum(((bits >> o) & 1) << t for t, o in enumerate(others))

    table = np.array([sub[compress(b)] + c * ((b >> d) & 1) for b in range(1 << n)])
    game = TableGame(table)
    for j in range(n):
        if j == d:
            continue
        for m in range(n - 1):
            assert interaction_exact(game, d, j, m) == pytest.approx(0.0, abs=1e-12)
    # the defining identity itself
    for bits in range(1 << n):
        if (bits >> d) & 1:
            continue
        s = Coalition(bits, n)
        assert game.value(s.add(d)) == pytest.approx(
            game.value(s) + game.value(Coalition.of(n, d)), abs=1e-12
        )


def test_commutativity_of_interactions():
    rng = np.random.default_rng(18)
    game = TableGame.random(7, rng)
    for m in range(6):
        assert interaction_exact(game, 2, 5, m) == interaction_exact(game, 5, 2, m)


def test_symmetry_of_equivalent_variables():
    # i and j play identical roles: v depends only on |S & {i,j}| and the rest.
    rng = np.random.default_rng(19)
    n, i, j = 6, 1, 4
    others = [k for k in range(n) if k not in (i, j)]
    h = rng.normal(size=(3, 1 << (n - 2)))

    def value(bits):
        cnt = ((bits >> i) & 1) + ((bits >> j) & 1)
        rest = sum(((bits >> o) & 1) << t for t, o in enumerate(others))
        return h[cnt, rest]

    game = TableGame(np.array([value(b) for b in range(1 << n)]))
    for k in others:
        vec_i = interactions_for_pair(game, i, k)
        vec_j = interactions_for_pair(game, j, k)
        assert np.allclose(vec_i, vec_j, atol=1e-12)


def test_delta_v_pair_constant_game():
    game = AdditiveGame(np.zeros(6), base=3.0)
    s2 = Coalition.full(6)
    s1 = Coalition.of(6, 0, 1, 2)
    assert delta_v_pair(game, s1, s2, 0.5, 1.0) == pytest.approx(-3.0)


def test_delta_v_pair_validations():
    game = AdditiveGame(np.ones(6))
    with pytest.raises(ValueError):
        delta_v_pair(game, Coalition.of(6, 0, 5), Coalition.of(6, 0, 1, 2), 2 / 6, 0.5)
    with pytest.raises(ValueError):  # sizes disagree with the ratios
        delta_v_pair(game, Coalition.of(6, 0), Coalition.of(6, 0, 1, 2), 0.5, 1.0)
    with pytest.raises(ValueError):  # equal subsets are not nested properly
        delta_v_pair(game, Coalition.of(6, 0, 1), Coalition.of(6, 0, 1), 2 / 6, 2 / 6)


def test_delta_v_pair_empty_s1():
    rng = np.random.default_rng(20)
    game = TableGame.random(6, rng)
    s2 = Coalition.of(6, 1, 3, 5)
    got = delta_v_pair(game, Coalition.empty(6), s2, 0.0, 0.5)
    assert got == pytest.approx(game.table[s2.bits] - game.table[0], rel=1e-12)


def test_delta_v_pair_additive_expectation():
    # Under uniform nested draws the single-variable terms cancel, leaving
    # (1 - r2/r1) * base for any additive game.
    rng = np.random.default_rng(21)
    n, r1, r2 = 8, 0.25, 0.75
    game = AdditiveGame(rng.normal(size=n), base=2.0)
    s1_size, s2_size = 2, 6
    draws = 20000
    keys = rng.random((draws, n))
    order = np.argsort(keys, axis=1)
    total = 0.0
    for row in order:
        bits2 = 0
        for t in range(s2_size):
            bits2 |= 1 << int(row[t])
        bits1 = 0
        for t in range(s1_size):
            bits1 |= 1 << int(row[t])
        total += delta_v_pair(game, Coalition(bits1, n), Coalition(bits2, n), r1, r2)
    mean = total / draws
    # zero-variance in expectation is not exact per draw; allow MC noise
    assert mean == pytest.approx((1 - r2 / r1) * 2.0, abs=0.1)


def test_theorem2_rhs_additive():
    game = AdditiveGame(np.arange(6, dtype=float), base=1.5)
    assert theorem2_rhs(game, 0.5, 1.0) == pytest.approx((1 - 2.0) * 1.5, abs=1e-12)


def test_theorem2_rhs_and_game_hypergeometric():
    # P(uniform size-s subset contains a fixed pair) = s(s-1)/(n(n-1)).
    n, r1, r2 = 10, 0.2, 0.5
    game = PairwiseAndGame(n, 0, 1)
    s1, s2 = 2, 5
    expected = s2 * (s2 - 1) / (n * (n - 1)) - (r2 / r1) * s1 * (s1 - 1) / (n * (n - 1))
    assert theorem2_rhs(game, r1, r2) == pytest.approx(expected, rel=1e-12)


def _mc_nested_mean(game, r1, r2, draws, rng):
    n = game.n
    s1 = round(r1 * n)
    s2 = round(r2 * n)
    keys = rng.random((draws, n))
    order = np.argsort(keys, axis=1)
    bits2 = np.zeros(draws, dtype=np.int64)
    bits1 = np.zeros(draws, dtype=np.int64)
    for t in range(s2):
        bits2 |= np.int64(1) << order[:, t].astype(np.int64)
        if t < s1:
            bits1 |= np.int64(1) << order[:, t].astype(np.int64)
    v2 = game.values_for_masks(bits2)
    if s1 == 0:
        dv = v2 - game.table[0]
    else:
        dv = v2 - (r2 / r1) * game.values_for_masks(bits1)
    return float(dv.mean()), float(dv.std(ddof=1) / math.sqrt(draws))


@pytest.mark.parametrize("ratios", [(0.25, 0.5), (0.25, 0.75), (0.0, 0.5)])
def test_theorem2_rhs_matches_monte_carlo(ratios):
    rng = np.random.default_rng(22)
    game = TableGame.random(8, rng)
    r1, r2 = ratios
    mean, se = _mc_nested_mean(game, r1, r2, 30000, rng)
    assert abs(mean - theorem2_rhs(game, r1, r2)) <= 3 * se


def test_theorem2_rhs_requires_integral_sizes():
    game = ParityGame(7)
    with pytest.raises(ValueError):
        theorem2_rhs(game, 0.25, 0.5)  # 0.25*7 is not integral
