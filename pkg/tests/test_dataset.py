import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaffect.dataset import (AdRecord, FeatureTable, ParseError, RatingsTable, ValidationError,
                              load_ads, load_features, load_ratings, quadrant_summary, save_ads,
                              save_features, save_ratings)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_ratings_5x100(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["ad_id,rater_id,A,V,E"]
    for j in range(100):
        for i in range(5):
            lines.append(f"ad{j},r{i},{rng.integers(0, 5)},{rng.integers(-2, 3)},{rng.integers(0, 5)}")
    t = load_ratings(write(tmp_path, "r.csv", "\n".join(lines)))
    assert len(t.raters) == 5 and len(t.ads) == 100
    assert t.ads[:3] == ("ad0", "ad1", "ad2")
    assert t["A"].shape == (5, 100)


def test_empty_ads_is_an_error(tmp_path):
    with pytest.raises(ValidationError, match="no ads"):
        load_ratings(write(tmp_path, "r.csv", "ad_id,rater_id,A,V,E\n"))
    with pytest.raises(ValidationError, match="no ads"):
        RatingsTable(["r0"], [], {"A": np.zeros((1, 0))})


def test_out_of_scale_names_rater_ad_dim(tmp_path):
    p = write(tmp_path, "r.csv", "ad_id,rater_id,A\nx,r1,2\ny,r2,7\n")
    with pytest.raises(ValidationError) as info:
        load_ratings(p)
    err = info.value
    assert (err.rater, err.ad, err.dim) == ("r2", "y", "A")


def test_non_integer_step_rejected():
    with pytest.raises(ValidationError):
        RatingsTable(["r"], ["a"], {"V": np.array([[0.5]])})


def test_malformed_row_reports_line(tmp_path):
    p = write(tmp_path, "r.csv", "ad_id,rater_id,A\nx,r1,2\nx,r2\n")
    with pytest.raises(ParseError) as info:
        load_ratings(p)
    assert info.value.line == 3


def test_missing_cells_are_nan(tmp_path):
    t = load_ratings(write(tmp_path, "r.csv", "ad_id,rater_id,A,V\nx,r1,2,\nx,r2,,1\n"))
    assert math.isnan(t["V"][0, 0]) and math.isnan(t["A"][1, 0])


def test_scale_comment_and_schema(tmp_path):
    p = write(tmp_path, "r.csv", "# scales: Q=1:7\nad_id,rater_id,Q\nx,r1,7\n")
    assert load_ratings(p).scales["Q"] == (1, 7)
    with pytest.raises(ValidationError):
        load_ratings(p, schema={"Q": (1, 5)})


def test_feature_table_examples(tmp_path):
    t = load_features(write(tmp_path, "f.csv", "ad_id,frame_index,task_id,label,f0\na,0,0,H,1.5\n"))
    assert len(t) == 1 and t.d == 1 and t.y[0] == 1
    with pytest.raises(ValidationError):
        load_features(write(tmp_path, "g.csv", "ad_id,frame_index,task_id,label,f0\na,0,0,L,NaN\n"))
    with pytest.raises(ParseError) as info:
        load_features(write(tmp_path, "h.csv",
                            "ad_id,frame_index,task_id,label,f0,f1\na,0,0,L,1,2\nb,0,0,H,1\n"))
    assert info.value.line == 3


def test_feature_table_wide_tsv(tmp_path):
    d = 4096
    rng = np.random.default_rng(1)
    X = rng.normal(size=(3, d))
    header = "\t".join(["ad_id", "frame_index", "task_id", "label"] + [f"f{k}" for k in range(d)])
    rows = ["\t".join([f"a{i}", str(i), "1", "H" if i % 2 else "L"] + [repr(float(v)) for v in X[i]])
            for i in range(3)]
    t = load_features(write(tmp_path, "f.tsv", "\n".join([header] + rows)), n_tasks=4)
    assert t.d == d and t.n_tasks == 4
    assert np.array_equal(t.X, X)


def test_ad_record_quadrant():
    assert AdRecord("a", 10.0, "H", "L").quadrant == "HALV"
    with pytest.raises(ValidationError):
        AdRecord("a", 0.0, "H", "L")


def hand_fixture():
    A = [[4, 3, 1, 0, 0, 1, 3, 4], [3, 3, 2, 1, 0, 0, 4, 4]]
    V = [[2, 1, 1, 2, -2, -1, -2, -1], [1, 2, 0, 1, -2, -2, -1, -1]]
    E = [[3, 4, 2, 1, 0, 1, 4, 3], [4, 4, 1, 2, 1, 0, 3, 3]]
    ids = [f"ad{j}" for j in range(8)]
    table = RatingsTable(["r0", "r1"], ids, {"A": A, "V": V, "E": E})
    labels = [("H", "H")] * 2 + [("L", "H")] * 2 + [("L", "L")] * 2 + [("H", "L")] * 2
    durs = [30, 45, 60, 15, 20, 25, 70, 80]
    ads = [AdRecord(i, d, a, v) for i, d, (a, v) in zip(ids, durs, labels)]
    return table, ads


def test_quadrant_summary_hand_fixture():
    # expected values from exact rational sums of the fixture
    table, ads = hand_fixture()
    s = quadrant_summary(table, ads)
    expect = {"HAHV": (37.5, 3.25, 1.5, 3.75), "LAHV": (37.5, 1.0, 1.0, 1.5),
              "LALV": (22.5, 0.25, -1.75, 0.5), "HALV": (75.0, 3.75, -1.25, 3.25)}
    for q, (length, a, v, e) in expect.items():
        assert (s[q].length_s, s[q].A, s[q].V, s[q].E) == (length, a, v, e)
        assert s[q].n_ads == 2


def test_quadrant_summary_single_quadrant_constant():
    ids = ["a", "b", "c"]
    table = RatingsTable(["r0", "r1"], ids, {"A": np.full((2, 3), 2.0), "V": np.full((2, 3), -1.0),
                                             "E": np.full((2, 3), 3.0)})
    ads = [AdRecord(i, 30.0, "H", "L") for i in ids]
    s = quadrant_summary(table, ads)
    assert (s["HALV"].A, s["HALV"].V, s["HALV"].E) == (2.0, -1.0, 3.0)
    for q in ("HAHV", "LAHV", "LALV"):
        assert s[q].n_ads == 0 and s[q].A is None and s[q].length_s is None


@given(st.permutations(range(8)), st.permutations(range(2)))
def test_quadrant_summary_permutation_invariant(ad_order, rater_order):
    table, ads = hand_fixture()
    base = quadrant_summary(table, ads)
    perm = table.permuted(rater_order, ad_order)
    assert quadrant_summary(perm, [ads[i] for i in ad_order]) == base


score = st.one_of(st.none(), st.integers(0, 4))


@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_ratings_round_trip(tmp_path_factory, n_raters, n_ads, data):
    cells = data.draw(st.lists(st.lists(score, min_size=n_ads, max_size=n_ads),
                               min_size=n_raters, max_size=n_raters))
    mat = np.array([[np.nan if c is None else c for c in row] for row in cells], dtype=float)
    t = RatingsTable([f"r{i}" for i in range(n_raters)], [f"a{j}" for j in range(n_ads)],
                     {"A": mat, "E": mat})
    path = tmp_path_factory.mktemp("rt") / "r.csv"
    save_ratings(t, path)
    assert load_ratings(path) == t


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 5), st.integers(1, 4), st.data())
def test_features_round_trip(tmp_path_factory, n, d, data):
    X = np.array(data.draw(st.lists(st.lists(finite, min_size=d, max_size=d), min_size=n,
                                    max_size=n)))
    y = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    t = FeatureTable([f"a{i}" for i in range(n)], list(range(n)), [i % 4 for i in range(n)],
                     X, y, 4)
    path = tmp_path_factory.mktemp("ft") / "f.csv"
    save_features(t, path)
    assert load_features(path, n_tasks=4) == t


def test_ads_round_trip(tmp_path):
    ads = [AdRecord("a", 31.5, "H", "L", "Buy now, save big", 4), AdRecord("b", 60.0, "L", "L")]
    save_ads(ads, tmp_path / "ads.csv")
    assert load_ads(tmp_path / "ads.csv") == ads
