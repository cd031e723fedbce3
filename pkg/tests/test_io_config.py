import numpy as np
import pytest

from rkhs_sysid import InvalidArgument, RkhsElement, Signal, dc, tabulated, tc
from rkhs_sysid import io as rio
from rkhs_sysid.config import ConfigError, expand_range, parse_config, parse_lambda


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, -2.5e-17, 3.0, 1e300):
        assert float(rio.fmt(x)) == x
    assert rio.fmt(4.0) == "4"


def test_element_csv_round_trip(tmp_path):
    e = RkhsElement(dc(0.7, -0.3), [0, 3, 9], [0.1, -1 / 3, 2.0])
    rio.write_element_csv(tmp_path / "e.csv", e)
    back = rio.read_element_csv(tmp_path / "e.csv")
    assert back.kernel == e.kernel and back.atoms == e.atoms


def test_tabulated_csv_round_trip(tmp_path):
    k = tabulated([0, 1, 2], [[1.0, 0.5, 0.1], [0.5, 1.0, 0.2], [0.1, 0.2, 1.0]])
    rio.write_tabulated_csv(tmp_path / "k.csv", k)
    assert rio.read_tabulated_csv(tmp_path / "k.csv") == k


def test_tabulated_csv_triangle(tmp_path):
    (tmp_path / "k.csv").write_text("s,t,value\n0,0,1\n0,1,0.5\n1,1,2\n")
    k = rio.read_tabulated_csv(tmp_path / "k.csv")
    assert k(1, 0) == 0.5


@pytest.mark.parametrize("u", [Signal.discrete([0.5, -1.0, 0.25], start=-1),
                               Signal.piecewise([0.0, 0.5, 2.0], [1.0, -0.1, 0.0])])
def test_signal_csv_round_trip(tmp_path, u):
    rio.write_signal_csv(tmp_path / "u.csv", u)
    back = rio.read_signal_csv(tmp_path / "u.csv")
    assert back.domain is u.domain
    np.testing.assert_array_equal(back.times, u.times)
    np.testing.assert_array_equal(back.values, u.values)


def test_csv_diagnostics(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("time,output\n0,1\n1,abc\n")
    with pytest.raises(InvalidArgument, match=":3:"):
        rio.read_dataset_csv(p)
    p.write_text("t,y\n0,1\n")
    with pytest.raises(InvalidArgument, match="expected header"):
        rio.read_dataset_csv(p)


def test_kernel_json_round_trip():
    k = tc(0.9, "continuous")
    assert rio.kernel_from_json(rio.kernel_to_json(k)) == k


def test_config_unknown_key_line():
    text = "kernel:\n  family: TC\n  beta: 0.5\nnoise:\n  sigma: 0.1\n  seeed: 3\n"
    with pytest.raises(ConfigError, match=r"exp\.yaml:6: unknown key 'seeed'"):
        parse_config(text, "exp.yaml")


def test_config_unknown_block_line():
    with pytest.raises(ConfigError, match=r"c\.yaml:2: unknown block"):
        parse_config("kernel: {family: TC, beta: 0.5}\nkernal: {}\n", "c.yaml")


def test_config_invalid_yaml():
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config("kernel: [\n", "x.yaml")


def test_config_defaults_and_hash():
    a = parse_config("kernel: {family: TC, beta: 0.5}\n")
    b = parse_config("kernel:\n  beta: 0.5\n  family: TC\n")
    assert a.sha256() == b.sha256()
    assert a.block("noise") == {"sigma": 0.0, "seed": 0}
    a.set("noise", "seed", 4)
    assert a.block("noise")["seed"] == 4


def test_expand_range():
    np.testing.assert_array_equal(expand_range({"start": 0, "stop": 4}), [0, 1, 2, 3, 4])
    np.testing.assert_allclose(expand_range({"start": 0, "stop": 1, "step": 0.25}),
                               [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(expand_range([3, 5]), [3, 5])


def test_parse_lambda():
    assert parse_lambda(0.5) == [0.5]
    assert parse_lambda("0.1, 1") == [0.1, 1.0]
    np.testing.assert_allclose(parse_lambda("logspace:-2:0:3"), [0.01, 0.1, 1.0])
    np.testing.assert_allclose(parse_lambda({"min": 1e-3, "max": 1e-1, "num": 3}),
                               [1e-3, 1e-2, 1e-1])
    with pytest.raises(InvalidArgument):
        parse_lambda("fast")
