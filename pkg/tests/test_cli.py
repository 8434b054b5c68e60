import json
import subprocess
import sys

import numpy as np
import pytest

from oaqec.channel import KrausChannel, choi_distance, identity_channel, unitary_channel
from oaqec.cli import main
from oaqec.constructions import PAULI_X, PAULI_Z
from oaqec.documents import (
    DocumentError,
    channel_from_doc,
    channel_to_doc,
    digest_array,
    dumps,
    loads_json,
    matrix_from_doc,
    matrix_to_doc,
)
from oaqec.matcore import random_unitary


def write(path, obj):
    path.write_text(dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_channel_document_roundtrip():
    ch = KrausChannel([np.array([[0.6, 0.8j], [0, 0]]), np.array([[0, 0], [0.8, -0.6j]])])
    text = dumps(channel_to_doc(ch, {"name": "x"}))
    back = channel_from_doc(loads_json(text))
    assert np.array_equal(back.kraus, ch.kraus)


def test_matrix_document_roundtrip():
    a = np.arange(6).reshape(2, 3) * (1 + 0.5j)
    m, dims = matrix_from_doc(loads_json(dumps(matrix_to_doc(a))))
    assert np.array_equal(m, a) and dims is None


def test_dumps_format():
    text = dumps({"b": 1, "a": [0.1, -0.0, 2.5e-300], "c": None})
    assert text.index('"b"') < text.index('"a"')
    assert "0.10000000000000001" in text
    assert json.loads(text)["a"][2] == 2.5e-300
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_digest_ignores_negative_zero():
    assert digest_array(np.array([[-0.0]])) == digest_array(np.array([[0.0]]))


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"version": "oaqec/0", "d_in": 1, "d_out": 1, "kraus": [[[[1, 0]]]]},
        {"version": "oaqec/1", "d_in": 2, "d_out": 1, "kraus": [[[[1, 0]]]]},
        {"version": "oaqec/1", "d_in": 1, "d_out": 1, "kraus": [[[[1, 0, 3]]]]},
        {"version": "oaqec/1", "d_in": 1, "d_out": 1, "kraus": []},
        {"version": "oaqec/1", "d_in": True, "d_out": 1, "kraus": [[[[1, 0]]]]},
    ],
)
def test_bad_channel_documents(doc):
    with pytest.raises(DocumentError):
        channel_from_doc(doc)


def test_validate_identity(tmp_path, capsys):
    path = write(tmp_path / "id.json", channel_to_doc(identity_channel(2)))
    code, out, _ = run(capsys, "validate", path)
    assert code == 0
    rep = json.loads(out)
    assert rep["tp_residual"] == 0 and rep["pass"]


def test_validate_doubled_identity(tmp_path, capsys):
    path = write(tmp_path / "ii.json", channel_to_doc(KrausChannel([np.eye(2), np.eye(2)])))
    code, out, _ = run(capsys, "validate", path)
    assert code == 1 and json.loads(out)["tp_residual"] == 1.0


def test_validate_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"version": "oaqec/1",\n  "d_in": }')
    code, _, err = run(capsys, "validate", path)
    assert code == 2 and "line 2" in err and "column" in err


def test_validate_dimension_inconsistency(tmp_path, capsys):
    doc = channel_to_doc(identity_channel(2))
    doc["d_in"] = 3
    code, _, _ = run(capsys, "validate", write(tmp_path / "d.json", doc))
    assert code == 2


def test_validate_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "validate", tmp_path / "nope.json")
    assert code == 2 and "cannot read" in err


def test_fixture_documents_valid(tmp_path, capsys):
    for args in (["type1", "--d0", 2, "--m", 3], ["rotation-analog", "--q", 3], ["bit-flip"]):
        out = tmp_path / f"{args[0]}.json"
        assert run(capsys, "fixture", *args, "--out", out)[0] == 0
        assert run(capsys, "validate", out)[0] == 0


def test_fixture_unknown(capsys):
    code, _, err = run(capsys, "fixture", "bogus")
    assert code == 2
    assert "type1" in err and "rotation-analog" in err and "bit-flip" in err


def test_fixture_byte_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "fixture", "type1", "--probs", "0.5,0.3,0.2", "--seed", 4, "--out", a)
    run(capsys, "fixture", "type1", "--probs", "0.5,0.3,0.2", "--seed", 4, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_fixture_bad_params(capsys):
    assert run(capsys, "fixture", "type1", "--probs", "0.5,0.6,0.2")[0] == 2
    assert run(capsys, "fixture", "type1", "--d-total", 3)[0] == 2
    assert run(capsys, "fixture", "type1", "--isometry-out", "x.json")[0] == 2


def test_analyze_type1(tmp_path, capsys):
    path = tmp_path / "t1.json"
    run(capsys, "fixture", "type1", "--d0", 2, "--m", 3, "--d-total", 8, "--out", path)
    code, out, _ = run(capsys, "analyze", path)
    rep = json.loads(out)
    assert code == 0 and rep["pass"]
    assert rep["correctable"]["dim"] == 4 and rep["correctable"]["structure"] == [[2, 1]]
    assert rep["noiseless"] is None
    assert rep["verification"]["correction_residual"] <= 1e-9


def test_analyze_rotation_analog(tmp_path, capsys):
    path = tmp_path / "r.json"
    run(capsys, "fixture", "rotation-analog", "--q", 2, "--out", path)
    code, out, _ = run(capsys, "analyze", path)
    rep = json.loads(out)
    assert code == 0
    assert rep["noiseless"]["dim"] == 4 and rep["noiseless"]["is_factor"]
    assert rep["noiseless"]["identity_correction_residual"] <= 1e-9


def test_analyze_unitary(tmp_path, capsys):
    u = random_unitary(3, np.random.default_rng(0))
    path = write(tmp_path / "u.json", channel_to_doc(unitary_channel(u)))
    code, out, _ = run(capsys, "analyze", path)
    rep = json.loads(out)
    assert code == 0 and rep["correctable"]["dim"] == 9
    kraus = [np.array([[complex(*p) for p in row] for row in k]) for k in rep["correction"]["kraus"]]
    assert choi_distance(KrausChannel(kraus), unitary_channel(u.conj().T)) < 1e-10


def test_analyze_with_isometry(tmp_path, capsys):
    ch_path, iso_path = tmp_path / "b.json", tmp_path / "bi.json"
    run(capsys, "fixture", "bit-flip", "--out", ch_path, "--isometry-out", iso_path)
    code, out, _ = run(capsys, "analyze", ch_path, "--isometry", iso_path, "--subsystem", 2, 1)
    rep = json.loads(out)
    assert code == 0
    sec = rep["restricted"][0]
    assert sec["kl_pass"] and sec["subsystem_pass"] and sec["algebra"]["dim"] == 4
    assert not sec["s0_is_algebra"]


def test_analyze_rejects_non_isometry(tmp_path, capsys):
    ch_path = tmp_path / "b.json"
    run(capsys, "fixture", "bit-flip", "--out", ch_path)
    bad = write(tmp_path / "v.json", matrix_to_doc(np.ones((8, 2))))
    assert run(capsys, "analyze", ch_path, "--isometry", bad)[0] == 2
    wrong = write(tmp_path / "w.json", matrix_to_doc(np.eye(4)[:, :2]))
    assert run(capsys, "analyze", ch_path, "--isometry", wrong)[0] == 2
    assert run(capsys, "analyze", ch_path, "--subsystem", 2, 1)[0] == 2


def test_analyze_invalid_channel(tmp_path, capsys):
    path = write(tmp_path / "ii.json", channel_to_doc(KrausChannel([np.eye(2), np.eye(2)])))
    code, out, _ = run(capsys, "analyze", path)
    assert code == 1 and not json.loads(out)["pass"]


def test_analyze_byte_identical(tmp_path, capsys):
    path = tmp_path / "r.json"
    run(capsys, "fixture", "rotation-analog", "--q", 3, "--out", path)
    first = run(capsys, "analyze", path, "--seed", 3)[1]
    second = run(capsys, "analyze", path, "--seed", 3)[1]
    assert first == second


def test_dilate(tmp_path, capsys):
    zz = write(tmp_path / "zz.json", matrix_to_doc(np.kron(PAULI_Z, PAULI_Z), dims=[2, 2]))
    code, out, _ = run(capsys, "dilate", zz, "--t", 0.4)
    ch = channel_from_doc(json.loads(out))
    assert code == 0 and len(ch) == 1
    assert np.allclose(ch.kraus[0], np.diag(np.exp([-0.4j, 0.4j])))
    code, out, _ = run(capsys, "dilate", zz, "--t", 0)
    assert choi_distance(channel_from_doc(json.loads(out)), identity_channel(2)) < 1e-12


def test_dilate_span_table(tmp_path, capsys):
    h = np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Z, PAULI_Z)
    path = write(tmp_path / "h.json", matrix_to_doc(h, dims=[2, 2]))
    code, out, _ = run(capsys, "dilate", path, "--order-span", 2)
    assert code == 0 and json.loads(out)["dims"] == [1, 3, 4]


def test_dilate_errors(tmp_path, capsys):
    nh = write(tmp_path / "nh.json", matrix_to_doc(np.kron(PAULI_X, PAULI_X) + 0.5j * np.eye(4), dims=[2, 2]))
    assert run(capsys, "dilate", nh)[0] == 2
    nodims = write(tmp_path / "nd.json", matrix_to_doc(np.eye(4)))
    assert run(capsys, "dilate", nodims)[0] == 2
    ok = write(tmp_path / "ok.json", matrix_to_doc(np.eye(4), dims=[2, 2]))
    assert run(capsys, "dilate", ok, "--env-state", 5)[0] == 2


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["validate", "x.json", "--tolerance", "-1"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    res = subprocess.run([sys.executable, "-m", "oaqec", "fixture", "rotation-analog", "--out", str(out)])
    assert res.returncode == 0 and out.exists()
