import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from classical_steering.cli import main

APPENDIX_STATE = {"space": ["0", "1"], "probs": ["11/32", "21/32"]}
APPENDIX_ENSEMBLE = {
    "members": [
        {"weight": "1/2", "probs": ["1/2", "1/2"]},
        {"weight": "1/4", "probs": ["1/4", "3/4"]},
        {"weight": "1/4", "probs": ["1/8", "7/8"]},
    ]
}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_steer_plan_appendix(capsys, files):
    code, out, _ = run(capsys, "steer-plan", "--state", files("s.json", APPENDIX_STATE),
                       "--ensemble", files("e.json", APPENDIX_ENSEMBLE))
    assert code == 0
    plan = json.loads(out)
    assert plan["coins"]["0"]["probs"] == ["8/11", "2/11", "1/11"]
    assert plan["coins"]["1"]["over_common_denominator"] == ["8/21", "6/21", "7/21"]
    for text in ("8/11", "2/11", "1/11", "8/21", "6/21", "7/21"):
        assert f'"{text}"' in out


def test_steer_plan_mismatch_exits_2(capsys, files):
    bad = {"members": [{"weight": "1", "probs": ["1/2", "1/2"]}]}
    code, out, err = run(capsys, "steer-plan", "--state", files("s.json", APPENDIX_STATE),
                         "--ensemble", files("e.json", bad))
    assert code == 2
    assert out == ""
    assert "mix=1/2 != bob=11/32" in err


def test_steer_plan_single_member(capsys, files):
    code, out, _ = run(capsys, "steer-plan", "--state", files("s.json", APPENDIX_STATE),
                       "--ensemble", files("e.json", {"members": [{"weight": "1", "probs": ["11/32", "21/32"]}]}))
    assert code == 0
    assert all(c["probs"] == ["1/1"] for c in json.loads(out)["coins"].values())


@pytest.mark.parametrize("content", ["{not json", json.dumps({"probs": ["1/2", "1/4"]}),
                                     json.dumps({"probs": ["0.5", "0.5"]})])
def test_malformed_input_exits_1(capsys, files, content):
    code, _, err = run(capsys, "steer-plan", "--state", files("s.json", content),
                       "--ensemble", files("e.json", APPENDIX_ENSEMBLE))
    assert code == 1
    assert err.startswith("error:")


def test_missing_file_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "steer-plan", "--state", str(tmp_path / "nope.json"),
                       "--ensemble", str(tmp_path / "nope2.json"))
    assert code == 1


def test_steer_verify_plan_and_corruption(capsys, files):
    _, plan_text, _ = run(capsys, "steer-plan", "--state", files("s.json", APPENDIX_STATE),
                          "--ensemble", files("e.json", APPENDIX_ENSEMBLE))
    code, out, _ = run(capsys, "steer-verify", "--plan", files("plan.json", plan_text))
    report = json.loads(out)
    assert code == 0
    assert report["claims"]["claim1_announcement_weights"] is True
    assert report["claims"]["claim2_conditional_states"] is True
    assert report["announced"] == ["1/2", "1/4", "1/4"]

    plan = json.loads(plan_text)
    plan["coins"]["0"]["probs"][0] = "7/11"
    code, out, _ = run(capsys, "steer-verify", "--plan", files("bad.json", plan))
    assert code == 3
    assert json.loads(out)["verified"] is False


def test_steer_verify_from_state_and_ensemble(capsys, files):
    code, _, _ = run(capsys, "steer-verify", "--state", files("s.json", APPENDIX_STATE),
                     "--ensemble", files("e.json", APPENDIX_ENSEMBLE))
    assert code == 0


def test_steer_run_reports_zero_messages(capsys, files):
    code, out, _ = run(capsys, "steer-run", "--state", files("s.json", APPENDIX_STATE),
                       "--ensemble", files("e.json", APPENDIX_ENSEMBLE), "--trials", "2000",
                       "--seed", "5")
    report = json.loads(out)
    assert code == 0
    assert report["messages_sent"] == 0
    assert F(report["tv_announced"]) < F(5, 100)


def test_teleport_biased_coin(capsys, files):
    code, out, _ = run(capsys, "teleport", "--state", files("s.json", APPENDIX_STATE),
                       "--trials", "100000", "--seed", "1")
    report = json.loads(out)
    assert code == 0
    assert report["messages_sent"] == 1
    assert set(report["first_run"]) == {"message", "bob_outcome", "messages_sent"}
    assert F(report["tv_to_exact"]) < F(1, 100)
    assert report["analysis"]["bob_distribution"]["probs"] == ["11/32", "21/32"]
    assert report["analysis"]["secret"] is True


def test_teleport_deterministic_coin(capsys, files):
    code, out, _ = run(capsys, "teleport", "--state", files("s.json", {"probs": ["1", "0"]}),
                       "--trials", "500")
    assert code == 0
    assert json.loads(out)["empirical_bob"] == ["1/1", "0/1"]


def test_teleport_honest_die(capsys):
    code, out, _ = run(capsys, "teleport", "--dits", "6", "--trials", "600")
    report = json.loads(out)
    assert code == 0
    assert report["d"] == 6
    assert report["messages_sent"] == 1


def test_teleport_dits_mismatch(capsys, files):
    code, _, _ = run(capsys, "teleport", "--state", files("s.json", APPENDIX_STATE), "--dits", "3")
    assert code == 1


def test_appendix_demo(capsys):
    code, out, _ = run(capsys, "appendix-demo", "--trials", "20000")
    report = json.loads(out)
    assert code == 0
    assert report["recomputed_from_ensemble"] == ["11/32", "21/32"]
    assert report["plan"]["coins"]["0"]["probs"] == ["8/11", "2/11", "1/11"]
    assert report["analysis"]["announced"] == ["1/2", "1/4", "1/4"]
    assert all(report["checks"].values())


def test_fuzz_200_instances(capsys):
    code, out, _ = run(capsys, "fuzz", "--seed", "3")
    report = json.loads(out)
    assert code == 0
    assert report == {"instances": 200, "seed": 3, "passed": 200, "failed_instances": []}


def test_table_format(capsys, files):
    code, out, _ = run(capsys, "steer-verify", "--state", files("s.json", APPENDIX_STATE),
                       "--ensemble", files("e.json", APPENDIX_ENSEMBLE), "--format", "table")
    assert code == 0
    assert "announced" in out and "1/2  1/4  1/4" in out


def test_output_is_byte_identical_across_runs(capsys, files):
    args = ["steer-run", "--state", files("s.json", APPENDIX_STATE),
            "--ensemble", files("e.json", APPENDIX_ENSEMBLE), "--trials", "500", "--seed", "9"]
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_trials_must_be_positive():
    with pytest.raises(SystemExit):
        main(["fuzz", "--trials", "0"])


def test_module_entry_point(tmp_path):
    state = tmp_path / "s.json"
    state.write_text(json.dumps(APPENDIX_STATE))
    proc = subprocess.run(
        [sys.executable, "-m", "classical_steering", "teleport", "--state", str(state),
         "--trials", "10", "--format", "table"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "messages_sent" in proc.stdout
