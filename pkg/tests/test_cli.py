import json

import pytest

from planprobe.cli import main
from planprobe.domains import GenParams, gen_instance
from planprobe.experiment import save_instance
from planprobe.library import serialize_library
from planprobe.plans import hypothesis_to_dict


@pytest.fixture
def chem_files(tmp_path, chem):
    inst = chem["pairwise_first_mix"]
    lib = tmp_path / "chem.library.json"
    lib.write_text(serialize_library(inst.library))
    obs = tmp_path / "chem.obs.txt"
    obs.write_text("mix_AB\n")
    truth = tmp_path / "chem.truth.json"
    truth.write_text(json.dumps(hypothesis_to_dict(inst.truth, include_weight=False)))
    return lib, obs, truth


def test_recognize_chemistry(chem_files, capsys):
    lib, obs, _ = chem_files
    assert main(["recognize", "--library", str(lib), "--obs", str(obs)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["hypothesis_count"] == 2
    assert report["observation_count"] == 1
    assert not report["truncated"]
    assert sum(h["weight"] for h in report["hypotheses"]) == pytest.approx(1.0)


def test_recognize_minimal(tmp_path, minimal_lib, capsys):
    lib = tmp_path / "lib.json"
    lib.write_text(serialize_library(minimal_lib))
    obs = tmp_path / "obs.txt"
    obs.write_text("a\n")
    assert main(["recognize", "--library", str(lib), "--obs", str(obs)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["hypothesis_count"] == 1
    assert report["hypotheses"][0]["weight"] == pytest.approx(1.0)


def test_recognize_with_cap_reports_truncation(chem_files, capsys):
    lib, obs, _ = chem_files
    assert main(["recognize", "--library", str(lib), "--obs", str(obs),
                 "--max-hypotheses", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["hypothesis_count"] == 1
    assert report["truncated"] is True


def test_recognize_unknown_action_exits_2(chem_files, tmp_path, capsys):
    lib, _, _ = chem_files
    obs = tmp_path / "bad.obs.txt"
    obs.write_text("mix_AB\nmix_XY\n")
    assert main(["recognize", "--library", str(lib), "--obs", str(obs)]) == 2
    assert "observation 1" in capsys.readouterr().err


def test_missing_file_exits_1(tmp_path, capsys):
    assert main(["recognize", "--library", str(tmp_path / "none.json"), "--obs", str(tmp_path / "x")]) == 1


def test_malformed_library_exits_1(tmp_path, capsys):
    lib = tmp_path / "broken.json"
    lib.write_text("{not json")
    obs = tmp_path / "obs.txt"
    obs.write_text("a\n")
    assert main(["recognize", "--library", str(lib), "--obs", str(obs)]) == 1
    assert "error" in capsys.readouterr().err


def test_sprp_chemistry_one_query(chem_files, capsys):
    lib, obs, truth = chem_files
    code = main(["sprp", "--library", str(lib), "--obs", str(obs), "--truth", str(truth),
                 "--policy", "entropy", "--seed", "3", "--verify"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verified"] is True
    assert report["trace"]["initial_size"] == 2
    assert report["trace"]["queries"] == 1
    assert report["trace"]["steps"][0]["remaining"] == 1
    assert len(report["final"]) == 1


def test_sprp_mismatched_truth_exits_1(chem_files, tmp_path, chem, capsys):
    # truth that does not describe the observations is an input error
    lib, _, _ = chem_files
    obs = tmp_path / "fourway.obs.txt"
    obs.write_text("mix_ABCD\n")
    truth = tmp_path / "pairwise.truth.json"
    truth.write_text(json.dumps(hypothesis_to_dict(chem["pairwise_first_mix"].truth, include_weight=False)))
    code = main(["sprp", "--library", str(lib), "--obs", str(obs), "--truth", str(truth)])
    assert code == 1


def test_sprp_inconsistent_truth_exits_3(chem_files, tmp_path, chem, capsys):
    # a two-plan truth describes the single observation but no single-plan
    # hypothesis can be refined to it, so the oracle premise fails
    lib, obs, _ = chem_files
    pairwise = chem["pairwise_first_mix"].truth.plans[0]
    fourway_unmarked = json.loads(
        json.dumps(hypothesis_to_dict(chem["fourway_all_mix"].truth, include_weight=False))
    )["plans"][0]
    _drop_marks(fourway_unmarked)
    doc = hypothesis_to_dict(chem["pairwise_first_mix"].truth, include_weight=False)
    doc["plans"].append(fourway_unmarked)
    truth = tmp_path / "twoplan.truth.json"
    truth.write_text(json.dumps(doc))
    code = main(["sprp", "--library", str(lib), "--obs", str(obs), "--truth", str(truth)])
    assert code == 3


def _drop_marks(doc):
    doc.pop("observed", None)
    for child in doc.get("children", []):
        _drop_marks(child)


def test_gen_writes_instances(tmp_path, capsys):
    out = tmp_path / "batch"
    code = main(["gen", "--out", str(out), "--count", "3", "--obs-len", "4", "--seed", "5"])
    assert code == 0
    assert len(list(out.glob("*.library.json"))) == 3
    assert len(list(out.glob("*.obs.txt"))) == 3
    assert len(list(out.glob("*.truth.json"))) == 3


def test_experiment_generated(tmp_path, capsys):
    out = tmp_path / "exp"
    code = main([
        "experiment", "--out", str(out), "--reps", "2", "--seed", "4",
        "--obs-len", "3", "--policy", "random", "--policy", "entropy", "--verify",
    ])
    assert code == 0
    for name in ("rows.csv", "summary.csv", "decay.csv", "winrates.csv"):
        assert (out / name).exists()


def test_experiment_from_instance_dir(tmp_path, capsys):
    batch = tmp_path / "batch"
    for i in range(2):
        save_instance(gen_instance(GenParams(seed=i, obs_len=3)), batch, f"instance_{i:03d}")
    out = tmp_path / "exp"
    code = main(["experiment", "--out", str(out), "--instances", str(batch),
                 "--policy", "mph", "--seed", "1"])
    assert code == 0
    rows = (out / "rows.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 2  # header + one row per instance


def test_usage_error_exits_nonzero():
    with pytest.raises(SystemExit):
        main(["sprp", "--library", "x"])  # missing required arguments


def test_unknown_policy_rejected():
    with pytest.raises(SystemExit):
        main(["sprp", "--library", "a", "--obs", "b", "--truth", "c", "--policy", "greedy"])
