import hashlib
import json

import pytest

from charfix.cli import main, parse_grid, UsageError
from charfix.lm import NgramLM

import benchmark

THREE_KINDS = [("羽矛球", "羽毛球"), ("羽球", "羽毛球"), ("羽矛毛球", "羽毛球")]


@pytest.fixture
def files(tmp_path):
    lm_path = tmp_path / "lm.json"
    NgramLM().fit(benchmark.CLEAN).save(lm_path)
    tables = tmp_path / "tables.json"
    tables.write_text(json.dumps(benchmark.TABLE, ensure_ascii=False), encoding="utf-8")
    corpus = tmp_path / "dev.tsv"
    corpus.write_text("".join(f"{n}\t{c}\n" for c, n, _ in benchmark.PAIRS), encoding="utf-8")
    src = tmp_path / "src.txt"
    src.write_text("".join(n + "\n" for n in benchmark.NOISY), encoding="utf-8")
    return dict(dir=tmp_path, lm=f"ngram:{lm_path}", lm_path=lm_path, tables=str(tables), corpus=str(corpus), src=str(src))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_correct_identity_with_huge_gamma(files, capsys):
    code, out, _ = run(capsys, "correct", files["src"], "--lm", files["lm"], "--gamma", 1e6, "--workers", 2)
    assert code == 0
    assert out.splitlines() == benchmark.NOISY


def test_correct_order_with_workers(files, capsys):
    three = files["dir"] / "three.txt"
    lines = benchmark.NOISY[:3]
    three.write_text("\n".join(lines) + "\n", encoding="utf-8")
    code, out, _ = run(capsys, "correct", three, "--lm", files["lm"], "--tables", files["tables"], "--workers", 4)
    assert code == 0
    serial = run(capsys, "correct", three, "--lm", files["lm"], "--tables", files["tables"], "--workers", 1)[1]
    assert out == serial
    assert out.splitlines()[0] == benchmark.CLEAN[0]
    assert len(out.splitlines()) == 3


def test_correct_output_file_and_manifest(files, capsys):
    out_path, man = files["dir"] / "out.txt", files["dir"] / "run.json"
    code, _, _ = run(capsys, "correct", files["src"], "-o", out_path, "--lm", files["lm"],
                     "--tables", files["tables"], "--manifest", man, "--workers", 1)
    assert code == 0
    assert len(out_path.read_text(encoding="utf-8").splitlines()) == len(benchmark.NOISY)
    data = json.loads(man.read_text(encoding="utf-8"))
    assert data["config"]["beam_size"] == 8
    assert data["files"]["tables"] == hashlib.sha256(open(files["tables"], "rb").read()).hexdigest()
    assert data["files"]["lm"] == hashlib.sha256(files["lm_path"].read_bytes()).hexdigest()
    assert data["backend"].startswith("ngram(")
    t = data["timing"]
    assert t["sentences"] == 20 and t["ms_per_sentence"] >= 0 and t["ms_per_char"] >= 0


def test_unreachable_backend_exit_2(files, capsys):
    code, _, err = run(capsys, "correct", files["src"], "--lm", "http://127.0.0.1:9", "--strict")
    assert code == 2 and "backend" in err


def test_usage_errors_exit_1(files, capsys):
    with pytest.raises(SystemExit) as e:
        main(["correct", "--lm", files["lm"], "--beam-size", "many"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1


def test_fail_open_per_line(tmp_path, capsys, caplog):
    lm = tmp_path / "a.json"
    NgramLM().fit(["aaaa"]).save(lm)
    src = tmp_path / "in.txt"
    src.write_text("zz\na\n", encoding="utf-8")
    args = ["correct", src, "--lm", f"ngram:{lm}", "--beam-size", 1, "--gamma", 0, "--max-extra-deletes", 0]
    code, out, err = run(capsys, *args)
    assert code == 0 and out.splitlines() == ["zz", "a"]
    assert "keeping input" in caplog.text
    code, _, _ = run(capsys, *args, "--strict")
    assert code == 3


def test_config_file_and_env(files, capsys, monkeypatch):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text('{"gamma": 1000000.0}')
    monkeypatch.setenv("CHARFIX_CONFIG", str(cfg))
    code, out, _ = run(capsys, "correct", files["src"], "--lm", files["lm"], "--workers", 1)
    assert out.splitlines() == benchmark.NOISY
    # a flag still beats the file
    code, out, _ = run(capsys, "correct", files["src"], "--lm", files["lm"], "--gamma", 1, "--tables", files["tables"])
    assert out.splitlines() != benchmark.NOISY


def test_bad_config_is_data_error(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text('{"beams": 3}')
    code, _, _ = run(capsys, "correct", files["src"], "--lm", files["lm"], "--config", cfg)
    assert code == 3


def test_deterministic_rerun(files, capsys):
    args = ("correct", files["src"], "--lm", files["lm"], "--tables", files["tables"])
    first = run(capsys, *args, "--workers", 3)[1]
    assert run(capsys, *args, "--workers", 1)[1] == first


# --- evaluate -------------------------------------------------------------------------


def _write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def test_evaluate_perfect_and_copy(files, capsys):
    refs = _write(files["dir"] / "refs.txt", benchmark.CLEAN)
    code, out, _ = run(capsys, "evaluate", files["corpus"], refs, "--json")
    data = json.loads(out)
    assert code == 0 and data["char_f1"] == 1.0 and data["sent_f1"] == 1.0
    code, out, _ = run(capsys, "evaluate", files["corpus"], files["src"], "--json")
    assert json.loads(out)["char_recall"] == 0.0


def test_evaluate_matches_library_counts(tmp_path, capsys):
    corpus = _write(tmp_path / "c.tsv", ["abcd\txbcy", "他来了\t他来了"])
    preds = _write(tmp_path / "p.txt", ["xzcd", "她来了"])
    code, out, _ = run(capsys, "evaluate", corpus, preds, "--json")
    data = json.loads(out)
    assert data["counts"]["char_tp"] == 1 and data["counts"]["char_system"] == 3
    assert data["char_precision"] == pytest.approx(1 / 3) and data["char_recall"] == 0.5
    code, out, _ = run(capsys, "evaluate", corpus, preds)
    assert "sentence" in out


def test_evaluate_line_mismatch(files, capsys):
    short = _write(files["dir"] / "short.txt", benchmark.CLEAN[:3])
    code, _, err = run(capsys, "evaluate", files["corpus"], short)
    assert code == 3 and "prediction lines" in err


def test_evaluate_normalises_and_excludes(tmp_path, capsys):
    corpus = _write(tmp_path / "c.tsv", ["你好，世界\t你好，世界！", "羽矛球\t羽毛球"])
    preds = _write(tmp_path / "p.txt", ["你好, 世界!", "羽毛球"])
    data = json.loads(run(capsys, "evaluate", corpus, preds, "--json")[1])
    assert data["char_f1"] == 1.0
    data = json.loads(run(capsys, "evaluate", corpus, preds, "--json", "--exclude-length-changed")[1])
    assert data["counts"]["char_gold"] == 1


# --- stats --------------------------------------------------------------------------


def test_stats_three_kinds(tmp_path, capsys):
    corpus = _write(tmp_path / "f.tsv", [f"{s}\t{t}" for s, t in THREE_KINDS])
    code, out, _ = run(capsys, "stats", corpus, "--json")
    data = json.loads(out)
    assert (data["SUB"], data["RED"], data["MIS"]) == (1, 1, 1)
    code, out, _ = run(capsys, "stats", corpus)
    assert "SUB" in out and "#Sent" in out


def test_stats_empty(tmp_path, capsys):
    empty = tmp_path / "e.tsv"
    empty.write_text("")
    assert run(capsys, "stats", empty)[1].strip() == "0 sentences"


def test_stats_parse_error(tmp_path, capsys):
    bad = _write(tmp_path / "b.tsv", ["a\tb\tc"])
    code, _, err = run(capsys, "stats", bad)
    assert code == 3 and "line 1" in err


def test_stats_planted(tmp_path, capsys):
    rows = [f"{n}\t{c}" for c, n, _ in benchmark.PAIRS]
    data = json.loads(run(capsys, "stats", _write(tmp_path / "b.tsv", rows), "--json")[1])
    planted = [k for _, _, k in benchmark.PAIRS]
    assert (data["SUB"], data["RED"], data["MIS"]) == (planted.count("SUB"), planted.count("RED"), planted.count("MIS"))


# --- tune ---------------------------------------------------------------------------


def test_parse_grid_forms(tmp_path):
    assert parse_grid("gamma=1,0.5;alpha=2") == {"gamma": [0.5, 1.0], "alpha": [2.0]}
    (tmp_path / "g.json").write_text('{"insert_weight": [9, 8.5]}')
    assert parse_grid(str(tmp_path / "g.json")) == {"insert_weight": [8.5, 9.0]}
    with pytest.raises(UsageError):
        parse_grid("beam_size=1,2")
    with pytest.raises(UsageError):
        parse_grid("gamma=")


def _tune(capsys, files, grid, *extra):
    code, out, _ = run(capsys, "tune", files["corpus"], "--lm", files["lm"], "--tables", files["tables"],
                       "--grid", grid, "--json", "--workers", 4, *extra)
    assert code == 0
    return json.loads(out)


def test_tune_single_point(files, capsys):
    data = _tune(capsys, files, "gamma=1")
    assert data["best"]["params"] == {"gamma": 1.0} and len(data["points"]) == 1


def test_tune_avoids_identity_point(files, capsys):
    data = _tune(capsys, files, "gamma=1,1000000")
    by_gamma = {p["params"]["gamma"]: p["f1"] for p in data["points"]}
    assert by_gamma[1e6] == 0 and by_gamma[1.0] > 0
    assert data["best"]["params"] == {"gamma": 1.0}


def test_tune_recovers_indel_weights(tmp_path, files, capsys):
    # only RED/MIS pairs: with prohibitive insert or delete costs half of them stay unfixed
    cfg = tmp_path / "exact.json"
    cfg.write_text('{"incremental": "exact", "normalize_entropy": true}')
    # the two sentence-final omissions are left out: the small LM is happy to stop early there
    hard = {"请大家保持安。", "弟弟正在写作。"}
    rows = [f"{n}\t{c}" for c, n, k in benchmark.PAIRS if k in ("RED", "MIS") and n not in hard]
    files = dict(files, corpus=str(_write(tmp_path / "indel.tsv", rows)))
    data = _tune(capsys, files, "insert_weight=8.5,60;delete_weight=9,60", "--config", cfg)
    perfect = [p["params"] for p in data["points"] if p["f1"] == 1.0]
    assert perfect == [{"delete_weight": 9.0, "insert_weight": 8.5}]
    assert data["best"]["params"] == perfect[0]


def test_tune_table_output(files, capsys):
    code, out, _ = run(capsys, "tune", files["corpus"], "--lm", files["lm"], "--grid", "alpha=2.5")
    assert code == 0 and "best: alpha=2.5" in out


def test_tune_bad_grid_is_usage_error(files, capsys):
    code, _, _ = run(capsys, "tune", files["corpus"], "--lm", files["lm"], "--grid", "beam_size=1")
    assert code == 1


def test_fit_lm(tmp_path, capsys):
    texts = _write(tmp_path / "t.txt", benchmark.CLEAN)
    out = tmp_path / "m.json"
    assert run(capsys, "fit-lm", texts, "-o", out, "--order", 2)[0] == 0
    assert NgramLM.load(out).order == 2
