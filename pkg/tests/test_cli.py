"""End-to-end CLI behavior: scan goldens, reports, synth, merge, errors."""

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from cooccur.aggregate import restore, snapshot
from cooccur.cli import main
from conftest import DATA_DIR, write_jsonl


def write_config(tmp_path, sources, **kw):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = {"sources": sources}
    cfg.update(kw)
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    return p


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scan_fixture_matches_oracle_golden(tmp_path):
    cfg = write_config(
        tmp_path,
        [{"label": "fixture", "paths": [str(DATA_DIR / "fixture_corpus.jsonl")]}],
    )
    out = tmp_path / "out"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
    got = (out / "counts.csv").read_bytes()
    want = (DATA_DIR / "golden_counts.csv").read_bytes()
    assert got == want
    # totals and snapshot written alongside
    assert (out / "totals.csv").exists()
    assert (out / "snapshot.json").exists()
    assert (out / "run.log").exists()


def test_scan_empty_corpus(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    cfg = write_config(tmp_path, [{"label": "e", "paths": [str(empty)]}])
    out = tmp_path / "out"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "counts.csv").read_text() == "source,disease,window,dimension,category,count\n"
    assert (out / "totals.csv").read_text() == (
        "source,disease,window,total_windows,no_gender,no_race\n"
    )


def test_csv_numeric_fields_locale_independent(tmp_path):
    corpus = write_jsonl(
        tmp_path / "c.jsonl",
        [{"text": "black woman with hypertension"}, {"text": "hypertension alone here"}],
    )
    cfg = write_config(tmp_path, [{"label": "n", "paths": [str(corpus)]}])
    out = tmp_path / "out"
    main(["scan", "--config", str(cfg), "--out", str(out)])
    for r in read_rows(out / "counts.csv"):
        assert int(r["count"]) >= 0
    for r in read_rows(out / "totals.csv"):
        int(r["total_windows"]), int(r["no_gender"]), int(r["no_race"])
    rep = tmp_path / "rep"
    main(["report", "--snapshot", str(out / "snapshot.json"), "--mode",
          "representation", "--out", str(rep)])
    for r in read_rows(rep / "representation.csv"):
        val = float(r["representation_pct"])  # plain decimal point, no separators
        assert "," not in r["representation_pct"]
        assert 0.0 <= val <= 100.0


def test_scan_worker_count_invariance(tmp_path):
    docs = []
    for i in range(120):
        bits = ["black"] * (i % 3) + ["hypertension"] + ["pad"] * (i % 7) + ["woman"] * (i % 2)
        docs.append({"text": " ".join(bits), "n": str(i)})
    corpus = write_jsonl(tmp_path / "c.jsonl", docs)
    cfg = write_config(tmp_path, [{"label": "w", "paths": [str(corpus)]}])
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["scan", "--config", str(cfg), "--workers", "1", "--out", str(out1)]) == 0
    assert main(["scan", "--config", str(cfg), "--workers", "2", "--out", str(out2)]) == 0
    for name in ("counts.csv", "totals.csv", "snapshot.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_scan_bad_config_path(tmp_path):
    assert main(["scan", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2


def test_scan_missing_corpus_is_error_and_cleans_outputs(tmp_path):
    cfg = write_config(tmp_path, [{"label": "x", "paths": [str(tmp_path / "gone.jsonl")]}])
    out = tmp_path / "out"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 2
    assert not list(out.glob("*.csv"))


def test_sample_bytes_prefix_scan(tmp_path):
    docs = [{"text": f"hypertension case {i}"} for i in range(1000)]
    corpus = write_jsonl(tmp_path / "c.jsonl", docs)
    cfg = write_config(tmp_path, [{"label": "s", "paths": [str(corpus)]}])
    out = tmp_path / "out"
    assert main(["scan", "--config", str(cfg), "--sample-bytes", "2000", "--out", str(out)]) == 0
    rows = read_rows(out / "totals.csv")
    first = [r for r in rows if r["window"] == "20"]
    assert 0 < int(first[0]["total_windows"]) < 1000


def test_report_shares_table_layout(tmp_path, t1_matrix, capsys):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    out = tmp_path / "rep"
    assert main(["report", "--snapshot", str(snap), "--mode", "shares", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    for val in ("37.66", "45.70", "5.58", "7.89", "2.31", "0.86", "43.64", "56.36"):
        assert val in printed
    rows = read_rows(out / "shares.csv")
    black = [r for r in rows if r["category"] == "Black"][0]
    assert float(black["share_pct"]) == pytest.approx(45.70)
    assert black["aggregation"] == "micro"
    assert (out / "shares.txt").exists()


def test_report_representation_no_demo_column(tmp_path):
    corpus = write_jsonl(tmp_path / "c.jsonl", [{"text": "lupus alone"}, {"text": "more lupus text"}])
    cfg = write_config(tmp_path, [{"label": "q", "paths": [str(corpus)]}])
    out = tmp_path / "out"
    main(["scan", "--config", str(cfg), "--out", str(out)])
    rep = tmp_path / "rep"
    assert main(["report", "--snapshot", str(out / "snapshot.json"), "--mode",
                 "representation", "--out", str(rep)]) == 0
    rows = read_rows(rep / "representation.csv")
    assert rows, "expected rows for the scanned disease"
    for r in rows:
        assert float(r["no_demographic_pct"]) == 100.0
        assert float(r["representation_pct"]) == 0.0


def test_report_representation_all_windows_and_per_source(tmp_path):
    corpus = write_jsonl(tmp_path / "c.jsonl", [{"text": "black woman with lupus"}])
    cfg = write_config(tmp_path, [{"label": "q", "paths": [str(corpus)]}])
    out = tmp_path / "out"
    main(["scan", "--config", str(cfg), "--out", str(out)])
    rep = tmp_path / "rep"
    assert main(["report", "--snapshot", str(out / "snapshot.json"), "--mode", "representation",
                 "--window", "all", "--per-source", "--out", str(rep)]) == 0
    rows = read_rows(rep / "representation.csv")
    windows = {r["window"] for r in rows}
    assert windows == {"20", "100", "200", "500", "document"}
    assert {r["source"] for r in rows} == {"ALL", "q"}


def test_report_compare_census(tmp_path, t1_matrix):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    out = tmp_path / "cmp"
    census = Path("src/cooccur/data/census_2020.baseline").resolve()
    assert main(["report", "--snapshot", str(snap), "--mode", "compare",
                 "--baseline", str(census), "--out", str(out)]) == 0
    rows = read_rows(out / "compare.csv")
    black = [r for r in rows if r["category"] == "Black" and r["dimension"] == "race"][0]
    assert float(black["difference_pp"]) == pytest.approx(45.70 - 12.05)
    assert float(black["ratio"]) == pytest.approx(3.79, abs=0.01)


def test_report_compare_four_race(tmp_path, t1_matrix):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    out = tmp_path / "cmp4"
    census = Path("src/cooccur/data/census_2020.baseline").resolve()
    assert main(["report", "--snapshot", str(snap), "--mode", "compare", "--four-race",
                 "--baseline", str(census), "--out", str(out)]) == 0
    rows = read_rows(out / "compare.csv")
    race_rows = [r for r in rows if r["dimension"] == "race"]
    assert {r["category"] for r in race_rows} == {"White", "Black", "Asian", "Hispanic"}
    assert sum(float(r["corpus_pct"]) for r in race_rows) == pytest.approx(100.0, abs=0.01)


def test_report_window_profile(tmp_path, t1_matrix):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    out = tmp_path / "wp"
    assert main(["report", "--snapshot", str(snap), "--mode", "window-profile",
                 "--aggregation", "macro", "--out", str(out)]) == 0
    rows = read_rows(out / "window-profile.csv")
    assert all(r["aggregation"] == "macro" for r in rows)


def test_report_compare_requires_baseline(tmp_path, t1_matrix):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    assert main(["report", "--snapshot", str(snap), "--mode", "compare",
                 "--out", str(tmp_path / "x")]) == 2


def test_report_unknown_mode_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["report", "--snapshot", "s", "--mode", "bogus", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_report_unknown_window(tmp_path, t1_matrix):
    snap = tmp_path / "snap.json"
    snapshot(t1_matrix, snap)
    assert main(["report", "--snapshot", str(snap), "--mode", "shares",
                 "--window", "64", "--out", str(tmp_path / "x")]) == 2


def test_synth_and_merge_roundtrip(tmp_path):
    spec = {
        "source": "syn",
        "docs_per_disease": {"hypertension": 40},
        "rates": [{"disease": "hypertension", "dimension": "race", "category": "Black", "p": 0.5}],
        "doc_token_len": 600,
        "filler_docs": 5,
        "shard_docs": 20,
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    corpus_dir = tmp_path / "corpus"
    assert main(["synth", "--spec", str(spec_path), "--seed", "11", "--out", str(corpus_dir)]) == 0
    shards = sorted(corpus_dir.glob("part-*.jsonl"))
    assert len(shards) == 3  # 45 docs / 20 per shard

    # scan shards separately, merge, and compare against one combined scan
    outs = []
    for i, shard in enumerate(shards):
        cfg = write_config(tmp_path / f"c{i}", [{"label": "syn", "paths": [str(shard)]}])
        out = tmp_path / f"out{i}"
        assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out / "snapshot.json")
    merged_path = tmp_path / "merged.json"
    assert main(["merge", *[str(p) for p in outs], "--out", str(merged_path)]) == 0

    out_all = tmp_path / "out_all"
    cfg_all = write_config(
        tmp_path / "call", [{"label": "syn", "paths": [str(s) for s in shards]}]
    )
    assert main(["scan", "--config", str(cfg_all), "--out", str(out_all)]) == 0

    merged = restore(merged_path)
    single = restore(out_all / "snapshot.json")
    assert merged.cells == single.cells
    assert merged.totals == single.totals
    assert merged.no_demo == single.no_demo


def test_merge_rejects_mixed_lexicons(tmp_path):
    corpus = write_jsonl(tmp_path / "c.jsonl", [{"text": "lupus"}])
    lex = {"disease": {"lupus": ["lupus"]}, "race": {"Black": ["black"]},
           "gender": {"male": ["male"]}}
    lex_path = tmp_path / "lex.json"
    lex_path.write_text(json.dumps(lex))

    cfg_default = write_config(tmp_path / "a", [{"label": "x", "paths": [str(corpus)]}])
    cfg_custom = write_config(
        tmp_path / "b", [{"label": "x", "paths": [str(corpus)]}], lexicon=str(lex_path)
    )
    out_a, out_b = tmp_path / "oa", tmp_path / "ob"
    assert main(["scan", "--config", str(cfg_default), "--out", str(out_a)]) == 0
    assert main(["scan", "--config", str(cfg_custom), "--out", str(out_b)]) == 0
    code = main(["merge", str(out_a / "snapshot.json"), str(out_b / "snapshot.json"),
                 "--out", str(tmp_path / "m.json")])
    assert code != 0


MEM_PROBE = """
import resource, sys
from cooccur.cli import main
code = main(sys.argv[1:])
peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
print(f"PEAK_KB={peak_kb}")
sys.exit(code)
"""


def _run_scan_subprocess(cfg, out):
    proc = subprocess.run(
        [sys.executable, "-c", MEM_PROBE, "scan", "--config", str(cfg),
         "--workers", "1", "--out", str(out)],
        capture_output=True, text=True, timeout=600,
    )
    assert proc.returncode == 0, proc.stderr
    for line in proc.stdout.splitlines():
        if line.startswith("PEAK_KB="):
            return int(line.split("=")[1])
    raise AssertionError("no PEAK_KB line in output")


def test_streaming_memory_independent_of_corpus_size(tmp_path):
    """Peak RSS on a 10x larger corpus stays within 1.2x of the baseline."""
    def make_corpus(n_docs, name):
        path = tmp_path / name
        with open(path, "w") as fh:
            for i in range(n_docs):
                text = "hypertension " + " ".join(f"w{j}" for j in range(200)) + " black woman"
                fh.write(json.dumps({"text": text, "i": str(i)}) + "\n")
        return path

    small = make_corpus(2000, "small.jsonl")  # ~3 MB
    big = make_corpus(20000, "big.jsonl")  # ~30 MB, 10x
    cfg_s = write_config(tmp_path / "s", [{"label": "m", "paths": [str(small)]}])
    cfg_b = write_config(tmp_path / "b", [{"label": "m", "paths": [str(big)]}])

    peak_small = _run_scan_subprocess(cfg_s, tmp_path / "os")
    peak_big = _run_scan_subprocess(cfg_b, tmp_path / "ob")
    assert peak_big <= peak_small * 1.2, (peak_small, peak_big)
