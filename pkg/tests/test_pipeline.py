import json
import os

import pytest

from kglp.cli import main
from kglp.errors import ConfigError, UnknownRelationError
from kglp.graph import KnowledgeGraph, Triple
from kglp.pipeline import (
    PipelineConfig,
    display_name,
    local_name,
    mean_fold_metrics,
    resolve_relation,
    run_pipeline,
)

EX = "http://example.org/"


def base_config(fixture_path, tmp_path, **overrides):
    doc = {
        "edges_tsv": fixture_path,
        "dims": [5],
        "folds": 5,
        "seed": 77,
        "out": str(tmp_path / "out"),
    }
    doc.update(overrides)
    return PipelineConfig.from_dict(doc)


# -- config ------------------------------------------------------------


def test_config_requires_an_input(tmp_path):
    with pytest.raises(ConfigError) as err:
        PipelineConfig(out=str(tmp_path)).validate()
    assert err.value.field == "triples"


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError) as err:
        PipelineConfig.from_dict({"tripels": "x"})
    assert err.value.field == "tripels"


@pytest.mark.parametrize(
    "overrides,field",
    [
        ({"dims": []}, "dims"),
        ({"dims": [0]}, "dims"),
        ({"folds": 1}, "folds"),
        ({"classifier": "svm"}, "classifier"),
        ({"hidden": [0]}, "hidden"),
        ({"threads": 0}, "threads"),
        ({"operator": "bad"}, "operator"),
        ({"learning_rate": -0.1}, "learning_rate"),
        ({"loss": "bad"}, "loss"),
        ({"negatives_per_positive": 0}, "negatives_per_positive"),
        ({"margin": -1}, "margin"),
        ({"out": ""}, "out"),
    ],
)
def test_config_validation_names_the_field(fixture_path, tmp_path, overrides, field):
    config = base_config(fixture_path, tmp_path, **overrides)
    with pytest.raises(ConfigError) as err:
        config.validate()
    assert err.value.field == field


def test_config_missing_path_is_flagged(tmp_path):
    config = PipelineConfig(edges_tsv=str(tmp_path / "nope.tsv"), out="o")
    with pytest.raises(ConfigError) as err:
        config.validate()
    assert err.value.field == "edges_tsv"


def test_config_from_json_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.from_json(str(tmp_path / "missing.json"))


def test_config_hash_ignores_out_dir(fixture_path, tmp_path):
    a = base_config(fixture_path, tmp_path / "a")
    b = base_config(fixture_path, tmp_path / "b")
    assert a.config_hash() == b.config_hash()
    c = base_config(fixture_path, tmp_path / "c", seed=78)
    assert a.config_hash() != c.config_hash()


def test_seed_resolution_env(fixture_path, tmp_path, monkeypatch):
    config = base_config(fixture_path, tmp_path)
    config.seed = None
    monkeypatch.setenv("KGLP_SEED", "4242")
    assert config.resolved_seed() == 4242
    monkeypatch.delenv("KGLP_SEED")
    assert config.resolved_seed() == 0
    config.seed = 9
    monkeypatch.setenv("KGLP_SEED", "4242")
    assert config.resolved_seed() == 9


# -- name resolution ----------------------------------------------------


def test_local_name():
    assert local_name("http://example.org/rel/links-to") == "links-to"
    assert local_name("http://example.org/ns#has-part") == "has-part"


def test_display_name_override():
    names = {"http://x/r1": "pretty"}
    assert display_name("http://x/r1", names) == "pretty"
    assert display_name("http://x/r2", names) == "r2"


def test_resolve_relation_variants():
    kg = KnowledgeGraph()
    kg.add_triple(Triple(EX + "a", EX + "rel/r1", EX + "b"))
    assert resolve_relation(kg, EX + "rel/r1") == EX + "rel/r1"
    assert resolve_relation(kg, "r1") == EX + "rel/r1"
    with pytest.raises(UnknownRelationError):
        resolve_relation(kg, "nope")


def test_resolve_relation_ambiguity():
    kg = KnowledgeGraph()
    kg.add_triple(Triple(EX + "a", EX + "one/r", EX + "b"))
    kg.add_triple(Triple(EX + "c", EX + "two/r", EX + "d"))
    with pytest.raises(UnknownRelationError):
        resolve_relation(kg, "r")


# -- run_pipeline -------------------------------------------------------


def test_run_pipeline_outputs(fixture_path, tmp_path):
    config = base_config(fixture_path, tmp_path)
    summary = run_pipeline(config)
    out = config.out
    for name in [
        "effective-config.json",
        "manifest.json",
        "edges.tsv",
        "flattened.tsv",
        "stats.json",
        "metrics.csv",
        "summary.json",
    ]:
        assert os.path.exists(os.path.join(out, name)), name
    assert summary["seed"] == 77
    assert summary["faithful_protocol"]
    assert "links-to" in summary["relations"]
    assert summary["relations_not_in_baseline"] == ["links-to"]
    assert summary["deltas"] == []
    metrics = mean_fold_metrics(summary)
    assert ("links-to", 5) in metrics
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert [s["stage"] for s in manifest["stages"]] == [
        "ingest",
        "flatten",
        "stats",
        "evaluate",
        "report",
    ]
    effective = json.load(open(os.path.join(out, "effective-config.json")))
    assert effective["seed"] == 77


def test_run_pipeline_writes_delta_report_for_baseline_names(fixture_path, tmp_path):
    config = base_config(
        fixture_path,
        tmp_path,
        relation_names={"http://example.org/rel/links-to": "has-indication"},
    )
    summary = run_pipeline(config)
    assert summary["relations_not_in_baseline"] == []
    assert len(summary["deltas"]) == 1
    assert summary["deltas"][0]["relation"] == "has-indication"
    assert os.path.exists(os.path.join(config.out, "report.txt"))


def test_run_pipeline_triples_input(tmp_path):
    triples = tmp_path / "input.nt"
    lines = ["# tiny graph"]
    for i in range(12):
        lines.append(f"<{EX}s{i}> <{EX}rel/r> <{EX}o{i}> .")
    triples.write_text("\n".join(lines) + "\n")
    config = PipelineConfig.from_dict(
        {
            "triples": str(triples),
            "dims": [3],
            "folds": 3,
            "seed": 5,
            "epochs": 2,
            "out": str(tmp_path / "out"),
        }
    )
    summary = run_pipeline(config)
    assert "r" in summary["relations"]


# -- CLI ----------------------------------------------------------------


def test_cli_run_exit_zero(fixture_path, tmp_path, capsys):
    code = main(
        [
            "run",
            "--tsv",
            fixture_path,
            "--dims",
            "5",
            "--folds",
            "5",
            "--seed",
            "3",
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert code == 0
    assert "pipeline finished" in capsys.readouterr().out


def test_cli_exit_2_on_config_error(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)]) == 2
    assert "error[config]" in capsys.readouterr().err


def test_cli_exit_3_on_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("only\ttwo\n")
    assert main(["stats", "--tsv", str(bad)]) == 3
    assert "error[ingest]" in capsys.readouterr().err


def test_cli_exit_4_on_planted_leak(fixture_path, tmp_path, capsys):
    out = tmp_path / "stages"
    assert main(["ingest", "--tsv", fixture_path, "--out", str(out)]) == 0
    assert (
        main(
            [
                "split",
                "--tsv",
                str(out / "edges.tsv"),
                "--relation",
                "links-to",
                "--folds",
                "5",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    split_path = out / "split-links-to-fold0.tsv"
    lines = split_path.read_text().splitlines(True)
    leak = next(l for l in lines if l.startswith("test_pos"))
    tampered = out / "leaky.tsv"
    tampered.write_text("".join(lines) + "train_pos" + leak[len("test_pos"):])

    assert (
        main(
            [
                "embed",
                "--tsv",
                str(out / "edges.tsv"),
                "--split",
                str(split_path),
                "--dim",
                "4",
                "--epochs",
                "2",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    capsys.readouterr()
    code = main(
        [
            "classify",
            "--tsv",
            str(out / "edges.tsv"),
            "--split",
            str(tampered),
            "--embeddings",
            str(out / "embeddings-d4.txt"),
            "--out",
            str(out / "clf"),
        ]
    )
    err = capsys.readouterr().err
    assert code == 4
    assert "leakage audit failed" in err
    # the offending edge is named by IRI
    leaked_subject = leak.split("\t")[2]
    assert leaked_subject in err


def test_cli_stage_chain_and_evaluate(fixture_path, tmp_path, capsys):
    out = tmp_path / "chain"
    assert main(["ingest", "--tsv", fixture_path, "--out", str(out)]) == 0
    assert main(["flatten", "--tsv", str(out / "edges.tsv"), "--out", str(out)]) == 0
    assert (
        main(
            [
                "split",
                "--tsv",
                str(out / "flattened.tsv"),
                "--relation",
                "links-to",
                "--seed",
                "4",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "embed",
                "--tsv",
                str(out / "flattened.tsv"),
                "--split",
                str(out / "split-links-to-fold0.tsv"),
                "--dim",
                "6",
                "--epochs",
                "5",
                "--seed",
                "4",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "classify",
                "--tsv",
                str(out / "flattened.tsv"),
                "--split",
                str(out / "split-links-to-fold0.tsv"),
                "--embeddings",
                str(out / "embeddings-d6.txt"),
                "--classifier",
                "logreg",
                "--seed",
                "4",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    capsys.readouterr()
    assert (
        main(["evaluate", "--predictions", str(out / "predictions.tsv")]) == 0
    )
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["n"] == 80  # 40 test positives + 40 test negatives
    assert 0.0 <= doc["rows"][0]["roc_auc"] <= 1.0


def test_cli_report_subcommand(tmp_path, capsys):
    from kglp.metrics import MetricRow, write_metrics_csv

    rows = [
        MetricRow("has-indication", 50, f, 0.999, 0.999) for f in range(5)
    ] + [MetricRow("mystery", 50, f, 0.5, 0.5) for f in range(5)]
    path = tmp_path / "metrics.csv"
    write_metrics_csv(rows, path)
    assert main(["report", "--metrics", str(path), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "+0.279" in out
    assert "mystery" in out
    report = json.load(open(tmp_path / "report.json"))
    assert report["relations_not_in_baseline"] == ["mystery"]


def test_cli_env_seed(fixture_path, tmp_path, monkeypatch):
    monkeypatch.setenv("KGLP_SEED", "9090")
    out = tmp_path / "envseed"
    assert (
        main(
            [
                "run",
                "--tsv",
                fixture_path,
                "--dims",
                "4",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    effective = json.load(open(out / "effective-config.json"))
    assert effective["seed"] == 9090


def test_cli_prefix_flag_and_triples(tmp_path):
    triples = tmp_path / "in.nt"
    body = ["ex:s{0} ex:r ex:o{0} .".format(i) for i in range(10)]
    triples.write_text("\n".join(body) + "\n")
    out = tmp_path / "o"
    code = main(
        [
            "run",
            "--triples",
            str(triples),
            "--prefix",
            f"ex={EX}",
            "--dims",
            "3",
            "--folds",
            "3",
            "--seed",
            "1",
            "--out",
            str(out),
        ]
    )
    assert code == 0
