from nl2gql.demo import ITEMS, build_bundle, bundle_dir


def test_committed_bundle_is_reproducible(tmp_path):
    report = build_bundle(tmp_path)
    src = bundle_dir()
    for name in ("eval.jsonl", "fixtures.jsonl", "config.json"):
        assert (tmp_path / name).read_bytes() == src.joinpath(name).read_bytes(), name
    assert report["n_total"] == len(ITEMS) == 12
    assert report["sa"] == 1.0
    wrong = [it["id"] for it in report["items"] if not it["correct"]]
    assert wrong == ["q12"]
