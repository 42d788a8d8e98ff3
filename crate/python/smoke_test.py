"""Smoke test for the mskg extension module.

Run after `pip install --no-build-isolation -e crates/py` (or `maturin develop`).
"""

import math
import pathlib
import sys
import tempfile

import mskg

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    g = mskg.Graph.sample()
    assert g.node_count > 0 and g.edge_count > 0, g
    stats = g.stats()
    assert dict(stats["labels"])["Manufacturer"] == 12, stats

    table = g.query("MATCH (m:Manufacturer) RETURN count(m)")
    assert table["rows"] == [[12]], table

    try:
        g.query("MATCH (m:Nope) RETURN m")
    except mskg.MskgError:
        pass
    else:
        raise AssertionError("bad label accepted")

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "graph.jsonl"
        path.write_text(g.export())
        again = mskg.Graph.load(str(path))
        assert (again.node_count, again.edge_count) == (g.node_count, g.edge_count)

        emb = mskg.Embeddings.train(g, dim=8, walk_length=10, walks_per_node=5, window=3, epochs=2, seed=1)
        emb_path = pathlib.Path(tmp) / "n2v.tsv"
        emb.save(str(emb_path))
        loaded = mskg.Embeddings.load(str(emb_path))
        assert loaded.ids == emb.ids and loaded.dim == 8
        assert all(math.isfinite(v) for v in loaded.get(emb.ids[0]))

    sage = mskg.Embeddings.train(g, method="graphsage", dim=8, seed=1)
    assert sage.method == "graphsage"

    clf, report = mskg.Classifier.train(g, emb, epochs=10)
    assert "train" in report
    probs = clf.probabilities(emb.get(g.ids("Manufacturer")[0]))
    assert len(probs) == 10 and all(0.0 <= p <= 1.0 for p in probs)

    engine = mskg.Engine(g, node2vec=emb, graphsage=sage, classifier=clf)
    answer = engine.answer("How many manufacturers located in Michigan, provide welding but not certified with AWS?")
    assert answer["intent"]["kind"] == "graph_query", answer
    assert answer["table"]["rows"] == [[2]], answer

    target = g.ids("Manufacturer")[0]
    ranking = engine.recommend(target, k=3)
    assert ranking[0] == (target, 1.0) and len(ranking) == 3, ranking

    auc_roc, _ = mskg.roc_auc([0.9, 0.8, 0.3, 0.1], [True, False, True, False])
    assert abs(auc_roc - 0.75) < 1e-12, auc_roc
    assert mskg.mrr([[False, True], [True]]) == 0.75

    report = mskg.evaluate_corpus(str(ROOT / "crates" / "core" / "fixtures" / "corpus"))
    rates = report["overall"]["rates"]
    assert rates["precision"] >= 0.9 and rates["recall"] >= 0.85, rates

    print("smoke test ok:", g)
    return 0


if __name__ == "__main__":
    sys.exit(main())
