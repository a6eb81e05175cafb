import pytest

from sbsearch.container import (
    build_index,
    inspect_index,
    load_index,
    parse_header,
    save_index,
    serialize_index,
)
from sbsearch.ingest import ingest_jsonl, load_collection, save_collection
from sbsearch.retrieval import safe_config, search
from sbsearch.synthetic import random_collection, random_queries, write_jsonl


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    col = random_collection(300, vocab=120, avg_terms=10, seed=61)
    idx = build_index(col, b=8, c=4, bits=4, with_avg=True, doc_format="compact")
    path = tmp_path_factory.mktemp("idx") / "test.lspi"
    save_index(idx, path)
    return col, idx, path


class TestContainer:
    def test_header_round_trip(self, built):
        _, idx, path = built
        head = parse_header(path.read_bytes())
        assert head["b"] == 8 and head["c"] == 4
        assert head["num_docs"] == 300
        assert head["num_blocks"] == idx.layout.num_blocks
        assert head["num_superblocks"] == idx.layout.num_superblocks
        assert head["bits_block"] == 4 and head["bits_superblock"] == 4
        assert head["doc_format"] == "compact"
        assert head["has_avg_store"] is True

    def test_byte_identical_reserialization(self, built):
        _, idx, path = built
        loaded = load_index(path)
        assert serialize_index(loaded) == path.read_bytes()

    def test_loaded_index_searches_identically(self, built):
        col, idx, path = built
        loaded = load_index(path)
        cfg = safe_config(15)
        queries = random_queries(10, vocab=120, terms_per_query=5, seed=62)
        for _qid, q in queries:
            assert search(q, loaded, cfg) == search(q, idx, cfg)

    def test_inspect_sizes_sum(self, built):
        _, _, path = built
        info = inspect_index(path)
        assert info["section_total"] == info["file_size"] - info["header_len"]
        names = {s["name"] for s in info["sections"]}
        assert names == {"superblock-max-store", "superblock-avg-store", "block-store",
                         "doc-index", "doc-id-map"}

    def test_avg_section_absent_without_flag(self, tmp_path):
        col = random_collection(50, vocab=30, avg_terms=5, seed=63)
        idx = build_index(col, b=4, c=2, with_avg=False)
        path = tmp_path / "noavg.lspi"
        save_index(idx, path)
        info = inspect_index(path)
        assert info["has_avg_store"] is False
        assert all(s["name"] != "superblock-avg-store" for s in info["sections"])
        assert load_index(path).sb_avg_store is None

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bogus"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_index(path)


class TestIngest:
    def test_string_terms_share_ids(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text(
            '{"id": "a", "vector": {"apple": 3, "pear": 1}}\n'
            '{"id": "b", "vector": {"pear": 2}}\n'
        )
        col = ingest_jsonl(path)
        assert col.vocab is not None
        pear = col.vocab["pear"]
        assert pear in col.vectors[0].terms and pear in col.vectors[1].terms
        # global_max=3 so pear's weights 1 and 2 land at levels 85 and 170
        assert dict(col.vectors[0].pairs())[pear] == 85
        assert dict(col.vectors[1].pairs())[pear] == 170

    def test_negative_weight_rejected(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": "a", "vector": {"1": -1}}\n')
        with pytest.raises(ValueError, match="negative"):
            ingest_jsonl(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": "a", "vector": {"1": 1}}\n{"id": "a", "vector": {"2": 1}}\n')
        with pytest.raises(ValueError, match="duplicate"):
            ingest_jsonl(path)

    def test_vocabulary_overflow_rejected(self, tmp_path):
        import json

        path = tmp_path / "docs.jsonl"
        vector = {f"t{i}": 1 for i in range(65_537)}
        path.write_text(json.dumps({"id": "a", "vector": vector}) + "\n")
        with pytest.raises(ValueError, match="overflow"):
            ingest_jsonl(path, vocab_policy="intern")

    def test_integer_term_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": "a", "vector": {"70000": 1}}\n')
        with pytest.raises(ValueError, match="outside"):
            ingest_jsonl(path, vocab_policy="integer")

    def test_collection_binary_round_trip(self, tmp_path):
        col = random_collection(40, vocab=25, avg_terms=6, seed=64)
        docs_path = tmp_path / "docs.jsonl"
        write_jsonl(docs_path, list(zip(col.ext_ids, col.vectors)))
        ingested = ingest_jsonl(docs_path, vocab_policy="integer")
        bin_path = tmp_path / "col.lspc"
        save_collection(ingested, bin_path)
        back = load_collection(bin_path)
        assert back.ext_ids == ingested.ext_ids
        assert back.params == ingested.params
        for va, vb in zip(back.vectors, ingested.vectors):
            assert va.pairs() == vb.pairs()

    def test_integer_quantization_round_trips_values(self, tmp_path):
        # when the realized max weight is 255 the 8-bit quantizer is the identity
        docs_path = tmp_path / "docs.jsonl"
        docs_path.write_text(
            '{"id": "a", "vector": {"1": 255, "2": 10}}\n'
            '{"id": "b", "vector": {"3": 128}}\n'
        )
        ingested = ingest_jsonl(docs_path, vocab_policy="integer")
        assert ingested.params.global_max == 255.0
        assert ingested.vectors[0].pairs() == [(1, 255), (2, 10)]
        assert ingested.vectors[1].pairs() == [(3, 128)]
