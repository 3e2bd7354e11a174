import json

import pytest

from dossier.biodata.cassette import (
    BiodataError,
    CassetteMissError,
    CassetteStore,
    RateLimiter,
    RecordingTransport,
    ReplayTransport,
    TransportResponse,
    canonical_url,
    request_key,
    source_slug,
)
from dossier.biodata.clients import BioClient
from dossier.biodata.registry import FIXTURE_ONLY_SOURCES, LIVE_SOURCES, REGISTRY
from dossier.config import RunConfig
from dossier.core import SOURCE_NAMES, FixedClock

CLOCK = FixedClock("2025-06-01T00:00:00+00:00")


def offline_client():
    cfg = RunConfig()
    replay = ReplayTransport(CassetteStore(cfg.fixtures_dir))
    return BioClient(replay, clock=CLOCK)


class TestRegistry:
    def test_all_table_sources_present_once(self):
        assert set(REGISTRY) == SOURCE_NAMES
        assert len(REGISTRY) == 18

    def test_access_tiers_partition(self):
        assert LIVE_SOURCES | FIXTURE_ONLY_SOURCES == SOURCE_NAMES
        assert not LIVE_SOURCES & FIXTURE_ONLY_SOURCES
        assert "DrugBank" in FIXTURE_ONLY_SOURCES
        assert "UniProt" in LIVE_SOURCES


class TestCassettePlumbing:
    def test_canonical_url_sorts_params(self):
        a = canonical_url("https://x/api", {"b": 2, "a": 1})
        b = canonical_url("https://x/api", {"a": 1, "b": 2})
        assert a == b == "https://x/api?a=1&b=2"

    def test_request_key_includes_body(self):
        k1 = request_key("POST", "https://x", b"one")
        k2 = request_key("POST", "https://x", b"two")
        assert k1 != k2
        assert len(k1) == 64

    def test_source_slug(self):
        assert source_slug("Human Protein Atlas") == "human_protein_atlas"
        assert source_slug("RCSB PDB") == "rcsb_pdb"

    def test_record_then_replay(self, tmp_path):
        store = CassetteStore(tmp_path)
        url = "https://example.org/api?x=1"
        key = request_key("GET", url)
        store.record("UniProt", key, "GET", url,
                     TransportResponse(200, "application/json", b'{"ok": true}'))
        replay = ReplayTransport(CassetteStore(tmp_path))
        response = replay.request("UniProt", "GET", url)
        assert response.json() == {"ok": True}

    def test_rerecord_overwrites_by_key(self, tmp_path):
        store = CassetteStore(tmp_path)
        url = "https://example.org/api"
        key = request_key("GET", url)
        store.record("UniProt", key, "GET", url, TransportResponse(200, "t", b"v1"))
        store.record("UniProt", key, "GET", url, TransportResponse(200, "t", b"v2"))
        assert store.keys("UniProt") == [key]
        assert CassetteStore(tmp_path).lookup("UniProt", key).body == b"v2"

    def test_miss_names_key_and_url(self, tmp_path):
        replay = ReplayTransport(CassetteStore(tmp_path))
        url = "https://example.org/missing"
        with pytest.raises(CassetteMissError) as err:
            replay.request("UniProt", "GET", url)
        assert request_key("GET", url) in str(err.value)
        assert url in str(err.value)

    def test_cassette_format_fields(self, tmp_path):
        store = CassetteStore(tmp_path)
        url = "https://example.org/api"
        store.record("STRING", request_key("GET", url), "GET", url,
                     TransportResponse(200, "application/json", b"{}"))
        line = (tmp_path / "string.jsonl").read_text().strip()
        entry = json.loads(line)
        assert set(entry) == {"key", "request", "response"}
        assert set(entry["request"]) == {"method", "url"}
        assert set(entry["response"]) == {"status", "content_type", "body_b64"}

    def test_recording_transport_delegates_and_stores(self, tmp_path):
        class Inner:
            def request(self, source, method, url, body=None):
                return TransportResponse(200, "application/json", b'{"n": 1}')

        store = CassetteStore(tmp_path)
        transport = RecordingTransport(Inner(), store)
        response = transport.request("UniProt", "GET", "https://x/api")
        assert response.json() == {"n": 1}
        assert len(store.keys("UniProt")) == 1


class TestRateLimiter:
    def test_no_sleep_under_capacity(self):
        sleeps = []
        clock = [0.0]
        limiter = RateLimiter(sleep=sleeps.append, now=lambda: clock[0])
        limiter.acquire("STRING", rate=2.0)
        assert sleeps == []

    def test_sleeps_when_bucket_empty(self):
        sleeps = []
        clock = [0.0]

        def fake_sleep(duration):
            sleeps.append(duration)
            clock[0] += duration

        limiter = RateLimiter(sleep=fake_sleep, now=lambda: clock[0])
        for _ in range(3):
            limiter.acquire("STRING", rate=1.0)
        assert len(sleeps) == 2
        assert all(s == pytest.approx(1.0) for s in sleeps)


class TestFetchRecords:
    def test_uniprot_entry(self, no_network):
        client = offline_client()
        result = client.fetch_record("UniProt", {"gene": "KRAS"})
        assert result.record["accession"] == "P01116"
        assert len(result.record["sequence"]) == 188
        assert result.record["function"]
        assert result.ref.source_name == "UniProt"
        assert result.ref.locator == "P01116"

    def test_uniprot_fasta_fixture(self, no_network):
        client = offline_client()
        result = client.fetch_record("UniProt", {"accession": "P01116"})
        assert result.record["header"].startswith("sp|")
        assert result.record["sequence"].startswith("MTEYK")

    def test_string_top_100_sorted(self, no_network):
        client = offline_client()
        result = client.fetch_record("STRING", {"gene": "KRAS", "limit": 100})
        interactors = result.record["interactors"]
        assert len(interactors) == 100
        scores = [i["score"] for i in interactors]
        assert scores == sorted(scores, reverse=True)

    def test_hpa_images_and_antibody(self, no_network):
        client = offline_client()
        result = client.fetch_record("Human Protein Atlas", {"gene": "KRAS"})
        assert len(result.record["images"]) >= 1
        assert result.record["antibody"] == "HPA072761"
        assert all(i["data"].startswith(b"\xff\xd8") for i in result.record["images"])
        assert "Antigen: HPA072761" in result.ref.detail

    def test_cbioportal_frequencies(self, no_network):
        client = offline_client()
        result = client.fetch_record("cBioPortal", {"gene": "KRAS", "disease_keyword": "pancreatic"})
        for study in result.record["studies"]:
            assert study["frequency"] == study["mutated_samples"] / study["profiled_samples"]

    def test_fixture_only_source_served_from_replay_even_when_live(self, no_network, tmp_path):
        # a live-mode client with an empty live transport must still replay DrugBank
        class ExplodingTransport:
            def request(self, *a, **k):
                raise AssertionError("live transport must not serve fixture_only sources")

        cfg = RunConfig()
        replay = ReplayTransport(CassetteStore(cfg.fixtures_dir))
        client = BioClient(ExplodingTransport(), replay_transport=replay, clock=CLOCK)
        result = client.fetch_record("DrugBank", {"gene": "KRAS"})
        assert result.record["drugs"]

    def test_local_computations_refused(self):
        client = offline_client()
        with pytest.raises(BiodataError, match="computed locally"):
            client.fetch_record("BLAST", {"gene": "KRAS"})
        with pytest.raises(BiodataError, match="computed locally"):
            client.fetch_record("GSEAPy", {"gene": "KRAS"})

    def test_unknown_source_rejected(self):
        client = offline_client()
        with pytest.raises(BiodataError, match="unknown source"):
            client.fetch_record("Wikipedia", {})

    def test_every_ref_matches_queried_source(self, no_network):
        client = offline_client()
        for source, query in [
            ("UniProt", {"gene": "KRAS"}),
            ("STRING", {"gene": "KRAS", "limit": 100}),
            ("Human Protein Atlas", {"gene": "KRAS"}),
            ("Open Targets", {"gene": "KRAS"}),
            ("RCSB PDB", {"gene": "KRAS"}),
            ("cBioPortal", {"gene": "KRAS", "disease_keyword": "pancreatic"}),
            ("Gene", {"gene": "KRAS"}),
            ("DrugBank", {"gene": "KRAS"}),
            ("ESMO", {"disease": "pancreatic cancer"}),
            ("TCGA Survival", {"gene": "KRAS", "cancer": "PAAD"}),
            ("OGEE", {"gene": "KRAS"}),
            ("SIGNOR", {"gene": "KRAS"}),
            ("DeepTMHMM", {"gene": "KRAS"}),
        ]:
            result = client.fetch_record(source, query)
            assert result.ref.source_name == source
            assert result.ref.locator

    def test_replay_is_byte_identical(self, no_network):
        records = []
        for _ in range(2):
            client = offline_client()
            result = client.fetch_record("UniProt", {"gene": "KRAS"})
            records.append(json.dumps(result.record, sort_keys=True))
        assert records[0] == records[1]

    def test_response_cache_dedupes(self, no_network):
        calls = []
        cfg = RunConfig()
        inner = ReplayTransport(CassetteStore(cfg.fixtures_dir))

        class Counting:
            def request(self, *args, **kwargs):
                calls.append(args)
                return inner.request(*args, **kwargs)

        client = BioClient(Counting(), clock=CLOCK)
        client.fetch_record("STRING", {"gene": "KRAS", "limit": 100})
        client.fetch_record("STRING", {"gene": "KRAS", "limit": 100})
        assert len(calls) == 1


class TestPubmedCorpus:
    def test_fixture_query_yields_pmids(self, no_network):
        client = offline_client()
        docs, ref, warnings = client.pubmed_corpus(
            "Can you describe the PDAC escape mechanisms?", max_docs=50, max_fulltext=2
        )
        assert docs
        assert all(d.doc_id.isdigit() or d.doc_id.startswith("PMC") for d in docs)
        abstracts = [d for d in docs if d.kind == "abstract"]
        assert all(d.doc_id.isdigit() for d in abstracts)
        assert ref.source_name == "PubMed"
        assert warnings == []

    def test_max_docs_one(self, no_network):
        client = offline_client()
        docs, _, _ = client.pubmed_corpus(
            "Can you describe the PDAC escape mechanisms?", max_docs=1, max_fulltext=0
        )
        assert len(docs) == 1

    def test_error_status_surfaces_endpoint_message(self, tmp_path):
        url = canonical_url(
            "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi",
            {"db": "pubmed", "retmode": "json", "retmax": 5, "term": "bad query",
             "sort": "relevance"},
        )
        store = CassetteStore(tmp_path)
        store.record("PubMed", request_key("GET", url), "GET", url,
                     TransportResponse(400, "application/json", b'{"error": "invalid term"}'))
        client = BioClient(ReplayTransport(store), clock=CLOCK)
        with pytest.raises(BiodataError, match="invalid term"):
            client.pubmed_corpus("bad query", max_docs=5, max_fulltext=0)
