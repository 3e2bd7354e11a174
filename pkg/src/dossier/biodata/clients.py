"""Typed clients for the source registry.

One facade (`BioClient`) dispatches per-source request builders and
normalizers over a pluggable transport.  Sources whose registry tier is
fixture_only are always served from cassettes regardless of the configured
transport, so licensed or unstable endpoints can never be hit by accident.
All responses are cached per request hash for the lifetime of the client.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..core import Clock, SourceRef
from ..retrieval import SourceDocument
from .cassette import BiodataError, TransportResponse, canonical_url, request_key
from .fasta import parse_fasta
from .registry import REGISTRY

EUTILS = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"

# Computed locally; fetch_record must not pretend they are remote.
LOCAL_SOURCES = {
    "BLAST": "sequence similarity is computed locally via align_global",
    "GSEAPy": "enrichment is computed locally via enrich",
}


@dataclass(frozen=True)
class FetchResult:
    record: dict
    ref: SourceRef


class BioClient:
    def __init__(self, transport, replay_transport=None, clock: Clock | None = None):
        self.transport = transport
        self.replay = replay_transport or transport
        self.clock = clock or Clock()
        self._cache: dict[str, TransportResponse] = {}

    # -- plumbing ---------------------------------------------------------

    def _transport_for(self, source: str):
        if REGISTRY[source].access == "fixture_only":
            return self.replay
        return self.transport

    def _request(self, source: str, method: str, url: str, body: bytes | None = None) -> TransportResponse:
        key = request_key(method, url, body)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        response = self._transport_for(source).request(source, method, url, body)
        if response.status >= 400:
            snippet = response.body[:200].decode("utf-8", "replace")
            raise BiodataError(f"{source} rejected {method} {url}: {response.status} {snippet}")
        self._cache[key] = response
        return response

    def _get_json(self, source: str, url: str):
        return self._request(source, "GET", url).json()

    def _now(self) -> str:
        return self.clock.now().isoformat().replace("+00:00", "Z")

    def _ref(self, source: str, locator: str, detail: str | None = None) -> SourceRef:
        return SourceRef(source, locator, detail, retrieved_at=self._now())

    # -- uniform entry point ------------------------------------------------

    def fetch_record(self, source: str, query: dict) -> FetchResult:
        if source not in REGISTRY:
            raise BiodataError(f"unknown source: {source!r}")
        if source in LOCAL_SOURCES:
            raise BiodataError(f"{source}: {LOCAL_SOURCES[source]}")
        handler = getattr(self, f"_fetch_{_method_slug(source)}", None)
        if handler is None:
            raise BiodataError(f"no client implemented for {source!r}")
        return handler(dict(query))

    # -- UniProt ------------------------------------------------------------

    def _fetch_uniprot(self, query: dict) -> FetchResult:
        if "accession" in query:
            accession = query["accession"]
            url = f"https://rest.uniprot.org/uniprotkb/{accession}.fasta"
            text = self._request("UniProt", "GET", url).text
            records = parse_fasta(text)
            if not records:
                raise BiodataError(f"UniProt returned no FASTA for {accession}")
            rec = records[0]
            return FetchResult(
                record={"header": rec.header, "sequence": rec.sequence},
                ref=self._ref("UniProt", accession),
            )

        gene = query["gene"].upper()
        organism = str(query.get("organism", "9606"))
        url = canonical_url(
            "https://rest.uniprot.org/uniprotkb/search",
            {
                "fields": "accession,id,protein_name,sequence,cc_function,ft_carbohyd",
                "format": "json",
                "query": f"gene_exact:{gene} AND organism_id:{organism} AND reviewed:true",
                "size": 1,
            },
        )
        data = self._get_json("UniProt", url)
        results = data.get("results", [])
        if not results:
            raise BiodataError(f"UniProt has no reviewed entry for {gene} ({organism})")
        entry = results[0]
        accession = entry["primaryAccession"]
        function = ""
        for comment in entry.get("comments", []):
            if comment.get("commentType") == "FUNCTION":
                function = " ".join(t.get("value", "") for t in comment.get("texts", []))
                break
        glyco = [
            {
                "position": f.get("location", {}).get("start", {}).get("value"),
                "description": f.get("description", ""),
            }
            for f in entry.get("features", [])
            if f.get("type") == "Glycosylation"
        ]
        record = {
            "accession": accession,
            "entry_name": entry.get("uniProtkbId", ""),
            "protein_name": entry.get("proteinDescription", {})
            .get("recommendedName", {})
            .get("fullName", {})
            .get("value", ""),
            "sequence": entry.get("sequence", {}).get("value", ""),
            "function": function,
            "glycosylation": glyco,
        }
        return FetchResult(record, self._ref("UniProt", accession, detail=f"{gene}, taxon {organism}"))

    # -- Human Protein Atlas ---------------------------------------------------

    def _fetch_human_protein_atlas(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        search_url = canonical_url(
            "https://www.proteinatlas.org/api/search_download.php",
            {"search": gene, "format": "json", "columns": "g,eg"},
        )
        rows = self._get_json("Human Protein Atlas", search_url)
        if not rows:
            raise BiodataError(f"Human Protein Atlas has no entry for {gene}")
        ensembl = rows[0].get("Ensembl") or rows[0].get("eg")
        entry_url = f"https://www.proteinatlas.org/{ensembl}.json"
        entry = self._get_json("Human Protein Atlas", entry_url)

        antibody = entry.get("antibody") or entry.get("Antibody") or ""
        locations = entry.get("subcellular_locations") or entry.get("Subcellular main location") or []
        expression = entry.get("expression") or []
        images = []
        for info in entry.get("images", []):
            img = self._request("Human Protein Atlas", "GET", info["url"])
            media_type = img.content_type.split(";")[0] or "image/jpeg"
            images.append(
                {"cell_line": info.get("cell_line", ""), "media_type": media_type, "data": img.body}
            )
        record = {
            "gene": gene,
            "ensembl_id": ensembl,
            "antibody": antibody,
            "subcellular_locations": list(locations),
            "images": images,
            "expression": expression,
        }
        detail = f"Antigen: {antibody}" if antibody else None
        return FetchResult(record, self._ref("Human Protein Atlas", f"https://www.proteinatlas.org/{ensembl}", detail))

    # -- STRING -------------------------------------------------------------

    def _fetch_string(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        limit = int(query.get("limit", 100))
        species = str(query.get("species", "9606"))
        url = canonical_url(
            "https://string-db.org/api/json/interaction_partners",
            {"identifiers": gene, "limit": limit, "species": species},
        )
        rows = self._get_json("STRING", url)
        interactors = [
            {"symbol": r.get("preferredName_B", ""), "score": float(r.get("score", 0.0))}
            for r in rows
        ]
        interactors.sort(key=lambda r: (-r["score"], r["symbol"]))
        record = {"gene": gene, "interactors": interactors[:limit]}
        locator = f"https://string-db.org/cgi/network?identifiers={gene}"
        return FetchResult(record, self._ref("STRING", locator, detail=f"top {limit} partners"))

    # -- Open Targets ----------------------------------------------------------

    _OT_SEARCH = '{"query":"query($q:String!){search(queryString:$q,entityNames:[\\"target\\"]){hits{id name}}}","variables":{"q":"%s"}}'
    _OT_DRUGS = '{"query":"query($id:String!){target(ensemblId:$id){knownDrugs{rows{drug{name}phase mechanismOfAction disease{name}}}}}","variables":{"id":"%s"}}'

    def _fetch_open_targets(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        url = "https://api.platform.opentargets.org/api/v4/graphql"
        body = (self._OT_SEARCH % gene).encode()
        hits = self._request("Open Targets", "POST", url, body).json()
        rows = hits.get("data", {}).get("search", {}).get("hits", [])
        if not rows:
            raise BiodataError(f"Open Targets has no target for {gene}")
        target_id = rows[0]["id"]
        body = (self._OT_DRUGS % target_id).encode()
        drugs_data = self._request("Open Targets", "POST", url, body).json()
        drug_rows = (
            drugs_data.get("data", {})
            .get("target", {})
            .get("knownDrugs", {})
            .get("rows", [])
        )
        drugs = [
            {
                "drug": r.get("drug", {}).get("name", ""),
                "phase": r.get("phase"),
                "mechanism": r.get("mechanismOfAction", ""),
                "disease": r.get("disease", {}).get("name", ""),
            }
            for r in drug_rows
        ]
        record = {"gene": gene, "target_id": target_id, "known_drugs": drugs}
        locator = f"https://platform.opentargets.org/target/{target_id}"
        return FetchResult(record, self._ref("Open Targets", locator))

    # -- PubChem ---------------------------------------------------------------

    def _fetch_pubchem(self, query: dict) -> FetchResult:
        compound = query["compound"]
        url = (
            "https://pubchem.ncbi.nlm.nih.gov/rest/pug/compound/name/"
            f"{compound}/property/MolecularFormula,MolecularWeight,CanonicalSMILES/JSON"
        )
        data = self._get_json("PubChem", url)
        props = data.get("PropertyTable", {}).get("Properties", [])
        if not props:
            raise BiodataError(f"PubChem has no compound named {compound!r}")
        p = props[0]
        record = {
            "compound": compound,
            "cid": p.get("CID"),
            "formula": p.get("MolecularFormula", ""),
            "weight": p.get("MolecularWeight", ""),
            "smiles": p.get("CanonicalSMILES", ""),
        }
        locator = f"https://pubchem.ncbi.nlm.nih.gov/compound/{p.get('CID')}"
        return FetchResult(record, self._ref("PubChem", locator))

    # -- RCSB PDB ----------------------------------------------------------------

    def _fetch_rcsb_pdb(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        body = (
            '{"query":{"type":"terminal","service":"full_text","parameters":{"value":"%s"}},'
            '"return_type":"entry","request_options":{"paginate":{"start":0,"rows":10}}}' % gene
        ).encode()
        url = "https://search.rcsb.org/rcsbsearch/v2/query"
        data = self._request("RCSB PDB", "POST", url, body).json()
        ids = [r["identifier"] for r in data.get("result_set", [])]
        record = {"gene": gene, "structure_ids": ids, "total_count": data.get("total_count", len(ids))}
        locator = f"https://www.rcsb.org/search?q={gene}"
        return FetchResult(record, self._ref("RCSB PDB", locator, detail=f"{len(ids)} structures listed"))

    # -- cBioPortal ----------------------------------------------------------------

    def _fetch_cbioportal(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        keyword = query.get("disease_keyword", "")
        max_studies = int(query.get("max_studies", 3))
        gene_info = self._get_json("cBioPortal", f"https://www.cbioportal.org/api/genes/{gene}")
        entrez = gene_info["entrezGeneId"]
        studies_url = canonical_url(
            "https://www.cbioportal.org/api/studies",
            {"keyword": keyword, "pageSize": max_studies, "projection": "SUMMARY"},
        )
        studies = self._get_json("cBioPortal", studies_url)
        out = []
        for study in studies[:max_studies]:
            study_id = study["studyId"]
            mutations_url = canonical_url(
                f"https://www.cbioportal.org/api/molecular-profiles/{study_id}_mutations/mutations",
                {"entrezGeneId": entrez, "projection": "SUMMARY", "sampleListId": f"{study_id}_all"},
            )
            mutations = self._get_json("cBioPortal", mutations_url)
            mutated = len({m["sampleId"] for m in mutations})
            sample_list = self._get_json(
                "cBioPortal", f"https://www.cbioportal.org/api/sample-lists/{study_id}_all"
            )
            profiled = sample_list.get("sampleCount") or len(sample_list.get("sampleIds", []))
            out.append(
                {
                    "study_id": study_id,
                    "name": study.get("name", study_id),
                    "mutated_samples": mutated,
                    "profiled_samples": profiled,
                    "frequency": (mutated / profiled) if profiled else 0.0,
                }
            )
        record = {"gene": gene, "entrez_id": entrez, "studies": out}
        locator = f"https://www.cbioportal.org/results?gene_list={gene}"
        return FetchResult(record, self._ref("cBioPortal", locator))

    # -- NCBI Gene --------------------------------------------------------------

    def _fetch_gene(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        organism = query.get("organism", "human")
        search_url = canonical_url(
            f"{EUTILS}/esearch.fcgi",
            {"db": "gene", "retmode": "json", "term": f"{gene}[sym] AND {organism}[orgn]"},
        )
        found = self._get_json("Gene", search_url)
        ids = found.get("esearchresult", {}).get("idlist", [])
        if not ids:
            raise BiodataError(f"NCBI Gene has no entry for {gene} ({organism})")
        gene_id = ids[0]
        summary_url = canonical_url(
            f"{EUTILS}/esummary.fcgi", {"db": "gene", "id": gene_id, "retmode": "json"}
        )
        summary = self._get_json("Gene", summary_url)
        info = summary.get("result", {}).get(gene_id, {})
        record = {
            "gene_id": gene_id,
            "name": info.get("name", gene),
            "description": info.get("description", ""),
            "summary": info.get("summary", ""),
        }
        locator = f"https://www.ncbi.nlm.nih.gov/gene/{gene_id}"
        return FetchResult(record, self._ref("Gene", locator))

    # -- fixture-only sources -------------------------------------------------------

    def _fetch_drugbank(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        url = canonical_url("https://go.drugbank.com/api/v1/targets", {"gene": gene})
        data = self._get_json("DrugBank", url)
        record = {"gene": gene, "drugs": data.get("drugs", [])}
        return FetchResult(record, self._ref("DrugBank", url))

    def _fetch_esmo(self, query: dict) -> FetchResult:
        disease = query["disease"]
        url = canonical_url("https://www.esmo.org/guidelines/search", {"q": disease})
        data = self._get_json("ESMO", url)
        record = {
            "disease": disease,
            "title": data.get("title", ""),
            "year": data.get("year"),
            "recommendations": data.get("recommendations", []),
            "url": data.get("url", url),
        }
        return FetchResult(record, self._ref("ESMO", record["url"]))

    def _fetch_tcga_survival(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        cancer = query.get("cancer", "PAAD")
        url = canonical_url(
            "https://tcga-survival.com/api/v1/survival", {"cancer": cancer, "gene": gene}
        )
        data = self._get_json("TCGA Survival", url)
        record = {
            "gene": gene,
            "cohort": data.get("cohort", cancer),
            "groups": {
                name: [(float(t), bool(e)) for t, e in obs]
                for name, obs in data.get("groups", {}).items()
            },
        }
        return FetchResult(record, self._ref("TCGA Survival", url, detail=f"{cancer} cohort"))

    def _fetch_ogee(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        url = canonical_url("https://v3.ogee.info/api/gene", {"symbol": gene})
        data = self._get_json("OGEE", url)
        record = {
            "gene": gene,
            "essential_in": data.get("essential_in", 0),
            "tested_in": data.get("tested_in", 0),
            "summary": data.get("summary", ""),
        }
        return FetchResult(record, self._ref("OGEE", url))

    def _fetch_signor(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        url = canonical_url(
            "https://signor.uniroma2.it/getData.php", {"entity": gene, "format": "json"}
        )
        data = self._get_json("SIGNOR", url)
        record = {"gene": gene, "edges": data.get("edges", [])}
        return FetchResult(record, self._ref("SIGNOR", f"https://signor.uniroma2.it/relation_result.php?id={gene}"))

    def _fetch_deeptmhmm(self, query: dict) -> FetchResult:
        gene = query["gene"].upper()
        url = canonical_url("https://dtu.biolib.com/DeepTMHMM/api/predict", {"gene": gene})
        data = self._get_json("DeepTMHMM", url)
        record = {
            "gene": gene,
            "topology": data.get("topology", ""),
            "helices": data.get("helices", 0),
            "summary": data.get("summary", ""),
        }
        return FetchResult(record, self._ref("DeepTMHMM", url))

    # -- literature corpus ------------------------------------------------------------

    def pubmed_corpus(
        self, query: str, max_docs: int = 50, max_fulltext: int = 2
    ) -> tuple[list[SourceDocument], SourceRef, list[str]]:
        """Search PubMed and PMC, fetch abstracts and available full texts.

        Returns the documents (truncated to max_docs, abstracts first), a
        reference for the search itself, and any warnings.
        """
        warnings: list[str] = []
        search_url = canonical_url(
            f"{EUTILS}/esearch.fcgi",
            {"db": "pubmed", "retmode": "json", "retmax": max_docs, "term": query, "sort": "relevance"},
        )
        found = self._get_json("PubMed", search_url)
        pmids = found.get("esearchresult", {}).get("idlist", [])

        docs: list[SourceDocument] = []
        if pmids:
            fetch_url = canonical_url(
                f"{EUTILS}/efetch.fcgi",
                {"db": "pubmed", "id": ",".join(pmids), "retmode": "xml", "rettype": "abstract"},
            )
            xml_text = self._request("PubMed", "GET", fetch_url).text
            docs.extend(_parse_pubmed_xml(xml_text))
        else:
            warnings.append(f"PubMed search returned no results for {query!r}")

        if max_fulltext > 0:
            pmc_search = canonical_url(
                f"{EUTILS}/esearch.fcgi",
                {
                    "db": "pmc",
                    "retmode": "json",
                    "retmax": max_fulltext,
                    "term": f"{query} AND open access[filter]",
                },
            )
            pmc_found = self._get_json("PMC", pmc_search)
            pmc_ids = pmc_found.get("esearchresult", {}).get("idlist", [])
            if pmc_ids:
                pmc_fetch = canonical_url(
                    f"{EUTILS}/efetch.fcgi",
                    {"db": "pmc", "id": ",".join(pmc_ids), "retmode": "xml"},
                )
                xml_text = self._request("PMC", "GET", pmc_fetch).text
                docs.extend(_parse_pmc_xml(xml_text))

        docs = docs[:max_docs]
        if not docs:
            warnings.append(f"no documents found for {query!r}")
        ref = self._ref("PubMed", search_url, detail=f"query: {query}")
        return docs, ref, warnings


def _method_slug(source: str) -> str:
    return source.lower().replace(" ", "_")


def _parse_pubmed_xml(xml_text: str) -> list[SourceDocument]:
    root = ET.fromstring(xml_text)
    docs = []
    for article in root.iter("PubmedArticle"):
        pmid = article.findtext(".//PMID", default="").strip()
        title = " ".join((article.findtext(".//ArticleTitle") or "").split())
        abstract_parts = [
            "".join(node.itertext()).strip() for node in article.findall(".//AbstractText")
        ]
        abstract = " ".join(p for p in abstract_parts if p)
        if pmid and abstract:
            docs.append(SourceDocument(doc_id=pmid, kind="abstract", text=abstract, title=title))
    return docs


def _parse_pmc_xml(xml_text: str) -> list[SourceDocument]:
    root = ET.fromstring(xml_text)
    docs = []
    for article in root.iter("article"):
        pmc_id = ""
        for aid in article.findall(".//article-id"):
            if aid.get("pub-id-type") == "pmc":
                pmc_id = (aid.text or "").strip()
                break
        title = " ".join((article.findtext(".//article-title") or "").split())
        body = article.find(".//body")
        paragraphs = []
        if body is not None:
            for p in body.iter("p"):
                text = " ".join("".join(p.itertext()).split())
                if text:
                    paragraphs.append(text)
        text = " ".join(paragraphs)
        if pmc_id and text:
            doc_id = pmc_id if pmc_id.startswith("PMC") else f"PMC{pmc_id}"
            docs.append(SourceDocument(doc_id=doc_id, kind="fulltext", text=text, title=title))
    return docs
