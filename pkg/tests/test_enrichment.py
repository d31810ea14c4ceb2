from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from docfuzz.doc_parser import ParamDescription, RawApiDoc, parse_doc, parse_signature
from docfuzz.enrichment import (
    CorpusInference,
    ExternalLlm,
    ParamCorpus,
    build_param_corpus,
    enrich_poorly_documented,
    infer_param_spec,
    normalize_param_name,
    render_llm_prompt,
    standardize_well_documented,
)
from docfuzz.schema import (
    ChannelSetDim,
    DependencyKind,
    DescriptionSpec,
    FixedDim,
    GRAY_IMAGE_SIZE,
    ParamInfo,
    POINTS_SIZE,
    Provenance,
    RGB_IMAGE_SIZE,
    StandardizedApiInfo,
    VarDim,
    info_to_obj,
    validate,
)
from docfuzz.values import EnumVal, IntVal, ScalarType

from .test_doc_parser import POOR_DOC_BODY, WELL_DOC_BODY

LISTING1_DESCS = [
    ParamDescription("center", "Center of the rotation in the source image."),
    ParamDescription("angle", "Rotation angle in degrees."),
    ParamDescription("scale", "Isotropic scale factor."),
]


def listing1_sig():
    return parse_signature("getRotationMatrix2D(center, angle, scale) -> retval")


class TestKeywordRules:
    def test_three_channel_uint8_or_float(self):
        p = infer_param_spec("image1", "typically a three-channel array, of type uint8 or float", [])
        assert p.type_domain == frozenset({ScalarType.UINT8, ScalarType.FLOAT32})
        assert p.size_spec == RGB_IMAGE_SIZE

    def test_grayscale(self):
        p = infer_param_spec("src", "single-channel grayscale image of type uint8", [])
        assert p.size_spec == GRAY_IMAGE_SIZE

    def test_points_bounded_by_first_image(self):
        image = infer_param_spec("image", "input image array of type uint8", [])
        pts = infer_param_spec("pts", "list of points inside the image", [image])
        assert pts.size_spec == POINTS_SIZE
        edges = pts.description.depends_on
        assert len(edges) == 1
        assert edges[0].source == "image"
        assert edges[0].kind is DependencyKind.BOUNDED_BY_SHAPE
        assert edges[0].axes == (0, 1)

    def test_points_without_image_has_no_bound(self):
        pts = infer_param_spec("src_pts", "source points of type float32", [])
        assert pts.size_spec == POINTS_SIZE
        assert pts.description.depends_on == ()
        assert pts.type_domain == frozenset({ScalarType.FLOAT32})

    def test_color_rule(self):
        p = infer_param_spec("color", "line color, valid range 0 to 256", [])
        assert p.size_spec == SizeSpecFixed3()
        assert p.description.value_range == (0.0, 256.0)
        assert p.type_domain == frozenset({ScalarType.INT32})

    def test_same_type_and_size_edges(self):
        a = infer_param_spec("image1", "input image array", [])
        b = infer_param_spec(
            "image2", "second array, same type as image1 and same size as image1", [a]
        )
        kinds = {e.kind for e in b.description.depends_on}
        assert kinds == {DependencyKind.SAME_TYPE, DependencyKind.SAME_SHAPE}
        assert all(e.source == "image1" for e in b.description.depends_on)

    def test_edge_to_unknown_param_dropped(self):
        b = infer_param_spec("image2", "same type as image9", [])
        assert b.description.depends_on == ()

    def test_enumerated_options_clear_flag(self):
        p = infer_param_spec("flags", "interpolation, one of NEAREST (0), LINEAR (1), CUBIC (2).", [])
        assert p.flag is False
        assert p.description.options == (
            EnumVal("NEAREST", 0),
            EnumVal("LINEAR", 1),
            EnumVal("CUBIC", 2),
        )

    def test_numeric_options(self):
        p = infer_param_spec("mode", "one of 0, 1 or 2", [])
        assert p.flag is False
        assert p.description.options == (IntVal(0), IntVal(1), IntVal(2))

    def test_default_extracted(self):
        p = infer_param_spec("ksize", "kernel width, defaults to 3", [])
        assert p.default == IntVal(3)

    def test_unresolvable_text_is_unconstrained(self):
        p = infer_param_spec("sigma", "smoothing strength", [])
        assert p.type_domain == frozenset()
        assert p.size_spec is None
        assert p.flag is True
        assert p.description.raw_text == "smoothing strength"


def SizeSpecFixed3():
    from docfuzz.schema import SizeSpec

    return SizeSpec(dims=(FixedDim(3),))


class TestStandardizeWellDocumented:
    def test_listing1_shape(self):
        info = standardize_well_documented(listing1_sig(), LISTING1_DESCS)
        assert [p.name for p in info.params] == ["center", "angle", "scale"]
        assert info.output_count == 1
        assert info.provenance is Provenance.PARSED
        assert validate(info) == []

    def test_empty_descs_unconstrained(self):
        info = standardize_well_documented(listing1_sig(), [])
        assert all(p.type_domain == frozenset() for p in info.params)
        assert all(p.flag for p in info.params)
        assert info.provenance is Provenance.PARSED

    def test_parsed_doc_end_to_end(self):
        parsed = parse_doc(RawApiDoc("cv2.getRotationMatrix2D", WELL_DOC_BODY))
        info = standardize_well_documented(parsed.signature, list(parsed.param_descriptions))
        assert validate(info) == []
        assert info.api_name == "getRotationMatrix2D"


def _info(api, *params):
    return StandardizedApiInfo(
        api_name=api, params=params, output_count=1, provenance=Provenance.PARSED
    )


def _scale_param(text="Isotropic scale factor of type float32"):
    return infer_param_spec("scale", text, [])


class TestParamCorpus:
    def test_empty(self):
        assert build_param_corpus([]).entries == {}

    def test_multimap_semantics(self):
        corpus = build_param_corpus(
            [_info("a", _scale_param()), _info("b", _scale_param())]
        )
        assert len(corpus.entries["scale"]) == 2

    def test_normalization_collapses_numbered_names(self):
        img1 = infer_param_spec("image1", "input image array", [])
        img2 = infer_param_spec("image2", "input image array", [])
        corpus = build_param_corpus([_info("a", img1), _info("b", img2)])
        assert set(corpus.entries) == {"image"}
        assert len(corpus.lookup("image3")) == 2

    def test_rejects_enriched_sources(self):
        info = StandardizedApiInfo(
            api_name="x", params=(), output_count=0, provenance=Provenance.ENRICHED
        )
        with pytest.raises(ValueError):
            build_param_corpus([info])


class TestEnrichPoorlyDocumented:
    def test_scale_inherited_from_corpus(self):
        corpus = build_param_corpus([_info("getRotationMatrix2D", _scale_param())])
        sig = parse_signature(POOR_DOC_BODY)
        info = enrich_poorly_documented(sig, corpus)
        assert info.provenance is Provenance.ENRICHED
        scale = next(p for p in info.params if p.name == "scale")
        assert scale.type_domain == frozenset({ScalarType.FLOAT32})
        assert scale.description.raw_text == "Isotropic scale factor of type float32"
        assert validate(info) == []

    def test_empty_corpus_fallback(self):
        sig = parse_signature(POOR_DOC_BODY)
        info = enrich_poorly_documented(sig, ParamCorpus())
        assert all(p.type_domain == frozenset({ScalarType.FLOAT32}) for p in info.params)
        assert all(p.size_spec is None and p.flag for p in info.params)
        assert validate(info) == []

    def test_tie_breaks_to_smallest_source_api(self):
        v1 = _scale_param("scale factor of type float32")
        v2 = _scale_param("scale factor of type float64")
        corpus = build_param_corpus([_info("zebra", v1), _info("apple", v2)])
        sig = parse_signature("f(scale) -> r")
        info = enrich_poorly_documented(sig, corpus)
        # both patterns occur once; apple sorts before zebra
        assert info.params[0].type_domain == frozenset({ScalarType.FLOAT64})

    def test_majority_pattern_wins(self):
        v1 = _scale_param("scale factor of type float32")
        v2 = _scale_param("scale factor of type float64")
        corpus = build_param_corpus([_info("a", v2), _info("b", v1), _info("c", v1)])
        info = enrich_poorly_documented(parse_signature("f(scale) -> r"), corpus)
        assert info.params[0].type_domain == frozenset({ScalarType.FLOAT32})

    def test_borrowed_dependency_remapped_or_dropped(self):
        img = infer_param_spec("image1", "input image array of type uint8", [])
        dep = infer_param_spec("image2", "array, same type as image1", [img])
        corpus = build_param_corpus([_info("src", img, dep)])
        # target API has image1 -> kept; lone image2 without source -> dropped
        info = enrich_poorly_documented(parse_signature("g(image1, image2) -> r"), corpus)
        assert validate(info) == []
        info2 = enrich_poorly_documented(parse_signature("h(image2) -> r"), corpus)
        assert validate(info2) == []
        assert info2.params[0].description.depends_on == ()

    def test_deterministic(self):
        corpus = build_param_corpus([_info("a", _scale_param())])
        sig = parse_signature(POOR_DOC_BODY)
        assert enrich_poorly_documented(sig, corpus) == enrich_poorly_documented(sig, corpus)


class TestPrompt:
    def test_contains_signature_and_exemplar(self):
        sig = parse_signature(POOR_DOC_BODY)
        exemplar = standardize_well_documented(listing1_sig(), LISTING1_DESCS)
        prompt = render_llm_prompt(sig, [exemplar])
        assert sig.render() in prompt
        assert json.dumps(info_to_obj(exemplar), indent=2, sort_keys=True) in prompt
        assert "Input:" in prompt and "Task:" in prompt and "Output:" in prompt

    def test_no_exemplars_no_fewshot_section(self):
        prompt = render_llm_prompt(listing1_sig(), [])
        assert "Exemplars:" not in prompt

    def test_byte_identical(self):
        sig = parse_signature(POOR_DOC_BODY)
        exemplar = standardize_well_documented(listing1_sig(), LISTING1_DESCS)
        assert render_llm_prompt(sig, [exemplar]) == render_llm_prompt(sig, [exemplar])


class _LlmHandler(BaseHTTPRequestHandler):
    reply: dict = {}

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        json.loads(self.rfile.read(length))  # must be valid request json
        body = json.dumps(self.reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def llm_server():
    server = HTTPServer(("127.0.0.1", 0), _LlmHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1"
    server.shutdown()


class TestLlmBackend:
    def test_good_reply_used(self, llm_server):
        good = _info("calcBackProject", _scale_param())
        _LlmHandler.reply = {"content": info_to_obj(good)}
        sig = parse_signature("calcBackProject(scale) -> dst")
        info = enrich_poorly_documented(
            sig, ParamCorpus(), ExternalLlm(endpoint=llm_server, model="m")
        )
        assert info.provenance is Provenance.ENRICHED
        assert info.params[0].type_domain == frozenset({ScalarType.FLOAT32})

    def test_invalid_reply_falls_back(self, llm_server):
        _LlmHandler.reply = {"content": {"garbage": True}}
        sig = parse_signature(POOR_DOC_BODY)
        info = enrich_poorly_documented(
            sig, ParamCorpus(), ExternalLlm(endpoint=llm_server, model="m")
        )
        assert validate(info) == []
        assert all(p.type_domain == frozenset({ScalarType.FLOAT32}) for p in info.params)

    def test_unreachable_endpoint_falls_back(self):
        sig = parse_signature(POOR_DOC_BODY)
        backend = ExternalLlm(endpoint="http://127.0.0.1:1/nope", model="m", timeout_s=0.2)
        info = enrich_poorly_documented(sig, ParamCorpus(), backend)
        assert validate(info) == []

    def test_empty_endpoint_rejected(self):
        with pytest.raises(ValueError):
            ExternalLlm(endpoint="", model="m")


def test_normalize():
    assert normalize_param_name("Image2") == "image"
    assert normalize_param_name("pts") == "pts"
    assert normalize_param_name("sigma10") == "sigma"


def test_whole_bundled_corpus_validates(corpus_infos):
    # enrichment output is always schema-clean, parsed and enriched alike
    for info in corpus_infos:
        assert validate(info) == [], info.api_name
    assert {i.provenance for i in corpus_infos} == {Provenance.PARSED, Provenance.ENRICHED}
