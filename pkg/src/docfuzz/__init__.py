"""Document-guided API fuzzing.

The pipeline turns raw API docstrings into executable fuzzing campaigns:

1. **doc_parser** classifies each docstring (well/poorly/un-documented)
   and parses the signature into input, output, and optional buffer
   parameters.
2. **schema** defines the standardized API information every stage
   exchanges: per-parameter flag, default, type, size, and description,
   plus the output count.
3. **enrichment** fills the standardized fields: deterministically from
   full documentation, or for signature-only APIs by borrowing the most
   frequent pattern observed for same-named parameters elsewhere.
4. **constraint_engine** resolves concrete generation domains, orders
   parameters along their dependencies, and checks generated cases.
5. **generation_engine** produces seeded, platform-stable case streams
   mutating type, size, and values (noise / masking / division).
6. **orchestrator** drives cases through an isolated worker process and
   classifies outcomes into crash, NaN, and exception bugs, deduplicated
   by masked signature.

Run `docfuzz pipeline --config <file>` for the whole flow, or the
individual `parse`, `enrich`, `extract`, `fuzz`, and `report` stages.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
