"""Execution worker for docfuzz campaigns.

Speaks newline-delimited JSON (protocol v1) over stdin/stdout, decoding
encoded arguments into native numpy values, invoking the target API by
dotted name, scanning outputs for NaN/Inf, and replying in order. Ships
the planted-fault mock target used for end-to-end campaign testing.
"""

__version__ = "0.1.0"
