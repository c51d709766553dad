"""The stdio request loop: one JSON line in, one JSON line out.

First output line is the handshake; every request is answered exactly
once with a matching id. Per-request trouble produces an error reply
and the loop continues; only setup failure is fatal.
"""

from __future__ import annotations

import json
from typing import TextIO

from .phenotype import PhenotypeFormatError, parse_phenotype

PROTOCOL_NAME = "lonscape-eval"
PROTOCOL_VERSION = 1


def _reply(stream: TextIO, payload: dict) -> None:
    stream.write(json.dumps(payload, sort_keys=True) + "\n")
    stream.flush()


def handle_request(line: str, backend) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError:
        return {"id": None, "error": "request is not JSON"}
    if not isinstance(request, dict):
        return {"id": None, "error": "request is not an object"}
    request_id = request.get("id")
    if request.get("op") != "evaluate":
        return {"id": request_id, "error": f"unknown op {request.get('op')!r}"}
    try:
        phenotype = parse_phenotype(request.get("phenotype"))
    except PhenotypeFormatError as e:
        return {"id": request_id, "error": str(e)}
    try:
        distance, killed = backend.evaluate(phenotype)
    except Exception as e:  # per-request failure must not kill the loop
        return {"id": request_id, "error": f"backend failure: {e}"}
    return {"id": request_id, "distance": distance, "killed": killed}


def serve(backend, stdin: TextIO, stdout: TextIO) -> None:
    _reply(stdout, {"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION})
    for line in stdin:
        if not line.strip():
            continue
        _reply(stdout, handle_request(line, backend))
