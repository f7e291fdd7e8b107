"""One structured-text file format for every artifact the CLI reads or writes.

Grammar (documented here and in the README):

    line 1          #eqsim-format <version> <doctype>
    line 2          header object: JSON with the seed / config echo
    lines 3..N      one JSON record per line, named fields, sorted keys
    trailing lines  optional "# ..." human summary footer (ignored on read)

Serialization is canonical (sorted keys, fixed separators, repr floats),
so identical content means identical bytes -- golden tests diff files
directly.
"""

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .model import EncoderParams
from .synthgen import PairSample, SemanticSlots

FORMAT_VERSION = 1


def jsonable(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps_line(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(", ", ": "))


def write_document(path, doctype: str, header: dict, records, footer_lines=()):
    """Write a complete document; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#eqsim-format {FORMAT_VERSION} {doctype}\n")
        fh.write(dumps_line(header) + "\n")
        for record in records:
            fh.write(dumps_line(record) + "\n")
        for line in footer_lines:
            fh.write(f"# {line}\n")
    return path


def read_document(path, expect_doctype: str | None = None):
    """Read a document; returns (doctype, header, records)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#eqsim-format "):
        raise SchemaError(f"{path}: missing format-version line")
    parts = lines[0].split()
    if len(parts) != 3 or parts[1] != str(FORMAT_VERSION):
        raise SchemaError(f"{path}: unsupported format line {lines[0]!r}")
    doctype = parts[2]
    if expect_doctype is not None and doctype != expect_doctype:
        raise SchemaError(f"{path}: expected doctype {expect_doctype!r}, got {doctype!r}")
    if len(lines) < 2:
        raise SchemaError(f"{path}: missing header line")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: bad header JSON: {err}") from err
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            records.append(json.loads(stripped))
        except json.JSONDecodeError as err:
            raise SchemaError(
                f"{path}:{lineno}: bad record JSON: {err}", record_index=len(records)
            ) from err
    return doctype, header, records


def require_fields(record: dict, fields, record_index: int, where: str):
    for name in fields:
        if name not in record:
            raise SchemaError(
                f"{where}: record {record_index} missing field {name!r}",
                record_index=record_index,
                field=name,
            )


# -- eval sets -----------------------------------------------------------------

def eval_set_records(samples):
    for idx, s in enumerate(samples):
        yield {
            "id": idx,
            "image1": s.image1,
            "text1": s.text1,
            "image2": s.image2,
            "text2": s.text2,
            "slots1": s.slots1.__dict__,
            "slots2": s.slots2.__dict__,
            "edited_aspect": s.edited_aspect,
            "hamming": s.hamming,
        }


def save_eval_set(path, samples, header: dict):
    return write_document(path, "evalset", header, eval_set_records(samples))


def load_eval_set(path):
    """Returns (header, list of PairSample)."""
    _, header, records = read_document(path, expect_doctype="evalset")
    samples = []
    for idx, rec in enumerate(records):
        require_fields(
            rec,
            ("image1", "text1", "image2", "text2", "slots1", "slots2",
             "edited_aspect", "hamming"),
            idx,
            str(path),
        )
        samples.append(
            PairSample(
                image1=np.asarray(rec["image1"], dtype=np.float64),
                text1=np.asarray(rec["text1"], dtype=np.float64),
                image2=np.asarray(rec["image2"], dtype=np.float64),
                text2=np.asarray(rec["text2"], dtype=np.float64),
                slots1=SemanticSlots(**rec["slots1"]),
                slots2=SemanticSlots(**rec["slots2"]),
                edited_aspect=rec["edited_aspect"],
                hamming=int(rec["hamming"]),
            )
        )
    return header, samples


# -- checkpoints -----------------------------------------------------------------

_CHECKPOINT_TENSORS = (
    "image_weights",
    "image_hidden_w",
    "image_hidden_b",
    "text_weights",
    "text_hidden_w",
    "text_hidden_b",
)


def save_checkpoint(path, params: EncoderParams, header: dict):
    """Weights as row-major decimal text, one record per tensor."""
    records = []
    for name in _CHECKPOINT_TENSORS:
        arr = getattr(params, name)
        if arr is None:
            continue
        records.append(
            {"name": name, "shape": list(arr.shape), "values": arr.ravel().tolist()}
        )
    records.append({"name": "log_temperature", "value": params.log_temperature})
    full_header = dict(header)
    full_header["dims"] = {
        "d_img": params.d_img,
        "d_txt": params.d_txt,
        "embed_dim": params.embed_dim,
    }
    return write_document(path, "checkpoint", full_header, records)


def load_checkpoint(path):
    """Returns (header, EncoderParams)."""
    _, header, records = read_document(path, expect_doctype="checkpoint")
    fields = {}
    log_temperature = None
    for idx, rec in enumerate(records):
        require_fields(rec, ("name",), idx, str(path))
        name = rec["name"]
        if name == "log_temperature":
            log_temperature = float(rec["value"])
        elif name in _CHECKPOINT_TENSORS:
            require_fields(rec, ("shape", "values"), idx, str(path))
            fields[name] = np.asarray(rec["values"], dtype=np.float64).reshape(
                rec["shape"]
            )
        else:
            raise SchemaError(
                f"{path}: unknown checkpoint tensor {name!r}", record_index=idx
            )
    if "image_weights" not in fields or "text_weights" not in fields:
        raise SchemaError(f"{path}: checkpoint missing encoder weights")
    if log_temperature is None:
        raise SchemaError(f"{path}: checkpoint missing log_temperature")
    return header, EncoderParams(log_temperature=log_temperature, **fields)


# -- manifests -----------------------------------------------------------------

def manifest_records(pairs):
    for idx, p in enumerate(pairs):
        yield {
            "id": idx,
            "source": p.source,
            "frame1": p.item1[0],
            "caption1": p.item1[1],
            "frame2": p.item2[0],
            "caption2": p.item2[1],
            "filter_trace": list(p.filter_trace),
        }


def save_manifest(path, pairs, header: dict):
    return write_document(path, "manifest", header, manifest_records(pairs))
