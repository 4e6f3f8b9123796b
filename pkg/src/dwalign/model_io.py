"""Versioned binary model container.

Layout: one magic line, one JSON line (kind, metadata, array manifest),
then the raw little-endian array bytes in manifest order. The encoding is
fully deterministic, so identical models produce byte-identical files, and
arrays round-trip bit-exactly. Files are written to a temporary path in
the target directory and renamed into place on success.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .corpus import NULL_TOKEN, UNK_TOKEN, Vocab
from .errors import DataError

MAGIC = b"#dwalign-model v1\n"


def _canonical(arr: np.ndarray) -> np.ndarray:
    dt = arr.dtype.newbyteorder("<")
    return np.ascontiguousarray(arr, dtype=dt)


def save_container(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    blobs = []
    for name, arr in arrays.items():
        arr = _canonical(arr)
        manifest.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps(
        {"kind": kind, "meta": meta, "arrays": manifest},
        sort_keys=True, ensure_ascii=False, separators=(",", ":"),
    ).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".dwalign-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(header)
            f.write(b"\n")
            for blob in blobs:
                f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_container(path, expect_kind: str | None = None):
    with open(path, "rb") as f:
        magic = f.readline()
        if magic != MAGIC:
            raise DataError(f"{path}: not a dwalign model file")
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: corrupt model header: {exc}")
        kind = header.get("kind")
        if expect_kind is not None and kind != expect_kind:
            raise DataError(f"{path}: expected a {expect_kind!r} model, found {kind!r}")
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            dtype = np.dtype(entry["dtype"])
            n = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
            buf = f.read(n)
            if len(buf) != n:
                raise DataError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return kind, header["meta"], arrays


def vocab_to_meta(vocab: Vocab) -> dict:
    return {"tokens": list(vocab.id_to_token), "freq": [int(c) for c in vocab.freq]}


def vocab_from_meta(meta: dict) -> Vocab:
    tokens = meta["tokens"]
    token_to_id = {t: i for i, t in enumerate(tokens)}
    if UNK_TOKEN not in token_to_id:
        raise DataError("stored vocab lacks the UNK entry")
    return Vocab(
        token_to_id=token_to_id,
        id_to_token=list(tokens),
        freq=np.array(meta["freq"], dtype=np.int64),
        unk_id=token_to_id[UNK_TOKEN],
        null_id=token_to_id.get(NULL_TOKEN),
    )
