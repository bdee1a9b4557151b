"""File formats: numeric CSV, IDX image/label files, adjacency triples, model files.

Internally every data matrix stores one sample per column. Floats are written
with 17 significant digits, which round-trips float64 exactly.
"""

import csv
import gzip
import struct
from pathlib import Path

import numpy as np

from . import cca, dual, kernel
from .errors import BadMagic, CountMismatch, ParseError, RaggedRows, TruncatedFile
from .graph import laplacian

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
MODEL_TAG = "graphcca-model"


def fmt(x):
    return format(float(x), ".17g")


def _parse_label(text):
    try:
        return int(text)
    except ValueError:
        return text.strip()


def load_csv(path, rows_are_samples=True, labels_inline=False):
    """Read a rectangular numeric CSV.

    Returns ``(matrix, labels)`` with samples in columns of ``matrix``;
    ``labels`` is ``None`` unless ``labels_inline`` (last column holds labels).
    """
    rows, labels = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise RaggedRows(f"expected {width} fields, got {len(record)}", line=lineno)
            cells = record
            if labels_inline:
                labels.append(_parse_label(record[-1]))
                cells = record[:-1]
            values = []
            for col, cell in enumerate(cells, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", line=lineno, column=col) from None
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    M = np.array(rows, dtype=float)
    if rows_are_samples:
        M = M.T
    labs = np.array(labels) if labels_inline else None
    if labs is not None and labs.shape[0] != (M.shape[1]):
        raise CountMismatch(f"{labs.shape[0]} labels for {M.shape[1]} samples")
    return np.ascontiguousarray(M), labs


def save_csv(path, matrix, labels=None, rows_are_samples=True):
    M = np.asarray(matrix, dtype=float)
    if rows_are_samples:
        M = M.T
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(M):
            cells = [fmt(x) for x in row]
            if labels is not None:
                cells.append(str(labels[i]))
            writer.writerow(cells)


def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _idx_header(raw, expected_magic, path):
    if len(raw) < 8:
        raise TruncatedFile(f"{path}: file shorter than an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    end = 4 + 4 * ndim
    if len(raw) < end:
        raise TruncatedFile(f"{path}: truncated IDX dimensions")
    dims = struct.unpack(f">{ndim}I", raw[4:end])
    return dims, end


def load_idx(images_path, labels_path):
    """Read IDX (MNIST-style) images and labels.

    Pixels are scaled by 1/255 and each image is flattened row-major into one
    column, giving a ``(rows*cols) x N`` matrix.
    """
    raw = _read_bytes(images_path)
    (count, nrows, ncols), start = _idx_header(raw, IDX_IMAGES_MAGIC, images_path)
    size = count * nrows * ncols
    if len(raw) < start + size:
        raise TruncatedFile(f"{images_path}: expected {size} pixel bytes, found {len(raw) - start}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=size, offset=start)
    images = pixels.reshape(count, nrows * ncols).T.astype(float) / 255.0

    raw = _read_bytes(labels_path)
    (nlab,), start = _idx_header(raw, IDX_LABELS_MAGIC, labels_path)
    if len(raw) < start + nlab:
        raise TruncatedFile(f"{labels_path}: expected {nlab} labels, found {len(raw) - start}")
    if nlab != count:
        raise CountMismatch(f"{count} images but {nlab} labels")
    labels = np.frombuffer(raw, dtype=np.uint8, count=nlab, offset=start).astype(int)
    return np.ascontiguousarray(images), labels


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images ``(N, rows, cols)`` and labels in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, r, c = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, r, c))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        fh.write(labels.tobytes())


def write_adjacency_csv(path, graph):
    """Write undirected edges once as ``i,j,w`` lines (0-based, ``i < j``)."""
    W = graph.weights
    iu, ju = np.nonzero(np.triu(W, k=1))
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in zip(iu, ju):
            fh.write(f"{i},{j},{fmt(W[i, j])}\n")


def read_adjacency_csv(path, n=None):
    edges = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            if len(record) != 3:
                raise RaggedRows(f"expected i,j,w triple, got {len(record)} fields", line=lineno)
            try:
                edges.append((int(record[0]), int(record[1]), float(record[2])))
            except ValueError:
                raise ParseError(f"bad edge {record!r}", line=lineno) from None
    top = max((max(i, j) for i, j, _ in edges), default=-1) + 1
    n = top if n is None else n
    if top > n:
        raise CountMismatch(f"edge index {top - 1} out of range for {n} nodes")
    W = np.zeros((n, n))
    for i, j, w in edges:
        W[i, j] = W[j, i] = w
    return laplacian(W)


def save_dense_csv(path, M):
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")


# --- model files -----------------------------------------------------------

_MATRICES = {
    "gcca": ("x_mean", "y_mean", "u", "v", "singulars"),
    "cca": ("x_mean", "y_mean", "u", "v", "singulars"),
    "gdcca": ("x_mean", "y_mean", "a", "b", "singulars", "x_train", "y_train"),
    "gkcca": ("a", "b", "singulars", "x_train", "y_train", "kx_col_mean", "ky_col_mean"),
}


def _spec_token(spec):
    if spec is None:
        return "none"
    if spec.kind == "linear":
        return "linear"
    return f"gaussian:{fmt(spec.bandwidth)}"


def _spec_parse(token):
    if token == "none":
        return None
    if token == "linear":
        return kernel.KernelSpec("linear")
    kind, bw = token.split(":", 1)
    return kernel.KernelSpec(kind, float(bw))


def save_model(path, model, refs=None):
    """Write a fitted model in the line-oriented text format.

    Header: ``graphcca-model variant=... dx=... dy=... d=... gamma=... epsilon=...``
    followed by extra ``key=value`` tokens, then one block per matrix
    (``matrix <name> <rows> <cols>`` and row-major values).
    """
    variant = model.variant
    if variant in ("gcca", "cca"):
        dx, dy = model.u.shape[0], model.v.shape[0]
        eps = float("nan")
    else:
        dx, dy = model.x_train.shape[0], model.y_train.shape[0]
        eps = model.epsilon
    header = {
        "variant": variant,
        "dx": dx,
        "dy": dy,
        "d": model.d,
        "gamma": fmt(model.gamma),
        "epsilon": fmt(eps),
        "jitter": fmt(model.jitter),
    }
    if variant == "gkcca":
        header["kernel_x"] = _spec_token(model.kernel_x)
        header["kernel_y"] = _spec_token(model.kernel_y)
        header["kx_grand_mean"] = fmt(model.kx_grand_mean)
        header["ky_grand_mean"] = fmt(model.ky_grand_mean)
    for key, value in (refs or {}).items():
        if any(ch.isspace() for ch in str(value)):
            raise ValueError(f"reference {key}={value!r} must not contain whitespace")
        header[key] = value
    lines = [MODEL_TAG + " " + " ".join(f"{k}={v}" for k, v in header.items())]
    for name in _MATRICES[variant]:
        M = np.asarray(getattr(model, name), dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        lines.append(f"matrix {name} {M.shape[0]} {M.shape[1]}")
        lines.extend(" ".join(fmt(x) for x in row) for row in M)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path):
    """Read a model written by :func:`save_model`; returns ``(model, header)``."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith(MODEL_TAG + " "):
        raise ParseError(f"{path}: not a model file", line=1)
    header = dict(tok.split("=", 1) for tok in text[0].split()[1:])
    blocks = {}
    pos = 1
    while pos < len(text):
        parts = text[pos].split()
        if len(parts) != 4 or parts[0] != "matrix":
            raise ParseError(f"expected matrix block header, got {text[pos]!r}", line=pos + 1)
        name, rows, cols = parts[1], int(parts[2]), int(parts[3])
        body = text[pos + 1 : pos + 1 + rows]
        if len(body) != rows:
            raise TruncatedFile(f"{path}: matrix {name} is truncated")
        M = np.array([[float(x) for x in line.split()] for line in body], dtype=float).reshape(rows, cols)
        blocks[name] = M
        pos += 1 + rows

    variant = header["variant"]
    vec = lambda name: blocks[name][:, 0].copy()  # noqa: E731
    common = dict(gamma=float(header["gamma"]), jitter=float(header.get("jitter", 0)))
    if variant in ("gcca", "cca"):
        model = cca.GccaModel(
            u=blocks["u"], v=blocks["v"], singulars=vec("singulars"),
            x_mean=vec("x_mean"), y_mean=vec("y_mean"), variant=variant, **common,
        )
    elif variant == "gdcca":
        model = dual.DualModel(
            a=blocks["a"], b=blocks["b"], epsilon=float(header["epsilon"]),
            singulars=vec("singulars"), x_mean=vec("x_mean"), y_mean=vec("y_mean"),
            x_train=blocks["x_train"], y_train=blocks["y_train"], **common,
        )
    elif variant == "gkcca":
        model = kernel.KernelModel(
            a=blocks["a"], b=blocks["b"], epsilon=float(header["epsilon"]),
            singulars=vec("singulars"),
            kernel_x=_spec_parse(header["kernel_x"]), kernel_y=_spec_parse(header["kernel_y"]),
            x_train=blocks["x_train"], y_train=blocks["y_train"],
            kx_col_mean=vec("kx_col_mean"), ky_col_mean=vec("ky_col_mean"),
            kx_grand_mean=float(header["kx_grand_mean"]),
            ky_grand_mean=float(header["ky_grand_mean"]), **common,
        )
    else:
        raise ParseError(f"{path}: unknown variant {variant!r}", line=1)
    return model, header
