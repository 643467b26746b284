"""Minimal PDF reader that rasterizes image-based pages.

Scanned publications are PDFs whose pages consist of placed raster images.
This module parses the PDF object graph (classic xref tables, xref streams,
object streams), decodes the common stream filters, and renders a page by
compositing its image XObjects under their placement matrices onto a white
canvas.  Vector drawing operators are ignored: this is an extractor for
scanned material, not a general PDF renderer.  Anything beyond that (CCITT
images, encryption) raises :class:`IngestError`.
"""

from __future__ import annotations

import base64
import binascii
import math
import re
import zlib
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyDocumentError, IngestError

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


class _Lexer:
    """Token reader over the raw PDF bytes."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # comment
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek_bytes(self, n: int) -> bytes:
        return self.data[self.pos : self.pos + n]

    def read_token(self) -> bytes:
        self.skip_ws()
        data, n = self.data, len(self.data)
        if self.pos >= n:
            raise IngestError("unexpected end of PDF data")
        c = data[self.pos]
        if c == 0x3C and self.peek_bytes(2) == b"<<":
            self.pos += 2
            return b"<<"
        if c == 0x3E and self.peek_bytes(2) == b">>":
            self.pos += 2
            return b">>"
        if c in _DELIMITERS:
            self.pos += 1
            return bytes([c])
        start = self.pos
        while self.pos < n and data[self.pos] not in _WHITESPACE + _DELIMITERS:
            self.pos += 1
        return data[start : self.pos]


class _Parser:
    """Recursive parser for PDF objects."""

    def __init__(self, data: bytes, pos: int = 0):
        self.lex = _Lexer(data, pos)

    def parse_object(self):
        token = self.lex.read_token()
        return self._from_token(token)

    def _from_token(self, token: bytes):
        if token == b"<<":
            return self._parse_dict()
        if token == b"[":
            return self._parse_array()
        if token == b"/":
            return self._parse_name()
        if token == b"(":
            return self._parse_string()
        if token == b"<":
            return self._parse_hex_string()
        if token == b"true":
            return True
        if token == b"false":
            return False
        if token == b"null":
            return None
        return self._parse_number_or_ref(token)

    def _parse_dict(self):
        out = {}
        while True:
            token = self.lex.read_token()
            if token == b">>":
                return out
            if token != b"/":
                raise IngestError(f"expected name in dict, got {token!r}")
            key = self._parse_name()
            out[key] = self.parse_object()

    def _parse_array(self):
        out = []
        while True:
            self.lex.skip_ws()
            if self.lex.peek_bytes(1) == b"]":
                self.lex.pos += 1
                return out
            out.append(self.parse_object())

    def _parse_name(self) -> str:
        data, n = self.lex.data, len(self.lex.data)
        start = self.lex.pos
        while self.lex.pos < n and data[self.lex.pos] not in _WHITESPACE + _DELIMITERS:
            self.lex.pos += 1
        raw = data[start : self.lex.pos]
        return re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw).decode(
            "latin-1"
        )

    def _parse_string(self) -> bytes:
        data, n = self.lex.data, len(self.lex.data)
        out = bytearray()
        depth = 1
        while self.lex.pos < n:
            c = data[self.lex.pos]
            self.lex.pos += 1
            if c == 0x5C:  # backslash escape
                e = data[self.lex.pos]
                self.lex.pos += 1
                simple = {0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}
                if e in simple:
                    out.append(simple[e])
                elif e in b"()\\":
                    out.append(e)
                elif 0x30 <= e <= 0x37:
                    octal = chr(e)
                    for _ in range(2):
                        if 0x30 <= data[self.lex.pos] <= 0x37:
                            octal += chr(data[self.lex.pos])
                            self.lex.pos += 1
                    out.append(int(octal, 8) & 0xFF)
            elif c == 0x28:
                depth += 1
                out.append(c)
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    return bytes(out)
                out.append(c)
            else:
                out.append(c)
        raise IngestError("unterminated string")

    def _parse_hex_string(self) -> bytes:
        data = self.lex.data
        end = data.index(b">", self.lex.pos)
        raw = re.sub(rb"\s", b"", data[self.lex.pos : end])
        self.lex.pos = end + 1
        if len(raw) % 2:
            raw += b"0"
        return binascii.unhexlify(raw)

    def _parse_number_or_ref(self, token: bytes):
        try:
            value = int(token)
        except ValueError:
            try:
                return float(token)
            except ValueError:
                return token.decode("latin-1")  # bare keyword
        # lookahead for "gen R"
        save = self.lex.pos
        try:
            second = self.lex.read_token()
            third = self.lex.read_token()
            if third == b"R":
                return Ref(value, int(second))
        except (IngestError, ValueError):
            pass
        self.lex.pos = save
        return value


def _png_predictor(data: bytes, colors: int, bpc: int, columns: int) -> bytes:
    stride = (columns * colors * bpc + 7) // 8
    sample = max(1, colors * bpc // 8)
    out = bytearray()
    prev = bytearray(stride)
    pos = 0
    while pos + 1 + stride <= len(data) + stride and pos < len(data):
        tag = data[pos]
        row = bytearray(data[pos + 1 : pos + 1 + stride])
        pos += 1 + stride
        if tag == 1:  # Sub
            for i in range(sample, len(row)):
                row[i] = (row[i] + row[i - sample]) & 0xFF
        elif tag == 2:  # Up
            for i in range(len(row)):
                row[i] = (row[i] + prev[i]) & 0xFF
        elif tag == 3:  # Average
            for i in range(len(row)):
                left = row[i - sample] if i >= sample else 0
                row[i] = (row[i] + (left + prev[i]) // 2) & 0xFF
        elif tag == 4:  # Paeth
            for i in range(len(row)):
                a = row[i - sample] if i >= sample else 0
                b = prev[i]
                c = prev[i - sample] if i >= sample else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                best = a if pa <= pb and pa <= pc else (b if pb <= pc else c)
                row[i] = (row[i] + best) & 0xFF
        elif tag != 0:
            raise IngestError(f"unsupported PNG predictor row tag {tag}")
        out += row
        prev = row
    return bytes(out)


def _apply_filters(data: bytes, filters, parms, resolve):
    """Run the filter chain; DCTDecode stops the chain (decoded by Pillow)."""
    if filters is None:
        return data, None
    if not isinstance(filters, list):
        filters = [filters]
    if parms is None:
        parms = [None] * len(filters)
    elif not isinstance(parms, list):
        parms = [parms]
    parms = parms + [None] * (len(filters) - len(parms))

    for name, parm in zip(filters, parms):
        name = resolve(name)
        parm = resolve(parm) or {}
        if name == "FlateDecode":
            data = zlib.decompress(data)
            predictor = resolve(parm.get("Predictor", 1))
            if predictor and predictor >= 10:
                data = _png_predictor(
                    data,
                    resolve(parm.get("Colors", 1)),
                    resolve(parm.get("BitsPerComponent", 8)),
                    resolve(parm.get("Columns", 1)),
                )
            elif predictor == 2:
                raise IngestError("TIFF predictor not supported")
        elif name == "ASCII85Decode":
            text = re.sub(rb"\s", b"", data)
            if text.startswith(b"<~"):
                text = text[2:]
            if text.endswith(b"~>"):
                text = text[:-2]
            data = base64.a85decode(text)
        elif name == "ASCIIHexDecode":
            text = re.sub(rb"\s", b"", data).rstrip(b">")
            if len(text) % 2:
                text += b"0"
            data = binascii.unhexlify(text)
        elif name == "RunLengthDecode":
            out = bytearray()
            i = 0
            while i < len(data):
                n = data[i]
                if n == 128:
                    break
                if n < 128:
                    out += data[i + 1 : i + 2 + n]
                    i += 2 + n
                else:
                    out += data[i + 1 : i + 2] * (257 - n)
                    i += 2
            data = bytes(out)
        elif name == "DCTDecode":
            return data, "dct"
        else:
            raise IngestError(f"unsupported stream filter {name}")
    return data, None


class PdfImageDocument:
    """Parsed PDF exposing page count and image-composite rasterization."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.data = self.path.read_bytes()
        if not self.data.lstrip()[:5].startswith(b"%PDF-"):
            raise IngestError(f"{path}: not a PDF file")
        self._cache: dict[Ref, object] = {}
        self._xref: dict[int, tuple] = {}
        self.trailer: dict = {}
        self._load_xref()
        if "Encrypt" in self.trailer:
            raise IngestError(f"{path}: encrypted PDFs are not supported")
        self.pages = self._collect_pages()
        if not self.pages:
            raise EmptyDocumentError(f"{path}: document has no pages")

    # -- object graph ------------------------------------------------------

    def _load_xref(self):
        anchor = self.data.rfind(b"startxref")
        try:
            if anchor < 0:
                raise IngestError("missing startxref")
            tail = _Parser(self.data, anchor + len(b"startxref"))
            offset = tail.parse_object()
            seen = set()
            while isinstance(offset, int) and offset not in seen:
                seen.add(offset)
                offset = self._read_xref_section(offset)
        except IngestError:
            self._scan_objects()
        if not self._xref:
            self._scan_objects()
        if "Root" not in self.trailer:
            raise IngestError("PDF trailer has no document root")

    def _read_xref_section(self, offset: int):
        parser = _Parser(self.data, offset)
        token = parser.lex.read_token()
        if token == b"xref":
            while True:
                parser.lex.skip_ws()
                if self.data[parser.lex.pos : parser.lex.pos + 7] == b"trailer":
                    parser.lex.pos += 7
                    break
                first = int(parser.lex.read_token())
                count = int(parser.lex.read_token())
                for i in range(count):
                    offset = int(parser.lex.read_token())
                    int(parser.lex.read_token())  # generation
                    if parser.lex.read_token() == b"n":
                        self._xref.setdefault(first + i, ("file", offset))
            trailer = parser.parse_object()
        else:
            # xref stream: "N G obj << ... >> stream"
            parser2 = _Parser(self.data, offset)
            num = int(parser2.lex.read_token())
            int(parser2.lex.read_token())
            if parser2.lex.read_token() != b"obj":
                raise IngestError("bad xref stream header")
            trailer = parser2.parse_object()
            raw = self._read_stream_data(parser2, trailer)
            self._parse_xref_stream(trailer, raw)
        for key, value in trailer.items():
            self.trailer.setdefault(key, value)
        nxt = trailer.get("XRefStm", trailer.get("Prev"))
        return nxt

    def _parse_xref_stream(self, info: dict, raw: bytes):
        widths = [self.resolve(w) for w in info["W"]]
        size = self.resolve(info["Size"])
        index = self.resolve(info.get("Index", [0, size]))
        row_len = sum(widths)
        rows = [raw[i : i + row_len] for i in range(0, len(raw) - row_len + 1, row_len)]
        it = iter(rows)
        for start, count in zip(index[::2], index[1::2]):
            for obj_num in range(start, start + count):
                try:
                    row = next(it)
                except StopIteration:
                    return
                fields = []
                pos = 0
                for w in widths:
                    fields.append(int.from_bytes(row[pos : pos + w], "big") if w else 1)
                    pos += w
                kind, a, b = fields[0], fields[1], fields[2] if len(fields) > 2 else 0
                if kind == 1:
                    self._xref.setdefault(obj_num, ("file", a))
                elif kind == 2:
                    self._xref.setdefault(obj_num, ("objstm", a, b))

    def _scan_objects(self):
        """Repair path: locate indirect objects and the trailer by scanning."""
        for m in re.finditer(rb"(?m)^\s*(\d+)\s+(\d+)\s+obj\b", self.data):
            self._xref[int(m.group(1))] = ("file", m.start())
        for m in re.finditer(rb"trailer", self.data):
            try:
                trailer = _Parser(self.data, m.end()).parse_object()
                if isinstance(trailer, dict):
                    self.trailer.update(trailer)
            except IngestError:
                continue
        if "Root" not in self.trailer:
            for num in self._xref:
                obj = self.get_object(num)
                if isinstance(obj, dict) and obj.get("Type") == "Catalog":
                    self.trailer["Root"] = Ref(num, 0)
                    break

    def _read_stream_data(self, parser: _Parser, info: dict) -> bytes:
        parser.lex.skip_ws()
        if parser.lex.peek_bytes(6) != b"stream":
            raise IngestError("expected stream keyword")
        pos = parser.lex.pos + 6
        if self.data[pos : pos + 2] == b"\r\n":
            pos += 2
        elif self.data[pos : pos + 1] == b"\n":
            pos += 1
        length = self.resolve(info.get("Length"))
        if not isinstance(length, int):
            end = self.data.index(b"endstream", pos)
            length = end - pos
        raw = self.data[pos : pos + length]
        data, tail = _apply_filters(
            raw, info.get("Filter"), info.get("DecodeParms"), self.resolve
        )
        return data if tail is None else raw

    def get_object(self, num: int, _inline_stream=False):
        entry = self._xref.get(num)
        if entry is None:
            return None
        if entry[0] == "file":
            parser = _Parser(self.data, entry[1])
            int(parser.lex.read_token())
            int(parser.lex.read_token())
            if parser.lex.read_token() != b"obj":
                raise IngestError(f"object {num} not at recorded offset")
            obj = parser.parse_object()
            parser.lex.skip_ws()
            if isinstance(obj, dict) and parser.lex.peek_bytes(6) == b"stream":
                return _Stream(self, obj, parser)
            return obj
        # object inside an object stream
        _, container, idx = entry
        stream = self.get_object(container)
        if not isinstance(stream, _Stream):
            raise IngestError(f"object stream {container} missing")
        data = stream.decoded()
        first = self.resolve(stream.info["First"])
        count = self.resolve(stream.info["N"])
        header = _Parser(data, 0)
        pairs = [(int(header.lex.read_token()), int(header.lex.read_token())) for _ in range(count)]
        for obj_num, rel in pairs:
            if obj_num == num:
                return _Parser(data, first + rel).parse_object()
        raise IngestError(f"object {num} not found in object stream {container}")

    def resolve(self, obj):
        hops = 0
        while isinstance(obj, Ref):
            hops += 1
            if hops > 64:
                raise IngestError("reference cycle in PDF")
            if obj in self._cache:
                obj = self._cache[obj]
            else:
                value = self.get_object(obj.num)
                self._cache[obj] = value
                obj = value
        return obj

    # -- page tree ---------------------------------------------------------

    def _collect_pages(self) -> list[dict]:
        root = self.resolve(self.trailer["Root"])
        pages_ref = root.get("Pages") if isinstance(root, dict) else None
        out: list[dict] = []
        inheritable = ("Resources", "MediaBox", "Rotate")

        def walk(node_ref, inherited, depth=0):
            if depth > 64:
                raise IngestError("page tree too deep")
            node = self.resolve(node_ref)
            if not isinstance(node, dict):
                return
            merged = dict(inherited)
            for key in inheritable:
                if key in node:
                    merged[key] = node[key]
            if node.get("Type") == "Page":
                page = dict(node)
                for key in inheritable:
                    if key in merged:
                        page.setdefault(key, merged[key])
                out.append(page)
            else:
                for kid in self.resolve(node.get("Kids", [])) or []:
                    walk(kid, merged, depth + 1)

        if pages_ref is not None:
            walk(pages_ref, {})
        return out

    @property
    def page_count(self) -> int:
        return len(self.pages)

    # -- rasterization -----------------------------------------------------

    def render_page(self, page_no: int, dpi: float) -> np.ndarray:
        """Render a 1-based page to an RGB array at the given dpi."""
        if not 1 <= page_no <= len(self.pages):
            raise IngestError(f"page {page_no} out of range 1..{len(self.pages)}")
        page = self.pages[page_no - 1]
        box = [float(self.resolve(v)) for v in self.resolve(page.get("MediaBox", [0, 0, 612, 792]))]
        x0, y0, x1, y1 = box
        width_pt, height_pt = x1 - x0, y1 - y0
        w_px = max(1, round(width_pt * dpi / 72.0))
        h_px = max(1, round(height_pt * dpi / 72.0))
        canvas = np.full((h_px, w_px, 3), 255, dtype=np.uint8)

        resources = self.resolve(page.get("Resources", {})) or {}
        content = self.resolve(page.get("Contents"))
        streams = content if isinstance(content, list) else [content]
        body = b""
        for ref in streams:
            stream = self.resolve(ref)
            if isinstance(stream, _Stream):
                body += stream.decoded() + b"\n"
        if body:
            scale = dpi / 72.0
            # user space -> pixel frame (y flipped)
            base = np.array(
                [[scale, 0.0, -x0 * scale], [0.0, -scale, y1 * scale], [0.0, 0.0, 1.0]]
            )
            self._run_content(body, resources, base, canvas, page_no, depth=0)

        rotate = int(self.resolve(page.get("Rotate", 0)) or 0) % 360
        if rotate in (90, 180, 270):
            # /Rotate is clockwise; rot90 turns counterclockwise
            canvas = np.ascontiguousarray(np.rot90(canvas, k=(-(rotate // 90)) % 4))
        return canvas

    def _run_content(self, body, resources, base, canvas, page_no, depth):
        if depth > 8:
            raise IngestError("form XObjects nested too deeply")
        xobjects = self.resolve(resources.get("XObject", {})) or {}
        parser = _Parser(body, 0)
        stack: list[np.ndarray] = []
        ctm = np.eye(3)
        operands: list = []
        while True:
            parser.lex.skip_ws()
            if parser.lex.pos >= len(body):
                break
            token = parser.lex.read_token()
            if token in (b"<<", b"[", b"/", b"(", b"<"):
                operands.append(parser._from_token(token))
                continue
            try:
                operands.append(int(token))
                continue
            except ValueError:
                pass
            try:
                operands.append(float(token))
                continue
            except ValueError:
                pass
            op = token
            if op == b"q":
                stack.append(ctm.copy())
            elif op == b"Q":
                ctm = stack.pop() if stack else np.eye(3)
            elif op == b"cm" and len(operands) >= 6:
                a, b, c, d, e, f = operands[-6:]
                ctm = ctm @ np.array([[a, c, e], [b, d, f], [0, 0, 1.0]])
            elif op == b"Do" and operands:
                name = operands[-1]
                target = self.resolve(xobjects.get(name))
                if isinstance(target, _Stream):
                    subtype = self.resolve(target.info.get("Subtype"))
                    if subtype == "Image":
                        self._draw_image(target, base @ ctm, canvas, page_no)
                    elif subtype == "Form":
                        matrix = self.resolve(target.info.get("Matrix", [1, 0, 0, 1, 0, 0]))
                        a, b, c, d, e, f = [float(self.resolve(v)) for v in matrix]
                        form_ctm = ctm @ np.array([[a, c, e], [b, d, f], [0, 0, 1.0]])
                        form_res = self.resolve(target.info.get("Resources", resources))
                        self._run_content(
                            target.decoded(), form_res or resources, base @ form_ctm,
                            canvas, page_no, depth + 1,
                        )
            elif op == b"BI":
                raise IngestError(f"page {page_no}: inline images are not supported")
            operands = []

    def _draw_image(self, stream: "_Stream", matrix: np.ndarray, canvas, page_no):
        try:
            image = _decode_image(self, stream)
        except IngestError as exc:
            raise IngestError(f"page {page_no}: {exc}") from exc
        if image is None:
            return
        rgba = np.asarray(image.convert("RGBA"))
        ih, iw = rgba.shape[:2]

        # unit image square corners -> pixel frame
        corners = matrix @ np.array([[0, 1, 1, 0], [0, 0, 1, 1], [1, 1, 1, 1.0]])
        xs, ys = corners[0], corners[1]
        px0 = max(0, int(math.floor(xs.min())))
        px1 = min(canvas.shape[1], int(math.ceil(xs.max())))
        py0 = max(0, int(math.floor(ys.min())))
        py1 = min(canvas.shape[0], int(math.ceil(ys.max())))
        if px1 <= px0 or py1 <= py0:
            return
        try:
            inverse = np.linalg.inv(matrix)
        except np.linalg.LinAlgError:
            return

        xs_grid, ys_grid = np.meshgrid(
            np.arange(px0, px1) + 0.5, np.arange(py0, py1) + 0.5
        )
        pts = np.stack([xs_grid.ravel(), ys_grid.ravel(), np.ones(xs_grid.size)])
        unit = inverse @ pts
        u, v = unit[0], unit[1]
        cols = np.floor(u * iw).astype(np.int64)
        rows = np.floor((1.0 - v) * ih).astype(np.int64)
        valid = (u >= 0) & (u < 1) & (v >= 0) & (v < 1)
        cols = np.clip(cols, 0, iw - 1)
        rows = np.clip(rows, 0, ih - 1)

        samples = rgba[rows, cols].reshape(py1 - py0, px1 - px0, 4)
        valid = valid.reshape(py1 - py0, px1 - px0)
        alpha = (samples[:, :, 3:4].astype(np.float64) / 255.0) * valid[:, :, None]
        region = canvas[py0:py1, px0:px1].astype(np.float64)
        blended = samples[:, :, :3] * alpha + region * (1.0 - alpha)
        canvas[py0:py1, px0:px1] = np.clip(np.round(blended), 0, 255).astype(np.uint8)


class _Stream:
    """Indirect stream object: dict plus lazily decoded data."""

    def __init__(self, doc: PdfImageDocument, info: dict, parser: _Parser):
        self.doc = doc
        self.info = info
        self._parser = parser
        self._decoded: bytes | None = None
        self._raw: bytes | None = None

    def raw(self) -> bytes:
        if self._raw is None:
            parser = self._parser
            parser.lex.skip_ws()
            pos = parser.lex.pos + 6
            data = self.doc.data
            if data[pos : pos + 2] == b"\r\n":
                pos += 2
            elif data[pos : pos + 1] == b"\n":
                pos += 1
            length = self.doc.resolve(self.info.get("Length"))
            if not isinstance(length, int):
                length = data.index(b"endstream", pos) - pos
            self._raw = data[pos : pos + length]
        return self._raw

    def decoded(self) -> bytes:
        if self._decoded is None:
            data, tail = _apply_filters(
                self.raw(), self.info.get("Filter"), self.info.get("DecodeParms"),
                self.doc.resolve,
            )
            self._decoded = self.raw() if tail == "dct" else data
        return self._decoded


def _filter_kind(info: dict, resolve):
    filters = resolve(info.get("Filter"))
    if filters is None:
        return None, None
    if not isinstance(filters, list):
        filters = [filters]
    names = [resolve(f) for f in filters]
    return names, ("dct" if names and names[-1] == "DCTDecode" else None)


def _resolve_colorspace(doc: PdfImageDocument, cs):
    cs = doc.resolve(cs)
    if isinstance(cs, str):
        return cs, None
    if isinstance(cs, list) and cs:
        head = doc.resolve(cs[0])
        if head == "Indexed":
            base, hival, lookup = doc.resolve(cs[1]), doc.resolve(cs[2]), doc.resolve(cs[3])
            if isinstance(lookup, _Stream):
                lookup = lookup.decoded()
            base_name, _ = _resolve_colorspace(doc, base)
            return "Indexed", (base_name, hival, bytes(lookup))
        if head == "ICCBased":
            profile = doc.resolve(cs[1])
            n = doc.resolve(profile.info.get("N", 3)) if isinstance(profile, _Stream) else 3
            return {1: "DeviceGray", 3: "DeviceRGB", 4: "DeviceCMYK"}.get(n, "DeviceRGB"), None
        if head in ("CalRGB", "Lab"):
            return "DeviceRGB", None
        if head == "CalGray":
            return "DeviceGray", None
    return "DeviceRGB", None


def _decode_image(doc: PdfImageDocument, stream: _Stream):
    info = stream.info
    width = doc.resolve(info.get("Width"))
    height = doc.resolve(info.get("Height"))
    if not width or not height:
        return None
    _, tail = _filter_kind(info, doc.resolve)
    if tail == "dct":
        data, _ = _apply_filters(
            stream.raw(), info.get("Filter"), info.get("DecodeParms"), doc.resolve
        )
        image = Image.open(BytesIO(data))
        image.load()
    else:
        names, _ = _filter_kind(info, doc.resolve)
        if names and any(n in ("CCITTFaxDecode", "JBIG2Decode", "JPXDecode") for n in names):
            raise IngestError(f"unsupported image codec {names[-1]}")
        data = stream.decoded()
        bpc = doc.resolve(info.get("BitsPerComponent", 8))
        if doc.resolve(info.get("ImageMask", False)):
            image = _unpack_bilevel(data, width, height, invert=True)
            # stencil masks paint where sample == 0 by default
            decode = doc.resolve(info.get("Decode"))
            if decode and doc.resolve(decode[0]) == 1:
                image = Image.eval(image, lambda v: 255 - v)
            mask = image.convert("L")
            black = Image.new("RGBA", (width, height), (0, 0, 0, 255))
            black.putalpha(mask)
            return black
        cs_name, cs_extra = _resolve_colorspace(doc, info.get("ColorSpace", "DeviceRGB"))
        image = _array_to_image(data, width, height, bpc, cs_name, cs_extra)
        decode = doc.resolve(info.get("Decode"))
        if decode and doc.resolve(decode[0]) == 1 and image.mode in ("1", "L"):
            image = Image.eval(image.convert("L"), lambda v: 255 - v)

    smask = doc.resolve(info.get("SMask"))
    if isinstance(smask, _Stream):
        alpha = _decode_image(doc, smask)
        if alpha is not None:
            image = image.convert("RGBA")
            image.putalpha(alpha.convert("L").resize(image.size))
    return image


def _unpack_bilevel(data: bytes, width: int, height: int, invert=False) -> Image.Image:
    stride = (width + 7) // 8
    rows = np.frombuffer(data[: stride * height], dtype=np.uint8).reshape(height, stride)
    bits = np.unpackbits(rows, axis=1)[:, :width]
    if invert:
        bits = 1 - bits
    return Image.fromarray((bits * 255).astype(np.uint8), "L")


def _array_to_image(data, width, height, bpc, cs_name, cs_extra) -> Image.Image:
    ncomp = {"DeviceGray": 1, "DeviceRGB": 3, "DeviceCMYK": 4, "Indexed": 1}.get(cs_name, 3)
    if bpc == 1 and ncomp == 1 and cs_name != "Indexed":
        return _unpack_bilevel(data, width, height)
    if bpc != 8:
        raise IngestError(f"unsupported image depth {bpc} bpc for {cs_name}")
    stride = width * ncomp
    if len(data) < stride * height:
        raise IngestError("image data shorter than geometry implies")
    arr = np.frombuffer(data[: stride * height], dtype=np.uint8).reshape(height, width, ncomp)
    if cs_name == "DeviceGray":
        return Image.fromarray(arr[:, :, 0], "L")
    if cs_name == "DeviceRGB":
        return Image.fromarray(arr, "RGB")
    if cs_name == "DeviceCMYK":
        return Image.fromarray(arr, "CMYK").convert("RGB")
    if cs_name == "Indexed":
        base_name, hival, lookup = cs_extra
        ncomp_base = 3 if base_name == "DeviceRGB" else 1
        table = np.frombuffer(lookup, dtype=np.uint8)
        table = table[: (hival + 1) * ncomp_base].reshape(hival + 1, ncomp_base)
        idx = np.clip(arr[:, :, 0], 0, hival)
        mapped = table[idx]
        if ncomp_base == 1:
            return Image.fromarray(mapped[:, :, 0], "L")
        return Image.fromarray(mapped, "RGB")
    raise IngestError(f"unsupported color space {cs_name}")
