"""Read-only static file server for cube artifacts, with byte-range support.

The browser viewer streams the cube payload with Range requests, so plain
http.server is extended with single-range handling (RFC 7233) and the content
types the artifacts use. Files are immutable once written; concurrent reads
are safe.
"""
from __future__ import annotations

import logging
import os
import re
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger(__name__)

_RANGE_RE = re.compile(r"bytes=(\d*)-(\d*)$")

CONTENT_TYPES = {
    ".stc": "application/octet-stream",
    ".bin": "application/octet-stream",
    ".json": "application/json",
    ".csv": "text/csv",
    ".html": "text/html",
    ".js": "text/javascript",
    ".mjs": "text/javascript",
    ".css": "text/css",
}


class RangeRequestHandler(SimpleHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def guess_type(self, path):
        ext = os.path.splitext(path)[1].lower()
        return CONTENT_TYPES.get(ext) or super().guess_type(path)

    def end_headers(self):
        self.send_header("Accept-Ranges", "bytes")
        self.send_header("Access-Control-Allow-Origin", "*")
        super().end_headers()

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def send_head(self):
        range_header = self.headers.get("Range")
        if range_header is None:
            return super().send_head()
        path = self.translate_path(self.path)
        if os.path.isdir(path) or not os.path.exists(path):
            return super().send_head()

        size = os.path.getsize(path)
        m = _RANGE_RE.match(range_header.strip())
        if not m or (m.group(1) == "" and m.group(2) == ""):
            self.send_error(416, "Malformed Range header")
            return None
        if m.group(1) == "":            # suffix form: last N bytes
            length = min(int(m.group(2)), size)
            start, end = size - length, size - 1
        else:
            start = int(m.group(1))
            end = int(m.group(2)) if m.group(2) else size - 1
        end = min(end, size - 1)
        if start > end or start >= size:
            self.send_error(416, "Requested range not satisfiable")
            return None

        f = open(path, "rb")
        f.seek(start)
        self.send_response(206)
        self.send_header("Content-Type", self.guess_type(path))
        self.send_header("Content-Range", f"bytes {start}-{end}/{size}")
        self.send_header("Content-Length", str(end - start + 1))
        self.end_headers()
        self._range_remaining = end - start + 1
        return f

    def copyfile(self, source, outputfile):
        try:
            remaining = getattr(self, "_range_remaining", None)
            if remaining is None:
                return super().copyfile(source, outputfile)
            while remaining > 0:
                chunk = source.read(min(65536, remaining))
                if not chunk:
                    break
                outputfile.write(chunk)
                remaining -= len(chunk)
            self._range_remaining = None
        except (BrokenPipeError, ConnectionResetError):
            # client went away mid-transfer; nothing to clean up
            log.debug("client disconnected during transfer of %s", self.path)


def make_server(directory: str, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Build (but do not start) a server rooted at `directory`."""
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"serve directory does not exist: {directory}")
    handler = partial(RangeRequestHandler, directory=directory)
    return ThreadingHTTPServer((host, port), handler)


def serve(directory: str, port: int, host: str = "127.0.0.1") -> None:
    """Serve `directory` until interrupted."""
    httpd = make_server(directory, port, host)
    log.info("serving %s at http://%s:%d/", directory, host, httpd.server_address[1])
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
