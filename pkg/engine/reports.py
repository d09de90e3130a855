"""Report writers. Every format goes through a row serializer first."""

import csv
import io
import logging
from pathlib import Path

from rest_framework.renderers import JSONRenderer

logger = logging.getLogger(__name__)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _csv(header, records):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for record in records:
        writer.writerow([_cell(value) for value in record])
    return buffer.getvalue()


def melt(data, key_fields):
    """Long format: one ``(keys..., quantity, value)`` record per non-key field."""
    for row in data:
        keys = [row[k] for k in key_fields]
        for name, value in row.items():
            if name not in key_fields:
                yield keys + [name, value]


def render_rows(serializer_class, rows, fmt="csv"):
    data = serializer_class(rows, many=True).data
    if fmt == "json":
        return JSONRenderer().render(data).decode("utf-8") + "\n"
    fields = list(serializer_class().fields)
    if fmt == "csv":
        return _csv(fields, ([row[name] for name in fields] for row in data))
    if fmt == "long":
        keys = list(serializer_class.key_fields)
        return _csv(keys + ["quantity", "value"], melt(data, keys))
    raise ValueError(f"Unknown report format {fmt!r}")


def write_report(text, out=None, stream=None):
    if out:
        path = Path(out)
        path.write_text(text)
        logger.info("Report written to %s", path)
    else:
        stream.write(text)
