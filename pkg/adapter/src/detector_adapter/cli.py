"""Command-line entry points: serve a fixture-backed provider, check a live one."""

from __future__ import annotations

import json
import sys

import click

from .conformance import replay_file
from .hooks import StaticHook
from .server import serve_adapter


@click.group()
@click.version_option(package_name="detector-adapter")
def main():
    """Detection wire-protocol adapter and conformance checker."""


@main.command(name="serve")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON file: {model_frame: [w, h], images: {image_id: [raw boxes]}}.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8001, show_default=True, type=int)
def serve_cmd(manifest_path, host, port):
    """Serve recorded model-space boxes through the wire protocol."""
    with open(manifest_path, encoding="utf-8") as fh:
        hook = StaticHook.from_manifest(json.load(fh))
    serve_adapter(hook, host=host, port=port)


@main.command(name="conformance")
@click.option("--requests", "requests_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON array of recorded wire requests to replay.")
@click.option("--endpoint", required=True, help="Detection endpoint URL to check.")
@click.option("--timeout", default=10.0, show_default=True, type=float)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Write the full JSON report here as well.")
def conformance_cmd(requests_path, endpoint, timeout, out_path):
    """Replay recorded requests against a provider and report violations."""
    report = replay_file(requests_path, endpoint, timeout)
    for result in report.results:
        status = "ok" if result.ok else "FAIL"
        click.echo(f"{status:4s} {result.image_id}")
        for violation in result.violations:
            click.echo(f"     - {violation}")
    click.echo(f"{len(report.results) - report.failure_count}/{len(report.results)} conformant")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.exit(0 if report.passed else 1)


if __name__ == "__main__":
    main()
