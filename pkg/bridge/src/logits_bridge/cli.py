"""logits-bridge command line: serve a provider, or export its manifest."""

from __future__ import annotations

import argparse
import logging
import sys

from .providers import EchoProvider, ModelProvider, write_manifest
from .server import BridgeServer

log = logging.getLogger("logits_bridge")

DEFAULT_LISTEN = "127.0.0.1:8787"


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise SystemExit(f"--listen must look like host:port, got {value!r}")
    return host, int(port)


def _build_provider(args):
    if bool(args.echo_fixture) == bool(args.model):
        raise SystemExit("pick exactly one of --echo-fixture and --model")
    if args.echo_fixture:
        return EchoProvider.from_file(args.echo_fixture)
    return ModelProvider(args.model)


def _cmd_serve(args) -> int:
    provider = _build_provider(args)
    host, port = _parse_listen(args.listen)
    server = BridgeServer(provider, host, port)
    bound_host, bound_port = server.address
    print(f"serving {provider.vocab_size} logits on {bound_host}:{bound_port}", flush=True)
    try:
        server.wait()
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        server.close()
    return 0


def _cmd_manifest(args) -> int:
    if not args.echo_fixture:
        raise SystemExit(
            "manifest export needs --echo-fixture; model vocabularies do not use "
            "the reserved-prefix id layout this manifest format pins"
        )
    provider = EchoProvider.from_file(args.echo_fixture)
    write_manifest(provider.manifest_tokens(), args.out)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logits-bridge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="answer logits requests over TCP")
    serve.add_argument("--echo-fixture", help="canned-logits JSON file")
    serve.add_argument("--model", help="seq2seq checkpoint name or path")
    serve.add_argument("--listen", default=DEFAULT_LISTEN, metavar="HOST:PORT")
    serve.set_defaults(func=_cmd_serve)

    manifest = sub.add_parser("manifest", help="write the vocabulary manifest")
    manifest.add_argument("--echo-fixture", help="canned-logits JSON file")
    manifest.add_argument("--out", default="vocab.json")
    manifest.set_defaults(func=_cmd_manifest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
