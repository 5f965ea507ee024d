"""Run the model server: text2seg-model-server [--addr HOST:PORT] [--config FILE]."""
import argparse
import json
from pathlib import Path

import uvicorn

from .adapters import load_adapter
from .app import create_app


def main(argv=None):
    parser = argparse.ArgumentParser(description="text2seg wire-protocol model server")
    parser.add_argument("--addr", default="127.0.0.1:8731", help="host:port to listen on")
    parser.add_argument("--config", help="adapter config JSON, e.g. {\"adapter\": \"color-region\"}")
    args = parser.parse_args(argv)

    config = json.loads(Path(args.config).read_text()) if args.config else None
    app = create_app(load_adapter(config))
    host, _, port = args.addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
