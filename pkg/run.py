#!/usr/bin/env python3
"""
Entry point do painel HTTP do NLS Harmônico (equivale a `python -m app serve`).
"""
import sys

from app.cli import run_cli


def main():
    """Inicia o servidor FastAPI com os argumentos extras de `serve` (--host, --port)."""
    sys.exit(run_cli(["serve", *sys.argv[1:]]))


if __name__ == "__main__":
    main()
