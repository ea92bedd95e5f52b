"""Module entry point: ``python -m elastic_switch``."""
from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
