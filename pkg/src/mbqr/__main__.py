"""``python -m mbqr`` dispatches to the scenario runner."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
