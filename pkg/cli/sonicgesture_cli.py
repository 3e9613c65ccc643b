"""Entry point for the sonicgesture CLI."""

from sonicgesture.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
